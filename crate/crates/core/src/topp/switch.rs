use super::{retime, RetimeProblem, SddBound, StanceSchedule, ToppError};
use crate::geom::{Polygon2, Vec2, WrenchConeMatrix};
use crate::interp::PathSpline;

/// Resolution in `s` of [`sep_crossings`].
pub const SEP_CROSSING_RESOLUTION: f64 = 1e-4;
/// Resolution in `s` of [`min_feasible_switch`].
pub const SWITCH_RESOLUTION: f64 = 1e-3;

/// Path-acceleration bound under which the time to reach `s_trans` from
/// `ṡ_0` is at least `t_swing`.
///
/// For `ṡ_0 ≤ s_trans/t_swing` this is `(s_trans²/t_swing² − ṡ_0²)/(2 s_trans)`.
/// For faster starts that value is negative and no longer sufficient; the
/// exact bound of a uniformly decelerated motion,
/// `((2 s_trans/t_swing − ṡ_0)² − ṡ_0²)/(2 s_trans)`, is returned instead
/// (it requires `ṡ_0 < 2 s_trans/t_swing`; otherwise the bound that stops at
/// `s_trans` is returned and the swing cannot be waited for).
pub fn prop1_sdd_max(s_trans: f64, t_swing: f64, sdot0: f64) -> f64 {
    if !(t_swing > 0.0) {
        return f64::INFINITY;
    }
    if !(s_trans > 0.0) {
        return f64::NEG_INFINITY;
    }
    let rate = s_trans / t_swing;
    if sdot0 <= rate {
        (rate * rate - sdot0 * sdot0) / (2.0 * s_trans)
    } else if sdot0 < 2.0 * rate {
        let end = 2.0 * rate - sdot0;
        (end * end - sdot0 * sdot0) / (2.0 * s_trans)
    } else {
        log::warn!(
            "start speed {sdot0:.3} too high to wait {t_swing:.3} s before s = {s_trans:.3}"
        );
        -sdot0 * sdot0 / (2.0 * s_trans)
    }
}

/// Intersect every polygon on `[0, s_trans)` with the path-acceleration
/// bound `|s̈| ≤ sdd_max` (upper bound only when `sdd_max ≤ 0`). An infinite
/// bound leaves the problem unchanged.
pub fn apply_sddmax(problem: &RetimeProblem, sdd_max: f64, s_trans: f64) -> RetimeProblem {
    with_sdd_bound(problem, sdd_max, s_trans, true)
}

/// [`apply_sddmax`] with the upper bound `s̈ ≤ sdd_max` alone, which is all
/// the switch-time guarantee needs.
pub fn apply_sdd_upper_bound(problem: &RetimeProblem, sdd_max: f64, s_trans: f64) -> RetimeProblem {
    with_sdd_bound(problem, sdd_max, s_trans, false)
}

fn with_sdd_bound(
    problem: &RetimeProblem,
    value: f64,
    s_until: f64,
    symmetric: bool,
) -> RetimeProblem {
    let mut p = problem.clone();
    p.sdd_max = value.is_finite().then_some(SddBound {
        value,
        s_until,
        symmetric,
    });
    p
}

/// First and last path indices where the horizontal projection of the path
/// is inside `sep`: the entry and exit of the static-equilibrium prism.
pub fn sep_crossings(path: &PathSpline, sep: &Polygon2) -> Result<(f64, f64), ToppError> {
    let s_max = path.s_max();
    let inside = |s: f64| {
        let p = path.p(s);
        sep.contains(&Vec2::new(p.x, p.y), 0.0)
    };
    let n = ((s_max / 0.01).ceil() as usize).max(2);
    let at = |i: usize| s_max * i as f64 / n as f64;
    let flags: Vec<bool> = (0..=n).map(|i| inside(at(i))).collect();
    let first = flags.iter().position(|&f| f).ok_or(ToppError::NoCrossing)?;
    let last = flags.iter().rposition(|&f| f).unwrap();
    let bisect = |mut out: f64, mut inn: f64| {
        while (inn - out).abs() > SEP_CROSSING_RESOLUTION {
            let mid = 0.5 * (out + inn);
            if inside(mid) {
                inn = mid;
            } else {
                out = mid;
            }
        }
        inn
    };
    let s1 = if first == 0 {
        0.0
    } else {
        bisect(at(first - 1), at(first))
    };
    let s2 = if last == n {
        s_max
    } else {
        bisect(at(last + 1), at(last))
    };
    Ok((s1, s2))
}

/// Whether `base` retimes with the stance sequence `cones` switched at
/// `s1` and then at each of `later`.
pub fn switch_feasible(
    base: &RetimeProblem,
    cones: &[WrenchConeMatrix],
    s1: f64,
    later: &[f64],
) -> Result<bool, ToppError> {
    let mut switches = vec![s1];
    switches.extend_from_slice(later);
    let schedule = StanceSchedule::with_switches(cones.to_vec(), &switches, base.path.s_max())?;
    let problem = RetimeProblem {
        schedule: Some(schedule),
        ..base.clone()
    };
    match retime(&problem) {
        Ok(_) => Ok(true),
        Err(ToppError::NonParameterizable { .. } | ToppError::Stalled { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Smallest first switch index in `[0, s1_quasi]` for which the path stays
/// time-parameterizable, by bisection. `s1_quasi` (typically the SEP entry)
/// must itself be feasible.
pub fn min_feasible_switch(
    base: &RetimeProblem,
    cones: &[WrenchConeMatrix],
    s1_quasi: f64,
    later: &[f64],
) -> Result<f64, ToppError> {
    if !switch_feasible(base, cones, s1_quasi, later)? {
        return Err(ToppError::NonParameterizable { s: s1_quasi });
    }
    if switch_feasible(base, cones, 0.0, later)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, s1_quasi);
    while hi - lo > SWITCH_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if switch_feasible(base, cones, mid, later)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
