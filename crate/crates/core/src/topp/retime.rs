use super::{constraint_polygon_at, slice_at, ConstraintPolygon, RetimeProblem, ToppError};
use crate::geom::{Polygon2, Vec2};
use serde::{Deserialize, Serialize};

/// Relative excess of the start velocity over the controllable maximum that
/// is clamped instead of rejected.
pub const START_CLAMP_TOLERANCE: f64 = 0.05;

const STALL_B: f64 = 1e-12;

/// Discrete time law along the grid: `b_i = ṡ²(s_i)`, constant path
/// acceleration `a_i` on `[s_i, s_{i+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub s: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub t: Vec<f64>,
    pub duration: f64,
    /// The start velocity was lowered into the controllable interval.
    pub start_clamped: bool,
    /// Genuine edge count of the reduced polygon at each grid point.
    pub polygon_edges: Vec<usize>,
}

impl VelocityProfile {
    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Path acceleration used at the start, `(b_1 − b_0) / (2Δs)`.
    pub fn sdd_start(&self) -> f64 {
        self.a.first().copied().unwrap_or(0.0)
    }

    pub fn sdot_start(&self) -> f64 {
        self.b[0].sqrt()
    }

    fn segment(&self, s: f64) -> usize {
        match self.s.partition_point(|&x| x <= s) {
            0 => 0,
            k => (k - 1).min(self.a.len().saturating_sub(1)),
        }
    }

    /// Time at which path index `s` is reached (exact under constant
    /// acceleration per segment).
    pub fn time_at(&self, s: f64) -> f64 {
        if self.a.is_empty() {
            return 0.0;
        }
        let s = s.clamp(self.s[0], self.s_max());
        let i = self.segment(s);
        let h = s - self.s[i];
        let bs = (self.b[i] + 2.0 * self.a[i] * h).max(0.0);
        let den = self.b[i].sqrt() + bs.sqrt();
        if h <= 0.0 {
            self.t[i]
        } else if den <= 0.0 {
            f64::INFINITY
        } else {
            self.t[i] + 2.0 * h / den
        }
    }

    /// `(s, ṡ, s̈)` at time `t`; the state is held at the end after the
    /// duration.
    pub fn sample(&self, t: f64) -> (f64, f64, f64) {
        if self.a.is_empty() || t >= self.duration {
            return (self.s_max(), self.b.last().unwrap().sqrt(), 0.0);
        }
        let t = t.max(0.0);
        let i = match self.t.partition_point(|&x| x <= t) {
            0 => 0,
            k => (k - 1).min(self.a.len() - 1),
        };
        let tau = t - self.t[i];
        let (v0, a) = (self.b[i].sqrt(), self.a[i]);
        let s = (self.s[i] + v0 * tau + 0.5 * a * tau * tau).min(self.s[i + 1]);
        ((s), (v0 + a * tau).max(0.0), a)
    }
}

/// Time-optimal profile of `problem`.
///
/// Backward pass: controllable intervals `K_i`, the `ṡ²`-projection of
/// `P_i ∩ {b + 2Δs·a ∈ K_{i+1}}`. Forward pass: from `b_0 = ṡ_start²`, take the
/// largest admissible `a_i` at every step.
pub fn retime(problem: &RetimeProblem) -> Result<VelocityProfile, ToppError> {
    problem.validate()?;
    let grid = problem.path.grid(problem.ds);
    let polys: Vec<ConstraintPolygon> = grid
        .iter()
        .map(|&s| constraint_polygon_at(problem, s))
        .collect::<Result<_, _>>()
        .map_err(|e| match e {
            ToppError::EmptyPolygon { s } => ToppError::NonParameterizable { s },
            other => other,
        })?;
    retime_on_polygons(problem, &grid, &polys)
}

pub(crate) fn retime_on_polygons(
    problem: &RetimeProblem,
    grid: &[f64],
    polys: &[ConstraintPolygon],
) -> Result<VelocityProfile, ToppError> {
    let n = grid.len() - 1;
    let slack = |x: f64| 1e-10 * (1.0 + x.abs());

    // backward pass
    let mut k = vec![(0.0, 0.0); n + 1];
    let (ylo, yhi) = polys[n].polygon.y_range();
    let hi = problem.sdot_end_max.map_or(yhi, |v| yhi.min(v * v));
    let lo = if ylo <= slack(yhi) { 0.0 } else { ylo };
    if lo > hi + slack(hi) {
        return Err(ToppError::NonParameterizable { s: grid[n] });
    }
    k[n] = (lo, hi.max(lo));
    let mut reach: Vec<Polygon2> = vec![Polygon2::empty(); n];
    for i in (0..n).rev() {
        let d2 = 2.0 * (grid[i + 1] - grid[i]);
        let (lo, hi) = k[i + 1];
        let q = polys[i]
            .polygon
            .clip(&Vec2::new(d2, 1.0), hi + slack(hi))
            .clip(&Vec2::new(-d2, -1.0), -lo + slack(lo));
        if q.vertices.is_empty() {
            return Err(ToppError::NonParameterizable { s: grid[i] });
        }
        let (qlo, qhi) = q.y_range();
        let qlo = if qlo <= slack(qhi) { 0.0 } else { qlo };
        k[i] = (qlo, qhi.max(0.0));
        reach[i] = q;
    }

    // start velocity
    let mut b0 = problem.sdot_start * problem.sdot_start;
    let mut start_clamped = false;
    let (klo, khi) = k[0];
    if b0 > khi {
        if problem.sdot_start <= (1.0 + START_CLAMP_TOLERANCE) * khi.sqrt() {
            log::warn!(
                "start velocity {:.4} clamped to {:.4}",
                problem.sdot_start,
                khi.sqrt()
            );
            b0 = khi;
            start_clamped = true;
        } else {
            return Err(ToppError::NonParameterizable { s: grid[0] });
        }
    } else if b0 < klo {
        if klo <= slack(khi) {
            b0 = klo;
        } else if klo.sqrt() <= (1.0 + START_CLAMP_TOLERANCE) * problem.sdot_start {
            b0 = klo;
            start_clamped = true;
        } else {
            return Err(ToppError::NonParameterizable { s: grid[0] });
        }
    }

    // forward pass
    let mut b = Vec::with_capacity(n + 1);
    let mut a = Vec::with_capacity(n);
    b.push(b0);
    for i in 0..n {
        let d2 = 2.0 * (grid[i + 1] - grid[i]);
        let bi = b[i];
        let (lo, hi) = k[i + 1];
        let q = &reach[i];
        let (qlo, qhi) = q.y_range();
        let at = bi.clamp(qlo, qhi);
        let (_, amax) =
            slice_at(q, at, slack(at)).ok_or(ToppError::NonParameterizable { s: grid[i] })?;
        let next = (bi + d2 * amax).clamp(lo, hi).max(0.0);
        a.push((next - bi) / d2);
        b.push(next);
    }

    // a momentary stop costs finite time; two consecutive stops never end
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    for i in 0..n {
        if b[i] <= STALL_B && b[i + 1] <= STALL_B {
            return Err(ToppError::Stalled { s: grid[i] });
        }
        let den = b[i].sqrt() + b[i + 1].sqrt();
        t.push(t[i] + 2.0 * (grid[i + 1] - grid[i]) / den);
    }
    Ok(VelocityProfile {
        s: grid.to_vec(),
        duration: t[n],
        b,
        a,
        t,
        start_clamped,
        polygon_edges: polys.iter().map(|p| p.edge_count).collect(),
    })
}
