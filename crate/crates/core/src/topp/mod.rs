//! Time-optimal retiming of a geometric path under polygonal constraints in
//! the `(s̈, ṡ²)` plane.
//!
//! Contact stability of a point-mass COM following `p(s)` reads
//! `A_O·[p̈ − g; p × (p̈ − g)] ≤ 0` with `p̈ = p_s s̈ + p_ss ṡ²`, i.e. one
//! halfplane per wrench-cone facet at every path index. Those halfplanes are
//! reduced to a small polygon per grid point and the profile is found by a
//! backward controllable-set pass followed by a greedy forward pass.

mod retime;
mod switch;

pub use retime::{retime, VelocityProfile};
pub use switch::{
    apply_sdd_upper_bound, apply_sddmax, min_feasible_switch, prop1_sdd_max, sep_crossings,
    switch_feasible, SEP_CROSSING_RESOLUTION, SWITCH_RESOLUTION,
};

use crate::geom::{
    bretl_lall_projection, halfplane_support_oracle, polygon_from_dual_hull, GeomError,
    HalfplaneSet, Polygon2, Vec2, Vec3, WrenchConeMatrix,
};
use crate::interp::PathSpline;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Artificial bound on `|s̈|` keeping every polygon bounded.
pub const SDD_CAP: f64 = 1e3;
/// Artificial upper bound on `ṡ²`.
pub const SDOT2_CAP: f64 = 1e3;
/// Area tolerance of the recursive projection when used as a reducer.
pub const BRETL_LALL_POLYGON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ToppError {
    #[error("empty constraint polygon at s = {s:.4}")]
    EmptyPolygon { s: f64 },
    #[error("polygon reduction failed at s = {s:.4}: {source}")]
    Geometry { s: f64, source: GeomError },
    #[error("path is not time-parameterizable at s = {s:.4}")]
    NonParameterizable { s: f64 },
    #[error("profile stalls (zero velocity) at s = {s:.4}")]
    Stalled { s: f64 },
    #[error("path does not cross the static-equilibrium polygon")]
    NoCrossing,
    #[error("invalid retiming problem: {0}")]
    InvalidProblem(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ReductionMethod {
    #[default]
    DualHull,
    BretlLall,
}

/// Contact stance used over `[s_start, s_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceInterval {
    pub s_start: f64,
    pub s_end: f64,
    pub cone: WrenchConeMatrix,
}

/// Contiguous stance intervals covering the whole path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceSchedule {
    pub intervals: Vec<StanceInterval>,
}

impl StanceSchedule {
    pub fn single(cone: WrenchConeMatrix, s_max: f64) -> Self {
        Self {
            intervals: vec![StanceInterval {
                s_start: 0.0,
                s_end: s_max,
                cone,
            }],
        }
    }

    /// Stances switching at the given path indices: `cones.len()` must be
    /// `switches.len() + 1` and switches non-decreasing within `[0, s_max]`.
    pub fn with_switches(
        cones: Vec<WrenchConeMatrix>,
        switches: &[f64],
        s_max: f64,
    ) -> Result<Self, ToppError> {
        if cones.len() != switches.len() + 1 {
            return Err(ToppError::InvalidProblem(
                "one more stance than switches expected",
            ));
        }
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(switches);
        bounds.push(s_max);
        if bounds.windows(2).any(|w| w[1] < w[0]) {
            return Err(ToppError::InvalidProblem("switch indices must be ordered"));
        }
        let intervals = cones
            .into_iter()
            .enumerate()
            .map(|(i, cone)| StanceInterval {
                s_start: bounds[i],
                s_end: bounds[i + 1],
                cone,
            })
            .collect();
        let schedule = Self { intervals };
        schedule.validate(s_max)?;
        Ok(schedule)
    }

    pub fn validate(&self, s_max: f64) -> Result<(), ToppError> {
        let first = self
            .intervals
            .first()
            .ok_or(ToppError::InvalidProblem("empty schedule"))?;
        let last = self.intervals.last().unwrap();
        let tol = 1e-9 * (1.0 + s_max.abs());
        if first.s_start.abs() > tol || (last.s_end - s_max).abs() > tol {
            return Err(ToppError::InvalidProblem("schedule must cover [0, s_max]"));
        }
        for w in self.intervals.windows(2) {
            if (w[0].s_end - w[1].s_start).abs() > tol || w[0].s_end < w[0].s_start {
                return Err(ToppError::InvalidProblem(
                    "schedule intervals must be contiguous",
                ));
            }
        }
        Ok(())
    }

    /// Stance active at `s`; intervals are half-open on the right except the
    /// last one. Empty intervals are skipped.
    pub fn cone_at(&self, s: f64) -> &WrenchConeMatrix {
        let iv = self
            .intervals
            .iter()
            .find(|iv| s >= iv.s_start && s < iv.s_end)
            .unwrap_or_else(|| self.intervals.last().unwrap());
        &iv.cone
    }
}

/// Additional path constraints besides contact stability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathConstraint {
    /// Fixed halfplanes `n·(s̈, ṡ²) ≤ c` over `[s_from, s_to]`.
    Halfplanes {
        s_from: f64,
        s_to: f64,
        set: HalfplaneSet,
    },
    /// Conservative workspace limits of a point following the path:
    /// per-axis acceleration `|p̈_k| ≤ a_max/√3` and speed `‖ṗ‖ ≤ v_max`.
    Workspace { a_max: f64, v_max: f64 },
}

/// Path-acceleration bound applied on `[0, s_until)`. With `symmetric` and a
/// positive `value` it bounds `|s̈|`; otherwise it bounds `s̈` from above only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SddBound {
    pub value: f64,
    pub s_until: f64,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetimeProblem {
    pub path: PathSpline,
    pub schedule: Option<StanceSchedule>,
    pub constraints: Vec<PathConstraint>,
    pub sdot_start: f64,
    /// Upper bound on the terminal `ṡ`; `None` leaves it free.
    pub sdot_end_max: Option<f64>,
    pub sdd_max: Option<SddBound>,
    pub ds: f64,
    pub gravity: Vec3,
    pub method: ReductionMethod,
}

impl RetimeProblem {
    pub fn new(path: PathSpline, ds: f64) -> Self {
        Self {
            path,
            schedule: None,
            constraints: Vec::new(),
            sdot_start: 0.0,
            sdot_end_max: None,
            sdd_max: None,
            ds,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            method: ReductionMethod::DualHull,
        }
    }

    pub fn validate(&self) -> Result<(), ToppError> {
        if !(self.ds > 0.0) {
            return Err(ToppError::InvalidProblem("grid step must be positive"));
        }
        if !(self.sdot_start >= 0.0) {
            return Err(ToppError::InvalidProblem(
                "start velocity must be non-negative",
            ));
        }
        if !(self.path.s_max() > 0.0) {
            return Err(ToppError::InvalidProblem("path must have positive length"));
        }
        if let Some(schedule) = &self.schedule {
            schedule.validate(self.path.s_max())?;
        }
        Ok(())
    }

    /// All halfplanes at `s` (stance, extra constraints and the `s̈` bound),
    /// without the artificial caps.
    pub fn halfplanes_at(&self, s: f64) -> HalfplaneSet {
        let mut h = HalfplaneSet::new();
        if let Some(schedule) = &self.schedule {
            h.extend(&topp_halfplanes_at(
                &self.path,
                s,
                schedule.cone_at(s),
                &self.gravity,
            ));
        }
        for c in &self.constraints {
            match c {
                PathConstraint::Halfplanes { s_from, s_to, set } => {
                    if s >= *s_from && s <= *s_to {
                        h.extend(set);
                    }
                }
                PathConstraint::Workspace { a_max, v_max } => {
                    h.extend(&workspace_halfplanes(&self.path, s, *a_max, *v_max));
                }
            }
        }
        if let Some((lo, hi)) = self.sdd_bounds_at(s) {
            h.push(Vec2::x(), hi);
            if let Some(lo) = lo {
                h.push(-Vec2::x(), -lo);
            }
        }
        h
    }

    fn sdd_bounds_at(&self, s: f64) -> Option<(Option<f64>, f64)> {
        let b = self.sdd_max?;
        if s >= b.s_until || !b.value.is_finite() {
            return None;
        }
        Some(if b.symmetric && b.value > 0.0 {
            (Some(-b.value), b.value)
        } else {
            (None, b.value)
        })
    }
}

/// Halfplanes `B·(s̈, ṡ²) ≤ c` of the contact-stability condition at `s`:
/// `B = A_O·[[p_s, p_ss], [p×p_s, p×p_ss]]`, `c = A_O·[g; p×g]`, with `p`
/// taken relative to the cone origin. Mass cancels out. Rows are scaled by
/// the inverse norm of the cone row.
pub fn topp_halfplanes_at(
    path: &PathSpline,
    s: f64,
    cone: &WrenchConeMatrix,
    gravity: &Vec3,
) -> HalfplaneSet {
    let p = path.p(s) - cone.origin;
    let (ps, pss) = (path.p_s(s), path.p_ss(s));
    let (tps, tpss, tg) = (p.cross(&ps), p.cross(&pss), p.cross(gravity));
    let mut h = HalfplaneSet::new();
    for r in &cone.rows {
        let rf = Vec3::new(r[0], r[1], r[2]);
        let rt = Vec3::new(r[3], r[4], r[5]);
        let scale = r.norm();
        if scale <= 0.0 {
            continue;
        }
        let n = Vec2::new(rf.dot(&ps) + rt.dot(&tps), rf.dot(&pss) + rt.dot(&tpss));
        h.push(n / scale, (rf.dot(gravity) + rt.dot(&tg)) / scale);
    }
    h
}

/// Linearized workspace bounds of a point following the path at `s`.
pub fn workspace_halfplanes(path: &PathSpline, s: f64, a_max: f64, v_max: f64) -> HalfplaneSet {
    let (ps, pss) = (path.p_s(s), path.p_ss(s));
    let axis = a_max / 3f64.sqrt();
    let mut h = HalfplaneSet::new();
    for k in 0..3 {
        let n = Vec2::new(ps[k], pss[k]);
        h.push(n, axis);
        h.push(-n, axis);
    }
    h.push(Vec2::new(0.0, ps.norm_squared()), v_max * v_max);
    h
}

fn caps() -> HalfplaneSet {
    HalfplaneSet::from_box(
        Vec2::new(-SDD_CAP, -SDOT2_CAP),
        Vec2::new(SDD_CAP, SDOT2_CAP),
    )
}

/// Reduced constraint polygon at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPolygon {
    pub s: f64,
    /// Polygon in `(s̈, ṡ²)` coordinates, clipped to `ṡ² ≥ 0`.
    pub polygon: Polygon2,
    pub sdd_bounds: Option<(f64, f64)>,
    /// Inequalities before reduction (artificial caps excluded).
    pub row_count: usize,
    /// Polygon edges supported by problem constraints, the `ṡ² ≥ 0` row
    /// included and the artificial caps excluded.
    pub edge_count: usize,
}

impl ConstraintPolygon {
    /// Largest feasible `ṡ²` (maximum velocity curve value).
    pub fn max_sdot2(&self) -> f64 {
        self.polygon.y_range().1
    }

    /// Whether `(s̈, ṡ²) = (0, 0)` is feasible, i.e. the COM is in static
    /// equilibrium at this index.
    pub fn contains_origin(&self, tol: f64) -> bool {
        slice_at(&self.polygon, 0.0, tol).is_some_and(|(lo, hi)| lo <= tol && hi >= -tol)
    }
}

fn on_artificial_line(a: &Vec2, b: &Vec2) -> bool {
    let tol = 1e-9 * SDD_CAP.max(SDOT2_CAP);
    let both =
        |f: &dyn Fn(&Vec2) -> f64, v: f64| (f(a) - v).abs() <= tol && (f(b) - v).abs() <= tol;
    both(&|p| p.x, SDD_CAP) || both(&|p| p.x, -SDD_CAP) || both(&|p| p.y, SDOT2_CAP)
}

fn constraint_edges(poly: &Polygon2) -> usize {
    let n = poly.vertices.len();
    if n < 3 {
        return 0;
    }
    (0..n)
        .filter(|&i| !on_artificial_line(&poly.vertices[i], &poly.vertices[(i + 1) % n]))
        .count()
}

/// Reduce an arbitrary halfplane set (caps added) with the chosen method and
/// clip it to `ṡ² ≥ 0`.
pub fn reduce_halfplanes(h: &HalfplaneSet, method: ReductionMethod) -> Result<Polygon2, GeomError> {
    let mut full = h.clone();
    full.extend(&caps());
    let poly = match method {
        ReductionMethod::DualHull => polygon_from_dual_hull(&full)?.polygon,
        ReductionMethod::BretlLall => {
            bretl_lall_projection(halfplane_support_oracle(&full), BRETL_LALL_POLYGON_TOL)?
        }
    };
    let clipped = poly.clip(&Vec2::new(0.0, -1.0), 0.0);
    if clipped.vertices.is_empty() {
        return Err(GeomError::EmptyPolygon);
    }
    Ok(clipped)
}

/// Constraint polygon of `problem` at path index `s`.
pub fn constraint_polygon_at(
    problem: &RetimeProblem,
    s: f64,
) -> Result<ConstraintPolygon, ToppError> {
    let h = problem.halfplanes_at(s);
    let polygon = reduce_halfplanes(&h, problem.method).map_err(|e| match e {
        GeomError::EmptyPolygon | GeomError::InfeasibleSet => ToppError::EmptyPolygon { s },
        other => ToppError::Geometry { s, source: other },
    })?;
    let sdd_bounds = problem
        .sdd_bounds_at(s)
        .map(|(lo, hi)| (lo.unwrap_or(f64::NEG_INFINITY), hi));
    Ok(ConstraintPolygon {
        s,
        edge_count: constraint_edges(&polygon),
        row_count: h.len(),
        polygon,
        sdd_bounds,
    })
}

/// Range of the first coordinate where the horizontal line at height `y`
/// meets a convex polygon, degenerate ones (segments, points) included.
pub(crate) fn slice_at(poly: &Polygon2, y: f64, tol: f64) -> Option<(f64, f64)> {
    let v = &poly.vertices;
    let n = v.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (ylo, yhi) = (a.y.min(b.y), a.y.max(b.y));
        if y < ylo - tol || y > yhi + tol {
            continue;
        }
        if yhi - ylo <= tol {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let t = ((y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
            let x = a.x + (b.x - a.x) * t;
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rect_contact_wrench_cone, ContactPatch};

    fn flat_cone() -> WrenchConeMatrix {
        let p = ContactPatch::flat(Vec3::zeros(), 0.112, 0.065, 0.7);
        rect_contact_wrench_cone(&p, &Vec3::zeros())
    }

    #[test]
    fn static_com_above_foot_contains_origin() {
        let path = PathSpline::straight(Vec3::new(0.0, 0.0, 0.7), Vec3::new(0.0, 0.0, 0.9));
        let h = topp_halfplanes_at(&path, 0.5, &flat_cone(), &Vec3::new(0.0, 0.0, -9.81));
        assert!(h.offsets.iter().all(|&c| c >= 0.0));
        assert!(h.contains(&Vec2::zeros(), 0.0));
    }

    #[test]
    fn com_outside_sep_excludes_origin() {
        let path = PathSpline::straight(Vec3::new(0.3, 0.0, 0.8), Vec3::new(0.5, 0.0, 0.8));
        let h = topp_halfplanes_at(&path, 0.0, &flat_cone(), &Vec3::new(0.0, 0.0, -9.81));
        assert!(!h.contains(&Vec2::zeros(), 0.0));
    }

    #[test]
    fn schedule_validation() {
        let c = flat_cone();
        let s = StanceSchedule::with_switches(vec![c.clone(), c.clone()], &[0.4], 1.0).unwrap();
        assert!(s.validate(1.0).is_ok());
        assert!(s.validate(2.0).is_err());
        assert!(StanceSchedule::with_switches(vec![c.clone()], &[0.4], 1.0).is_err());
        assert!(
            StanceSchedule::with_switches(vec![c.clone(), c.clone(), c], &[0.6, 0.4], 1.0).is_err()
        );
    }

    #[test]
    fn slice_of_segment_and_square() {
        let seg = Polygon2 {
            vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(-1.0, 2.0)],
            degenerate: true,
        };
        let (lo, hi) = slice_at(&seg, 1.0, 1e-12).unwrap();
        assert!((lo + 0.5).abs() < 1e-12 && (hi + 0.5).abs() < 1e-12);
        let sq = HalfplaneSet::from_box(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 1.0));
        let p = polygon_from_dual_hull(&sq).unwrap().polygon;
        assert_eq!(slice_at(&p, 0.5, 1e-12), Some((-1.0, 1.0)));
        assert_eq!(slice_at(&p, 1.5, 1e-12), None);
    }

    #[test]
    fn caps_do_not_count_as_edges_but_the_speed_floor_does() {
        let mut problem = RetimeProblem::new(PathSpline::straight(Vec3::zeros(), Vec3::x()), 0.1);
        problem.constraints.push(PathConstraint::Halfplanes {
            s_from: 0.0,
            s_to: 1.0,
            set: HalfplaneSet::new()
                .with(Vec2::x(), 1.0)
                .with(-Vec2::x(), 1.0),
        });
        let cp = constraint_polygon_at(&problem, 0.0).unwrap();
        assert_eq!(cp.edge_count, 3);
        assert_eq!(cp.row_count, 2);
        assert!(cp.contains_origin(1e-12));
    }
}
