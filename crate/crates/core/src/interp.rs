//! Cubic Hermite interpolation of preview paths.
//!
//! A preview path joins the current state `(p_cur, v_cur)` to a goal state
//! `(p_goal, v_goal)` by `H(p_cur, λ v̂_cur, p_goal, μ v̂_goal)`. Boundary
//! velocities only carry directions; the tangent magnitudes `λ, μ` come either
//! from strain-energy minimization (OGH) or from the uniform acceleration
//! relaxation (HOUBA).

use crate::geom::Vec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Admissible range of tangent magnitudes after closed-form evaluation.
pub const TANGENT_SCALE_RANGE: (f64, f64) = (0.05, 10.0);

const ZERO_VELOCITY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("boundary velocity is zero")]
    ZeroVelocity,
    #[error("start and goal positions coincide")]
    DegenerateBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub p_cur: Vec3,
    pub v_cur: Vec3,
    pub p_goal: Vec3,
    pub v_goal: Vec3,
}

impl BoundaryState {
    pub fn delta(&self) -> Vec3 {
        self.p_goal - self.p_cur
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpMode {
    Houba,
    Ogh,
}

/// Cubic with `H(0)=p0, H'(0)=v0, H(1)=p1, H'(1)=v1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteCurve {
    pub p0: Vec3,
    pub v0: Vec3,
    pub p1: Vec3,
    pub v1: Vec3,
}

impl HermiteCurve {
    pub fn new(p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3) -> Self {
        Self { p0, v0, p1, v1 }
    }

    pub fn eval(&self, s: f64, order: u8) -> Vec3 {
        hermite_eval(self, s, order)
    }

    /// `H''(0)` and `H''(1)`; the second derivative is affine in between.
    pub fn end_accelerations(&self) -> (Vec3, Vec3) {
        let d = self.p1 - self.p0;
        (
            (d * 3.0 - self.v0 * 2.0 - self.v1) * 2.0,
            (-d * 3.0 + self.v0 + self.v1 * 2.0) * 2.0,
        )
    }

    /// Exact `∫₀¹ ‖H''‖² ds`.
    pub fn strain_energy(&self) -> f64 {
        let (h0, h1) = self.end_accelerations();
        (h0.norm_squared() + h0.dot(&h1) + h1.norm_squared()) / 3.0
    }

    /// `max_s ‖H''(s)‖²`, reached at an endpoint since `H''` is affine.
    pub fn peak_acceleration_sq(&self) -> f64 {
        let (h0, h1) = self.end_accelerations();
        h0.norm_squared().max(h1.norm_squared())
    }
}

/// Value (`order` 0), first or second derivative of a Hermite cubic at
/// `s ∈ [0, 1]`. Orders above 2 return the (constant) third derivative.
pub fn hermite_eval(c: &HermiteCurve, s: f64, order: u8) -> Vec3 {
    let (p0, v0, p1, v1) = (c.p0, c.v0, c.p1, c.v1);
    let s2 = s * s;
    let s3 = s2 * s;
    match order {
        0 => {
            p0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + v0 * (s3 - 2.0 * s2 + s)
                + p1 * (-2.0 * s3 + 3.0 * s2)
                + v1 * (s3 - s2)
        }
        1 => {
            p0 * (6.0 * s2 - 6.0 * s)
                + v0 * (3.0 * s2 - 4.0 * s + 1.0)
                + p1 * (-6.0 * s2 + 6.0 * s)
                + v1 * (3.0 * s2 - 2.0 * s)
        }
        2 => {
            p0 * (12.0 * s - 6.0)
                + v0 * (6.0 * s - 4.0)
                + p1 * (6.0 - 12.0 * s)
                + v1 * (6.0 * s - 2.0)
        }
        _ => p0 * 12.0 + v0 * 6.0 - p1 * 12.0 + v1 * 6.0,
    }
}

/// Piecewise Hermite path over `[0, s_max]`; each segment is reparameterized
/// from its own span to the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpline {
    segments: Vec<(HermiteCurve, f64, f64)>,
}

impl PathSpline {
    pub fn single(curve: HermiteCurve) -> Self {
        Self {
            segments: vec![(curve, 0.0, 1.0)],
        }
    }

    /// Straight segment at uniform speed.
    pub fn straight(p0: Vec3, p1: Vec3) -> Self {
        let d = p1 - p0;
        Self::single(HermiteCurve::new(p0, d, p1, d))
    }

    /// Consecutive segments, each spanning the given path length. Joints are
    /// expected to match; tangents are taken per unit of `s`.
    pub fn from_segments(curves: &[(HermiteCurve, f64)]) -> Option<Self> {
        if curves.is_empty() || curves.iter().any(|(_, len)| !(*len > 0.0)) {
            return None;
        }
        let mut s = 0.0;
        let segments = curves
            .iter()
            .map(|(c, len)| {
                let seg = (*c, s, s + len);
                s += len;
                seg
            })
            .collect();
        Some(Self { segments })
    }

    pub fn segments(&self) -> impl Iterator<Item = (&HermiteCurve, f64, f64)> {
        self.segments.iter().map(|(c, a, b)| (c, *a, *b))
    }

    pub fn s_max(&self) -> f64 {
        self.segments.last().map_or(0.0, |seg| seg.2)
    }

    fn locate(&self, s: f64) -> (&HermiteCurve, f64, f64) {
        let s = s.clamp(0.0, self.s_max());
        let (c, a, b) = self
            .segments
            .iter()
            .find(|seg| s <= seg.2)
            .unwrap_or_else(|| self.segments.last().unwrap());
        let len = b - a;
        (c, (s - a) / len, len)
    }

    pub fn p(&self, s: f64) -> Vec3 {
        let (c, u, _) = self.locate(s);
        hermite_eval(c, u, 0)
    }

    pub fn p_s(&self, s: f64) -> Vec3 {
        let (c, u, len) = self.locate(s);
        hermite_eval(c, u, 1) / len
    }

    pub fn p_ss(&self, s: f64) -> Vec3 {
        let (c, u, len) = self.locate(s);
        hermite_eval(c, u, 2) / (len * len)
    }

    /// Uniform grid `0, Δs, …, s_max`; the last step is shortened when `Δs`
    /// does not divide `s_max`.
    pub fn grid(&self, ds: f64) -> Vec<f64> {
        let s_max = self.s_max();
        let n = (s_max / ds - 1e-9).ceil().max(1.0) as usize;
        let mut g: Vec<f64> = (0..n).map(|i| i as f64 * ds).collect();
        g.push(s_max);
        g
    }
}

fn unit_or_none(v: &Vec3) -> Option<Vec3> {
    let n = v.norm();
    (n > ZERO_VELOCITY && n.is_finite()).then(|| v / n)
}

/// Strain-energy-optimal tangent magnitudes: the minimizer of
/// `∫₀¹ ‖H''(p0, λv0, p1, μv1)‖² ds`, from the normal equations
/// `2aλ + cμ = 3Δ·v0`, `cλ + 2bμ = 3Δ·v1`.
pub fn ogh_params(b: &BoundaryState) -> Result<(f64, f64), InterpError> {
    let (v0, v1, d) = (b.v_cur, b.v_goal, b.delta());
    if v0.norm() <= ZERO_VELOCITY || v1.norm() <= ZERO_VELOCITY {
        return Err(InterpError::ZeroVelocity);
    }
    let (a, bb, c) = (v0.norm_squared(), v1.norm_squared(), v0.dot(&v1));
    let det = 4.0 * a * bb - c * c;
    if !(det > 1e-12 * a * bb) || !det.is_finite() {
        return Err(InterpError::SingularSystem);
    }
    let (r0, r1) = (3.0 * d.dot(&v0), 3.0 * d.dot(&v1));
    Ok((
        (2.0 * bb * r0 - c * r1) / det,
        (2.0 * a * r1 - c * r0) / det,
    ))
}

/// Uniform-acceleration relaxation `E(λ, μ)` whose minimizer is the HOUBA
/// closed form.
pub fn houba_energy(b: &BoundaryState, lambda: f64, mu: f64) -> f64 {
    let (v0, v1) = (b.v_cur, b.v_goal);
    (b.delta() * 3.0 - v0 * lambda - v1 * mu).norm_squared()
        + 0.5 * lambda * lambda * v0.norm_squared()
        + 0.5 * mu * mu * v1.norm_squared()
}

/// Closed-form HOUBA tangent magnitudes.
pub fn houba_params(b: &BoundaryState) -> Result<(f64, f64), InterpError> {
    let (v0, v1, d) = (b.v_cur, b.v_goal, b.delta());
    if v0.norm() <= ZERO_VELOCITY || v1.norm() <= ZERO_VELOCITY {
        return Err(InterpError::ZeroVelocity);
    }
    let (a, bb, c) = (v0.norm_squared(), v1.norm_squared(), v0.dot(&v1));
    let (d0, d1) = (d.dot(&v0), d.dot(&v1));
    let den = 9.0 * a * bb - 4.0 * c * c;
    Ok((
        6.0 * (3.0 * d0 * bb - 2.0 * d1 * c) / den,
        6.0 * (-2.0 * d0 * c + 3.0 * d1 * a) / den,
    ))
}

/// Tangent magnitude at one end when the other end's tangent is pinned to
/// `fixed` (scale 1): the 1D stationary point of the same objective.
fn one_sided_param(mode: InterpMode, d: &Vec3, fixed: &Vec3, free: &Vec3) -> f64 {
    let (bb, c, df) = (free.norm_squared(), fixed.dot(free), d.dot(free));
    match mode {
        // 2bμ + c = 3Δ·v
        InterpMode::Ogh => (3.0 * df - c) / (2.0 * bb),
        // 3bμ + 2c = 6Δ·v
        InterpMode::Houba => (6.0 * df - 2.0 * c) / (3.0 * bb),
    }
}

fn clamp_scale(x: f64, (lo, hi): (f64, f64), which: &str) -> f64 {
    if !(lo..=hi).contains(&x) {
        log::warn!("{which} = {x:.4} clamped to [{lo}, {hi}]");
    }
    if x.is_nan() {
        return lo;
    }
    x.clamp(lo, hi)
}

/// Single-segment preview path from the current state to the goal state.
///
/// Velocities are normalized to unit length before `λ, μ` are computed and
/// clamped to [`TANGENT_SCALE_RANGE`]. A zero boundary velocity pins that
/// end's tangent to `Δ`; a rest-to-rest boundary gives the straight segment.
pub fn interpolate_preview_path(
    b: &BoundaryState,
    mode: InterpMode,
) -> Result<PathSpline, InterpError> {
    interpolate_preview_path_in(b, mode, TANGENT_SCALE_RANGE)
}

/// [`interpolate_preview_path`] with a caller-chosen clamp range for `λ, μ`.
pub fn interpolate_preview_path_in(
    b: &BoundaryState,
    mode: InterpMode,
    range: (f64, f64),
) -> Result<PathSpline, InterpError> {
    let d = b.delta();
    if d.norm() <= 1e-12 {
        return Err(InterpError::DegenerateBoundary);
    }
    let u0 = unit_or_none(&b.v_cur);
    let u1 = unit_or_none(&b.v_goal);
    let (t0, t1) = match (u0, u1) {
        (None, None) => (d, d),
        (Some(u0), None) => {
            let l = clamp_scale(one_sided_param(mode, &d, &d, &u0), range, "lambda");
            (u0 * l, d)
        }
        (None, Some(u1)) => {
            let m = clamp_scale(one_sided_param(mode, &d, &d, &u1), range, "mu");
            (d, u1 * m)
        }
        (Some(u0), Some(u1)) => {
            let unit = BoundaryState {
                v_cur: u0,
                v_goal: u1,
                ..*b
            };
            let (l, m) = match mode {
                InterpMode::Houba => houba_params(&unit)?,
                InterpMode::Ogh => ogh_params(&unit)?,
            };
            (
                u0 * clamp_scale(l, range, "lambda"),
                u1 * clamp_scale(m, range, "mu"),
            )
        }
    };
    Ok(PathSpline::single(HermiteCurve::new(
        b.p_cur, t0, b.p_goal, t1,
    )))
}
