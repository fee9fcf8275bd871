#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use topp_mpc::geom::{
    stance_wrench_cone, static_equilibrium_polygon, ContactPatch, HalfplaneSet, Polygon2, Vec2,
    Vec3, WrenchConeMatrix,
};
use topp_mpc::interp::{
    hermite_eval, interpolate_preview_path, BoundaryState, HermiteCurve, InterpMode, PathSpline,
};
use topp_mpc::loco::{
    compute_preview_targets, ControllerConfig, FsmState, Phase, PreviewPlan, ReducedRobotState,
};
use topp_mpc::sim::{HillProfile, Scenario, Terrain};
use topp_mpc::topp::{PathConstraint, RetimeProblem, StanceSchedule};

pub const G: Vec3 = Vec3::new(0.0, 0.0, -9.81);

pub fn foot(x: f64, y: f64, z: f64) -> ContactPatch {
    ContactPatch::flat(Vec3::new(x, y, z), 0.112, 0.065, 0.7)
}

/// Patch on a slope rising along +x by `deg` degrees.
pub fn sloped_foot(x: f64, y: f64, z: f64, deg: f64) -> ContactPatch {
    let a = deg.to_radians();
    ContactPatch::from_normal(
        Vec3::new(x, y, z),
        Vec3::new(-a.sin(), 0.0, a.cos()),
        Vec3::x(),
        0.112,
        0.065,
        0.7,
    )
    .unwrap()
}

/// Double support on differently inclined and yawed soles.
pub fn inclined_double() -> [ContactPatch; 2] {
    let (a, yaw) = (15f64.to_radians(), 20f64.to_radians());
    let right = ContactPatch::from_normal(
        Vec3::new(0.25, -0.095, 0.1),
        Vec3::new(-a.sin(), 0.0, a.cos()),
        Vec3::new(yaw.cos(), yaw.sin(), 0.0),
        0.112,
        0.065,
        0.7,
    )
    .unwrap();
    [foot(0.0, 0.095, 0.0), right]
}

/// Meter-high hills with slopes up to 29.7°.
pub fn hills() -> Scenario {
    Scenario::new(
        "hills",
        Terrain::Hills(HillProfile {
            amplitude: 0.5,
            wavelength: 5.5,
            steps: 24,
            friction: 1.0,
            ..Default::default()
        }),
    )
}

pub fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

pub fn random_boundary(rng: &mut ChaCha8Rng) -> BoundaryState {
    loop {
        let b = BoundaryState {
            p_cur: random_vec(rng, 1.0),
            v_cur: random_vec(rng, 1.0),
            p_goal: random_vec(rng, 1.0),
            v_goal: random_vec(rng, 1.0),
        };
        if b.v_cur.norm() > 0.1 && b.v_goal.norm() > 0.1 && b.delta().norm() > 0.1 {
            return b;
        }
    }
}

/// Simpson's rule is exact here: ‖H''‖² is a quadratic polynomial in s.
pub fn strain_by_quadrature(b: &BoundaryState, l: f64, m: f64) -> f64 {
    let c = HermiteCurve::new(b.p_cur, b.v_cur * l, b.p_goal, b.v_goal * m);
    let f = |s: f64| hermite_eval(&c, s, 2).norm_squared();
    (f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0
}

pub fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: (f64, f64)) -> (f64, f64) {
    let mut pts = [start, (start.0 + 0.5, start.1), (start.0, start.1 + 0.5)];
    for _ in 0..4000 {
        pts.sort_by(|a, b| f(a.0, a.1).total_cmp(&f(b.0, b.1)));
        let (best, mid, worst) = (pts[0], pts[1], pts[2]);
        let c = ((best.0 + mid.0) / 2.0, (best.1 + mid.1) / 2.0);
        let refl = (2.0 * c.0 - worst.0, 2.0 * c.1 - worst.1);
        let fr = f(refl.0, refl.1);
        if fr < f(best.0, best.1) {
            let exp = (3.0 * c.0 - 2.0 * worst.0, 3.0 * c.1 - 2.0 * worst.1);
            pts[2] = if f(exp.0, exp.1) < fr { exp } else { refl };
        } else if fr < f(mid.0, mid.1) {
            pts[2] = refl;
        } else {
            let con = ((c.0 + worst.0) / 2.0, (c.1 + worst.1) / 2.0);
            if f(con.0, con.1) < f(worst.0, worst.1) {
                pts[2] = con;
            } else {
                pts[1] = ((best.0 + mid.0) / 2.0, (best.1 + mid.1) / 2.0);
                pts[2] = ((best.0 + worst.0) / 2.0, (best.1 + worst.1) / 2.0);
            }
        }
    }
    pts.sort_by(|a, b| f(a.0, a.1).total_cmp(&f(b.0, b.1)));
    pts[0]
}

pub fn box_problem(ds: f64, amax: f64) -> RetimeProblem {
    let mut p = RetimeProblem::new(PathSpline::straight(Vec3::zeros(), Vec3::x()), ds);
    p.constraints.push(PathConstraint::Halfplanes {
        s_from: 0.0,
        s_to: 1.0,
        set: HalfplaneSet::from_box(Vec2::new(-amax, -100.0), Vec2::new(amax, 100.0)),
    });
    p.sdot_end_max = Some(0.0);
    p
}

pub struct Stance {
    pub patches: Vec<ContactPatch>,
    pub cone: WrenchConeMatrix,
}

pub fn stance(patches: Vec<ContactPatch>) -> Stance {
    let o = patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64;
    let scaled: Vec<_> = patches.iter().map(|p| p.scaled(0.75)).collect();
    let cone = stance_wrench_cone(&scaled, &o).unwrap();
    Stance { patches, cone }
}

pub fn single_and_double() -> (Stance, Stance) {
    let l = foot(0.0, 0.095, 0.0);
    let r = foot(0.25, -0.095, 0.0);
    (stance(vec![r]), stance(vec![l, r]))
}

/// Random COM boundary around the stance; only feasible starting points are
/// kept by the callers.
pub fn random_com_problem(rng: &mut ChaCha8Rng, st: &Stance) -> RetimeProblem {
    let c = st.patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / st.patches.len() as f64;
    let jitter = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            rng.gen_range(-0.12..0.12),
            rng.gen_range(-0.08..0.08),
            rng.gen_range(0.72..0.85),
        )
    };
    let b = BoundaryState {
        p_cur: c + jitter(rng),
        v_cur: Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0),
        p_goal: c + jitter(rng),
        v_goal: Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0),
    };
    let path = interpolate_preview_path(&b, InterpMode::Houba).unwrap();
    let mut p = RetimeProblem::new(path, 0.1);
    p.schedule = Some(StanceSchedule::single(st.cone.clone(), 1.0));
    p.gravity = G;
    p
}

pub fn slope_scenario(deg: f64, ds: f64) -> (RetimeProblem, Vec<WrenchConeMatrix>, Polygon2) {
    let t = deg.to_radians().tan();
    let a = sloped_foot(0.0, 0.095, 0.0, deg);
    let b = sloped_foot(0.25, -0.095, 0.25 * t, deg);
    let c = sloped_foot(0.5, 0.095, 0.5 * t, deg);
    let o = b.center;
    let cone = |ps: &[ContactPatch]| {
        let scaled: Vec<_> = ps.iter().map(|p| p.scaled(0.75)).collect();
        stance_wrench_cone(&scaled, &o).unwrap()
    };
    let cones = vec![cone(&[a, b]), cone(&[b]), cone(&[b, c])];
    let start = Vec3::new(0.125, 0.0, 0.125 * t + 0.8);
    let goal = Vec3::new(0.375, 0.0, 0.375 * t + 0.8);
    let via = b.center + Vec3::new(0.0, 0.03, 0.8);
    let mid = (goal - start) * 0.5;
    let path = PathSpline::from_segments(&[
        (HermiteCurve::new(start, via - start, via, mid), 1.0),
        (HermiteCurve::new(via, mid, goal, goal - via), 1.0),
    ])
    .unwrap();
    let sep = static_equilibrium_polygon(&[b.scaled(0.75)], 38.0, &G).unwrap();
    let mut p = RetimeProblem::new(path, ds);
    p.gravity = G;
    (p, cones, sep)
}

/// A state shortly after the start of single support `k`: COM near its
/// goal, moving forward, swing foot at rest on its origin.
pub fn ss_state(footsteps: &[ContactPatch], k: usize, rng: &mut ChaCha8Rng) -> ReducedRobotState {
    let cfg = ControllerConfig::default();
    let state = FsmState {
        phase: Phase::Double(k),
        footsteps: footsteps.to_vec(),
    };
    let goal = compute_preview_targets(&state, &cfg, &G).unwrap().com;
    let off = Vec3::new(
        rng.gen_range(-0.04..0.0),
        rng.gen_range(-0.02..0.02),
        rng.gen_range(-0.01..0.01),
    );
    let v = footsteps[k].tangent * rng.gen_range(0.0..0.4)
        + Vec3::new(0.0, rng.gen_range(-0.05..0.05), 0.0);
    ReducedRobotState {
        p_g: goal + off,
        v_g: v,
        ..ReducedRobotState::at_rest(goal, footsteps[k - 1].center)
    }
}

pub fn random_walk(rng: &mut ChaCha8Rng) -> Vec<ContactPatch> {
    let mut x = 0.0;
    let mut z = 0.0;
    (0..4)
        .map(|i| {
            let deg = rng.gen_range(-15.0..15.0);
            let p = sloped_foot(x, if i % 2 == 0 { 0.095 } else { -0.095 }, z, deg);
            let step = rng.gen_range(0.2..0.3);
            x += step;
            z += step * f64::tan(deg.to_radians()) * 0.5;
            p
        })
        .collect()
}

pub fn check_prop1(plan: &PreviewPlan) {
    let t_swing = plan.t_swing.unwrap();
    let t_trans = plan.com_time_at_trans().unwrap();
    assert!(
        t_trans >= t_swing - 1e-9,
        "COM reaches s_trans = {:.3} at {t_trans:.4} before the swing lands at {t_swing:.4}",
        plan.s_trans.unwrap()
    );
}
