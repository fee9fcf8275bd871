use crate::files::read_json;
use crate::Failure;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;
use topp_mpc::geom::{stance_wrench_cone, ContactPatch, HalfplaneSet, Vec2, Vec3};
use topp_mpc::interp::{HermiteCurve, PathSpline};
use topp_mpc::topp::{
    apply_sdd_upper_bound, prop1_sdd_max, retime, PathConstraint, ReductionMethod, RetimeProblem,
    StanceSchedule, ToppError, VelocityProfile,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub p0: Vec3,
    pub v0: Vec3,
    pub p1: Vec3,
    pub v1: Vec3,
    /// Span of the segment in path index.
    #[serde(default = "unit")]
    pub length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StanceSpec {
    pub patches: Vec<ContactPatch>,
    /// Path index where the next stance takes over; ignored on the last one.
    #[serde(default)]
    pub until: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSpec {
    #[serde(default)]
    pub from: f64,
    #[serde(default = "infinite")]
    pub to: f64,
    /// Rows `[a, b, c]` meaning `a·s̈ + b·ṡ² ≤ c`.
    pub halfplanes: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub a_max: f64,
    pub v_max: f64,
}

/// Swing-foot landing time to wait for before reaching `s_trans`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingSpec {
    pub s_trans: f64,
    pub t_swing: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default)]
    pub sdot_start: f64,
    #[serde(default)]
    pub sdot_end_max: Option<f64>,
    #[serde(default = "default_gravity")]
    pub gravity: Vec3,
    #[serde(default)]
    pub method: ReductionMethod,
    #[serde(default)]
    pub stances: Vec<StanceSpec>,
    #[serde(default)]
    pub polygons: Vec<PolygonSpec>,
    #[serde(default)]
    pub workspace: Option<WorkspaceSpec>,
    #[serde(default)]
    pub swing: Option<SwingSpec>,
}

/// Relative slack of the echoed landing check; the bound is exactly tight
/// when the start speed lies above `s_trans / T_swing`.
const SWING_CHECK_TOL: f64 = 1e-9;

pub fn swing_satisfied(t_trans: f64, t_swing: f64) -> bool {
    t_trans >= t_swing * (1.0 - SWING_CHECK_TOL)
}

fn unit() -> f64 {
    1.0
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn default_ds() -> f64 {
    0.1
}

fn default_gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -9.81)
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::input(e.to_string())
}

pub fn build_path(file: &PathFile) -> Result<PathSpline, Failure> {
    let segments: Vec<(HermiteCurve, f64)> = file
        .segments
        .iter()
        .map(|s| (HermiteCurve::new(s.p0, s.v0, s.p1, s.v1), s.length))
        .collect();
    PathSpline::from_segments(&segments)
        .ok_or_else(|| Failure::input("path needs at least one segment of positive length"))
}

pub fn build_problem(path: PathSpline, c: &ConstraintsFile) -> Result<RetimeProblem, Failure> {
    let s_max = path.s_max();
    let mut p = RetimeProblem::new(path, c.ds);
    p.sdot_start = c.sdot_start;
    p.sdot_end_max = c.sdot_end_max;
    p.gravity = c.gravity;
    p.method = c.method;
    if !c.stances.is_empty() {
        let mut cones = Vec::new();
        let mut switches = Vec::new();
        for (i, st) in c.stances.iter().enumerate() {
            if st.patches.is_empty() {
                return Err(Failure::input(format!("stance {i} has no patches")));
            }
            let o = st.patches.iter().fold(Vec3::zeros(), |a, q| a + q.center)
                / st.patches.len() as f64;
            cones.push(stance_wrench_cone(&st.patches, &o).map_err(invalid)?);
            if i + 1 < c.stances.len() {
                switches.push(
                    st.until
                        .ok_or_else(|| Failure::input(format!("stance {i} needs `until`")))?,
                );
            }
        }
        p.schedule = Some(StanceSchedule::with_switches(cones, &switches, s_max).map_err(invalid)?);
    }
    for poly in &c.polygons {
        let mut set = HalfplaneSet::new();
        for [a, b, off] in &poly.halfplanes {
            set.push(Vec2::new(*a, *b), *off);
        }
        p.constraints.push(PathConstraint::Halfplanes {
            s_from: poly.from,
            s_to: poly.to,
            set,
        });
    }
    if let Some(w) = c.workspace {
        p.constraints.push(PathConstraint::Workspace {
            a_max: w.a_max,
            v_max: w.v_max,
        });
    }
    Ok(p)
}

fn topp_failure(e: ToppError) -> Failure {
    match e {
        ToppError::NonParameterizable { s }
        | ToppError::EmptyPolygon { s }
        | ToppError::Stalled { s } => Failure {
            code: Failure::NOT_PARAMETERIZABLE,
            message: format!("{e}; first infeasible s = {s:.4}"),
        },
        other => invalid(other),
    }
}

/// Profile, plus `t(s_trans)` when a swing is given. The acceleration bound
/// is recomputed once if the start speed had to be clamped.
pub fn solve(
    problem: &RetimeProblem,
    swing: Option<SwingSpec>,
) -> Result<(VelocityProfile, Option<f64>), Failure> {
    let Some(sw) = swing else {
        return Ok((retime(problem).map_err(topp_failure)?, None));
    };
    let mut sdot0 = problem.sdot_start;
    let mut best = None;
    for _ in 0..2 {
        let bound = prop1_sdd_max(sw.s_trans, sw.t_swing, sdot0);
        let profile =
            retime(&apply_sdd_upper_bound(problem, bound, sw.s_trans)).map_err(topp_failure)?;
        let t_trans = profile.time_at(sw.s_trans);
        let done = swing_satisfied(t_trans, sw.t_swing) || profile.sdot_start() == sdot0;
        sdot0 = profile.sdot_start();
        best = Some((profile, Some(t_trans)));
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

pub fn render_csv(profile: &VelocityProfile, swing: Option<(SwingSpec, f64)>) -> String {
    let mut out = String::from("s,sdot2,t\n");
    for i in 0..profile.s.len() {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6}",
            profile.s[i], profile.b[i], profile.t[i]
        );
    }
    let _ = writeln!(out, "# duration {:.6}", profile.duration);
    if profile.start_clamped {
        let _ = writeln!(out, "# start speed clamped to {:.6}", profile.sdot_start());
    }
    if let Some((sw, t)) = swing {
        let _ = writeln!(
            out,
            "# t(s_trans) {t:.6} T_swing {:.6} satisfied {}",
            sw.t_swing,
            swing_satisfied(t, sw.t_swing)
        );
    }
    out
}

pub fn cmd_retime(path: &Path, constraints: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let path_file: PathFile = read_json(path)?;
    let c: ConstraintsFile = read_json(constraints)?;
    let problem = build_problem(build_path(&path_file)?, &c)?;
    let (profile, t_trans) = solve(&problem, c.swing)?;
    let csv = render_csv(&profile, c.swing.zip(t_trans));
    match out {
        Some(file) => {
            std::fs::write(file, &csv)?;
            println!("duration {:.6}", profile.duration);
        }
        None => print!("{csv}"),
    }
    Ok(())
}
