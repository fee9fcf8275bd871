//! Predictive walking controller on a point-mass COM and a rigid swing foot.
//!
//! Every tick re-interpolates the preview paths from the current state,
//! retimes them under contact-stability polygons and applies the first
//! accelerations. Phase durations are never configured: they follow from the
//! retimed profiles and the two geometric transition rules.

use crate::geom::{
    chebyshev_center, stance_wrench_cone, static_equilibrium_polygon, ContactPatch, GeomError,
    Polygon2, Vec2, Vec3, WrenchConeMatrix,
};
use crate::interp::{
    interpolate_preview_path, interpolate_preview_path_in, BoundaryState, InterpError, InterpMode,
    PathSpline, TANGENT_SCALE_RANGE,
};
use crate::topp::{
    apply_sdd_upper_bound, prop1_sdd_max, retime, sep_crossings, PathConstraint, ReductionMethod,
    RetimeProblem, StanceSchedule, ToppError, VelocityProfile,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Consecutive failed ticks after which the controller gives up.
pub const RETRY_LIMIT: usize = 5;

/// Below this speed the swing foot is considered at rest and leaves along
/// the takeoff direction.
const SWING_REST_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocoError {
    #[error("at least two footsteps are required")]
    TooFewFootsteps,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("robot state is not finite")]
    InvalidState,
    #[error("geometry: {0}")]
    Geometry(#[from] GeomError),
    #[error("interpolation: {0}")]
    Interp(#[from] InterpError),
    #[error("retiming: {0}")]
    Topp(#[from] ToppError),
    #[error("COM reaches the switch at s = {s_trans:.4} after {t_com:.3} s, before touchdown at {t_swing:.3} s")]
    EarlySwitch {
        s_trans: f64,
        t_com: f64,
        t_swing: f64,
    },
    #[error("planner failed on {ticks} consecutive ticks: {last}")]
    PlannerFailed { ticks: usize, last: String },
}

/// Point-mass COM and swing-foot state. Angular momentum is carried along
/// and never changed by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedRobotState {
    pub p_g: Vec3,
    pub v_g: Vec3,
    pub p_swing: Vec3,
    pub v_swing: Vec3,
    pub l_g: Vec3,
}

impl ReducedRobotState {
    pub fn at_rest(p_g: Vec3, p_swing: Vec3) -> Self {
        Self {
            p_g,
            v_g: Vec3::zeros(),
            p_swing,
            v_swing: Vec3::zeros(),
            l_g: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.p_g, self.v_g, self.p_swing, self.v_swing, self.l_g]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Walking phase. `Double(k)` stands on footsteps `k−1` and `k`;
/// `Single(k)` stands on `k` while the foot from `k−1` swings to `k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", content = "step")]
pub enum Phase {
    #[serde(rename = "ds")]
    Double(usize),
    #[serde(rename = "ss")]
    Single(usize),
}

impl Phase {
    pub fn step(&self) -> usize {
        match *self {
            Phase::Double(k) | Phase::Single(k) => k,
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self, Phase::Single(_))
    }

    pub fn label(&self) -> &'static str {
        if self.is_single() {
            "SS"
        } else {
            "DS"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsmState {
    pub phase: Phase,
    pub footsteps: Vec<ContactPatch>,
}

impl FsmState {
    /// Double support on the first two footsteps.
    pub fn start(footsteps: Vec<ContactPatch>) -> Result<Self, LocoError> {
        if footsteps.len() < 2 {
            return Err(LocoError::TooFewFootsteps);
        }
        Ok(Self {
            phase: Phase::Double(1),
            footsteps,
        })
    }

    pub fn last_step(&self) -> usize {
        self.footsteps.len() - 1
    }

    /// Inclusive footstep index range of the current stance.
    pub fn stance_range(&self) -> (usize, usize) {
        match self.phase {
            Phase::Double(k) => (k - 1, k),
            Phase::Single(k) => (k, k),
        }
    }

    pub fn stance(&self) -> &[ContactPatch] {
        let (a, b) = self.stance_range();
        &self.footsteps[a..=b]
    }

    pub fn next_footstep(&self) -> Option<&ContactPatch> {
        self.footsteps.get(self.phase.step() + 1)
    }

    /// Footstep the swing foot leaves in single support.
    pub fn swing_origin(&self) -> Option<&ContactPatch> {
        match self.phase {
            Phase::Single(k) => Some(&self.footsteps[k - 1]),
            Phase::Double(_) => None,
        }
    }

    /// Double support on the last footstep.
    pub fn is_final(&self) -> bool {
        self.phase == Phase::Double(self.last_step())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Touchdown radius of the swing foot (m).
    pub epsilon: f64,
    /// COM distance to its goal that ends double support (m).
    pub d_trans: f64,
    /// COM goal speed along the next contact tangent (m/s).
    pub v_ref: f64,
    /// Landing direction weight of the tangent against the normal.
    pub alpha: f64,
    /// Takeoff direction weight of the tangent against the normal.
    pub beta: f64,
    /// Sole dimensions and friction multiplier used for planning.
    pub safety_scale: f64,
    /// Path-index grid step.
    pub ds: f64,
    pub control_period: f64,
    pub swing_a_max: f64,
    pub swing_v_max: f64,
    /// COM goal height above the target contact (m).
    pub com_height: f64,
    pub method: ReductionMethod,
    pub interp: InterpMode,
    /// Lower bound of the COM path tangent magnitudes as a fraction of the
    /// chord length.
    pub tangent_floor: f64,
    pub command: CommandMode,
}

/// How the commanded accelerations are read off a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandMode {
    /// Accelerations at the start of the plan.
    Initial,
    /// Mean accelerations over the first control period.
    TickMean,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            d_trans: 0.05,
            v_ref: 0.4,
            alpha: 0.5,
            beta: 0.3,
            safety_scale: 0.75,
            ds: 0.1,
            control_period: 0.04,
            swing_a_max: 5.0,
            swing_v_max: 1.5,
            com_height: 0.8,
            method: ReductionMethod::DualHull,
            interp: InterpMode::Houba,
            tangent_floor: 0.75,
            command: CommandMode::TickMean,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), LocoError> {
        let positive = [
            self.epsilon,
            self.d_trans,
            self.v_ref,
            self.alpha,
            self.beta,
            self.ds,
            self.control_period,
            self.swing_a_max,
            self.swing_v_max,
            self.com_height,
        ];
        if !positive.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(LocoError::InvalidConfig("parameters must be positive"));
        }
        if !(self.safety_scale > 0.0 && self.safety_scale <= 1.0) {
            return Err(LocoError::InvalidConfig("safety scale must be in (0, 1]"));
        }
        if !(0.0..=2.0).contains(&self.tangent_floor) {
            return Err(LocoError::InvalidConfig("tangent floor must be in [0, 2]"));
        }
        if self.alpha > 1.0 || self.beta > 1.0 {
            return Err(LocoError::InvalidConfig(
                "direction weights must be at most 1",
            ));
        }
        Ok(())
    }
}

/// Goal states of the preview paths for one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreviewTargets {
    pub com: Vec3,
    pub com_velocity: Vec3,
    pub swing: Option<Vec3>,
    pub swing_velocity: Option<Vec3>,
    pub takeoff: Option<Vec3>,
}

/// Apply the touchdown and COM-arrival rules; any other state is kept.
pub fn fsm_step(
    state: &FsmState,
    robot: &ReducedRobotState,
    targets: &PreviewTargets,
    config: &ControllerConfig,
) -> FsmState {
    let phase = match state.phase {
        Phase::Single(k) => match targets.swing {
            Some(goal) if (robot.p_swing - goal).norm() <= config.epsilon => Phase::Double(k + 1),
            _ => state.phase,
        },
        Phase::Double(k) if k < state.last_step() => {
            if (robot.p_g - targets.com).norm() <= config.d_trans {
                Phase::Single(k)
            } else {
                state.phase
            }
        }
        Phase::Double(_) => state.phase,
    };
    FsmState {
        phase,
        footsteps: state.footsteps.clone(),
    }
}

/// Center of the largest disk inscribed in a convex polygon. When the
/// largest disks are not unique their centers form a segment and its
/// midpoint is returned.
pub fn polygon_center(poly: &Polygon2) -> Result<Vec2, GeomError> {
    let h = poly.halfplanes();
    let (c, r) = chebyshev_center(&h)?;
    let mut core = poly.clone();
    for (n, off) in h.iter() {
        core = core.clip(n, off - r * n.norm() * (1.0 - 1e-6));
    }
    if core.is_empty() {
        return Ok(c);
    }
    Ok(core.vertices.iter().sum::<Vec2>() / core.len() as f64)
}

/// COM goal above the center of the static-equilibrium region of `patches`.
fn sep_target(
    patches: &[ContactPatch],
    config: &ControllerConfig,
    gravity: &Vec3,
) -> Result<Vec3, LocoError> {
    let sep = static_equilibrium_polygon(patches, 1.0, gravity)?;
    let c = polygon_center(&sep)?;
    let z = patches.iter().map(|p| p.center.z).sum::<f64>() / patches.len() as f64;
    Ok(Vec3::new(c.x, c.y, z + config.com_height))
}

pub fn compute_preview_targets(
    fsm: &FsmState,
    config: &ControllerConfig,
    gravity: &Vec3,
) -> Result<PreviewTargets, LocoError> {
    let f = &fsm.footsteps;
    Ok(match fsm.phase {
        Phase::Double(k) if k == fsm.last_step() => PreviewTargets {
            com: sep_target(&f[k - 1..=k], config, gravity)?,
            com_velocity: Vec3::zeros(),
            swing: None,
            swing_velocity: None,
            takeoff: None,
        },
        Phase::Double(k) => PreviewTargets {
            com: sep_target(&f[k..=k], config, gravity)?,
            com_velocity: f[k].tangent * config.v_ref,
            swing: None,
            swing_velocity: None,
            takeoff: None,
        },
        Phase::Single(k) => {
            let (from, to) = (&f[k - 1], &f[k + 1]);
            PreviewTargets {
                com: sep_target(&f[k + 1..=k + 1], config, gravity)?,
                com_velocity: to.tangent * config.v_ref,
                swing: Some(to.center),
                swing_velocity: Some(to.tangent * config.alpha - to.normal * (1.0 - config.alpha)),
                takeoff: Some(from.tangent * config.beta + from.normal * (1.0 - config.beta)),
            }
        }
    })
}

/// Copies of `patches` with dimensions and friction multiplied by the
/// safety scale.
pub fn scaled_stance(patches: &[ContactPatch], config: &ControllerConfig) -> Vec<ContactPatch> {
    patches
        .iter()
        .map(|p| p.scaled(config.safety_scale))
        .collect()
}

fn centroid(patches: &[ContactPatch]) -> Vec3 {
    patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64
}

/// Per-stance wrench cones (scaled) and static-equilibrium regions
/// (unscaled), computed once per footstep range.
#[derive(Debug, Clone, Default)]
pub struct StanceCache {
    cones: HashMap<(usize, usize), WrenchConeMatrix>,
    seps: HashMap<(usize, usize), Polygon2>,
}

impl StanceCache {
    pub fn cone(
        &mut self,
        footsteps: &[ContactPatch],
        range: (usize, usize),
        config: &ControllerConfig,
    ) -> Result<&WrenchConeMatrix, LocoError> {
        if let std::collections::hash_map::Entry::Vacant(e) = self.cones.entry(range) {
            let patches = &footsteps[range.0..=range.1];
            let cone = stance_wrench_cone(&scaled_stance(patches, config), &centroid(patches))?;
            e.insert(cone);
        }
        Ok(&self.cones[&range])
    }

    pub fn sep(
        &mut self,
        footsteps: &[ContactPatch],
        range: (usize, usize),
        gravity: &Vec3,
    ) -> Result<&Polygon2, LocoError> {
        if let std::collections::hash_map::Entry::Vacant(e) = self.seps.entry(range) {
            let sep = static_equilibrium_polygon(&footsteps[range.0..=range.1], 1.0, gravity)?;
            e.insert(sep);
        }
        Ok(&self.seps[&range])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingPlan {
    pub path: PathSpline,
    pub profile: VelocityProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewPlan {
    pub phase: Phase,
    pub com_path: Option<PathSpline>,
    /// `None` holds the COM in place (already at its goal).
    pub com_profile: Option<VelocityProfile>,
    pub swing: Option<SwingPlan>,
    pub t_swing: Option<f64>,
    pub s_trans: Option<f64>,
}

impl PreviewPlan {
    fn hold(phase: Phase) -> Self {
        Self {
            phase,
            com_path: None,
            com_profile: None,
            swing: None,
            t_swing: None,
            s_trans: None,
        }
    }

    pub fn com_duration(&self) -> f64 {
        self.com_profile.as_ref().map_or(0.0, |p| p.duration)
    }

    /// COM time at the contact switch of a single-support plan.
    pub fn com_time_at_trans(&self) -> Option<f64> {
        Some(self.com_profile.as_ref()?.time_at(self.s_trans?))
    }

    /// Mean `(a_G, a_swing)` over `[tau, tau + dt]`: held for one control
    /// period, it lands on the planned velocity at the end of the period.
    /// A swing plan that ends within the period instead brings the foot of
    /// `robot` onto its final position.
    pub fn tick_accelerations(
        &self,
        tau: f64,
        dt: f64,
        robot: &ReducedRobotState,
    ) -> (Vec3, Option<Vec3>) {
        let mean = |path: &PathSpline, prof: &VelocityProfile| {
            (path_velocity(path, prof, tau + dt) - path_velocity(path, prof, tau)) / dt
        };
        let a_g = match (&self.com_path, &self.com_profile) {
            (Some(path), Some(prof)) => mean(path, prof),
            _ => Vec3::zeros(),
        };
        let a_sw = self.swing.as_ref().map(|sw| {
            if tau + dt < sw.profile.duration {
                return mean(&sw.path, &sw.profile);
            }
            let step = sw.path.p(sw.profile.s_max()) - robot.p_swing;
            (step / dt - robot.v_swing) / dt
        });
        (a_g, a_sw)
    }

    /// Instantaneous `(a_G, a_swing)` at time `tau` into the plan.
    pub fn accelerations(&self, tau: f64) -> (Vec3, Option<Vec3>) {
        let a_g = match (&self.com_path, &self.com_profile) {
            (Some(path), Some(prof)) => path_acceleration(path, prof, tau),
            _ => Vec3::zeros(),
        };
        let a_sw = self
            .swing
            .as_ref()
            .map(|s| path_acceleration(&s.path, &s.profile, tau));
        (a_g, a_sw)
    }
}

/// Path velocity `p_s(s)·ṡ` at time `tau` along a retimed path.
fn path_velocity(path: &PathSpline, prof: &VelocityProfile, tau: f64) -> Vec3 {
    let (s, sd, _) = prof.sample(tau);
    path.p_s(s) * sd
}

/// `p_ss(s)·ṡ² + p_s(s)·s̈` at time `tau` along a retimed path.
fn path_acceleration(path: &PathSpline, prof: &VelocityProfile, tau: f64) -> Vec3 {
    let (s, sd, sdd) = if tau <= 0.0 {
        (0.0, prof.sdot_start(), prof.sdd_start())
    } else {
        prof.sample(tau)
    };
    path.p_ss(s) * (sd * sd) + path.p_s(s) * sdd
}

fn sdot_for(velocity: &Vec3, path: &PathSpline, s: f64) -> f64 {
    let t = path.p_s(s).norm();
    if t > 0.0 {
        velocity.norm() / t
    } else {
        0.0
    }
}

/// Smallest contact-switch index tried in single support.
const MIN_SWITCH_INDEX: f64 = 1e-3;

/// Multipliers of the configured tangent floor tried in turn when a COM path
/// cannot be retimed.
pub const TANGENT_FLOOR_LADDER: [f64; 7] = [1.0, 0.67, 1.5, 2.0, 3.0, 5.0, 8.0];

/// COM path to the phase goal. Tangent magnitudes are kept above
/// `floor_ratio` times the chord so a velocity pointing away from the goal
/// bends the path gradually instead of through a cusp.
pub fn com_preview_path(
    robot: &ReducedRobotState,
    targets: &PreviewTargets,
    floor_ratio: f64,
    mode: InterpMode,
) -> Result<PathSpline, InterpError> {
    let b = BoundaryState {
        p_cur: robot.p_g,
        v_cur: robot.v_g,
        p_goal: targets.com,
        v_goal: targets.com_velocity,
    };
    let (lo, hi) = TANGENT_SCALE_RANGE;
    let floor = (floor_ratio * b.delta().norm()).clamp(lo, hi);
    interpolate_preview_path_in(&b, mode, (floor, hi))
}

/// First COM plan of the tangent-floor ladder that retimes; the error of the
/// last attempt otherwise.
fn first_feasible<T>(
    config: &ControllerConfig,
    mut attempt: impl FnMut(f64) -> Result<T, LocoError>,
) -> Result<T, LocoError> {
    let mut last = None;
    for m in TANGENT_FLOOR_LADDER {
        match attempt(m * config.tangent_floor) {
            Ok(plan) => return Ok(plan),
            Err(e @ (LocoError::Topp(_) | LocoError::EarlySwitch { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("ladder is not empty"))
}

/// `preferred`, the grid points below it, then `lowest`: the switch index
/// that a constant path speed reaches when the swing foot lands.
fn switch_candidates(preferred: f64, lowest: f64, ds: f64) -> Vec<f64> {
    let mut out = vec![preferred];
    let mut i = (preferred / ds).ceil() as usize;
    while i > 1 {
        i -= 1;
        let s = i as f64 * ds;
        if s <= lowest {
            break;
        }
        out.push(s);
    }
    if lowest < preferred {
        out.push(lowest);
    }
    out
}

/// Two-stage single-support plan: the swing foot is retimed first under
/// workspace limits; the COM is then retimed under the support cone up to
/// `s_trans` and the next double-support cone after it, with the
/// path-acceleration bound that keeps it from reaching `s_trans` before the
/// swing foot lands.
pub fn plan_ss_preview(
    robot: &ReducedRobotState,
    fsm: &FsmState,
    targets: &PreviewTargets,
    config: &ControllerConfig,
    cache: &mut StanceCache,
    gravity: &Vec3,
) -> Result<PreviewPlan, LocoError> {
    let Phase::Single(k) = fsm.phase else {
        return Err(LocoError::InvalidConfig(
            "single-support plan outside single support",
        ));
    };
    let (Some(goal), Some(landing), Some(takeoff)) =
        (targets.swing, targets.swing_velocity, targets.takeoff)
    else {
        return Err(LocoError::InvalidConfig(
            "single-support targets without swing goal",
        ));
    };

    let v_dir = if robot.v_swing.norm() > SWING_REST_SPEED {
        robot.v_swing
    } else {
        takeoff
    };
    let swing_path = interpolate_preview_path(
        &BoundaryState {
            p_cur: robot.p_swing,
            v_cur: v_dir,
            p_goal: goal,
            v_goal: landing,
        },
        config.interp,
    )?;
    let mut swing = RetimeProblem::new(swing_path.clone(), config.ds);
    swing.constraints.push(PathConstraint::Workspace {
        a_max: config.swing_a_max,
        v_max: config.swing_v_max,
    });
    swing.sdot_start = sdot_for(&robot.v_swing, &swing_path, 0.0);
    swing.sdot_end_max = Some(0.0);
    swing.gravity = *gravity;
    swing.method = config.method;
    let swing_profile = retime(&swing)?;
    let t_swing = swing_profile.duration;

    let sep = cache.sep(&fsm.footsteps, (k, k), gravity)?.clone();
    let ss_cone = cache.cone(&fsm.footsteps, (k, k), config)?.clone();
    let ds_cone = cache.cone(&fsm.footsteps, (k, k + 1), config)?.clone();
    let (com_path, com_profile, s_trans) = first_feasible(config, |ratio| {
        let path = com_preview_path(robot, targets, ratio, config.interp)?;
        let s_max = path.s_max();
        let sdot_start = sdot_for(&robot.v_g, &path, 0.0);
        let lowest = (sdot_start * t_swing).clamp(MIN_SWITCH_INDEX, 0.95 * s_max);
        let preferred = match sep_crossings(&path, &sep) {
            Ok((_, exit)) if exit > 0.0 => exit,
            _ => lowest,
        }
        .max(0.55 * lowest)
        .min(0.95 * s_max);
        let mut com = RetimeProblem::new(path.clone(), config.ds);
        com.sdot_start = sdot_start;
        com.sdot_end_max = Some(sdot_for(&targets.com_velocity, &path, s_max));
        com.gravity = *gravity;
        com.method = config.method;
        let mut last = None;
        for s_trans in switch_candidates(preferred, lowest, config.ds) {
            com.schedule = Some(StanceSchedule::with_switches(
                vec![ss_cone.clone(), ds_cone.clone()],
                &[s_trans],
                s_max,
            )?);
            // a start speed raised into the controllable interval needs
            // the bound of the speed actually used
            let mut sdot0 = sdot_start;
            for _ in 0..2 {
                let sdd_max = prop1_sdd_max(s_trans, t_swing, sdot0);
                match retime(&apply_sdd_upper_bound(&com, sdd_max, s_trans)) {
                    Ok(profile) => {
                        let t_com = profile.time_at(s_trans);
                        if t_com >= t_swing {
                            return Ok((path, profile, s_trans));
                        }
                        sdot0 = profile.sdot_start();
                        last = Some(LocoError::EarlySwitch {
                            s_trans,
                            t_com,
                            t_swing,
                        });
                    }
                    Err(e) => {
                        last = Some(e.into());
                        break;
                    }
                }
            }
        }
        Err(last.expect("at least one switch candidate"))
    })?;

    Ok(PreviewPlan {
        phase: fsm.phase,
        com_path: Some(com_path),
        com_profile: Some(com_profile),
        swing: Some(SwingPlan {
            path: swing_path,
            profile: swing_profile,
        }),
        t_swing: Some(t_swing),
        s_trans: Some(s_trans),
    })
}

/// COM-only plan under the double-support cone.
pub fn plan_ds_preview(
    robot: &ReducedRobotState,
    fsm: &FsmState,
    targets: &PreviewTargets,
    config: &ControllerConfig,
    cache: &mut StanceCache,
    gravity: &Vec3,
) -> Result<PreviewPlan, LocoError> {
    if fsm.phase.is_single() {
        return Err(LocoError::InvalidConfig(
            "double-support plan outside double support",
        ));
    }
    if (targets.com - robot.p_g).norm() <= 1e-12 && robot.v_g.norm() <= 1e-9 {
        return Ok(PreviewPlan::hold(fsm.phase));
    }
    let cone = cache
        .cone(&fsm.footsteps, fsm.stance_range(), config)?
        .clone();
    let (path, profile) = first_feasible(config, |ratio| {
        let path = com_preview_path(robot, targets, ratio, config.interp)?;
        let s_max = path.s_max();
        let mut com = RetimeProblem::new(path.clone(), config.ds);
        com.schedule = Some(StanceSchedule::single(cone.clone(), s_max));
        com.sdot_start = sdot_for(&robot.v_g, &path, 0.0);
        com.sdot_end_max = Some(sdot_for(&targets.com_velocity, &path, s_max));
        com.gravity = *gravity;
        com.method = config.method;
        Ok((path, retime(&com)?))
    })?;
    Ok(PreviewPlan {
        phase: fsm.phase,
        com_path: Some(path),
        com_profile: Some(profile),
        swing: None,
        t_swing: None,
        s_trans: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickStatus {
    Planned,
    /// Planning failed; the previous plan of the same phase was replayed.
    Degraded,
    /// Planning failed and no plan was available.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonStats {
    pub grid_points: usize,
    pub mean_edges: f64,
    pub max_edges: usize,
}

impl PolygonStats {
    fn of(profile: &VelocityProfile) -> Self {
        let e = &profile.polygon_edges;
        Self {
            grid_points: e.len(),
            mean_edges: e.iter().sum::<usize>() as f64 / e.len().max(1) as f64,
            max_edges: e.iter().copied().max().unwrap_or(0),
        }
    }
}

/// One JSON-lines log record per control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    #[serde(flatten)]
    pub phase: Phase,
    pub status: TickStatus,
    pub s_trans: Option<f64>,
    pub t_swing: Option<f64>,
    pub com_time_at_trans: Option<f64>,
    pub duration: f64,
    pub polygons: Option<PolygonStats>,
    pub a_g: Vec3,
    pub a_swing: Option<Vec3>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commands {
    pub a_g: Vec3,
    pub a_swing: Option<Vec3>,
    pub plan: Option<PreviewPlan>,
    /// Time into `plan` the accelerations were taken at.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub commands: Commands,
    pub record: TickRecord,
    /// Phase before this tick when the transition rules fired.
    pub previous_phase: Option<Phase>,
}

/// Stateful controller: phase machine, cached stance geometry and the last
/// successful plan for degraded ticks.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    gravity: Vec3,
    fsm: FsmState,
    targets: PreviewTargets,
    cache: StanceCache,
    last_plan: Option<(f64, PreviewPlan)>,
    failures: usize,
}

impl Controller {
    pub fn new(
        config: ControllerConfig,
        footsteps: Vec<ContactPatch>,
        gravity: Vec3,
    ) -> Result<Self, LocoError> {
        config.validate()?;
        let fsm = FsmState::start(footsteps)?;
        let targets = compute_preview_targets(&fsm, &config, &gravity)?;
        Ok(Self {
            config,
            gravity,
            fsm,
            targets,
            cache: StanceCache::default(),
            last_plan: None,
            failures: 0,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn fsm(&self) -> &FsmState {
        &self.fsm
    }

    pub fn targets(&self) -> &PreviewTargets {
        &self.targets
    }

    /// Phase transition, planning and extraction of the first accelerations
    /// at time `t`.
    pub fn mpc_tick(&mut self, robot: &ReducedRobotState, t: f64) -> Result<TickOutput, LocoError> {
        if !robot.is_finite() {
            return Err(LocoError::InvalidState);
        }
        let next = fsm_step(&self.fsm, robot, &self.targets, &self.config);
        let previous_phase = (next.phase != self.fsm.phase).then_some(self.fsm.phase);
        if previous_phase.is_some() {
            self.fsm = next;
            self.targets = compute_preview_targets(&self.fsm, &self.config, &self.gravity)?;
        }

        let planned = if self.fsm.phase.is_single() {
            plan_ss_preview(
                robot,
                &self.fsm,
                &self.targets,
                &self.config,
                &mut self.cache,
                &self.gravity,
            )
        } else {
            plan_ds_preview(
                robot,
                &self.fsm,
                &self.targets,
                &self.config,
                &mut self.cache,
                &self.gravity,
            )
        };

        let (status, plan, tau, error) = match planned {
            Ok(plan) => {
                self.failures = 0;
                self.last_plan = Some((t, plan.clone()));
                (TickStatus::Planned, Some(plan), 0.0, None)
            }
            Err(e) => {
                self.failures += 1;
                log::warn!(
                    "t = {t:.3}: {} planning failed: {e}",
                    self.fsm.phase.label()
                );
                if self.failures >= RETRY_LIMIT {
                    return Err(LocoError::PlannerFailed {
                        ticks: self.failures,
                        last: e.to_string(),
                    });
                }
                match &self.last_plan {
                    Some((t0, plan)) if plan.phase == self.fsm.phase => (
                        TickStatus::Degraded,
                        Some(plan.clone()),
                        t - t0,
                        Some(e.to_string()),
                    ),
                    _ => (TickStatus::Failed, None, 0.0, Some(e.to_string())),
                }
            }
        };

        let (a_g, a_swing) = match &plan {
            Some(p) => match self.config.command {
                CommandMode::Initial => p.accelerations(tau),
                CommandMode::TickMean => {
                    p.tick_accelerations(tau, self.config.control_period, robot)
                }
            },
            None => (Vec3::zeros(), self.fsm.phase.is_single().then(Vec3::zeros)),
        };
        let record = TickRecord {
            t,
            phase: self.fsm.phase,
            status,
            s_trans: plan.as_ref().and_then(|p| p.s_trans),
            t_swing: plan.as_ref().and_then(|p| p.t_swing),
            com_time_at_trans: plan.as_ref().and_then(|p| p.com_time_at_trans()),
            duration: plan.as_ref().map_or(0.0, |p| p.com_duration()),
            polygons: plan
                .as_ref()
                .and_then(|p| p.com_profile.as_ref())
                .map(PolygonStats::of),
            a_g,
            a_swing,
            error,
        };
        Ok(TickOutput {
            commands: Commands {
                a_g,
                a_swing,
                plan,
                tau,
            },
            record,
            previous_phase,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn foot(x: f64, y: f64) -> ContactPatch {
        ContactPatch::flat(Vec3::new(x, y, 0.0), 0.112, 0.065, 0.7)
    }

    fn walk(n: usize) -> Vec<ContactPatch> {
        (0..n)
            .map(|i| foot(0.25 * i as f64, if i % 2 == 0 { 0.095 } else { -0.095 }))
            .collect()
    }

    #[test]
    fn stance_indexing() {
        let mut fsm = FsmState::start(walk(4)).unwrap();
        assert_eq!(fsm.stance_range(), (0, 1));
        assert_eq!(fsm.next_footstep(), Some(&fsm.footsteps[2]));
        fsm.phase = Phase::Single(1);
        assert_eq!(fsm.stance(), &fsm.footsteps[1..=1]);
        assert_eq!(fsm.swing_origin(), Some(&fsm.footsteps[0]));
        fsm.phase = Phase::Double(3);
        assert!(fsm.is_final());
        assert!(FsmState::start(walk(1)).is_err());
    }

    #[test]
    fn center_of_a_rectangle_is_its_midpoint() {
        let r = Polygon2::from_ccw(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]);
        let c = polygon_center(&r).unwrap();
        assert!((c - Vec2::new(2.0, 0.5)).norm() < 1e-6);
    }

    #[test]
    fn default_config_is_valid() {
        ControllerConfig::default().validate().unwrap();
        let bad = ControllerConfig {
            safety_scale: 1.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
