//! Reduced-model simulation: double integrators for the COM and the swing
//! foot, procedural hill footholds and a ground-truth contact-force audit.

use crate::geom::{
    feasible_contact_forces, gravity_wrench, stance_wrench_cone, ContactPatch, GeomError, Vec3,
    WrenchConeMatrix,
};
use crate::loco::{
    Controller, ControllerConfig, LocoError, Phase, ReducedRobotState, TickRecord, TickStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{self, Write};
use std::time::Instant;
use thiserror::Error;

/// Steepest foothold inclination a hill profile may produce (degrees).
pub const MAX_SLOPE_DEG: f64 = 30.0;

/// Relative facet tolerance of the audit's cone test.
const AUDIT_FACET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("hill profile slope {max_deg:.2} deg exceeds {MAX_SLOPE_DEG} deg")]
    SlopeExceeded { max_deg: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Loco(#[from] LocoError),
}

/// Sinusoidal hill `z = A sin(2π x / λ)` walked along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HillProfile {
    pub amplitude: f64,
    pub wavelength: f64,
    /// Lateral distance between left and right footholds (m).
    pub gait_width: f64,
    pub step_length: f64,
    pub steps: usize,
    /// Abscissa of the first foothold.
    pub x0: f64,
    /// Uniform random perturbation of step lengths (m), drawn from the seed.
    pub jitter: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub friction: f64,
}

impl Default for HillProfile {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            wavelength: 4.0,
            gait_width: 0.19,
            step_length: 0.25,
            steps: 10,
            x0: 0.0,
            jitter: 0.0,
            half_length: 0.112,
            half_width: 0.065,
            friction: 0.7,
        }
    }
}

impl HillProfile {
    pub fn height(&self, x: f64) -> f64 {
        self.amplitude * (std::f64::consts::TAU * x / self.wavelength).sin()
    }

    pub fn slope(&self, x: f64) -> f64 {
        let k = std::f64::consts::TAU / self.wavelength;
        self.amplitude * k * (k * x).cos()
    }

    /// Steepest inclination of the profile, `atan(2πA/λ)`, in degrees.
    pub fn max_slope_deg(&self) -> f64 {
        (std::f64::consts::TAU * self.amplitude.abs() / self.wavelength)
            .atan()
            .to_degrees()
    }
}

/// Alternating left/right footholds along the hill. The patch normal is the
/// surface normal and the tangent is +x projected on the surface.
pub fn generate_hills_footsteps(
    profile: &HillProfile,
    seed: u64,
) -> Result<Vec<ContactPatch>, SimError> {
    if !(profile.wavelength > 0.0 && profile.step_length > 0.0) || profile.steps < 2 {
        return Err(SimError::InvalidScenario(
            "hill profile needs a positive wavelength, step length and two steps".into(),
        ));
    }
    let max_deg = profile.max_slope_deg();
    if max_deg > MAX_SLOPE_DEG + 1e-9 {
        return Err(SimError::SlopeExceeded { max_deg });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = profile.x0;
    let mut footsteps = Vec::with_capacity(profile.steps);
    for i in 0..profile.steps {
        if i > 0 {
            let j = if profile.jitter > 0.0 {
                rng.gen_range(-profile.jitter..=profile.jitter)
            } else {
                0.0
            };
            x += profile.step_length + j;
        }
        let side = if i % 2 == 0 { 0.5 } else { -0.5 };
        let center = Vec3::new(x, side * profile.gait_width, profile.height(x));
        let normal = Vec3::new(-profile.slope(x), 0.0, 1.0);
        footsteps.push(ContactPatch::from_normal(
            center,
            normal,
            Vec3::x(),
            profile.half_length,
            profile.half_width,
            profile.friction,
        )?);
    }
    Ok(footsteps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terrain {
    Footholds { footsteps: Vec<ContactPatch> },
    Hills(HillProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub terrain: Terrain,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_gravity")]
    pub gravity: Vec3,
    #[serde(default)]
    pub config: ControllerConfig,
    /// Defaults to rest above the first double-support stance.
    #[serde(default)]
    pub initial: Option<ReducedRobotState>,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_mass() -> f64 {
    38.0
}

fn default_gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -9.81)
}

fn default_max_time() -> f64 {
    60.0
}

impl Scenario {
    pub fn new(name: &str, terrain: Terrain) -> Self {
        Self {
            name: name.to_string(),
            terrain,
            mass: default_mass(),
            gravity: default_gravity(),
            config: ControllerConfig::default(),
            initial: None,
            max_time: default_max_time(),
            seed: 0,
        }
    }

    pub fn footsteps(&self) -> Result<Vec<ContactPatch>, SimError> {
        match &self.terrain {
            Terrain::Footholds { footsteps } => {
                for p in footsteps {
                    p.validate()?;
                }
                Ok(footsteps.clone())
            }
            Terrain::Hills(h) => generate_hills_footsteps(h, self.seed),
        }
    }

    pub fn initial_state(&self, footsteps: &[ContactPatch]) -> ReducedRobotState {
        self.initial.unwrap_or_else(|| {
            let c = (footsteps[0].center + footsteps[1].center) / 2.0;
            ReducedRobotState::at_rest(
                c + Vec3::new(0.0, 0.0, self.config.com_height),
                footsteps[0].center,
            )
        })
    }

    pub fn validate(&self) -> Result<Vec<ContactPatch>, SimError> {
        if !(self.mass > 0.0) {
            return Err(SimError::InvalidScenario("mass must be positive".into()));
        }
        if !(self.max_time > 0.0) {
            return Err(SimError::InvalidScenario(
                "max time must be positive".into(),
            ));
        }
        self.config.validate()?;
        let footsteps = self.footsteps()?;
        if footsteps.len() < 2 {
            return Err(LocoError::TooFewFootsteps.into());
        }
        let init = self.initial_state(&footsteps);
        if !init.is_finite() {
            return Err(LocoError::InvalidState.into());
        }
        if (init.p_swing - footsteps[0].center).norm() > self.config.epsilon {
            return Err(SimError::InvalidScenario(
                "initial swing foot must rest on the first foothold".into(),
            ));
        }
        Ok(footsteps)
    }
}

/// Semi-implicit Euler on both double integrators. Without a swing command
/// the swing foot stays in place.
pub fn integrate_step(
    robot: &ReducedRobotState,
    a_g: &Vec3,
    a_swing: Option<&Vec3>,
    dt: f64,
) -> ReducedRobotState {
    let mut next = *robot;
    next.v_g += a_g * dt;
    next.p_g += next.v_g * dt;
    if let Some(a) = a_swing {
        next.v_swing += a * dt;
        next.p_swing += next.v_swing * dt;
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    /// Contact forces were found by the force-decomposition program.
    pub feasible: bool,
    /// Largest facet value of the unscaled cone on the unit wrench.
    pub facet_max: f64,
    /// Total vertical contact force of the decomposition (N).
    pub normal_force: Option<f64>,
}

impl AuditRecord {
    /// Force decomposition and facet test give the same verdict.
    pub fn consistent(&self) -> bool {
        self.feasible == (self.facet_max <= AUDIT_FACET_TOL)
    }
}

/// Contact-force check of the commanded COM acceleration on a ground-truth
/// stance, with `cone` the unscaled wrench cone of `stance`.
pub fn audit_feasibility(
    robot: &ReducedRobotState,
    a_g: &Vec3,
    stance: &[ContactPatch],
    cone: &WrenchConeMatrix,
    mass: f64,
    gravity: &Vec3,
) -> AuditRecord {
    let w = gravity_wrench(mass, &robot.p_g, a_g, gravity, &cone.origin);
    let unit = w / w.norm().max(f64::MIN_POSITIVE);
    let facet_max = cone
        .rows
        .iter()
        .map(|r| r.dot(&unit) / r.norm())
        .fold(f64::NEG_INFINITY, f64::max);
    match feasible_contact_forces(stance, &w, &cone.origin) {
        Ok(f) => AuditRecord {
            feasible: true,
            facet_max,
            normal_force: Some(f.total_force().z),
        },
        Err(_) => AuditRecord {
            feasible: false,
            facet_max,
            normal_force: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Completed,
    PlannerFailed,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTick {
    #[serde(flatten)]
    pub record: TickRecord,
    pub p_g: Vec3,
    pub v_g: Vec3,
    pub p_swing: Vec3,
    pub v_swing: Vec3,
    pub audit: AuditRecord,
    /// Distance between the plan's COM prediction one period ahead and the
    /// integrated COM.
    pub prediction_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    #[serde(flatten)]
    pub phase: Phase,
    pub start: f64,
    pub duration: f64,
    /// Inclination of the footstep the phase is indexed by (degrees).
    pub slope_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Touchdown {
    pub step: usize,
    pub t: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            count: n,
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub ds: Stats,
    pub ss: Stats,
    pub ticks: usize,
    pub degraded_ticks: usize,
    pub audits_feasible: usize,
    pub max_facet: f64,
    pub max_touchdown_speed: f64,
    pub max_prediction_error: f64,
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub scenario: String,
    pub status: SimStatus,
    pub diagnostic: Option<String>,
    pub footsteps: Vec<ContactPatch>,
    pub ticks: Vec<SimTick>,
    pub phases: Vec<PhaseRecord>,
    pub touchdowns: Vec<Touchdown>,
    pub summary: SimSummary,
}

impl SimLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for t in &self.ticks {
            serde_json::to_writer(&mut w, t)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "phase,step,start,duration,slope_deg")?;
        for p in &self.phases {
            writeln!(
                w,
                "{},{},{:.4},{:.4},{:.2}",
                p.phase.label(),
                p.phase.step(),
                p.start,
                p.duration,
                p.slope_deg
            )?;
        }
        Ok(())
    }
}

/// Wall-clock planning latency of one tick; kept apart from [`SimLog`] so
/// that logs replay bit-identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickLatency {
    pub phase: Phase,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub log: SimLog,
    pub latency: Vec<TickLatency>,
}

impl SimRun {
    pub fn latency_stats(&self, single: bool) -> Stats {
        let xs: Vec<f64> = self
            .latency
            .iter()
            .filter(|l| l.phase.is_single() == single)
            .map(|l| l.millis)
            .collect();
        Stats::of(&xs)
    }
}

fn centroid(patches: &[ContactPatch]) -> Vec3 {
    patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64
}

/// Closed-loop run: tick the controller every control period, audit the
/// commanded COM acceleration on the unscaled stance, integrate, and stop
/// on completion (final double support with the COM at its goal), planner
/// failure or timeout.
pub fn run_simulation(scenario: &Scenario) -> Result<SimRun, SimError> {
    let footsteps = scenario.validate()?;
    let cfg = scenario.config;
    let dt = cfg.control_period;
    let mut controller = Controller::new(cfg, footsteps.clone(), scenario.gravity)?;
    let mut robot = scenario.initial_state(&footsteps);
    let mut cones: HashMap<(usize, usize), WrenchConeMatrix> = HashMap::new();

    let mut ticks = Vec::new();
    let mut latency = Vec::new();
    let mut phases = Vec::new();
    let mut touchdowns = Vec::new();
    let mut phase_start = 0.0;
    let mut diagnostic = None;
    let slope_of = |phase: Phase| footsteps[phase.step()].inclination().to_degrees();

    let mut n = 0usize;
    let status = loop {
        let t = n as f64 * dt;
        if t >= scenario.max_time {
            break SimStatus::Timeout;
        }
        let started = Instant::now();
        let out = match controller.mpc_tick(&robot, t) {
            Ok(out) => out,
            Err(LocoError::PlannerFailed { ticks, last }) => {
                diagnostic = Some(format!(
                    "planner failed on {ticks} consecutive ticks at t = {t:.3}: {last}"
                ));
                break SimStatus::PlannerFailed;
            }
            Err(e) => return Err(e.into()),
        };
        let phase = controller.fsm().phase;
        latency.push(TickLatency {
            phase,
            millis: started.elapsed().as_secs_f64() * 1e3,
        });

        if let Some(prev) = out.previous_phase {
            phases.push(PhaseRecord {
                phase: prev,
                start: phase_start,
                duration: t - phase_start,
                slope_deg: slope_of(prev),
            });
            phase_start = t;
            if let Phase::Single(k) = prev {
                touchdowns.push(Touchdown {
                    step: k + 1,
                    t,
                    speed: robot.v_swing.norm(),
                });
                // the trailing foot of the next single support
                robot.p_swing = footsteps[k].center;
                robot.v_swing = Vec3::zeros();
            }
        }

        let fsm = controller.fsm();
        if fsm.is_final() && (robot.p_g - controller.targets().com).norm() <= cfg.d_trans {
            phases.push(PhaseRecord {
                phase,
                start: phase_start,
                duration: t - phase_start,
                slope_deg: slope_of(phase),
            });
            break SimStatus::Completed;
        }

        let range = fsm.stance_range();
        if let std::collections::hash_map::Entry::Vacant(e) = cones.entry(range) {
            let stance = fsm.stance();
            e.insert(stance_wrench_cone(stance, &centroid(stance))?);
        }
        let audit = audit_feasibility(
            &robot,
            &out.commands.a_g,
            fsm.stance(),
            &cones[&range],
            scenario.mass,
            &scenario.gravity,
        );

        let next = integrate_step(&robot, &out.commands.a_g, out.commands.a_swing.as_ref(), dt);
        let predicted = match &out.commands.plan {
            Some(plan) => match (&plan.com_path, &plan.com_profile) {
                (Some(path), Some(prof)) => path.p(prof.sample(out.commands.tau + dt).0),
                _ => robot.p_g,
            },
            None => next.p_g,
        };
        ticks.push(SimTick {
            record: out.record,
            p_g: robot.p_g,
            v_g: robot.v_g,
            p_swing: robot.p_swing,
            v_swing: robot.v_swing,
            audit,
            prediction_error: (predicted - next.p_g).norm(),
        });
        robot = next;
        n += 1;
    };

    let final_time = n as f64 * dt;
    let durations = |single: bool| -> Vec<f64> {
        phases
            .iter()
            .filter(|p| p.phase.is_single() == single)
            .map(|p| p.duration)
            .collect()
    };
    let summary = SimSummary {
        ds: Stats::of(&durations(false)),
        ss: Stats::of(&durations(true)),
        ticks: ticks.len(),
        degraded_ticks: ticks
            .iter()
            .filter(|t| t.record.status != TickStatus::Planned)
            .count(),
        audits_feasible: ticks.iter().filter(|t| t.audit.feasible).count(),
        max_facet: ticks
            .iter()
            .map(|t| t.audit.facet_max)
            .fold(f64::NEG_INFINITY, f64::max),
        max_touchdown_speed: touchdowns.iter().map(|t| t.speed).fold(0.0, f64::max),
        max_prediction_error: ticks.iter().map(|t| t.prediction_error).fold(0.0, f64::max),
        final_time,
    };
    Ok(SimRun {
        log: SimLog {
            scenario: scenario.name.clone(),
            status,
            diagnostic,
            footsteps,
            ticks,
            phases,
            touchdowns,
            summary,
        },
        latency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semi_implicit_euler() {
        let r = ReducedRobotState::at_rest(Vec3::zeros(), Vec3::zeros());
        let a = Vec3::new(1.0, 0.0, 0.0);
        let mut s = r;
        for _ in 0..10 {
            s = integrate_step(&s, &a, None, 0.1);
        }
        assert!((s.v_g.x - 1.0).abs() < 1e-12);
        // p = Σ v_k dt with v_k = k a dt
        assert!((s.p_g.x - 0.55).abs() < 1e-12);
        assert_eq!(s.p_swing, r.p_swing);
    }

    #[test]
    fn flat_hills_are_a_straight_strip() {
        let h = HillProfile::default();
        let f = generate_hills_footsteps(&h, 1).unwrap();
        assert!(f
            .iter()
            .all(|p| p.center.z == 0.0 && p.inclination() == 0.0));
    }

    #[test]
    fn stats_population_std() {
        let s = Stats::of(&[1.0, 3.0]);
        assert_eq!((s.count, s.mean, s.std), (2, 2.0, 1.0));
    }
}
