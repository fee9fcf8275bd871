use crate::files::read_scenario;
use crate::svg::{Document, Panel};
use crate::{Failure, Method};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use topp_mpc::sim::{run_simulation, Scenario, SimLog, SimRun, SimStatus, Stats, Terrain};
use topp_mpc::topp::ReductionMethod;

#[derive(Debug, Serialize)]
pub struct PhaseRow {
    pub phase: &'static str,
    pub step: usize,
    pub start: f64,
    pub duration: f64,
    pub slope_deg: f64,
}

#[derive(Debug, Serialize)]
pub struct LatencyRow {
    pub method: ReductionMethod,
    pub ds_ms: Stats,
    pub ss_ms: Stats,
}

#[derive(Debug, Serialize)]
pub struct AuditSummary {
    pub ticks: usize,
    pub feasible: usize,
    pub max_facet: f64,
}

/// Outcome of `run`, written as `report.json` and `report.txt`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    /// Fully resolved scenario; running it again reproduces the log.
    pub scenario: Scenario,
    pub status: SimStatus,
    pub diagnostic: Option<String>,
    pub final_time: f64,
    pub phases: Vec<PhaseRow>,
    pub ds_duration: Stats,
    pub ss_duration: Stats,
    pub latency: Vec<LatencyRow>,
    pub audit: AuditSummary,
    pub max_touchdown_speed: f64,
}

impl RunReport {
    fn new(scenario: Scenario, runs: &[(ReductionMethod, SimRun)]) -> Self {
        let log = &runs[0].1.log;
        Self {
            scenario,
            status: log.status,
            diagnostic: log.diagnostic.clone(),
            final_time: log.summary.final_time,
            phases: log
                .phases
                .iter()
                .map(|p| PhaseRow {
                    phase: p.phase.label(),
                    step: p.phase.step(),
                    start: p.start,
                    duration: p.duration,
                    slope_deg: p.slope_deg,
                })
                .collect(),
            ds_duration: log.summary.ds,
            ss_duration: log.summary.ss,
            latency: runs
                .iter()
                .map(|(m, r)| LatencyRow {
                    method: *m,
                    ds_ms: r.latency_stats(false),
                    ss_ms: r.latency_stats(true),
                })
                .collect(),
            audit: AuditSummary {
                ticks: log.summary.ticks,
                feasible: log.summary.audits_feasible,
                max_facet: log.summary.max_facet,
            },
            max_touchdown_speed: log.summary.max_touchdown_speed,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let name = if self.scenario.name.is_empty() {
            "(unnamed)"
        } else {
            &self.scenario.name
        };
        let _ = writeln!(s, "scenario   {name}");
        let _ = writeln!(s, "status     {:?}", self.status);
        if let Some(d) = &self.diagnostic {
            let _ = writeln!(s, "diagnostic {d}");
        }
        let _ = writeln!(s, "final time {:.2} s", self.final_time);
        let _ = writeln!(
            s,
            "audit      {}/{} ticks feasible, max facet {:.3e}",
            self.audit.feasible, self.audit.ticks, self.audit.max_facet
        );
        let _ = writeln!(
            s,
            "touchdown  max speed {:.3} m/s",
            self.max_touchdown_speed
        );
        let _ = writeln!(s, "\nphase  step   start  duration  slope");
        for p in &self.phases {
            let _ = writeln!(
                s,
                "{:<5} {:>5} {:>7.2} {:>9.2} {:>6.1}",
                p.phase, p.step, p.start, p.duration, p.slope_deg
            );
        }
        let pm = |x: &Stats| format!("{:.2} ± {:.2} s ({})", x.mean, x.std, x.count);
        let _ = writeln!(s, "\nDS durations {}", pm(&self.ds_duration));
        let _ = writeln!(s, "SS durations {}", pm(&self.ss_duration));
        let _ = writeln!(s, "\nplanning latency per tick");
        let _ = writeln!(
            s,
            "{:<6} {:>20} {:>20}",
            "phase", "convex hull", "Bretl & Lall"
        );
        let cell = |m: ReductionMethod, single: bool| {
            self.latency
                .iter()
                .find(|r| r.method == m)
                .map(|r| {
                    let x = if single { &r.ss_ms } else { &r.ds_ms };
                    format!("{:.2} ± {:.2} ms", x.mean, x.std)
                })
                .unwrap_or_else(|| "-".into())
        };
        for (label, single) in [("DS", false), ("SS", true)] {
            let _ = writeln!(
                s,
                "{label:<6} {:>20} {:>20}",
                cell(ReductionMethod::DualHull, single),
                cell(ReductionMethod::BretlLall, single)
            );
        }
        s
    }
}

/// Side view (x, z) of the terrain, soles, COM and swing-foot paths.
pub fn side_view(log: &SimLog, terrain: &Terrain) -> String {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for p in &log.footsteps {
        xs.push(p.center.x);
        zs.push(p.center.z);
    }
    for t in &log.ticks {
        xs.extend([t.p_g.x, t.p_swing.x]);
        zs.extend([t.p_g.z, t.p_swing.z]);
    }
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min(&xs) - 0.3, min(&zs) - 0.2);
    let hi = (max(&xs) + 0.3, max(&zs) + 0.2);
    let mut panel = Panel::new(lo, hi, 1000.0, true, 20.0, 40.0);
    panel.label(
        0.0,
        -8.0,
        &format!(
            "{}: side view, COM (blue), swing foot (green), soles (black)",
            log.scenario
        ),
    );
    if let Terrain::Hills(h) = terrain {
        let n = 400;
        let ground: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let x = lo.0 + (hi.0 - lo.0) * i as f64 / n as f64;
                (x, h.height(x))
            })
            .collect();
        panel.polyline(&ground, "#b08850", 1.5);
    }
    for p in &log.footsteps {
        let a = p.center - p.tangent * p.half_length;
        let b = p.center + p.tangent * p.half_length;
        panel.polyline(&[(a.x, a.z), (b.x, b.z)], "black", 4.0);
    }
    let com: Vec<(f64, f64)> = log.ticks.iter().map(|t| (t.p_g.x, t.p_g.z)).collect();
    let swing: Vec<(f64, f64)> = log
        .ticks
        .iter()
        .map(|t| (t.p_swing.x, t.p_swing.z))
        .collect();
    panel.polyline(&swing, "#2a9d3a", 1.2);
    panel.polyline(&com, "#1f4fbf", 1.8);
    let mut doc = Document::new();
    doc.push(panel);
    doc.render()
}

fn write_outputs(out: &Path, report: &RunReport, log: &SimLog) -> Result<(), Failure> {
    fs::create_dir_all(out)?;
    log.write_jsonl(BufWriter::new(File::create(out.join("log.jsonl"))?))?;
    log.write_summary_csv(BufWriter::new(File::create(out.join("summary.csv"))?))?;
    fs::write(
        out.join("trajectory.svg"),
        side_view(log, &report.scenario.terrain),
    )?;
    fs::write(out.join("scenario.json"), pretty(&report.scenario))?;
    fs::write(out.join("report.json"), pretty(report))?;
    fs::write(out.join("report.txt"), report.to_text())?;
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

pub fn cmd_run(path: &Path, method: Method, out: &Path) -> Result<(), Failure> {
    let scenario = read_scenario(path)?;
    let mut runs = Vec::new();
    for m in method.reductions() {
        let mut sc = scenario.clone();
        sc.config.method = m;
        log::info!("running {} with {m:?}", path.display());
        let run = run_simulation(&sc).map_err(|e| Failure::input(e.to_string()))?;
        runs.push((m, run));
    }
    let mut resolved = scenario;
    resolved.config.method = runs[0].0;
    let report = RunReport::new(resolved, &runs);
    let log = &runs[0].1.log;
    write_outputs(out, &report, log)?;
    print!("{}", report.to_text());
    println!("\noutputs in {}", out.display());
    match log.status {
        SimStatus::Completed => Ok(()),
        SimStatus::PlannerFailed => Err(Failure {
            code: Failure::PLANNER_FAILED,
            message: log
                .diagnostic
                .clone()
                .unwrap_or_else(|| "planner failed".into()),
        }),
        SimStatus::Timeout => Err(Failure {
            code: Failure::TIMEOUT,
            message: format!("timeout after {:.2} s", log.summary.final_time),
        }),
    }
}
