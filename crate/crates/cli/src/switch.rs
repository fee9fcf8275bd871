use crate::files::read_scenario;
use crate::svg::{Document, Panel};
use crate::Failure;
use std::fmt::Write as _;
use std::path::Path;
use topp_mpc::geom::{
    stance_wrench_cone, static_equilibrium_polygon, ContactPatch, Polygon2, Vec2, Vec3,
};
use topp_mpc::interp::{HermiteCurve, PathSpline};
use topp_mpc::loco::{polygon_center, scaled_stance};
use topp_mpc::topp::{
    constraint_polygon_at, min_feasible_switch, sep_crossings, switch_feasible, RetimeProblem,
    StanceSchedule, ToppError,
};

/// Half-width of the plotted `(s̈, ṡ²)` window.
const VIEW: f64 = 15.0;
const DEFAULT_SNAPSHOTS: usize = 6;

pub struct Snapshot {
    pub s: f64,
    pub stance: &'static str,
    pub polygon: Polygon2,
    pub edges: usize,
    pub origin_inside: bool,
    pub com_in_sep: bool,
    /// The same two flags under the single-support stance alone.
    pub ss_origin_inside: bool,
    pub com_in_ss_sep: bool,
}

impl Snapshot {
    pub fn agree(&self) -> bool {
        self.origin_inside == self.com_in_sep && self.ss_origin_inside == self.com_in_ss_sep
    }
}

pub struct SwitchReport {
    pub step: usize,
    pub s_max: f64,
    /// SEP entry and exit of the support foot.
    pub s_star: (f64, f64),
    pub quasi_static_feasible: bool,
    pub s1_critical: Option<f64>,
    pub snapshots: Vec<Snapshot>,
}

fn err(e: impl std::fmt::Display) -> Failure {
    Failure::input(e.to_string())
}

fn lifted(poly: &Polygon2, z: f64) -> Result<Vec3, Failure> {
    let c = polygon_center(poly).map_err(err)?;
    Ok(Vec3::new(c.x, c.y, z))
}

/// COM path from rest over the previous double support, through single
/// support on foot `step`, to rest over the next double support, with the
/// three stance cones and static-equilibrium regions (safety-scaled).
pub fn analyze(
    footsteps: &[ContactPatch],
    step: usize,
    scenario: &topp_mpc::sim::Scenario,
    at: &[f64],
) -> Result<SwitchReport, Failure> {
    if step == 0 || step + 1 >= footsteps.len() {
        return Err(Failure::input(format!(
            "step must be in 1..={} for {} footsteps",
            footsteps.len().saturating_sub(2),
            footsteps.len()
        )));
    }
    let cfg = &scenario.config;
    let g = scenario.gravity;
    let o = footsteps[step].center;
    let stances = [
        scaled_stance(&footsteps[step - 1..=step], cfg),
        scaled_stance(&footsteps[step..=step], cfg),
        scaled_stance(&footsteps[step..=step + 1], cfg),
    ];
    let mut cones = Vec::new();
    let mut seps = Vec::new();
    for st in &stances {
        cones.push(stance_wrench_cone(st, &o).map_err(err)?);
        seps.push(static_equilibrium_polygon(st, 1.0, &g).map_err(err)?);
    }
    let height = |patches: &[ContactPatch]| {
        patches.iter().map(|p| p.center.z).sum::<f64>() / patches.len() as f64 + cfg.com_height
    };
    let start = lifted(&seps[0], height(&stances[0]))?;
    let via = lifted(&seps[1], height(&stances[1]))?;
    let goal = lifted(&seps[2], height(&stances[2]))?;
    let mid = (goal - start) * 0.5;
    let path = PathSpline::from_segments(&[
        (HermiteCurve::new(start, via - start, via, mid), 1.0),
        (HermiteCurve::new(via, mid, goal, goal - via), 1.0),
    ])
    .ok_or_else(|| Failure::input("degenerate path"))?;
    let mut base = RetimeProblem::new(path, cfg.ds);
    base.gravity = g;
    base.method = cfg.method;

    let (s1, s2) = match sep_crossings(&base.path, &seps[1]) {
        Ok(c) => c,
        Err(ToppError::NoCrossing) => {
            return Err(Failure::input(format!(
                "NoCrossing: the COM path never enters the static-equilibrium region of foot {step}"
            )))
        }
        Err(e) => return Err(err(e)),
    };
    let quasi_static_feasible = switch_feasible(&base, &cones, s1, &[s2]).map_err(err)?;
    let s1_critical = if quasi_static_feasible {
        Some(min_feasible_switch(&base, &cones, s1, &[s2]).map_err(err)?)
    } else {
        None
    };

    let s_max = base.path.s_max();
    let samples: Vec<f64> = if at.is_empty() {
        (0..DEFAULT_SNAPSHOTS)
            .map(|i| s_max * i as f64 / (DEFAULT_SNAPSHOTS - 1) as f64)
            .collect()
    } else {
        at.to_vec()
    };
    let schedule = StanceSchedule::with_switches(cones.clone(), &[s1, s2], s_max).map_err(err)?;
    let problem = RetimeProblem {
        schedule: Some(schedule),
        ..base.clone()
    };
    let single = RetimeProblem {
        schedule: Some(StanceSchedule::single(cones[1].clone(), s_max)),
        ..base.clone()
    };
    let origin_flag = |problem: &RetimeProblem, s: f64| match constraint_polygon_at(problem, s) {
        Ok(c) => Ok(Some(c)),
        Err(ToppError::EmptyPolygon { .. }) => Ok(None),
        Err(e) => Err(err(e)),
    };
    let mut snapshots = Vec::new();
    for s in samples {
        if !(0.0..=s_max).contains(&s) {
            return Err(Failure::input(format!(
                "snapshot s = {s} outside [0, {s_max}]"
            )));
        }
        let k = if s < s1 {
            0
        } else if s < s2 {
            1
        } else {
            2
        };
        let p = base.path.p(s);
        let xy = Vec2::new(p.x, p.y);
        let (polygon, edges, origin_inside) = match origin_flag(&problem, s)? {
            Some(c) => (c.polygon.clone(), c.edge_count, c.contains_origin(1e-9)),
            None => (Polygon2::empty(), 0, false),
        };
        let ss_origin_inside = origin_flag(&single, s)?.is_some_and(|c| c.contains_origin(1e-9));
        snapshots.push(Snapshot {
            s,
            stance: ["DS", "SS", "DS"][k],
            polygon,
            edges,
            origin_inside,
            com_in_sep: seps[k].contains(&xy, 0.0),
            ss_origin_inside,
            com_in_ss_sep: seps[1].contains(&xy, 0.0),
        });
    }
    Ok(SwitchReport {
        step,
        s_max,
        s_star: (s1, s2),
        quasi_static_feasible,
        s1_critical,
        snapshots,
    })
}

impl SwitchReport {
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(
            t,
            "single support on foot {}, path index in [0, {:.2}]",
            self.step, self.s_max
        );
        let _ = writeln!(t, "s*1 (SEP entry)      {:.4}", self.s_star.0);
        let _ = writeln!(t, "s*2 (SEP exit)       {:.4}", self.s_star.1);
        let _ = writeln!(
            t,
            "quasi-static switch  {}",
            if self.quasi_static_feasible {
                "feasible"
            } else {
                "infeasible"
            }
        );
        match self.s1_critical {
            Some(c) => {
                let _ = writeln!(t, "s1_critical          {c:.4}");
            }
            None => {
                let _ = writeln!(t, "s1_critical          none");
            }
        }
        let _ = writeln!(
            t,
            "\n     s  stance  edges  origin_in_polygon  com_in_sep  ss_origin  com_in_ss_sep  agree"
        );
        for s in &self.snapshots {
            let _ = writeln!(
                t,
                "{:>6.3}  {:<6} {:>6}  {:>17}  {:>10}  {:>9}  {:>13}  {:>5}",
                s.s,
                s.stance,
                s.edges,
                s.origin_inside,
                s.com_in_sep,
                s.ss_origin_inside,
                s.com_in_ss_sep,
                s.agree()
            );
        }
        t
    }

    /// One `(s̈, ṡ²)` panel per snapshot with the origin marked in red.
    pub fn to_svg(&self) -> String {
        let mut doc = Document::new();
        let size = 260.0;
        let cols = 3;
        for (i, snap) in self.snapshots.iter().enumerate() {
            let left = 20.0 + (i % cols) as f64 * (size + 30.0);
            let top = 40.0 + (i / cols) as f64 * (size + 60.0);
            let mut panel = Panel::new(
                (-VIEW, -1.0),
                (VIEW, 2.0 * VIEW - 1.0),
                size,
                true,
                left,
                top,
            );
            panel.label(
                0.0,
                -8.0,
                &format!("s = {:.3} ({}), {} edges", snap.s, snap.stance, snap.edges),
            );
            let view = snap
                .polygon
                .clip(&Vec2::x(), VIEW)
                .clip(&-Vec2::x(), VIEW)
                .clip(&Vec2::y(), 2.0 * VIEW - 1.0);
            if !view.vertices.is_empty() {
                let pts: Vec<(f64, f64)> = view.vertices.iter().map(|v| (v.x, v.y)).collect();
                panel.polygon(&pts, "#7aa6d8", "#1f4fbf");
            }
            panel.polyline(&[(-VIEW, 0.0), (VIEW, 0.0)], "#999", 0.8);
            panel.polyline(&[(0.0, -1.0), (0.0, 2.0 * VIEW - 1.0)], "#999", 0.8);
            panel.dot(0.0, 0.0, 4.0, "red");
            panel.label(
                4.0,
                panel.height() - 4.0,
                "horizontal: path acceleration, vertical: squared path speed",
            );
            doc.push(panel);
        }
        doc.render()
    }
}

pub fn cmd_switch_analysis(
    path: &Path,
    step: usize,
    at: &[f64],
    svg: Option<&Path>,
) -> Result<(), Failure> {
    let scenario = read_scenario(path)?;
    let footsteps = scenario.footsteps().map_err(err)?;
    let report = analyze(&footsteps, step, &scenario, at)?;
    print!("{}", report.to_text());
    if let Some(file) = svg {
        std::fs::write(file, report.to_svg())?;
        println!("\npolygons in {}", file.display());
    }
    Ok(())
}
