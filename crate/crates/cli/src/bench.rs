use crate::Failure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use topp_mpc::geom::{hausdorff_distance, stance_wrench_cone, ContactPatch, HalfplaneSet, Vec3};
use topp_mpc::interp::{interpolate_preview_path, BoundaryState, InterpMode};
use topp_mpc::sim::Stats;
use topp_mpc::topp::{
    constraint_polygon_at, reduce_halfplanes, ReductionMethod, RetimeProblem, StanceSchedule,
};

const WARM_UP: usize = 10;
const CALLS_PER_TRIAL: usize = 10;
const EQUIVALENCE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    /// Single contact with the COM in static equilibrium.
    SingleStatic,
    /// Single contact with the COM outside the static-equilibrium region.
    SingleDynamic,
    Double,
}

impl Class {
    fn label(self) -> &'static str {
        match self {
            Class::SingleStatic => "single (SE)",
            Class::SingleDynamic => "single (NSE)",
            Class::Double => "double",
        }
    }
}

pub struct BenchRow {
    pub label: &'static str,
    pub before: Stats,
    pub after: Stats,
    pub hull_ms: Stats,
    pub bl_ms: Stats,
    pub max_hausdorff: f64,
}

fn foot(x: f64, y: f64) -> ContactPatch {
    ContactPatch::flat(Vec3::new(x, y, 0.0), 0.112, 0.065, 0.7)
}

/// Right foot raised, inclined by 15° and yawed by 20°: a double support
/// whose soles are not coplanar.
fn uneven_double() -> Result<Vec<ContactPatch>, Failure> {
    let (a, yaw) = (15f64.to_radians(), 20f64.to_radians());
    let right = ContactPatch::from_normal(
        Vec3::new(0.25, -0.095, 0.1),
        Vec3::new(-a.sin(), 0.0, a.cos()),
        Vec3::new(yaw.cos(), yaw.sin(), 0.0),
        0.112,
        0.065,
        0.7,
    )
    .map_err(|e| Failure::input(e.to_string()))?;
    Ok(vec![foot(0.0, 0.095), right])
}

/// Random COM path segment around the stance at walking height; one path
/// index per sample.
fn random_sample(
    rng: &mut ChaCha8Rng,
    patches: &[ContactPatch],
    schedule: &StanceSchedule,
) -> Option<(RetimeProblem, f64)> {
    let c = patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64;
    let mut jitter = || {
        Vec3::new(
            rng.gen_range(-0.12..0.12),
            rng.gen_range(-0.08..0.08),
            rng.gen_range(0.72..0.85),
        )
    };
    let (p_cur, p_goal) = (c + jitter(), c + jitter());
    let b = BoundaryState {
        p_cur,
        v_cur: Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0),
        p_goal,
        v_goal: Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0),
    };
    let path = interpolate_preview_path(&b, InterpMode::Houba).ok()?;
    let mut p = RetimeProblem::new(path, 0.1);
    p.schedule = Some(schedule.clone());
    Some((p, rng.gen_range(0.0..1.0)))
}

fn time_calls(sets: &[HalfplaneSet], method: ReductionMethod) -> Stats {
    for h in sets.iter().cycle().take(WARM_UP) {
        let _ = reduce_halfplanes(h, method);
    }
    let per_trial: Vec<f64> = sets
        .iter()
        .map(|h| {
            let start = Instant::now();
            for _ in 0..CALLS_PER_TRIAL {
                std::hint::black_box(reduce_halfplanes(std::hint::black_box(h), method).ok());
            }
            start.elapsed().as_secs_f64() * 1e3 / CALLS_PER_TRIAL as f64
        })
        .collect();
    Stats::of(&per_trial)
}

fn bench_class(class: Class, trials: usize, rng: &mut ChaCha8Rng) -> Result<BenchRow, Failure> {
    let patches = match class {
        Class::Double => uneven_double()?,
        _ => vec![foot(0.25, -0.095)],
    };
    let o = patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64;
    let scaled: Vec<_> = patches.iter().map(|p| p.scaled(0.75)).collect();
    let cone = stance_wrench_cone(&scaled, &o).map_err(|e| Failure::input(e.to_string()))?;
    let schedule = StanceSchedule::single(cone, 1.0);

    let (mut before, mut after, mut sets) = (Vec::new(), Vec::new(), Vec::new());
    let mut max_hausdorff: f64 = 0.0;
    let mut attempts = 0;
    while sets.len() < trials {
        attempts += 1;
        if attempts > 1000 * trials.max(1) {
            return Err(Failure::input(format!(
                "only {} {} samples found",
                sets.len(),
                class.label()
            )));
        }
        let Some((p, s)) = random_sample(rng, &patches, &schedule) else {
            continue;
        };
        let Ok(poly) = constraint_polygon_at(&p, s) else {
            continue;
        };
        let static_eq = poly.contains_origin(1e-9);
        let wanted = match class {
            Class::SingleStatic => static_eq,
            Class::SingleDynamic => !static_eq,
            Class::Double => true,
        };
        if !wanted {
            continue;
        }
        let h = p.halfplanes_at(s);
        let bl = reduce_halfplanes(&h, ReductionMethod::BretlLall)
            .map_err(|e| Failure::input(e.to_string()))?;
        max_hausdorff = max_hausdorff.max(hausdorff_distance(&poly.polygon, &bl));
        before.push(poly.row_count as f64);
        after.push(poly.edge_count as f64);
        sets.push(h);
    }
    Ok(BenchRow {
        label: class.label(),
        before: Stats::of(&before),
        after: Stats::of(&after),
        hull_ms: time_calls(&sets, ReductionMethod::DualHull),
        bl_ms: time_calls(&sets, ReductionMethod::BretlLall),
        max_hausdorff,
    })
}

pub fn bench_polygons(trials: usize, seed: u64) -> Result<Vec<BenchRow>, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [Class::SingleStatic, Class::SingleDynamic, Class::Double]
        .into_iter()
        .map(|c| bench_class(c, trials, &mut rng))
        .collect()
}

pub fn cmd_bench_polygons(trials: usize, seed: u64) -> Result<(), Failure> {
    if trials == 0 {
        return Err(Failure::input("at least one trial is needed"));
    }
    let rows = bench_polygons(trials, seed)?;
    println!("contact,trials,ineq_before,ineq_after,ineq_after_std,hull_ms,hull_ms_std,bl_ms,bl_ms_std,equivalent,max_hausdorff");
    for r in rows {
        println!(
            "{},{},{:.1},{:.2},{:.2},{:.4},{:.4},{:.4},{:.4},{},{:.2e}",
            r.label,
            r.after.count,
            r.before.mean,
            r.after.mean,
            r.after.std,
            r.hull_ms.mean,
            r.hull_ms.std,
            r.bl_ms.mean,
            r.bl_ms.std,
            if r.max_hausdorff < EQUIVALENCE_TOL {
                "pass"
            } else {
                "fail"
            },
            r.max_hausdorff
        );
    }
    Ok(())
}
