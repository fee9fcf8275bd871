mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topp_mpc::geom::{
    bretl_lall_projection, convex_hull_2d, feasible_contact_forces, gravity_wrench,
    halfplane_support_oracle, hausdorff_distance, polygon_from_dual_hull, rect_contact_wrench_cone,
    stance_generators, stance_wrench_cone, static_equilibrium_polygon, ContactPatch, HalfplaneSet,
    Vec2, Vec3, Wrench, WrenchConeMatrix,
};

const REL_SLACK: f64 = 1e-7;

fn stances() -> Vec<(&'static str, Vec<ContactPatch>)> {
    vec![
        ("flat single", vec![foot(0.1, 0.05, 0.0)]),
        ("sloped single", vec![sloped_foot(0.3, -0.1, 0.2, 30.0)]),
        (
            "flat double",
            vec![foot(0.0, 0.095, 0.0), foot(0.25, -0.095, 0.0)],
        ),
        ("inclined double", inclined_double().to_vec()),
    ]
}

/// Random nonnegative combination of generator rays.
fn span_sample(gens: &[Wrench], rng: &mut ChaCha8Rng) -> Wrench {
    let mut w = Wrench::zeros();
    for g in gens {
        if rng.gen_bool(0.5) {
            w += g * rng.gen_range(0.0..1.0);
        }
    }
    w
}

/// Random wrench inside the facet description, by rejection from a box
/// around the mean generator.
fn facet_sample(cone: &WrenchConeMatrix, gens: &[Wrench], rng: &mut ChaCha8Rng) -> Wrench {
    let mean = gens.iter().sum::<Wrench>() / gens.len() as f64;
    loop {
        let w = mean + Wrench::from_fn(|_, _| rng.gen_range(-1.0..1.0)) * mean.norm();
        if cone.max_violation(&w) <= 0.0 {
            return w;
        }
    }
}

#[test]
fn span_and_facet_descriptions_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, patches) in stances() {
        let o = Vec3::new(0.1, 0.0, 0.05);
        let cone = stance_wrench_cone(&patches, &o).unwrap();
        let gens = stance_generators(&patches, &o);
        let mut violations = 0;
        for _ in 0..10_000 {
            let w = span_sample(&gens, &mut rng);
            if !cone.normalized().contains(&w, REL_SLACK) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "{name}: span samples outside facets");
        for _ in 0..300 {
            let w = facet_sample(&cone, &gens, &mut rng);
            assert!(
                feasible_contact_forces(&patches, &w, &o).is_ok(),
                "{name}: facet sample {w:?} has no forces"
            );
        }
    }
}

#[test]
fn closed_form_cone_contains_corner_force_wrenches() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = sloped_foot(0.2, 0.1, 0.3, 20.0);
    let o = Vec3::new(-0.1, 0.3, 0.0);
    let cone = rect_contact_wrench_cone(&p, &o).normalized();
    assert_eq!(cone.len(), 16);
    let edges = p.pyramid_edges();
    for _ in 0..10_000 {
        let mut w = Wrench::zeros();
        for c in p.corners() {
            let f: Vec3 = edges.iter().map(|e| e * rng.gen_range(0.0..1.0)).sum();
            let t = (c - o).cross(&f);
            w += Wrench::new(f.x, f.y, f.z, t.x, t.y, t.z);
        }
        assert!(cone.contains(&w, REL_SLACK));
    }
}

#[test]
fn force_program_agrees_with_facets_near_the_boundary() {
    let patches = inclined_double();
    let o = Vec3::new(0.1, 0.0, 0.0);
    let cone = stance_wrench_cone(&patches, &o).unwrap().normalized();
    let gens = stance_generators(&patches, &o);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let inside = facet_sample(&cone, &gens, &mut rng);
        let row = cone.rows[rng.gen_range(0..cone.len())];
        // push the sample just past one facet
        let excess = 1e-3 * inside.norm();
        let w = inside + row * (excess - row.dot(&inside));
        let verdict = cone.max_violation(&w) <= 0.0;
        assert!(!verdict);
        assert!(feasible_contact_forces(&patches, &w, &o).is_err());
    }
}

#[test]
fn inclined_sep_matches_the_sole_projection() {
    let p = sloped_foot(0.0, 0.0, 0.0, 30.0);
    let sep = static_equilibrium_polygon(&[p], 38.0, &G).unwrap();
    let sole: Vec<Vec2> = p.corners().iter().map(|c| c.xy()).collect();
    let sole = convex_hull_2d(&sole);
    for v in &sep.vertices {
        assert!(sole.contains(v, 1e-9));
    }
    // with tan 30° < μ the vertical weight may act anywhere on the sole
    assert!(hausdorff_distance(&sep, &sole) < 1e-6);
    let slippery = ContactPatch { friction: 0.5, ..p };
    assert!(static_equilibrium_polygon(&[slippery], 38.0, &G).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..400 {
        let q = Vec2::new(rng.gen_range(-0.15..0.15), rng.gen_range(-0.1..0.1));
        let com = Vec3::new(q.x, q.y, 0.8);
        let w = gravity_wrench(38.0, &com, &Vec3::zeros(), &G, &p.center);
        let lp = feasible_contact_forces(&[p], &w, &p.center).is_ok();
        if sep.distance(&q) > 1e-6 {
            assert!(!lp, "{q:?} outside SEP but statically feasible");
        } else if sep.contains(&q, -1e-6) {
            assert!(lp, "{q:?} inside SEP but infeasible");
        }
    }
}

#[test]
fn sep_translates_with_the_scene() {
    let v = Vec3::new(1.3, -0.4, 0.7);
    for (name, patches) in stances() {
        let sep = static_equilibrium_polygon(&patches, 38.0, &G).unwrap();
        let moved: Vec<_> = patches.iter().map(|p| p.translated(v)).collect();
        let sep2 = static_equilibrium_polygon(&moved, 38.0, &G).unwrap();
        let d = hausdorff_distance(&sep.translated(&v.xy()), &sep2);
        assert!(d < 1e-6, "{name}: {d}");
        // mass does not change the region
        let light = static_equilibrium_polygon(&patches, 1.0, &G).unwrap();
        assert!(hausdorff_distance(&sep, &light) < 1e-6, "{name}");
    }
}

#[test]
fn static_forces_carry_the_weight_on_every_stance() {
    for (name, patches) in stances() {
        let sep = static_equilibrium_polygon(&patches, 38.0, &G).unwrap();
        let c = sep.centroid();
        let z = patches[0].center.z + 0.8;
        let o = patches[0].center;
        let w = gravity_wrench(38.0, &Vec3::new(c.x, c.y, z), &Vec3::zeros(), &G, &o);
        let f = feasible_contact_forces(&patches, &w, &o).expect(name);
        assert!((f.total_force() - Vec3::new(0.0, 0.0, 38.0 * 9.81)).norm() < 1e-6);
        assert!((f.net_wrench(&patches, &o) - w).norm() < 1e-6 * w.norm());
    }
}

fn halfplane_sets() -> impl Strategy<Value = HalfplaneSet> {
    prop::collection::vec((0.0..std::f64::consts::TAU, 0.2..2.0f64), 3..40).prop_map(|rows| {
        let mut h = HalfplaneSet::new();
        // a bounding triangle keeps every set bounded
        for k in 0..3 {
            let a = k as f64 * std::f64::consts::TAU / 3.0;
            h.push(Vec2::new(a.cos(), a.sin()), 3.0);
        }
        for (a, off) in rows {
            h.push(Vec2::new(a.cos(), a.sin()), off);
        }
        h
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_contains_every_point(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..80)) {
        let pts: Vec<Vec2> = pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let hull = convex_hull_2d(&pts);
        prop_assume!(hull.len() >= 3);
        prop_assert!(hull.is_convex(1e-9));
        for p in &pts {
            prop_assert!(hull.contains(p, 1e-9));
        }
        for v in &hull.vertices {
            prop_assert!(pts.iter().any(|p| (p - v).norm() == 0.0));
        }
    }

    #[test]
    fn dual_hull_is_the_halfplane_intersection(h in halfplane_sets()) {
        let red = polygon_from_dual_hull(&h).unwrap();
        let poly = &red.polygon;
        for v in &poly.vertices {
            prop_assert!(h.max_violation(v) <= 1e-8);
        }
        let bl = bretl_lall_projection(halfplane_support_oracle(&h), 1e-9).unwrap();
        prop_assert!(hausdorff_distance(poly, &bl) < 1e-5);
        // every row either supports the polygon or removing it changes nothing
        for skip in 0..h.len() {
            let (n, off) = h.iter().nth(skip).unwrap();
            let touches = poly.vertices.iter().any(|v| (n.dot(v) - off).abs() <= 1e-7 * n.norm());
            if !touches {
                let mut rest = HalfplaneSet::new();
                for (i, (m, c)) in h.iter().enumerate() {
                    if i != skip {
                        rest.push(*m, c);
                    }
                }
                let other = polygon_from_dual_hull(&rest).unwrap().polygon;
                prop_assert!(hausdorff_distance(poly, &other) < 1e-8);
            }
        }
    }
}
