use super::{
    dd::enumerate_cone_facets, wrench, ContactPatch, GeomError, Vec3, Wrench, WrenchConeMatrix,
};

/// Closed-form wrench cone of a rectangular contact: 4 friction, 4
/// center-of-pressure and 8 yaw-torque facets, expressed at `origin`.
pub fn rect_contact_wrench_cone(patch: &ContactPatch, origin: &Vec3) -> WrenchConeMatrix {
    let (x, y, mu) = (patch.half_length, patch.half_width, patch.friction);
    let mut local: Vec<[f64; 6]> = vec![
        [-1.0, 0.0, -mu, 0.0, 0.0, 0.0],
        [1.0, 0.0, -mu, 0.0, 0.0, 0.0],
        [0.0, -1.0, -mu, 0.0, 0.0, 0.0],
        [0.0, 1.0, -mu, 0.0, 0.0, 0.0],
        [0.0, 0.0, -y, 1.0, 0.0, 0.0],
        [0.0, 0.0, -y, -1.0, 0.0, 0.0],
        [0.0, 0.0, -x, 0.0, 1.0, 0.0],
        [0.0, 0.0, -x, 0.0, -1.0, 0.0],
    ];
    let yaw = -mu * (x + y);
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            // τz ≥ −μ(X+Y)fz + |Y fx − μτx| + |X fy − μτy|
            local.push([s1 * y, s2 * x, yaw, -s1 * mu, -s2 * mu, -1.0]);
            // τz ≤ μ(X+Y)fz − |Y fx + μτx| − |X fy + μτy|
            local.push([s1 * y, s2 * x, yaw, s1 * mu, s2 * mu, 1.0]);
        }
    }
    let rot = patch.rotation();
    let c = patch.center - origin;
    let rows = local
        .iter()
        .map(|u| {
            let uf = rot * Vec3::new(u[0], u[1], u[2]);
            let ut = rot * Vec3::new(u[3], u[4], u[5]);
            wrench(&(uf + c.cross(&ut)), &ut)
        })
        .collect();
    WrenchConeMatrix {
        rows,
        origin: *origin,
    }
}

/// Generator rays of the stance cone: for every patch, the four pyramid edges
/// applied at each of the four corners, as wrenches at `origin`.
pub fn stance_generators(patches: &[ContactPatch], origin: &Vec3) -> Vec<Wrench> {
    patches
        .iter()
        .flat_map(|p| {
            let edges = p.pyramid_edges();
            p.corners().into_iter().flat_map(move |corner| {
                let lever = corner - origin;
                edges.into_iter().map(move |f| wrench(&f, &lever.cross(&f)))
            })
        })
        .collect()
}

/// Facet form of the net wrench cone of a one- or two-patch stance.
pub fn stance_wrench_cone(
    patches: &[ContactPatch],
    origin: &Vec3,
) -> Result<WrenchConeMatrix, GeomError> {
    if patches.is_empty() || patches.len() > 2 {
        return Err(GeomError::InvalidPatch(
            "stance must have one or two patches",
        ));
    }
    for p in patches {
        p.validate()?;
    }
    let gens = stance_generators(patches, origin);
    let rows = enumerate_cone_facets(&gens)?;
    Ok(WrenchConeMatrix {
        rows,
        origin: *origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::feasible_contact_forces;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn foot() -> ContactPatch {
        ContactPatch::flat(Vec3::new(0.1, 0.05, 0.0), 0.112, 0.065, 0.7)
    }

    #[test]
    fn sixteen_facets() {
        let a = rect_contact_wrench_cone(&foot(), &Vec3::zeros());
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn centered_normal_force_is_interior() {
        let p = foot();
        let o = Vec3::new(-0.3, 0.2, 0.1);
        let a = rect_contact_wrench_cone(&p, &o);
        let f = Vec3::new(0.0, 0.0, 38.0 * 9.81);
        let w = wrench(&f, &(p.center - o).cross(&f));
        assert!(a.rows.iter().all(|r| r.dot(&w) < 0.0));
    }

    #[test]
    fn generators_satisfy_closed_form() {
        let a30 = 30f64.to_radians();
        let p = ContactPatch::from_normal(
            Vec3::new(1.0, -0.2, 0.4),
            Vec3::new(-a30.sin(), 0.0, a30.cos()),
            Vec3::x(),
            0.112,
            0.065,
            0.7,
        )
        .unwrap();
        let o = Vec3::new(0.5, 0.0, 0.0);
        let a = rect_contact_wrench_cone(&p, &o);
        for g in stance_generators(&[p], &o) {
            assert!(a.max_violation(&g) <= 1e-12 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn single_patch_enumeration_matches_closed_form() {
        let p = foot();
        let o = Vec3::new(0.0, 0.0, 0.0);
        let closed = rect_contact_wrench_cone(&p, &o).normalized();
        let enumerated = stance_wrench_cone(&[p], &o).unwrap();
        assert_eq!(enumerated.len(), 16);
        for r in &enumerated.rows {
            let best = closed
                .rows
                .iter()
                .map(|c| (c - r).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "facet {r:?} missing from closed form");
        }
    }

    #[test]
    fn double_support_facet_count_band() {
        // feet on differently inclined and yawed surfaces
        let left = ContactPatch::flat(Vec3::new(0.0, 0.095, 0.0), 0.112, 0.065, 0.7);
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
        let o = Vec3::new(0.125, 0.0, 0.0);
        let cone = stance_wrench_cone(&[left, right], &o).unwrap();
        assert!((50..=300).contains(&cone.len()), "{} facets", cone.len());
    }

    #[test]
    fn parallel_feet_have_fewer_facets() {
        // parallel contact planes share torque directions: far fewer facets
        let left = ContactPatch::flat(Vec3::new(0.0, 0.095, 0.0), 0.112, 0.065, 0.7);
        let right = ContactPatch::flat(Vec3::new(0.25, -0.095, 0.0), 0.112, 0.065, 0.7);
        let o = Vec3::new(0.125, 0.0, 0.0);
        let cone = stance_wrench_cone(&[left, right], &o).unwrap();
        assert!(cone.len() > 16 && cone.len() < 50, "{} facets", cone.len());
        for g in stance_generators(&[left, right], &o) {
            assert!(cone.max_violation(&g) <= 1e-9 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn coincident_patches_still_enumerate_single_cone() {
        let p = foot();
        let cone = stance_wrench_cone(&[p, p], &Vec3::zeros()).unwrap();
        assert_eq!(cone.len(), 16);
    }

    #[test]
    fn random_facet_points_decompose() {
        // closed form → span: random wrenches satisfying all facets admit forces
        let p = foot();
        let o = p.center;
        let a = rect_contact_wrench_cone(&p, &o);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 200 {
            let w = Wrench::from_fn(|i, _| {
                if i == 2 {
                    rng.gen_range(0.0..1.0)
                } else {
                    rng.gen_range(-0.5..0.5) * if i >= 3 { 0.2 } else { 1.0 }
                }
            });
            if a.max_violation(&w) <= 0.0 {
                assert!(feasible_contact_forces(&[p], &w, &o).is_ok());
                checked += 1;
            }
        }
    }
}
