//! Facet enumeration of a finitely generated 6D cone by the double-description
//! method.
//!
//! The facets of `cone(g_1..g_m)` are the extreme rays of its polar
//! `{a : g_j·a ≤ 0}`. Those rays are built incrementally: start from the
//! simplicial cone of six independent generators, then insert the remaining
//! constraints one at a time, combining adjacent rays across each new
//! hyperplane. Adjacency uses the combinatorial zero-set test.

use super::{GeomError, Wrench};
use nalgebra::Matrix6;

const DIM: usize = 6;
const ZERO_TOL: f64 = 1e-9;

#[derive(Clone)]
struct Ray {
    dir: Wrench,
    zeros: u128,
}

/// Unit facet normals `a` with `a·g ≤ 0` for every generator `g`. Each returned
/// row supports a facet, so the description is irredundant.
pub fn enumerate_cone_facets(generators: &[Wrench]) -> Result<Vec<Wrench>, GeomError> {
    if generators.len() > 128 {
        return Err(GeomError::InvalidPatch("at most 128 generators supported"));
    }
    let gens: Vec<Wrench> = generators
        .iter()
        .filter_map(|g| g.try_normalize(1e-14))
        .collect();
    let basis = independent_subset(&gens).ok_or(GeomError::DegenerateCone)?;

    let mut b = Matrix6::zeros();
    for (i, &j) in basis.iter().enumerate() {
        b.set_row(i, &gens[j].transpose());
    }
    let inv = b.try_inverse().ok_or(GeomError::DegenerateCone)?;
    let all_basis: u128 = basis.iter().fold(0, |acc, &j| acc | (1u128 << j));
    let mut rays: Vec<Ray> = (0..DIM)
        .map(|k| Ray {
            dir: (-inv.column(k)).normalize(),
            zeros: all_basis & !(1u128 << basis[k]),
        })
        .collect();

    for (j, h) in gens.iter().enumerate() {
        if all_basis & (1u128 << j) != 0 {
            continue;
        }
        let values: Vec<f64> = rays.iter().map(|r| h.dot(&r.dir)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| values[i] > ZERO_TOL).collect();
        if pos.is_empty() {
            for (r, &v) in rays.iter_mut().zip(&values) {
                if v.abs() <= ZERO_TOL {
                    r.zeros |= 1u128 << j;
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| values[i] < -ZERO_TOL).collect();

        let mut created = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros & rays[n].zeros;
                if (common.count_ones() as usize) < DIM - 2 {
                    continue;
                }
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(k, r)| k != p && k != n && (r.zeros & common) == common);
                if blocked {
                    continue;
                }
                let dir = rays[n].dir * values[p] - rays[p].dir * values[n];
                if let Some(dir) = dir.try_normalize(1e-14) {
                    created.push(Ray {
                        dir,
                        zeros: common | (1u128 << j),
                    });
                }
            }
        }

        let mut next = Vec::with_capacity(rays.len() + created.len());
        for (r, &v) in rays.iter().zip(&values) {
            if v > ZERO_TOL {
                continue;
            }
            let mut r = r.clone();
            if v >= -ZERO_TOL {
                r.zeros |= 1u128 << j;
            }
            next.push(r);
        }
        next.extend(created);
        rays = next;
    }

    let mut facets: Vec<Wrench> = Vec::with_capacity(rays.len());
    for r in rays {
        if facets.iter().all(|f| (f - r.dir).norm() > 1e-9) {
            facets.push(r.dir);
        }
    }
    Ok(facets)
}

/// Indices of six linearly independent generators, chosen greedily by largest
/// residual after orthogonal projection.
fn independent_subset(gens: &[Wrench]) -> Option<Vec<usize>> {
    let mut basis: Vec<Wrench> = Vec::new();
    let mut picked = Vec::new();
    for _ in 0..DIM {
        let mut best: Option<(usize, f64, Wrench)> = None;
        for (i, g) in gens.iter().enumerate() {
            if picked.contains(&i) {
                continue;
            }
            let mut r = *g;
            for q in &basis {
                r -= q * q.dot(&r);
            }
            let n = r.norm();
            if best.as_ref().is_none_or(|b| n > b.1) {
                best = Some((i, n, r));
            }
        }
        let (i, n, r) = best?;
        if n < 1e-7 {
            return None;
        }
        basis.push(r / n);
        picked.push(i);
    }
    Some(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_facets() {
        // cone of the six unit vectors is the positive orthant: facets −e_i
        let gens: Vec<Wrench> = (0..6)
            .map(|i| Wrench::from_fn(|k, _| (k == i) as u8 as f64))
            .collect();
        let facets = enumerate_cone_facets(&gens).unwrap();
        assert_eq!(facets.len(), 6);
        for f in &facets {
            assert!((f.sum() + 1.0).abs() < 1e-12);
            assert!(f.iter().all(|&v| v <= 0.0));
        }
    }

    #[test]
    fn redundant_generator_adds_no_facet() {
        let mut gens: Vec<Wrench> = (0..6)
            .map(|i| Wrench::from_fn(|k, _| (k == i) as u8 as f64))
            .collect();
        gens.push(Wrench::repeat(1.0));
        assert_eq!(enumerate_cone_facets(&gens).unwrap().len(), 6);
    }

    #[test]
    fn rank_deficient_generators_rejected() {
        let gens: Vec<Wrench> = (0..5)
            .map(|i| Wrench::from_fn(|k, _| (k == i) as u8 as f64))
            .collect();
        assert_eq!(enumerate_cone_facets(&gens), Err(GeomError::DegenerateCone));
    }

    #[test]
    fn square_pyramid_in_first_coordinates() {
        // 4 rays around +e0 in (e0,e1,e2) plus ±... keep solid by adding e3..e5
        let mut gens = vec![
            Wrench::new(1.0, 0.5, 0.5, 0.0, 0.0, 0.0),
            Wrench::new(1.0, -0.5, 0.5, 0.0, 0.0, 0.0),
            Wrench::new(1.0, 0.5, -0.5, 0.0, 0.0, 0.0),
            Wrench::new(1.0, -0.5, -0.5, 0.0, 0.0, 0.0),
        ];
        for i in 3..6 {
            gens.push(Wrench::from_fn(|k, _| (k == i) as u8 as f64));
        }
        // 4 side facets of the pyramid + 3 orthant facets
        assert_eq!(enumerate_cone_facets(&gens).unwrap().len(), 7);
    }
}
