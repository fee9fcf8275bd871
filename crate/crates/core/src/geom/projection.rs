use super::polygon::Vec2;
use super::{GeomError, HalfplaneSet, Polygon2};
use crate::lp::{LinearProgram, Sense};

/// Default expansion tolerance, in area units.
pub const BRETL_LALL_DEFAULT_TOL: f64 = 1e-4;

const MAX_DEPTH: usize = 40;

/// Recursive projection: grow an inner approximation of a convex planar set
/// from extreme points returned by `support` until the outer triangle over
/// every edge has area below `tol`.
///
/// `support(d)` returns a point maximizing `d·x` over the set, or `None` when
/// the set is empty.
pub fn bretl_lall_projection<F>(mut support: F, tol: f64) -> Result<Polygon2, GeomError>
where
    F: FnMut(Vec2) -> Option<Vec2>,
{
    let s3 = 3f64.sqrt() / 2.0;
    let initial = [
        Vec2::new(1.0, 0.0),
        Vec2::new(-0.5, s3),
        Vec2::new(-0.5, -s3),
    ];
    let mut seeds: Vec<Vec2> = Vec::with_capacity(3);
    for d in initial {
        let p = support(d).ok_or(GeomError::InfeasibleSet)?;
        if seeds.iter().all(|q| (q - p).norm() > 1e-12) {
            seeds.push(p);
        }
    }
    if seeds.len() == 1 {
        return Ok(Polygon2 {
            vertices: seeds,
            degenerate: true,
        });
    }

    let mut vertices = Vec::new();
    let k = seeds.len();
    for i in 0..k {
        let (a, b) = (seeds[i], seeds[(i + 1) % k]);
        vertices.push(a);
        expand(&mut support, a, b, tol, 0, &mut vertices)?;
    }
    let mut poly = Polygon2::from_ccw(vertices);
    if poly.len() < 3 || poly.area() <= 1e-14 {
        poly.degenerate = true;
    }
    Ok(poly)
}

fn expand<F>(
    support: &mut F,
    a: Vec2,
    b: Vec2,
    tol: f64,
    depth: usize,
    out: &mut Vec<Vec2>,
) -> Result<(), GeomError>
where
    F: FnMut(Vec2) -> Option<Vec2>,
{
    let e = b - a;
    let len = e.norm();
    if len <= 1e-12 || depth > MAX_DEPTH {
        return Ok(());
    }
    let d = Vec2::new(e.y, -e.x) / len;
    let p = support(d).ok_or(GeomError::InfeasibleSet)?;
    let gap = d.dot(&(p - a));
    if gap <= 1e-12 * (1.0 + a.norm()) || 0.5 * len * gap <= tol {
        return Ok(());
    }
    expand(support, a, p, tol, depth + 1, out)?;
    out.push(p);
    expand(support, p, b, tol, depth + 1, out)
}

/// Support oracle of `{B·x ≤ c}`: one linear program per direction.
pub fn halfplane_support_oracle(h: &HalfplaneSet) -> impl FnMut(Vec2) -> Option<Vec2> + '_ {
    move |d: Vec2| {
        let mut lp = LinearProgram::maximize(vec![d.x, d.y]);
        lp.set_free(0).set_free(1);
        for (n, c) in h.iter() {
            lp.add_row(vec![n.x, n.y], Sense::Le, c);
        }
        lp.solve().ok().map(|s| Vec2::new(s.x[0], s.x[1]))
    }
}
