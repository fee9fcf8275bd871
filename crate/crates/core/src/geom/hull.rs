use super::polygon::{cross, Vec2};
use super::{GeomError, HalfplaneSet, Polygon2};
use crate::lp::{LinearProgram, LpStatus, Sense};

const COLLINEAR_TOL: f64 = 1e-10;

/// Indices of the convex hull of `points`, counter-clockwise, collinear points
/// dropped. Andrew's monotone chain.
fn hull_indices(points: &[Vec2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    idx.dedup_by(|a, b| (points[*a] - points[*b]).norm() <= 1e-14);
    if idx.len() < 3 {
        return idx;
    }
    let scale = points
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(1e-300, f64::max);
    let tol = COLLINEAR_TOL * scale * scale;

    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && cross(
                &points[lower[lower.len() - 2]],
                &points[lower[lower.len() - 1]],
                &points[i],
            ) <= tol
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross(
                &points[upper[upper.len() - 2]],
                &points[upper[upper.len() - 1]],
                &points[i],
            ) <= tol
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex hull, counter-clockwise. Fewer than three non-collinear points give
/// a degenerate polygon holding the extreme points.
pub fn convex_hull_2d(points: &[Vec2]) -> Polygon2 {
    let h = hull_indices(points);
    let vertices: Vec<Vec2> = h.iter().map(|&i| points[i]).collect();
    let mut poly = Polygon2::from_ccw(vertices);
    if poly.len() >= 3 && poly.area() <= 0.0 {
        poly.degenerate = true;
    }
    poly
}

/// Center and radius of the largest disk inscribed in `{B·x ≤ c}`.
pub fn chebyshev_center(h: &HalfplaneSet) -> Result<(Vec2, f64), GeomError> {
    if h.is_empty() {
        return Err(GeomError::UnboundedPolygon);
    }
    let mut lp = LinearProgram::maximize(vec![0.0, 0.0, 1.0]);
    lp.set_free(0).set_free(1);
    for (n, c) in h.iter() {
        lp.add_row(vec![n.x, n.y, n.norm()], Sense::Le, c);
    }
    match lp.solve() {
        Ok(sol) => Ok((Vec2::new(sol.x[0], sol.x[1]), sol.x[2])),
        Err(LpStatus::Infeasible) => Err(GeomError::EmptyPolygon),
        Err(LpStatus::Unbounded) => Err(GeomError::UnboundedPolygon),
    }
}

/// Output of [`polygon_from_dual_hull`].
#[derive(Debug, Clone)]
pub struct DualHullReduction {
    pub polygon: Polygon2,
    /// Input rows that support an edge, in CCW order of their normals.
    pub active_rows: Vec<usize>,
    /// Interior point used for the dual transform.
    pub interior: Vec2,
}

/// Enumerate the polygon `{B·x ≤ c}` through the convex hull of its dual
/// points `B_i / (c_i − B_i·x̊)`, where `x̊` is an interior point (the origin
/// when every `c_i > 0`, else the Chebyshev center).
pub fn polygon_from_dual_hull(h: &HalfplaneSet) -> Result<DualHullReduction, GeomError> {
    if h.len() < 3 {
        return Err(GeomError::UnboundedPolygon);
    }
    let strictly_inside = h.iter().all(|(n, c)| c > 1e-9 * n.norm());
    let interior = if strictly_inside {
        Vec2::zeros()
    } else {
        let (center, radius) = chebyshev_center(h)?;
        let scale = h
            .iter()
            .map(|(n, c)| (c / n.norm()).abs())
            .fold(1.0, f64::max);
        if radius <= 1e-10 * scale {
            // flat or single-point set
            return Ok(DualHullReduction {
                polygon: Polygon2 {
                    vertices: vec![center],
                    degenerate: true,
                },
                active_rows: Vec::new(),
                interior: center,
            });
        }
        center
    };

    let dual: Vec<Vec2> = h.iter().map(|(n, c)| n / (c - n.dot(&interior))).collect();
    let hull = hull_indices(&dual);
    if hull.len() < 3 {
        return Err(GeomError::UnboundedPolygon);
    }
    // the origin must lie strictly inside the dual hull
    let k = hull.len();
    for i in 0..k {
        let (a, b) = (dual[hull[i]], dual[hull[(i + 1) % k]]);
        if a.x * b.y - a.y * b.x <= 1e-12 * a.norm() * b.norm() {
            return Err(GeomError::UnboundedPolygon);
        }
    }

    let mut rows: Vec<usize> = hull;
    let mut vertices = Vec::with_capacity(rows.len());
    let mut i = 0;
    while i < rows.len() && rows.len() >= 3 {
        let (a, b) = (dual[rows[i]], dual[rows[(i + 1) % rows.len()]]);
        let det = a.x * b.y - a.y * b.x;
        if det.abs() <= 1e-14 * a.norm() * b.norm() {
            log::debug!("dropping near-parallel edge {}", rows[(i + 1) % rows.len()]);
            rows.remove((i + 1) % rows.len());
            vertices.clear();
            i = 0;
            continue;
        }
        // [a; b] y = [1; 1]
        let y = Vec2::new((b.y - a.y) / det, (a.x - b.x) / det);
        vertices.push(y + interior);
        i += 1;
    }
    if rows.len() < 3 {
        return Err(GeomError::NumericallyIll);
    }
    // vertex i joins the edges of rows[i] and rows[i + 1]
    Ok(DualHullReduction {
        polygon: Polygon2::from_ccw(vertices),
        active_rows: rows,
        interior,
    })
}
