use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;

/// The set `{x ∈ ℝ² : B·x ≤ c}`, one row per halfplane.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfplaneSet {
    pub normals: Vec<Vec2>,
    pub offsets: Vec<f64>,
}

impl HalfplaneSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rows with (numerically) zero normal are dropped; if such a row is
    /// violated on its own (`0 ≤ c` fails) the whole set is marked empty by
    /// keeping an infeasible pair.
    pub fn push(&mut self, normal: Vec2, offset: f64) {
        let n = normal.norm();
        if n <= 1e-12 * (1.0 + offset.abs()) {
            if offset < -1e-9 {
                // contradiction: encode as x ≤ −1, −x ≤ −1
                self.normals.push(Vec2::x());
                self.offsets.push(-1.0);
                self.normals.push(-Vec2::x());
                self.offsets.push(-1.0);
            }
            return;
        }
        self.normals.push(normal);
        self.offsets.push(offset);
    }

    pub fn with(mut self, normal: Vec2, offset: f64) -> Self {
        self.push(normal, offset);
        self
    }

    pub fn extend(&mut self, other: &HalfplaneSet) {
        self.normals.extend_from_slice(&other.normals);
        self.offsets.extend_from_slice(&other.offsets);
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn from_box(lo: Vec2, hi: Vec2) -> Self {
        Self::new()
            .with(Vec2::x(), hi.x)
            .with(-Vec2::x(), -lo.x)
            .with(Vec2::y(), hi.y)
            .with(-Vec2::y(), -lo.y)
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec2, f64)> {
        self.normals.iter().zip(self.offsets.iter().copied())
    }

    /// Largest signed violation `max_i (B_i·x − c_i)/‖B_i‖`.
    pub fn max_violation(&self, x: &Vec2) -> f64 {
        self.iter()
            .map(|(n, c)| (n.dot(x) - c) / n.norm())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }
}

/// Convex polygon with counter-clockwise vertices.
///
/// Hulls of fewer than three distinct points, or of collinear points, are
/// kept with `degenerate = true`; callers treat them as empty regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    pub vertices: Vec<Vec2>,
    pub degenerate: bool,
}

pub(crate) fn cross(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl Polygon2 {
    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            degenerate: true,
        }
    }

    /// Wrap vertices already known to be CCW and convex.
    pub fn from_ccw(vertices: Vec<Vec2>) -> Self {
        let degenerate = vertices.len() < 3;
        Self {
            vertices,
            degenerate,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degenerate
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.x * b.y - a.y * b.x
            })
            .sum::<f64>()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return true;
        }
        (0..n).all(|i| {
            cross(
                &self.vertices[i],
                &self.vertices[(i + 1) % n],
                &self.vertices[(i + 2) % n],
            ) >= -tol
        })
    }

    /// Edge halfplanes `n·x ≤ c` with outward unit normals.
    pub fn halfplanes(&self) -> HalfplaneSet {
        let mut h = HalfplaneSet::new();
        let n = self.vertices.len();
        if n < 3 {
            return h;
        }
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let e = b - a;
            let len = e.norm();
            if len <= 1e-15 {
                continue;
            }
            let normal = Vec2::new(e.y, -e.x) / len;
            h.push(normal, normal.dot(&a));
        }
        h
    }

    /// Signed distance-like membership: inside or within `tol` of every edge.
    pub fn contains(&self, p: &Vec2, tol: f64) -> bool {
        if self.degenerate {
            return false;
        }
        self.halfplanes().contains(p, tol)
    }

    /// Euclidean distance from `p` to the polygon (zero inside).
    pub fn distance(&self, p: &Vec2) -> f64 {
        let n = self.vertices.len();
        match n {
            0 => f64::INFINITY,
            1 => (p - self.vertices[0]).norm(),
            _ => {
                if !self.degenerate && self.halfplanes().contains(p, 0.0) {
                    return 0.0;
                }
                (0..n)
                    .map(|i| segment_distance(p, &self.vertices[i], &self.vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Intersection with the halfplane `normal·x ≤ offset` (Sutherland–Hodgman
    /// step on a convex polygon).
    pub fn clip(&self, normal: &Vec2, offset: f64) -> Polygon2 {
        let n = self.vertices.len();
        if n == 0 {
            return Polygon2::empty();
        }
        let scale = normal.norm().max(1e-300);
        let side = |v: &Vec2| (normal.dot(v) - offset) / scale;
        let mut out: Vec<Vec2> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let (da, db) = (side(&a), side(&b));
            if da <= 0.0 {
                out.push(a);
            }
            if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                let t = da / (da - db);
                out.push(a + (b - a) * t);
            }
        }
        let mut cleaned: Vec<Vec2> = Vec::with_capacity(out.len());
        for v in out {
            if cleaned.last().is_none_or(|l: &Vec2| (l - v).norm() > 1e-12) {
                cleaned.push(v);
            }
        }
        while cleaned.len() > 1 && (cleaned[0] - cleaned[cleaned.len() - 1]).norm() <= 1e-12 {
            cleaned.pop();
        }
        let degenerate = self.degenerate || cleaned.len() < 3 || {
            let p = Polygon2::from_ccw(cleaned.clone());
            p.area() <= 1e-14
        };
        Polygon2 {
            vertices: cleaned,
            degenerate,
        }
    }

    /// Range of the first coordinate on the horizontal line at height `y`,
    /// if the line meets the polygon (with `tol` slack on the height).
    pub fn x_range_at(&self, y: f64, tol: f64) -> Option<(f64, f64)> {
        if self.degenerate {
            return None;
        }
        let (ymin, ymax) = self.y_range();
        if y < ymin - tol || y > ymax + tol {
            return None;
        }
        let y = y.clamp(ymin, ymax);
        let n = self.vertices.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let (ya, yb) = (a.y, b.y);
            if (ya - y).abs() <= 1e-12 {
                lo = lo.min(a.x);
                hi = hi.max(a.x);
            }
            if (ya < y && yb > y) || (ya > y && yb < y) {
                let x = a.x + (b.x - a.x) * (y - ya) / (yb - ya);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo > hi {
            // y sits at an extreme vertex within roundoff
            let v = self
                .vertices
                .iter()
                .min_by(|a, b| (a.y - y).abs().total_cmp(&(b.y - y).abs()))?;
            return Some((v.x, v.x));
        }
        Some((lo, hi))
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.y), hi.max(v.y))
            })
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.x), hi.max(v.x))
            })
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Vec2::zeros(), |acc, v| acc + v) / n
    }

    pub fn translated(&self, d: &Vec2) -> Polygon2 {
        Polygon2 {
            vertices: self.vertices.iter().map(|v| v + d).collect(),
            degenerate: self.degenerate,
        }
    }

    /// `[[x, y], ...]` for debug dumps.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.vertices
                .iter()
                .map(|v| serde_json::json!([v.x, v.y]))
                .collect(),
        )
    }
}

fn segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 <= 1e-300 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Hausdorff distance between two convex polygons (attained at vertices).
pub fn hausdorff_distance(a: &Polygon2, b: &Polygon2) -> f64 {
    let ab = a.vertices.iter().map(|v| b.distance(v)).fold(0.0, f64::max);
    let ba = b.vertices.iter().map(|v| a.distance(v)).fold(0.0, f64::max);
    ab.max(ba)
}
