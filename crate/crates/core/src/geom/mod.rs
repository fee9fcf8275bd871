//! Polyhedral-cone and polygon geometry.
//!
//! Wrench cones of rectangular contacts (closed form and generator span),
//! facet enumeration in wrench space, 2D convex hulls, halfplane reduction,
//! recursive projection and static-equilibrium regions.

mod cone;
mod dd;
mod hull;
mod polygon;
mod projection;
mod statics;

pub use cone::{rect_contact_wrench_cone, stance_generators, stance_wrench_cone};
pub use dd::enumerate_cone_facets;
pub use hull::{chebyshev_center, convex_hull_2d, polygon_from_dual_hull, DualHullReduction};
pub use polygon::{hausdorff_distance, HalfplaneSet, Polygon2, Vec2};
pub use projection::{bretl_lall_projection, halfplane_support_oracle, BRETL_LALL_DEFAULT_TOL};
pub use statics::{
    feasible_contact_forces, gravity_wrench, static_equilibrium_polygon, ContactForces,
};

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Wrench = Vector6<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("generators do not span a solid cone")]
    DegenerateCone,
    #[error("halfplane set is empty")]
    EmptyPolygon,
    #[error("halfplane set is unbounded")]
    UnboundedPolygon,
    #[error("consecutive edges are numerically parallel")]
    NumericallyIll,
    #[error("feasible set is empty")]
    InfeasibleSet,
    #[error("no feasible contact forces")]
    Infeasible,
    #[error("invalid contact patch: {0}")]
    InvalidPatch(&'static str),
}

/// Rectangular surface contact.
///
/// `tangent`, `binormal`, `normal` form a right-handed orthonormal frame; the
/// patch spans `±half_length` along the tangent and `±half_width` along the
/// binormal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPatch {
    pub center: Vec3,
    pub tangent: Vec3,
    pub binormal: Vec3,
    pub normal: Vec3,
    pub half_length: f64,
    pub half_width: f64,
    pub friction: f64,
}

impl ContactPatch {
    /// Build a patch from its normal and an approximate forward direction. The
    /// tangent is the forward direction projected on the contact plane.
    pub fn from_normal(
        center: Vec3,
        normal: Vec3,
        forward: Vec3,
        half_length: f64,
        half_width: f64,
        friction: f64,
    ) -> Result<Self, GeomError> {
        let n = normal
            .try_normalize(1e-12)
            .ok_or(GeomError::InvalidPatch("zero normal"))?;
        let t =
            (forward - n * n.dot(&forward))
                .try_normalize(1e-12)
                .ok_or(GeomError::InvalidPatch(
                    "forward direction parallel to normal",
                ))?;
        let b = n.cross(&t);
        let patch = Self {
            center,
            tangent: t,
            binormal: b,
            normal: n,
            half_length,
            half_width,
            friction,
        };
        patch.validate()?;
        Ok(patch)
    }

    /// Horizontal patch facing up, tangent along +x.
    pub fn flat(center: Vec3, half_length: f64, half_width: f64, friction: f64) -> Self {
        Self {
            center,
            tangent: Vec3::x(),
            binormal: Vec3::y(),
            normal: Vec3::z(),
            half_length,
            half_width,
            friction,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        const TOL: f64 = 1e-9;
        let (t, b, n) = (self.tangent, self.binormal, self.normal);
        if (t.norm() - 1.0).abs() > TOL
            || (b.norm() - 1.0).abs() > TOL
            || (n.norm() - 1.0).abs() > TOL
        {
            return Err(GeomError::InvalidPatch("frame vectors must be unit"));
        }
        if t.dot(&b).abs() > TOL || t.dot(&n).abs() > TOL || b.dot(&n).abs() > TOL {
            return Err(GeomError::InvalidPatch("frame must be orthogonal"));
        }
        if (t.cross(&b) - n).norm() > TOL {
            return Err(GeomError::InvalidPatch("frame must be right-handed"));
        }
        if !(self.half_length > 0.0 && self.half_width > 0.0 && self.friction > 0.0) {
            return Err(GeomError::InvalidPatch(
                "dimensions and friction must be positive",
            ));
        }
        Ok(())
    }

    /// Columns are (t, b, n): maps local coordinates to world.
    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.tangent, self.binormal, self.normal])
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let (x, y) = (self.half_length, self.half_width);
        let (t, b) = (self.tangent, self.binormal);
        [
            self.center + t * x + b * y,
            self.center - t * x + b * y,
            self.center - t * x - b * y,
            self.center + t * x - b * y,
        ]
    }

    /// Edges of the linearized friction pyramid `|f_t| ≤ μ f_n, |f_b| ≤ μ f_n`
    /// (unnormalized, unit normal component).
    pub fn pyramid_edges(&self) -> [Vec3; 4] {
        let (t, b, n, mu) = (self.tangent, self.binormal, self.normal, self.friction);
        [
            n + (t + b) * mu,
            n + (t - b) * mu,
            n - (t - b) * mu,
            n - (t + b) * mu,
        ]
    }

    /// Same patch with dimensions and friction multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            half_length: self.half_length * scale,
            half_width: self.half_width * scale,
            friction: self.friction * scale,
            ..*self
        }
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            center: self.center + offset,
            ..*self
        }
    }

    /// Inclination of the normal with respect to the vertical, in radians.
    pub fn inclination(&self) -> f64 {
        self.normal.z.clamp(-1.0, 1.0).acos()
    }
}

/// Facet form `{w : rows·w ≤ 0}` of a contact wrench cone, wrenches taken at
/// `origin`. Wrench layout is `(force, torque)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrenchConeMatrix {
    pub rows: Vec<Wrench>,
    pub origin: Vec3,
}

impl WrenchConeMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest facet value `max_i A_i·w`; non-positive iff `w` is in the cone.
    pub fn max_violation(&self, w: &Wrench) -> f64 {
        self.rows
            .iter()
            .map(|r| r.dot(w))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership with slack relative to the wrench magnitude.
    pub fn contains(&self, w: &Wrench, rel_tol: f64) -> bool {
        self.max_violation(w) <= rel_tol * (1.0 + w.norm())
    }

    /// Rows scaled to unit norm.
    pub fn normalized(&self) -> Self {
        Self {
            rows: self.rows.iter().map(|r| r / r.norm()).collect(),
            origin: self.origin,
        }
    }

    /// Same cone expressed with wrenches taken at another origin.
    pub fn reexpress(&self, new_origin: Vec3) -> Self {
        // w_old = [f; τ_new + (new - old) × f]
        let d = new_origin - self.origin;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let rf = Vec3::new(r[0], r[1], r[2]);
                let rt = Vec3::new(r[3], r[4], r[5]);
                // rt · (d × f) = f · (rt × d)
                let f_part = rf + rt.cross(&d);
                Wrench::new(f_part.x, f_part.y, f_part.z, rt.x, rt.y, rt.z)
            })
            .collect();
        Self {
            rows,
            origin: new_origin,
        }
    }
}

pub(crate) fn wrench(force: &Vec3, torque: &Vec3) -> Wrench {
    Wrench::new(force.x, force.y, force.z, torque.x, torque.y, torque.z)
}
