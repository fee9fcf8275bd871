//! Locomotion model-predictive control where every preview is retimed by
//! time-optimal path parameterization under contact-stability polygons.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod geom;
pub mod interp;
pub mod loco;
pub(crate) mod lp;
pub mod sim;
pub mod topp;
