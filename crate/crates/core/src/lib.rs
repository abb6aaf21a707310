//! Numerical laboratory for non-convex minimax duality on finite meshes.
//!
//! A function `f(x, lambda)` is tabulated over a mesh of `x` values and a
//! uniform grid of `lambda` values. The engine then checks connectivity
//! hypotheses on argmin, argmax and sublevel sets, measures the duality gap,
//! searches for saddle certificates, and sweeps parametric fixed-point
//! families for disconnected solution sets.
//!
//! All verdicts are mesh-level: they describe the discretization and never
//! certify a continuum property.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixedpoint;
pub mod instances;
pub mod mesh;
pub mod par;
pub mod report;

pub use error::{Error, Result};
