//! Numerical toolkit for Hessian structures in information geometry.
//!
//! Starting from a potential `φ(y)` or a parametric family of densities,
//! the crate computes Fisher metrics (possibly degenerate), the foliation
//! cut out by their kernel, and every pointwise invariant of the transverse
//! Hessian geometry: Christoffel symbols, dual connections, the Hessian
//! curvature `Q`, Koszul forms, Einstein and constant-curvature fits, and
//! the curvature of the Kähler lift to the tube domain. Most quantities are
//! computed along two independent routes and cross-checked.

#![allow(clippy::needless_range_loop)] // index loops mirror tensor notation

pub mod diffops;
pub mod error;
pub mod expr;
pub mod fisher;
pub mod hessian;
pub mod kahler;
pub mod tensors;

pub use error::{Error, Result};
