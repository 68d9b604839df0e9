//! Numerical verification toolkit for the Finsler N-Laplacian Liouville
//! problem on convex cones.
//!
//! The objects: an anisotropic norm (a *gauge*) H on R^N, its dual gauge H_0,
//! the quasilinear operator `div(H^{N-1}(grad u) grad H(grad u))`, and the
//! explicit peak-shaped solution family of
//!
//! ```text
//! -div(H^{N-1}(grad u) grad H(grad u)) = e^u   in a convex cone C,
//!  <a(grad u), nu> = 0                         on the cone boundary,
//! ```
//!
//! whose members concentrate a fixed total mass of `e^u` determined only by
//! the dimension and the measure of the unit anisotropic ball inside the
//! cone. Every structural identity this family satisfies (duality algebra,
//! conormal boundary condition, mass quantization, flux balance, level-set
//! laws, a Pohozaev identity, isoperimetric comparisons, and a radial
//! Poincare inequality) is implemented here as a numerical check with
//! explicit error bars.
//!
//! Quick start:
//!
//! ```rust
//! use finsler_liouville::cone::ConvexCone;
//! use finsler_liouville::gauge::Gauge;
//! use finsler_liouville::liouville::LiouvilleSolution;
//!
//! let gauge = Gauge::euclidean(2);
//! let cone = ConvexCone::full_space(2);
//! let sol = LiouvilleSolution::new(gauge, 1.0, vec![0.0, 0.0], cone).unwrap();
//!
//! // Peak height log(8) in the plane, and the level log(2) sits at radius 1.
//! assert!((sol.eval(&[0.0, 0.0]).unwrap() - 8f64.ln()).abs() < 1e-12);
//! assert!((sol.level_radius(2f64.ln()).unwrap() - 1.0).abs() < 1e-12);
//! ```
//!
//! The `verify` binary drives the same checks from a JSON config and writes a
//! machine-readable report; see the `report` and `runner` modules.

pub mod balance;
pub mod cone;
pub mod dual;
pub mod error;
pub mod gauge;
pub mod liouville;
pub mod operator;
pub mod poincare;
pub mod quad;
pub mod report;
pub mod runner;
mod sphopt;
mod vecops;

pub use error::{Error, Result};
pub use quad::{Estimate, QuadMethod, QuadratureSpec};
