//! Geometry of manifolds with a nonlinear connection (N-connection).
//!
//! The crate builds, from symbolic inputs, the canonical N-connection of a
//! regular Lagrangian, the canonical distinguished connection of a block
//! metric, its torsion, curvature, Ricci and Einstein d-tensors, and the
//! five-dimensional off-diagonal vacuum ansatz with its generating recipe.
//! Every derived quantity is evaluated pointwise with truncated jets whose
//! inputs carry exact symbolic derivatives.

pub mod cli;
pub mod dconn;
mod error;
pub mod expr;
pub mod lagrange;
pub mod nconn;
pub mod numerics;
pub mod solutions;

pub use error::{Error, Result};
pub use expr::{Chart, Expr, ExprError, ScalarField};
pub use numerics::{Jet, JetMatrix, Point};
