//! Numerical laboratory for the one-dimensional second-order phase-transition
//! functional
//!
//! ```text
//! F_ε(u) = ∫ ε⁻¹ (u² - 1)² + ε³ |u''|² dx
//! ```
//!
//! The crate computes the wall constant α, the boundary-layer energy β(t) and
//! the whole-line transition constant c by direct minimization over C¹
//! piecewise cubics, minimizes F_ε with and without boundary data, builds
//! recovery sequences from optimal profiles, and compares direct minima with
//! the limit energies `α·essVar u + β(·) + β(·)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod glue;
pub mod inequalities;
pub mod optimize;
pub mod profile;
pub mod quadrature;

pub use energy::{EnergyBreakdown, Functional};
pub use error::{Error, Result};
pub use optimize::{minimize, multistart, OptResult, OptimizerConfig};
pub use profile::{BoundarySpec, Grid, HermiteProfile};
