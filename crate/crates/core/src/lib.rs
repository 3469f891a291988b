//! Cosparse recovery by nonconvex lq-analysis minimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: SVD-based rank, null spaces, pseudoinverses, SPD solves.
//! - [`operators`]: analysis operators `D` (identity, finite differences,
//!   random Parseval frames) and cosparsity profiles.
//! - [`instances`]: seeded synthetic problems and the phantom task.
//! - [`solver`]: the CoIRLq iteratively reweighted solver.
//! - [`theory`]: closed-form recovery thresholds, constants and bounds.
//! - [`certify`]: brute-force restricted isometry and null space checks.
//! - [`experiments`]: phase transitions, demos, phantom runs and plots.

// Comparisons are written negated on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod io;
pub mod numerics;
pub mod operators;
pub mod seeding;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};
