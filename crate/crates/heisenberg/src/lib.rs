//! Numerical analysis toolkit for functional inequalities on the Heisenberg
//! group ℍⁿ.
//!
//! The crate evaluates the closed-form constants of the Sobolev, logarithmic
//! Sobolev, Gagliardo–Nirenberg, Hardy, Nash and Poincaré inequalities,
//! discretizes functions on box grids, expands ξ-radial functions in scaled
//! Laguerre functions, checks every inequality on sampled data, estimates
//! best constants by Rayleigh-quotient minimization and solves the
//! sub-Laplacian heat equation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
pub mod constants;
pub mod error;
pub mod group;
pub mod heat;
pub mod inequalities;
pub mod optimizer;
pub mod spectral;

pub use error::{Error, Result};
