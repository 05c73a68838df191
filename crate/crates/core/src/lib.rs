//! Numerical Hartogs-type extension across closed sets in `C^n`.
//!
//! The crate discretizes a truncated `C^n` on a uniform periodic grid and
//! provides:
//!
//! * [`grid`]: fields, (0,q)-forms and the d-bar complex as Fourier multipliers.
//! * [`geometry`]: affine subspaces, obstacle sets, domains and hypothesis checks.
//! * [`hardy`]: Hardy inequalities with singular weight `dist(x, H)^{-2}`.
//! * [`solver`]: minimal-norm solutions of `dbar u = v` with weighted estimates.
//! * [`extension`]: the cutoff-and-correct extension of holomorphic functions.

pub mod error;
pub mod extension;
pub mod geometry;
pub mod grid;
pub mod hardy;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{DerivativeScheme, FormField, GridSpec, Operators, ScalarField};
