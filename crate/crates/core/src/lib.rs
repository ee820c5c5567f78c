//! Exact mould calculus for formal normal forms of vector fields.
//!
//! The crate computes Poincaré linearizations, trimmed (prenormal) forms,
//! canonical Hamiltonian trimming and a formal Kolmogorov step, all over
//! Gaussian rationals and truncated at a chosen polynomial degree, so every
//! algebraic identity involved can be checked by exact equality.
//!
//! Layering, bottom to top: [`scalar`], [`word`], [`mould`], [`poly`],
//! [`operator`], [`normal_form`], [`hamiltonian`], [`kolmogorov`], then the
//! text formats in [`io`] and the command runner in [`job`].

#![allow(clippy::result_large_err)]

pub mod scalar;
pub mod word;
pub mod mould;
pub mod poly;
pub mod operator;
pub mod normal_form;
pub mod hamiltonian;
pub mod kolmogorov;
pub mod io;
pub mod job;

pub use operator::{prepare, GradedOperator, OperatorError, PreparedField};
pub use mould::{Mould, MouldError, SymmetryKind, SymmetryReport, Violation};
pub use poly::{Monomial, TruncatedPolynomial};
pub use scalar::Scalar;
pub use word::{Alphabet, Grade, GradeKind, Word};
