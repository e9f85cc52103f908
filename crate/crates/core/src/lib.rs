//! Total order-boundedness on finite lattice-normed models.
//!
//! The crate works over finite Stone algebras `A = C(Ω)` and fiberwise
//! modules `E = Π_ω ℂ^{d_ω}`. It evaluates the defect functional
//! `F ↦ sup_{x∈M} inf_{y∈F} |x − y|`, builds ε-nets, measures distances to
//! `A`-zonotopes, constructs mixings and cyclic-compactness witnesses, and
//! analyses finite measure-preserving extensions `X|Y` through their relative
//! module `L²(X|Y)`.
//!
//! On a finite `Ω` order convergence coincides with norm convergence, so every
//! order-theoretic statement reduces to a pointwise inequality checked within a
//! tolerance.

pub mod error;
pub mod io;
pub mod lns;
pub mod mixing;
pub mod mps;
pub mod random;
pub mod relstruct;
pub mod selftest;
pub mod seqmodel;
pub mod stone;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
