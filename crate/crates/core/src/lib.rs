//! Exact solver for the truncated moment problem on cubic curves
//! `y^2 = x^3 + a x + b`.
//!
//! The crate decides whether a degree-`2n` bivariate moment sequence admits a
//! `rank M(n)`-atomic representing measure on the curve, builds the flat
//! extension `M(n+1)` when one exists and recovers the atoms. Symmetric data
//! (all odd-in-`y` moments zero) is also handled through a reduction to a
//! univariate moment problem on a half-line or on a union of two intervals.

pub mod analyze;
pub mod arith;
pub mod error;
pub mod field;
pub mod flat_ext;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod moments;
pub mod numeric;
pub mod poly;
pub mod symmetric;
pub mod univariate;

#[cfg(test)]
mod testutil;

pub use arith::{QuadExt, Rational};
pub use error::{Error, Result};
pub use field::{Approx, Field};
pub use linalg::{Matrix, SymMatrix};
pub use numeric::Real;
pub use moments::{BivariateMoments, CurveParams};
