//! Shared helpers for unit tests.

use rand::Rng;

use crate::arith::{rat, Rational};
use crate::linalg::Matrix;

/// Random `rows x cols` matrix with small rational entries.
pub fn random_rational_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<Rational> {
    Matrix::from_fn(rows, cols, |_, _| rat(rng.gen_range(-9..=9), rng.gen_range(1..=4)))
}
