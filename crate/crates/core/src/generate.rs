//! Seeded test-instance generators. The same seed always gives the same
//! instance.
//!
//! On the cusp `y^2 = x^3` the points `(t^2, t^3)` are rational for rational
//! `t`, so data come straight from atoms. Other curves rarely have enough
//! small rational points, so the generator picks rational abscissas with
//! `x^3 + a x + b >= 0` and emits the symmetric measure over them; its
//! moments are rational even when the ordinates are not.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arith::{pow, Rational};
use crate::moments::{
    build_moment_matrix, check_p_pure, moments_from_atoms, symmetric_moments, BivariateMoments, CurveParams,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p / q` with `|p| <= num` and `1 <= q <= den`.
pub fn small_rational(rng: &mut impl Rng, num: i64, den: i64) -> Rational {
    Rational::new(rng.gen_range(-num..=num).into(), rng.gen_range(1..=den).into())
}

/// A positive weight `p / q` with `1 <= p <= 9`, `1 <= q <= 4`.
pub fn positive_weight(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(1..=9i64).into(), rng.gen_range(1..=4i64).into())
}

/// `k` distinct rationals drawn by `draw`.
fn distinct(rng: &mut ChaCha8Rng, k: usize, mut draw: impl FnMut(&mut ChaCha8Rng) -> Option<Rational>) -> Vec<Rational> {
    let mut seen = BTreeSet::new();
    let mut tries = 0usize;
    while seen.len() < k {
        tries += 1;
        assert!(tries < 100_000, "could not draw {k} distinct values");
        if let Some(v) = draw(rng) {
            seen.insert(v);
        }
    }
    seen.into_iter().collect()
}

/// A generated instance together with the measure that produced it.
#[derive(Clone, Debug)]
pub struct Instance {
    pub curve: CurveParams,
    pub beta: BivariateMoments,
    /// Atoms `(x, y)`; for symmetric instances `y` is left out (see `xs`).
    pub atoms: Vec<(Rational, Rational)>,
    /// Abscissas of a symmetric instance, each split over `+-sqrt(z)`.
    pub xs: Vec<Rational>,
    pub weights: Vec<Rational>,
}

/// `k` atoms `(t^2, t^3)` on the cusp, moments up to degree `2n`.
///
/// With `k = 3n` the draw is repeated until `M(n)` is p-pure, which
/// generic points are.
pub fn cusp_instance(k: usize, n: usize, seed: u64) -> Instance {
    assert!(k >= 1, "at least one atom");
    let mut rng = rng(seed);
    let curve = CurveParams::new(Rational::zero(), Rational::zero());
    loop {
        let ts = distinct(&mut rng, k, |r| Some(small_rational(r, 12, 6)));
        let atoms: Vec<_> = ts.iter().map(|t| (pow(t, 2), pow(t, 3))).collect();
        let weights: Vec<_> = (0..k).map(|_| positive_weight(&mut rng)).collect();
        let beta = moments_from_atoms(&atoms, &weights, 2 * n);
        if k == 3 * n && !check_p_pure(&build_moment_matrix(&beta), &curve).is_pure {
            continue;
        }
        return Instance {
            curve,
            beta,
            atoms,
            xs: vec![],
            weights,
        };
    }
}

/// A symmetric instance with `k` distinct abscissas on `y^2 = x^3 + a x + b`.
pub fn symmetric_instance(curve: &CurveParams, k: usize, n: usize, seed: u64) -> Instance {
    assert!(k >= 1, "at least one atom");
    let mut rng = rng(seed);
    let xs = distinct(&mut rng, k, |r| {
        let x = small_rational(r, 24, 6);
        (!curve.cubic(&x).is_negative()).then_some(x)
    });
    let weights: Vec<_> = (0..k).map(|_| positive_weight(&mut rng)).collect();
    let beta = symmetric_moments(&xs, &weights, curve, 2 * n);
    Instance {
        curve: curve.clone(),
        beta,
        atoms: vec![],
        xs,
        weights,
    }
}

/// The generator behind `tmpkit generate`: cusp points on `y^2 = x^3`, a
/// symmetric measure on any other curve.
pub fn generate(curve: &CurveParams, k: usize, n: usize, seed: u64) -> Instance {
    if curve.a.is_zero() && curve.b.is_zero() {
        cusp_instance(k, n, seed)
    } else {
        symmetric_instance(curve, k, n, seed)
    }
}

/// Moments `gamma_0..=gamma_N` of an atomic measure on the line.
pub fn univariate_moments(atoms: &[Rational], weights: &[Rational], big_n: usize) -> Vec<Rational> {
    (0..=big_n)
        .map(|t| {
            atoms
                .iter()
                .zip(weights)
                .fold(Rational::zero(), |acc, (x, w)| acc + w * pow(x, t))
        })
        .collect()
}

/// `k` distinct rational atoms in `[0, inf)`, or in `[0, c] u [d, inf)` when
/// `gap` is given, with positive weights.
pub fn univariate_atoms(
    k: usize,
    gap: Option<(&Rational, &Rational)>,
    seed: u64,
) -> (Vec<Rational>, Vec<Rational>) {
    let mut rng = rng(seed);
    let atoms = distinct(&mut rng, k, |r| {
        let t = small_rational(r, 24, 4).abs();
        match gap {
            Some((c, d)) if &t > c && &t < d => None,
            _ => Some(t),
        }
    });
    let weights = (0..k).map(|_| positive_weight(&mut rng)).collect();
    (atoms, weights)
}
