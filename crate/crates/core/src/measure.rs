//! Atom recovery from a flat extension through multiplication operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{format_rational, pow, Rational};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::Matrix;
use crate::moments::{BivariateMoments, CurveParams};
use crate::numeric::{self, Real};

/// Multiplication by `x` and `y` on the span of a column basis, expressed in
/// that basis, plus the Gram matrix they were derived from.
#[derive(Clone, Debug)]
pub struct MultiplicationMatrices<F> {
    pub mx: Matrix<F>,
    pub my: Matrix<F>,
    pub gram: Matrix<F>,
    /// `Hx[b', b] = L(b' * x * b)`.
    pub hx: Matrix<F>,
    pub hy: Matrix<F>,
}

/// Builds `Mx = G^{-1} Hx` and `My = G^{-1} Hy` for the Gram matrix
/// `G[b', b] = L(b' b)` on `basis`, and checks that they commute exactly.
///
/// `moment(i, j)` must be defined up to degree `2 deg(basis) + 1`, which a flat
/// extension provides.
pub fn multiplication_matrices<F: Field>(
    moment: impl Fn(usize, usize) -> F,
    basis: &[(usize, usize)],
) -> Result<MultiplicationMatrices<F>> {
    let k = basis.len();
    let gram = Matrix::from_fn(k, k, |r, c| {
        moment(basis[r].0 + basis[c].0, basis[r].1 + basis[c].1)
    });
    let hx = Matrix::from_fn(k, k, |r, c| {
        moment(basis[r].0 + basis[c].0 + 1, basis[r].1 + basis[c].1)
    });
    let hy = Matrix::from_fn(k, k, |r, c| {
        moment(basis[r].0 + basis[c].0, basis[r].1 + basis[c].1 + 1)
    });
    let ginv = gram.invert()?;
    let mx = ginv.mul(&hx);
    let my = ginv.mul(&hy);
    if F::EXACT {
        let xy = mx.mul(&my);
        let yx = my.mul(&mx);
        if xy != yx {
            return Err(Error::Consistency(
                "multiplication matrices do not commute".into(),
            ));
        }
    }
    Ok(MultiplicationMatrices {
        mx,
        my,
        gram,
        hx,
        hy,
    })
}

/// One atom in floating point.
#[derive(Clone, Debug)]
pub struct Atom {
    pub x: Real,
    pub y: Real,
    pub weight: Real,
}

/// A representing measure with its certification residuals.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    /// Exact atoms `(x, y, weight)` when rational reconstruction verified.
    pub exact: Option<Vec<(Rational, Rational, Rational)>>,
    pub residual_moments: Real,
    pub residual_curve: Real,
    pub precision_bits: usize,
}

/// Joint eigenvalues of the multiplication operators.
///
/// The operators are symmetrized with the Cholesky factor of the Gram matrix,
/// a random combination `s Ax + t Ay` is diagonalized, and `x`, `y` are read
/// as Rayleigh quotients on its eigenvectors. The combination is redrawn when
/// its spectrum clusters, up to 8 times.
pub fn extract_atoms<F: Field>(
    mm: &MultiplicationMatrices<F>,
    precision: usize,
    seed: u64,
) -> Result<Vec<(Real, Real)>> {
    let prec = working_precision(precision);
    let to_r = |m: &Matrix<F>| -> numeric::RMatrix {
        m.rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_real(prec)).collect())
            .collect()
    };
    let g = to_r(&mm.gram);
    let c = numeric::cholesky(&g).ok_or(Error::ExtractionFailed)?;
    let ci = numeric::lower_inverse(&c);
    let cit = numeric::transpose(&ci);
    let ax = numeric::matmul(&numeric::matmul(&ci, &to_r(&mm.hx)), &cit);
    let ay = numeric::matmul(&numeric::matmul(&ci, &to_r(&mm.hy)), &cit);
    let k = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap_tol = numeric::pow2_neg(precision / 4, prec);
    for _attempt in 0..=8 {
        let s = numeric::to_real(&Rational::new(rng.gen_range(1..1000).into(), 1000.into()), prec);
        let t = numeric::to_real(&Rational::new(rng.gen_range(1..1000).into(), 1000.into()), prec);
        let a: numeric::RMatrix = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| s.clone() * ax[i][j].clone() + t.clone() * ay[i][j].clone())
                    .collect()
            })
            .collect();
        let (vals, vecs) = numeric::jacobi_eigen(&a);
        let mut sorted: Vec<Real> = vals.clone();
        sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let scale = sorted
            .iter()
            .map(numeric::abs)
            .fold(numeric::one(prec), |m, v| if v > m { v } else { m });
        let clustered = sorted
            .windows(2)
            .any(|w| (w[1].clone() - w[0].clone()) <= gap_tol.clone() * scale.clone());
        if clustered {
            continue;
        }
        let atoms = (0..k)
            .map(|col| {
                let u: Vec<Real> = vecs.iter().map(|row| row[col].clone()).collect();
                (rayleigh(&ax, &u), rayleigh(&ay, &u))
            })
            .collect();
        return Ok(atoms);
    }
    Err(Error::ExtractionFailed)
}

fn rayleigh(a: &numeric::RMatrix, u: &[Real]) -> Real {
    let prec = u[0].precision();
    let mut num = numeric::zero(prec);
    let mut den = numeric::zero(prec);
    for i in 0..u.len() {
        den += u[i].clone() * u[i].clone();
        for j in 0..u.len() {
            num += u[i].clone() * a[i][j].clone() * u[j].clone();
        }
    }
    num / den
}

fn real_pow(x: &Real, e: usize) -> Real {
    (0..e).fold(numeric::one(x.precision()), |acc, _| acc * x.clone())
}

/// Solves `V rho = beta_B` for the weights, where `V[b, r] = b(atom_r)`, then
/// certifies every moment of `beta` and the curve equation.
///
/// Exact atoms are attempted first by rational reconstruction of the
/// numeric values; they are accepted only if they reproduce `beta` exactly.
pub fn solve_weights(
    atoms: &[(Real, Real)],
    beta: &BivariateMoments,
    curve: &CurveParams,
    basis: &[(usize, usize)],
    precision: usize,
    tolerance: &Real,
) -> Result<AtomicMeasure> {
    let prec = working_precision(precision);
    let v: numeric::RMatrix = basis
        .iter()
        .map(|&(i, j)| {
            atoms
                .iter()
                .map(|(x, y)| real_pow(x, i) * real_pow(y, j))
                .collect()
        })
        .collect();
    let rhs: Vec<Real> = basis
        .iter()
        .map(|&(i, j)| numeric::to_real(beta.at(i, j), prec))
        .collect();
    let rho = numeric::solve(&v, &rhs).ok_or_else(|| {
        Error::Certification("atoms are not distinct (singular Vandermonde system)".into())
    })?;
    if rho.iter().any(|w| numeric::is_neg(w) || w.repr().is_zero()) {
        return Err(Error::Certification("nonpositive weight".into()));
    }
    let mut atoms_w: Vec<Atom> = atoms
        .iter()
        .zip(&rho)
        .map(|((x, y), w)| Atom {
            x: x.clone(),
            y: y.clone(),
            weight: w.clone(),
        })
        .collect();
    atoms_w.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });

    let exact = reconstruct_exact(&atoms_w, beta, curve, basis, precision);
    let (residual_moments, residual_curve) = if let Some(ex) = &exact {
        atoms_w = ex
            .iter()
            .map(|(x, y, w)| Atom {
                x: numeric::to_real(x, prec),
                y: numeric::to_real(y, prec),
                weight: numeric::to_real(w, prec),
            })
            .collect();
        (numeric::zero(prec), numeric::zero(prec))
    } else {
        residuals(&atoms_w, beta, curve, prec)
    };
    if residual_moments > *tolerance || residual_curve > *tolerance {
        return Err(Error::Certification(format!(
            "residual {} exceeds tolerance",
            numeric::format_real(&residual_moments.clone().max(residual_curve.clone()), 6)
        )));
    }
    Ok(AtomicMeasure {
        atoms: atoms_w,
        exact,
        residual_moments,
        residual_curve,
        precision_bits: precision,
    })
}

fn residuals(atoms: &[Atom], beta: &BivariateMoments, curve: &CurveParams, prec: usize) -> (Real, Real) {
    let mut rm = numeric::zero(prec);
    for (&(i, j), b) in beta.values() {
        let s = atoms.iter().fold(numeric::zero(prec), |acc, at| {
            acc + at.weight.clone() * real_pow(&at.x, i) * real_pow(&at.y, j)
        });
        let d = numeric::abs(&(s - numeric::to_real(b, prec)));
        if d > rm {
            rm = d;
        }
    }
    let a = numeric::to_real(&curve.a, prec);
    let b = numeric::to_real(&curve.b, prec);
    let mut rc = numeric::zero(prec);
    for at in atoms {
        let d = at.y.clone() * at.y.clone()
            - at.x.clone() * at.x.clone() * at.x.clone()
            - a.clone() * at.x.clone()
            - b.clone();
        let d = numeric::abs(&d);
        if d > rc {
            rc = d;
        }
    }
    (rm, rc)
}

/// Internal precision for a requested output precision. The Gram matrix of
/// clustered atoms is badly conditioned, so the guard grows with `precision`.
fn working_precision(precision: usize) -> usize {
    2 * precision + 64
}

/// Guesses rational coordinates, solves the weights exactly and keeps the
/// result only if it lies on the curve and reproduces every moment of `beta`.
fn reconstruct_exact(
    atoms: &[Atom],
    beta: &BivariateMoments,
    curve: &CurveParams,
    basis: &[(usize, usize)],
    precision: usize,
) -> Option<Vec<(Rational, Rational, Rational)>> {
    let tol = numeric::pow2_neg(precision / 2, working_precision(precision));
    let points: Vec<(Rational, Rational)> = atoms
        .iter()
        .map(|a| (numeric::simplest_near(&a.x, &tol), numeric::simplest_near(&a.y, &tol)))
        .collect();
    if !points.iter().all(|(x, y)| y * y == curve.cubic(x)) {
        return None;
    }
    let v = Matrix::from_fn(basis.len(), points.len(), |r, c| {
        pow(&points[c].0, basis[r].0) * pow(&points[c].1, basis[r].1)
    });
    let rhs: Vec<Rational> = basis.iter().map(|&(i, j)| beta.at(i, j).clone()).collect();
    let weights = v.solve(&rhs).ok()?;
    if weights.iter().any(|w| w.sign() <= 0) {
        return None;
    }
    let guess: Vec<(Rational, Rational, Rational)> = points
        .into_iter()
        .zip(weights)
        .map(|((x, y), w)| (x, y, w))
        .collect();
    let reproduces = beta.values().iter().all(|(&(i, j), b)| {
        let s: Rational = guess
            .iter()
            .map(|(x, y, w)| w * pow(x, i) * pow(y, j))
            .sum();
        &s == b
    });
    reproduces.then_some(guess)
}

/// JSON form of a measure.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureJson {
    pub atoms: Vec<AtomJson>,
    pub exact: bool,
    pub residual_moments: String,
    pub residual_curve: String,
    pub precision_bits: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomJson {
    pub x: String,
    pub y: String,
    pub weight: String,
}

impl AtomicMeasure {
    /// Significant decimal digits printed for floating values.
    pub fn digits(&self) -> usize {
        (self.precision_bits as f64 * std::f64::consts::LOG10_2).floor() as usize
    }

    pub fn to_json(&self) -> MeasureJson {
        let digits = self.digits();
        let atoms = match &self.exact {
            Some(ex) => ex
                .iter()
                .map(|(x, y, w)| AtomJson {
                    x: format_rational(x),
                    y: format_rational(y),
                    weight: format_rational(w),
                })
                .collect(),
            None => self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    x: numeric::format_real(&a.x, digits),
                    y: numeric::format_real(&a.y, digits),
                    weight: numeric::format_real(&a.weight, digits),
                })
                .collect(),
        };
        MeasureJson {
            atoms,
            exact: self.exact.is_some(),
            residual_moments: numeric::format_real(&self.residual_moments, 6),
            residual_curve: numeric::format_real(&self.residual_curve, 6),
            precision_bits: self.precision_bits,
        }
    }
}
