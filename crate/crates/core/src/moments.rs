//! Bivariate moment sequences, moment matrices and the purity test.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{pow, Rational};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::BiPoly;

/// Degree-lex monomials `x^i y^j` of total degree at most `n`:
/// `1, X, Y, X^2, XY, Y^2, ...`.
pub fn monomials(n: usize) -> Vec<(usize, usize)> {
    (0..=n)
        .flat_map(|d| (0..=d).rev().map(move |i| (i, d - i)))
        .collect()
}

/// Position of `x^i y^j` in the degree-lex order.
pub fn monomial_index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + (d - i)
}

/// Dimension of `M(n)`.
pub fn matrix_dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

pub fn monomial_label(i: usize, j: usize) -> String {
    let part = |v: &str, e: usize| match e {
        0 => String::new(),
        1 => v.to_string(),
        _ => format!("{v}^{e}"),
    };
    let s = format!("{}{}", part("X", i), part("Y", j));
    if s.is_empty() {
        "1".to_string()
    } else {
        s
    }
}

/// The column basis `{1, X, Y} ∪ {X^2 Y^(k-2), X Y^(k-1), Y^k : 2 <= k <= n}`
/// of a pure moment matrix, in that order.
pub fn basis_b(n: usize) -> Vec<(usize, usize)> {
    let mut b = vec![(0, 0), (1, 0), (0, 1)];
    for k in 2..=n {
        b.extend([(2, k - 2), (1, k - 1), (0, k)]);
    }
    b
}

/// Parameters of the curve `y^2 = x^3 + a x + b`, i.e. the zero set of
/// `p(x, y) = y^2 - x^3 - a x - b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    #[serde(with = "crate::arith::serde_rational")]
    pub a: Rational,
    #[serde(with = "crate::arith::serde_rational")]
    pub b: Rational,
}

impl CurveParams {
    pub fn new(a: Rational, b: Rational) -> Self {
        CurveParams { a, b }
    }

    /// `p(x, y) = y^2 - x^3 - a x - b`.
    pub fn polynomial(&self) -> BiPoly {
        let mut p = BiPoly::term(Rational::one(), 0, 2);
        p.add_term(-Rational::one(), 3, 0);
        p.add_term(-self.a.clone(), 1, 0);
        p.add_term(-self.b.clone(), 0, 0);
        p
    }

    /// `x^3 + a x + b` at `x`.
    pub fn cubic<F: crate::field::Field>(&self, x: &F) -> F {
        x.clone() * x.clone() * x.clone()
            + F::from_rational(&self.a) * x.clone()
            + F::from_rational(&self.b)
    }
}

/// A moment sequence `beta_{ij}`, `i + j <= degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateMoments {
    degree: usize,
    values: BTreeMap<(usize, usize), Rational>,
}

impl BivariateMoments {
    /// Builds a sequence, requiring every index with `i + j <= degree`.
    pub fn new(degree: usize, values: BTreeMap<(usize, usize), Rational>) -> Result<Self> {
        for d in 0..=degree {
            for i in 0..=d {
                if !values.contains_key(&(i, d - i)) {
                    return Err(Error::MissingMoment(i, d - i));
                }
            }
        }
        if let Some(&(i, j)) = values.keys().find(|(i, j)| i + j > degree) {
            return Err(Error::Invalid(format!(
                "moment beta_{{{i},{j}}} exceeds degree {degree}"
            )));
        }
        Ok(BivariateMoments { degree, values })
    }

    pub fn from_fn(degree: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let values = (0..=degree)
            .flat_map(|d| (0..=d).map(move |i| (i, d - i)))
            .map(|(i, j)| ((i, j), f(i, j)))
            .collect();
        BivariateMoments { degree, values }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Half the degree, i.e. the order of `M(n)`.
    pub fn n(&self) -> usize {
        self.degree / 2
    }

    pub fn get(&self, i: usize, j: usize) -> Result<&Rational> {
        self.values.get(&(i, j)).ok_or(Error::MissingMoment(i, j))
    }

    /// Unchecked access for indices known to be in range.
    pub fn at(&self, i: usize, j: usize) -> &Rational {
        &self.values[&(i, j)]
    }

    pub fn values(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(Zero::is_zero)
    }

    /// True when every moment with odd `j` vanishes.
    pub fn is_symmetric(&self) -> bool {
        self.values
            .iter()
            .all(|(&(_, j), v)| j % 2 == 0 || v.is_zero())
    }

    /// The same sequence cut down to a lower degree.
    pub fn truncate(&self, degree: usize) -> Self {
        assert!(degree <= self.degree);
        Self::from_fn(degree, |i, j| self.at(i, j).clone())
    }
}

/// Moment matrix `M(n)`: the entry at `(X^i Y^j, X^k Y^l)` is `beta_{i+k, j+l}`.
pub fn build_moment_matrix(beta: &BivariateMoments) -> Matrix<Rational> {
    build_moment_matrix_of_order(beta, beta.n())
}

pub fn build_moment_matrix_of_order(beta: &BivariateMoments, n: usize) -> Matrix<Rational> {
    assert!(2 * n <= beta.degree(), "order exceeds available moments");
    let mons = monomials(n);
    let labels = mons.iter().map(|&(i, j)| monomial_label(i, j)).collect();
    Matrix::from_fn(mons.len(), mons.len(), |r, c| {
        let (i, j) = mons[r];
        let (k, l) = mons[c];
        beta.at(i + k, j + l).clone()
    })
    .with_labels(labels)
}

/// The Riesz functional `L(sum a_ij x^i y^j) = sum a_ij beta_ij`.
pub fn riesz(beta: &BivariateMoments, poly: &BiPoly) -> Result<Rational> {
    if poly.degree() > beta.degree() {
        return Err(Error::DegreeOverflow {
            degree: poly.degree(),
            max: beta.degree(),
        });
    }
    Ok(poly
        .terms()
        .fold(Rational::zero(), |acc, (&(i, j), c)| acc + c * beta.at(i, j)))
}

/// Moments `beta_ij = sum_r w_r x_r^i y_r^j` of a finitely atomic measure.
pub fn moments_from_atoms(
    atoms: &[(Rational, Rational)],
    weights: &[Rational],
    degree: usize,
) -> BivariateMoments {
    assert_eq!(atoms.len(), weights.len(), "one weight per atom");
    BivariateMoments::from_fn(degree, |i, j| {
        atoms
            .iter()
            .zip(weights)
            .fold(Rational::zero(), |acc, ((x, y), w)| {
                acc + w * pow(x, i) * pow(y, j)
            })
    })
}

/// Moments of the symmetric measure placing mass `w_r / 2` at each of
/// `(x_r, +-sqrt(z_r))`, `z_r = x_r^3 + a x_r + b >= 0`. All odd-in-`y` moments
/// vanish and `beta_{i,2k} = sum_r w_r x_r^i z_r^k`, so the sequence is rational
/// even when the ordinates are not.
pub fn symmetric_moments(
    xs: &[Rational],
    weights: &[Rational],
    curve: &CurveParams,
    degree: usize,
) -> BivariateMoments {
    assert_eq!(xs.len(), weights.len(), "one weight per atom");
    let zs: Vec<Rational> = xs.iter().map(|x| curve.cubic(x)).collect();
    assert!(zs.iter().all(|z| *z >= Rational::zero()), "abscissa off the real curve");
    BivariateMoments::from_fn(degree, |i, j| {
        if j % 2 == 1 {
            return Rational::zero();
        }
        xs.iter()
            .zip(&zs)
            .zip(weights)
            .fold(Rational::zero(), |acc, ((x, z), w)| acc + w * pow(x, i) * pow(z, j / 2))
    })
}

/// Coefficients of `phi(x, y) = (a0 + a1 x + a2 y, b0 + b1 x + b2 y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub a0: Rational,
    pub a1: Rational,
    pub a2: Rational,
    pub b0: Rational,
    pub b1: Rational,
    pub b2: Rational,
}

impl AffineMap {
    pub fn determinant(&self) -> Rational {
        &self.a1 * &self.b2 - &self.a2 * &self.b1
    }

    pub fn apply(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        (
            &self.a0 + &self.a1 * x + &self.a2 * y,
            &self.b0 + &self.b1 * x + &self.b2 * y,
        )
    }
}

/// Pushes the moments forward along an invertible affine map:
/// `beta~_ij = L(phi_1^i phi_2^j)`.
pub fn affine_transform(beta: &BivariateMoments, map: &AffineMap) -> Result<BivariateMoments> {
    if map.determinant().is_zero() {
        return Err(Error::Invalid("affine map has a singular linear part".into()));
    }
    let mut p1 = BiPoly::constant(map.a0.clone());
    p1.add_term(map.a1.clone(), 1, 0);
    p1.add_term(map.a2.clone(), 0, 1);
    let mut p2 = BiPoly::constant(map.b0.clone());
    p2.add_term(map.b1.clone(), 1, 0);
    p2.add_term(map.b2.clone(), 0, 1);
    let deg = beta.degree();
    let pow1: Vec<BiPoly> = (0..=deg).map(|i| p1.pow(i)).collect();
    let pow2: Vec<BiPoly> = (0..=deg).map(|j| p2.pow(j)).collect();
    let mut values = BTreeMap::new();
    for d in 0..=deg {
        for i in 0..=d {
            let j = d - i;
            values.insert((i, j), riesz(beta, &(&pow1[i] * &pow2[j]))?);
        }
    }
    BivariateMoments::new(deg, values)
}

/// Outcome of [`check_p_pure`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PurityReport {
    pub psd: bool,
    pub rank: usize,
    pub curve_relation_holds: bool,
    pub kernel_dimension: usize,
    pub basis_invertible: bool,
    pub is_pure: bool,
    /// A kernel vector outside the span of the curve relations, if any.
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_rational_vec")]
    pub offending_kernel_vector: Option<Vec<Rational>>,
}

mod opt_rational_vec {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<Rational>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(v) => crate::arith::serde_rational_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

/// The column relations `X^i Y^(j+2) = X^(i+3) Y^j + a X^(i+1) Y^j + b X^i Y^j`,
/// `i + j <= n - 3`, as coefficient vectors over the columns of `M(n)`.
pub fn curve_relation_vectors(n: usize, curve: &CurveParams) -> Vec<Vec<Rational>> {
    let dim = matrix_dim(n);
    let mut out = Vec::new();
    for d in 0..=n.saturating_sub(3) {
        if n < 3 {
            break;
        }
        for i in (0..=d).rev() {
            let j = d - i;
            let mut v = vec![Rational::zero(); dim];
            v[monomial_index(i, j + 2)] += Rational::one();
            v[monomial_index(i + 3, j)] -= Rational::one();
            v[monomial_index(i + 1, j)] -= &curve.a;
            v[monomial_index(i, j)] -= &curve.b;
            out.push(v);
        }
    }
    out
}

/// Checks that `M(n)` is psd and `p`-pure: its column relations are exactly
/// the recursive consequences of `Y^2 = X^3 + aX + b`, so the rank is `3n`
/// and the basis from [`basis_b`] is independent.
pub fn check_p_pure(m: &Matrix<Rational>, curve: &CurveParams) -> PurityReport {
    let dim = m.dim();
    let n = (0..).find(|&k| matrix_dim(k) >= dim).unwrap();
    assert_eq!(matrix_dim(n), dim, "not the dimension of a moment matrix");
    let psd = m.is_psd();
    let rank = m.rank();
    let relations = curve_relation_vectors(n, curve);
    let curve_relation_holds =
        n >= 3 && relations.iter().all(|v| m.mul_vec(v).iter().all(Zero::is_zero));
    let kernel_dimension = dim - rank;
    let kernel_matches = kernel_dimension == relations.len();

    let offending_kernel_vector = if curve_relation_holds && !kernel_matches {
        let span = Matrix::from_rows(relations.clone());
        m.kernel().into_iter().find(|k| {
            let mut rows = relations.clone();
            rows.push(k.clone());
            Matrix::from_rows(rows).rank() > span.rank()
        })
    } else {
        None
    };

    let basis_invertible = n >= 1 && {
        let idx: Vec<usize> = basis_b(n)
            .iter()
            .map(|&(i, j)| monomial_index(i, j))
            .collect();
        idx.len() <= dim && m.principal(&idx).rank() == idx.len()
    };
    let is_pure = psd && curve_relation_holds && rank == 3 * n && kernel_matches && basis_invertible;
    PurityReport {
        psd,
        rank,
        curve_relation_holds,
        kernel_dimension,
        basis_invertible,
        is_pure,
        offending_kernel_vector,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use proptest::prelude::*;

    #[test]
    fn monomial_order() {
        assert_eq!(
            monomials(2),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        for (k, &(i, j)) in monomials(5).iter().enumerate() {
            assert_eq!(monomial_index(i, j), k);
        }
        assert_eq!(monomial_label(2, 1), "X^2Y");
        assert_eq!(monomial_label(0, 0), "1");
    }

    #[test]
    fn basis_shape() {
        let b = basis_b(3);
        assert_eq!(b.len(), 9);
        assert_eq!(&b[6..], &[(2, 1), (1, 2), (0, 3)]);
    }

    #[test]
    fn dirac_moment_matrix() {
        let beta = moments_from_atoms(&[(int(0), int(0))], &[int(1)], 6);
        let m = build_moment_matrix(&beta);
        assert_eq!(m.dim(), 10);
        assert_eq!(m.rank(), 1);
        assert_eq!(m.get(0, 0), &int(1));
        assert!((1..10).all(|k| m.get(0, k).is_zero() && m.get(k, k).is_zero()));
        let report = check_p_pure(&m, &CurveParams::new(int(0), int(0)));
        assert!(!report.is_pure);
        assert_eq!(report.rank, 1);
    }

    #[test]
    fn atom_sums() {
        let one = moments_from_atoms(&[(int(1), int(1))], &[int(1)], 6);
        assert!(one.values().values().all(|v| v == &int(1)));
        let two = moments_from_atoms(&[(int(1), int(1)), (int(4), int(8))], &[int(1), int(1)], 6);
        assert_eq!(two.at(1, 1), &int(33));
        let empty = moments_from_atoms(&[], &[], 6);
        assert!(empty.is_zero());
    }

    #[test]
    fn missing_moment_is_an_error() {
        let mut v = BTreeMap::new();
        v.insert((0, 0), int(1));
        v.insert((1, 0), int(1));
        assert!(matches!(
            BivariateMoments::new(1, v),
            Err(Error::MissingMoment(0, 1))
        ));
    }

    #[test]
    fn riesz_examples() {
        let beta = moments_from_atoms(&[(int(2), int(3))], &[int(5)], 4);
        assert_eq!(riesz(&beta, &BiPoly::constant(int(1))).unwrap(), int(5));
        assert_eq!(riesz(&beta, &BiPoly::term(int(1), 1, 1)).unwrap(), int(30));
        let big = BiPoly::term(int(1), 5, 0);
        assert!(matches!(riesz(&beta, &big), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn translation_pushes_dirac() {
        let beta = moments_from_atoms(&[(int(0), int(0))], &[int(1)], 6);
        let shift = AffineMap {
            a0: int(1),
            a1: int(1),
            a2: int(0),
            b0: int(0),
            b1: int(0),
            b2: int(1),
        };
        let t = affine_transform(&beta, &shift).unwrap();
        for (&(_, j), v) in t.values() {
            assert_eq!(v, &if j == 0 { int(1) } else { int(0) });
        }
        let singular = AffineMap {
            a1: int(0),
            ..shift
        };
        assert!(affine_transform(&beta, &singular).is_err());
    }

    fn t_curve_atoms(ts: &[i64]) -> Vec<(Rational, Rational)> {
        ts.iter()
            .map(|&t| (int(t * t), int(t * t * t)))
            .collect()
    }

    #[test]
    fn nine_points_on_cusp_are_pure() {
        let atoms = t_curve_atoms(&[-4, -3, -2, -1, 1, 2, 3, 5, 7]);
        let beta = moments_from_atoms(&atoms, &vec![int(1); 9], 6);
        let m = build_moment_matrix(&beta);
        let r = check_p_pure(&m, &CurveParams::new(int(0), int(0)));
        assert!(r.is_pure, "{r:?}");
        assert_eq!(r.kernel_dimension, 1);
    }

    #[test]
    fn extra_kernel_vector_is_reported() {
        // Four atoms give rank 4, so the kernel is much larger than the single
        // curve relation.
        let atoms = t_curve_atoms(&[1, 2, 3, 4]);
        let beta = moments_from_atoms(&atoms, &vec![int(1); 4], 6);
        let r = check_p_pure(&build_moment_matrix(&beta), &CurveParams::new(int(0), int(0)));
        assert!(!r.is_pure);
        assert!(r.curve_relation_holds);
        let v = r.offending_kernel_vector.expect("extra relation");
        assert!(build_moment_matrix(&beta).mul_vec(&v).iter().all(Zero::is_zero));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn measures_on_curve_give_psd_matrices(
            xs in proptest::collection::vec((-6i64..=6, 1i64..=3, 1i64..=4), 1..6),
            a in -3i64..=3,
            b in 0i64..=30,
        ) {
            let curve = CurveParams::new(int(a), int(b));
            let pts: Vec<(Rational, Rational)> = xs
                .iter()
                .map(|&(p, q, w)| (rat(p, q), int(w)))
                .filter(|(x, _)| curve.cubic(x) >= int(0))
                .collect();
            let (abscissae, weights): (Vec<_>, Vec<_>) = pts.into_iter().unzip();
            let beta = symmetric_moments(&abscissae, &weights, &curve, 6);
            let m = build_moment_matrix(&beta);
            prop_assert!(m.is_psd());
            prop_assert!(m.rank() <= 2 * abscissae.len());
            for v in curve_relation_vectors(3, &curve) {
                prop_assert!(m.mul_vec(&v).iter().all(Zero::is_zero));
            }
            let px = &curve.polynomial() * &BiPoly::term(int(1), 1, 1);
            prop_assert!(riesz(&beta, &px).unwrap().is_zero());
        }

        #[test]
        fn cusp_points_bound_rank(ts in proptest::collection::vec((-9i64..=9, 1i64..=4), 1..12)) {
            let atoms: Vec<(Rational, Rational)> = ts
                .iter()
                .map(|&(p, q)| {
                    let t = rat(p, q);
                    (&t * &t, &t * &t * &t)
                })
                .collect();
            let beta = moments_from_atoms(&atoms, &vec![int(1); atoms.len()], 6);
            let m = build_moment_matrix(&beta);
            prop_assert!(m.is_psd());
            prop_assert!(m.rank() <= atoms.len());
        }
    }
}
