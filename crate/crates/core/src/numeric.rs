//! High-precision floating point helpers used by the numeric stages
//! (atom extraction, irrational cubic roots).

use dashu::base::{Abs, SquareRoot};
use dashu::float::round::mode::HalfEven;
use dashu::float::FBig;
use dashu::integer::{IBig, Sign as DSign, UBig};
use dashu::rational::RBig;
use num_bigint::{BigInt, Sign};
use num_traits::Zero;

use crate::arith::Rational;

/// Binary floating point with round-half-even and instance-chosen precision.
pub type Real = FBig<HalfEven, 2>;

pub const DEFAULT_PRECISION: usize = 128;

fn to_ibig(n: &BigInt) -> IBig {
    let mag = UBig::from_le_bytes(&n.magnitude().to_bytes_le());
    match n.sign() {
        Sign::Minus => IBig::from_parts(DSign::Negative, mag),
        _ => IBig::from(mag),
    }
}

fn from_ibig(n: &IBig) -> BigInt {
    let (sign, mag) = n.clone().into_parts();
    let m = BigInt::from_bytes_le(Sign::Plus, &mag.to_le_bytes());
    if sign == DSign::Negative {
        -m
    } else {
        m
    }
}

pub fn to_rbig(r: &Rational) -> RBig {
    let den = UBig::from_le_bytes(&r.denom().magnitude().to_bytes_le());
    RBig::from_parts(to_ibig(r.numer()), den)
}

pub fn from_rbig(r: &RBig) -> Rational {
    let num = from_ibig(r.numerator());
    let den = BigInt::from_bytes_le(Sign::Plus, &r.denominator().to_le_bytes());
    Rational::new(num, den)
}

/// Rounds a rational to `prec` bits.
pub fn to_real(r: &Rational, prec: usize) -> Real {
    if r.is_zero() {
        return zero(prec);
    }
    to_rbig(r).to_float(prec).value()
}

pub fn from_i64(n: i64, prec: usize) -> Real {
    Real::from(n).with_precision(prec).value()
}

pub fn zero(prec: usize) -> Real {
    Real::ZERO.with_precision(prec).value()
}

pub fn one(prec: usize) -> Real {
    Real::ONE.with_precision(prec).value()
}

/// The exact dyadic rational represented by `x`.
pub fn exact_rational(x: &Real) -> Rational {
    let sig = from_ibig(x.repr().significand());
    let e = x.repr().exponent();
    let two = BigInt::from(2);
    if e >= 0 {
        Rational::from_integer(sig * num_traits::pow(two, e as usize))
    } else {
        Rational::new(sig, num_traits::pow(two, (-e) as usize))
    }
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn abs(x: &Real) -> Real {
    x.clone().abs()
}

pub fn sqrt(x: &Real) -> Real {
    x.sqrt()
}

pub fn is_neg(x: &Real) -> bool {
    x.sign() == DSign::Negative && !x.repr().is_zero()
}

/// `2^-k` at precision `prec`.
pub fn pow2_neg(k: usize, prec: usize) -> Real {
    one(prec) / from_i64(2, prec).powi(IBig::from(k))
}

/// `10^-k` at precision `prec`.
pub fn pow10_neg(k: usize, prec: usize) -> Real {
    one(prec) / from_i64(10, prec).powi(IBig::from(k))
}

/// Parses a decimal or scientific literal such as `1e-20`.
pub fn parse_real(s: &str, prec: usize) -> Option<Real> {
    let d: dashu::float::DBig = s.trim().parse().ok()?;
    Some(d.with_rounding::<HalfEven>().with_base_and_precision::<2>(prec).value())
}

/// Decimal rendering with `digits` significant digits.
pub fn format_real(x: &Real, digits: usize) -> String {
    if x.repr().is_zero() {
        return "0".to_string();
    }
    let d = x.clone().with_base_and_precision::<10>(digits).value();
    d.to_string()
}

/// The simplest rational strictly between `lo` and `hi`, or `lo` when they
/// coincide.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    if lo == hi {
        return lo.clone();
    }
    from_rbig(&RBig::simplest_in(to_rbig(lo), to_rbig(hi)))
}

/// Simplest rational within `tol` of `x` (exclusive bounds).
pub fn simplest_near(x: &Real, tol: &Real) -> Rational {
    let lo = exact_rational(&(x.clone() - tol.clone()));
    let hi = exact_rational(&(x.clone() + tol.clone()));
    simplest_between(&lo, &hi)
}

pub type RMatrix = Vec<Vec<Real>>;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &RMatrix) -> Option<RMatrix> {
    let n = a.len();
    let prec = precision_of(a);
    let mut l = vec![vec![zero(prec); n]; n];
    for j in 0..n {
        let mut d = a[j][j].clone();
        for k in 0..j {
            d -= l[j][k].clone() * l[j][k].clone();
        }
        if d.sign() == DSign::Negative || d.repr().is_zero() {
            return None;
        }
        let s = d.sqrt();
        for i in j + 1..n {
            let mut t = a[i][j].clone();
            for k in 0..j {
                t -= l[i][k].clone() * l[j][k].clone();
            }
            l[i][j] = t / s.clone();
        }
        l[j][j] = s;
    }
    Some(l)
}

fn precision_of(a: &RMatrix) -> usize {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|x| x.precision())
        .max()
        .unwrap_or(DEFAULT_PRECISION)
        .max(1)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &RMatrix) -> RMatrix {
    let n = l.len();
    let prec = precision_of(l);
    let mut inv = vec![vec![zero(prec); n]; n];
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { one(prec) } else { zero(prec) };
            for k in col..i {
                s -= l[i][k].clone() * inv[k][col].clone();
            }
            inv[i][col] = s / l[i][i].clone();
        }
    }
    inv
}

pub fn matmul(a: &RMatrix, b: &RMatrix) -> RMatrix {
    let prec = precision_of(a).max(precision_of(b));
    let m = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    row.iter()
                        .zip(b.iter())
                        .fold(zero(prec), |acc, (x, br)| acc + x.clone() * br[j].clone())
                })
                .collect()
        })
        .collect()
}

pub fn transpose(a: &RMatrix) -> RMatrix {
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are eigenvectors.
pub fn jacobi_eigen(a: &RMatrix) -> (Vec<Real>, RMatrix) {
    let n = a.len();
    let prec = precision_of(a);
    let mut a = a.clone();
    let mut v: RMatrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one(prec) } else { zero(prec) }).collect())
        .collect();
    let eps = pow2_neg(prec.saturating_sub(4), prec);
    let frob = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(zero(prec), |acc, x| acc + x.clone() * x.clone());
    let target = frob * eps.clone() * eps;
    let two = from_i64(2, prec);
    for _sweep in 0..100 {
        let mut off = zero(prec);
        for (i, row) in a.iter().enumerate() {
            for x in &row[i + 1..] {
                off += x.clone() * x.clone();
            }
        }
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].repr().is_zero() {
                    continue;
                }
                let theta = (a[q][q].clone() - a[p][p].clone()) / (two.clone() * a[p][q].clone());
                let denom = theta.clone().abs() + (theta.clone() * theta.clone() + one(prec)).sqrt();
                let mut t = one(prec) / denom;
                if is_neg(&theta) {
                    t = -t;
                }
                let c = one(prec) / (t.clone() * t.clone() + one(prec)).sqrt();
                let s = t.clone() * c.clone();
                for k in 0..n {
                    let akp = a[k][p].clone();
                    let akq = a[k][q].clone();
                    a[k][p] = c.clone() * akp.clone() - s.clone() * akq.clone();
                    a[k][q] = s.clone() * akp + c.clone() * akq;
                }
                for k in 0..n {
                    let apk = a[p][k].clone();
                    let aqk = a[q][k].clone();
                    a[p][k] = c.clone() * apk.clone() - s.clone() * aqk.clone();
                    a[q][k] = s.clone() * apk + c.clone() * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p].clone();
                    let vkq = row[q].clone();
                    row[p] = c.clone() * vkp.clone() - s.clone() * vkq.clone();
                    row[q] = s.clone() * vkp + c.clone() * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[i][i].clone()).collect();
    (vals, v)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &RMatrix, b: &[Real]) -> Option<Vec<Real>> {
    let n = a.len();
    let mut m: RMatrix = a
        .iter()
        .zip(b)
        .map(|(r, x)| {
            let mut r = r.clone();
            r.push(x.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i][col]
                .clone()
                .abs()
                .partial_cmp(&m[j][col].clone().abs())
                .unwrap()
        })?;
        if m[piv][col].repr().is_zero() {
            return None;
        }
        m.swap(col, piv);
        for i in col + 1..n {
            let f = m[i][col].clone() / m[col][col].clone();
            for j in col..=n {
                let t = f.clone() * m[col][j].clone();
                m[i][j] -= t;
            }
        }
    }
    let prec = precision_of(&m);
    let mut x = vec![zero(prec); n];
    for i in (0..n).rev() {
        let mut s = m[i][n].clone();
        for j in i + 1..n {
            s -= m[i][j].clone() * x[j].clone();
        }
        x[i] = s / m[i][i].clone();
    }
    Some(x)
}

/// Sign of `x` treating magnitudes at or below `tol` as zero.
pub fn sign_with_tol(x: &Real, tol: &Real) -> i8 {
    if x.clone().abs() <= *tol {
        0
    } else if is_neg(x) {
        -1
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    #[test]
    fn rational_round_trip() {
        for r in [rat(2, 3), rat(-7, 5), int(0), rat(1, 1 << 40)] {
            let x = to_real(&r, 256);
            let back = simplest_near(&x, &pow2_neg(200, 256));
            assert_eq!(back, r);
        }
        let x = to_real(&rat(3, 8), 64);
        assert_eq!(exact_rational(&x), rat(3, 8));
    }

    #[test]
    fn simplest_examples() {
        assert_eq!(simplest_between(&rat(1234, 5678), &rat(1235, 5679)), rat(5, 23));
        assert_eq!(simplest_between(&rat(-1, 3), &rat(1, 2)), int(0));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let p = 128;
        let a: RMatrix = vec![
            vec![from_i64(2, p), from_i64(1, p)],
            vec![from_i64(1, p), from_i64(2, p)],
        ];
        let (vals, _) = jacobi_eigen(&a);
        let mut v: Vec<f64> = vals.iter().map(to_f64).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((v[0] - 1.0).abs() < 1e-30 && (v[1] - 3.0).abs() < 1e-30);
    }

    #[test]
    fn cholesky_and_solve() {
        let p = 128;
        let a: RMatrix = vec![
            vec![from_i64(4, p), from_i64(2, p)],
            vec![from_i64(2, p), from_i64(3, p)],
        ];
        let l = cholesky(&a).unwrap();
        let back = matmul(&l, &transpose(&l));
        for i in 0..2 {
            for j in 0..2 {
                let d = back[i][j].clone() - a[i][j].clone();
                assert!(to_f64(&d).abs() < 1e-35);
            }
        }
        let x = solve(&a, &[from_i64(6, p), from_i64(5, p)]).unwrap();
        assert!((to_f64(&x[0]) - 1.0).abs() < 1e-35);
        assert!((to_f64(&x[1]) - 1.0).abs() < 1e-35);
        let li = lower_inverse(&l);
        let id = matmul(&li, &l);
        assert!((to_f64(&id[1][1]) - 1.0).abs() < 1e-35);
        assert!(to_f64(&id[1][0]).abs() < 1e-35);
    }

    #[test]
    fn parse_and_format() {
        let x = parse_real("1e-20", 128).unwrap();
        assert!((to_f64(&x) - 1e-20).abs() < 1e-35);
        assert_eq!(format_real(&from_i64(5, 128), 10), "5");
    }
}
