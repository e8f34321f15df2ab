//! The ordered-field abstraction shared by the exact and numeric solvers.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::arith::{sign_of, QuadExt, Rational};
use crate::linalg::Matrix;
use crate::numeric::{self, Real};

/// An ordered field with decidable (or tolerance-decided) sign.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic and sign decisions are exact.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;
    fn sign(&self) -> i8;
    fn to_real(&self, prec: usize) -> Real;
    fn to_rational(&self) -> Option<Rational>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(n.into()))
    }

    /// Guess an exact field element close to `x`. The guess is the simplest
    /// rational near `x + offset`, shifted back by `offset`; callers verify it.
    fn recognize(x: &Real, offset: &Self) -> Option<Self> {
        let prec = x.precision().max(64);
        let shifted = x.clone() + offset.to_real(prec);
        let tol = numeric::pow2_neg(prec * 3 / 4, prec);
        let r = numeric::simplest_near(&shifted, &tol);
        Some(Self::from_rational(&r) - offset.clone())
    }

    /// Field element for a floating value. Only inexact fields accept one.
    fn from_real(_x: &Real) -> Option<Self> {
        None
    }

    /// JSON form: exact values are strings or `{"u","v","radicand"}` objects,
    /// approximate ones are decimal strings.
    fn to_json(&self) -> serde_json::Value;

    /// Exact rank. The default is Gaussian elimination with the first
    /// nonzero pivot in row-major order.
    fn rank(m: &Matrix<Self>) -> usize {
        crate::linalg::gauss_rank(m)
    }
}

impl Field for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn sign(&self) -> i8 {
        sign_of(self)
    }
    fn to_real(&self, prec: usize) -> Real {
        numeric::to_real(self, prec)
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(crate::arith::format_rational(self))
    }
    fn rank(m: &Matrix<Self>) -> usize {
        crate::linalg::bareiss_rank(m)
    }
}

impl Field for QuadExt {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        QuadExt::rational(r.clone())
    }
    fn sign(&self) -> i8 {
        QuadExt::sign(self)
    }
    fn to_real(&self, prec: usize) -> Real {
        // Guard digits: u and v*sqrt(D) may nearly cancel.
        let p = prec + 64;
        let s = numeric::sqrt(&numeric::to_real(self.radicand(), p));
        let x = numeric::to_real(self.u(), p) + numeric::to_real(self.v(), p) * s;
        x.with_precision(prec).value()
    }
    fn to_rational(&self) -> Option<Rational> {
        self.as_rational().cloned()
    }
    fn to_json(&self) -> serde_json::Value {
        match self.as_rational() {
            Some(r) => serde_json::Value::String(crate::arith::format_rational(r)),
            None => serde_json::to_value(self).expect("json"),
        }
    }
}

/// Precision used by [`Approx`].
pub const APPROX_PRECISION: usize = 256;

/// Magnitudes at or below this are treated as zero by [`Approx`], as a power
/// of ten.
pub const APPROX_TOLERANCE_EXP10: usize = 30;

/// High-precision floating value whose sign uses an absolute tolerance of
/// `1e-30`. Used when the support constants are not expressible exactly.
#[derive(Clone, Debug)]
pub struct Approx(pub Real);

impl Approx {
    pub fn tolerance() -> Real {
        numeric::pow10_neg(APPROX_TOLERANCE_EXP10, APPROX_PRECISION)
    }

    pub fn value(&self) -> &Real {
        &self.0
    }
}

impl PartialEq for Approx {
    fn eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).sign() == 0
    }
}

impl Add for Approx {
    type Output = Approx;
    fn add(self, o: Approx) -> Approx {
        Approx(self.0 + o.0)
    }
}
impl Sub for Approx {
    type Output = Approx;
    fn sub(self, o: Approx) -> Approx {
        Approx(self.0 - o.0)
    }
}
impl Mul for Approx {
    type Output = Approx;
    fn mul(self, o: Approx) -> Approx {
        Approx(self.0 * o.0)
    }
}
impl Div for Approx {
    type Output = Approx;
    fn div(self, o: Approx) -> Approx {
        Approx(self.0 / o.0)
    }
}
impl Neg for Approx {
    type Output = Approx;
    fn neg(self) -> Approx {
        Approx(-self.0)
    }
}

impl Zero for Approx {
    fn zero() -> Self {
        Approx(numeric::zero(APPROX_PRECISION))
    }
    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
}

impl One for Approx {
    fn one() -> Self {
        Approx(numeric::one(APPROX_PRECISION))
    }
}

impl Field for Approx {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        Approx(numeric::to_real(r, APPROX_PRECISION))
    }
    fn sign(&self) -> i8 {
        numeric::sign_with_tol(&self.0, &Self::tolerance())
    }
    fn to_real(&self, prec: usize) -> Real {
        self.0.clone().with_precision(prec).value()
    }
    fn to_rational(&self) -> Option<Rational> {
        None
    }
    fn from_real(x: &Real) -> Option<Self> {
        Some(Approx(x.clone().with_precision(APPROX_PRECISION).value()))
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(numeric::format_real(&self.0, 40))
    }
}

/// Exact comparison helper: `a < b`.
pub fn lt<F: Field>(a: &F, b: &F) -> bool {
    (a.clone() - b.clone()).sign() < 0
}

/// Larger of two field elements.
pub fn max<F: Field>(a: F, b: F) -> F {
    if lt(&a, &b) {
        b
    } else {
        a
    }
}
