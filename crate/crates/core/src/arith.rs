//! Exact arithmetic: big rationals and the real quadratic extension Q(sqrt(D)).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Shorthand for `n / d` with machine-sized parts.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"` (optional sign, no whitespace inside).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
    let (num, den) = match t.split_once('/') {
        Some((p, q)) => (p, q),
        None => (t, "1"),
    };
    let p: BigInt = num.parse().map_err(|_| bad())?;
    let q: BigInt = den.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(p, q))
}

/// Canonical string form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Returns `sqrt(x)` when `x` is the square of a rational.
///
/// Panics on negative input.
pub fn rational_sqrt(x: &Rational) -> Option<Rational> {
    assert!(!x.is_negative(), "rational_sqrt of a negative number");
    let n = x.numer().to_biguint()?;
    let d = x.denom().to_biguint()?;
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &sn * &sn == n && &sd * &sd == d {
        Some(Rational::new(BigInt::from(sn), BigInt::from(sd)))
    } else {
        None
    }
}

pub fn sign_of(r: &Rational) -> i8 {
    match r.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Binomial coefficient as a rational.
pub fn binomial(n: usize, k: usize) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(acc)
}

pub fn pow(r: &Rational, e: usize) -> Rational {
    num_traits::pow(r.clone(), e)
}

/// Serde adapter: rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// An element `u + v * sqrt(radicand)` of a real quadratic field.
///
/// Canonical form: the radicand is a non-negative integer that is not a
/// perfect square whenever `v != 0`; elements with `v == 0` carry radicand 0
/// so that equality is componentwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt {
    u: Rational,
    v: Rational,
    radicand: Rational,
}

impl QuadExt {
    pub fn new(u: Rational, v: Rational, radicand: Rational) -> Self {
        assert!(!radicand.is_negative(), "negative radicand");
        if v.is_zero() {
            return Self::rational(u);
        }
        // sqrt(p/q) = sqrt(p*q)/q keeps the radicand integral.
        let q = Rational::from_integer(radicand.denom().clone());
        let d = Rational::from_integer(radicand.numer() * radicand.denom());
        let v = v / q;
        match rational_sqrt(&d) {
            Some(s) => Self::rational(u + v * s),
            None => Self { u, v, radicand: d },
        }
    }

    pub fn rational(u: Rational) -> Self {
        Self {
            u,
            v: Rational::zero(),
            radicand: Rational::zero(),
        }
    }

    /// `sqrt(d)` for a non-negative rational `d`.
    pub fn sqrt_of(d: &Rational) -> Self {
        Self::new(Rational::zero(), Rational::one(), d.clone())
    }

    pub fn u(&self) -> &Rational {
        &self.u
    }

    pub fn v(&self) -> &Rational {
        &self.v
    }

    pub fn radicand(&self) -> &Rational {
        &self.radicand
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        if self.v.is_zero() {
            Some(&self.u)
        } else {
            None
        }
    }

    /// Exact sign of `u + v sqrt(D)`.
    pub fn sign(&self) -> i8 {
        let su = sign_of(&self.u);
        let sv = sign_of(&self.v);
        if sv == 0 {
            return su;
        }
        if su == 0 || su == sv {
            return sv;
        }
        // Opposite signs: the larger of u^2 and v^2 D wins.
        let uu = &self.u * &self.u;
        let vvd = &self.v * &self.v * &self.radicand;
        match uu.cmp(&vvd) {
            Ordering::Greater => su,
            Ordering::Less => sv,
            Ordering::Equal => 0,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            u: self.u.clone(),
            v: -self.v.clone(),
            radicand: self.radicand.clone(),
        }
    }

    /// Field norm `u^2 - v^2 D`.
    pub fn norm(&self) -> Rational {
        &self.u * &self.u - &self.v * &self.v * &self.radicand
    }

    fn common_radicand(&self, other: &Self) -> Rational {
        if self.v.is_zero() {
            return other.radicand.clone();
        }
        if other.v.is_zero() {
            return self.radicand.clone();
        }
        assert_eq!(
            self.radicand, other.radicand,
            "arithmetic across different quadratic fields"
        );
        self.radicand.clone()
    }

    fn raw(u: Rational, v: Rational, radicand: Rational) -> Self {
        if v.is_zero() {
            Self::rational(u)
        } else {
            Self { u, v, radicand }
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self.clone() - other.clone()).sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl Zero for QuadExt {
    fn zero() -> Self {
        QuadExt::rational(Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }
}

impl One for QuadExt {
    fn one() -> Self {
        QuadExt::rational(Rational::one())
    }
}

impl From<Rational> for QuadExt {
    fn from(u: Rational) -> Self {
        Self::rational(u)
    }
}

impl Add for QuadExt {
    type Output = QuadExt;
    fn add(self, o: QuadExt) -> QuadExt {
        let d = self.common_radicand(&o);
        QuadExt::raw(self.u + o.u, self.v + o.v, d)
    }
}

impl Sub for QuadExt {
    type Output = QuadExt;
    fn sub(self, o: QuadExt) -> QuadExt {
        let d = self.common_radicand(&o);
        QuadExt::raw(self.u - o.u, self.v - o.v, d)
    }
}

impl Mul for QuadExt {
    type Output = QuadExt;
    fn mul(self, o: QuadExt) -> QuadExt {
        let d = self.common_radicand(&o);
        let u = &self.u * &o.u + &self.v * &o.v * &d;
        let v = &self.u * &o.v + &self.v * &o.u;
        QuadExt::raw(u, v, d)
    }
}

impl Div for QuadExt {
    type Output = QuadExt;
    fn div(self, o: QuadExt) -> QuadExt {
        let n = o.norm();
        assert!(!n.is_zero(), "division by zero in Q(sqrt D)");
        let num = self * o.conj();
        QuadExt::raw(num.u / &n, num.v / &n, num.radicand)
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt::raw(-self.u, -self.v, self.radicand)
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            write!(f, "{}", format_rational(&self.u))
        } else {
            write!(
                f,
                "{} + {}*sqrt({})",
                format_rational(&self.u),
                format_rational(&self.v),
                format_rational(&self.radicand)
            )
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuadExtRepr {
    #[serde(with = "serde_rational")]
    u: Rational,
    #[serde(with = "serde_rational")]
    v: Rational,
    #[serde(with = "serde_rational")]
    radicand: Rational,
}

impl Serialize for QuadExt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QuadExtRepr {
            u: self.u.clone(),
            v: self.v.clone(),
            radicand: self.radicand.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadExt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = QuadExtRepr::deserialize(d)?;
        if r.radicand.is_negative() {
            return Err(D::Error::custom("negative radicand"));
        }
        Ok(QuadExt::new(r.u, r.v, r.radicand))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(u: i64, v: i64, d: i64) -> QuadExt {
        QuadExt::new(int(u), int(v), int(d))
    }

    #[test]
    fn sign_examples() {
        assert_eq!(q(0, 0, 2).sign(), 0);
        assert_eq!(q(3, -2, 2).sign(), 1);
        assert_eq!(q(-1, 1, 2).sign(), 1);
        assert_eq!(q(1, -1, 2).sign(), -1);
        assert_eq!(q(-3, 2, 2).sign(), -1);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(rational_sqrt(&int(0)), Some(int(0)));
        assert_eq!(rational_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rational_sqrt(&int(2)), None);
        assert_eq!(rational_sqrt(&rat(2, 9)), None);
    }

    #[test]
    #[should_panic]
    fn sqrt_negative_panics() {
        rational_sqrt(&int(-1));
    }

    #[test]
    fn perfect_square_radicand_collapses() {
        let x = q(1, 2, 9);
        assert_eq!(x, QuadExt::rational(int(7)));
        assert_eq!(x.as_rational(), Some(&int(7)));
    }

    #[test]
    fn rational_radicand_is_normalized() {
        // sqrt(1/2) = sqrt(2)/2
        let x = QuadExt::sqrt_of(&rat(1, 2));
        assert_eq!(x, QuadExt::new(int(0), rat(1, 2), int(2)));
        assert_eq!((x.clone() * x).as_rational(), Some(&rat(1, 2)));
    }

    #[test]
    fn field_ops() {
        let a = q(1, 1, 2);
        let b = q(3, -1, 2);
        let p = a.clone() * b.clone();
        assert_eq!(p, q(1, 2, 2));
        let back = p / b;
        assert_eq!(back, a);
        assert_eq!((a.clone() - a).sign(), 0);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("-524287/262144").unwrap(), rat(-524287, 262144));
        assert_eq!(parse_rational("10").unwrap(), int(10));
        assert_eq!(parse_rational("4/6").unwrap(), rat(2, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&rat(-6, 4)), "-3/2");
        assert_eq!(format_rational(&int(5)), "5");
    }

    #[test]
    fn quad_serde() {
        let x = q(1, -3, 5);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"u":"1","v":"-3","radicand":"5"}"#);
        let y: QuadExt = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }
}
