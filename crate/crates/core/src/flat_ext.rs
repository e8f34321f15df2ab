//! The quadratic `R(theta)` and the flat extension `M(n+1)`.
//!
//! For a psd, `p`-pure `M(n)` the degree `2n+1` moments are fixed by the curve
//! relation except `theta = beta_{2,2n-1}`, `phi = beta_{1,2n}` and
//! `psi = beta_{0,2n+1}`. A flat extension exists exactly when the quadratic
//! `R(theta) = Q(theta, phi*(theta), psi*(theta, phi*(theta)))` has a real root.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{rational_sqrt, serde_rational, QuadExt, Rational};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{dot, Matrix};
use crate::moments::{
    basis_b, build_moment_matrix, monomial_index, monomials, BivariateMoments, CurveParams,
};

/// Everything derived from the compression `[M(n)]_B` that `R` depends on.
///
/// Vectors are 0-based; the block names follow the block inverse
/// `[M(n)]_B^{-1} = [[P, v], [v^t, eps]]` of `[M(n)]_B = [[M, x], [x^t, beta_{0,2n}]]`,
/// with `P = [[Q, u], [u^t, pc]]`.
#[derive(Clone, Debug)]
pub struct CompressedData {
    pub n: usize,
    pub curve: CurveParams,
    pub beta: BivariateMoments,
    pub basis: Vec<(usize, usize)>,
    pub mb: Matrix<Rational>,
    pub mb_inv: Matrix<Rational>,
    pub m_block: Matrix<Rational>,
    pub x: Vec<Rational>,
    pub eps: Rational,
    pub v: Vec<Rational>,
    pub p: Matrix<Rational>,
    pub q_block: Matrix<Rational>,
    pub u: Vec<Rational>,
    pub pc: Rational,
    /// Fixed part of `[X^2 Y^(n-1)]_B`, length `3n-1`.
    pub w: Vec<Rational>,
    /// Fixed part of `[X Y^n]_B`, length `3n-2`.
    pub q: Vec<Rational>,
    /// Fixed part of `[Y^(n+1)]_B`, length `3n-3`.
    pub p_vec: Vec<Rational>,
    /// `beta_{i+3, 2n-i-2}` for `i = 0..=2n-2`, keyed by index pair.
    pub recursive: BTreeMap<(usize, usize), Rational>,
}

impl CompressedData {
    /// A moment of degree at most `2n+1` that does not involve the free
    /// parameters.
    pub fn fixed_moment(&self, i: usize, j: usize) -> Rational {
        if i + j <= 2 * self.n {
            self.beta.at(i, j).clone()
        } else {
            self.recursive
                .get(&(i, j))
                .unwrap_or_else(|| panic!("beta_{{{i},{j}}} is a free parameter"))
                .clone()
        }
    }
}

/// Compresses `M(n)` to the basis `B` and precomputes the block inverse.
pub fn compress(beta: &BivariateMoments, curve: &CurveParams) -> Result<CompressedData> {
    let n = beta.n();
    if n < 2 || beta.degree() != 2 * n {
        return Err(Error::Invalid("need an even degree 2n with n >= 2".into()));
    }
    let m = build_moment_matrix(beta);
    let basis = basis_b(n);
    let idx: Vec<usize> = basis.iter().map(|&(i, j)| monomial_index(i, j)).collect();
    let mb = m.principal(&idx);
    let mb_inv = mb
        .invert()
        .map_err(|_| Error::Consistency("[M(n)]_B is singular although M(n) is pure".into()))?;

    let dim = basis.len();
    let last = dim - 1;
    let lead: Vec<usize> = (0..last).collect();
    let m_block = mb.principal(&lead);
    let x: Vec<Rational> = (0..last).map(|i| mb.get(i, last).clone()).collect();
    let m_inv = m_block
        .invert()
        .map_err(|_| Error::Consistency("leading block of [M(n)]_B is singular".into()))?;
    let minv_x = m_inv.mul_vec(&x);
    let schur = beta.at(0, 2 * n) - dot(&x, &minv_x);
    if schur.is_zero() {
        return Err(Error::Consistency("zero Schur complement in [M(n)]_B".into()));
    }
    let eps = Rational::one() / schur;
    let v: Vec<Rational> = minv_x.iter().map(|t| -(&eps * t)).collect();
    let p = Matrix::from_fn(last, last, |i, j| {
        m_inv.get(i, j) + &eps * &minv_x[i] * &minv_x[j]
    });
    // The block-inverse identities must reproduce the direct inverse.
    for i in 0..dim {
        for j in 0..dim {
            let want = match (i == last, j == last) {
                (false, false) => p.get(i, j).clone(),
                (false, true) => v[i].clone(),
                (true, false) => v[j].clone(),
                (true, true) => eps.clone(),
            };
            if mb_inv.get(i, j) != &want {
                return Err(Error::Consistency("block inverse mismatch".into()));
            }
        }
    }
    let qd = last - 1;
    let q_lead: Vec<usize> = (0..qd).collect();
    let q_block = p.principal(&q_lead);
    let u: Vec<Rational> = (0..qd).map(|i| p.get(i, qd).clone()).collect();
    let pc = p.get(qd, qd).clone();

    // beta_{i+3, 2n-i-2} = beta_{i, 2n-i} - a beta_{i+1, 2n-i-2} - b beta_{i, 2n-i-2}
    let mut recursive = BTreeMap::new();
    for i in 0..=(2 * n - 2) {
        let val = beta.at(i, 2 * n - i)
            - &curve.a * beta.at(i + 1, 2 * n - i - 2)
            - &curve.b * beta.at(i, 2 * n - i - 2);
        recursive.insert((i + 3, 2 * n - i - 2), val);
    }

    let mut cd = CompressedData {
        n,
        curve: curve.clone(),
        beta: beta.clone(),
        basis,
        mb,
        mb_inv,
        m_block,
        x,
        eps,
        v,
        p,
        q_block,
        u,
        pc,
        w: vec![],
        q: vec![],
        p_vec: vec![],
        recursive,
    };
    let col = |cd: &CompressedData, (ci, cj): (usize, usize), len: usize| -> Vec<Rational> {
        cd.basis[..len]
            .iter()
            .map(|&(i, j)| cd.fixed_moment(i + ci, j + cj))
            .collect()
    };
    cd.w = col(&cd, (2, n - 1), 3 * n - 1);
    cd.q = col(&cd, (1, n), 3 * n - 2);
    cd.p_vec = col(&cd, (0, n + 1), 3 * n - 3);
    Ok(cd)
}

/// The coefficients of `R(theta)` together with the intermediate expansions
/// of `phi*`, `psi*`, and both sides of the last moment-structure identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RThetaPoly {
    #[serde(with = "serde_rational")]
    pub r2: Rational,
    #[serde(with = "serde_rational")]
    pub r1: Rational,
    #[serde(with = "serde_rational")]
    pub r0: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(skip)]
    pub ledger: Ledger,
}

/// Intermediate coefficients.
///
/// `phi* = f2 t^2 + f1 t + f0`;
/// `psi*(t, phi) = j11 phi t + j10 phi + j02 t^2 + j01 t + j00`, which becomes
/// `j3 t^3 + ... + j0` after substituting `phi*`;
/// `[Y^(n+1)]^t [M]_B^{-1} [X^2 Y^(n-1)]` expands through the `k` family and
/// `[XY^n]^t [M]_B^{-1} [XY^n]` through the `l` family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ledger {
    pub f: [Rational; 3],
    pub j11: Rational,
    pub j10: Rational,
    pub j02: Rational,
    pub j01: Rational,
    pub j00: Rational,
    pub j: [Rational; 4],
    pub k101: Rational,
    pub k100: Rational,
    pub k011: Rational,
    pub k010: Rational,
    pub k002: Rational,
    pub k001: Rational,
    pub k000: Rational,
    pub k: [Rational; 5],
    pub l20: Rational,
    pub l11: Rational,
    pub l10: Rational,
    pub l02: Rational,
    pub l01: Rational,
    pub l00: Rational,
    pub l: [Rational; 5],
}

impl RThetaPoly {
    pub fn from_coeffs(r2: Rational, r1: Rational, r0: Rational) -> Self {
        let delta = &r1 * &r1 - Rational::from_integer(4.into()) * &r0 * &r2;
        RThetaPoly {
            r2,
            r1,
            r0,
            delta,
            ledger: Ledger::default(),
        }
    }

    pub fn eval<F: Field>(&self, t: &F) -> F {
        (F::from_rational(&self.r2) * t.clone() + F::from_rational(&self.r1)) * t.clone()
            + F::from_rational(&self.r0)
    }
}

fn horner(c: &[Rational], t: &QuadExt) -> QuadExt {
    c.iter().rev().fold(QuadExt::zero(), |acc, x| {
        acc * t.clone() + QuadExt::from_rational(x)
    })
}

/// Computes `R(theta)` through the closed-form coefficient expansions.
///
/// The quartic and cubic coefficients of the two sides must cancel; a
/// mismatch is reported as an internal consistency error.
pub fn compute_r(cd: &CompressedData) -> Result<RThetaPoly> {
    let n = cd.n;
    let (a, b) = (&cd.curve.a, &cd.curve.b);
    let beta = &cd.beta;
    let eps = &cd.eps;
    let v = &cd.v;
    let w = &cd.w;
    let q = &cd.q;
    let pv = &cd.p_vec;
    let last = 3 * n - 2; // 0-based index of entry 3n-1
    let rw: Vec<Rational> = (0..=last).map(|i| dot(cd.p.row(i), w)).collect();

    let f2 = eps.clone();
    let f1 = Rational::from_integer(2.into()) * dot(v, w);
    let f0 = dot(&rw, w) + a * beta.at(2, 2 * n - 2) + b * beta.at(1, 2 * n - 2);

    let vw = dot(v, w);
    let j11 = eps.clone();
    let j10 = vw.clone();
    let j02 = v[last].clone();
    let j01 = rw[last].clone() + dot(&v[..last], q);
    let j00 = dot(&rw[..last], q) + a * beta.at(1, 2 * n - 1) + b * beta.at(0, 2 * n - 1);
    let j3 = &j11 * &f2;
    let j2 = &j11 * &f1 + &j10 * &f2 + &j02;
    let j1 = &j11 * &f0 + &j10 * &f1 + &j01;
    let j0 = &j10 * &f0 + &j00;

    let k101 = eps.clone();
    let k100 = vw;
    let k011 = v[last].clone();
    let k010 = rw[last].clone();
    let k002 = v[last - 1].clone();
    let k001 = rw[last - 1].clone() + dot(&v[..last - 1], pv);
    let k000 = dot(&rw[..last - 1], pv);
    let k4 = &k101 * &j3;
    let k3 = &k101 * &j2 + &k100 * &j3 + &k011 * &f2;
    let k2 = &k101 * &j1 + &k100 * &j2 + &k011 * &f1 + &k010 * &f2 + &k002;
    let k1 = &k101 * &j0 + &k100 * &j1 + &k011 * &f0 + &k010 * &f1 + &k001;
    let k0 = &k100 * &j0 + &k010 * &f0 + &k000;

    let two = Rational::from_integer(2.into());
    let l20 = eps.clone();
    let l11 = &two * &v[last];
    let l10 = &two * dot(&v[..last], q);
    let l02 = cd.pc.clone();
    let l01 = &two * dot(&cd.u, q);
    let l00 = dot(&cd.q_block.mul_vec(q), q);
    let l4 = &l20 * &f2 * &f2;
    let l3 = &two * &l20 * &f2 * &f1 + &l11 * &f2;
    let l2 = &l20 * (&two * &f2 * &f0 + &f1 * &f1) + &l11 * &f1 + &l10 * &f2 + &l02;
    let l1 = &two * &l20 * &f1 * &f0 + &l11 * &f0 + &l10 * &f1 + &l01;
    let l0 = &l20 * &f0 * &f0 + &l10 * &f0 + &l00;

    if k4 != l4 || k3 != l3 {
        return Err(Error::Consistency(
            "quartic or cubic terms of R(theta) do not cancel".into(),
        ));
    }
    let mut r = RThetaPoly::from_coeffs(&k2 - &l2, &k1 - &l1, &k0 - &l0);
    r.ledger = Ledger {
        f: [f0, f1, f2],
        j11,
        j10,
        j02,
        j01,
        j00,
        j: [j0, j1, j2, j3],
        k101,
        k100,
        k011,
        k010,
        k002,
        k001,
        k000,
        k: [k0, k1, k2, k3, k4],
        l20,
        l11,
        l10,
        l02,
        l01,
        l00,
        l: [l0, l1, l2, l3, l4],
    };
    Ok(r)
}

/// Real roots of `R`.
#[derive(Clone, Debug, PartialEq)]
pub enum RRoots {
    /// No real root: no flat extension exists.
    NoRoot,
    /// `R` vanishes identically; every `theta` is a root.
    Identically,
    /// `R` is linear with one root.
    Linear(QuadExt),
    /// `Delta = 0`.
    Double(QuadExt),
    /// `Delta > 0`: the `-sqrt(Delta)` root first, then the `+sqrt(Delta)` one.
    Two(QuadExt, QuadExt),
}

impl RRoots {
    pub fn all(&self) -> Vec<QuadExt> {
        match self {
            RRoots::NoRoot => vec![],
            RRoots::Identically => vec![QuadExt::zero()],
            RRoots::Linear(t) | RRoots::Double(t) => vec![t.clone()],
            RRoots::Two(a, b) => vec![a.clone(), b.clone()],
        }
    }

    /// The default root: smaller `|theta|`, ties to the `-sqrt(Delta)` branch.
    pub fn preferred(&self) -> Option<QuadExt> {
        match self {
            RRoots::Two(m, p) => {
                let abs = |t: &QuadExt| if t.sign() < 0 { -t.clone() } else { t.clone() };
                if abs(p).cmp_value(&abs(m)).is_lt() {
                    Some(p.clone())
                } else {
                    Some(m.clone())
                }
            }
            other => other.all().into_iter().next(),
        }
    }
}

/// Full case analysis of the roots of `R`, exact in `Q(sqrt(Delta))`.
pub fn solve_r(r: &RThetaPoly) -> RRoots {
    if r.r2.is_zero() {
        return match (r.r1.is_zero(), r.r0.is_zero()) {
            (true, true) => RRoots::Identically,
            (true, false) => RRoots::NoRoot,
            (false, _) => RRoots::Linear(QuadExt::rational(-&r.r0 / &r.r1)),
        };
    }
    let two_r2 = Rational::from_integer(2.into()) * &r.r2;
    let center = -&r.r1 / &two_r2;
    if r.delta.is_negative() {
        return RRoots::NoRoot;
    }
    if r.delta.is_zero() {
        return RRoots::Double(QuadExt::rational(center));
    }
    let half = Rational::one() / &two_r2;
    let (minus, plus) = match rational_sqrt(&r.delta) {
        Some(s) => (
            QuadExt::rational(&center - &s * &half),
            QuadExt::rational(&center + &s * &half),
        ),
        None => (
            QuadExt::new(center.clone(), -half.clone(), r.delta.clone()),
            QuadExt::new(center, half, r.delta.clone()),
        ),
    };
    RRoots::Two(minus, plus)
}

/// How many flat extensions the data admits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    Unique,
    OneOfTwo,
    OneOfInfinitely,
}

/// A verified flat extension `M(n+1)` of `M(n)`.
#[derive(Clone, Debug)]
pub struct FlatExtension {
    pub n: usize,
    pub theta: QuadExt,
    pub phi: QuadExt,
    pub psi: QuadExt,
    /// `B(n+1)`: rows indexed by monomials of degree `<= n`, columns by
    /// those of degree `n+1`.
    pub b_block: Matrix<QuadExt>,
    pub c_hat: Matrix<QuadExt>,
    pub mn1: Matrix<QuadExt>,
    /// All moments of degree `<= 2n+2` read off `M(n+1)`.
    pub moments: BTreeMap<(usize, usize), QuadExt>,
    pub multiplicity: Multiplicity,
}

fn qx(r: &Rational) -> QuadExt {
    QuadExt::from_rational(r)
}

fn quad_dot(a: &[QuadExt], m: &Matrix<QuadExt>, b: &[QuadExt]) -> QuadExt {
    dot(a, &m.mul_vec(b))
}

/// `phi*(theta)` evaluated directly from its definition.
pub fn phi_star(cd: &CompressedData, theta: &QuadExt) -> QuadExt {
    let n = cd.n;
    let inv = cd.mb_inv.map(qx);
    let mut c1: Vec<QuadExt> = cd.w.iter().map(qx).collect();
    c1.push(theta.clone());
    quad_dot(&c1, &inv, &c1)
        + qx(&(&cd.curve.a * cd.beta.at(2, 2 * n - 2) + &cd.curve.b * cd.beta.at(1, 2 * n - 2)))
}

/// `psi*(theta, phi)` evaluated directly from its definition.
pub fn psi_star(cd: &CompressedData, theta: &QuadExt, phi: &QuadExt) -> QuadExt {
    let n = cd.n;
    let inv = cd.mb_inv.map(qx);
    let mut c1: Vec<QuadExt> = cd.w.iter().map(qx).collect();
    c1.push(theta.clone());
    let mut c2: Vec<QuadExt> = cd.q.iter().map(qx).collect();
    c2.extend([theta.clone(), phi.clone()]);
    quad_dot(&c2, &inv, &c1)
        + qx(&(&cd.curve.a * cd.beta.at(1, 2 * n - 1) + &cd.curve.b * cd.beta.at(0, 2 * n - 1)))
}

/// `Q(theta, phi, psi)` evaluated directly from its definition.
pub fn q_form(cd: &CompressedData, theta: &QuadExt, phi: &QuadExt, psi: &QuadExt) -> QuadExt {
    let inv = cd.mb_inv.map(qx);
    let mut c1: Vec<QuadExt> = cd.w.iter().map(qx).collect();
    c1.push(theta.clone());
    let mut c2: Vec<QuadExt> = cd.q.iter().map(qx).collect();
    c2.extend([theta.clone(), phi.clone()]);
    let mut c3: Vec<QuadExt> = cd.p_vec.iter().map(qx).collect();
    c3.extend([theta.clone(), phi.clone(), psi.clone()]);
    quad_dot(&c3, &inv, &c1) - quad_dot(&c2, &inv, &c2)
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Consistency(what.to_string()))
    }
}

/// Builds and verifies `M(n+1)` at a root `theta` of `R`.
pub fn build_flat_extension(
    cd: &CompressedData,
    r: &RThetaPoly,
    theta: &QuadExt,
    multiplicity: Multiplicity,
) -> Result<FlatExtension> {
    let n = cd.n;
    let (a, b) = (&cd.curve.a, &cd.curve.b);
    let beta = &cd.beta;
    check(r.eval(theta).is_zero(), "theta is not a root of R")?;

    let phi = phi_star(cd, theta);
    let psi = psi_star(cd, theta, &phi);
    check(phi == horner(&r.ledger.f, theta), "phi* disagrees with its expansion")?;
    check(psi == horner(&r.ledger.j, theta), "psi* disagrees with its expansion")?;
    check(q_form(cd, theta, &phi, &psi).is_zero(), "Q does not vanish at the root")?;

    // Degree 2n+1 moments: the recursive ones and the three parameters.
    let mut moments: BTreeMap<(usize, usize), QuadExt> = beta
        .values()
        .iter()
        .map(|(&k, v)| (k, qx(v)))
        .collect();
    for (&k, val) in &cd.recursive {
        moments.insert(k, qx(val));
    }
    moments.insert((2, 2 * n - 1), theta.clone());
    moments.insert((1, 2 * n), phi.clone());
    moments.insert((0, 2 * n + 1), psi.clone());

    let rows = monomials(n);
    let cols: Vec<(usize, usize)> = (0..=n + 1).rev().map(|i| (i, n + 1 - i)).collect();
    let b_block = Matrix::from_fn(rows.len(), cols.len(), |r, c| {
        let (i, j) = rows[r];
        let (k, l) = cols[c];
        moments[&(i + k, j + l)].clone()
    });

    // Claim 1: the new columns lie in the column space of M(n).
    let mn = build_moment_matrix(beta).map(qx);
    let bcols: Vec<Vec<QuadExt>> = (0..cols.len()).map(|c| b_block.col(c)).collect();
    let rank_n = mn.rank();
    check(
        mn.hstack_cols(&bcols).rank() == rank_n,
        "B(n+1) is not in the column space of M(n)",
    )?;

    let bidx: Vec<usize> = cd.basis.iter().map(|&(i, j)| monomial_index(i, j)).collect();
    let all_cols: Vec<usize> = (0..cols.len()).collect();
    let b_b = b_block.submatrix(&bidx, &all_cols);
    let c_hat = b_b.transpose().mul(&cd.mb_inv.map(qx)).mul(&b_b);

    let pos = |m: (usize, usize)| cols.iter().position(|&c| c == m).unwrap();
    let x3 = pos((3, n - 2));
    let x2 = pos((2, n - 1));
    let x1 = pos((1, n));
    let y0 = pos((0, n + 1));
    // Claim 2.
    check(
        c_hat.get(x3, x1).clone()
            == phi.clone() - qx(&(a * beta.at(2, 2 * n - 2) + b * beta.at(1, 2 * n - 2))),
        "Claim 2 fails for beta_{4,2n-2}",
    )?;
    check(
        c_hat.get(x3, y0).clone()
            == psi.clone() - qx(&(a * beta.at(1, 2 * n - 1) + b * beta.at(0, 2 * n - 1))),
        "Claim 2 fails for beta_{3,2n-1}",
    )?;
    // Claim 3.
    check(c_hat.get(x2, x2) == c_hat.get(x1, x3), "moment identity C[n,n] fails")?;
    check(c_hat.get(x1, x2) == c_hat.get(y0, x3), "moment identity C[n+1,n] fails")?;
    check(c_hat.get(x1, x1) == c_hat.get(y0, x2), "moment identity C[n+1,n+1] fails")?;

    // Assemble M(n+1) and require a full moment structure.
    let dim_n = rows.len();
    let mons = monomials(n + 1);
    let mn1 = Matrix::from_fn(mons.len(), mons.len(), |r, c| match (r < dim_n, c < dim_n) {
        (true, true) => mn.get(r, c).clone(),
        (true, false) => b_block.get(r, c - dim_n).clone(),
        (false, true) => b_block.get(c, r - dim_n).clone(),
        (false, false) => c_hat.get(r - dim_n, c - dim_n).clone(),
    });
    for (r, &(i, j)) in mons.iter().enumerate() {
        for (c, &(k, l)) in mons.iter().enumerate() {
            let key = (i + k, j + l);
            let val = mn1.get(r, c);
            match moments.get(&key) {
                Some(existing) => check(existing == val, "M(n+1) lacks moment structure")?,
                None => {
                    moments.insert(key, val.clone());
                }
            }
        }
    }
    check(mn1.rank() == rank_n, "M(n+1) is not a flat extension")?;
    check(mn1.is_psd(), "M(n+1) is not positive semidefinite")?;

    Ok(FlatExtension {
        n,
        theta: theta.clone(),
        phi,
        psi,
        b_block,
        c_hat,
        mn1,
        moments,
        multiplicity,
    })
}

/// Builds the flat extensions for the requested roots.
pub fn flat_extensions(
    cd: &CompressedData,
    r: &RThetaPoly,
    roots: &RRoots,
    which: &[QuadExt],
) -> Result<Vec<FlatExtension>> {
    let mult = match roots {
        RRoots::Two(..) => Multiplicity::OneOfTwo,
        RRoots::Identically => Multiplicity::OneOfInfinitely,
        _ => Multiplicity::Unique,
    };
    which
        .iter()
        .map(|t| build_flat_extension(cd, r, t, mult))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use crate::moments::{check_p_pure, moments_from_atoms};
    use crate::poly::Poly;

    fn cusp(ts: &[Rational]) -> BivariateMoments {
        let atoms: Vec<(Rational, Rational)> =
            ts.iter().map(|t| (t * t, t * t * t)).collect();
        moments_from_atoms(&atoms, &vec![int(1); ts.len()], 6)
    }

    fn cusp_ts() -> Vec<Rational> {
        [-3, -2, -1, 1, 2, 3, 4, 5, 7].iter().map(|&t| int(t)).collect()
    }

    /// Gauss-Jordan inverse kept separate from the library routine.
    fn oracle_inverse(m: &Matrix<Rational>) -> Vec<Vec<Rational>> {
        let n = m.dim();
        let mut a: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                let mut r = m.row(i).to_vec();
                r.extend((0..n).map(|j| if i == j { int(1) } else { int(0) }));
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n).find(|&r| a[r][c] != int(0)).unwrap();
            a.swap(c, p);
            let d = a[c][c].clone();
            a[c].iter_mut().for_each(|x| *x = &*x / &d);
            for r in 0..n {
                if r != c {
                    let f = a[r][c].clone();
                    for k in 0..2 * n {
                        let t = &f * &a[c][k];
                        a[r][k] -= t;
                    }
                }
            }
        }
        a.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    /// R(theta) by symbolic substitution in Q[theta].
    fn oracle_r(beta: &BivariateMoments, curve: &CurveParams) -> Poly<Rational> {
        let n = beta.n();
        let cd = compress(beta, curve).unwrap();
        let inv = oracle_inverse(&cd.mb);
        let t = Poly::<Rational>::x();
        let c = |r: &Rational| Poly::constant(r.clone());
        let bil = |u: &[Poly<Rational>], v: &[Poly<Rational>]| {
            let mut acc = Poly::zero();
            for (i, ui) in u.iter().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    acc = acc + ui.clone() * vj.clone() * c(&inv[i][j]);
                }
            }
            acc
        };
        let mut c1: Vec<Poly<Rational>> = cd.w.iter().map(c).collect();
        c1.push(t.clone());
        let phi = bil(&c1, &c1)
            + c(&(&curve.a * beta.at(2, 2 * n - 2) + &curve.b * beta.at(1, 2 * n - 2)));
        let mut c2: Vec<Poly<Rational>> = cd.q.iter().map(c).collect();
        c2.extend([t.clone(), phi.clone()]);
        let psi = bil(&c2, &c1)
            + c(&(&curve.a * beta.at(1, 2 * n - 1) + &curve.b * beta.at(0, 2 * n - 1)));
        let mut c3: Vec<Poly<Rational>> = cd.p_vec.iter().map(c).collect();
        c3.extend([t, phi, psi]);
        bil(&c3, &c1) - bil(&c2, &c2)
    }

    #[test]
    fn ledger_matches_symbolic_oracle() {
        let curve = CurveParams::new(int(0), int(0));
        let beta = cusp(&cusp_ts());
        let cd = compress(&beta, &curve).unwrap();
        assert_eq!((cd.w.len(), cd.q.len(), cd.p_vec.len()), (8, 7, 6));
        assert!(cd.eps > int(0));
        let r = compute_r(&cd).unwrap();
        let oracle = oracle_r(&beta, &curve);
        assert!(oracle.degree().unwrap_or(0) <= 2);
        assert_eq!(oracle.coeff(2), r.r2);
        assert_eq!(oracle.coeff(1), r.r1);
        assert_eq!(oracle.coeff(0), r.r0);
    }

    #[test]
    fn true_theta_is_a_root() {
        let ts = cusp_ts();
        let curve = CurveParams::new(int(0), int(0));
        let beta = cusp(&ts);
        let theta: Rational = ts.iter().map(|t| crate::arith::pow(t, 2 * 2 + 3 * 5)).sum();
        let cd = compress(&beta, &curve).unwrap();
        let r = compute_r(&cd).unwrap();
        assert_eq!(r.eval(&theta), int(0));
        // Recursive degree-7 moments agree with the measure.
        let beta7 = moments_from_atoms(
            &ts.iter().map(|t| (t * t, t * t * t)).collect::<Vec<_>>(),
            &vec![int(1); 9],
            7,
        );
        for (&(i, j), val) in &cd.recursive {
            assert_eq!(val, beta7.at(i, j));
        }
    }

    #[test]
    fn flat_extension_at_true_theta() {
        let ts = cusp_ts();
        let curve = CurveParams::new(int(0), int(0));
        let beta = cusp(&ts);
        assert!(check_p_pure(&build_moment_matrix(&beta), &curve).is_pure);
        let cd = compress(&beta, &curve).unwrap();
        let r = compute_r(&cd).unwrap();
        let roots = solve_r(&r);
        let theta = QuadExt::rational(ts.iter().map(|t| crate::arith::pow(t, 19)).sum());
        assert!(roots.all().contains(&theta));
        let fe = build_flat_extension(&cd, &r, &theta, Multiplicity::Unique).unwrap();
        assert_eq!(fe.mn1.rank(), 9);
        assert_eq!(fe.mn1.dim(), 15);
        let phi: Rational = ts.iter().map(|t| crate::arith::pow(t, 2 + 18)).sum();
        assert_eq!(fe.phi, QuadExt::rational(phi));
    }

    #[test]
    fn solve_r_cases() {
        let two = solve_r(&RThetaPoly::from_coeffs(int(1), int(0), int(-2)));
        match &two {
            RRoots::Two(m, p) => {
                // Roots live in Q(sqrt(Delta)) with Delta = 8.
                assert_eq!(m, &QuadExt::new(int(0), rat(-1, 2), int(8)));
                assert_eq!(p, &QuadExt::new(int(0), rat(1, 2), int(8)));
            }
            other => panic!("{other:?}"),
        }
        // Equal magnitudes: the minus branch wins.
        assert_eq!(two.preferred(), Some(QuadExt::new(int(0), rat(-1, 2), int(8))));
        assert_eq!(
            solve_r(&RThetaPoly::from_coeffs(int(0), int(0), int(-16257024))),
            RRoots::NoRoot
        );
        assert_eq!(
            solve_r(&RThetaPoly::from_coeffs(int(0), int(0), int(0))),
            RRoots::Identically
        );
        assert_eq!(
            solve_r(&RThetaPoly::from_coeffs(int(0), int(2), int(3))),
            RRoots::Linear(QuadExt::rational(rat(-3, 2)))
        );
        assert_eq!(
            solve_r(&RThetaPoly::from_coeffs(int(-1), int(2), int(-1))),
            RRoots::Double(QuadExt::rational(int(1)))
        );
        assert_eq!(
            solve_r(&RThetaPoly::from_coeffs(int(1), int(0), int(1))),
            RRoots::NoRoot
        );
        let rational_two = solve_r(&RThetaPoly::from_coeffs(int(1), int(-3), int(2)));
        assert_eq!(
            rational_two,
            RRoots::Two(QuadExt::rational(int(1)), QuadExt::rational(int(2)))
        );
        assert_eq!(rational_two.preferred(), Some(QuadExt::rational(int(1))));
    }
}
