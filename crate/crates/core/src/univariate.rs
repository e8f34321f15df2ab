//! Univariate truncated moment problems on `[0, inf)` and on
//! `[0, c] u [d, inf)` through Hankel and localizing Hankel matrices.
//!
//! Throughout, `gamma = (gamma_0, ..., gamma_N)`. For a monic polynomial `q`,
//! `q(E) gamma` is the localized sequence `s_t = sum_i q_i gamma_(t+i)`, and
//! `H_m(s) = (s_(i+j))_(i,j=0..m)`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::Matrix;
use crate::numeric::{self, Real};
use crate::poly::Poly;

/// The Hankel matrix `H_m(s)`. A negative `m` gives the empty matrix.
pub fn hankel<F: Field>(s: &[F], m: isize) -> Result<Matrix<F>> {
    if m < 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let m = m as usize;
    if s.is_empty() || 2 * m > s.len() - 1 {
        return Err(Error::Invalid(format!(
            "H_{m} needs {} moments, only {} given",
            2 * m + 1,
            s.len()
        )));
    }
    Ok(Matrix::from_fn(m + 1, m + 1, |i, j| s[i + j].clone()))
}

/// `p(E) gamma`, truncated to its first `N + 1 - deg p` entries.
pub fn localize<F: Field>(gamma: &[F], p: &Poly<F>) -> Vec<F> {
    let e = p.degree().unwrap_or(0);
    if gamma.len() <= e {
        return vec![];
    }
    (0..gamma.len() - e)
        .map(|t| {
            p.coeffs()
                .iter()
                .enumerate()
                .fold(F::zero(), |acc, (i, c)| acc + c.clone() * gamma[t + i].clone())
        })
        .collect()
}

/// Largest `m` with `H_m(s)` defined.
fn max_order<F>(s: &[F]) -> isize {
    (s.len() as isize - 1).div_euclid(2)
}

/// Rank of `gamma^(2k)`: `k + 1` if `H_k` is nonsingular, else the smallest
/// `i` with `H_i` singular. Requires `H_k` psd.
pub fn rank_gamma<F: Field>(gamma: &[F]) -> Result<usize> {
    let k = max_order(gamma);
    if k < 0 {
        return Err(Error::Invalid("empty sequence".into()));
    }
    let h = hankel(gamma, k)?;
    if !h.is_psd() {
        return Err(Error::Invalid("H_k is not positive semidefinite".into()));
    }
    Ok(first_singular(gamma, k as usize).unwrap_or(k as usize + 1))
}

/// Smallest `i <= m` with `H_i(s)` singular, assuming `H_m(s)` psd.
fn first_singular<F: Field>(s: &[F], m: usize) -> Option<usize> {
    (0..=m).find(|&i| !hankel(s, i as isize).expect("in range").is_pd())
}

/// The recursion `gamma_j = phi_0 gamma_(j-r) + ... + phi_(r-1) gamma_(j-1)`
/// read off the nonsingular compression `H_(r-1)`, `r = rank`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recursion<F> {
    pub rank: usize,
    pub phi: Vec<F>,
}

impl<F: Field> Recursion<F> {
    /// Solves `H_(r-1)(s) phi = (s_r, ..., s_(2r-1))`.
    fn from_sequence(s: &[F], r: usize) -> Result<Self> {
        if r == 0 {
            return Ok(Recursion { rank: 0, phi: vec![] });
        }
        let h = hankel(s, r as isize - 1)?;
        let rhs: Vec<F> = s[r..2 * r].to_vec();
        Ok(Recursion {
            rank: r,
            phi: h.solve(&rhs)?,
        })
    }

    /// Value the recursion predicts at index `j >= r`.
    pub fn predict(&self, s: &[F], j: usize) -> F {
        let r = self.rank;
        self.phi
            .iter()
            .enumerate()
            .fold(F::zero(), |acc, (i, p)| acc + p.clone() * s[j - r + i].clone())
    }

    /// The generating polynomial `t^r - sum_i phi_i t^i`.
    pub fn polynomial(&self) -> Poly<F> {
        let mut c: Vec<F> = self.phi.iter().map(|p| -p.clone()).collect();
        c.push(F::one());
        Poly::new(c)
    }

    /// Extends `s` by `count` values.
    pub fn continue_sequence(&self, s: &[F], count: usize) -> Vec<F> {
        let mut out = s.to_vec();
        for _ in 0..count {
            let j = out.len();
            let v = if self.rank == 0 { F::zero() } else { self.predict(&out, j) };
            out.push(v);
        }
        out
    }
}

/// The recursion of a sequence with psd Hankel matrix, if it is positively
/// recursively generated.
///
/// For `gamma^(2k)` with rank `r <= k` the coefficients come from the `r x r`
/// compression `H_(r-1)` and the recursion must reproduce every
/// `gamma_j`, `r <= j <= N`, including `j = 2k + 1` for odd `N`. When
/// `H_k` is nonsingular the recursion holds trivially.
pub fn recursion<F: Field>(gamma: &[F]) -> Option<Recursion<F>> {
    let k = max_order(gamma);
    if k < 0 {
        return None;
    }
    let even = &gamma[..=2 * k as usize];
    if !hankel(even, k).ok()?.is_psd() {
        return None;
    }
    let r = first_singular(even, k as usize).unwrap_or(k as usize + 1);
    if r == k as usize + 1 {
        // Nonsingular: any continuation data is consistent.
        if gamma.len() >= 2 * r {
            return Recursion::from_sequence(gamma, r).ok();
        }
        return Some(Recursion {
            rank: r,
            phi: vec![],
        });
    }
    let rec = Recursion::from_sequence(gamma, r).ok()?;
    let holds = (r..gamma.len()).all(|j| {
        let v = if r == 0 { F::zero() } else { rec.predict(gamma, j) };
        v == gamma[j]
    });
    holds.then_some(rec)
}

/// Whether `gamma` is positively recursively generated.
pub fn is_prg<F: Field>(gamma: &[F]) -> bool {
    recursion(gamma).is_some()
}

/// The unique continuation `gamma_(2m+1), ..., gamma_(2m+4)` of a sequence
/// with `H_m` psd and singular, or `None` when it is not positively
/// recursively generated. The continuation makes `H_(m+2)` psd.
pub fn extend_singular<F: Field>(gamma: &[F]) -> Result<Option<[F; 4]>> {
    if gamma.len() % 2 == 0 {
        return Err(Error::Invalid("extend_singular expects gamma^(2m)".into()));
    }
    let m = max_order(gamma);
    let h = hankel(gamma, m)?;
    if !h.is_psd() || h.is_pd() {
        return Err(Error::Invalid("H_m must be psd and singular".into()));
    }
    let Some(rec) = recursion(gamma) else {
        return Ok(None);
    };
    let ext = rec.continue_sequence(gamma, 4);
    if !hankel(&ext, m + 2)?.is_psd() {
        return Err(Error::Consistency(
            "recursive continuation is not positive semidefinite".into(),
        ));
    }
    let n = gamma.len();
    Ok(Some([
        ext[n].clone(),
        ext[n + 1].clone(),
        ext[n + 2].clone(),
        ext[n + 3].clone(),
    ]))
}

/// Support set of a univariate problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Support<F> {
    /// `[0, inf)`.
    HalfLine,
    /// `[0, c] u [d, inf)` with `0 < c < d`.
    Union { c: F, d: F },
}

/// A localizing polynomial with its known real roots.
struct Localizer<F> {
    name: &'static str,
    poly: Poly<F>,
    roots: Vec<F>,
}

impl<F: Field> Support<F> {
    /// Polynomials nonnegative on the support whose localizing matrices
    /// decide the problem: `1`, `t`, and for the union `(t-c)(t-d)` and
    /// `t(t-c)(t-d)`.
    fn localizers(&self) -> Vec<Localizer<F>> {
        let mut out = vec![
            Localizer {
                name: "H",
                poly: Poly::constant(F::one()),
                roots: vec![],
            },
            Localizer {
                name: "H^[0,inf)",
                poly: Poly::x(),
                roots: vec![F::zero()],
            },
        ];
        if let Support::Union { c, d } = self {
            out.push(Localizer {
                name: "H^(-inf,c]u[d,inf)",
                poly: Poly::from_roots(&[c.clone(), d.clone()]),
                roots: vec![c.clone(), d.clone()],
            });
            out.push(Localizer {
                name: "H^[0,c]u[d,inf)",
                poly: Poly::from_roots(&[F::zero(), c.clone(), d.clone()]),
                roots: vec![F::zero(), c.clone(), d.clone()],
            });
        }
        out
    }

    /// Exact membership test (tolerance-based for inexact fields).
    pub fn contains(&self, t: &F) -> bool {
        if t.sign() < 0 {
            return false;
        }
        match self {
            Support::HalfLine => true,
            Support::Union { c, d } => {
                (t.clone() - c.clone()).sign() <= 0 || (t.clone() - d.clone()).sign() >= 0
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Support::HalfLine => json!({"kind": "halfline"}),
            Support::Union { c, d } => json!({"kind": "union", "c": c.to_json(), "d": d.to_json()}),
        }
    }
}

/// A finitely atomic measure on the line.
#[derive(Clone, Debug)]
pub struct UnivariateMeasure<F> {
    /// Atoms and weights in floating point, sorted by atom.
    pub atoms: Vec<(Real, Real)>,
    /// The same atoms in the field, when recovered exactly.
    pub exact: Option<Vec<(F, F)>>,
    /// Largest moment residual relative to `max(1, |gamma_t|)`.
    pub residual: Real,
}

impl<F: Field> UnivariateMeasure<F> {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_json(&self, digits: usize) -> Value {
        let atoms: Vec<Value> = match &self.exact {
            Some(ex) => ex
                .iter()
                .map(|(t, w)| json!({"t": t.to_json(), "weight": w.to_json()}))
                .collect(),
            None => self
                .atoms
                .iter()
                .map(|(t, w)| {
                    json!({"t": numeric::format_real(t, digits), "weight": numeric::format_real(w, digits)})
                })
                .collect(),
        };
        json!({
            "atoms": atoms,
            "exact": self.exact.is_some(),
            "residual": numeric::format_real(&self.residual, 6),
        })
    }
}

/// Settings for measure construction.
#[derive(Clone, Debug)]
pub struct UnivariateOptions<F> {
    pub precision_bits: usize,
    /// Bound on the relative moment residual of a numerically recovered measure.
    pub tolerance: Real,
    /// Offsets tried when recognizing exact atoms: an atom `t` is guessed as
    /// `r - h` with `r` rational, for each hint `h` (and `h = 0`).
    pub hints: Vec<F>,
}

impl<F: Field> Default for UnivariateOptions<F> {
    fn default() -> Self {
        UnivariateOptions {
            precision_bits: numeric::DEFAULT_PRECISION,
            tolerance: numeric::pow10_neg(20, numeric::DEFAULT_PRECISION + 32),
            hints: vec![],
        }
    }
}

/// Verdict of a solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    MeasureExists,
    NoMeasure,
}

/// Which branch of the union theorems applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    AllPd,
    SingularH,
}

/// Outcome of one psd test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixCheck {
    pub name: String,
    /// Largest moment index the matrix uses.
    pub index: usize,
    pub size: usize,
    pub psd: bool,
    pub pd: bool,
    /// Smallest eigenvalue, reported only when signs are tolerance-decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<String>,
}

#[derive(Clone, Debug)]
pub struct UnivariateSolution<F> {
    pub status: Status,
    pub case: Option<Case>,
    pub checks: Vec<MatrixCheck>,
    /// Name of the first matrix that is not positive definite, if any.
    pub first_non_pd: Option<String>,
    /// Extension moments `gamma_(N+1), ...`: the threshold-plus-one
    /// certificate in the all-pd case, the unique continuation otherwise.
    pub extension: Vec<F>,
    pub measure: Option<UnivariateMeasure<F>>,
    pub reason: String,
    pub notes: Vec<String>,
}

impl<F: Field> UnivariateSolution<F> {
    fn no(checks: Vec<MatrixCheck>, reason: impl Into<String>) -> Self {
        UnivariateSolution {
            status: Status::NoMeasure,
            case: None,
            checks,
            first_non_pd: None,
            extension: vec![],
            measure: None,
            reason: reason.into(),
            notes: vec![],
        }
    }

    pub fn to_json(&self, digits: usize) -> Value {
        json!({
            "status": self.status,
            "case": self.case,
            "checks": self.checks,
            "first_non_pd": self.first_non_pd,
            "extension": self.extension.iter().map(Field::to_json).collect::<Vec<_>>(),
            "reason": self.reason,
            "notes": self.notes,
            "measure": self.measure.as_ref().map(|m| m.to_json(digits)),
        })
    }
}

/// `H_m(q(E) gamma)` with its display name and largest moment index.
struct Named<F> {
    name: String,
    index: usize,
    matrix: Matrix<F>,
}

fn named<F: Field>(gamma: &[F], loc: &Localizer<F>, m: isize) -> Result<Named<F>> {
    let s = localize(gamma, &loc.poly);
    let e = loc.poly.degree().unwrap_or(0);
    Ok(Named {
        name: format!("{}_{}", loc.name, 2 * m + e as isize),
        index: (2 * m + e as isize).max(0) as usize,
        matrix: hankel(&s, m)?,
    })
}

fn check(n: &Named<impl Field>) -> MatrixCheck {
    MatrixCheck {
        name: n.name.clone(),
        index: n.index,
        size: n.matrix.nrows(),
        psd: n.matrix.is_psd(),
        pd: n.matrix.is_pd(),
        margin: margin(&n.matrix),
    }
}

fn margin<F: Field>(m: &Matrix<F>) -> Option<String> {
    if F::EXACT || m.nrows() == 0 {
        return None;
    }
    let prec = crate::field::APPROX_PRECISION;
    let rows: Vec<Vec<Real>> = m.rows().iter().map(|r| r.iter().map(|x| x.to_real(prec)).collect()).collect();
    let (eig, _) = numeric::jacobi_eigen(&rows);
    let min = eig.into_iter().reduce(|a, b| if b < a { b } else { a })?;
    Some(numeric::format_real(&min, 12))
}

/// Solves the `[0, inf)` problem.
///
/// With `N = 2k` the conditions are `H_k(gamma) >= 0`, `H_(k-1)(E gamma) >= 0`
/// and `(gamma_(k+1), ..., gamma_(2k))` in the column space of
/// `H_(k-1)(E gamma)`. With `N = 2k + 1` they are `H_k(gamma) >= 0`,
/// `H_k(E gamma) >= 0` and `(gamma_(k+1), ..., gamma_(2k+1))` in the column
/// space of `H_k(gamma)`.
pub fn solve_halfline<F: Field>(gamma: &[F], opts: &UnivariateOptions<F>) -> Result<UnivariateSolution<F>> {
    if gamma.is_empty() {
        return Err(Error::Invalid("empty sequence".into()));
    }
    let n = gamma.len() - 1;
    let support = Support::HalfLine;
    let locs = support.localizers();
    let k = (n / 2) as isize;
    let (h, hpos, col, target) = if n % 2 == 0 {
        let h = named(gamma, &locs[0], k)?;
        let hpos = named(gamma, &locs[1], k - 1)?;
        let col: Vec<F> = gamma[(k + 1) as usize..=(2 * k) as usize].to_vec();
        (h, hpos, col, 1)
    } else {
        let h = named(gamma, &locs[0], k)?;
        let hpos = named(gamma, &locs[1], k)?;
        let col: Vec<F> = gamma[(k + 1) as usize..=(2 * k + 1) as usize].to_vec();
        (h, hpos, col, 0)
    };
    let checks = vec![check(&h), check(&hpos)];
    if !checks.iter().all(|c| c.psd) {
        let bad = checks.iter().find(|c| !c.psd).unwrap().name.clone();
        return Ok(UnivariateSolution::no(checks, format!("{bad} is not positive semidefinite")));
    }
    let space = if target == 1 { &hpos } else { &h };
    if !space.matrix.in_column_space(&col) {
        return Ok(UnivariateSolution::no(
            checks,
            format!("the last column is outside the range of {}", space.name),
        ));
    }
    let first_non_pd = checks.iter().find(|c| !c.pd).map(|c| c.name.clone());
    let measure = construct_measure(gamma, &support, opts)?;
    Ok(UnivariateSolution {
        status: Status::MeasureExists,
        case: None,
        checks,
        first_non_pd,
        extension: vec![],
        measure: Some(measure),
        reason: "the half-line conditions hold".into(),
        notes: vec![],
    })
}

/// The four matrices of the union theorems for `gamma` (or for its extension
/// when `extended`).
fn union_matrices<F: Field>(gamma: &[F], locs: &[Localizer<F>], n: usize) -> Result<Vec<Named<F>>> {
    let k = (n / 2) as isize;
    let orders: [isize; 4] = if n % 2 == 0 {
        [k, k - 1, k - 1, k - 2]
    } else {
        [k, k, k - 1, k - 1]
    };
    locs.iter()
        .zip(orders)
        .map(|(l, m)| named(gamma, l, m))
        .collect()
}

/// The psd threshold of the corner of a matrix whose last diagonal entry is
/// `v + const` and whose other entries do not involve `v`: the smallest `v`
/// keeping it psd, given a positive definite leading block.
fn corner_threshold<F: Field>(build: impl Fn(&F) -> Result<Matrix<F>>) -> Result<F> {
    let m0 = build(&F::zero())?;
    let m1 = build(&F::one())?;
    let last = m0.nrows() - 1;
    let coef = m1.get(last, last).clone() - m0.get(last, last).clone();
    if coef.is_zero() {
        return Err(Error::Consistency("corner does not involve the new moment".into()));
    }
    let idx: Vec<usize> = (0..last).collect();
    let a = m0.principal(&idx);
    let b: Vec<F> = idx.iter().map(|&i| m0.get(i, last).clone()).collect();
    let quad = if last == 0 {
        F::zero()
    } else {
        crate::linalg::dot(&b, &a.solve(&b)?)
    };
    Ok((quad - m0.get(last, last).clone()) / coef)
}

/// Thresholds and chosen values of the all-pd certificate extension.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<F> {
    /// For each new moment: `(threshold, chosen value = threshold + 1)`.
    pub steps: Vec<(F, F)>,
}

/// Constructive version of "choose `x` (then `y`) sufficiently large": each
/// new moment is set to one more than the largest psd threshold among the
/// extended matrices whose corner contains it.
pub fn certificate_extension<F: Field>(gamma: &[F], c: &F, d: &F) -> Result<Certificate<F>> {
    let n = gamma.len() - 1;
    let support = Support::Union {
        c: c.clone(),
        d: d.clone(),
    };
    let locs = support.localizers();
    let new = if n % 2 == 0 { 2 } else { 1 };
    let mut ext = gamma.to_vec();
    let mut steps = vec![];
    for step in 0..new {
        let idx = n + 1 + step;
        let mut thresholds = vec![];
        for loc in &locs {
            let e = loc.poly.degree().unwrap_or(0);
            if idx < e || (idx - e) % 2 == 1 {
                continue;
            }
            let m = ((idx - e) / 2) as isize;
            let t = corner_threshold(|v: &F| {
                let mut g = ext.clone();
                g.push(v.clone());
                Ok(named(&g, loc, m)?.matrix)
            })?;
            thresholds.push(t);
        }
        let t = thresholds
            .into_iter()
            .reduce(crate::field::max)
            .expect("some matrix has the new moment in its corner");
        let chosen = t.clone() + F::one();
        ext.push(chosen.clone());
        steps.push((t, chosen));
    }
    Ok(Certificate { steps })
}

/// Solves the `[0, c] u [d, inf)` problem.
///
/// With `N = 2k` the matrices are `H_k(gamma)`, `H_(k-1)(E gamma)`,
/// `H_(k-1)(g2 gamma)`, `H_(k-2)(g3 gamma)` where `g2 = (t-c)(t-d)` and
/// `g3 = t g2`; with `N = 2k + 1` they are `H_k(gamma)`, `H_k(E gamma)`,
/// `H_(k-1)(g2 gamma)`, `H_(k-1)(g3 gamma)`.
pub fn solve_union<F: Field>(
    gamma: &[F],
    c: &F,
    d: &F,
    opts: &UnivariateOptions<F>,
) -> Result<UnivariateSolution<F>> {
    if gamma.is_empty() {
        return Err(Error::Invalid("empty sequence".into()));
    }
    if c.sign() <= 0 || !crate::field::lt(c, d) {
        return Err(Error::Invalid("the union support needs 0 < c < d".into()));
    }
    let n = gamma.len() - 1;
    let even = n % 2 == 0;
    let support = Support::Union {
        c: c.clone(),
        d: d.clone(),
    };
    let locs = support.localizers();
    let mats = union_matrices(gamma, &locs, n)?;
    let mut checks: Vec<MatrixCheck> = mats.iter().map(check).collect();
    if let Some(bad) = checks.iter().find(|c| !c.psd) {
        let reason = format!("{} is not positive semidefinite", bad.name);
        return Ok(UnivariateSolution::no(checks, reason));
    }
    let first = checks.iter().position(|c| !c.pd);
    let mut notes = vec![];

    let Some(i) = first else {
        let cert = certificate_extension(gamma, c, d)?;
        let mut ext = gamma.to_vec();
        ext.extend(cert.steps.iter().map(|(_, v)| v.clone()));
        let extended = extended_union_matrices(&ext, &locs, n)?;
        let ext_checks: Vec<MatrixCheck> = extended.iter().map(check).collect();
        if !ext_checks.iter().all(|c| c.pd) {
            return Err(Error::Consistency(
                "threshold certificate is not positive definite".into(),
            ));
        }
        checks.extend(ext_checks);
        let measure = construct_measure(gamma, &support, opts)?;
        return Ok(UnivariateSolution {
            status: Status::MeasureExists,
            case: Some(Case::AllPd),
            checks,
            first_non_pd: None,
            extension: cert.steps.into_iter().map(|(_, v)| v).collect(),
            measure: Some(measure),
            reason: "all matrices are positive definite".into(),
            notes,
        });
    };

    let h_name = checks[i].name.clone();
    let mut sol = UnivariateSolution::no(checks.clone(), "");
    sol.case = Some(Case::SingularH);
    sol.first_non_pd = Some(h_name.clone());
    if even && (i == 1 || i == 3) {
        sol.reason = format!("{h_name} is the first singular matrix, which admits no measure");
        return Ok(sol);
    }
    if !even && (i == 1 || i == 3) {
        notes.push(format!(
            "{h_name} is the first singular matrix; the even-case restriction would reject this instance"
        ));
    }

    // The sequence determined by H and its unique continuation.
    let loc = &locs[i];
    let e = loc.poly.degree().unwrap_or(0);
    let m = mats[i].matrix.nrows() - 1;
    let s = localize(gamma, &loc.poly);
    let determined = &s[..=2 * m];
    let Some(rec) = recursion(determined) else {
        sol.reason = format!("the sequence of {h_name} is not positively recursively generated");
        sol.notes = notes;
        return Ok(sol);
    };
    let target = if even { n + 2 } else { n + 1 };
    let s_ext = rec.continue_sequence(determined, target - e - 2 * m);
    let mut g = gamma.to_vec();
    for t in (2 * m + 1)..s_ext.len() {
        // s_t = gamma_(t+e) + lower terms, q monic.
        let lower = loc
            .poly
            .coeffs()
            .iter()
            .take(e)
            .enumerate()
            .fold(F::zero(), |acc, (j, q)| acc + q.clone() * g[t + j].clone());
        let value = s_ext[t].clone() - lower;
        if t + e <= n {
            if value != gamma[t + e] {
                sol.reason = format!(
                    "gamma_{} disagrees with the unique continuation of {h_name}",
                    t + e
                );
                sol.notes = notes;
                return Ok(sol);
            }
        } else {
            g.push(value);
        }
    }
    let extended = extended_union_matrices(&g, &locs, n)?;
    let ext_checks: Vec<MatrixCheck> = extended.iter().map(check).collect();
    sol.extension = g[n + 1..].to_vec();
    let ok = ext_checks.iter().all(|c| c.psd);
    sol.checks.extend(ext_checks);
    sol.notes = notes;
    if !ok {
        let bad = sol.checks.iter().rev().find(|c| !c.psd).unwrap().name.clone();
        sol.reason = format!("the extended matrix {bad} is not positive semidefinite");
        return Ok(sol);
    }
    sol.measure = Some(construct_measure(gamma, &support, opts)?);
    sol.status = Status::MeasureExists;
    sol.reason = format!("{h_name} is singular and its unique continuation is admissible");
    Ok(sol)
}

/// The extended matrices checked after continuation: for `N = 2k`,
/// `H_(k+1)`, `H_k(E)`, `H_k(g2)`, `H_(k-1)(g3)` of the length-`N+3`
/// sequence; for `N = 2k + 1`, `H_(k+1)` and `H_k(g2)` of the length-`N+2`
/// sequence.
fn extended_union_matrices<F: Field>(
    ext: &[F],
    locs: &[Localizer<F>],
    n: usize,
) -> Result<Vec<Named<F>>> {
    let k = (n / 2) as isize;
    if n % 2 == 0 {
        let orders = [k + 1, k, k, k - 1];
        locs.iter().zip(orders).map(|(l, m)| named(ext, l, m)).collect()
    } else {
        Ok(vec![named(ext, &locs[0], k + 1)?, named(ext, &locs[2], k)?])
    }
}

/// Builds a representing measure on `support` for `gamma`, which must be
/// known to admit one.
///
/// Some localizing matrix `H_r(q gamma)` is made singular (by appending
/// boundary moments at their psd thresholds when everything is positive
/// definite). Every representing measure is then supported on the zeros of
/// `q P`, where `P` generates the kernel, so the weights follow from a
/// Vandermonde system and are certified against all moments.
pub fn construct_measure<F: Field>(
    gamma: &[F],
    support: &Support<F>,
    opts: &UnivariateOptions<F>,
) -> Result<UnivariateMeasure<F>> {
    if gamma.iter().all(|g| g.is_zero()) {
        return Ok(UnivariateMeasure {
            atoms: vec![],
            exact: Some(vec![]),
            residual: numeric::zero(opts.precision_bits),
        });
    }
    let locs = support.localizers();
    let mut g = gamma.to_vec();
    for _ in 0..3 {
        for loc in &locs {
            let s = localize(&g, &loc.poly);
            let m = max_order(&s);
            if m < 0 {
                continue;
            }
            let Some(r) = first_singular(&s, m as usize) else {
                continue;
            };
            let rec = Recursion::from_sequence(&s, r)?;
            let p = rec.polynomial();
            let roots = numeric_roots(&s, r, opts.precision_bits)?;
            let candidates = candidate_atoms(&roots, &loc.roots, &p, opts);
            return weights_on(gamma, support, candidates, opts);
        }
        // Everything is positive definite: append the boundary value.
        let idx = g.len();
        let mut best: Option<F> = None;
        for loc in &locs {
            let e = loc.poly.degree().unwrap_or(0);
            if idx < e || (idx - e) % 2 == 1 {
                continue;
            }
            let m = ((idx - e) / 2) as isize;
            let t = corner_threshold(|v: &F| {
                let mut h = g.clone();
                h.push(v.clone());
                Ok(named(&h, loc, m)?.matrix)
            })?;
            best = Some(match best {
                None => t,
                Some(b) => crate::field::max(b, t),
            });
        }
        g.push(best.expect("a corner contains the new moment"));
    }
    Err(Error::ExtractionFailed)
}

/// Roots of the kernel polynomial of `H_r(s)` as the eigenvalues of the
/// symmetric-definite pencil `(H_(r-1)(E s), H_(r-1)(s))`.
fn numeric_roots<F: Field>(s: &[F], r: usize, precision: usize) -> Result<Vec<Real>> {
    if r == 0 {
        return Ok(vec![]);
    }
    let prec = precision + 32;
    let real = |m: &Matrix<F>| -> numeric::RMatrix {
        m.rows()
            .iter()
            .map(|row| row.iter().map(|x| x.to_real(prec)).collect())
            .collect()
    };
    let g = real(&hankel(s, r as isize - 1)?);
    let hs = real(&hankel(&s[1..], r as isize - 1)?);
    let l = numeric::cholesky(&g).ok_or(Error::ExtractionFailed)?;
    let li = numeric::lower_inverse(&l);
    let a = numeric::matmul(&numeric::matmul(&li, &hs), &numeric::transpose(&li));
    let (mut vals, _) = numeric::jacobi_eigen(&a);
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(vals)
}

/// A candidate atom: exact when recognized, else numeric only.
#[derive(Clone, Debug)]
struct Candidate<F> {
    value: Real,
    exact: Option<F>,
}

fn candidate_atoms<F: Field>(
    roots: &[Real],
    known: &[F],
    p: &Poly<F>,
    opts: &UnivariateOptions<F>,
) -> Vec<Candidate<F>> {
    let prec = opts.precision_bits + 32;
    let close = numeric::pow2_neg(opts.precision_bits / 2, prec);
    let mut out: Vec<Candidate<F>> = known
        .iter()
        .map(|k| Candidate {
            value: k.to_real(prec),
            exact: Some(k.clone()),
        })
        .collect();
    for r in roots {
        if out.iter().any(|c| numeric::abs(&(c.value.clone() - r.clone())) < close) {
            continue;
        }
        let exact = if F::EXACT {
            std::iter::once(F::zero())
                .chain(opts.hints.iter().cloned())
                .filter_map(|h| F::recognize(r, &h))
                .find(|t| p.eval(t).is_zero())
        } else {
            F::from_real(r)
        };
        out.push(Candidate {
            value: r.clone(),
            exact,
        });
    }
    out
}

/// Solves for weights on the candidates and certifies the result.
fn weights_on<F: Field>(
    gamma: &[F],
    support: &Support<F>,
    candidates: Vec<Candidate<F>>,
    opts: &UnivariateOptions<F>,
) -> Result<UnivariateMeasure<F>> {
    let k = candidates.len();
    if k > gamma.len() {
        return Err(Error::Certification("more candidate atoms than moments".into()));
    }
    let prec = opts.precision_bits + 32;
    if candidates.iter().all(|c| c.exact.is_some()) {
        let pts: Vec<F> = candidates.iter().map(|c| c.exact.clone().unwrap()).collect();
        let v = Matrix::from_fn(k, k, |t, j| pow_f(&pts[j], t));
        let w = v.solve(&gamma[..k])?;
        let atoms: Vec<(F, F)> = pts.into_iter().zip(w).filter(|(_, w)| !w.is_zero()).collect();
        let valid = atoms.iter().all(|(t, w)| w.sign() > 0 && support.contains(t))
            && gamma.iter().enumerate().all(|(t, g)| {
                let s = atoms
                    .iter()
                    .fold(F::zero(), |acc, (x, w)| acc + w.clone() * pow_f(x, t));
                &s == g
            });
        if !valid {
            return Err(Error::Certification(
                "recovered atoms do not represent the sequence".into(),
            ));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| cmp_f(&a.0, &b.0));
        return Ok(UnivariateMeasure {
            atoms: atoms
                .iter()
                .map(|(t, w)| (t.to_real(prec), w.to_real(prec)))
                .collect(),
            exact: if F::EXACT { Some(atoms) } else { None },
            residual: numeric::zero(prec),
        });
    }

    let pts: Vec<Real> = candidates.iter().map(|c| c.value.clone()).collect();
    let v: numeric::RMatrix = (0..k)
        .map(|t| pts.iter().map(|x| real_pow(x, t)).collect())
        .collect();
    let rhs: Vec<Real> = gamma[..k].iter().map(|g| g.to_real(prec)).collect();
    let w = numeric::solve(&v, &rhs).ok_or(Error::ExtractionFailed)?;
    let zero_tol = opts.tolerance.clone() * numeric::from_i64(1, prec).max(
        rhs.iter().map(numeric::abs).fold(numeric::one(prec), |a, b| a.max(b)),
    );
    let mut atoms = vec![];
    for (x, w) in pts.into_iter().zip(w) {
        if numeric::abs(&w) <= zero_tol {
            continue;
        }
        if numeric::is_neg(&w) {
            return Err(Error::Certification("negative weight".into()));
        }
        atoms.push((x, w));
    }
    let tol = numeric::pow2_neg(opts.precision_bits / 2, prec);
    for (x, _) in &atoms {
        let inside = match support {
            Support::HalfLine => !numeric::is_neg(&(x.clone() + tol.clone())),
            Support::Union { c, d } => {
                !numeric::is_neg(&(x.clone() + tol.clone()))
                    && (x.clone() <= c.to_real(prec) + tol.clone()
                        || x.clone() >= d.to_real(prec) - tol.clone())
            }
        };
        if !inside {
            return Err(Error::Certification("atom outside the support".into()));
        }
    }
    let mut residual = numeric::zero(prec);
    for (t, g) in gamma.iter().enumerate() {
        let s = atoms
            .iter()
            .fold(numeric::zero(prec), |acc, (x, w)| acc + w.clone() * real_pow(x, t));
        let gr = g.to_real(prec);
        let scale = numeric::one(prec).max(numeric::abs(&gr));
        let d = numeric::abs(&(s - gr)) / scale;
        if d > residual {
            residual = d;
        }
    }
    if residual > opts.tolerance {
        return Err(Error::Certification(format!(
            "moment residual {} exceeds tolerance",
            numeric::format_real(&residual, 6)
        )));
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(UnivariateMeasure {
        atoms,
        exact: None,
        residual,
    })
}

fn pow_f<F: Field>(x: &F, e: usize) -> F {
    (0..e).fold(F::one(), |acc, _| acc * x.clone())
}

fn real_pow(x: &Real, e: usize) -> Real {
    (0..e).fold(numeric::one(x.precision()), |acc, _| acc * x.clone())
}

fn cmp_f<F: Field>(a: &F, b: &F) -> std::cmp::Ordering {
    (a.clone() - b.clone()).sign().cmp(&0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat, Rational};
    use num_traits::Zero;

    fn moments(atoms: &[(Rational, Rational)], n: usize) -> Vec<Rational> {
        (0..=n)
            .map(|t| {
                atoms
                    .iter()
                    .map(|(x, w)| w * crate::arith::pow(x, t))
                    .sum()
            })
            .collect()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn hankel_of_a_dirac_at_one() {
        let h = hankel(&ints(&[1, 1, 1, 1, 1]), 2).unwrap();
        assert!(h.rows().iter().flatten().all(|x| x == &int(1)));
        assert!(hankel(&ints(&[1, 1, 1, 1]), 2).is_err());
    }

    #[test]
    fn localizing_at_the_atom_vanishes() {
        let g = moments(&[(int(3), int(2))], 6);
        let s = localize(&g, &Poly::from_roots(&[int(3)]));
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|x| x.is_zero()));
        let cubic = Poly::from_roots(&[int(0), int(1), int(2)]);
        let s = localize(&moments(&[(int(1), int(1))], 8), &cubic);
        assert!(hankel(&s, 2).unwrap().is_zero());
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_gamma(&moments(&[(int(0), int(1))], 6)).unwrap(), 1);
        assert_eq!(rank_gamma(&moments(&[(int(1), int(1)), (int(2), int(3))], 6)).unwrap(), 2);
        let pd = moments(&[(int(0), int(1)), (int(1), int(1)), (int(2), int(1)), (int(5), int(1))], 6);
        assert_eq!(rank_gamma(&pd).unwrap(), 4);
        assert!(rank_gamma(&ints(&[1, 0, -1])).is_err());
    }

    #[test]
    fn positively_recursively_generated() {
        let g = moments(&[(int(-1), int(2)), (int(3), rat(1, 2)), (rat(7, 2), int(1))], 9);
        assert!(is_prg(&g));
        assert!(!is_prg(&ints(&[1, 0, 0, 1])));
        let rec = recursion(&moments(&[(int(5), int(1))], 4)).unwrap();
        assert_eq!(rec.phi, vec![int(5)]);
    }

    #[test]
    fn singular_extensions() {
        let ext = extend_singular(&ints(&[1, 2, 4, 8, 16])).unwrap().unwrap();
        assert_eq!(ext, [int(32), int(64), int(128), int(256)]);
        let ext = extend_singular(&ints(&[2, 1, 1, 1, 1])).unwrap().unwrap();
        assert_eq!(ext, [int(1), int(1), int(1), int(1)]);
        // Psd and singular but the recursion fails at gamma_4.
        assert_eq!(extend_singular(&ints(&[1, 0, 0, 0, 1])).unwrap(), None);
    }

    #[test]
    fn halfline_dirac() {
        let g = moments(&[(int(4), int(3))], 12);
        let sol = solve_halfline(&g, &UnivariateOptions::default()).unwrap();
        assert_eq!(sol.status, Status::MeasureExists);
        assert_eq!(sol.measure.unwrap().exact.unwrap(), vec![(int(4), int(3))]);
    }

    #[test]
    fn halfline_negative_first_moment() {
        let mut g = moments(&[(int(1), int(1)), (int(2), int(1))], 9);
        g[1] = int(-1);
        let sol = solve_halfline(&g, &UnivariateOptions::default()).unwrap();
        assert_eq!(sol.status, Status::NoMeasure);
    }

    #[test]
    fn halfline_generic_measure_is_numeric() {
        // Ten atoms with N = 9: H_4 and H_4(E) are positive definite.
        let atoms: Vec<(Rational, Rational)> = (1..=10).map(|i| (int(i), rat(1, i))).collect();
        let g = moments(&atoms, 9);
        let sol = solve_halfline(&g, &UnivariateOptions::default()).unwrap();
        let m = sol.measure.unwrap();
        assert!(m.len() <= 5);
        assert!(m.residual < numeric::pow10_neg(20, 160));
    }

    #[test]
    fn union_two_atoms_at_c_and_d() {
        let g = moments(&[(int(1), int(1)), (int(2), int(1))], 12);
        let sol = solve_union(&g, &int(1), &int(2), &UnivariateOptions::default()).unwrap();
        assert_eq!(sol.status, Status::MeasureExists);
        let s = localize(&g, &Poly::from_roots(&[int(0), int(1), int(2)]));
        assert!(hankel(&s, 4).unwrap().is_zero());
        assert_eq!(sol.measure.unwrap().exact.unwrap().len(), 2);
    }

    #[test]
    fn union_gap_atom_is_rejected() {
        let g = moments(&[(int(1), int(1)), (rat(3, 2), int(1)), (int(5), int(1))], 12);
        let sol = solve_union(&g, &int(1), &int(2), &UnivariateOptions::default()).unwrap();
        assert_eq!(sol.status, Status::NoMeasure);
    }

    #[test]
    fn certificate_thresholds_are_sharp() {
        let atoms: Vec<(Rational, Rational)> = [
            (rat(1, 3), int(1)),
            (rat(1, 2), int(2)),
            (int(1), int(1)),
            (int(2), int(1)),
            (int(3), int(1)),
            (int(4), int(1)),
            (int(6), int(2)),
            (int(9), int(1)),
        ]
        .to_vec();
        let g = moments(&atoms, 12);
        let (c, d) = (int(1), int(2));
        let sol = solve_union(&g, &c, &d, &UnivariateOptions::default()).unwrap();
        assert_eq!(sol.case, Some(Case::AllPd));
        let cert = certificate_extension(&g, &c, &d).unwrap();
        assert_eq!(cert.steps.len(), 2);
        let (tx, x) = cert.steps[0].clone();
        assert_eq!(x, &tx + int(1));
        // Below the x threshold one of the two matrices with x in its corner fails.
        let support = Support::Union { c: c.clone(), d: d.clone() };
        let locs = support.localizers();
        let below = &tx - rat(1, 1_000_000);
        let mut e = g.clone();
        e.push(below);
        let fails = [(1, 6), (3, 5)].iter().any(|&(i, m)| !named(&e, &locs[i], m).unwrap().matrix.is_psd());
        assert!(fails);
    }
}
