//! Symmetric data (all odd-in-`y` moments zero) through the reduction to a
//! univariate problem on `E`, where `E` is `[0, inf)` or `[0, c] u [d, inf)`
//! depending on the real roots of `x^3 + a x + b`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{binomial, format_rational, rational_sqrt, QuadExt, Rational};
use crate::error::{Error, Result};
use crate::field::{Approx, Field};
use crate::moments::{build_moment_matrix, check_p_pure, BivariateMoments, CurveParams, PurityReport};
use crate::numeric::{self, Real};
use crate::poly::{BiPoly, Poly};
use crate::univariate::{solve_halfline, solve_union, Status, Support, UnivariateOptions, UnivariateSolution};

/// A real root of the cubic, exact when it lies in a quadratic field.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicRoot {
    pub exact: Option<QuadExt>,
    /// Isolating interval `[lo, hi]`; degenerate for rational roots.
    pub lo: Rational,
    pub hi: Rational,
    pub multiplicity: usize,
}

impl CubicRoot {
    fn rational(r: Rational, multiplicity: usize) -> Self {
        CubicRoot {
            exact: Some(QuadExt::rational(r.clone())),
            lo: r.clone(),
            hi: r,
            multiplicity,
        }
    }

    pub fn approx(&self, prec: usize) -> Real {
        match &self.exact {
            Some(q) => q.to_real(prec),
            None => numeric::to_real(&((&self.lo + &self.hi) / Rational::from_integer(2.into())), prec),
        }
    }

    fn to_json(&self) -> Value {
        let value = match &self.exact {
            Some(q) => q.to_json(),
            None => Value::String(numeric::format_real(&self.approx(160), 40)),
        };
        json!({"value": value, "exact": self.exact.is_some(), "multiplicity": self.multiplicity})
    }
}

/// Distinct real roots of `x^3 + a x + b` in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicRoots {
    /// `-4 a^3 - 27 b^2`.
    pub discriminant: Rational,
    pub roots: Vec<CubicRoot>,
}

fn cubic_poly(a: &Rational, b: &Rational) -> Poly<Rational> {
    Poly::new(vec![b.clone(), a.clone(), Rational::zero(), Rational::one()])
}

fn sturm_chain(p: &Poly<Rational>) -> Vec<Poly<Rational>> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() || chain[n - 1].degree() == Some(0) {
            break;
        }
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(-r);
    }
    chain
}

fn sign_changes(chain: &[Poly<Rational>], x: &Rational) -> usize {
    let signs: Vec<i8> = chain
        .iter()
        .map(|p| p.eval(x).sign())
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Roots in `(lo, hi]`.
fn count_roots(chain: &[Poly<Rational>], lo: &Rational, hi: &Rational) -> usize {
    sign_changes(chain, lo) - sign_changes(chain, hi)
}

fn isolate(chain: &[Poly<Rational>], lo: Rational, hi: Rational, out: &mut Vec<(Rational, Rational)>) {
    match count_roots(chain, &lo, &hi) {
        0 => {}
        1 => out.push((lo, hi)),
        _ => {
            let mid = (&lo + &hi) / Rational::from_integer(2.into());
            isolate(chain, lo, mid.clone(), out);
            isolate(chain, mid, hi, out);
        }
    }
}

/// Bisects an isolating interval `(lo, hi]` of a simple root below `width`.
fn refine(p: &Poly<Rational>, mut lo: Rational, mut hi: Rational, width: &Rational) -> (Rational, Rational) {
    if p.eval(&hi).is_zero() {
        return (hi.clone(), hi);
    }
    let s_hi = p.eval(&hi).sign();
    while &(&hi - &lo) > width {
        let mid = (&lo + &hi) / Rational::from_integer(2.into());
        let s = p.eval(&mid).sign();
        if s == 0 {
            return (mid.clone(), mid);
        }
        if s == s_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Real roots of `x^3 + a x + b`.
///
/// The count follows the sign of the discriminant. Repeated roots come from
/// closed forms. Otherwise roots are isolated with a Sturm chain, a rational
/// root is detected by rounding `L x` to an integer (`L` clears the
/// denominators, so every rational root is an integer over `L`), and the
/// remaining quadratic factor gives roots in `Q(sqrt(D))`. Roots of an
/// irreducible cubic are refined by bisection to `2^-precision`.
pub fn cubic_real_roots(a: &Rational, b: &Rational, precision: usize) -> CubicRoots {
    let disc = -Rational::from_integer(4.into()) * a * a * a - Rational::from_integer(27.into()) * b * b;
    let two = Rational::from_integer(2.into());
    let three = Rational::from_integer(3.into());
    if disc.is_zero() {
        let roots = if a.is_zero() {
            vec![CubicRoot::rational(Rational::zero(), 3)]
        } else {
            let double = -(&three * b) / (&two * a);
            let simple = &three * b / a;
            let mut r = vec![CubicRoot::rational(double, 2), CubicRoot::rational(simple, 1)];
            r.sort_by(|x, y| x.lo.cmp(&y.lo));
            r
        };
        return CubicRoots {
            discriminant: disc,
            roots,
        };
    }
    let p = cubic_poly(a, b);
    let chain = sturm_chain(&p);
    let bound = Rational::one() + a.abs().max(b.abs());
    let mut intervals = vec![];
    isolate(&chain, -bound.clone(), bound, &mut intervals);

    let l = Rational::from_integer(num_integer::Integer::lcm(a.denom(), b.denom()));
    let coarse = Rational::one() / (&l * Rational::from_integer(4.into()));
    let rational_root = intervals.iter().find_map(|(lo, hi)| {
        let (lo, hi) = refine(&p, lo.clone(), hi.clone(), &coarse);
        let guess = (((&lo + &hi) / &two) * &l).round() / &l;
        p.eval(&guess).is_zero().then_some(guess)
    });
    let fine = numeric::exact_rational(&numeric::pow2_neg(precision + 8, precision + 16));
    let roots = match rational_root {
        Some(r) => {
            // x^3 + a x + b = (x - r)(x^2 + r x + r^2 + a).
            let mut roots = vec![CubicRoot::rational(r.clone(), 1)];
            if intervals.len() == 3 {
                let radicand = -&three * &r * &r - Rational::from_integer(4.into()) * a;
                let half = Rational::one() / &two;
                let centre = -&r / &two;
                for sgn in [-1, 1] {
                    let v = Rational::from_integer(sgn.into()) * &half;
                    let q = QuadExt::new(centre.clone(), v, radicand.clone());
                    let x = q.to_real(precision + 16);
                    let x = numeric::exact_rational(&x);
                    roots.push(CubicRoot {
                        exact: Some(q),
                        lo: &x - &fine,
                        hi: &x + &fine,
                        multiplicity: 1,
                    });
                }
                if let Some(s) = rational_sqrt(&radicand) {
                    // Three rational roots.
                    for (k, sgn) in [(1, -1), (2, 1)] {
                        let v = &centre + Rational::from_integer(sgn.into()) * &s / &two;
                        roots[k] = CubicRoot::rational(v, 1);
                    }
                }
            }
            roots.sort_by(|x, y| x.lo.cmp(&y.lo));
            roots
        }
        None => intervals
            .into_iter()
            .map(|(lo, hi)| {
                let (lo, hi) = refine(&p, lo, hi, &fine);
                CubicRoot {
                    exact: None,
                    lo,
                    hi,
                    multiplicity: 1,
                }
            })
            .collect(),
    };
    CubicRoots {
        discriminant: disc,
        roots,
    }
}

/// `beta_hat_ij = L(x^i (z - a x - b)^j)` where `L(x^k z^l) = beta_(k, 2l)`.
fn beta_hat(beta: &BivariateMoments, curve: &CurveParams, i: usize, j: usize) -> Rational {
    let shift = &(&BiPoly::term(Rational::one(), 0, 1) + &BiPoly::term(-curve.a.clone(), 1, 0))
        + &BiPoly::constant(-curve.b.clone());
    let poly = &BiPoly::term(Rational::one(), i, 0) * &shift.pow(j);
    poly.terms()
        .fold(Rational::zero(), |acc, (&(k, l), c)| acc + c * beta.at(k, 2 * l))
}

/// The univariate sequence `gamma_t`, `t <= 3n`, with `gamma_(i+3j) = beta_hat_ij`.
///
/// Different `(i, j)` with the same `i + 3j` must give the same value; they
/// do when the data satisfy the column relation `Z = X^3`, and a mismatch is
/// reported as data not supported on the curve.
pub fn reduce_gamma(beta: &BivariateMoments, curve: &CurveParams) -> Result<Vec<Rational>> {
    if !beta.is_symmetric() {
        return Err(Error::Invalid("data are not symmetric: an odd-in-y moment is nonzero".into()));
    }
    let n = beta.n();
    let mut gamma: Vec<Option<Rational>> = vec![None; 3 * n + 1];
    for j in 0..=n {
        for i in 0..=(2 * n - 2 * j) {
            let v = beta_hat(beta, curve, i, j);
            let t = i + 3 * j;
            match &gamma[t] {
                None => gamma[t] = Some(v),
                Some(prev) if *prev == v => {}
                Some(_) => {
                    return Err(Error::NotOnCurve(format!(
                        "gamma_{t} is inconsistent between (i, j) = ({}, {j}) and an earlier pair",
                        i
                    )))
                }
            }
        }
    }
    gamma
        .into_iter()
        .enumerate()
        .map(|(t, g)| g.ok_or_else(|| Error::Consistency(format!("gamma_{t} not produced"))))
        .collect()
}

/// `gamma~_t = sum_k C(t, k) (-x1)^(t-k) gamma_k`, the moments of the
/// push-forward under `x -> x - x1`.
pub fn shift<F: Field>(gamma: &[Rational], x1: &F) -> Vec<F> {
    let neg = -x1.clone();
    let mut powers = vec![F::one()];
    for _ in 1..gamma.len() {
        let last = powers.last().unwrap().clone();
        powers.push(last * neg.clone());
    }
    (0..gamma.len())
        .map(|t| {
            (0..=t).fold(F::zero(), |acc, k| {
                acc + F::from_rational(&binomial(t, k)) * powers[t - k].clone() * F::from_rational(&gamma[k])
            })
        })
        .collect()
}

/// Arithmetic used for a symmetric solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact when the cubic's roots allow it, numeric otherwise.
    #[default]
    Auto,
    Exact,
    Numeric,
}

#[derive(Clone, Debug)]
pub struct SymmetricOptions {
    pub mode: Mode,
    pub precision_bits: usize,
    pub tolerance: Real,
}

impl Default for SymmetricOptions {
    fn default() -> Self {
        SymmetricOptions {
            mode: Mode::Auto,
            precision_bits: numeric::DEFAULT_PRECISION,
            tolerance: numeric::pow10_neg(20, numeric::DEFAULT_PRECISION + 32),
        }
    }
}

/// One lifted atom `(x, y)` with `y^2 = z = x^3 + a x + b`.
#[derive(Clone, Debug)]
pub struct LiftedAtom {
    pub x: Real,
    pub y: Real,
    pub weight: Real,
    /// Exact `x`, `z = y^2` and weight, when available.
    pub exact: Option<(Value, Value, Value)>,
}

/// A measure on the curve obtained by lifting.
#[derive(Clone, Debug)]
pub struct LiftedMeasure {
    pub atoms: Vec<LiftedAtom>,
    pub exact: bool,
    pub residual_moments: Real,
    pub residual_curve: Real,
    pub precision_bits: usize,
}

impl LiftedMeasure {
    pub fn to_json(&self) -> Value {
        let digits = (self.precision_bits as f64 * std::f64::consts::LOG10_2).floor() as usize;
        let atoms: Vec<Value> = self
            .atoms
            .iter()
            .map(|a| {
                let mut o = json!({
                    "x": numeric::format_real(&a.x, digits),
                    "y": numeric::format_real(&a.y, digits),
                    "weight": numeric::format_real(&a.weight, digits),
                });
                if let Some((x, z, w)) = &a.exact {
                    o["x"] = x.clone();
                    o["y_squared"] = z.clone();
                    o["weight"] = w.clone();
                }
                o
            })
            .collect();
        json!({
            "atoms": atoms,
            "exact": self.exact,
            "residual_moments": numeric::format_real(&self.residual_moments, 6),
            "residual_curve": numeric::format_real(&self.residual_curve, 6),
            "precision_bits": self.precision_bits,
        })
    }
}

/// Lifts atoms `t_r` on `E` to `(x_r, +-sqrt(z_r))`, `x_r = t_r + x1`, each
/// carrying half the weight; `z_r = 0` gives one atom with the full weight.
pub fn lift_measure<F: Field>(
    atoms: &[(F, F)],
    x1: &F,
    curve: &CurveParams,
    precision: usize,
) -> Result<Vec<(F, F, F, bool)>> {
    let half = F::from_rational(&Rational::new(1.into(), 2.into()));
    let mut out = vec![];
    for (t, w) in atoms {
        let x = t.clone() + x1.clone();
        let z = curve.cubic(&x);
        match z.sign() {
            s if s < 0 => {
                return Err(Error::Certification(format!(
                    "atom t = {} lies outside E",
                    numeric::format_real(&t.to_real(precision), 20)
                )))
            }
            0 => out.push((x, F::zero(), w.clone(), false)),
            _ => out.push((x, z, w.clone() * half.clone(), true)),
        }
    }
    Ok(out)
}

/// Which support the reduction produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Halfline,
    Union,
}

/// Full report of a symmetric solve.
#[derive(Clone, Debug)]
pub struct SymmetricReport {
    pub purity: PurityReport,
    pub roots: CubicRoots,
    pub support_kind: SupportKind,
    /// `"rational"`, `"quadratic"` or `"approx"`.
    pub field: &'static str,
    pub univariate: Value,
    pub solution: Value,
    pub status: Status,
    pub measure: Option<LiftedMeasure>,
    pub notes: Vec<String>,
}

impl SymmetricReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::MeasureExists => 0,
            Status::NoMeasure => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "symmetric": true,
            "pure": self.purity.is_pure,
            "rank": self.purity.rank,
            "cubic": {
                "discriminant": format_rational(&self.roots.discriminant),
                "roots": self.roots.roots.iter().map(CubicRoot::to_json).collect::<Vec<_>>(),
            },
            "support": self.support_kind,
            "field": self.field,
            "univariate": self.univariate,
            "solution": self.solution,
            "conclusion": self.status,
            "measure": self.measure.as_ref().map(LiftedMeasure::to_json),
            "notes": self.notes,
        })
    }
}

/// Runs the reduction chain and the matching univariate solver, and lifts
/// the measure back to the curve.
pub fn solve_symmetric(beta: &BivariateMoments, curve: &CurveParams, opts: &SymmetricOptions) -> Result<SymmetricReport> {
    if beta.is_zero() {
        return Err(Error::Invalid("all moments vanish".into()));
    }
    let gamma = reduce_gamma(beta, curve)?;
    let purity = check_p_pure(&build_moment_matrix(beta), curve);
    let roots = cubic_real_roots(&curve.a, &curve.b, opts.precision_bits + 64);
    let mut notes = vec![];
    if !purity.is_pure {
        notes.push("M(n) is not p-pure; the symmetric solver does not rely on purity".into());
    }
    let rs = &roots.roots;
    let (kind, pts): (SupportKind, Vec<&CubicRoot>) = match rs.len() {
        1 => (SupportKind::Halfline, vec![&rs[0]]),
        2 if rs[1].multiplicity == 2 => {
            notes.push("x2 = x3 is a double root, so E = [0, inf)".into());
            (SupportKind::Halfline, vec![&rs[0]])
        }
        2 => {
            return Err(Error::Invalid(
                "x1 = x2 is a double root, so c = 0 and E is degenerate; not supported".into(),
            ))
        }
        _ => (SupportKind::Union, vec![&rs[0], &rs[1], &rs[2]]),
    };
    let all_exact = pts.iter().all(|r| r.exact.is_some());
    let all_rational = pts
        .iter()
        .all(|r| r.exact.as_ref().is_some_and(|q| q.as_rational().is_some()));
    if opts.mode == Mode::Exact && !all_exact {
        return Err(Error::Invalid(
            "exact mode needs cubic roots in a quadratic field; use --mode numeric".into(),
        ));
    }
    let numeric_mode = opts.mode == Mode::Numeric || !all_exact;
    let ctx = Ctx {
        beta,
        curve,
        gamma: &gamma,
        opts,
        kind: kind.clone(),
    };
    let (field, out) = if numeric_mode {
        let to = |r: &CubicRoot| Approx(r.approx(crate::field::APPROX_PRECISION));
        ("approx", run(&ctx, pts.iter().map(|r| to(r)).collect())?)
    } else if all_rational {
        let to = |r: &CubicRoot| r.exact.as_ref().unwrap().as_rational().unwrap().clone();
        ("rational", run(&ctx, pts.iter().map(|r| to(r)).collect())?)
    } else {
        let to = |r: &CubicRoot| r.exact.clone().unwrap();
        ("quadratic", run(&ctx, pts.iter().map(|r| to(r)).collect())?)
    };
    notes.extend(out.notes);
    Ok(SymmetricReport {
        purity,
        roots,
        support_kind: kind,
        field,
        univariate: out.univariate,
        solution: out.solution,
        status: out.status,
        measure: out.measure,
        notes,
    })
}

struct Ctx<'a> {
    beta: &'a BivariateMoments,
    curve: &'a CurveParams,
    gamma: &'a [Rational],
    opts: &'a SymmetricOptions,
    kind: SupportKind,
}

struct RunOutput {
    univariate: Value,
    solution: Value,
    status: Status,
    measure: Option<LiftedMeasure>,
    notes: Vec<String>,
}

fn run<F: Field>(ctx: &Ctx, roots: Vec<F>) -> Result<RunOutput> {
    let x1 = roots[0].clone();
    let gt: Vec<F> = shift(ctx.gamma, &x1);
    let uopts = UnivariateOptions {
        precision_bits: ctx.opts.precision_bits,
        tolerance: ctx.opts.tolerance.clone(),
        hints: vec![x1.clone()],
    };
    let (support, sol): (Support<F>, UnivariateSolution<F>) = match ctx.kind {
        SupportKind::Halfline => (Support::HalfLine, solve_halfline(&gt, &uopts)?),
        SupportKind::Union => {
            let c = roots[1].clone() - x1.clone();
            let d = roots[2].clone() - x1.clone();
            let sol = solve_union(&gt, &c, &d, &uopts)?;
            (Support::Union { c, d }, sol)
        }
    };
    let digits = (ctx.opts.precision_bits as f64 * std::f64::consts::LOG10_2).floor() as usize;
    let univariate = json!({
        "N": gt.len() - 1,
        "gamma": gt.iter().map(Field::to_json).collect::<Vec<_>>(),
        "support": support.to_json(),
    });
    let measure = match &sol.measure {
        Some(m) => Some(lift(ctx, m, &x1)?),
        None => None,
    };
    Ok(RunOutput {
        univariate,
        solution: sol.to_json(digits),
        status: sol.status,
        measure,
        notes: sol.notes.clone(),
    })
}

fn lift<F: Field>(
    ctx: &Ctx,
    m: &crate::univariate::UnivariateMeasure<F>,
    x1: &F,
) -> Result<LiftedMeasure> {
    let prec = ctx.opts.precision_bits + 32;
    let beta = ctx.beta;
    match &m.exact {
        Some(ex) => {
            let lifted = lift_measure(ex, x1, ctx.curve, prec)?;
            // Exact check of every even-in-y moment: beta_(i,2k) = sum w x^i z^k.
            let reproduces = beta.values().iter().all(|(&(i, j), b)| {
                if j % 2 == 1 {
                    return true;
                }
                let s = lifted.iter().fold(F::zero(), |acc, (x, z, w, pair)| {
                    let mult = if *pair { F::from_i64(2) } else { F::one() };
                    acc + mult * w.clone() * pow_f(x, i) * pow_f(z, j / 2)
                });
                s == F::from_rational(b)
            });
            if !reproduces {
                return Err(Error::Certification("lifted measure does not reproduce the data".into()));
            }
            let mut atoms = vec![];
            for (x, z, w, pair) in &lifted {
                let xr = x.to_real(prec);
                let y = numeric::sqrt(&z.to_real(prec));
                let exact = Some((x.to_json(), z.to_json(), w.to_json()));
                if *pair {
                    atoms.push(LiftedAtom { x: xr.clone(), y: -y.clone(), weight: w.to_real(prec), exact: exact.clone() });
                }
                atoms.push(LiftedAtom { x: xr, y, weight: w.to_real(prec), exact });
            }
            let residual_curve = curve_residual(&atoms, ctx.curve, prec);
            Ok(LiftedMeasure {
                atoms,
                exact: true,
                residual_moments: numeric::zero(prec),
                residual_curve,
                precision_bits: ctx.opts.precision_bits,
            })
        }
        None => {
            let x1r = x1.to_real(prec);
            let a = numeric::to_real(&ctx.curve.a, prec);
            let b = numeric::to_real(&ctx.curve.b, prec);
            let tol = numeric::pow2_neg(ctx.opts.precision_bits / 2, prec);
            let mut atoms = vec![];
            for (t, w) in &m.atoms {
                let x = t.clone() + x1r.clone();
                let z = x.clone() * x.clone() * x.clone() + a.clone() * x.clone() + b.clone();
                if numeric::is_neg(&(z.clone() + tol.clone())) {
                    return Err(Error::Certification("atom outside E".into()));
                }
                if numeric::abs(&z) <= tol {
                    atoms.push(LiftedAtom { x, y: numeric::zero(prec), weight: w.clone(), exact: None });
                } else {
                    let y = numeric::sqrt(&z);
                    let half = w.clone() / numeric::from_i64(2, prec);
                    atoms.push(LiftedAtom { x: x.clone(), y: -y.clone(), weight: half.clone(), exact: None });
                    atoms.push(LiftedAtom { x, y, weight: half, exact: None });
                }
            }
            let mut residual = numeric::zero(prec);
            for (&(i, j), bv) in beta.values() {
                let s = atoms.iter().fold(numeric::zero(prec), |acc, at| {
                    acc + at.weight.clone() * real_pow(&at.x, i) * real_pow(&at.y, j)
                });
                let br = numeric::to_real(bv, prec);
                let scale = numeric::one(prec).max(numeric::abs(&br));
                let d = numeric::abs(&(s - br)) / scale;
                if d > residual {
                    residual = d;
                }
            }
            if residual > ctx.opts.tolerance {
                return Err(Error::Certification(format!(
                    "lifted residual {} exceeds tolerance",
                    numeric::format_real(&residual, 6)
                )));
            }
            let residual_curve = curve_residual(&atoms, ctx.curve, prec);
            Ok(LiftedMeasure {
                atoms,
                exact: false,
                residual_moments: residual,
                residual_curve,
                precision_bits: ctx.opts.precision_bits,
            })
        }
    }
}

fn curve_residual(atoms: &[LiftedAtom], curve: &CurveParams, prec: usize) -> Real {
    let a = numeric::to_real(&curve.a, prec);
    let b = numeric::to_real(&curve.b, prec);
    atoms.iter().fold(numeric::zero(prec), |m, at| {
        let d = numeric::abs(
            &(at.y.clone() * at.y.clone()
                - at.x.clone() * at.x.clone() * at.x.clone()
                - a.clone() * at.x.clone()
                - b.clone()),
        );
        if d > m {
            d
        } else {
            m
        }
    })
}

fn pow_f<F: Field>(x: &F, e: usize) -> F {
    (0..e).fold(F::one(), |acc, _| acc * x.clone())
}

fn real_pow(x: &Real, e: usize) -> Real {
    (0..e).fold(numeric::one(x.precision()), |acc, _| acc * x.clone())
}
