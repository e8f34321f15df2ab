//! End-to-end analysis of a degree-`2n` sequence on a cubic curve: purity,
//! `R(theta)`, flat extensions and the representing measures.

use num_traits::Signed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{format_rational, QuadExt};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::flat_ext::{compress, compute_r, flat_extensions, solve_r, FlatExtension, RRoots, RThetaPoly};
use crate::measure::{extract_atoms, multiplication_matrices, solve_weights, AtomicMeasure};
use crate::moments::{basis_b, build_moment_matrix, check_p_pure, BivariateMoments, CurveParams, PurityReport};
use crate::numeric::{self, Real};

/// Which root of `R` to build when there are two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RootBranch {
    /// Smaller `|theta|`, ties to the minus branch.
    #[default]
    Preferred,
    Minus,
    Plus,
    Both,
}

/// Numeric settings for atom extraction.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub precision_bits: usize,
    pub tolerance: Real,
    pub root_branch: RootBranch,
    /// Seed for the random combination used in joint diagonalization.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            precision_bits: numeric::DEFAULT_PRECISION,
            tolerance: numeric::pow10_neg(20, numeric::DEFAULT_PRECISION + 32),
            root_branch: RootBranch::Preferred,
            seed: 0x7a11,
        }
    }
}

/// Final verdict of [`analyze`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    /// Input rejected: not `p`-pure or degenerate. Nothing is claimed.
    NotPure,
    /// `R` has no real root, so no `3n`-atomic representing measure exists.
    #[serde(rename = "no-rank-3n-measure")]
    NoRank3nMeasure,
    Unique,
    TwoMeasures,
    /// `R` vanishes identically.
    InfinitelyMany,
}

impl Conclusion {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Conclusion::NotPure => 3,
            Conclusion::NoRank3nMeasure => 2,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub n: usize,
    pub curve: CurveParams,
    pub purity: PurityReport,
    pub r: Option<RThetaPoly>,
    pub roots: Option<RRoots>,
    pub extensions: Vec<FlatExtension>,
    pub measures: Vec<AtomicMeasure>,
    pub conclusion: Conclusion,
    pub reason: String,
}

/// Runs purity, `R(theta)`, flat extension and extraction in order.
///
/// Errors are reserved for internal inconsistencies and numeric extraction
/// failures; negative answers are carried by the report.
pub fn analyze(beta: &BivariateMoments, curve: &CurveParams, opts: &SolveOptions) -> Result<AnalysisReport> {
    let n = beta.n();
    let m = build_moment_matrix(beta);
    let purity = check_p_pure(&m, curve);
    let mut report = AnalysisReport {
        n,
        curve: curve.clone(),
        purity: purity.clone(),
        r: None,
        roots: None,
        extensions: vec![],
        measures: vec![],
        conclusion: Conclusion::NotPure,
        reason: String::new(),
    };
    if beta.is_zero() {
        report.reason = "all moments vanish".into();
        return Ok(report);
    }
    if n < 3 {
        report.reason = format!("order n = {n} is below 3");
        return Ok(report);
    }
    if !purity.is_pure {
        report.reason = purity_reason(&purity, n);
        return Ok(report);
    }

    let cd = compress(beta, curve)?;
    let r = compute_r(&cd)?;
    let roots = solve_r(&r);
    report.r = Some(r.clone());
    report.roots = Some(roots.clone());
    let which: Vec<QuadExt> = match (&roots, opts.root_branch) {
        (RRoots::NoRoot, _) => {
            report.conclusion = Conclusion::NoRank3nMeasure;
            report.reason = "R(theta) has no real root".into();
            return Ok(report);
        }
        (RRoots::Two(m, _), RootBranch::Minus) => vec![m.clone()],
        (RRoots::Two(_, p), RootBranch::Plus) => vec![p.clone()],
        (RRoots::Two(m, p), RootBranch::Both) => vec![m.clone(), p.clone()],
        (other, _) => vec![other.preferred().expect("a root exists")],
    };
    report.conclusion = match roots {
        RRoots::Two(..) => Conclusion::TwoMeasures,
        RRoots::Identically => Conclusion::InfinitelyMany,
        _ => Conclusion::Unique,
    };
    report.reason = match roots {
        RRoots::Two(..) => "R(theta) has two real roots".into(),
        RRoots::Identically => "R(theta) vanishes identically; theta = 0 was used".into(),
        RRoots::Linear(_) => "R(theta) is linear with one root".into(),
        RRoots::Double(_) => "R(theta) has a double root".into(),
        RRoots::NoRoot => unreachable!(),
    };
    report.extensions = flat_extensions(&cd, &r, &roots, &which)?;
    let basis = basis_b(n);
    for fe in &report.extensions {
        report.measures.push(measure_from_extension(fe, beta, curve, &basis, opts)?);
    }
    Ok(report)
}

fn purity_reason(p: &PurityReport, n: usize) -> String {
    if !p.psd {
        "M(n) is not positive semidefinite".into()
    } else if !p.curve_relation_holds {
        "the curve relation does not hold among the columns of M(n)".into()
    } else if p.rank != 3 * n {
        format!("rank M(n) = {} differs from 3n = {}", p.rank, 3 * n)
    } else {
        "M(n) has column relations beyond those of the curve".into()
    }
}

/// Extracts and certifies the measure of a flat extension.
pub fn measure_from_extension(
    fe: &FlatExtension,
    beta: &BivariateMoments,
    curve: &CurveParams,
    basis: &[(usize, usize)],
    opts: &SolveOptions,
) -> Result<AtomicMeasure> {
    let mm = multiplication_matrices(|i, j| fe.moments[&(i, j)].clone(), basis)?;
    let mut last = Error::ExtractionFailed;
    // A different seed rescues the rare case of a combination whose
    // eigenvectors mix two nearly equal eigenvalues.
    for attempt in 0..3 {
        let atoms = match extract_atoms(&mm, opts.precision_bits, opts.seed + attempt) {
            Ok(a) => a,
            Err(e) => {
                last = e;
                continue;
            }
        };
        match solve_weights(&atoms, beta, curve, basis, opts.precision_bits, &opts.tolerance) {
            Ok(m) => return Ok(m),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn rational_json(r: &crate::arith::Rational) -> Value {
    Value::String(format_rational(r))
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        self.conclusion.exit_code()
    }

    /// Machine-readable report with a fixed field order.
    pub fn to_json(&self) -> Value {
        let mut out = serde_json::Map::new();
        out.insert("n".into(), json!(self.n));
        out.insert(
            "curve".into(),
            json!({"a": format_rational(&self.curve.a), "b": format_rational(&self.curve.b)}),
        );
        out.insert("pure".into(), json!(self.purity.is_pure));
        out.insert("rank".into(), json!(self.purity.rank));
        out.insert("purity".into(), serde_json::to_value(&self.purity).expect("json"));
        if let Some(r) = &self.r {
            out.insert(
                "R".into(),
                json!({"R2": rational_json(&r.r2), "R1": rational_json(&r.r1), "R0": rational_json(&r.r0)}),
            );
            out.insert("delta".into(), rational_json(&r.delta));
            let sign = if r.delta.is_positive() {
                1
            } else if r.delta.is_negative() {
                -1
            } else {
                0
            };
            out.insert("delta_sign".into(), json!(sign));
        }
        if let Some(roots) = &self.roots {
            out.insert("root_kind".into(), json!(root_kind(roots)));
            out.insert("roots".into(), Value::Array(roots.all().iter().map(Field::to_json).collect()));
        }
        let exts: Vec<Value> = self
            .extensions
            .iter()
            .map(|fe| {
                json!({
                    "theta": fe.theta.to_json(),
                    "phi": fe.phi.to_json(),
                    "psi": fe.psi.to_json(),
                    "rank": self.purity.rank,
                    "multiplicity": fe.multiplicity,
                })
            })
            .collect();
        out.insert("flat_extension".into(), exts.first().cloned().unwrap_or(Value::Null));
        if exts.len() > 1 {
            out.insert("flat_extensions".into(), Value::Array(exts));
        }
        out.insert("conclusion".into(), json!(self.conclusion));
        out.insert("reason".into(), json!(self.reason));
        let measures: Vec<Value> = self
            .measures
            .iter()
            .map(|m| serde_json::to_value(m.to_json()).expect("json"))
            .collect();
        out.insert("measures".into(), Value::Array(measures));
        Value::Object(out)
    }
}

fn root_kind(r: &RRoots) -> &'static str {
    match r {
        RRoots::NoRoot => "none",
        RRoots::Identically => "identically-zero",
        RRoots::Linear(_) => "linear",
        RRoots::Double(_) => "double",
        RRoots::Two(..) => "two",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat, Rational};
    use crate::io::{fixtures, parse_moment_json};
    use crate::moments::moments_from_atoms;

    fn run(text: &str) -> AnalysisReport {
        let f = parse_moment_json(text).unwrap();
        analyze(&f.beta, &f.curve, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn example_2031_has_no_measure() {
        let r = run(fixtures::EXAMPLE_2031);
        assert_eq!(r.conclusion, Conclusion::NoRank3nMeasure);
        assert_eq!(r.exit_code(), 2);
        let poly = r.r.unwrap();
        assert_eq!((poly.r2, poly.r1, poly.r0), (int(0), int(0), int(-16257024)));
    }

    #[test]
    fn example_1150_has_no_root() {
        let r = run(fixtures::EXAMPLE_1150);
        assert!(r.purity.is_pure);
        assert_eq!(r.conclusion, Conclusion::NoRank3nMeasure);
        assert_eq!(r.r.unwrap().r1, int(0));
    }

    #[test]
    fn example_1046_recovers_nine_rational_atoms() {
        let r = run(fixtures::EXAMPLE_1046);
        assert_eq!(r.conclusion, Conclusion::Unique);
        assert_eq!(r.measures.len(), 1);
        let exact = r.measures[0].exact.clone().expect("rational atoms");
        assert_eq!(exact.len(), 9);
        for (x, y, w) in &exact {
            assert_eq!(y * y, x * x * x);
            assert_eq!(w, &int(1));
        }
        assert!(exact.contains(&(int(0), int(0), int(1))));
        assert!(exact.contains(&(rat(1, 64), rat(1, 512), int(1))));
    }

    #[test]
    fn single_atom_is_not_pure() {
        let beta = moments_from_atoms(&[(int(0), int(0))], &[int(1)], 6);
        let r = analyze(&beta, &CurveParams::new(int(0), int(0)), &SolveOptions::default()).unwrap();
        assert_eq!(r.exit_code(), 3);
        assert!(r.reason.contains("rank"));
    }

    #[test]
    fn cusp_instance_matches_its_generator() {
        let ts: Vec<Rational> = [-5, -2, -1, 1, 2, 3, 4, 6, 9].iter().map(|&t| rat(t, 3)).collect();
        let atoms: Vec<(Rational, Rational)> = ts.iter().map(|t| (t * t, t * t * t)).collect();
        let weights: Vec<Rational> = (1..=9).map(|k| rat(k, 7)).collect();
        let beta = moments_from_atoms(&atoms, &weights, 6);
        let opts = SolveOptions {
            root_branch: RootBranch::Both,
            ..SolveOptions::default()
        };
        let r = analyze(&beta, &CurveParams::new(int(0), int(0)), &opts).unwrap();
        assert_eq!(r.conclusion, Conclusion::TwoMeasures);
        assert_eq!(r.measures.len(), 2);
        let matches = |m: &AtomicMeasure| {
            m.exact.as_ref().is_some_and(|got| {
                atoms
                    .iter()
                    .zip(&weights)
                    .all(|((x, y), w)| got.contains(&(x.clone(), y.clone(), w.clone())))
            })
        };
        assert_eq!(r.measures.iter().filter(|m| matches(m)).count(), 1);
        // The other measure is genuinely different but also certifies.
        assert!(r.measures.iter().all(|m| m.atoms.len() == 9));
    }

    #[test]
    fn report_field_order_is_stable() {
        let v = run(fixtures::EXAMPLE_2031).to_json();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys[..4], ["n", "curve", "pure", "rank"]);
        assert_eq!(v["conclusion"], "no-rank-3n-measure");
    }
}
