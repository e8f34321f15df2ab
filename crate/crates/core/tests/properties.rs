use num_traits::{Signed, Zero};
use proptest::prelude::*;

use tmpkit_core::analyze::{analyze, Conclusion, RootBranch, SolveOptions};
use tmpkit_core::arith::{parse_rational, rat, Rational};
use tmpkit_core::field::Field;
use tmpkit_core::generate::{symmetric_instance, univariate_moments};
use tmpkit_core::linalg::Matrix;
use tmpkit_core::moments::{build_moment_matrix, moments_from_atoms};
use tmpkit_core::numeric;
use tmpkit_core::symmetric::{reduce_gamma, shift, solve_symmetric, SupportKind, SymmetricOptions};
use tmpkit_core::univariate::{certificate_extension, solve_halfline, solve_union, Status, UnivariateOptions};
use tmpkit_core::{CurveParams, QuadExt};

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-50i64..=50, 1i64..=12).prop_map(|(p, q)| rat(p, q))
}

fn localizing(gamma: &[Rational], q: &[Rational], m: usize) -> Matrix<Rational> {
    Matrix::from_fn(m + 1, m + 1, |i, j| {
        q.iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (k, c)| acc + c * &gamma[i + j + k])
    })
}

fn opts() -> UnivariateOptions<Rational> {
    UnivariateOptions {
        precision_bits: 128,
        tolerance: numeric::pow10_neg(20, 160),
        hints: vec![],
    }
}

/// Distinct atoms with small positive weights.
fn arb_measure(points: impl Strategy<Value = Rational>, max: usize) -> impl Strategy<Value = (Vec<Rational>, Vec<Rational>)> {
    proptest::collection::btree_map(points, (1i64..=9, 1i64..=4), 1..=max).prop_map(|m| {
        m.into_iter()
            .map(|(t, (p, q))| (t, rat(p, q)))
            .unzip()
    })
}

fn halfline_point() -> impl Strategy<Value = Rational> {
    (0i64..=40, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

/// Points of `[0, 1] u [2, inf)`.
fn union_point() -> impl Strategy<Value = Rational> {
    prop_oneof![(0i64..=4).prop_map(|p| rat(p, 4)), (8i64..=40).prop_map(|p| rat(p, 4))]
}

/// Points strictly inside `(0, 1) u (2, inf)`.
fn interior_point() -> impl Strategy<Value = Rational> {
    prop_oneof![(1i64..=7).prop_map(|p| rat(p, 8)), (17i64..=60).prop_map(|p| rat(p, 8))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rational_field_axioms(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
        prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
        prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
        prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
    }

    #[test]
    fn quad_ext_sign_is_consistent(u in arb_rational(), v in arb_rational(), d in 2i64..50) {
        let x = QuadExt::new(u, v, int(d));
        prop_assert_eq!(x.sign() == 1, (-x.clone()).sign() == -1);
        prop_assert!((x.clone() * x).sign() >= 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quad_ext_sign_matches_floating_point(
        u in (-10_000i64..=10_000, 1i64..=500),
        v in (-10_000i64..=10_000, 1i64..=500),
        d in 2i64..10_000,
    ) {
        let x = QuadExt::new(rat(u.0, u.1), rat(v.0, v.1), int(d));
        let f = x.to_real(200);
        prop_assume!(numeric::abs(&f) > numeric::pow2_neg(100, 200));
        let float_sign = if numeric::is_neg(&f) { -1 } else { 1 };
        prop_assert_eq!(Field::sign(&x), float_sign);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn localizers_of_supported_measures_are_psd((ts, ws) in arb_measure(union_point(), 7)) {
        let gamma = univariate_moments(&ts, &ws, 9);
        // 1, t, (t - 1)(t - 2), t (t - 1)(t - 2) are nonnegative on [0, 1] u [2, inf).
        let polys = [vec![int(1)], vec![int(0), int(1)], vec![int(2), int(-3), int(1)], vec![int(0), int(2), int(-3), int(1)]];
        for q in &polys {
            let m = (9 - (q.len() - 1)) / 2;
            prop_assert!(localizing(&gamma, q, m).is_psd());
        }
    }

    #[test]
    fn halfline_round_trip((ts, ws) in arb_measure(halfline_point(), 5), big_n in 7usize..=10) {
        let gamma = univariate_moments(&ts, &ws, big_n);
        let sol = solve_halfline(&gamma, &opts()).unwrap();
        prop_assert_eq!(sol.status, Status::MeasureExists);
        let measure = sol.measure.unwrap();
        // With 2 * atoms <= N the data determine the measure, so it is the
        // generator; otherwise a different minimal measure may have
        // irrational atoms and only the numeric residual is meaningful.
        if 2 * ts.len() <= big_n {
            let (xs, rho): (Vec<_>, Vec<_>) = measure.exact.unwrap().into_iter().unzip();
            prop_assert!(rho.iter().all(|w| w.is_positive()));
            prop_assert_eq!(univariate_moments(&xs, &rho, big_n), gamma);
        } else {
            prop_assert!(measure.residual <= numeric::pow10_neg(20, 160));
        }
    }

    #[test]
    fn union_round_trip((ts, ws) in arb_measure(union_point(), 4)) {
        let gamma = univariate_moments(&ts, &ws, 9);
        let sol = solve_union(&gamma, &int(1), &int(2), &opts()).unwrap();
        prop_assert_eq!(sol.status, Status::MeasureExists);
        let (xs, rho): (Vec<_>, Vec<_>) = sol.measure.unwrap().exact.unwrap().into_iter().unzip();
        prop_assert!(xs.iter().all(|t| !t.is_negative() && !(t > &int(1) && t < &int(2))));
        prop_assert_eq!(univariate_moments(&xs, &rho, 9), gamma);
    }

    #[test]
    fn certificate_thresholds_are_sharp((ts, ws) in arb_measure(interior_point(), 10), big_n in 6usize..=7) {
        prop_assume!(ts.len() >= 8);
        let gamma = univariate_moments(&ts, &ws, big_n);
        let (c, d) = (int(1), int(2));
        let polys = [vec![int(1)], vec![int(0), int(1)], vec![int(2), int(-3), int(1)], vec![int(0), int(2), int(-3), int(1)]];
        let cert = certificate_extension(&gamma, &c, &d).unwrap();
        let eps = rat(1, 1_000_000);
        let mut ext = gamma.clone();
        for (threshold, chosen) in &cert.steps {
            let idx = ext.len();
            // Matrices whose bottom-right entry is gamma_idx.
            let corner: Vec<_> = polys
                .iter()
                .filter(|q| idx >= q.len() - 1 && (idx - (q.len() - 1)) % 2 == 0)
                .collect();
            let with = |v: &Rational| {
                let mut g = ext.clone();
                g.push(v.clone());
                corner.iter().map(|q| localizing(&g, q, (idx - (q.len() - 1)) / 2)).collect::<Vec<_>>()
            };
            prop_assert!(with(&(threshold - &eps)).iter().any(|m| !m.is_psd()));
            prop_assert!(with(chosen).iter().all(|m| m.is_pd()));
            ext.push(chosen.clone());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn symmetric_reduction_lift_round_trip(seed in any::<u64>(), k in 2usize..=5, class in 0usize..3) {
        let curve = match class {
            0 => CurveParams::new(int(-1), int(0)),
            1 => CurveParams::new(int(1), int(-2)),
            _ => CurveParams::new(int(-7), int(6)),
        };
        let inst = symmetric_instance(&curve, k, 3, seed);
        let rep = solve_symmetric(&inst.beta, &curve, &SymmetricOptions::default()).unwrap();
        prop_assert_eq!(rep.status, Status::MeasureExists);
        let m = rep.measure.unwrap();
        prop_assert!(m.exact);
        let total = m.atoms.iter().fold(numeric::zero(160), |s, a| s + a.weight.clone());
        let diff = numeric::abs(&(total - numeric::to_real(inst.beta.at(0, 0), 160)));
        prop_assert!(diff < numeric::pow10_neg(20, 160));
        // Every univariate atom lies in E.
        let sol = &rep.solution["measure"]["atoms"];
        for a in sol.as_array().unwrap() {
            let t = numeric::to_real(&parse_rational(a["t"].as_str().unwrap()).unwrap(), 160);
            prop_assert!(!numeric::is_neg(&(t.clone() + numeric::pow10_neg(30, 160))));
            if rep.support_kind == SupportKind::Union {
                let roots = &rep.roots.roots;
                let c = (roots[1].approx(160) - roots[0].approx(160)).clone();
                let d = roots[2].approx(160) - roots[0].approx(160);
                prop_assert!(!(t > c && t < d), "atom inside the gap");
            }
        }
    }

    #[test]
    fn collision_check_passes_on_measure_data(seed in any::<u64>(), k in 1usize..=6) {
        let curve = CurveParams::new(int(-1), int(0));
        let inst = symmetric_instance(&curve, k, 3, seed);
        let gamma = reduce_gamma(&inst.beta, &curve).unwrap();
        // Shifted by the smallest root the sequence lives on [0, inf), so both
        // H_4 and the t-localizer are psd.
        let shifted: Vec<Rational> = shift(&gamma, &int(-1));
        prop_assert!(localizing(&shifted, &[int(1)], 4).is_psd());
        prop_assert!(localizing(&shifted, &[int(0), int(1)], 4).is_psd());
    }
}

#[test]
fn two_roots_give_two_distinct_certified_measures() {
    // Nine cusp points; R has two roots for this draw.
    let ts = [-3i64, -2, -1, 1, 2, 3, 4, 5, 6];
    let atoms: Vec<(Rational, Rational)> = ts.iter().map(|&t| (int(t * t), int(t * t * t))).collect();
    let weights = vec![int(1); 9];
    let beta = moments_from_atoms(&atoms, &weights, 6);
    let curve = CurveParams::new(int(0), int(0));
    let opts = SolveOptions {
        root_branch: RootBranch::Both,
        ..SolveOptions::default()
    };
    let rep = analyze(&beta, &curve, &opts).unwrap();
    if rep.conclusion != Conclusion::TwoMeasures {
        // The draw is only useful when the discriminant is positive.
        assert_eq!(rep.conclusion, Conclusion::Unique);
        return;
    }
    assert_eq!(rep.measures.len(), 2);
    for m in &rep.measures {
        assert_eq!(m.atoms.len(), 9);
        assert!(m.atoms.iter().all(|a| !numeric::is_neg(&a.weight)));
        assert!(m.residual_moments <= numeric::pow10_neg(20, 160));
    }
    let differ = rep.measures[0]
        .atoms
        .iter()
        .zip(&rep.measures[1].atoms)
        .any(|(p, q)| numeric::abs(&(p.x.clone() - q.x.clone())) > numeric::pow10_neg(10, 160));
    assert!(differ);
}

#[test]
fn flat_extension_keeps_the_rank() {
    let ts = [-4i64, -3, -1, 1, 2, 3, 5, 7, 8];
    let atoms: Vec<(Rational, Rational)> = ts.iter().map(|&t| (int(t * t), int(t * t * t))).collect();
    let beta = moments_from_atoms(&atoms, &vec![int(2); 9], 6);
    let curve = CurveParams::new(int(0), int(0));
    let rep = analyze(&beta, &curve, &SolveOptions::default()).unwrap();
    assert_eq!(build_moment_matrix(&beta).rank(), 9);
    for fe in &rep.extensions {
        assert_eq!(Field::rank(&fe.mn1), 9);
    }
}
