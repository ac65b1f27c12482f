//! Seeded randomized suites: hundreds of generated cases per module,
//! checking structural laws that must hold for every valid input rather than
//! for hand-picked fixtures.

mod common;

use imsg_core::ergodicity::{
    check_ergodic_limit, check_gradient_bound, check_poincare, check_sandwich,
};
use imsg_core::fixtures::{random_detailed_balance, reversible_corpus};
use imsg_core::gamma::{cd_check, curvature, gamma, gamma2, quadratic_forms_at};
use imsg_core::generator::GeneratorMatrix;
use imsg_core::poset::{
    analyze_relation, brute_force_width, directedness_check, lower_upper_prevision, order_report,
    Comparison,
};
use imsg_core::semigroup::{
    check_invariance, check_semigroup_axioms, generator_from_semigroup, invariant_measure,
    transition_matrix,
};
use imsg_core::spectral::{spectral_gap, symmetrized};
use imsg_core::state::Functional;
use nalgebra::{DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn random_functional(l: &GeneratorMatrix, rng: &mut ChaCha12Rng) -> Functional {
    let values: Vec<f64> = (0..l.size()).map(|_| rng.random_range(-1.0..1.0f64)).collect();
    Functional::new(l.states().clone(), values).expect("random functional")
}

#[test]
fn semigroup_laws_hold_on_random_reversible_chains() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for case in 0..100 {
        let n = rng.random_range(2..=6);
        let (l, mu) = random_detailed_balance(&mut rng, n).expect("random chain");

        let axioms = check_semigroup_axioms(&l, &[0.4, 1.1], 1e-7).expect("axiom check");
        assert!(axioms.pass, "case {case}: axioms failed: {axioms:?}");

        let f = random_functional(&l, &mut rng);
        let invariance =
            check_invariance(&l, &mu, &f, &[0.2, 0.7, 1.9], 1e-9).expect("invariance check");
        assert!(
            invariance.pass,
            "case {case}: invariance deviation {}",
            invariance.max_deviation
        );

        // First-order finite-difference recovery of the generator from its
        // own semigroup, as a route-independence check.
        if case % 5 == 0 {
            let h = 1e-7;
            let recovered =
                generator_from_semigroup(|t| transition_matrix(&l, t, 1e-13), h)
                    .expect("finite-difference generator");
            let scale = l.rates().amax().max(1.0);
            let sup = (recovered - l.rates()).amax();
            assert!(
                sup <= 1e-4 * scale,
                "case {case}: generator recovery off by {sup} at scale {scale}"
            );
        }
    }
}

#[test]
fn quadratic_forms_match_their_defining_evaluations() {
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    for case in 0..100 {
        let n = rng.random_range(2..=6);
        let (l, _) = random_detailed_balance(&mut rng, n).expect("random chain");
        let f = random_functional(&l, &mut rng);
        let fv = DVector::from_iterator(n, (0..n).map(|i| f.value(i)));
        let x = rng.random_range(0..n);

        let (gamma_form, gamma2_form, square_form) =
            quadratic_forms_at(&l, x).expect("assembled forms");
        let via_form = (fv.transpose() * &gamma_form * &fv)[(0, 0)];
        let via_eval = gamma(&l, &f, &f).expect("squared gradient").value(x);
        assert!(
            (via_form - via_eval).abs() <= 1e-9 * (1.0 + via_eval.abs()),
            "case {case}: gradient form {via_form} vs evaluation {via_eval}"
        );

        let via_form2 = (fv.transpose() * &gamma2_form * &fv)[(0, 0)];
        let via_eval2 = gamma2(&l, &f, &f).expect("iterated form").value(x);
        assert!(
            (via_form2 - via_eval2).abs() <= 1e-9 * (1.0 + via_eval2.abs()),
            "case {case}: iterated form {via_form2} vs evaluation {via_eval2}"
        );

        let via_form_sq = (fv.transpose() * &square_form * &fv)[(0, 0)];
        let lf = l.apply_to(&f).expect("generator action").value(x);
        assert!(
            (via_form_sq - lf * lf).abs() <= 1e-9 * (1.0 + lf * lf),
            "case {case}: squared-drift form {via_form_sq} vs {}",
            lf * lf
        );
    }
}

#[test]
fn cd_condition_flips_exactly_at_the_computed_constant() {
    let mut rng = ChaCha12Rng::seed_from_u64(107);
    for fixture in reversible_corpus() {
        let l = &fixture.generator;
        let report = curvature(l, f64::INFINITY).expect("curvature");
        let rho = report.global_rho.value().expect("bounded curvature");
        let witness = report.witness.clone().expect("curvature witness");

        let mut test_set = vec![witness];
        for _ in 0..10 {
            test_set.push(random_functional(l, &mut rng));
        }

        let at_rho = cd_check(l, rho - 1e-9, f64::INFINITY, &test_set, 1e-10)
            .expect("condition just below the constant");
        assert!(
            at_rho.pass,
            "{}: condition fails just below its own constant: {at_rho:?}",
            fixture.name
        );

        let above = cd_check(l, rho + 1e-3, f64::INFINITY, &test_set, 1e-10)
            .expect("condition above the constant");
        assert!(
            !above.pass,
            "{}: condition should fail above the computed constant",
            fixture.name
        );
    }
}

#[test]
fn variance_bound_saturates_on_gap_eigenfunctions() {
    let mut rng = ChaCha12Rng::seed_from_u64(109);
    // Two-state chains: the eigenfunction is explicit and the bound is tight.
    for case in 0..100 {
        let up = rng.random_range(0.2..5.0f64);
        let down = rng.random_range(0.2..5.0f64);
        let l = GeneratorMatrix::two_state(up, down).expect("two-state chain");
        let eigenfunction =
            Functional::new(l.states().clone(), vec![up, -down]).expect("gap eigenfunction");
        let gap = up + down;

        let tight = check_poincare(&l, &eigenfunction, gap, 1e-8).expect("tight bound");
        assert!(
            tight.pass && tight.slack.abs() <= 1e-10 * (1.0 + tight.variance),
            "case {case}: slack {} should vanish on the eigenfunction",
            tight.slack
        );

        let above = check_poincare(&l, &eigenfunction, gap * (1.0 + 1e-3), 1e-12)
            .expect("overstated bound");
        assert!(
            !above.pass,
            "case {case}: bound should fail just above the gap"
        );
    }
    // General chains: the gap is the optimal constant, so the bound holds
    // for every functional.
    for case in 0..50 {
        let n = rng.random_range(2..=6);
        let (l, mu) = random_detailed_balance(&mut rng, n).expect("random chain");
        let gap = spectral_gap(&l, &mu).expect("spectral gap");
        let f = random_functional(&l, &mut rng);
        let report = check_poincare(&l, &f, gap, 1e-8).expect("variance bound at the gap");
        assert!(
            report.pass,
            "case {case}: bound at the optimal constant failed with slack {}",
            report.slack
        );
    }
}

#[test]
fn gradient_bound_fails_just_above_the_computed_curvature() {
    for fixture in reversible_corpus() {
        let l = &fixture.generator;
        let report = curvature(l, f64::INFINITY).expect("curvature");
        let rho = report.global_rho.value().expect("bounded curvature");
        let witness = report.witness.clone().expect("curvature witness");

        // The violation above the true constant grows linearly out of t = 0
        // and only up to times of order one over the stiffness, so the probe
        // grid scales with the largest rate.
        let stiffness = l.rates().amax().max(1.0);
        let small_times: Vec<f64> = [1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0]
            .iter()
            .map(|c| c / stiffness)
            .collect();

        let at_rho = check_gradient_bound(l, &witness, rho, &small_times, 1e-8)
            .expect("bound at the computed constant");
        assert!(
            at_rho.pass,
            "{}: gradient bound failed at its own constant with violation {}",
            fixture.name, at_rho.worst_violation
        );

        let above = check_gradient_bound(l, &witness, rho + 0.05, &small_times, 1e-12)
            .expect("bound above the constant");
        assert!(
            !above.pass,
            "{}: gradient bound should fail on the witness above the constant",
            fixture.name
        );
    }
}

#[test]
fn width_by_matching_equals_width_by_exhaustion() {
    let mut rng = ChaCha12Rng::seed_from_u64(113);
    for case in 0..300 {
        let (names, matrix) = common::random_poset_matrix(&mut rng, 12);
        let brute = brute_force_width(&matrix).expect("exhaustive width");
        let report = analyze_relation(names, matrix.clone()).expect("relation analysis");
        assert_eq!(
            report.width, brute,
            "case {case}: matching width {} vs exhaustive {}",
            report.width, brute
        );
        assert_eq!(
            report.max_antichain.len(),
            report.width,
            "case {case}: antichain size disagrees with width"
        );
        for (i, &a) in report.max_antichain.iter().enumerate() {
            for &b in &report.max_antichain[i + 1..] {
                assert_eq!(
                    matrix[a][b],
                    Comparison::Incomparable,
                    "case {case}: antichain members {a} and {b} are comparable"
                );
            }
        }
    }
}

#[test]
fn exact_oracle_certifies_random_commensurate_families() {
    let mut rng = ChaCha12Rng::seed_from_u64(127);
    for case in 0..120 {
        let family = common::random_commensurate_family(&mut rng);
        let report = order_report(&family).unwrap_or_else(|e| {
            panic!("case {case}: order analysis failed: {e}");
        });
        assert_eq!(
            report.certified_pairs, report.total_pairs,
            "case {case}: {}/{} pairs certified",
            report.certified_pairs, report.total_pairs
        );

        // With a least and greatest member, the family is directed both ways
        // and the envelopes at any time coincide with the extremes' actions.
        if report.least.is_some() && report.greatest.is_some() {
            let everyone: Vec<usize> = (0..family.len()).collect();
            let directed =
                directedness_check(&report.relation, &everyone).expect("directedness");
            assert!(
                directed.upward && directed.downward,
                "case {case}: extremes exist but the family is not directed"
            );

            let (lower, upper) =
                lower_upper_prevision(&family, 0.7, Some(&report)).expect("envelopes");
            for i in 0..family.len() {
                let action = family.action_at(i, 0.7).expect("action");
                for x in 0..family.space().size() {
                    assert!(
                        action.value(x) >= lower.value(x) - family.eps_order()
                            && action.value(x) <= upper.value(x) + family.eps_order(),
                        "case {case}: member {i} escapes the envelope at state {x}"
                    );
                }
            }
        }
    }
}

#[test]
fn sandwich_brackets_every_commensurate_family_with_extremes() {
    let mut rng = ChaCha12Rng::seed_from_u64(131);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 60 && attempts < 600 {
        attempts += 1;
        let family = common::random_commensurate_family(&mut rng);
        let report = order_report(&family).expect("order analysis");
        if report.least.is_none() || report.greatest.is_none() {
            continue;
        }
        let sandwich = check_sandwich(&family, 1e-6).expect("sandwich check");
        assert!(
            sandwich.pass,
            "attempt {attempts}: sandwich failed: {sandwich:?}"
        );
        assert!(sandwich.within_bounds && sandwich.envelope_monotone);
        for &limit in &sandwich.limits {
            assert!(
                limit >= sandwich.lower_bound - 1e-9 && limit <= sandwich.upper_bound + 1e-9,
                "attempt {attempts}: limit {limit} escapes [{}, {}]",
                sandwich.lower_bound,
                sandwich.upper_bound
            );
        }
        checked += 1;
    }
    assert!(checked >= 30, "only {checked} families had extremes");
}

#[test]
fn fitted_decay_rates_track_the_spectral_gap() {
    let mut rng = ChaCha12Rng::seed_from_u64(137);
    let mut evaluated = 0usize;
    for fixture in reversible_corpus() {
        let l = &fixture.generator;
        let mu = invariant_measure(l).expect("invariant measure");
        let n = l.size();

        // Skip chains whose next eigenvalue crowds the gap: there the decay
        // is genuinely multi-exponential inside any fitting window.
        if n >= 3 {
            let s = symmetrized(l, &mu).expect("symmetrized generator");
            let mut eigenvalues: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
            eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let gap = -eigenvalues[1];
            let third = -eigenvalues[2];
            if (third - gap) / gap < 0.15 {
                continue;
            }
        }

        let f = random_functional(l, &mut rng);
        let report = check_ergodic_limit(l, &f, 1e-8).expect("ergodic limit");
        if let Some(agreement) = report.rate_agreement {
            assert!(
                agreement <= 0.05,
                "{}: fitted rate disagrees with the gap by {:.1}% (rate {:?}, gap {:?})",
                fixture.name,
                agreement * 100.0,
                report.fitted_rate,
                report.spectral_gap
            );
            evaluated += 1;
        }
    }
    assert!(evaluated >= 10, "only {evaluated} corpus chains produced a fit");
}
