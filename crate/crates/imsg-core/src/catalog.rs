//! Executable catalog of reference computations with known answers.
//!
//! Every entry recomputes one quantity whose value is known independently —
//! a hand calculation, a classical closed form, or a second numerical route —
//! and reports the computed value next to the expected one with an explicit
//! tolerance. Running the whole catalog exercises each module of the crate
//! against ground truth in one sweep, and the entries double as worked
//! examples of the public API.

use serde::Serialize;

use crate::diffusion::{
    curvature_1d, discretize, gradient_identity_check, heat_spec, laguerre_spec,
    mehler_vs_discrete, ou_spec, residual_refinement, shared_invariant_demo, smooth_test_family,
    Boundary,
};
use crate::ergodicity::{
    check_ergodic_limit, check_gradient_bound, check_local_poincare, check_poincare,
    dirichlet_energy, variance,
};
use crate::error::{Error, Result};
use crate::fixtures::{fan_relation, find_fixture, reversible_corpus, three_chain_family};
use crate::gamma::{curvature, gamma, gamma2};
use crate::generator::GeneratorMatrix;
use crate::poset::{
    analyze_relation, lower_upper_prevision, order_report, shared_invariant_rigidity,
    ImpreciseFamily,
};
use crate::semigroup::{check_semigroup_axioms, invariant_measure, transition_matrix};
use crate::spectral::{expm_reversible, spectral_gap};
use crate::state::{Functional, ProbabilityMeasure, StateSpace};

/// Result of one catalog entry: the recomputed value against its reference.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogOutcome {
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl CatalogOutcome {
    pub fn new(computed: f64, expected: f64, tolerance: f64) -> CatalogOutcome {
        CatalogOutcome {
            computed,
            expected,
            tolerance,
        }
    }

    /// Absolute deviation from the reference value.
    pub fn deviation(&self) -> f64 {
        (self.computed - self.expected).abs()
    }

    /// Whether the recomputed value lands within tolerance. A non-finite
    /// computed value never passes.
    pub fn pass(&self) -> bool {
        self.deviation() <= self.tolerance
    }
}

/// A named reference computation.
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub run: fn() -> Result<CatalogOutcome>,
}

fn indicator_pair() -> Result<(GeneratorMatrix, Functional)> {
    let l = GeneratorMatrix::two_state(1.0, 1.0)?;
    let f = Functional::new(l.states().clone(), vec![1.0, 0.0])?;
    Ok((l, f))
}

fn pair_curvature_rate_sum() -> Result<CatalogOutcome> {
    let (l, _) = indicator_pair()?;
    let report = curvature(&l, f64::INFINITY)?;
    let rho = report.global_rho.value().unwrap_or(f64::NAN);
    Ok(CatalogOutcome::new(rho, 2.0, 1e-12))
}

fn pair_curvature_dimension_two() -> Result<CatalogOutcome> {
    let (l, _) = indicator_pair()?;
    let report = curvature(&l, 2.0)?;
    let rho = report.global_rho.value().unwrap_or(f64::NAN);
    Ok(CatalogOutcome::new(rho, 1.0, 1e-12))
}

fn path_endpoint_curvature() -> Result<CatalogOutcome> {
    let corpus = reversible_corpus();
    let fixture = find_fixture(&corpus, "path3_flat")
        .ok_or(Error::MissingExtremes("path3_flat fixture"))?;
    let report = curvature(&fixture.generator, f64::INFINITY)?;
    let rho = report.per_state[0].value().unwrap_or(f64::NAN);
    Ok(CatalogOutcome::new(rho, 1.5, 1e-12))
}

fn skewed_pair_spectral_gap() -> Result<CatalogOutcome> {
    let l = GeneratorMatrix::two_state(1.0, 3.0)?;
    let mu = invariant_measure(&l)?;
    Ok(CatalogOutcome::new(spectral_gap(&l, &mu)?, 4.0, 1e-10))
}

fn skewed_pair_invariant_weight() -> Result<CatalogOutcome> {
    let l = GeneratorMatrix::two_state(1.0, 3.0)?;
    let mu = invariant_measure(&l)?;
    Ok(CatalogOutcome::new(mu.weight(0), 0.75, 1e-12))
}

fn composition_law_deviation() -> Result<CatalogOutcome> {
    let (l, _) = indicator_pair()?;
    let report = check_semigroup_axioms(&l, &[0.25, 0.5, 1.0, 2.0], 1e-8)?;
    Ok(CatalogOutcome::new(report.composition_deviation, 0.0, 1e-9))
}

fn uniformization_matches_eigen_route() -> Result<CatalogOutcome> {
    let l = GeneratorMatrix::two_state(1.0, 3.0)?;
    let mu = invariant_measure(&l)?;
    let via_series = transition_matrix(&l, 0.7, 1e-13)?;
    let via_eigen = expm_reversible(&l, &mu, 0.7)?;
    let sup = (via_series.probs() - via_eigen)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(CatalogOutcome::new(sup, 0.0, 1e-9))
}

fn indicator_gamma_half() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    Ok(CatalogOutcome::new(gamma(&l, &f, &f)?.value(0), 0.5, 1e-15))
}

fn indicator_gamma2_one() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    Ok(CatalogOutcome::new(gamma2(&l, &f, &f)?.value(0), 1.0, 1e-15))
}

fn indicator_dirichlet_energy() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    let mu = invariant_measure(&l)?;
    Ok(CatalogOutcome::new(
        dirichlet_energy(&l, &mu, &f)?,
        0.5,
        1e-15,
    ))
}

fn skewed_measure_variance() -> Result<CatalogOutcome> {
    let space = StateSpace::indexed(2)?;
    let f = Functional::new(space.clone(), vec![1.0, 0.0])?;
    let mu = ProbabilityMeasure::new(space, vec![0.75, 0.25])?;
    Ok(CatalogOutcome::new(variance(&f, &mu)?, 0.1875, 1e-15))
}

fn local_variance_tight_value() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    let report = check_local_poincare(&l, &f, 2.0, &[0.5], 1e-12)?;
    let expected = 0.25 * (1.0 - (-2.0f64).exp());
    Ok(CatalogOutcome::new(report.witness_lhs, expected, 1e-12))
}

fn variance_bound_slack_vanishes() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    let report = check_poincare(&l, &f, 2.0, 1e-12)?;
    Ok(CatalogOutcome::new(report.slack, 0.0, 1e-12))
}

fn gradient_bound_exact_at_two() -> Result<CatalogOutcome> {
    let (l, f) = indicator_pair()?;
    let grid = [0.1, 0.25, 0.5, 1.0, 2.0];
    let report = check_gradient_bound(&l, &f, 2.0, &grid, 1e-12)?;
    Ok(CatalogOutcome::new(report.worst_violation, 0.0, 1e-12))
}

fn ergodic_limit_two_thirds() -> Result<CatalogOutcome> {
    let l = GeneratorMatrix::two_state(1.0, 2.0)?;
    let f = Functional::new(l.states().clone(), vec![1.0, 0.0])?;
    let report = check_ergodic_limit(&l, &f, 1e-8)?;
    Ok(CatalogOutcome::new(report.limit, 2.0 / 3.0, 1e-12))
}

fn decay_rate_matches_gap() -> Result<CatalogOutcome> {
    let l = GeneratorMatrix::two_state(1.0, 3.0)?;
    let f = Functional::new(l.states().clone(), vec![1.0, 0.0])?;
    let report = check_ergodic_limit(&l, &f, 1e-8)?;
    let rate = report.fitted_rate.unwrap_or(f64::NAN);
    Ok(CatalogOutcome::new(rate, 4.0, 0.2))
}

fn three_chain_is_totally_ordered() -> Result<CatalogOutcome> {
    let family = three_chain_family()?;
    let report = order_report(&family)?;
    Ok(CatalogOutcome::new(report.width as f64, 1.0, 0.0))
}

fn fan_width_counts_middle_layer() -> Result<CatalogOutcome> {
    let (names, matrix) = fan_relation(4);
    let report = analyze_relation(names, matrix)?;
    Ok(CatalogOutcome::new(report.width as f64, 4.0, 0.0))
}

fn lower_envelope_is_slowest_action() -> Result<CatalogOutcome> {
    let family = three_chain_family()?;
    let report = order_report(&family)?;
    let (lower, _) = lower_upper_prevision(&family, 1.0, Some(&report))?;
    let expected = 0.5 + 0.5 * (-2.0f64).exp();
    Ok(CatalogOutcome::new(lower.value(0), expected, 1e-9))
}

fn upper_envelope_is_fastest_action() -> Result<CatalogOutcome> {
    let family = three_chain_family()?;
    let report = order_report(&family)?;
    let (_, upper) = lower_upper_prevision(&family, 1.0, Some(&report))?;
    let expected = 0.75 + 0.25 * (-4.0f64).exp();
    Ok(CatalogOutcome::new(upper.value(0), expected, 1e-9))
}

fn shared_measure_members_tie() -> Result<CatalogOutcome> {
    let space = StateSpace::indexed(2)?;
    let payoff = Functional::new(space, vec![1.0, 0.0])?;
    let family = ImpreciseFamily::new(
        vec![
            ("steady".to_string(), GeneratorMatrix::two_state(1.0, 1.0)?),
            ("brisk".to_string(), GeneratorMatrix::two_state(2.0, 2.0)?),
        ],
        payoff,
    )?;
    let report = shared_invariant_rigidity(&family)?;
    let counted = if report.pass {
        report.shared_reversible_pairs as f64
    } else {
        f64::NAN
    };
    Ok(CatalogOutcome::new(counted, 1.0, 0.0))
}

fn mean_reverting_scan_curvature() -> Result<CatalogOutcome> {
    let spec = ou_spec(400)?;
    let family = smooth_test_family(&spec, 42, 50);
    let scan = curvature_1d(&spec, &family, 2)?;
    Ok(CatalogOutcome::new(scan.rho_estimate, 1.0, 1e-2))
}

fn laguerre_scan_curvature() -> Result<CatalogOutcome> {
    let spec = laguerre_spec(1.0, 400)?;
    let family = smooth_test_family(&spec, 42, 50);
    let scan = curvature_1d(&spec, &family, 2)?;
    Ok(CatalogOutcome::new(scan.rho_estimate, 0.5, 2e-2))
}

fn driftless_scan_curvature() -> Result<CatalogOutcome> {
    let spec = heat_spec(400, Boundary::Reflecting)?;
    let family = smooth_test_family(&spec, 42, 50);
    let scan = curvature_1d(&spec, &family, 2)?;
    Ok(CatalogOutcome::new(scan.rho_estimate, 0.0, 1e-2))
}

fn gaussian_weights_at_fine_grid() -> Result<CatalogOutcome> {
    let spec = ou_spec(800)?;
    let model = discretize(&spec)?;
    let grid = spec.grid();
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
        .collect();
    let total: f64 = density.iter().sum();
    let mut worst = 0.0f64;
    for (i, &x) in grid.iter().enumerate() {
        if x.abs() <= 4.0 {
            let reference = density[i] / total;
            worst = worst.max((model.measure.weights()[i] - reference).abs() / reference);
        }
    }
    Ok(CatalogOutcome::new(worst, 0.0, 1e-3))
}

fn mehler_route_agreement() -> Result<CatalogOutcome> {
    let report = mehler_vs_discrete(f64::tanh, 0.5, 1e-3, 400, 40)?;
    Ok(CatalogOutcome::new(report.max_deviation, 0.0, 1e-3))
}

fn drift_vs_potential_generators() -> Result<CatalogOutcome> {
    let report = shared_invariant_demo(400)?;
    Ok(CatalogOutcome::new(report.generator_sup_diff, 0.0, 1e-12))
}

fn chain_rule_defect_quarters() -> Result<CatalogOutcome> {
    let report = residual_refinement(200)?;
    Ok(CatalogOutcome::new(report.ratio, 4.0, 1.0))
}

fn gradient_identity_fourfold() -> Result<CatalogOutcome> {
    let report = gradient_identity_check(100, f64::sin, f64::cos, |x| -x.sin())?;
    Ok(CatalogOutcome::new(report.gamma_ratio, 4.0, 0.5))
}

/// All reference computations, grouped roughly by module.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "pair_curvature_rate_sum",
            description: "curvature of the balanced two-state chain equals the sum of its rates",
            run: pair_curvature_rate_sum,
        },
        CatalogEntry {
            name: "pair_curvature_dimension_two",
            description: "adding the dimension-two term halves the two-state curvature",
            run: pair_curvature_dimension_two,
        },
        CatalogEntry {
            name: "path_endpoint_curvature",
            description: "endpoint of the flat three-path has local curvature 3/2",
            run: path_endpoint_curvature,
        },
        CatalogEntry {
            name: "skewed_pair_spectral_gap",
            description: "spectral gap of a two-state chain is the sum of its rates",
            run: skewed_pair_spectral_gap,
        },
        CatalogEntry {
            name: "skewed_pair_invariant_weight",
            description: "invariant weight of state 0 is the opposing rate fraction",
            run: skewed_pair_invariant_weight,
        },
        CatalogEntry {
            name: "composition_law_deviation",
            description: "P_s P_t equals P_{s+t} up to series truncation error",
            run: composition_law_deviation,
        },
        CatalogEntry {
            name: "uniformization_matches_eigen_route",
            description: "series and eigendecomposition transition routes coincide",
            run: uniformization_matches_eigen_route,
        },
        CatalogEntry {
            name: "indicator_gamma_half",
            description: "squared gradient of an indicator on the balanced pair is 1/2",
            run: indicator_gamma_half,
        },
        CatalogEntry {
            name: "indicator_gamma2_one",
            description: "iterated form of the same indicator is 1, twice its gradient",
            run: indicator_gamma2_one,
        },
        CatalogEntry {
            name: "indicator_dirichlet_energy",
            description: "energy of the indicator under the uniform measure is 1/2",
            run: indicator_dirichlet_energy,
        },
        CatalogEntry {
            name: "skewed_measure_variance",
            description: "variance of an indicator under weights (3/4, 1/4) is 3/16",
            run: skewed_measure_variance,
        },
        CatalogEntry {
            name: "local_variance_tight_value",
            description: "local variance at t = 1/2 on the balanced pair is (1 - e^-2)/4",
            run: local_variance_tight_value,
        },
        CatalogEntry {
            name: "variance_bound_slack_vanishes",
            description: "the variance bound is exactly tight at the true curvature",
            run: variance_bound_slack_vanishes,
        },
        CatalogEntry {
            name: "gradient_bound_exact_at_two",
            description: "gradient commutation holds with equality at the true curvature",
            run: gradient_bound_exact_at_two,
        },
        CatalogEntry {
            name: "ergodic_limit_two_thirds",
            description: "ergodic limit of the indicator under rates (1, 2) is 2/3",
            run: ergodic_limit_two_thirds,
        },
        CatalogEntry {
            name: "decay_rate_matches_gap",
            description: "fitted exponential decay rate recovers the spectral gap",
            run: decay_rate_matches_gap,
        },
        CatalogEntry {
            name: "three_chain_is_totally_ordered",
            description: "three commensurate relaxation speeds form a chain of width 1",
            run: three_chain_is_totally_ordered,
        },
        CatalogEntry {
            name: "fan_width_counts_middle_layer",
            description: "bottom-middle-top fan relation has width equal to the middle layer",
            run: fan_width_counts_middle_layer,
        },
        CatalogEntry {
            name: "lower_envelope_is_slowest_action",
            description: "lower envelope at t = 1 equals the slowest member's action",
            run: lower_envelope_is_slowest_action,
        },
        CatalogEntry {
            name: "upper_envelope_is_fastest_action",
            description: "upper envelope at t = 1 equals the fastest member's action",
            run: upper_envelope_is_fastest_action,
        },
        CatalogEntry {
            name: "shared_measure_members_tie",
            description: "reversible members with one invariant measure never order strictly",
            run: shared_measure_members_tie,
        },
        CatalogEntry {
            name: "mean_reverting_scan_curvature",
            description: "discretized mean-reverting diffusion scans to curvature 1",
            run: mean_reverting_scan_curvature,
        },
        CatalogEntry {
            name: "laguerre_scan_curvature",
            description: "discretized Laguerre diffusion at alpha = 1 scans to curvature 1/2",
            run: laguerre_scan_curvature,
        },
        CatalogEntry {
            name: "driftless_scan_curvature",
            description: "driftless heat flow scans to vanishing curvature",
            run: driftless_scan_curvature,
        },
        CatalogEntry {
            name: "gaussian_weights_at_fine_grid",
            description: "invariant weights of the fine mean-reverting grid match the Gaussian",
            run: gaussian_weights_at_fine_grid,
        },
        CatalogEntry {
            name: "mehler_route_agreement",
            description: "closed-form Gaussian smoothing agrees with the matrix route",
            run: mehler_route_agreement,
        },
        CatalogEntry {
            name: "drift_vs_potential_generators",
            description: "drift and potential descriptions build identical generators",
            run: drift_vs_potential_generators,
        },
        CatalogEntry {
            name: "chain_rule_defect_quarters",
            description: "chain-rule defect shrinks fourfold when the grid is halved",
            run: chain_rule_defect_quarters,
        },
        CatalogEntry {
            name: "gradient_identity_fourfold",
            description: "discrete gradient identities converge at second order",
            run: gradient_identity_fourfold,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_names_are_unique_and_described() {
        let entries = catalog();
        assert!(entries.len() >= 25);
        for (i, a) in entries.iter().enumerate() {
            assert!(!a.description.is_empty(), "{} lacks a description", a.name);
            for b in entries.iter().skip(i + 1) {
                assert_ne!(a.name, b.name, "duplicate catalog name");
            }
        }
    }

    #[test]
    fn every_entry_reproduces_its_reference_value() {
        for entry in catalog() {
            let outcome = (entry.run)().unwrap_or_else(|e| {
                panic!("catalog entry {} failed to run: {e}", entry.name);
            });
            assert!(
                outcome.pass(),
                "catalog entry {} computed {} but expected {} within {}",
                entry.name,
                outcome.computed,
                outcome.expected,
                outcome.tolerance
            );
        }
    }
}
