//! Semigroup evaluation and the defining property checks.
//!
//! `transition_matrix` evaluates `P_t = exp(tL)` by uniformization: with
//! `lambda = max_x |L(x,x)|` and `M = I + L/lambda`, the series
//! `P_t = sum_k Poisson(lambda t, k) M^k` has nonnegative terms, so
//! nonnegativity and row stochasticity hold structurally rather than up to
//! rounding. Large `lambda t` is reduced with the semigroup law
//! `P_t = (P_{t/2})^2`, which preserves both properties as well.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::generator::GeneratorMatrix;
use crate::state::{require_same_space, Functional, ProbabilityMeasure, StateSpace};
use crate::{Error, Result};

/// Default truncation tolerance for the uniformization series.
pub const DEFAULT_EXPM_TOL: f64 = 1e-13;
/// Largest admissible truncation tolerance.
pub const MAX_EXPM_TOL: f64 = 1e-6;
/// Uniformized time mass above which evaluation switches to squaring.
const SPLIT_CAP: f64 = 200.0;
/// Relative singular-value threshold for the invariant-measure null space.
const NULL_SPACE_RTOL: f64 = 1e-9;
/// Residual bound certifying an invariant measure.
const INVARIANT_RESIDUAL_TOL: f64 = 1e-10;

/// Row-stochastic transition matrix at a fixed time.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    states: StateSpace,
    time: f64,
    probs: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[(from, to)]
    }
}

/// Applies a transition matrix to a functional: `(P_t f)(x)`.
pub fn apply(p: &TransitionMatrix, f: &Functional) -> Result<Functional> {
    require_same_space(&p.states, f.space(), "semigroup application")?;
    Ok(Functional::from_vector(
        p.states.clone(),
        &p.probs * f.values(),
    ))
}

/// Column-sparsity pattern of a matrix, for cheap right-multiplication when
/// the generator is banded (discretized diffusions are tridiagonal).
struct ColumnPattern {
    cols: Vec<Vec<(usize, f64)>>,
}

impl ColumnPattern {
    fn of(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut col = Vec::new();
            for i in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    col.push((i, v));
                }
            }
            cols.push(col);
        }
        Self { cols }
    }

    /// Computes `dst = src * M` column by column.
    fn right_mul(&self, src: &DMatrix<f64>, dst: &mut DMatrix<f64>) {
        dst.fill(0.0);
        for (j, col) in self.cols.iter().enumerate() {
            for &(k, v) in col {
                let mut out = dst.column_mut(j);
                out.axpy(v, &src.column(k), 1.0);
            }
        }
    }
}

/// Evaluates `P_t = exp(tL)` by uniformization.
pub fn transition_matrix(l: &GeneratorMatrix, t: f64, tol: f64) -> Result<TransitionMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::OutOfDomain {
            context: "transition time must be finite and nonnegative",
            value: t,
        });
    }
    if !(tol > 0.0 && tol <= MAX_EXPM_TOL) {
        return Err(Error::OutOfDomain {
            context: "truncation tolerance must lie in (0, 1e-6]",
            value: tol,
        });
    }
    let n = l.size();
    let lambda = l.max_exit_rate();
    if lambda == 0.0 || t == 0.0 {
        return Ok(TransitionMatrix {
            states: l.states().clone(),
            time: t,
            probs: DMatrix::identity(n, n),
        });
    }

    let mut doublings = 0u32;
    let mut s = t;
    while lambda * s > SPLIT_CAP {
        s /= 2.0;
        doublings += 1;
    }
    // Each squaring at most doubles the accumulated truncation deficit.
    let step_tol = (tol / f64::powi(2.0, doublings as i32)).max(1e-16);

    let mut m = DMatrix::identity(n, n);
    m += l.rates() / lambda;
    // |L(x,x)| <= lambda, so the diagonal is nonnegative up to rounding.
    m.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    let pattern = ColumnPattern::of(&m);

    let mean = lambda * s;
    let mut weight = (-mean).exp();
    let mut covered = weight;
    let mut power = DMatrix::identity(n, n);
    let mut scratch = DMatrix::zeros(n, n);
    let mut sum = DMatrix::identity(n, n) * weight;
    let mut k = 0usize;
    while 1.0 - covered > step_tol {
        k += 1;
        weight *= mean / k as f64;
        pattern.right_mul(&power, &mut scratch);
        std::mem::swap(&mut power, &mut scratch);
        sum.zip_apply(&power, |acc, p| *acc += weight * p);
        covered += weight;
        // Past the mode the weights fall monotonically; once they reach the
        // round-off floor the remaining tail is bounded by a small multiple
        // of the last weight, far below any admissible tolerance, even when
        // the accumulated mass has stalled a few ulps short of one.
        if weight < 1e-18 && k as f64 > mean {
            break;
        }
        if k > 100_000 {
            return Err(Error::Numerical(
                "uniformization series failed to converge".into(),
            ));
        }
    }
    for _ in 0..doublings {
        sum = &sum * &sum;
    }
    Ok(TransitionMatrix {
        states: l.states().clone(),
        time: t,
        probs: sum,
    })
}

/// Solves `mu^T L = 0` with `sum mu = 1` by a rank-revealing factorization.
///
/// The null space of `L^T` must be one dimensional; otherwise the chain
/// supports several invariant measures and the call fails rather than picking
/// one silently.
pub fn invariant_measure(l: &GeneratorMatrix) -> Result<ProbabilityMeasure> {
    let n = l.size();
    if n == 1 {
        return ProbabilityMeasure::new(l.states().clone(), vec![1.0]);
    }
    let svd = l.rates().transpose().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = NULL_SPACE_RTOL * smax;
    let null_dim = if smax == 0.0 {
        n
    } else {
        svd.singular_values.iter().filter(|&&s| s <= cutoff).count()
    };
    if null_dim != 1 {
        return Err(Error::NotUniquelyErgodic {
            null_dim: null_dim.max(1),
        });
    }
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD did not return singular vectors".into()))?;
    // Singular values are sorted in descending order; the null vector is the
    // last right-singular vector.
    let mut mu: DVector<f64> = v_t.row(n - 1).transpose();
    let total: f64 = mu.iter().sum();
    if total < 0.0 {
        mu.neg_mut();
    }
    let floor = -1e-9 * mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in mu.iter_mut() {
        if *v < floor {
            return Err(Error::Numerical(
                "invariant measure has a significantly negative entry".into(),
            ));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let measure = ProbabilityMeasure::from_unnormalized(l.states().clone(), mu.data.into())?;
    let residual = (l.rates().transpose() * measure.weights())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // Scale by the generator magnitude: round-off in the null vector grows
    // with the largest rate, so a fixed absolute threshold would reject
    // stiff but perfectly well-conditioned generators.
    let allowed = INVARIANT_RESIDUAL_TOL * l.max_exit_rate().max(1.0);
    if residual > allowed {
        return Err(Error::Numerical(format!(
            "invariant measure residual {residual:.3e} exceeds {allowed:.3e}"
        )));
    }
    Ok(measure)
}

/// Deviations of `t -> integral of P_t f d mu` from its value at `t = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub deviations: Vec<(f64, f64)>,
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn check_invariance(
    l: &GeneratorMatrix,
    mu: &ProbabilityMeasure,
    f: &Functional,
    t_grid: &[f64],
    tol: f64,
) -> Result<InvarianceReport> {
    require_same_space(l.states(), mu.space(), "invariance check")?;
    let base = mu.expectation(f)?;
    let mut deviations = Vec::with_capacity(t_grid.len());
    let mut max_dev = 0.0f64;
    for &t in t_grid {
        let p = transition_matrix(l, t, DEFAULT_EXPM_TOL)?;
        let pf = apply(&p, f)?;
        let dev = (mu.expectation(&pf)? - base).abs();
        max_dev = max_dev.max(dev);
        deviations.push((t, dev));
    }
    Ok(InvarianceReport {
        deviations,
        max_deviation: max_dev,
        pass: max_dev <= tol,
    })
}

/// Detailed balance and semigroup symmetry deviations.
#[derive(Debug, Clone, Serialize)]
pub struct ReversibilityReport {
    pub detailed_balance_deviation: f64,
    pub semigroup_symmetry_deviation: f64,
    pub pass: bool,
}

/// Checks `mu(x) L(x,y) = mu(y) L(y,x)` pairwise and, on the basis of
/// indicators, the symmetry `integral f P_t g d mu = integral g P_t f d mu`
/// over the time grid.
pub fn check_reversibility(
    l: &GeneratorMatrix,
    mu: &ProbabilityMeasure,
    t_grid: &[f64],
    tol: f64,
) -> Result<ReversibilityReport> {
    require_same_space(l.states(), mu.space(), "reversibility check")?;
    let n = l.size();
    let mut balance: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            balance = balance
                .max((mu.weight(x) * l.rate(x, y) - mu.weight(y) * l.rate(y, x)).abs());
        }
    }
    let mut symmetry: f64 = 0.0;
    for &t in t_grid {
        let p = transition_matrix(l, t, DEFAULT_EXPM_TOL)?;
        for x in 0..n {
            for y in (x + 1)..n {
                symmetry = symmetry
                    .max((mu.weight(x) * p.prob(x, y) - mu.weight(y) * p.prob(y, x)).abs());
            }
        }
    }
    Ok(ReversibilityReport {
        detailed_balance_deviation: balance,
        semigroup_symmetry_deviation: symmetry,
        pass: balance <= tol && symmetry <= tol,
    })
}

/// Outcome of the defining semigroup property checks.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub identity_deviation: f64,
    pub mass_conservation_deviation: f64,
    pub minimum_entry: f64,
    pub composition_deviation: f64,
    /// `(h, ||P_h f - f||_{L2(mu)})` along `h = 2^{-k}`.
    pub continuity_decay: Vec<(f64, f64)>,
    pub identity_pass: bool,
    pub mass_pass: bool,
    pub positivity_pass: bool,
    pub composition_pass: bool,
    pub continuity_pass: bool,
    pub pass: bool,
}

/// Checks `P_0 = I`, mass conservation, positivity preservation, the
/// composition law on all grid pairs, and strong continuity at `t = 0`.
///
/// The continuity norm uses the invariant measure when it is unique and the
/// uniform measure otherwise; the decay sequence must stay monotone (up to
/// `tol`) and end consistent with at least first-order decay in `h`.
pub fn check_semigroup_axioms(
    l: &GeneratorMatrix,
    t_grid: &[f64],
    tol: f64,
) -> Result<AxiomReport> {
    let n = l.size();
    let p0 = transition_matrix(l, 0.0, DEFAULT_EXPM_TOL)?;
    let mut identity_dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { 1.0 } else { 0.0 };
            identity_dev = identity_dev.max((p0.prob(i, j) - expected).abs());
        }
    }

    let mut mass_dev: f64 = 0.0;
    let mut min_entry: f64 = f64::INFINITY;
    let mut transitions = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let p = transition_matrix(l, t, DEFAULT_EXPM_TOL)?;
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = p.prob(i, j);
                min_entry = min_entry.min(v);
                row_sum += v;
            }
            mass_dev = mass_dev.max((row_sum - 1.0).abs());
        }
        transitions.push(p);
    }
    if !min_entry.is_finite() {
        min_entry = 0.0;
    }

    let mut composition_dev: f64 = 0.0;
    for (i, &t) in t_grid.iter().enumerate() {
        for &s in &t_grid[i..] {
            let pt_ps = transitions[i].probs()
                * transition_matrix(l, s, DEFAULT_EXPM_TOL)?.probs();
            let pts = transition_matrix(l, t + s, DEFAULT_EXPM_TOL)?;
            let dev = (&pt_ps - pts.probs())
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            composition_dev = composition_dev.max(dev);
        }
    }

    let mu = invariant_measure(l).unwrap_or_else(|_| ProbabilityMeasure::uniform(l.states().clone()));
    let f = Functional::indicator(l.states().clone(), 0)?;
    let mut continuity = Vec::new();
    for k in 0..=12 {
        let h = f64::powi(2.0, -k);
        let ph = transition_matrix(l, h, DEFAULT_EXPM_TOL)?;
        let diff = apply(&ph, &f)?.axpy(-1.0, &f)?;
        continuity.push((h, diff.l2_norm(&mu)?));
    }
    let monotone = continuity
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + tol);
    // First-order decay drives the tail ratio toward 1/2.
    let vk = continuity.last().expect("nonempty decay sequence").1;
    let v_prev = continuity[continuity.len() - 2].1;
    let continuity_pass = monotone && (vk <= tol || vk <= 0.7 * v_prev);

    let identity_pass = identity_dev <= tol;
    let mass_pass = mass_dev <= tol;
    let positivity_pass = min_entry >= -tol;
    let composition_pass = composition_dev <= tol;
    Ok(AxiomReport {
        identity_deviation: identity_dev,
        mass_conservation_deviation: mass_dev,
        minimum_entry: min_entry,
        composition_deviation: composition_dev,
        continuity_decay: continuity,
        identity_pass,
        mass_pass,
        positivity_pass,
        composition_pass,
        continuity_pass,
        pass: identity_pass && mass_pass && positivity_pass && composition_pass && continuity_pass,
    })
}

/// Finite-difference recovery of the generator from a semigroup evaluator:
/// `(P_h - I)/h`. First-order accurate in `h`; used as a consistency oracle.
pub fn generator_from_semigroup<F>(evaluate: F, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> Result<TransitionMatrix>,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::OutOfDomain {
            context: "finite-difference step must be positive",
            value: h,
        });
    }
    let p = evaluate(h)?;
    let n = p.probs().nrows();
    let mut out = p.probs().clone();
    for i in 0..n {
        out[(i, i)] -= 1.0;
    }
    out /= h;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_rate() -> GeneratorMatrix {
        GeneratorMatrix::two_state(1.0, 1.0).unwrap()
    }

    #[test]
    fn two_state_transition_matches_closed_form() {
        let l = unit_rate();
        let t = 0.5f64.ln() / -2.0; // e^{-2t} = 1/2
        let p = transition_matrix(&l, t, DEFAULT_EXPM_TOL).unwrap();
        assert_abs_diff_eq!(p.prob(0, 0), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p.prob(0, 1), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.prob(1, 0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn zero_generator_yields_identity_at_all_times() {
        let states = StateSpace::indexed(3).unwrap();
        let l = crate::generator::validate_generator(DMatrix::zeros(3, 3), states).unwrap();
        let p = transition_matrix(&l, 7.3, DEFAULT_EXPM_TOL).unwrap();
        assert_eq!(p.probs(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn transition_rejects_bad_time_and_tolerance() {
        let l = unit_rate();
        assert!(transition_matrix(&l, -1.0, DEFAULT_EXPM_TOL).is_err());
        assert!(transition_matrix(&l, 1.0, 1e-3).is_err());
        assert!(transition_matrix(&l, 1.0, 0.0).is_err());
    }

    #[test]
    fn rows_stay_stochastic_after_time_splitting() {
        let l = GeneratorMatrix::two_state(40.0, 25.0).unwrap();
        let p = transition_matrix(&l, 50.0, DEFAULT_EXPM_TOL).unwrap();
        for i in 0..2 {
            let sum: f64 = (0..2).map(|j| p.prob(i, j)).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-11);
            assert!(p.prob(i, 0) >= 0.0 && p.prob(i, 1) >= 0.0);
        }
    }

    #[test]
    fn invariant_measure_of_asymmetric_chain() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        let mu = invariant_measure(&l).unwrap();
        assert_abs_diff_eq!(mu.weight(0), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(mu.weight(1), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_chain_has_no_unique_invariant_measure() {
        let states = StateSpace::indexed(4).unwrap();
        let mut rates = DMatrix::zeros(4, 4);
        rates[(0, 1)] = 1.0;
        rates[(0, 0)] = -1.0;
        rates[(1, 0)] = 1.0;
        rates[(1, 1)] = -1.0;
        rates[(2, 3)] = 2.0;
        rates[(2, 2)] = -2.0;
        rates[(3, 2)] = 2.0;
        rates[(3, 3)] = -2.0;
        let l = crate::generator::validate_generator(rates, states).unwrap();
        assert!(matches!(
            invariant_measure(&l),
            Err(Error::NotUniquelyErgodic { null_dim: 2 })
        ));
    }

    #[test]
    fn invariance_fails_for_a_non_invariant_measure() {
        let l = unit_rate();
        let delta = ProbabilityMeasure::new(l.states().clone(), vec![1.0, 0.0]).unwrap();
        let f = Functional::new(l.states().clone(), vec![1.0, 0.0]).unwrap();
        let report = check_invariance(&l, &delta, &f, &[1.0], 1e-10).unwrap();
        assert!(!report.pass);
        let expected = 0.5 * (1.0 - (-2.0f64).exp());
        assert_abs_diff_eq!(report.max_deviation, expected, epsilon = 1e-12);
    }

    #[test]
    fn invariance_holds_for_the_invariant_measure() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        let mu = invariant_measure(&l).unwrap();
        let f = Functional::new(l.states().clone(), vec![2.0, -1.0]).unwrap();
        let report = check_invariance(&l, &mu, &f, &[0.1, 1.0, 10.0], 1e-10).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn reversibility_detects_cyclic_flow() {
        // Three-state unidirectional cycle: invariant measure is uniform but
        // detailed balance fails.
        let states = StateSpace::indexed(3).unwrap();
        let mut rates = DMatrix::zeros(3, 3);
        for i in 0..3 {
            rates[(i, (i + 1) % 3)] = 1.0;
            rates[(i, i)] = -1.0;
        }
        let l = crate::generator::validate_generator(rates, states).unwrap();
        let mu = invariant_measure(&l).unwrap();
        let report = check_reversibility(&l, &mu, &[0.5], 1e-10).unwrap();
        assert!(!report.pass);
        assert!(report.detailed_balance_deviation > 0.1);
    }

    #[test]
    fn axioms_hold_for_a_reversible_chain() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        let report = check_semigroup_axioms(&l, &[0.1, 0.5, 1.0, 2.0], 1e-9).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn continuity_decay_is_first_order() {
        let l = unit_rate();
        let report = check_semigroup_axioms(&l, &[0.5, 1.0], 1e-9).unwrap();
        // ||P_h f - f|| = (1 - e^{-2h})/2 halves as h halves.
        let decay = &report.continuity_decay;
        let expected = |h: f64| 0.5 * (1.0 - (-2.0 * h).exp());
        for &(h, v) in decay {
            assert_abs_diff_eq!(v, expected(h), epsilon = 1e-10);
        }
        let last = decay[decay.len() - 1];
        let prev = decay[decay.len() - 2];
        assert_abs_diff_eq!(last.1 / prev.1, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn finite_difference_generator_converges_first_order() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        let eval = |h: f64| transition_matrix(&l, h, DEFAULT_EXPM_TOL);
        let err = |h: f64| {
            let approx = generator_from_semigroup(eval, h).unwrap();
            (&approx - l.rates())
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let e2 = err(1e-2);
        let e3 = err(1e-3);
        assert!(err(1e-4) < 1e-3);
        assert_abs_diff_eq!(e2 / e3, 10.0, epsilon = 0.5);
    }
}
