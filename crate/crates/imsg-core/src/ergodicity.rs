//! Numerical verification of the inequality chain that drives convergence to
//! equilibrium: gradient bounds, local and global variance bounds, ergodic
//! limits with rate extraction, and the two-sided envelope that pins every
//! member's limit of an ordered collection between the extremes' means.
//!
//! Each check evaluates both sides of its inequality on explicit grids and
//! reports the worst margin together with the witness where it occurs, so a
//! failure names the exact time and state that broke it.

use serde::Serialize;

use crate::gamma::{dirichlet_form, gamma};
use crate::generator::GeneratorMatrix;
use crate::poset::{order_report, ImpreciseFamily};
use crate::semigroup::{apply, invariant_measure, transition_matrix};
use crate::spectral::{spectral_gap, symmetrized};
use crate::state::{require_same_space, Functional, ProbabilityMeasure};
use crate::{Error, Result};

/// Accuracy requested from every transition matrix evaluated here.
const EXPM_TOL: f64 = 1e-13;
/// Number of times on the convergence grid.
const CONVERGENCE_GRID_SIZE: usize = 64;
/// First time on the convergence grid.
const CONVERGENCE_GRID_START: f64 = 1e-2;
/// Deviation window (relative to the initial deviation) used for the decay
/// rate fit: deep enough that slower secondary modes have died away, high
/// enough to stay clear of the transition matrices' truncation floor.
const FIT_WINDOW_LOW: f64 = 1e-11;
const FIT_WINDOW_HIGH: f64 = 1e-7;
/// Two invariant measures within this sup distance count as identical for
/// the degenerate-envelope check.
const DEGENERATE_MEASURE_TOL: f64 = 1e-12;

/// Variance of `f` under `mu`.
pub fn variance(f: &Functional, mu: &ProbabilityMeasure) -> Result<f64> {
    let mean = mu.expectation(f)?;
    let second = mu.expectation(&f.pointwise_mul(f)?)?;
    Ok((second - mean * mean).max(0.0))
}

/// Dirichlet energy of `f`: the measure-weighted carre du champ, verified
/// internally against the generator route.
pub fn dirichlet_energy(
    l: &GeneratorMatrix,
    mu: &ProbabilityMeasure,
    f: &Functional,
) -> Result<f64> {
    dirichlet_form(l, mu, f, f)
}

/// Outcome of a pointwise inequality checked over a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    /// Times at which both sides were evaluated.
    pub times: Vec<f64>,
    /// `(t, worst lhs - rhs at t)` per grid time.
    pub worst_by_time: Vec<(f64, f64)>,
    /// Largest `lhs - rhs` across all times and states.
    pub worst_violation: f64,
    /// Time and state attaining the worst margin.
    pub witness_time: f64,
    pub witness_state: usize,
    /// Both sides at the witness.
    pub witness_lhs: f64,
    pub witness_rhs: f64,
    /// Whether the inequality held within tolerance everywhere.
    pub pass: bool,
}

fn pointwise_inequality<F>(
    l: &GeneratorMatrix,
    t_grid: &[f64],
    tol: f64,
    mut sides: F,
) -> Result<InequalityReport>
where
    F: FnMut(f64) -> Result<(Functional, Functional)>,
{
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    for &t in t_grid {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::OutOfDomain {
                context: "inequality time",
                value: t,
            });
        }
    }
    let n = l.size();
    let mut worst_by_time = Vec::with_capacity(t_grid.len());
    let mut worst = f64::NEG_INFINITY;
    let mut witness = (t_grid[0], 0usize, 0.0f64, 0.0f64);
    for &t in t_grid {
        let (lhs, rhs) = sides(t)?;
        let mut worst_here = f64::NEG_INFINITY;
        for x in 0..n {
            let margin = lhs.value(x) - rhs.value(x);
            worst_here = worst_here.max(margin);
            if margin > worst {
                worst = margin;
                witness = (t, x, lhs.value(x), rhs.value(x));
            }
        }
        worst_by_time.push((t, worst_here));
    }
    Ok(InequalityReport {
        times: t_grid.to_vec(),
        worst_by_time,
        worst_violation: worst,
        witness_time: witness.0,
        witness_state: witness.1,
        witness_lhs: witness.2,
        witness_rhs: witness.3,
        pass: worst <= tol,
    })
}

/// Checks the gradient-commutation bound
/// `Gamma(P_t f) <= exp(-2 rho t) P_t Gamma(f)` at every grid time and state.
pub fn check_gradient_bound(
    l: &GeneratorMatrix,
    f: &Functional,
    rho: f64,
    t_grid: &[f64],
    tol: f64,
) -> Result<InequalityReport> {
    require_same_space(l.states(), f.space(), "gradient bound")?;
    let gamma_f = gamma(l, f, f)?;
    pointwise_inequality(l, t_grid, tol, |t| {
        let p = transition_matrix(l, t, EXPM_TOL)?;
        let ptf = apply(&p, f)?;
        let lhs = gamma(l, &ptf, &ptf)?;
        let decayed = apply(&p, &gamma_f)?;
        let scale = (-2.0 * rho * t).exp();
        let rhs_values: Vec<f64> = (0..l.size()).map(|x| scale * decayed.value(x)).collect();
        let rhs = Functional::new(l.states().clone(), rhs_values)?;
        Ok((lhs, rhs))
    })
}

/// Integrated decay coefficient `(1 - exp(-2 rho t)) / rho`, with the
/// diffusive limit `2t` at vanishing curvature.
fn integrated_decay(rho: f64, t: f64) -> f64 {
    if rho == 0.0 {
        2.0 * t
    } else {
        -(-2.0 * rho * t).exp_m1() / rho
    }
}

/// Checks the local variance bound
/// `P_t(f^2) - (P_t f)^2 <= ((1 - exp(-2 rho t)) / rho) P_t Gamma(f)`
/// at every grid time and state.
pub fn check_local_poincare(
    l: &GeneratorMatrix,
    f: &Functional,
    rho: f64,
    t_grid: &[f64],
    tol: f64,
) -> Result<InequalityReport> {
    require_same_space(l.states(), f.space(), "local variance bound")?;
    let gamma_f = gamma(l, f, f)?;
    let f_sq = f.pointwise_mul(f)?;
    pointwise_inequality(l, t_grid, tol, |t| {
        let p = transition_matrix(l, t, EXPM_TOL)?;
        let ptf = apply(&p, f)?;
        let pt_fsq = apply(&p, &f_sq)?;
        let pt_gamma = apply(&p, &gamma_f)?;
        let coeff = integrated_decay(rho, t);
        let n = l.size();
        let lhs_values: Vec<f64> = (0..n)
            .map(|x| pt_fsq.value(x) - ptf.value(x) * ptf.value(x))
            .collect();
        let rhs_values: Vec<f64> = (0..n).map(|x| coeff * pt_gamma.value(x)).collect();
        Ok((
            Functional::new(l.states().clone(), lhs_values)?,
            Functional::new(l.states().clone(), rhs_values)?,
        ))
    })
}

/// Outcome of the global variance bound.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub variance: f64,
    pub energy: f64,
    pub rho: f64,
    /// `energy / rho`.
    pub bound: f64,
    /// `bound - variance`; negative means the bound failed.
    pub slack: f64,
    pub pass: bool,
}

/// Checks the global variance bound `Var(f) <= energy(f) / rho` under the
/// invariant measure.
pub fn check_poincare(
    l: &GeneratorMatrix,
    f: &Functional,
    rho: f64,
    tol: f64,
) -> Result<PoincareReport> {
    require_same_space(l.states(), f.space(), "variance bound")?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::OutOfDomain {
            context: "curvature constant for the variance bound",
            value: rho,
        });
    }
    let mu = invariant_measure(l)?;
    let var = variance(f, &mu)?;
    let energy = dirichlet_energy(l, &mu, f)?;
    let bound = energy / rho;
    let slack = bound - var;
    Ok(PoincareReport {
        variance: var,
        energy,
        rho,
        bound,
        slack,
        pass: slack >= -tol,
    })
}

/// Convergence of `P_t f` to its ergodic limit.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// The limit value, the invariant-measure mean of `f`.
    pub limit: f64,
    /// Sup deviation from the limit at the final time.
    pub final_error: f64,
    /// Last time evaluated.
    pub t_max: f64,
    /// `(t, sup deviation)` along the grid.
    pub decay: Vec<(f64, f64)>,
    /// Exponential rate fitted on the clean stretch of the decay, if one
    /// was identifiable.
    pub fitted_rate: Option<f64>,
    /// Spectral gap, when the chain is reversible.
    pub spectral_gap: Option<f64>,
    /// Relative disagreement between the fitted rate and the gap.
    pub rate_agreement: Option<f64>,
}

/// Least-squares slope of `ln d` against `t` over the window where the decay
/// is a clean single exponential.
fn fit_decay_rate(decay: &[(f64, f64)], initial_deviation: f64) -> Option<f64> {
    if initial_deviation <= 0.0 {
        return None;
    }
    let mut high = FIT_WINDOW_HIGH;
    // Widen the window if the grid is too sparse inside it.
    while high <= 1e-4 {
        let pts: Vec<(f64, f64)> = decay
            .iter()
            .filter(|&&(_, d)| {
                d >= FIT_WINDOW_LOW * initial_deviation && d <= high * initial_deviation
            })
            .map(|&(t, d)| (t, d.ln()))
            .collect();
        if pts.len() >= 3 {
            let n = pts.len() as f64;
            let st: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let stt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sty: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let denom = n * stt - st * st;
            if denom <= 0.0 {
                return None;
            }
            let slope = (n * sty - st * sy) / denom;
            return Some((-slope).max(0.0));
        }
        high *= 100.0;
    }
    None
}

/// Evolves `f` to its ergodic limit, verifying the deviation plateaus below
/// `tol` and extracting the exponential decay rate.
///
/// A chain without a unique invariant measure cannot settle on a single
/// constant; that surfaces as a convergence failure whose reported error is
/// the spread of `P_t f` at the final time.
pub fn check_ergodic_limit(
    l: &GeneratorMatrix,
    f: &Functional,
    tol: f64,
) -> Result<ConvergenceReport> {
    require_same_space(l.states(), f.space(), "ergodic limit")?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::OutOfDomain {
            context: "convergence tolerance",
            value: tol,
        });
    }
    let mu = match invariant_measure(l) {
        Ok(mu) => mu,
        Err(Error::NotUniquelyErgodic { .. }) => {
            let t_max = 50.0;
            let p = transition_matrix(l, t_max, EXPM_TOL)?;
            let ptf = apply(&p, f)?;
            let spread = (0..l.size())
                .map(|x| ptf.value(x))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            return Err(Error::NoConvergence {
                final_error: spread.1 - spread.0,
                t_max,
                tol,
            });
        }
        Err(other) => return Err(other),
    };
    let limit = mu.expectation(f)?;
    let gap = symmetrized(l, &mu)
        .ok()
        .map(|_| spectral_gap(l, &mu))
        .transpose()?;

    let t_max = match gap {
        Some(g) if g > 1e-12 => (50.0 / g).max(50.0),
        _ => 50.0,
    };
    let ratio = t_max / CONVERGENCE_GRID_START;
    let times: Vec<f64> = (0..CONVERGENCE_GRID_SIZE)
        .map(|k| {
            CONVERGENCE_GRID_START * ratio.powf(k as f64 / (CONVERGENCE_GRID_SIZE - 1) as f64)
        })
        .collect();

    let mut decay = Vec::with_capacity(times.len());
    for &t in &times {
        let p = transition_matrix(l, t, EXPM_TOL)?;
        let ptf = apply(&p, f)?;
        let dev = (0..l.size())
            .map(|x| (ptf.value(x) - limit).abs())
            .fold(0.0, f64::max);
        decay.push((t, dev));
    }
    let final_error = decay.last().expect("nonempty grid").1;

    // The tail must have settled, not merely dipped: the last few times all
    // sit below tolerance.
    let tail_settled = decay.iter().rev().take(3).all(|&(_, d)| d <= tol);
    if !tail_settled {
        return Err(Error::NoConvergence {
            final_error,
            t_max,
            tol,
        });
    }

    let initial_deviation = (0..l.size())
        .map(|x| (f.value(x) - limit).abs())
        .fold(0.0, f64::max);
    let fitted_rate = fit_decay_rate(&decay, initial_deviation);
    let rate_agreement = match (fitted_rate, gap) {
        (Some(rate), Some(g)) if g > 1e-9 => Some((rate - g).abs() / g),
        _ => None,
    };

    Ok(ConvergenceReport {
        limit,
        final_error,
        t_max,
        decay,
        fitted_rate,
        spectral_gap: gap,
        rate_agreement,
    })
}

/// Two-sided envelope on the ergodic limits of an ordered collection.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub names: Vec<String>,
    /// Invariant mean of the least member.
    pub lower_bound: f64,
    /// Invariant mean of the greatest member.
    pub upper_bound: f64,
    /// Each member's ergodic limit, in family order.
    pub limits: Vec<f64>,
    /// All limits landed inside the envelope.
    pub within_bounds: bool,
    /// When the extreme measures coincide: whether all limits collapsed to
    /// one value, as they then must.
    pub degenerate_equal: Option<bool>,
    /// The extremes' action curves bracket every member's curve pointwise
    /// across the comparison grid.
    pub envelope_monotone: bool,
    pub pass: bool,
}

/// Verifies that every member's ergodic limit lies between the invariant
/// means of the least and greatest members, and that the extremes' action
/// curves bracket the whole collection pointwise.
pub fn check_sandwich(family: &ImpreciseFamily, tol: f64) -> Result<SandwichReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::OutOfDomain {
            context: "envelope tolerance",
            value: tol,
        });
    }
    let report = order_report(family)?;
    let least = report.least.ok_or(Error::MissingExtremes("least"))?;
    let greatest = report.greatest.ok_or(Error::MissingExtremes("greatest"))?;
    let mu_lower = family.member(least)?.invariant();
    let mu_upper = family.member(greatest)?.invariant();
    let lower_bound = mu_lower.expectation(family.payoff())?;
    let upper_bound = mu_upper.expectation(family.payoff())?;

    let mut limits = Vec::with_capacity(family.len());
    for member in family.members() {
        let conv = check_ergodic_limit(member.generator(), family.payoff(), tol)?;
        limits.push(conv.limit);
    }
    let within_bounds = limits
        .iter()
        .all(|&v| v >= lower_bound - tol && v <= upper_bound + tol);

    let degenerate_equal = if mu_lower.sup_distance(mu_upper)? <= DEGENERATE_MEASURE_TOL {
        let first = limits[0];
        Some(limits.iter().all(|&v| (v - first).abs() <= tol))
    } else {
        None
    };

    // The extremes must bracket every member's whole action curve, not just
    // the limits.
    let eps = family.eps_order();
    let mut envelope_monotone = true;
    'outer: for &t in family.time_grid() {
        let low = family.action_at(least, t)?;
        let high = family.action_at(greatest, t)?;
        for m in 0..family.len() {
            let mid = family.action_at(m, t)?;
            for x in 0..mid.len() {
                if mid.value(x) < low.value(x) - eps || mid.value(x) > high.value(x) + eps {
                    envelope_monotone = false;
                    break 'outer;
                }
            }
        }
    }

    let pass = within_bounds && envelope_monotone && degenerate_equal.unwrap_or(true);
    Ok(SandwichReport {
        names: report.names,
        lower_bound,
        upper_bound,
        limits,
        within_bounds,
        degenerate_equal,
        envelope_monotone,
        pass,
    })
}
