//! Spectral machinery for reversible chains.
//!
//! A generator reversible with respect to `mu` becomes symmetric under the
//! similarity `S = D L D^{-1}` with `D = diag(sqrt(mu))`. The spectral gap
//! and the eigendecomposition route to `exp(tL)` both go through `S`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::generator::GeneratorMatrix;
use crate::state::{require_same_space, ProbabilityMeasure};
use crate::{Error, Result};

/// Largest admissible asymmetry of the conjugated generator.
pub const SYMMETRIZATION_TOL: f64 = 1e-10;

/// Conjugates `L` by `diag(sqrt(mu))` and verifies the result is symmetric.
///
/// Requires `mu` to have full support; a reversible irreducible chain always
/// does.
pub fn symmetrized(l: &GeneratorMatrix, mu: &ProbabilityMeasure) -> Result<DMatrix<f64>> {
    require_same_space(l.states(), mu.space(), "symmetrization")?;
    let n = l.size();
    for i in 0..n {
        if mu.weight(i) <= 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "state {i} carries zero mass; symmetrization needs full support"
            )));
        }
    }
    let d: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| mu.weight(i).sqrt()));
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = d[i] * l.rate(i, j) / d[j];
        }
    }
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            residual = residual.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if residual > SYMMETRIZATION_TOL {
        return Err(Error::NotReversible {
            residual,
            tol: SYMMETRIZATION_TOL,
        });
    }
    // Fold the remaining rounding noise away so downstream eigensolves see an
    // exactly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(s)
}

/// Smallest nonzero eigenvalue of `-L` for a reversible chain.
///
/// The spectrum of `-S` is sorted ascending; the leading eigenvalue is the
/// structural zero, and the gap is the next one. A disconnected chain has a
/// repeated zero eigenvalue, so the reported gap vanishes rather than
/// erroring. A single-state chain reports zero.
pub fn spectral_gap(l: &GeneratorMatrix, mu: &ProbabilityMeasure) -> Result<f64> {
    if l.size() == 1 {
        return Ok(0.0);
    }
    let s = symmetrized(l, mu)?;
    let eigen = SymmetricEigen::new(-s);
    let mut values: Vec<f64> = eigen.eigenvalues.iter().cloned().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(values[1].max(0.0))
}

/// Evaluates `exp(tL)` through the eigendecomposition of the symmetrized
/// generator. Independent of the uniformization route and used to
/// cross-check it on reversible chains.
pub fn expm_reversible(
    l: &GeneratorMatrix,
    mu: &ProbabilityMeasure,
    t: f64,
) -> Result<DMatrix<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::OutOfDomain {
            context: "transition time must be finite and nonnegative",
            value: t,
        });
    }
    let n = l.size();
    let s = symmetrized(l, mu)?;
    let eigen = SymmetricEigen::new(s);
    let mut core = DMatrix::zeros(n, n);
    for k in 0..n {
        core[(k, k)] = (t * eigen.eigenvalues[k]).exp();
    }
    let exp_s = &eigen.eigenvectors * core * eigen.eigenvectors.transpose();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let di = mu.weight(i).sqrt();
        for j in 0..n {
            out[(i, j)] = exp_s[(i, j)] * mu.weight(j).sqrt() / di;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{invariant_measure, transition_matrix, DEFAULT_EXPM_TOL};
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_state_gap_is_sum_of_rates() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        let mu = invariant_measure(&l).unwrap();
        assert_abs_diff_eq!(spectral_gap(&l, &mu).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cyclic_chain_is_rejected_as_not_reversible() {
        let states = crate::state::StateSpace::indexed(3).unwrap();
        let mut rates = DMatrix::zeros(3, 3);
        for i in 0..3 {
            rates[(i, (i + 1) % 3)] = 1.0;
            rates[(i, i)] = -1.0;
        }
        let l = crate::generator::validate_generator(rates, states).unwrap();
        let mu = invariant_measure(&l).unwrap();
        assert!(matches!(
            spectral_gap(&l, &mu),
            Err(Error::NotReversible { .. })
        ));
    }

    #[test]
    fn disconnected_chain_reports_vanishing_gap() {
        let states = crate::state::StateSpace::indexed(4).unwrap();
        let mut rates = DMatrix::zeros(4, 4);
        for (a, b) in [(0usize, 1usize), (2, 3)] {
            rates[(a, b)] = 1.0;
            rates[(a, a)] = -1.0;
            rates[(b, a)] = 1.0;
            rates[(b, b)] = -1.0;
        }
        let l = crate::generator::validate_generator(rates, states).unwrap();
        let mu = ProbabilityMeasure::uniform(l.states().clone());
        assert_abs_diff_eq!(spectral_gap(&l, &mu).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_exponential_matches_uniformization() {
        let l = GeneratorMatrix::two_state(0.7, 2.1).unwrap();
        let mu = invariant_measure(&l).unwrap();
        for &t in &[0.1, 1.0, 5.0] {
            let a = transition_matrix(&l, t, DEFAULT_EXPM_TOL).unwrap();
            let b = expm_reversible(&l, &mu, t).unwrap();
            let diff = (a.probs() - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(diff < 1e-11, "t = {t}: diff = {diff:.3e}");
        }
    }
}
