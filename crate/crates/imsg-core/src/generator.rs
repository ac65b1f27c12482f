//! Generator matrices of continuous-time Markov chains.
//!
//! A generator `L` has nonnegative off-diagonal rates and zero row sums, and
//! acts on functionals by `(Lf)(x) = sum_y L(x,y) (f(y) - f(x))`.

use nalgebra::DMatrix;

use crate::state::{require_same_space, Functional, StateSpace};
use crate::{Error, Result};

/// Absolute tolerance on generator row sums and off-diagonal sign checks.
pub const GENERATOR_ENTRY_TOL: f64 = 1e-12;

/// Validated generator matrix over a fixed state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    states: StateSpace,
    rates: DMatrix<f64>,
}

/// Checks shape, off-diagonal signs, and row sums, then repairs rounding-level
/// noise: off-diagonal entries in `(-tol, 0)` are clamped to zero and each
/// diagonal entry is set to minus its row's off-diagonal sum, so row sums hold
/// exactly. Violations beyond `GENERATOR_ENTRY_TOL` are rejected.
pub fn validate_generator(rates: DMatrix<f64>, states: StateSpace) -> Result<GeneratorMatrix> {
    let n = states.size();
    if rates.nrows() != rates.ncols() {
        return Err(Error::NotSquare {
            rows: rates.nrows(),
            cols: rates.ncols(),
        });
    }
    if rates.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "generator size",
            expected: n,
            got: rates.nrows(),
        });
    }
    let mut fixed = rates;
    for i in 0..n {
        let mut row_sum = 0.0;
        let mut row_scale = 1.0f64;
        for j in 0..n {
            let v = fixed[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
            row_sum += v;
            row_scale = row_scale.max(v.abs());
        }
        // Round-off in a prescribed diagonal grows with the rate magnitude,
        // so the conservativity check is relative to the largest entry.
        let row_tol = GENERATOR_ENTRY_TOL * row_scale;
        if row_sum.abs() > row_tol {
            return Err(Error::RowSumViolation {
                row: i,
                sum: row_sum,
                tol: row_tol,
            });
        }
        let off_tol = GENERATOR_ENTRY_TOL * row_scale;
        let mut off_sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let v = fixed[(i, j)];
            if v < -off_tol {
                return Err(Error::NegativeOffDiagonal {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if v < 0.0 {
                fixed[(i, j)] = 0.0;
            }
            off_sum += fixed[(i, j)];
        }
        fixed[(i, i)] = -off_sum;
    }
    Ok(GeneratorMatrix {
        states,
        rates: fixed,
    })
}

impl GeneratorMatrix {
    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn size(&self) -> usize {
        self.states.size()
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    /// Largest exit rate `max_x |L(x,x)|`, the uniformization constant.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.size()).fold(0.0, |m, i| m.max(-self.rates[(i, i)]))
    }

    /// States reachable in one jump from `x`.
    pub fn neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.size())
            .filter(|&y| y != x && self.rates[(x, y)] > 0.0)
            .collect()
    }

    /// Applies the generator to a functional.
    pub fn apply_to(&self, f: &Functional) -> Result<Functional> {
        require_same_space(&self.states, f.space(), "generator application")?;
        Ok(Functional::from_vector(
            self.states.clone(),
            &self.rates * f.values(),
        ))
    }

    /// Convenience constructor for a two-state chain with rates
    /// `alpha: s0 -> s1` and `beta: s1 -> s0`.
    pub fn two_state(alpha: f64, beta: f64) -> Result<GeneratorMatrix> {
        let states = StateSpace::indexed(2)?;
        let rates = DMatrix::from_row_slice(2, 2, &[-alpha, alpha, beta, -beta]);
        validate_generator(rates, states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_a_valid_two_state_generator() {
        let l = GeneratorMatrix::two_state(1.0, 3.0).unwrap();
        assert_eq!(l.rate(0, 1), 1.0);
        assert_eq!(l.rate(0, 0), -1.0);
        assert_eq!(l.max_exit_rate(), 3.0);
    }

    #[test]
    fn zero_matrix_is_a_valid_generator() {
        let states = StateSpace::indexed(2).unwrap();
        let l = validate_generator(DMatrix::zeros(2, 2), states).unwrap();
        assert_eq!(l.max_exit_rate(), 0.0);
    }

    #[test]
    fn rejects_negative_off_diagonal() {
        let states = StateSpace::indexed(2).unwrap();
        let rates = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0]);
        assert!(matches!(
            validate_generator(rates, states),
            Err(Error::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn rejects_row_sum_violation() {
        let states = StateSpace::indexed(2).unwrap();
        let rates = DMatrix::from_row_slice(2, 2, &[-1.0, 1.5, 1.0, -1.0]);
        assert!(matches!(
            validate_generator(rates, states),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
    }

    #[test]
    fn clamps_rounding_noise_and_rebalances_rows() {
        let states = StateSpace::indexed(2).unwrap();
        let eps = 1e-14;
        let rates = DMatrix::from_row_slice(2, 2, &[-1.0 + eps, 1.0, -eps, eps]);
        let l = validate_generator(rates, states).unwrap();
        assert_eq!(l.rate(1, 0), 0.0);
        assert_eq!(l.rate(1, 1), 0.0);
        let row0: f64 = l.rate(0, 0) + l.rate(0, 1);
        assert_eq!(row0, 0.0);
    }

    #[test]
    fn generator_action_uses_rate_differences() {
        let l = GeneratorMatrix::two_state(1.0, 1.0).unwrap();
        let f = Functional::new(l.states().clone(), vec![1.0, 0.0]).unwrap();
        let lf = l.apply_to(&f).unwrap();
        assert_eq!(lf.value(0), -1.0);
        assert_eq!(lf.value(1), 1.0);
    }
}
