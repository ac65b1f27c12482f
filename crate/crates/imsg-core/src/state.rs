//! State spaces, real-valued functionals on them, and probability measures.
//!
//! All three are immutable value types. Operations that combine two objects
//! require their state spaces to agree exactly (same labels, same order).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for accepting a probability vector as normalized.
pub const MEASURE_SUM_TOL: f64 = 1e-12;

/// Finite ordered collection of distinct state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        let mut seen = std::collections::HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Space with labels `s0, s1, ...` for quick construction.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("s{i}")).collect())
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }
}

fn check_same_space(a: &StateSpace, b: &StateSpace, context: &'static str) -> Result<()> {
    if a != b {
        return Err(Error::StateSpaceMismatch { context });
    }
    Ok(())
}

pub(crate) fn require_same_space(
    a: &StateSpace,
    b: &StateSpace,
    context: &'static str,
) -> Result<()> {
    check_same_space(a, b, context)
}

/// Real-valued function on a state space, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    space: StateSpace,
    values: DVector<f64>,
}

impl Functional {
    pub fn new(space: StateSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::DimensionMismatch {
                context: "functional values",
                expected: space.size(),
                got: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: 0 });
            }
        }
        Ok(Self {
            space,
            values: DVector::from_vec(values),
        })
    }

    pub(crate) fn from_vector(space: StateSpace, values: DVector<f64>) -> Self {
        debug_assert_eq!(space.size(), values.len());
        Self { space, values }
    }

    pub fn constant(space: StateSpace, value: f64) -> Result<Self> {
        let n = space.size();
        Self::new(space, vec![value; n])
    }

    /// Indicator of a single state.
    pub fn indicator(space: StateSpace, index: usize) -> Result<Self> {
        if index >= space.size() {
            return Err(Error::DimensionMismatch {
                context: "indicator index",
                expected: space.size(),
                got: index,
            });
        }
        let mut values = vec![0.0; space.size()];
        values[index] = 1.0;
        Self::new(space, values)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise product, used for carre du champ style expressions.
    pub fn pointwise_mul(&self, other: &Functional) -> Result<Functional> {
        check_same_space(&self.space, &other.space, "pointwise product")?;
        Ok(Functional::from_vector(
            self.space.clone(),
            self.values.component_mul(&other.values),
        ))
    }

    pub fn axpy(&self, alpha: f64, other: &Functional) -> Result<Functional> {
        check_same_space(&self.space, &other.space, "linear combination")?;
        Ok(Functional::from_vector(
            self.space.clone(),
            &self.values + alpha * &other.values,
        ))
    }

    /// L2 norm weighted by a probability measure on the same space.
    pub fn l2_norm(&self, mu: &ProbabilityMeasure) -> Result<f64> {
        check_same_space(&self.space, mu.space(), "weighted L2 norm")?;
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += mu.weight(i) * self.values[i] * self.values[i];
        }
        Ok(acc.max(0.0).sqrt())
    }
}

/// Probability measure on a state space.
///
/// Weights must be nonnegative and sum to one within [`MEASURE_SUM_TOL`];
/// the constructor then renormalizes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMeasure {
    space: StateSpace,
    weights: DVector<f64>,
}

impl ProbabilityMeasure {
    pub fn new(space: StateSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::DimensionMismatch {
                context: "measure weights",
                expected: space.size(),
                got: weights.len(),
            });
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() {
                return Err(Error::InvalidMeasure("non-finite weight".into()));
            }
            if w < 0.0 {
                return Err(Error::InvalidMeasure(format!("negative weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {sum}, deviation exceeds {MEASURE_SUM_TOL}"
            )));
        }
        let mut v = DVector::from_vec(weights);
        v /= sum;
        Ok(Self { space, weights: v })
    }

    /// Normalizes an arbitrary nonnegative weight vector.
    pub fn from_unnormalized(space: StateSpace, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {sum}, cannot normalize"
            )));
        }
        let scaled: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        Self::new(space, scaled)
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.size();
        let w = DVector::from_element(n, 1.0 / n as f64);
        Self { space, weights: w }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    /// Expectation of a functional under this measure.
    pub fn expectation(&self, f: &Functional) -> Result<f64> {
        check_same_space(&self.space, f.space(), "expectation")?;
        Ok(self.weights.dot(f.values()))
    }

    pub fn sup_distance(&self, other: &ProbabilityMeasure) -> Result<f64> {
        check_same_space(&self.space, &other.space, "measure distance")?;
        let mut d: f64 = 0.0;
        for i in 0..self.weights.len() {
            d = d.max((self.weights[i] - other.weights[i]).abs());
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_space_rejects_duplicates_and_empty() {
        assert!(matches!(
            StateSpace::new(vec![]),
            Err(Error::EmptyStateSpace)
        ));
        let dup = StateSpace::new(vec!["a".into(), "a".into()]);
        assert!(matches!(dup, Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn functional_requires_matching_length() {
        let space = StateSpace::indexed(3).unwrap();
        assert!(Functional::new(space, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn measure_rejects_unnormalized_and_negative() {
        let space = StateSpace::indexed(2).unwrap();
        assert!(ProbabilityMeasure::new(space.clone(), vec![0.6, 0.6]).is_err());
        assert!(ProbabilityMeasure::new(space.clone(), vec![1.5, -0.5]).is_err());
        let ok = ProbabilityMeasure::new(space, vec![0.25, 0.75]).unwrap();
        assert_eq!(ok.weight(1), 0.75);
    }

    #[test]
    fn expectation_weights_values() {
        let space = StateSpace::indexed(2).unwrap();
        let mu = ProbabilityMeasure::new(space.clone(), vec![0.75, 0.25]).unwrap();
        let f = Functional::new(space, vec![1.0, 0.0]).unwrap();
        assert_eq!(mu.expectation(&f).unwrap(), 0.75);
    }

    #[test]
    fn point_mass_is_a_valid_measure() {
        let space = StateSpace::indexed(2).unwrap();
        let delta = ProbabilityMeasure::new(space, vec![1.0, 0.0]).unwrap();
        assert_eq!(delta.weight(0), 1.0);
    }
}
