//! Gaussian quadrature and the closed-form mean-reverting kernel.
//!
//! Nodes and weights come from the eigendecomposition of the Jacobi matrix
//! of the orthogonal-polynomial recurrence (Golub-Welsch): for polynomials
//! orthogonal under the standard normal weight the matrix is tridiagonal
//! with zero diagonal and off-diagonal entries `sqrt(k)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Nodes and weights integrating exactly against the standard normal
/// distribution up to polynomial degree `2 * order - 1`. Weights sum to one;
/// nodes are returned in increasing order.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 1 {
        return Err(Error::OutOfDomain {
            context: "quadrature order must be at least 1",
            value: order as f64,
        });
    }
    if order == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    let mut jacobi = DMatrix::zeros(order, order);
    for k in 1..order {
        let beta = (k as f64).sqrt();
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|j| {
            let first = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes = pairs.iter().map(|p| p.0).collect();
    let weights = pairs.iter().map(|p| p.1 / total).collect();
    Ok((nodes, weights))
}

/// `E[Z^m]` for a standard normal variable: zero for odd `m`, the double
/// factorial `(m - 1)!!` for even `m`.
pub fn gaussian_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut k = m as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Closed-form action of the mean-reverting semigroup:
/// `P_t f(x) = E[ f(e^{-t} x + sqrt(1 - e^{-2t}) Z) ]` with `Z` standard
/// normal, evaluated by quadrature of the given order.
pub fn ou_apply_exact(f: impl Fn(f64) -> f64, t: f64, x: f64, order: usize) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfDomain {
            context: "time must be finite and nonnegative",
            value: t,
        });
    }
    let decay = (-t).exp();
    let spread = (1.0 - decay * decay).max(0.0).sqrt();
    if spread == 0.0 {
        return Ok(f(x));
    }
    let (nodes, weights) = gauss_hermite(order)?;
    let mut acc = 0.0;
    for (z, w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(decay * x + spread * z);
    }
    Ok(acc)
}
