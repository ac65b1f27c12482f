//! One-dimensional diffusion generators on a grid.
//!
//! A diffusion `Lf = a(x) f'' + b(x) f'` on an interval becomes a tridiagonal
//! jump generator through the three-point stencil
//!
//! ```text
//! up(i)   = (2 a_i + b_i h-) / (h+ (h+ + h-))
//! down(i) = (2 a_i - b_i h+) / (h- (h+ + h-))
//! ```
//!
//! with `h- = x_i - x_{i-1}` and `h+ = x_{i+1} - x_i`; on a uniform grid this
//! reduces to `a/h^2 ± b/(2h)`. Rates that would come out negative are
//! clipped to zero and reported as cell Peclet violations, which signal that
//! the grid is too coarse for the local drift.
//!
//! Model builders cover the three reference processes used throughout the
//! crate: the mean-reverting Gaussian process (`a = 1`, `b = -x`), its
//! equivalent description through a quadratic potential, the Laguerre process
//! (`a = x`, `b = alpha + 1 - x`), and driftless heat flow.

mod bench;
mod quadrature;

pub use bench::{
    curvature_1d, gradient_identity_check, mehler_vs_discrete, residual_refinement,
    shared_invariant_demo, smooth_test_family, CurvatureScan, GradientIdentityReport,
    MehlerReport, RefinementReport, SharedInvariantReport, TestFamily,
};
pub use quadrature::{gauss_hermite, gaussian_moment, ou_apply_exact};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::generator::{validate_generator, GeneratorMatrix};
use crate::semigroup::invariant_measure;
use crate::state::{ProbabilityMeasure, StateSpace};
use crate::{Error, Result};

/// Smallest admissible number of grid nodes.
pub const MIN_GRID_SIZE: usize = 16;

/// How the finite grid closes off the two ends of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Mirror condition: the boundary node jumps inward at rate `2a/h^2`,
    /// as if the first interior node were reflected across the wall. Drift
    /// does not act at the wall, so no probability leaks.
    Reflecting,
    /// The stencil simply loses its outward leg: the boundary node keeps the
    /// inward rate `a/h^2 + b/(2h)` of the interior stencil.
    Truncated,
}

/// A second-order operator `a(x) f'' + b(x) f'` sampled on a grid.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    grid: Vec<f64>,
    coeff_a: Vec<f64>,
    coeff_b: Vec<f64>,
    boundary: Boundary,
}

impl DiffusionSpec {
    /// Samples the coefficient callables on the grid and validates
    /// ellipticity: `a` must be strictly positive at every node.
    pub fn new(
        grid: Vec<f64>,
        a: impl Fn(f64) -> f64,
        b: impl Fn(f64) -> f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if grid.len() < MIN_GRID_SIZE {
            return Err(Error::InvalidGrid(format!(
                "{} nodes given, at least {MIN_GRID_SIZE} required",
                grid.len()
            )));
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::InvalidGrid(
                    "grid must be finite and strictly increasing".into(),
                ));
            }
        }
        let coeff_a: Vec<f64> = grid.iter().map(|&x| a(x)).collect();
        let coeff_b: Vec<f64> = grid.iter().map(|&x| b(x)).collect();
        for (node, (&x, &v)) in grid.iter().zip(coeff_a.iter()).enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::EllipticityViolation { node, x, value: v });
            }
        }
        if let Some(node) = coeff_b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { row: node, col: 0 });
        }
        Ok(Self {
            grid,
            coeff_a,
            coeff_b,
            boundary,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn coeff_a(&self) -> &[f64] {
        &self.coeff_a
    }

    pub fn coeff_b(&self) -> &[f64] {
        &self.coeff_b
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// True when the diffusion coefficient is identically one on the grid.
    pub fn has_unit_diffusion(&self) -> bool {
        self.coeff_a.iter().all(|&v| (v - 1.0).abs() <= 1e-12)
    }
}

/// Equally spaced nodes covering `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "interval [{lo}, {hi}] is not a valid domain"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidGrid("need at least two nodes".into()));
    }
    let h = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    grid[n - 1] = hi;
    Ok(grid)
}

/// Geometrically spaced nodes from `lo` to `hi`; requires `0 < lo < hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::InvalidGrid(format!(
            "geometric spacing needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidGrid("need at least two nodes".into()));
    }
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut grid: Vec<f64> = (0..n).map(|i| lo * ratio.powi(i as i32)).collect();
    grid[n - 1] = hi;
    Ok(grid)
}

/// Smoothly graded spacing: proportional to `x` below the knee (locally
/// geometric, resolving a degenerate left endpoint) and level above it,
/// with no abrupt spacing jump anywhere. Nodes come from inverting the
/// cumulative integral of the density `sqrt(1/x^2 + 1/knee^2)`.
pub fn graded_grid(lo: f64, knee: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !(knee > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "graded spacing needs 0 < lo < hi and a positive knee, got {lo}, {hi}, {knee}"
        )));
    }
    if n < 8 {
        return Err(Error::InvalidGrid("need at least eight nodes".into()));
    }
    let density = |x: f64| (1.0 / (x * x) + 1.0 / (knee * knee)).sqrt();
    let cells = 20_000usize;
    let log_span = (hi / lo).ln();
    let mesh: Vec<f64> = (0..=cells)
        .map(|k| lo * (log_span * k as f64 / cells as f64).exp())
        .collect();
    let mut cumulative = vec![0.0f64; cells + 1];
    for k in 1..=cells {
        let step = mesh[k] - mesh[k - 1];
        cumulative[k] =
            cumulative[k - 1] + 0.5 * (density(mesh[k - 1]) + density(mesh[k])) * step;
    }
    let total = cumulative[cells];
    let mut grid = Vec::with_capacity(n);
    let mut idx = 0usize;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while idx + 1 < cells && cumulative[idx + 1] < target {
            idx += 1;
        }
        let span = cumulative[idx + 1] - cumulative[idx];
        let frac = if span > 0.0 {
            (target - cumulative[idx]) / span
        } else {
            0.0
        };
        grid.push(mesh[idx] + frac * (mesh[idx + 1] - mesh[idx]));
    }
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// A node where the drift overwhelms the diffusion at the local grid scale,
/// so an off-diagonal rate had to be clipped or came close to it.
#[derive(Debug, Clone, Serialize)]
pub struct PecletWarning {
    pub node: usize,
    pub x: f64,
    pub peclet: f64,
}

/// A discretized diffusion: generator, its invariant measure, and any cell
/// Peclet warnings collected while assembling the rates.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub generator: GeneratorMatrix,
    pub measure: ProbabilityMeasure,
    pub warnings: Vec<PecletWarning>,
}

/// Assembles the tridiagonal generator for `spec` and computes its invariant
/// measure.
pub fn discretize(spec: &DiffusionSpec) -> Result<DiscreteModel> {
    let n = spec.size();
    let grid = spec.grid();
    let a = spec.coeff_a();
    let b = spec.coeff_b();
    let mut warnings = Vec::new();
    let clip = |rate: f64, node: usize, peclet: f64, warnings: &mut Vec<PecletWarning>| {
        if peclet >= 1.0 || rate < 0.0 {
            warnings.push(PecletWarning {
                node,
                x: grid[node],
                peclet,
            });
        }
        rate.max(0.0)
    };
    let mut rates = DMatrix::zeros(n, n);
    for i in 1..n - 1 {
        let hm = grid[i] - grid[i - 1];
        let hp = grid[i + 1] - grid[i];
        let peclet = b[i].abs() * hm.max(hp) / (2.0 * a[i]);
        let up = clip(
            (2.0 * a[i] + b[i] * hm) / (hp * (hp + hm)),
            i,
            peclet,
            &mut warnings,
        );
        let down = clip(
            (2.0 * a[i] - b[i] * hp) / (hm * (hp + hm)),
            i,
            peclet,
            &mut warnings,
        );
        rates[(i, i + 1)] = up;
        rates[(i, i - 1)] = down;
        rates[(i, i)] = -(up + down);
    }
    let hp = grid[1] - grid[0];
    let hm = grid[n - 1] - grid[n - 2];
    let (first_up, last_down) = match spec.boundary() {
        Boundary::Reflecting => (2.0 * a[0] / (hp * hp), 2.0 * a[n - 1] / (hm * hm)),
        Boundary::Truncated => (
            a[0] / (hp * hp) + b[0] / (2.0 * hp),
            a[n - 1] / (hm * hm) - b[n - 1] / (2.0 * hm),
        ),
    };
    let first_up = clip(
        first_up,
        0,
        b[0].abs() * hp / (2.0 * a[0]),
        &mut warnings,
    );
    let last_down = clip(
        last_down,
        n - 1,
        b[n - 1].abs() * hm / (2.0 * a[n - 1]),
        &mut warnings,
    );
    rates[(0, 1)] = first_up;
    rates[(0, 0)] = -first_up;
    rates[(n - 1, n - 2)] = last_down;
    rates[(n - 1, n - 1)] = -last_down;

    let states = StateSpace::new(grid.iter().map(|x| format!("x={x:.6}")).collect())?;
    let generator = validate_generator(rates, states)?;
    let measure = invariant_measure(&generator)?;
    Ok(DiscreteModel {
        generator,
        measure,
        warnings,
    })
}

/// Mean-reverting Gaussian model: `a = 1`, `b = -x` on `[-6, 6]`.
pub fn ou_spec(n: usize) -> Result<DiffusionSpec> {
    DiffusionSpec::new(
        uniform_grid(-6.0, 6.0, n)?,
        |_| 1.0,
        |x| -x,
        Boundary::Reflecting,
    )
}

/// The same model derived from the potential `V(x) = x^2 / 2`: unit
/// diffusion with drift `-V'`. Kept as a separate route so the two
/// constructions can be compared entrywise.
pub fn quadratic_potential_spec(n: usize) -> Result<DiffusionSpec> {
    let potential_slope = |x: f64| x;
    DiffusionSpec::new(
        uniform_grid(-6.0, 6.0, n)?,
        |_| 1.0,
        move |x| -potential_slope(x),
        Boundary::Reflecting,
    )
}

/// Driftless heat flow on `[-6, 6]`.
pub fn heat_spec(n: usize, boundary: Boundary) -> Result<DiffusionSpec> {
    DiffusionSpec::new(uniform_grid(-6.0, 6.0, n)?, |_| 1.0, |_| 0.0, boundary)
}

/// Laguerre model: `a = x`, `b = alpha + 1 - x` on `[0.01, 80]` with
/// grading that is geometric near the degenerate endpoint.
pub fn laguerre_spec(alpha: f64, n: usize) -> Result<DiffusionSpec> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::OutOfDomain {
            context: "Laguerre parameter must exceed -1",
            value: alpha,
        });
    }
    DiffusionSpec::new(
        graded_grid(0.01, 7.0, 80.0, n)?,
        |x| x,
        move |x| alpha + 1.0 - x,
        Boundary::Reflecting,
    )
}
