//! Benchmarks tying discretized diffusions back to their analytic facts:
//! curvature scans over smooth test families, second-order convergence of
//! the carre-du-champ identities, quadrature-vs-matrix cross-validation of
//! the mean-reverting kernel, and the two-route construction of the shared
//! Gaussian invariant measure.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::diffusion::{
    discretize, heat_spec, ou_apply_exact, ou_spec, quadratic_potential_spec, Boundary,
    DiffusionSpec,
};
use crate::gamma::{diffusion_property_residual, gamma, gamma2};
use crate::semigroup::{apply, transition_matrix};
use crate::state::Functional;
use crate::{Error, Result};

/// Smooth functions sampled on a spec's grid, with names for reporting.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub members: Vec<(String, Vec<f64>)>,
}

/// Probabilists' Hermite polynomial of the given degree.
fn hermite(degree: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if degree == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..degree {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite polynomials of degree 0 through 6 under a smooth plateau cutoff,
/// plus seeded Gaussian bumps. The cutoff is flat on the middle half of the
/// domain and decays to near zero at the ends, so polynomial growth never
/// couples to the boundary stencils.
pub fn smooth_test_family(spec: &DiffusionSpec, seed: u64, bumps: usize) -> TestFamily {
    let grid = spec.grid();
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    let mid = 0.5 * (lo + hi);
    let width = 0.45 * (hi - lo);
    let cutoff = |x: f64| {
        let u = (x - mid) / width;
        (-u.powi(16)).exp()
    };
    let mut members = Vec::new();
    for degree in 0..=6 {
        let values: Vec<f64> = grid.iter().map(|&x| hermite(degree, x) * cutoff(x)).collect();
        members.push((format!("hermite_{degree}"), values));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let span = hi - lo;
    for k in 0..bumps {
        let center = rng.random_range(lo + 0.2 * span..hi - 0.2 * span);
        let bump_width = rng.random_range(0.08 * span..0.2 * span);
        let amplitude = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let u = (x - center) / bump_width;
                amplitude * (-u * u).exp()
            })
            .collect();
        members.push((format!("bump_{k:02}"), values));
    }
    TestFamily { members }
}

/// Result of scanning `Gamma_2 / Gamma` over a test family on the grid
/// interior.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureScan {
    pub rho_estimate: f64,
    pub argmin_function: String,
    pub argmin_node: usize,
    pub argmin_x: f64,
    /// `inf_x(-b'(x))` by central differences when the diffusion
    /// coefficient is identically one; absent otherwise.
    pub analytic_rho: Option<f64>,
    pub nodes_counted: usize,
}

impl CurvatureScan {
    /// Whether the scan agrees with the analytic constant, when one exists.
    pub fn agrees_with_analytic(&self, tol: f64) -> bool {
        match self.analytic_rho {
            Some(reference) => (self.rho_estimate - reference).abs() <= tol,
            None => true,
        }
    }
}

/// Estimates the largest `rho` with `Gamma_2(f) >= rho Gamma(f)` over the
/// family, skipping `margin` nodes at each end of the grid and nodes where
/// `Gamma(f)` is negligible.
pub fn curvature_1d(
    spec: &DiffusionSpec,
    family: &TestFamily,
    margin: usize,
) -> Result<CurvatureScan> {
    let model = discretize(spec)?;
    let l = &model.generator;
    let n = l.size();
    if n <= 2 * margin + 1 {
        return Err(Error::InvalidGrid(format!(
            "margin {margin} leaves no interior on {n} nodes"
        )));
    }
    let mut best: Option<(f64, String, usize)> = None;
    let mut nodes_counted = 0usize;
    for (name, values) in &family.members {
        let f = Functional::new(l.states().clone(), values.clone())?;
        let g1 = gamma(l, &f, &f)?;
        let g2 = gamma2(l, &f, &f)?;
        let g_max = g1.values().iter().cloned().fold(0.0f64, f64::max);
        if g_max <= 0.0 {
            continue;
        }
        let floor = 1e-8 * g_max;
        for x in margin..n - margin {
            let gv = g1.value(x);
            if gv <= floor {
                continue;
            }
            nodes_counted += 1;
            let ratio = g2.value(x) / gv;
            if best.as_ref().map_or(true, |(r, _, _)| ratio < *r) {
                best = Some((ratio, name.clone(), x));
            }
        }
    }
    let (rho_estimate, argmin_function, argmin_node) = best.ok_or(Error::EmptyFamily)?;
    let analytic_rho = if spec.has_unit_diffusion() {
        let grid = spec.grid();
        let b = spec.coeff_b();
        let mut worst = f64::INFINITY;
        for i in 1..n - 1 {
            let slope = (b[i + 1] - b[i - 1]) / (grid[i + 1] - grid[i - 1]);
            worst = worst.min(-slope);
        }
        Some(worst)
    } else {
        None
    };
    Ok(CurvatureScan {
        rho_estimate,
        argmin_function,
        argmin_node,
        argmin_x: spec.grid()[argmin_node],
        analytic_rho,
        nodes_counted,
    })
}

/// Sup-norm deviations of `Gamma(f)` from `(f')^2` and of `Gamma_2(f)` from
/// `(f'')^2` for a driftless unit-diffusion spec, over nodes inside the
/// given physical window.
fn identity_errors(
    spec: &DiffusionSpec,
    f: &dyn Fn(f64) -> f64,
    fd1: &dyn Fn(f64) -> f64,
    fd2: &dyn Fn(f64) -> f64,
    window: (f64, f64),
) -> Result<(f64, f64)> {
    let model = discretize(spec)?;
    let l = &model.generator;
    let grid = spec.grid();
    let sampled = Functional::new(l.states().clone(), grid.iter().map(|&x| f(x)).collect())?;
    let g1 = gamma(l, &sampled, &sampled)?;
    let g2 = gamma2(l, &sampled, &sampled)?;
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for (i, &x) in grid.iter().enumerate() {
        if x < window.0 || x > window.1 {
            continue;
        }
        let d1 = fd1(x);
        let d2 = fd2(x);
        e1 = e1.max((g1.value(i) - d1 * d1).abs());
        e2 = e2.max((g2.value(i) - d2 * d2).abs());
    }
    Ok((e1, e2))
}

/// Grid-refinement study of the first- and second-order gradient
/// identities for driftless unit diffusion.
#[derive(Debug, Clone, Serialize)]
pub struct GradientIdentityReport {
    pub coarse_nodes: usize,
    pub fine_nodes: usize,
    pub gamma_error_coarse: f64,
    pub gamma_error_fine: f64,
    pub gamma_ratio: f64,
    pub gamma2_error_coarse: f64,
    pub gamma2_error_fine: f64,
    pub gamma2_ratio: f64,
    pub pass: bool,
}

/// Compares `Gamma` and `Gamma_2` of the discretized driftless generator
/// against the squared derivatives of `f`, at `n` nodes and at the doubled
/// resolution `2n - 1`; passes when both errors shrink by a factor in
/// `[3.5, 4.5]`.
pub fn gradient_identity_check(
    n: usize,
    f: impl Fn(f64) -> f64,
    fd1: impl Fn(f64) -> f64,
    fd2: impl Fn(f64) -> f64,
) -> Result<GradientIdentityReport> {
    let coarse = heat_spec(n, Boundary::Reflecting)?;
    let fine = heat_spec(2 * n - 1, Boundary::Reflecting)?;
    let grid = coarse.grid();
    let h = grid[1] - grid[0];
    let window = (grid[0] + 4.0 * h, grid[n - 1] - 4.0 * h);
    let (e1c, e2c) = identity_errors(&coarse, &f, &fd1, &fd2, window)?;
    let (e1f, e2f) = identity_errors(&fine, &f, &fd1, &fd2, window)?;
    if e1f <= 0.0 || e2f <= 0.0 {
        return Err(Error::Numerical(
            "refinement study needs nonzero discretization error".into(),
        ));
    }
    let gamma_ratio = e1c / e1f;
    let gamma2_ratio = e2c / e2f;
    let in_band = |r: f64| (3.5..=4.5).contains(&r);
    Ok(GradientIdentityReport {
        coarse_nodes: n,
        fine_nodes: 2 * n - 1,
        gamma_error_coarse: e1c,
        gamma_error_fine: e1f,
        gamma_ratio,
        gamma2_error_coarse: e2c,
        gamma2_error_fine: e2f,
        gamma2_ratio,
        pass: in_band(gamma_ratio) && in_band(gamma2_ratio),
    })
}

/// Quadrature route versus matrix-exponential route for the mean-reverting
/// kernel.
#[derive(Debug, Clone, Serialize)]
pub struct MehlerReport {
    pub time: f64,
    pub tol: f64,
    pub max_deviation: f64,
    pub compared_nodes: usize,
    pub pass: bool,
}

/// Evaluates `P_t f` once through the closed-form Gaussian kernel and once
/// through the discretized generator, comparing on the bulk `|x| <= 5`.
pub fn mehler_vs_discrete(
    f: impl Fn(f64) -> f64,
    t: f64,
    tol: f64,
    n: usize,
    quad_order: usize,
) -> Result<MehlerReport> {
    let spec = ou_spec(n)?;
    let model = discretize(&spec)?;
    let l = &model.generator;
    let grid = spec.grid();
    let sampled = Functional::new(l.states().clone(), grid.iter().map(|&x| f(x)).collect())?;
    let p = transition_matrix(l, t, 1e-12)?;
    let evolved = apply(&p, &sampled)?;
    let mut max_deviation = 0.0f64;
    let mut compared_nodes = 0usize;
    for (i, &x) in grid.iter().enumerate() {
        if x.abs() > 5.0 {
            continue;
        }
        compared_nodes += 1;
        let exact = ou_apply_exact(&f, t, x, quad_order)?;
        max_deviation = max_deviation.max((evolved.value(i) - exact).abs());
    }
    Ok(MehlerReport {
        time: t,
        tol,
        max_deviation,
        compared_nodes,
        pass: max_deviation < tol,
    })
}

/// Two constructions of the same model: drift written directly versus drift
/// derived from a quadratic potential.
#[derive(Debug, Clone, Serialize)]
pub struct SharedInvariantReport {
    pub generator_sup_diff: f64,
    pub measure_sup_diff: f64,
    pub rho_direct: f64,
    pub rho_potential: f64,
    pub pass: bool,
}

/// Builds the mean-reverting model through both routes and verifies they
/// produce the same generator, the same Gaussian invariant measure, and the
/// same unit curvature constant.
pub fn shared_invariant_demo(n: usize) -> Result<SharedInvariantReport> {
    let direct = ou_spec(n)?;
    let potential = quadratic_potential_spec(n)?;
    let model_direct = discretize(&direct)?;
    let model_potential = discretize(&potential)?;
    let generator_sup_diff = (model_direct.generator.rates() - model_potential.generator.rates())
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let measure_sup_diff = model_direct
        .measure
        .sup_distance(&model_potential.measure)?;
    let family = smooth_test_family(&direct, 2024, 8);
    let rho_direct = curvature_1d(&direct, &family, 2)?.rho_estimate;
    let rho_potential = curvature_1d(&potential, &family, 2)?.rho_estimate;
    let pass = generator_sup_diff <= 1e-12
        && measure_sup_diff <= 1e-10
        && (rho_direct - 1.0).abs() <= 1e-2
        && (rho_potential - 1.0).abs() <= 1e-2;
    Ok(SharedInvariantReport {
        generator_sup_diff,
        measure_sup_diff,
        rho_direct,
        rho_potential,
        pass,
    })
}

/// Decay of the chain-rule defect under grid refinement.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub coarse_error: f64,
    pub fine_error: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Measures the chain-rule defect `L(psi(f)) - psi'(f) Lf - psi''(f)
/// Gamma(f)` for the mean-reverting model at `n` and `2n - 1` nodes; on a
/// discretized diffusion the defect shrinks at second order.
pub fn residual_refinement(n: usize) -> Result<RefinementReport> {
    let psi = |u: f64| u * u * u;
    let psi_d1 = |u: f64| 3.0 * u * u;
    let psi_d2 = |u: f64| 6.0 * u;
    let sup_defect = |nodes: usize| -> Result<f64> {
        let spec = ou_spec(nodes)?;
        let model = discretize(&spec)?;
        let l = &model.generator;
        let grid = spec.grid();
        let f = Functional::new(l.states().clone(), grid.iter().map(|x| x.sin()).collect())?;
        let defect = diffusion_property_residual(l, &psi, &psi_d1, &psi_d2, &f)?;
        let h = grid[1] - grid[0];
        let window = (grid[0] + 4.0 * h, grid[nodes - 1] - 4.0 * h);
        let mut sup = 0.0f64;
        for (i, &x) in grid.iter().enumerate() {
            if x >= window.0 && x <= window.1 {
                sup = sup.max(defect.value(i).abs());
            }
        }
        Ok(sup)
    };
    let coarse_error = sup_defect(n)?;
    let fine_error = sup_defect(2 * n - 1)?;
    if fine_error <= 0.0 {
        return Err(Error::Numerical(
            "refinement study needs nonzero chain-rule defect".into(),
        ));
    }
    let ratio = coarse_error / fine_error;
    Ok(RefinementReport {
        coarse_error,
        fine_error,
        ratio,
        pass: (3.0..=5.0).contains(&ratio),
    })
}
