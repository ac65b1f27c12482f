//! Carre du champ calculus on finite-state generators.
//!
//! Two evaluation routes for `Gamma` are kept side by side: the definitional
//! bracket `(L(fg) - f Lg - g Lf)/2` and the rate-difference form
//! `sum_y L(x,y)(f(y)-f(x))(g(y)-g(x))/2`, which is numerically stabler
//! because it never cancels large products. They agree exactly in exact
//! arithmetic and are cross-checked in the test suite.

mod curvature;

pub use curvature::{curvature, CurvatureReport, StateRho};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::generator::GeneratorMatrix;
use crate::state::{require_same_space, Functional, ProbabilityMeasure};
use crate::{Error, Result};

/// Default absolute tolerance for pointwise inequality slack.
pub const DEFAULT_SLACK_TOL: f64 = 1e-10;
/// Agreement required between the two Dirichlet-form routes.
const INTEGRATION_BY_PARTS_TOL: f64 = 1e-10;

/// Carre du champ `Gamma(f, g)` via the rate-difference form.
pub fn gamma(l: &GeneratorMatrix, f: &Functional, g: &Functional) -> Result<Functional> {
    require_same_space(l.states(), f.space(), "carre du champ")?;
    require_same_space(l.states(), g.space(), "carre du champ")?;
    let n = l.size();
    let mut out = vec![0.0; n];
    for x in 0..n {
        let fx = f.value(x);
        let gx = g.value(x);
        let mut acc = 0.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            let rate = l.rate(x, y);
            if rate != 0.0 {
                acc += rate * (f.value(y) - fx) * (g.value(y) - gx);
            }
        }
        out[x] = 0.5 * acc;
    }
    Functional::new(l.states().clone(), out)
}

/// Carre du champ via the definitional bracket `(L(fg) - f Lg - g Lf)/2`.
pub fn gamma_via_definition(
    l: &GeneratorMatrix,
    f: &Functional,
    g: &Functional,
) -> Result<Functional> {
    let fg = f.pointwise_mul(g)?;
    let l_fg = l.apply_to(&fg)?;
    let f_lg = f.pointwise_mul(&l.apply_to(g)?)?;
    let g_lf = g.pointwise_mul(&l.apply_to(f)?)?;
    let n = l.size();
    let mut out = vec![0.0; n];
    for x in 0..n {
        out[x] = 0.5 * (l_fg.value(x) - f_lg.value(x) - g_lf.value(x));
    }
    Functional::new(l.states().clone(), out)
}

/// Iterated carre du champ
/// `Gamma_2(f, g) = (L Gamma(f,g) - Gamma(f, Lg) - Gamma(Lf, g))/2`.
pub fn gamma2(l: &GeneratorMatrix, f: &Functional, g: &Functional) -> Result<Functional> {
    let g_fg = gamma(l, f, g)?;
    let l_gamma = l.apply_to(&g_fg)?;
    let g_f_lg = gamma(l, f, &l.apply_to(g)?)?;
    let g_lf_g = gamma(l, &l.apply_to(f)?, g)?;
    let n = l.size();
    let mut out = vec![0.0; n];
    for x in 0..n {
        out[x] = 0.5 * (l_gamma.value(x) - g_f_lg.value(x) - g_lf_g.value(x));
    }
    Functional::new(l.states().clone(), out)
}

/// Dense quadratic forms of `Gamma`, `Gamma_2`, and `(Lf)^2` at one state:
/// `f^T A_x f = Gamma(f)(x)`, `f^T B_x f = Gamma_2(f)(x)`,
/// `f^T C_x f = (Lf)(x)^2`.
pub fn quadratic_forms_at(
    l: &GeneratorMatrix,
    x: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = l.size();
    if x >= n {
        return Err(Error::DimensionMismatch {
            context: "state index",
            expected: n,
            got: x,
        });
    }
    let idx: Vec<usize> = (0..n).collect();
    let a = curvature::gamma_form_restricted(l, x, &idx);
    let b = curvature::gamma2_form_restricted(l, x, &idx);
    let c = curvature::square_form_restricted(l, x, &idx);
    Ok((a, b, c))
}

/// Pointwise slack report for a curvature-dimension inequality.
#[derive(Debug, Clone, Serialize)]
pub struct CdReport {
    pub rho: f64,
    pub dimension_n: f64,
    pub min_slack: f64,
    pub worst_state: usize,
    pub worst_function: usize,
    pub pass: bool,
}

/// Evaluates `Gamma_2(f) - rho Gamma(f) - (Lf)^2 / n >= -tol` pointwise over
/// a set of test functionals.
pub fn cd_check(
    l: &GeneratorMatrix,
    rho: f64,
    dimension_n: f64,
    test_set: &[Functional],
    tol: f64,
) -> Result<CdReport> {
    if !(dimension_n >= 1.0) {
        return Err(Error::OutOfDomain {
            context: "dimension parameter must lie in [1, infinity]",
            value: dimension_n,
        });
    }
    let mut min_slack = f64::INFINITY;
    let mut worst_state = 0;
    let mut worst_function = 0;
    for (k, f) in test_set.iter().enumerate() {
        let g2 = gamma2(l, f, f)?;
        let g1 = gamma(l, f, f)?;
        let lf = l.apply_to(f)?;
        for x in 0..l.size() {
            let mut slack = g2.value(x) - rho * g1.value(x);
            if dimension_n.is_finite() {
                slack -= lf.value(x) * lf.value(x) / dimension_n;
            }
            if slack < min_slack {
                min_slack = slack;
                worst_state = x;
                worst_function = k;
            }
        }
    }
    if test_set.is_empty() {
        min_slack = 0.0;
    }
    Ok(CdReport {
        rho,
        dimension_n,
        min_slack,
        worst_state,
        worst_function,
        pass: min_slack >= -tol,
    })
}

/// Indicator basis of the generator's state space.
pub fn indicator_basis(l: &GeneratorMatrix) -> Vec<Functional> {
    (0..l.size())
        .map(|i| Functional::indicator(l.states().clone(), i).expect("index in range"))
        .collect()
}

/// Outcome of the connexity test: `Gamma(f) = 0` forces `f` constant exactly
/// when the jump graph is connected.
#[derive(Debug, Clone)]
pub enum ConnexityCertificate {
    Connected,
    /// A nonconstant functional with identically vanishing carre du champ
    /// (the indicator of one jump-graph component).
    Disconnected {
        witness: Functional,
        components: usize,
    },
}

impl ConnexityCertificate {
    pub fn is_connected(&self) -> bool {
        matches!(self, ConnexityCertificate::Connected)
    }
}

/// Union-find over the undirected support graph `x ~ y` when
/// `L(x,y) > 0` or `L(y,x) > 0`.
pub fn connexity_check(l: &GeneratorMatrix) -> ConnexityCertificate {
    let n = l.size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for x in 0..n {
        for y in (x + 1)..n {
            if l.rate(x, y) > 0.0 || l.rate(y, x) > 0.0 {
                let rx = find(&mut parent, x);
                let ry = find(&mut parent, y);
                if rx != ry {
                    parent[rx] = ry;
                }
            }
        }
    }
    let root0 = find(&mut parent, 0);
    let mut witness = vec![0.0; n];
    witness[0] = 1.0;
    let mut disconnected = false;
    for x in 1..n {
        let rx = find(&mut parent, x);
        if rx == root0 {
            witness[x] = 1.0;
        } else {
            disconnected = true;
        }
    }
    if disconnected {
        let mut roots: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
        roots.sort_unstable();
        roots.dedup();
        let components = roots.len();
        let witness = Functional::new(l.states().clone(), witness).expect("witness length");
        ConnexityCertificate::Disconnected {
            witness,
            components,
        }
    } else {
        ConnexityCertificate::Connected
    }
}

/// Dirichlet form `E(f, g) = integral of Gamma(f,g) d mu`, cross-checked
/// against the integration-by-parts route `-integral of f Lg d mu`.
///
/// The two routes agree only when `mu` is invariant and the chain reversible;
/// disagreement beyond tolerance is surfaced as an error.
pub fn dirichlet_form(
    l: &GeneratorMatrix,
    mu: &ProbabilityMeasure,
    f: &Functional,
    g: &Functional,
) -> Result<f64> {
    let via_gamma = mu.expectation(&gamma(l, f, g)?)?;
    let via_generator = -mu.expectation(&f.pointwise_mul(&l.apply_to(g)?)?)?;
    if (via_gamma - via_generator).abs() > INTEGRATION_BY_PARTS_TOL {
        return Err(Error::IntegrationByPartsViolation {
            gamma_route: via_gamma,
            generator_route: via_generator,
        });
    }
    Ok(via_gamma)
}

/// Residual of the chain rule `L psi(f) = psi'(f) Lf + psi''(f) Gamma(f)`.
///
/// Identically zero only for diffusion generators; jump chains leave a
/// nonzero residual, and for discretized diffusions the residual is a
/// second-order discretization artifact. The supplied derivatives are gated
/// against central finite differences at five probe points before use.
pub fn diffusion_property_residual(
    l: &GeneratorMatrix,
    psi: &dyn Fn(f64) -> f64,
    psi_d1: &dyn Fn(f64) -> f64,
    psi_d2: &dyn Fn(f64) -> f64,
    f: &Functional,
) -> Result<Functional> {
    require_same_space(l.states(), f.space(), "diffusion property residual")?;
    let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi - lo < 1e-6 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    };
    for k in 0..5 {
        let u = lo + (hi - lo) * k as f64 / 4.0;
        let delta = 1e-5 * (1.0 + u.abs());
        let fd1 = (psi(u + delta) - psi(u - delta)) / (2.0 * delta);
        let d1 = psi_d1(u);
        if (fd1 - d1).abs() > 1e-6 * (1.0 + d1.abs()) {
            return Err(Error::PsiInconsistent {
                probe: u,
                reported: d1,
                measured: fd1,
            });
        }
        let fd2 = (psi(u + delta) - 2.0 * psi(u) + psi(u - delta)) / (delta * delta);
        let d2 = psi_d2(u);
        if (fd2 - d2).abs() > 1e-4 * (1.0 + d2.abs()) {
            return Err(Error::PsiInconsistent {
                probe: u,
                reported: d2,
                measured: fd2,
            });
        }
    }
    let psi_f = Functional::new(
        l.states().clone(),
        f.values().iter().map(|&u| psi(u)).collect(),
    )?;
    let l_psi_f = l.apply_to(&psi_f)?;
    let lf = l.apply_to(f)?;
    let gamma_f = gamma(l, f, f)?;
    let n = l.size();
    let mut out = vec![0.0; n];
    for x in 0..n {
        let u = f.value(x);
        out[x] = l_psi_f.value(x) - psi_d1(u) * lf.value(x) - psi_d2(u) * gamma_f.value(x);
    }
    Functional::new(l.states().clone(), out)
}
