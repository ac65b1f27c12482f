//! Optimal curvature-dimension constants via per-state quadratic forms.
//!
//! At each state `x` the inequality `Gamma_2(f) >= rho Gamma(f) + (Lf)^2/n`
//! reads `B'_x - rho A_x >= 0` with `B'_x = B_x - C_x/n`, so the best `rho`
//! is `inf { f^T B'_x f / f^T A_x f : Gamma(f)(x) > 0 }`. Since `A_x` is
//! singular (constants at least), the infimum couples the range of `A_x` to
//! its kernel through the off-diagonal block of `B'_x`; eliminating the
//! kernel by a Schur complement reduces the problem to a symmetric
//! eigenproblem on the range. The kernel block itself must be positive
//! semidefinite and the coupling must stay inside its column space, else the
//! infimum is minus infinity and no finite `rho` works.
//!
//! All forms vanish outside the two-jump neighborhood of `x`, so the solve is
//! restricted to that support; for banded generators this keeps the per-state
//! cost constant.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::generator::GeneratorMatrix;
use crate::state::Functional;
use crate::Result;

/// Eigenvalue threshold separating the range of `A_x` from its kernel.
const RANGE_CUTOFF: f64 = 1e-10;

/// Curvature value at a single state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateRho {
    /// `Gamma` vanishes identically at this state (absorbing state).
    Degenerate,
    /// No finite `rho` satisfies the inequality at this state.
    Fails,
    Bounded(f64),
}

impl StateRho {
    pub fn value(&self) -> Option<f64> {
        match self {
            StateRho::Bounded(v) => Some(*v),
            _ => None,
        }
    }
}

impl Serialize for StateRho {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StateRho::Degenerate => serializer.serialize_none(),
            StateRho::Fails => serializer.serialize_str("-inf"),
            StateRho::Bounded(v) => serializer.serialize_f64(*v),
        }
    }
}

/// Outcome of the per-state curvature optimization.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub per_state: Vec<StateRho>,
    pub global_rho: StateRho,
    pub dimension_n: f64,
    /// Argmin functional achieving the global constant, normalized so that
    /// `Gamma(witness)(witness_state) = 1`.
    pub witness: Option<Functional>,
    pub witness_state: Option<usize>,
    pub degenerate_states: Vec<usize>,
}

impl Serialize for CurvatureReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CurvatureReport", 6)?;
        s.serialize_field("per_state", &self.per_state)?;
        s.serialize_field("global_rho", &self.global_rho)?;
        if self.dimension_n.is_finite() {
            s.serialize_field("dimension_n", &self.dimension_n)?;
        } else {
            s.serialize_field("dimension_n", "inf")?;
        }
        let witness: Option<Vec<f64>> = self
            .witness
            .as_ref()
            .map(|w| w.values().iter().cloned().collect());
        s.serialize_field("witness", &witness)?;
        s.serialize_field("witness_state", &self.witness_state)?;
        s.serialize_field("degenerate_states", &self.degenerate_states)?;
        s.end()
    }
}

/// Entry `(i, j)` of the `Gamma` form at state `y`, in full-space indices.
fn gamma_form_entry(l: &GeneratorMatrix, y: usize, i: usize, j: usize) -> f64 {
    if i == y && j == y {
        -0.5 * l.rate(y, y)
    } else if i == y {
        -0.5 * l.rate(y, j)
    } else if j == y {
        -0.5 * l.rate(y, i)
    } else if i == j {
        0.5 * l.rate(y, i)
    } else {
        0.0
    }
}

/// `Gamma` form at `x` restricted to the index set `idx`.
pub(super) fn gamma_form_restricted(
    l: &GeneratorMatrix,
    x: usize,
    idx: &[usize],
) -> DMatrix<f64> {
    let m = idx.len();
    let mut a = DMatrix::zeros(m, m);
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate().skip(p) {
            let v = gamma_form_entry(l, x, i, j);
            a[(p, q)] = v;
            a[(q, p)] = v;
        }
    }
    a
}

/// Entry `(i, j)` of `A_x L`: row `i` of the `Gamma` form at `x` contracted
/// with column `j` of the generator.
fn gamma_l_entry(l: &GeneratorMatrix, x: usize, i: usize, j: usize) -> f64 {
    if i == x {
        let mut acc = l.rate(x, x) * l.rate(x, j);
        for k in l.neighbors(x) {
            acc += l.rate(x, k) * l.rate(k, j);
        }
        -0.5 * acc
    } else {
        0.5 * l.rate(x, i) * (l.rate(i, j) - l.rate(x, j))
    }
}

/// `Gamma_2` form at `x` restricted to `idx`, via
/// `B_x = (sum_y L(x,y) A_y - A_x L - (A_x L)^T) / 2`.
pub(super) fn gamma2_form_restricted(
    l: &GeneratorMatrix,
    x: usize,
    idx: &[usize],
) -> DMatrix<f64> {
    let m = idx.len();
    let mut b = DMatrix::zeros(m, m);
    let mut row_support = vec![x];
    row_support.extend(l.neighbors(x));
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate().skip(p) {
            let mut acc = 0.0;
            for &y in &row_support {
                let w = l.rate(x, y);
                if w != 0.0 {
                    acc += w * gamma_form_entry(l, y, i, j);
                }
            }
            acc -= gamma_l_entry(l, x, i, j);
            acc -= gamma_l_entry(l, x, j, i);
            let v = 0.5 * acc;
            b[(p, q)] = v;
            b[(q, p)] = v;
        }
    }
    b
}

/// Rank-one form `(Lf)(x)^2` restricted to `idx`.
pub(super) fn square_form_restricted(
    l: &GeneratorMatrix,
    x: usize,
    idx: &[usize],
) -> DMatrix<f64> {
    let m = idx.len();
    let mut c = DMatrix::zeros(m, m);
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            c[(p, q)] = l.rate(x, i) * l.rate(x, j);
        }
    }
    c
}

/// States within two jumps of `x`, sorted; the joint support of all three
/// forms at `x`.
fn two_jump_support(l: &GeneratorMatrix, x: usize) -> Vec<usize> {
    let mut set = std::collections::BTreeSet::new();
    set.insert(x);
    for y in l.neighbors(x) {
        set.insert(y);
        for z in l.neighbors(y) {
            set.insert(z);
        }
    }
    set.into_iter().collect()
}

struct StateSolve {
    rho: StateRho,
    witness: Option<(Vec<usize>, DVector<f64>)>,
}

fn solve_state(l: &GeneratorMatrix, x: usize, dimension_n: f64) -> StateSolve {
    if l.neighbors(x).is_empty() {
        return StateSolve {
            rho: StateRho::Degenerate,
            witness: None,
        };
    }
    let idx = two_jump_support(l, x);
    let a = gamma_form_restricted(l, x, &idx);
    let mut bp = gamma2_form_restricted(l, x, &idx);
    if dimension_n.is_finite() {
        bp -= square_form_restricted(l, x, &idx) / dimension_n;
    }
    let m = idx.len();
    let scale_b = bp.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));

    let eig_a = SymmetricEigen::new(a);
    let a_max = eig_a.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cut = RANGE_CUTOFF * a_max.max(1.0);
    let range_cols: Vec<usize> = (0..m).filter(|&k| eig_a.eigenvalues[k] > cut).collect();
    let kernel_cols: Vec<usize> = (0..m).filter(|&k| eig_a.eigenvalues[k] <= cut).collect();
    if range_cols.is_empty() {
        return StateSolve {
            rho: StateRho::Degenerate,
            witness: None,
        };
    }
    let r = range_cols.len();
    let u = DMatrix::from_fn(m, r, |i, c| eig_a.eigenvectors[(i, range_cols[c])]);
    let lam = DVector::from_iterator(r, range_cols.iter().map(|&c| eig_a.eigenvalues[c]));

    let b11 = u.transpose() * &bp * &u;
    let (schur, kernel_shift) = if kernel_cols.is_empty() {
        (b11, None)
    } else {
        let kdim = kernel_cols.len();
        let v = DMatrix::from_fn(m, kdim, |i, c| eig_a.eigenvectors[(i, kernel_cols[c])]);
        let b22 = v.transpose() * &bp * &v;
        let b21 = v.transpose() * &bp * &u;
        let eig_k = SymmetricEigen::new(b22);
        let k_min = eig_k.eigenvalues.iter().cloned().fold(0.0f64, f64::min);
        if k_min < -1e-9 * scale_b {
            return StateSolve {
                rho: StateRho::Fails,
                witness: None,
            };
        }
        let k_max = eig_k.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let pinv_cut = 1e-10 * k_max.max(1.0);
        let mut pinv_core = DMatrix::zeros(kdim, kdim);
        for k in 0..kdim {
            if eig_k.eigenvalues[k] > pinv_cut {
                pinv_core[(k, k)] = 1.0 / eig_k.eigenvalues[k];
            }
        }
        let b22_pinv = &eig_k.eigenvectors * pinv_core * eig_k.eigenvectors.transpose();
        // Coupling into the kernel of B22 sends the infimum to minus infinity.
        let mut proj_core = DMatrix::zeros(kdim, kdim);
        for k in 0..kdim {
            if eig_k.eigenvalues[k] > pinv_cut {
                proj_core[(k, k)] = 1.0;
            }
        }
        let proj = &eig_k.eigenvectors * proj_core * eig_k.eigenvectors.transpose();
        let residual = (&b21 - proj * &b21)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if residual > 1e-8 * scale_b {
            return StateSolve {
                rho: StateRho::Fails,
                witness: None,
            };
        }
        let shift = &b22_pinv * &b21;
        let schur = b11 - b21.transpose() * &shift;
        (schur, Some((v, shift)))
    };

    let inv_sqrt = DVector::from_iterator(r, lam.iter().map(|&v| 1.0 / v.sqrt()));
    let mut w = schur;
    for i in 0..r {
        for j in 0..r {
            w[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    for i in 0..r {
        for j in (i + 1)..r {
            let avg = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = avg;
            w[(j, i)] = avg;
        }
    }
    let eig_w = SymmetricEigen::new(w);
    let mut best = 0usize;
    for k in 1..r {
        if eig_w.eigenvalues[k] < eig_w.eigenvalues[best] {
            best = k;
        }
    }
    let rho = eig_w.eigenvalues[best];
    let y = DVector::from_iterator(
        r,
        (0..r).map(|i| inv_sqrt[i] * eig_w.eigenvectors[(i, best)]),
    );
    let mut witness_vec = &u * &y;
    if let Some((v, shift)) = kernel_shift {
        witness_vec -= v * (shift * &y);
    }
    StateSolve {
        rho: StateRho::Bounded(rho),
        witness: Some((idx, witness_vec)),
    }
}

/// Computes the optimal curvature constant per state and globally.
pub fn curvature(l: &GeneratorMatrix, dimension_n: f64) -> Result<CurvatureReport> {
    if !(dimension_n >= 1.0) {
        return Err(crate::Error::OutOfDomain {
            context: "dimension parameter must lie in [1, infinity]",
            value: dimension_n,
        });
    }
    let n = l.size();
    let mut per_state = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    let mut witnesses: Vec<Option<(Vec<usize>, DVector<f64>)>> = Vec::with_capacity(n);
    for x in 0..n {
        let solved = solve_state(l, x, dimension_n);
        if matches!(solved.rho, StateRho::Degenerate) {
            degenerate.push(x);
        }
        per_state.push(solved.rho);
        witnesses.push(solved.witness);
    }
    let mut global = StateRho::Degenerate;
    let mut arg: Option<usize> = None;
    for (x, rho) in per_state.iter().enumerate() {
        match (*rho, global) {
            (StateRho::Fails, _) => {
                global = StateRho::Fails;
                arg = None;
                break;
            }
            (StateRho::Bounded(v), StateRho::Bounded(g)) => {
                if v < g {
                    global = StateRho::Bounded(v);
                    arg = Some(x);
                }
            }
            (StateRho::Bounded(v), StateRho::Degenerate) => {
                global = StateRho::Bounded(v);
                arg = Some(x);
            }
            _ => {}
        }
    }
    let witness = arg.and_then(|x| {
        witnesses[x].take().map(|(idx, vec)| {
            let mut full = vec![0.0; n];
            for (p, &i) in idx.iter().enumerate() {
                full[i] = vec[p];
            }
            Functional::new(l.states().clone(), full).expect("witness length")
        })
    });
    Ok(CurvatureReport {
        per_state,
        global_rho: global,
        dimension_n,
        witness,
        witness_state: arg,
        degenerate_states: degenerate,
    })
}
