#![allow(dead_code)]

//! Shared helpers for the integration suites.
//!
//! The centrepiece is an independent curvature oracle: instead of the
//! library's spectral reduction, it minimizes the defining quotient
//! `(iterated form) / (squared gradient)` at each state directly, by
//! random-restart gradient descent with exact line search. Agreement between
//! the two routes certifies both. Random relation matrices and random
//! commensurate-rate families feed the order-structure cross-checks.

use imsg_core::gamma::{gamma, gamma2};
use imsg_core::generator::GeneratorMatrix;
use imsg_core::poset::{Comparison, ImpreciseFamily};
use imsg_core::state::{Functional, StateSpace};
use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;

/// Indicator of one state as a functional on the generator's space.
fn indicator(l: &GeneratorMatrix, i: usize) -> Functional {
    let n = l.size();
    let mut values = vec![0.0; n];
    values[i] = 1.0;
    Functional::new(l.states().clone(), values).expect("indicator construction")
}

/// Assembles the two quadratic forms entering the curvature quotient at one
/// state, by polarizing the public bilinear maps over the indicator basis.
/// A finite dimension subtracts the squared-drift term from the numerator.
fn quotient_forms(
    l: &GeneratorMatrix,
    x: usize,
    dimension_n: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = l.size();
    let basis: Vec<Functional> = (0..n).map(|i| indicator(l, i)).collect();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g2 = gamma2(l, &basis[i], &basis[j])
                .expect("iterated form on indicators")
                .value(x);
            let g1 = gamma(l, &basis[i], &basis[j])
                .expect("squared gradient on indicators")
                .value(x);
            let mut aij = g2;
            if dimension_n.is_finite() {
                aij -= l.rates()[(x, i)] * l.rates()[(x, j)] / dimension_n;
            }
            a[(i, j)] = aij;
            a[(j, i)] = aij;
            b[(i, j)] = g1;
            b[(j, i)] = g1;
        }
    }
    (a, b)
}

fn form_value(m: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    (f.transpose() * m * f)[(0, 0)]
}

fn form_pair(m: &DMatrix<f64>, f: &DVector<f64>, d: &DVector<f64>) -> f64 {
    (f.transpose() * m * d)[(0, 0)]
}

/// Minimizes `f^T a f / f^T b f` over directions with positive denominator,
/// by gradient descent with exact line search from one starting point.
fn descend(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    start: DVector<f64>,
    denom_floor: f64,
) -> Option<f64> {
    let mut f = start.normalize();
    let mut value = {
        let den = form_value(b, &f);
        if den <= denom_floor {
            return None;
        }
        form_value(a, &f) / den
    };
    let mut flat_steps = 0usize;
    for _ in 0..800 {
        if value < -1e12 {
            return Some(f64::NEG_INFINITY);
        }
        // Steepest-descent direction of the quotient (up to a positive factor).
        let d = -(a * &f - b * &f * value);
        if d.norm() <= 1e-300 {
            break;
        }
        // Along f + s d both forms are quadratics in s; the quotient's
        // critical points solve a scalar quadratic.
        let a0 = form_value(a, &f);
        let a1 = form_pair(a, &f, &d);
        let a2 = form_value(a, &d);
        let b0 = form_value(b, &f);
        let b1 = form_pair(b, &f, &d);
        let b2 = form_value(b, &d);
        let c0 = a1 * b0 - a0 * b1;
        let c1 = a2 * b0 - a0 * b2;
        let c2 = a2 * b1 - a1 * b2;
        let mut roots: Vec<f64> = Vec::new();
        if c2.abs() > 1e-300 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                roots.push((-c1 + sq) / (2.0 * c2));
                roots.push((-c1 - sq) / (2.0 * c2));
            }
        } else if c1.abs() > 1e-300 {
            roots.push(-c0 / c1);
        }
        let mut best_step: Option<(f64, f64)> = None;
        for s in roots {
            if !s.is_finite() {
                continue;
            }
            let den = b0 + 2.0 * b1 * s + b2 * s * s;
            if den <= denom_floor {
                continue;
            }
            let num = a0 + 2.0 * a1 * s + a2 * s * s;
            let candidate = num / den;
            if best_step.map_or(true, |(_, v)| candidate < v) {
                best_step = Some((s, candidate));
            }
        }
        match best_step {
            Some((s, candidate)) if candidate < value => {
                let improvement = value - candidate;
                f = (&f + d * s).normalize();
                value = candidate;
                if improvement <= 1e-15 * (1.0 + value.abs()) {
                    flat_steps += 1;
                    if flat_steps >= 3 {
                        break;
                    }
                } else {
                    flat_steps = 0;
                }
            }
            _ => break,
        }
    }
    Some(value)
}

/// Per-state curvature by direct quotient minimization. `None` marks a state
/// whose squared-gradient form vanishes identically (no admissible
/// direction); `f64::NEG_INFINITY` marks a quotient unbounded below.
pub fn rayleigh_curvature(
    l: &GeneratorMatrix,
    dimension_n: f64,
    seed: u64,
) -> Vec<Option<f64>> {
    use rand::SeedableRng;
    let n = l.size();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let (a, b) = quotient_forms(l, x, dimension_n);
        let scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale <= 1e-14 {
            out.push(None);
            continue;
        }
        let denom_floor = 1e-12 * scale;
        let mut best = f64::INFINITY;
        let mut restarts_done = 0usize;
        let mut attempts = 0usize;
        while restarts_done < 40 && attempts < 400 {
            attempts += 1;
            let start =
                DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..1.0f64)));
            if start.norm() <= 1e-9 {
                continue;
            }
            match descend(&a, &b, start, denom_floor) {
                Some(v) => {
                    restarts_done += 1;
                    if v < best {
                        best = v;
                    }
                    if v == f64::NEG_INFINITY {
                        break;
                    }
                }
                None => continue,
            }
        }
        out.push(if best.is_finite() || best == f64::NEG_INFINITY {
            Some(best)
        } else {
            None
        });
    }
    out
}

/// Smallest per-state quotient minimum over the whole chain, skipping
/// degenerate states; `None` when every state is degenerate.
pub fn rayleigh_global(l: &GeneratorMatrix, dimension_n: f64, seed: u64) -> Option<f64> {
    rayleigh_curvature(l, dimension_n, seed)
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
}

/// Random consistent comparison matrix: a strict partial order on a few
/// classes, transitively closed, then expanded with duplicate members so the
/// equality machinery is exercised. Total members stay at or below
/// `max_members`.
pub fn random_poset_matrix(
    rng: &mut ChaCha12Rng,
    max_members: usize,
) -> (Vec<String>, Vec<Vec<Comparison>>) {
    let max_classes = max_members.min(8);
    let k = rng.random_range(1..=max_classes);
    // A random linear extension keeps the random edges acyclic.
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut below = vec![vec![false; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            if rng.random_range(0.0..1.0f64) < 0.4 {
                below[perm[a]][perm[b]] = true;
            }
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if below[i][m] && below[m][j] {
                    below[i][j] = true;
                }
            }
        }
    }
    let mut sizes = vec![1usize; k];
    let budget = max_members - k;
    let extras = if budget == 0 {
        0
    } else {
        rng.random_range(0..=budget)
    };
    for _ in 0..extras {
        let c = rng.random_range(0..k);
        sizes[c] += 1;
    }
    let mut class_of = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            class_of.push(c);
        }
    }
    let n = class_of.len();
    let names: Vec<String> = (1..=n).map(|i| format!("P{i}")).collect();
    let mut matrix = vec![vec![Comparison::Incomparable; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (ci, cj) = (class_of[i], class_of[j]);
            matrix[i][j] = if ci == cj {
                Comparison::Equal
            } else if below[ci][cj] {
                Comparison::Below
            } else if below[cj][ci] {
                Comparison::Above
            } else {
                Comparison::Incomparable
            };
        }
    }
    (names, matrix)
}

/// Random family of two-state chains with small integer rates, so every
/// pairwise comparison is certifiable by the exact rational oracle.
pub fn random_commensurate_family(rng: &mut ChaCha12Rng) -> ImpreciseFamily {
    let m = rng.random_range(2..=4);
    let members: Vec<(String, GeneratorMatrix)> = (0..m)
        .map(|i| {
            let up = rng.random_range(1..=6) as f64;
            let down = rng.random_range(1..=6) as f64;
            (
                format!("m{i}"),
                GeneratorMatrix::two_state(up, down).expect("integer-rate pair"),
            )
        })
        .collect();
    let space = StateSpace::indexed(2).expect("two-state space");
    let payoff = Functional::new(
        space,
        vec![rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64)],
    )
    .expect("payoff construction");
    ImpreciseFamily::new(members, payoff).expect("family construction")
}
