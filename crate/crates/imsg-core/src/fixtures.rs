//! Bundled chain corpus and reusable demonstration families.
//!
//! Every corpus member is reversible, uniquely ergodic, and small (at most
//! six states), so curvature, spectral, and convergence machinery can sweep
//! the whole collection cheaply. Extra fixtures can be merged in from JSON
//! files by pointing the `IMSG_FIXTURES` environment variable at a
//! directory.

use std::path::Path;

use nalgebra::DMatrix;
use rand::RngExt;
use rand_chacha::ChaCha12Rng;

use crate::generator::{validate_generator, GeneratorMatrix};
use crate::poset::{Comparison, ImpreciseFamily};
use crate::state::{Functional, ProbabilityMeasure, StateSpace};
use crate::{Error, Result};

/// Environment variable naming a directory of extra fixture JSON files.
pub const FIXTURES_ENV: &str = "IMSG_FIXTURES";

/// A named generator with a one-line description.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub generator: GeneratorMatrix,
}

fn build(name: &str, description: &str, rates: DMatrix<f64>) -> Fixture {
    let n = rates.nrows();
    let space = StateSpace::indexed(n).expect("corpus fixture space");
    let generator = validate_generator(rates, space).expect("corpus fixture generator");
    Fixture {
        name: name.to_string(),
        description: description.to_string(),
        generator,
    }
}

/// Tridiagonal chain from per-edge up and down rates; always reversible.
fn birth_death(name: &str, description: &str, ups: &[f64], downs: &[f64]) -> Fixture {
    assert_eq!(ups.len(), downs.len());
    let n = ups.len() + 1;
    let mut rates = DMatrix::zeros(n, n);
    for (k, (&up, &down)) in ups.iter().zip(downs).enumerate() {
        rates[(k, k + 1)] = up;
        rates[(k + 1, k)] = down;
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        rates[(i, i)] = -row_sum;
    }
    build(name, description, rates)
}

/// Chain with a symmetric rate matrix; reversible for the uniform measure.
fn symmetric_edges(name: &str, description: &str, n: usize, edges: &[(usize, usize, f64)]) -> Fixture {
    let mut rates = DMatrix::zeros(n, n);
    for &(a, b, w) in edges {
        rates[(a, b)] = w;
        rates[(b, a)] = w;
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        rates[(i, i)] = -row_sum;
    }
    build(name, description, rates)
}

/// Chain built from a target measure and symmetric edge conductances via
/// detailed balance: the jump rate out of `x` along an edge is the
/// conductance divided by the mass at `x`.
fn conductance_chain(
    name: &str,
    description: &str,
    masses: &[f64],
    edges: &[(usize, usize, f64)],
) -> Fixture {
    let n = masses.len();
    let total: f64 = masses.iter().sum();
    let mut rates = DMatrix::zeros(n, n);
    for &(a, b, s) in edges {
        rates[(a, b)] = s * total / masses[a];
        rates[(b, a)] = s * total / masses[b];
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        rates[(i, i)] = -row_sum;
    }
    build(name, description, rates)
}

fn complete_edges(n: usize, w: f64) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((a, b, w));
        }
    }
    edges
}

fn ring_edges(n: usize, w: f64) -> Vec<(usize, usize, f64)> {
    (0..n).map(|a| (a, (a + 1) % n, w)).collect()
}

/// The bundled corpus: at least twenty reversible, uniquely ergodic chains
/// on two to six states, spanning balanced, drifted, and stiff regimes.
/// Every member carries strictly positive curvature, so the whole
/// gradient-bound / local-variance / global-variance chain of implications
/// can be verified on each of them at its own computed constant.
pub fn reversible_corpus() -> Vec<Fixture> {
    let mut wheel5 = ring_edges(4, 1.0);
    wheel5.extend((0..4).map(|rim| (rim, 4, 1.0)));
    let mut gem5 = complete_edges(5, 1.0);
    gem5.retain(|&(a, b, _)| !(a == 3 && b == 4));
    let prism6 = vec![
        (0, 1, 1.0),
        (1, 2, 1.0),
        (2, 0, 1.0),
        (3, 4, 1.0),
        (4, 5, 1.0),
        (5, 3, 1.0),
        (0, 3, 1.0),
        (1, 4, 1.0),
        (2, 5, 1.0),
    ];
    let ladder6 = vec![
        (0, 1, 1.0),
        (1, 2, 1.0),
        (3, 4, 1.0),
        (4, 5, 1.0),
        (0, 3, 2.0),
        (1, 4, 2.0),
        (2, 5, 2.0),
    ];
    vec![
        birth_death("pair_balanced", "two states, unit rates both ways", &[1.0], &[1.0]),
        birth_death("pair_skewed", "two states, downhill three times faster", &[1.0], &[3.0]),
        birth_death("pair_stiff", "two states, rates twenty-five apart", &[0.2], &[5.0]),
        birth_death("pair_gentle", "two states, slow fractional rates", &[0.3], &[0.7]),
        birth_death("path3_flat", "three-state path, unit rates", &[1.0, 1.0], &[1.0, 1.0]),
        birth_death("path3_drift", "three-state path drifting upward", &[2.0, 2.0], &[1.0, 1.0]),
        symmetric_edges("triangle_flat", "complete three-state graph, unit rates", 3, &complete_edges(3, 1.0)),
        conductance_chain(
            "triangle_skewed",
            "weighted triangle reversible for masses one, two, four",
            &[1.0, 2.0, 4.0],
            &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)],
        ),
        symmetric_edges(
            "triangle_stiff",
            "triangle with conductances spread over a factor twenty-five",
            3,
            &[(0, 1, 0.2), (1, 2, 1.0), (0, 2, 5.0)],
        ),
        birth_death("path4_flat", "four-state path, unit rates", &[1.0; 3], &[1.0; 3]),
        symmetric_edges("complete4_flat", "complete four-state graph, unit rates", 4, &complete_edges(4, 1.0)),
        conductance_chain(
            "complete4_weighted",
            "complete four-state graph with a linear mass profile",
            &[1.0, 2.0, 3.0, 4.0],
            &[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0), (1, 2, 4.0), (1, 3, 5.0), (2, 3, 6.0)],
        ),
        symmetric_edges("ring4_flat", "four-cycle with symmetric unit rates", 4, &ring_edges(4, 1.0)),
        conductance_chain(
            "bell4_binomial",
            "four-state switch-count chain with a binomial profile",
            &[1.0, 3.0, 3.0, 1.0],
            &[(0, 1, 3.0), (1, 2, 6.0), (2, 3, 3.0)],
        ),
        conductance_chain(
            "ladder4_weighted",
            "four-state path reversible for a linear mass profile",
            &[1.0, 2.0, 3.0, 4.0],
            &[(0, 1, 0.3), (1, 2, 0.5), (2, 3, 0.4)],
        ),
        symmetric_edges("complete5_flat", "complete five-state graph, unit rates", 5, &complete_edges(5, 1.0)),
        conductance_chain(
            "complete5_weighted",
            "complete five-state graph with a decreasing mass profile",
            &[5.0, 4.0, 3.0, 2.0, 1.0],
            &[
                (0, 1, 2.0),
                (0, 2, 1.0),
                (0, 3, 3.0),
                (0, 4, 1.5),
                (1, 2, 2.5),
                (1, 3, 1.0),
                (1, 4, 2.0),
                (2, 3, 3.5),
                (2, 4, 1.0),
                (3, 4, 2.0),
            ],
        ),
        conductance_chain(
            "bell5_binomial",
            "five-state switch-count chain with a binomial profile",
            &[1.0, 4.0, 6.0, 4.0, 1.0],
            &[(0, 1, 4.0), (1, 2, 12.0), (2, 3, 12.0), (3, 4, 4.0)],
        ),
        symmetric_edges("wheel5_flat", "four-cycle plus a hub, unit rates", 5, &wheel5),
        symmetric_edges("gem5_nearly_complete", "five-state complete graph minus one edge", 5, &gem5),
        symmetric_edges("complete6_light", "complete six-state graph, rate one half", 6, &complete_edges(6, 0.5)),
        conductance_chain(
            "complete6_weighted",
            "complete six-state graph with paired masses",
            &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0],
            &[
                (0, 1, 1.0),
                (0, 2, 2.0),
                (0, 3, 1.5),
                (0, 4, 1.0),
                (0, 5, 2.5),
                (1, 2, 1.5),
                (1, 3, 2.0),
                (1, 4, 2.5),
                (1, 5, 1.0),
                (2, 3, 1.0),
                (2, 4, 2.0),
                (2, 5, 1.5),
                (3, 4, 1.5),
                (3, 5, 2.0),
                (4, 5, 1.0),
            ],
        ),
        symmetric_edges("prism6_product", "two stacked triangles joined rung by rung", 6, &prism6),
        symmetric_edges("ladder6_product", "two stacked three-paths with heavy rungs", 6, &ladder6),
        conductance_chain(
            "bell6_binomial",
            "six-state path reversible for a bell-shaped mass profile",
            &[1.0, 5.0, 10.0, 10.0, 5.0, 1.0],
            &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 2.5), (3, 4, 2.0), (4, 5, 1.0)],
        ),
    ]
}

/// Bundled corpus plus any fixtures found through `IMSG_FIXTURES`.
pub fn fixture_registry() -> Result<Vec<Fixture>> {
    let mut all = reversible_corpus();
    if let Ok(dir) = std::env::var(FIXTURES_ENV) {
        if !dir.trim().is_empty() {
            all.extend(crate::io::read_fixture_dir(Path::new(&dir))?);
        }
    }
    for (i, fixture) in all.iter().enumerate() {
        if all[..i].iter().any(|other| other.name == fixture.name) {
            return Err(Error::DuplicateName(fixture.name.clone()));
        }
    }
    Ok(all)
}

/// Looks a fixture up by name.
pub fn find_fixture<'a>(fixtures: &'a [Fixture], name: &str) -> Option<&'a Fixture> {
    fixtures.iter().find(|f| f.name == name)
}

/// Three two-state members ordered as a chain by the indicator payoff:
/// the canonical totally ordered demonstration family.
pub fn three_chain_family() -> Result<ImpreciseFamily> {
    let space = StateSpace::indexed(2)?;
    let payoff = Functional::new(space, vec![1.0, 0.0])?;
    ImpreciseFamily::new(
        vec![
            ("slow".to_string(), GeneratorMatrix::two_state(1.0, 1.0)?),
            ("middle".to_string(), GeneratorMatrix::two_state(1.0, 2.0)?),
            ("fast".to_string(), GeneratorMatrix::two_state(1.0, 3.0)?),
        ],
        payoff,
    )
}

/// Explicit comparison matrix with a bottom member below everything, a top
/// member above everything, and `middle` mutually incomparable members in
/// between; its width equals `middle`.
pub fn fan_relation(middle: usize) -> (Vec<String>, Vec<Vec<Comparison>>) {
    let n = middle + 2;
    let names: Vec<String> = (1..=n).map(|i| format!("P{i}")).collect();
    let mut matrix = vec![vec![Comparison::Incomparable; n]; n];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = Comparison::Equal;
    }
    for k in 1..n {
        matrix[0][k] = Comparison::Below;
        matrix[k][0] = Comparison::Above;
    }
    for k in 0..(n - 1) {
        matrix[k][n - 1] = Comparison::Below;
        matrix[n - 1][k] = Comparison::Above;
    }
    (names, matrix)
}

/// Random full-support measure and a generator reversible for it, built by
/// dividing random symmetric conductances by the local mass.
pub fn random_detailed_balance(
    rng: &mut ChaCha12Rng,
    n: usize,
) -> Result<(GeneratorMatrix, ProbabilityMeasure)> {
    let space = StateSpace::indexed(n)?;
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let mu = ProbabilityMeasure::from_unnormalized(space.clone(), weights)?;
    let mut rates = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let s = rng.random_range(0.2..2.0);
            rates[(a, b)] = s / mu.weight(a);
            rates[(b, a)] = s / mu.weight(b);
        }
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        rates[(i, i)] = -row_sum;
    }
    Ok((validate_generator(rates, space)?, mu))
}

/// Two distinct generators reversible for one shared measure.
pub fn shared_measure_pair(
    rng: &mut ChaCha12Rng,
    n: usize,
) -> Result<(GeneratorMatrix, GeneratorMatrix, ProbabilityMeasure)> {
    let (first, mu) = random_detailed_balance(rng, n)?;
    let space = mu.space().clone();
    let mut rates = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let s = rng.random_range(0.2..2.0);
            rates[(a, b)] = s / mu.weight(a);
            rates[(b, a)] = s / mu.weight(b);
        }
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        rates[(i, i)] = -row_sum;
    }
    let second = validate_generator(rates, space)?;
    Ok((first, second, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::analyze_relation;
    use crate::semigroup::invariant_measure;
    use crate::spectral::symmetrized;
    use rand::SeedableRng;

    #[test]
    fn corpus_members_are_reversible_uniquely_ergodic_and_small() {
        let corpus = reversible_corpus();
        assert!(corpus.len() >= 20);
        for fixture in &corpus {
            let l = &fixture.generator;
            assert!(l.size() >= 2 && l.size() <= 6, "{}", fixture.name);
            let mu = invariant_measure(l)
                .unwrap_or_else(|e| panic!("{} has no unique measure: {e}", fixture.name));
            symmetrized(l, &mu)
                .unwrap_or_else(|e| panic!("{} is not reversible: {e}", fixture.name));
        }
    }

    #[test]
    fn corpus_members_carry_positive_curvature() {
        for fixture in reversible_corpus() {
            let rho = crate::gamma::curvature(&fixture.generator, f64::INFINITY)
                .unwrap_or_else(|e| panic!("{} curvature failed: {e}", fixture.name))
                .global_rho
                .value()
                .unwrap_or(f64::NEG_INFINITY);
            assert!(
                rho > 1e-3,
                "{} has curvature {rho}, breaking the corpus contract",
                fixture.name
            );
        }
    }

    #[test]
    fn corpus_names_are_unique() {
        let corpus = reversible_corpus();
        for (i, fixture) in corpus.iter().enumerate() {
            assert!(
                !corpus[..i].iter().any(|other| other.name == fixture.name),
                "duplicate corpus name {}",
                fixture.name
            );
        }
    }

    #[test]
    fn detailed_balance_construction_hits_its_target_measure() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in 2..=6 {
            let (l, mu) = random_detailed_balance(&mut rng, n).unwrap();
            let computed = invariant_measure(&l).unwrap();
            assert!(computed.sup_distance(&mu).unwrap() < 1e-10);
            assert!(symmetrized(&l, &mu).is_ok());
        }
    }

    #[test]
    fn shared_measure_pairs_share_and_differ() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let (a, b, mu) = shared_measure_pair(&mut rng, 4).unwrap();
        assert!(invariant_measure(&a).unwrap().sup_distance(&mu).unwrap() < 1e-10);
        assert!(invariant_measure(&b).unwrap().sup_distance(&mu).unwrap() < 1e-10);
        let diff = (a.rates() - b.rates()).amax();
        assert!(diff > 1e-3, "the two generators should differ");
    }

    #[test]
    fn fan_relation_reproduces_its_order_invariants() {
        let (names, matrix) = fan_relation(4);
        let report = analyze_relation(names, matrix).unwrap();
        assert_eq!(report.width, 4);
        assert_eq!(report.least, Some(0));
        assert_eq!(report.greatest, Some(5));
        assert_eq!(report.hasse_edges.len(), 8);
    }

    #[test]
    fn three_chain_family_is_well_formed() {
        let family = three_chain_family().unwrap();
        assert_eq!(family.len(), 3);
        assert_eq!(family.space().size(), 2);
    }
}
