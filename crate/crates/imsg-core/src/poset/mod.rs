//! Pointwise order structure on collections of Markov semigroups.
//!
//! A collection of generators acting on one state space, together with a
//! fixed payoff functional, is partially ordered by comparing the curves
//! `t -> (P_t payoff)(x)`: one member sits below another when its curve never
//! rises above the other's at any state or time. This module classifies all
//! pairs on a shared time grid, validates the resulting relation, and
//! extracts its order invariants: equality classes, width (largest
//! antichain), covering diagram, least and greatest members, and the
//! lower/upper envelopes of the action. Conclusions about two-state members
//! are additionally certified over *all* positive times in exact rational
//! arithmetic.

mod exact;
mod relation;

pub use exact::{two_state_compare, EXPONENT_CAP};

use serde::{Deserialize, Serialize};

use crate::generator::GeneratorMatrix;
use crate::semigroup::{apply, check_semigroup_axioms, invariant_measure, transition_matrix};
use crate::spectral::symmetrized;
use crate::state::{require_same_space, Functional, ProbabilityMeasure, StateSpace};
use crate::{Error, Result};

/// Default slack below which action differences count as ties.
pub const DEFAULT_EPS_ORDER: f64 = 1e-9;
/// Default number of comparison times.
pub const DEFAULT_GRID_SIZE: usize = 64;
/// First comparison time.
pub const DEFAULT_GRID_START: f64 = 1e-3;
/// Last comparison time.
pub const DEFAULT_GRID_END: f64 = 50.0;
/// Largest collection `brute_force_width` will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 15;
/// Two invariant measures within this sup distance count as shared.
pub const SHARED_MEASURE_TOL: f64 = 1e-10;
/// Accuracy requested from the transition matrices behind each comparison.
const ACTION_EXPM_TOL: f64 = 1e-12;
/// Times on which certification re-checks the semigroup axioms.
const AXIOM_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Tolerance for the axiom re-check.
const AXIOM_TOL: f64 = 1e-8;

/// Outcome of comparing the action curves of two members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// The first member's curve never exceeds the second's and stays
    /// strictly under it somewhere.
    Below,
    /// Mirror image of `Below`.
    Above,
    /// The curves agree everywhere within the order tolerance.
    Equal,
    /// Each curve exceeds the other somewhere.
    Incomparable,
}

impl Comparison {
    /// The outcome seen from the other member's side.
    pub fn flip(self) -> Comparison {
        match self {
            Comparison::Below => Comparison::Above,
            Comparison::Above => Comparison::Below,
            other => other,
        }
    }

    /// Whether the first member sits at or below the second.
    pub fn at_most(self) -> bool {
        matches!(self, Comparison::Below | Comparison::Equal)
    }

    /// Whether the first member sits at or above the second.
    pub fn at_least(self) -> bool {
        matches!(self, Comparison::Above | Comparison::Equal)
    }
}

/// One named semigroup of the collection, paired with its invariant measure.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    name: String,
    generator: GeneratorMatrix,
    invariant: ProbabilityMeasure,
}

impl FamilyMember {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn invariant(&self) -> &ProbabilityMeasure {
        &self.invariant
    }
}

/// A finite collection of uniquely ergodic generators on one state space,
/// ordered through the action on a fixed payoff.
#[derive(Debug, Clone)]
pub struct ImpreciseFamily {
    members: Vec<FamilyMember>,
    payoff: Functional,
    time_grid: Vec<f64>,
    eps_order: f64,
}

impl ImpreciseFamily {
    /// Builds the collection, computing each member's invariant measure.
    ///
    /// All generators must share the payoff's state space, names must be
    /// distinct, and every member must be uniquely ergodic.
    pub fn new(members: Vec<(String, GeneratorMatrix)>, payoff: Functional) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let mut seen: Vec<&str> = Vec::new();
        for (name, _) in &members {
            if seen.contains(&name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
            seen.push(name);
        }
        let mut built = Vec::with_capacity(members.len());
        for (name, generator) in members {
            require_same_space(generator.states(), payoff.space(), "family construction")?;
            let invariant = invariant_measure(&generator)?;
            built.push(FamilyMember {
                name,
                generator,
                invariant,
            });
        }
        Ok(ImpreciseFamily {
            members: built,
            payoff,
            time_grid: Self::default_time_grid(),
            eps_order: DEFAULT_EPS_ORDER,
        })
    }

    /// Geometric grid of comparison times covering transient and stationary
    /// behaviour alike.
    pub fn default_time_grid() -> Vec<f64> {
        let k = DEFAULT_GRID_SIZE;
        let ratio = DEFAULT_GRID_END / DEFAULT_GRID_START;
        (0..k)
            .map(|i| DEFAULT_GRID_START * ratio.powf(i as f64 / (k - 1) as f64))
            .collect()
    }

    /// Replaces the comparison times; they must be finite, positive, and
    /// strictly increasing.
    pub fn with_time_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidGrid("time grid is empty".into()));
        }
        if !grid[0].is_finite() || grid[0] <= 0.0 {
            return Err(Error::InvalidGrid(
                "comparison times must be positive and finite".into(),
            ));
        }
        for pair in grid.windows(2) {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::InvalidGrid(
                    "comparison times must increase strictly".into(),
                ));
            }
        }
        self.time_grid = grid;
        Ok(self)
    }

    /// Replaces the tie tolerance.
    pub fn with_eps_order(mut self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::OutOfDomain {
                context: "order tolerance",
                value: eps,
            });
        }
        self.eps_order = eps;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, index: usize) -> Result<&FamilyMember> {
        self.members.get(index).ok_or(Error::OutOfDomain {
            context: "member index",
            value: index as f64,
        })
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn names(&self) -> Vec<String> {
        self.members.iter().map(|m| m.name.clone()).collect()
    }

    pub fn payoff(&self) -> &Functional {
        &self.payoff
    }

    pub fn space(&self) -> &StateSpace {
        self.payoff.space()
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn eps_order(&self) -> f64 {
        self.eps_order
    }

    /// The payoff evolved to time `t` under one member's semigroup.
    pub fn action_at(&self, index: usize, t: f64) -> Result<Functional> {
        let member = self.member(index)?;
        let p = transition_matrix(member.generator(), t, ACTION_EXPM_TOL)?;
        apply(&p, &self.payoff)
    }

    /// Action curves of one member over the whole time grid.
    fn curve(&self, index: usize) -> Result<Vec<Functional>> {
        self.time_grid
            .iter()
            .map(|&t| self.action_at(index, t))
            .collect()
    }
}

fn classify_curves(a: &[Functional], b: &[Functional], eps: f64) -> Comparison {
    let mut exceeds_up = false;
    let mut exceeds_down = false;
    for (fa, fb) in a.iter().zip(b) {
        for x in 0..fa.len() {
            let d = fb.value(x) - fa.value(x);
            if d > eps {
                exceeds_up = true;
            }
            if d < -eps {
                exceeds_down = true;
            }
        }
    }
    match (exceeds_up, exceeds_down) {
        (false, false) => Comparison::Equal,
        (true, false) => Comparison::Below,
        (false, true) => Comparison::Above,
        (true, true) => Comparison::Incomparable,
    }
}

/// Grid comparison of a single pair, cross-checked against the exact oracle
/// whenever both members are two-state with commensurable rates.
fn compare_curves(
    family: &ImpreciseFamily,
    i: usize,
    j: usize,
    curve_i: &[Functional],
    curve_j: &[Functional],
) -> Result<(Comparison, bool)> {
    let grid = classify_curves(curve_i, curve_j, family.eps_order);
    if family.space().size() != 2 {
        return Ok((grid, false));
    }
    let exact = two_state_compare(
        family.member(i)?.generator(),
        family.member(j)?.generator(),
        family.payoff(),
        family.eps_order,
    )?;
    match exact {
        None => Ok((grid, false)),
        Some(verdict) if verdict == grid => Ok((grid, true)),
        Some(verdict) => Err(Error::Numerical(format!(
            "grid comparison of {} and {} found {:?} but the exact oracle proves {:?} over all times; refine the time grid",
            family.member(i)?.name(),
            family.member(j)?.name(),
            grid,
            verdict
        ))),
    }
}

/// Compares two members by index.
pub fn compare(family: &ImpreciseFamily, i: usize, j: usize) -> Result<Comparison> {
    let curve_i = family.curve(i)?;
    let curve_j = family.curve(j)?;
    compare_curves(family, i, j, &curve_i, &curve_j).map(|(cmp, _)| cmp)
}

fn pairwise_relation(family: &ImpreciseFamily) -> Result<(Vec<Vec<Comparison>>, usize, usize)> {
    let n = family.len();
    let curves: Vec<Vec<Functional>> = (0..n).map(|i| family.curve(i)).collect::<Result<_>>()?;
    let mut matrix = vec![vec![Comparison::Equal; n]; n];
    let mut certified = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let (cmp, exact) = compare_curves(family, i, j, &curves[i], &curves[j])?;
            matrix[i][j] = cmp;
            matrix[j][i] = cmp.flip();
            total += 1;
            if exact {
                certified += 1;
            }
        }
    }
    Ok((matrix, certified, total))
}

/// Order invariants of a collection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    /// Member names, aligned with `relation` indices.
    pub names: Vec<String>,
    /// Full pairwise comparison matrix.
    pub relation: Vec<Vec<Comparison>>,
    /// Equality classes as member-index lists.
    pub classes: Vec<Vec<usize>>,
    /// Size of the largest antichain.
    pub width: usize,
    /// One maximum antichain, as representative member indices.
    pub max_antichain: Vec<usize>,
    /// Representative index of the class below every other class, if any.
    pub least: Option<usize>,
    /// Representative index of the class above every other class, if any.
    pub greatest: Option<usize>,
    /// Covering pairs `(lower, upper)` between class representatives.
    pub hasse_edges: Vec<(usize, usize)>,
    /// Pairs whose conclusion the exact oracle confirmed.
    pub certified_pairs: usize,
    /// Total distinct pairs.
    pub total_pairs: usize,
}

impl OrderReport {
    /// Whether the members form a single chain.
    pub fn is_total_order(&self) -> bool {
        self.width <= 1
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }
}

fn assemble_report(
    names: Vec<String>,
    matrix: Vec<Vec<Comparison>>,
    certified_pairs: usize,
    total_pairs: usize,
) -> Result<OrderReport> {
    let quotient = relation::build_quotient(&names, &matrix)?;
    let (width, antichain_classes) = relation::width_and_antichain(&quotient.below)?;
    let c = quotient.classes.len();
    let least = (0..c)
        .find(|&a| (0..c).all(|b| b == a || quotient.below[a][b]))
        .map(|a| quotient.classes[a][0]);
    let greatest = (0..c)
        .find(|&a| (0..c).all(|b| b == a || quotient.below[b][a]))
        .map(|a| quotient.classes[a][0]);
    let hasse_edges = relation::covering_edges(&quotient.below)
        .into_iter()
        .map(|(a, b)| (quotient.classes[a][0], quotient.classes[b][0]))
        .collect();
    Ok(OrderReport {
        names,
        relation: matrix,
        classes: quotient.classes,
        width,
        max_antichain: antichain_classes
            .into_iter()
            .map(|a| quotient.class_of.iter().position(|&ca| ca == a).expect("class is nonempty"))
            .collect(),
        least,
        greatest,
        hasse_edges,
        certified_pairs,
        total_pairs,
    })
}

/// Full order analysis of a collection of semigroups.
pub fn order_report(family: &ImpreciseFamily) -> Result<OrderReport> {
    let (matrix, certified, total) = pairwise_relation(family)?;
    assemble_report(family.names(), matrix, certified, total)
}

/// Order analysis of an explicitly given comparison matrix.
///
/// Lets abstract relation fixtures reuse the quotient, width, and covering
/// machinery without constructing semigroups.
pub fn analyze_relation(
    names: Vec<String>,
    matrix: Vec<Vec<Comparison>>,
) -> Result<OrderReport> {
    if names.len() != matrix.len() {
        return Err(Error::DimensionMismatch {
            context: "relation analysis names",
            expected: matrix.len(),
            got: names.len(),
        });
    }
    let total = names.len() * names.len().saturating_sub(1) / 2;
    assemble_report(names, matrix, 0, total)
}

/// Width by exhaustive subset enumeration; the independent check on the
/// matching-based computation. Limited to small collections.
pub fn brute_force_width(relation: &[Vec<Comparison>]) -> Result<usize> {
    let n = relation.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best = 0usize;
    for mask in 1u32..(1u32 << n) {
        let picked: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let antichain = picked.iter().enumerate().all(|(pos, &i)| {
            picked[(pos + 1)..]
                .iter()
                .all(|&j| relation[i][j] == Comparison::Incomparable)
        });
        if antichain {
            best = best.max(picked.len());
        }
    }
    Ok(best)
}

/// Whether a subset admits common upper and lower bounds inside itself.
#[derive(Debug, Clone, Serialize)]
pub struct DirectednessReport {
    /// Every pair has an upper bound in the subset.
    pub upward: bool,
    /// Every pair has a lower bound in the subset.
    pub downward: bool,
    /// A pair without an upper bound, if any.
    pub failing_up: Option<(usize, usize)>,
    /// A pair without a lower bound, if any.
    pub failing_down: Option<(usize, usize)>,
}

/// Checks directedness of a member subset under an already-computed relation.
pub fn directedness_check(
    relation: &[Vec<Comparison>],
    subset: &[usize],
) -> Result<DirectednessReport> {
    let n = relation.len();
    for &i in subset {
        if i >= n {
            return Err(Error::OutOfDomain {
                context: "subset member index",
                value: i as f64,
            });
        }
    }
    let mut failing_up = None;
    let mut failing_down = None;
    for (pos, &i) in subset.iter().enumerate() {
        for &j in &subset[pos..] {
            let has_upper = subset
                .iter()
                .any(|&k| relation[i][k].at_most() && relation[j][k].at_most());
            if !has_upper && failing_up.is_none() {
                failing_up = Some((i, j));
            }
            let has_lower = subset
                .iter()
                .any(|&k| relation[i][k].at_least() && relation[j][k].at_least());
            if !has_lower && failing_down.is_none() {
                failing_down = Some((i, j));
            }
        }
    }
    Ok(DirectednessReport {
        upward: failing_up.is_none(),
        downward: failing_down.is_none(),
        failing_up,
        failing_down,
    })
}

/// Certificate that a collection behaves as a well-formed ordered family of
/// Markov semigroups: every member passes the semigroup axioms, the width is
/// finite, and least and greatest members exist.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyCertificate {
    /// Axiom verdict per member, aligned with family order.
    pub member_axioms: Vec<bool>,
    pub width: usize,
    pub least: Option<String>,
    pub greatest: Option<String>,
    /// Overall verdict.
    pub certified: bool,
    /// A maximum antichain; for a negative certificate missing its extremes,
    /// this is the obstruction witness.
    pub witness_antichain: Vec<String>,
    /// Human-readable explanation when `certified` is false.
    pub reason: Option<String>,
}

/// Certifies a collection, or explains why it fails.
pub fn imsg_certify(family: &ImpreciseFamily) -> Result<FamilyCertificate> {
    let report = order_report(family)?;
    let mut member_axioms = Vec::with_capacity(family.len());
    for member in family.members() {
        let axioms = check_semigroup_axioms(member.generator(), &AXIOM_GRID, AXIOM_TOL)?;
        member_axioms.push(axioms.pass);
    }
    let witness_antichain: Vec<String> = report
        .max_antichain
        .iter()
        .map(|&i| report.names[i].clone())
        .collect();
    let mut reasons = Vec::new();
    for (member, &ok) in family.members().iter().zip(&member_axioms) {
        if !ok {
            reasons.push(format!("member {} fails the semigroup axioms", member.name()));
        }
    }
    if report.least.is_none() {
        reasons.push("no least member".to_string());
    }
    if report.greatest.is_none() {
        reasons.push("no greatest member".to_string());
    }
    let certified = reasons.is_empty();
    Ok(FamilyCertificate {
        member_axioms,
        width: report.width,
        least: report.least.map(|i| report.names[i].clone()),
        greatest: report.greatest.map(|i| report.names[i].clone()),
        certified,
        witness_antichain,
        reason: if certified {
            None
        } else {
            Some(reasons.join("; "))
        },
    })
}

/// Pointwise lower and upper envelopes of the action at one time.
///
/// When an order report with a least (greatest) member is supplied, the
/// envelope is verified to coincide with that member's action within the
/// order tolerance.
pub fn lower_upper_prevision(
    family: &ImpreciseFamily,
    t: f64,
    report: Option<&OrderReport>,
) -> Result<(Functional, Functional)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::OutOfDomain {
            context: "prevision time",
            value: t,
        });
    }
    let actions: Vec<Functional> = (0..family.len())
        .map(|i| family.action_at(i, t))
        .collect::<Result<_>>()?;
    let n = family.space().size();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for action in &actions {
        for x in 0..n {
            lo[x] = lo[x].min(action.value(x));
            hi[x] = hi[x].max(action.value(x));
        }
    }
    let lower = Functional::new(family.space().clone(), lo)?;
    let upper = Functional::new(family.space().clone(), hi)?;
    if let Some(report) = report {
        if let Some(least) = report.least {
            let dev = sup_diff(&lower, &actions[least]);
            if dev > family.eps_order {
                return Err(Error::Numerical(format!(
                    "lower envelope deviates from the least member {} by {dev:.3e}",
                    report.names[least]
                )));
            }
        }
        if let Some(greatest) = report.greatest {
            let dev = sup_diff(&upper, &actions[greatest]);
            if dev > family.eps_order {
                return Err(Error::Numerical(format!(
                    "upper envelope deviates from the greatest member {} by {dev:.3e}",
                    report.names[greatest]
                )));
            }
        }
    }
    Ok((lower, upper))
}

fn sup_diff(a: &Functional, b: &Functional) -> f64 {
    (0..a.len())
        .map(|x| (a.value(x) - b.value(x)).abs())
        .fold(0.0, f64::max)
}

/// Outcome of the shared-invariant rigidity scan.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    /// All distinct pairs examined.
    pub checked_pairs: usize,
    /// Pairs that are both reversible and share an invariant measure.
    pub shared_reversible_pairs: usize,
    /// Shared-measure reversible pairs that nevertheless ordered strictly.
    pub violations: Vec<(String, String)>,
    pub pass: bool,
}

/// Scans the collection for the structural rigidity of reversible members:
/// two members reversible with respect to the same invariant measure can tie
/// or be incomparable, but never order strictly.
pub fn shared_invariant_rigidity(family: &ImpreciseFamily) -> Result<RigidityReport> {
    let (matrix, _, _) = pairwise_relation(family)?;
    let n = family.len();
    let reversible: Vec<bool> = family
        .members()
        .iter()
        .map(|m| symmetrized(m.generator(), m.invariant()).is_ok())
        .collect();
    let mut shared = 0usize;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            checked += 1;
            if !(reversible[i] && reversible[j]) {
                continue;
            }
            let dist = family.members[i]
                .invariant()
                .sup_distance(family.members[j].invariant())?;
            if dist > SHARED_MEASURE_TOL {
                continue;
            }
            shared += 1;
            if matches!(matrix[i][j], Comparison::Below | Comparison::Above) {
                violations.push((
                    family.members[i].name().to_string(),
                    family.members[j].name().to_string(),
                ));
            }
        }
    }
    Ok(RigidityReport {
        checked_pairs: checked,
        shared_reversible_pairs: shared,
        pass: violations.is_empty(),
        violations,
    })
}
