//! Task registry: each experiment step is a strategy that validates its
//! descriptor up front and executes against the resolved fixtures.

pub mod axioms;
pub mod curvature;
pub mod diffusion;
pub mod ergodicity;
pub mod examples;
pub mod order;
pub mod sandwich;

use imsg_core::generator::GeneratorMatrix;
use imsg_core::poset::ImpreciseFamily;
use imsg_core::state::Functional;

use crate::config::{FixtureSet, RawTask};
use crate::error::{CliError, CliResult};

/// Inputs available to a running task.
pub struct RunContext<'a> {
    pub fixtures: &'a FixtureSet,
    pub seed: u64,
    pub eps_order: Option<f64>,
}

/// What a finished task hands to the report writer.
pub struct TaskOutput {
    pub pass: bool,
    pub payload: serde_json::Value,
    /// Extra tabular views, written next to the JSON report with the given
    /// file extension.
    pub mirrors: Vec<(String, String)>,
}

/// One kind of experiment step.
pub trait TaskStrategy: Sync {
    fn kind(&self) -> &'static str;

    /// Schema and reference checking; every pointer-accurate complaint about
    /// a task descriptor comes from here.
    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()>;

    /// Runs the step. Descriptor problems were caught by `validate`, so
    /// failures here are numerical.
    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput>;
}

static REGISTRY: [&dyn TaskStrategy; 7] = [
    &axioms::Axioms,
    &curvature::Curvature,
    &order::Order,
    &ergodicity::Ergodicity,
    &sandwich::Sandwich,
    &diffusion::DiffusionBench,
    &examples::Examples,
];

pub fn lookup(kind: &str) -> Option<&'static dyn TaskStrategy> {
    REGISTRY.iter().copied().find(|s| s.kind() == kind)
}

pub fn known_kinds() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.kind()).collect()
}

/// Extracts the task's `generator` reference, complaining at
/// `<pointer>/generator`.
pub(crate) fn generator_for<'a>(
    task: &RawTask,
    pointer: &str,
    fixtures: &'a FixtureSet,
) -> CliResult<&'a GeneratorMatrix> {
    let name = task.generator.as_deref().ok_or_else(|| {
        CliError::config(
            format!("{pointer}/generator"),
            format!("the {} task needs a generator fixture", task.kind),
        )
    })?;
    fixtures.generator(name, &format!("{pointer}/generator"))
}

/// Binds a named functional fixture to a generator's state space.
pub(crate) fn functional_on(
    l: &GeneratorMatrix,
    values: &[f64],
    name: &str,
    pointer: &str,
) -> CliResult<Functional> {
    if values.len() != l.size() {
        return Err(CliError::config(
            pointer,
            format!(
                "functional '{name}' has {} values but the chain has {} states",
                values.len(),
                l.size()
            ),
        ));
    }
    Functional::new(l.states().clone(), values.to_vec()).map_err(CliError::from)
}

/// Builds the member family shared by the order and sandwich tasks from
/// `members` + `payoff`.
pub(crate) fn family_for(
    task: &RawTask,
    pointer: &str,
    fixtures: &FixtureSet,
    eps_order: Option<f64>,
) -> CliResult<ImpreciseFamily> {
    let members = task.members.as_ref().ok_or_else(|| {
        CliError::config(
            format!("{pointer}/members"),
            format!("the {} task needs a list of generator fixtures", task.kind),
        )
    })?;
    if members.is_empty() {
        return Err(CliError::config(
            format!("{pointer}/members"),
            "the member list is empty",
        ));
    }
    let payoff_name = task.payoff.as_deref().ok_or_else(|| {
        CliError::config(
            format!("{pointer}/payoff"),
            format!("the {} task needs a payoff functional fixture", task.kind),
        )
    })?;
    let payoff_values = fixtures.functional(payoff_name, &format!("{pointer}/payoff"))?;
    let mut pairs = Vec::with_capacity(members.len());
    for (i, name) in members.iter().enumerate() {
        let l = fixtures.generator(name, &format!("{pointer}/members/{i}"))?;
        if l.size() != payoff_values.len() {
            return Err(CliError::config(
                format!("{pointer}/members/{i}"),
                format!(
                    "member '{name}' has {} states but payoff '{payoff_name}' has {} values",
                    l.size(),
                    payoff_values.len()
                ),
            ));
        }
        pairs.push((name.clone(), l.clone()));
    }
    let space = pairs[0].1.states().clone();
    let payoff = Functional::new(space, payoff_values.to_vec())?;
    let family = ImpreciseFamily::new(pairs, payoff)?;
    match eps_order {
        Some(eps) => Ok(family.with_eps_order(eps)?),
        None => Ok(family),
    }
}

/// Positive-tolerance field with a default.
pub(crate) fn tolerance(value: Option<f64>, default: f64, pointer: &str) -> CliResult<f64> {
    let tol = value.unwrap_or(default);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::config(
            format!("{pointer}/tol"),
            format!("tolerance must be a positive number, got {tol}"),
        ));
    }
    Ok(tol)
}

/// Time-grid field with a default; entries must be finite and nonnegative.
pub(crate) fn time_grid(value: &Option<Vec<f64>>, default: &[f64], pointer: &str) -> CliResult<Vec<f64>> {
    let times = match value {
        Some(list) => list.clone(),
        None => default.to_vec(),
    };
    if times.is_empty() {
        return Err(CliError::config(
            format!("{pointer}/times"),
            "the time grid is empty",
        ));
    }
    if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::config(
            format!("{pointer}/times"),
            format!("times must be finite and nonnegative, got {bad}"),
        ));
    }
    Ok(times)
}

/// `|computed - expected| <= tol` rendered as a named check row.
pub(crate) fn expectation_row(
    name: &str,
    computed: f64,
    expected: Option<f64>,
    tol: f64,
) -> Option<serde_json::Value> {
    let expected = expected?;
    let deviation = (computed - expected).abs();
    Some(serde_json::json!({
        "check": name,
        "computed": computed,
        "expected": expected,
        "tolerance": tol,
        "deviation": deviation,
        "pass": deviation <= tol,
    }))
}

/// Folds check rows into an overall verdict.
pub(crate) fn rows_pass(rows: &[serde_json::Value]) -> bool {
    rows.iter()
        .all(|row| row.get("pass").and_then(|v| v.as_bool()).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_the_documented_kinds() {
        let kinds = known_kinds();
        for kind in [
            "axioms",
            "curvature",
            "order",
            "ergodicity",
            "sandwich",
            "diffusion-bench",
            "examples",
        ] {
            assert!(kinds.contains(&kind), "missing {kind}");
            assert_eq!(lookup(kind).unwrap().kind(), kind);
        }
        assert!(lookup("nonsense").is_none());
    }
}
