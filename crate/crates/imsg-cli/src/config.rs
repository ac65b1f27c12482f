//! Experiment configuration: JSON schema, validation, and fixture
//! resolution. Every complaint about a config carries the JSON-pointer
//! location of the offending element.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use imsg_core::diffusion::{
    geometric_grid, graded_grid, heat_spec, laguerre_spec, ou_spec, quadratic_potential_spec,
    uniform_grid, Boundary, DiffusionSpec,
};
use imsg_core::fixtures::{find_fixture, reversible_corpus};
use imsg_core::generator::GeneratorMatrix;
use imsg_core::io::FixtureSpec;

use crate::error::{CliError, CliResult};
use crate::expr::CoeffExpr;
use crate::tasks;

/// Top-level config file layout.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Tolerance used when comparing action curves for the order.
    #[serde(default)]
    pub eps_order: Option<f64>,
    #[serde(default)]
    pub fixtures: RawFixtures,
    #[serde(default)]
    pub tasks: Vec<RawTask>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFixtures {
    #[serde(default)]
    pub generators: Vec<RawGenerator>,
    #[serde(default)]
    pub diffusions: Vec<RawDiffusion>,
    #[serde(default)]
    pub functionals: Vec<RawFunctional>,
}

/// A named rate matrix: bundled by name, a two-state shorthand, or explicit.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGenerator {
    pub name: String,
    #[serde(default)]
    pub bundled: Option<String>,
    /// `[up, down]` jump rates of a two-state chain.
    #[serde(default)]
    pub two_state: Option<[f64; 2]>,
    #[serde(default)]
    pub rates: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// A named one-dimensional model: bundled by name or grid + coefficients.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDiffusion {
    pub name: String,
    /// One of `ornstein_uhlenbeck`, `quadratic_potential`, `heat`,
    /// `laguerre`.
    #[serde(default)]
    pub bundled: Option<String>,
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Laguerre family parameter.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub grid: Option<RawGrid>,
    /// Second-order coefficient `a(x)`, as an expression in `x`.
    #[serde(default)]
    pub diffusion: Option<String>,
    /// First-order coefficient `b(x)`, as an expression in `x`.
    #[serde(default)]
    pub drift: Option<String>,
    /// `reflecting` (default) or `truncated`.
    #[serde(default)]
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    /// `uniform` (default), `geometric`, or `graded`.
    #[serde(default)]
    pub kind: Option<String>,
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    /// Where a graded grid switches from geometric to uniform spacing.
    #[serde(default)]
    pub knee: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFunctional {
    pub name: String,
    pub values: Vec<f64>,
}

/// One task descriptor. The `kind` decides which fields apply; the task
/// registry validates the combination.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTask {
    pub kind: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub functional: Option<String>,
    #[serde(default)]
    pub members: Option<Vec<String>>,
    #[serde(default)]
    pub payoff: Option<String>,
    #[serde(default)]
    pub relation: Option<RawRelation>,
    #[serde(default)]
    pub diffusion: Option<String>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Tolerance for comparing results against `expected_*` fields.
    #[serde(default)]
    pub expect_tol: Option<f64>,
    /// Dimension parameter of the curvature condition; omitted means
    /// dimension-free.
    #[serde(default)]
    pub dimension: Option<f64>,
    /// Claimed curvature for the gradient-bound check, overriding the
    /// computed constant.
    #[serde(default)]
    pub assert_rho: Option<f64>,
    #[serde(default)]
    pub expected_rho: Option<f64>,
    #[serde(default)]
    pub expected_limit: Option<f64>,
    #[serde(default)]
    pub expected_lower: Option<f64>,
    #[serde(default)]
    pub expected_upper: Option<f64>,
    #[serde(default)]
    pub expected_width: Option<usize>,
    #[serde(default)]
    pub expected_least: Option<String>,
    #[serde(default)]
    pub expected_greatest: Option<String>,
    /// Cap on the fitted-rate disagreement in the ergodicity task.
    #[serde(default)]
    pub max_rate_disagreement: Option<f64>,
    #[serde(default)]
    pub bumps: Option<usize>,
    #[serde(default)]
    pub margin: Option<usize>,
    /// Subset of catalog entries to run; omitted means all.
    #[serde(default)]
    pub entries: Option<Vec<String>>,
}

/// An explicit comparison matrix, or a bundled one by name.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRelation {
    /// `fan` builds the bottom / incomparable middles / top shape.
    #[serde(default)]
    pub bundled: Option<String>,
    /// Number of middle members of a bundled fan.
    #[serde(default)]
    pub middle: Option<usize>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
    /// Entries: `below`, `above`, `equal`, `incomparable` (or `<`, `>`,
    /// `=`, `?`).
    #[serde(default)]
    pub matrix: Option<Vec<Vec<String>>>,
}

/// Resolved, validated fixtures, keyed by name.
#[derive(Debug)]
pub struct FixtureSet {
    pub generators: BTreeMap<String, GeneratorMatrix>,
    pub diffusions: BTreeMap<String, DiffusionSpec>,
    pub functionals: BTreeMap<String, Vec<f64>>,
}

impl FixtureSet {
    pub fn generator(&self, name: &str, pointer: &str) -> CliResult<&GeneratorMatrix> {
        self.generators
            .get(name)
            .ok_or_else(|| CliError::config(pointer, format!("unknown generator fixture '{name}'")))
    }

    pub fn diffusion(&self, name: &str, pointer: &str) -> CliResult<&DiffusionSpec> {
        self.diffusions
            .get(name)
            .ok_or_else(|| CliError::config(pointer, format!("unknown diffusion fixture '{name}'")))
    }

    pub fn functional(&self, name: &str, pointer: &str) -> CliResult<&[f64]> {
        self.functionals
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| {
                CliError::config(pointer, format!("unknown functional fixture '{name}'"))
            })
    }
}

/// A validated experiment, ready to execute.
#[derive(Debug)]
pub struct Experiment {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub eps_order: Option<f64>,
    pub fixtures: FixtureSet,
    pub tasks: Vec<PlannedTask>,
}

#[derive(Debug)]
pub struct PlannedTask {
    pub index: usize,
    pub label: String,
    pub raw: RawTask,
}

/// Reads, parses, and validates a config file.
pub fn load(path: &Path) -> CliResult<Experiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut deserializer).map_err(|e| {
        CliError::config(pointer_of(e.path()), strip_location(&e.inner().to_string()))
    })?;
    validate(raw)
}

/// Converts a serde error path (`tasks[0].kind`) to a JSON pointer
/// (`/tasks/0/kind`).
fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{key}")),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Drops serde_json's trailing ` at line N column M` so messages stay
/// stable and pointer-oriented.
fn strip_location(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(pos) => message[..pos].to_string(),
        None => message.to_string(),
    }
}

fn validate(raw: RawConfig) -> CliResult<Experiment> {
    if let Some(eps) = raw.eps_order {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(CliError::config(
                "/eps_order",
                format!("must be a positive number, got {eps}"),
            ));
        }
    }
    let fixtures = resolve_fixtures(&raw.fixtures)?;
    let mut tasks = Vec::with_capacity(raw.tasks.len());
    for (index, task) in raw.tasks.iter().enumerate() {
        let pointer = format!("/tasks/{index}");
        let strategy = tasks::lookup(&task.kind).ok_or_else(|| {
            CliError::config(
                format!("{pointer}/kind"),
                format!(
                    "unknown task kind '{}' (known: {})",
                    task.kind,
                    tasks::known_kinds().join(", ")
                ),
            )
        })?;
        strategy.validate(task, &pointer, &fixtures)?;
        let label = match &task.label {
            Some(text) => slug(text),
            None => slug(&task.kind),
        };
        if label.is_empty() {
            return Err(CliError::config(
                format!("{pointer}/label"),
                "label has no usable characters",
            ));
        }
        tasks.push(PlannedTask {
            index,
            label,
            raw: task.clone(),
        });
    }
    Ok(Experiment {
        seed: raw.seed.unwrap_or(0),
        output_dir: raw.output_dir.map(PathBuf::from),
        eps_order: raw.eps_order,
        fixtures,
        tasks,
    })
}

/// File-name-safe version of a label.
pub fn slug(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

fn resolve_fixtures(raw: &RawFixtures) -> CliResult<FixtureSet> {
    let corpus = reversible_corpus();
    let mut generators = BTreeMap::new();
    for (i, g) in raw.generators.iter().enumerate() {
        let pointer = format!("/fixtures/generators/{i}");
        let given = [g.bundled.is_some(), g.two_state.is_some(), g.rates.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(CliError::config(
                &pointer,
                "give exactly one of 'bundled', 'two_state', or 'rates'",
            ));
        }
        let generator = if let Some(bundled) = &g.bundled {
            find_fixture(&corpus, bundled)
                .ok_or_else(|| {
                    CliError::config(
                        format!("{pointer}/bundled"),
                        format!("no bundled generator named '{bundled}'"),
                    )
                })?
                .generator
                .clone()
        } else if let Some([up, down]) = g.two_state {
            GeneratorMatrix::two_state(up, down).map_err(|e| {
                CliError::config(format!("{pointer}/two_state"), e.to_string())
            })?
        } else {
            let spec = FixtureSpec {
                name: g.name.clone(),
                description: String::new(),
                labels: g.labels.clone(),
                rates: g.rates.clone().unwrap_or_default(),
            };
            spec.into_fixture()
                .map_err(|e| CliError::config(format!("{pointer}/rates"), e.to_string()))?
                .generator
        };
        if generators.insert(g.name.clone(), generator).is_some() {
            return Err(CliError::config(
                format!("{pointer}/name"),
                format!("duplicate generator fixture '{}'", g.name),
            ));
        }
    }
    let mut diffusions = BTreeMap::new();
    for (i, d) in raw.diffusions.iter().enumerate() {
        let pointer = format!("/fixtures/diffusions/{i}");
        let spec = resolve_diffusion(d, &pointer)?;
        if diffusions.insert(d.name.clone(), spec).is_some() {
            return Err(CliError::config(
                format!("{pointer}/name"),
                format!("duplicate diffusion fixture '{}'", d.name),
            ));
        }
    }
    let mut functionals = BTreeMap::new();
    for (i, f) in raw.functionals.iter().enumerate() {
        let pointer = format!("/fixtures/functionals/{i}");
        if f.values.is_empty() {
            return Err(CliError::config(
                format!("{pointer}/values"),
                "functional has no values",
            ));
        }
        if let Some(bad) = f.values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::config(
                format!("{pointer}/values"),
                format!("non-finite value {bad}"),
            ));
        }
        if functionals.insert(f.name.clone(), f.values.clone()).is_some() {
            return Err(CliError::config(
                format!("{pointer}/name"),
                format!("duplicate functional fixture '{}'", f.name),
            ));
        }
    }
    Ok(FixtureSet {
        generators,
        diffusions,
        functionals,
    })
}

fn resolve_diffusion(d: &RawDiffusion, pointer: &str) -> CliResult<DiffusionSpec> {
    let boundary = match d.boundary.as_deref() {
        None | Some("reflecting") => Boundary::Reflecting,
        Some("truncated") => Boundary::Truncated,
        Some(other) => {
            return Err(CliError::config(
                format!("{pointer}/boundary"),
                format!("unknown boundary '{other}' (known: reflecting, truncated)"),
            ))
        }
    };
    if let Some(bundled) = &d.bundled {
        if d.grid.is_some() || d.diffusion.is_some() || d.drift.is_some() {
            return Err(CliError::config(
                pointer,
                "a bundled model does not take 'grid', 'diffusion', or 'drift'",
            ));
        }
        let nodes = d.nodes.unwrap_or(400);
        let spec = match bundled.as_str() {
            "ornstein_uhlenbeck" => ou_spec(nodes),
            "quadratic_potential" => quadratic_potential_spec(nodes),
            "heat" => heat_spec(nodes, boundary),
            "laguerre" => laguerre_spec(d.alpha.unwrap_or(1.0), nodes),
            other => {
                return Err(CliError::config(
                    format!("{pointer}/bundled"),
                    format!(
                        "no bundled model named '{other}' (known: ornstein_uhlenbeck, \
                         quadratic_potential, heat, laguerre)"
                    ),
                ))
            }
        };
        return spec.map_err(|e| CliError::config(pointer.to_string(), e.to_string()));
    }
    let grid_spec = d.grid.as_ref().ok_or_else(|| {
        CliError::config(pointer, "give either 'bundled' or a 'grid' with coefficients")
    })?;
    let grid = match grid_spec.kind.as_deref().unwrap_or("uniform") {
        "uniform" => uniform_grid(grid_spec.lo, grid_spec.hi, grid_spec.nodes),
        "geometric" => geometric_grid(grid_spec.lo, grid_spec.hi, grid_spec.nodes),
        "graded" => {
            let knee = grid_spec.knee.ok_or_else(|| {
                CliError::config(
                    format!("{pointer}/grid/knee"),
                    "a graded grid needs a 'knee'",
                )
            })?;
            graded_grid(grid_spec.lo, knee, grid_spec.hi, grid_spec.nodes)
        }
        other => {
            return Err(CliError::config(
                format!("{pointer}/grid/kind"),
                format!("unknown grid kind '{other}' (known: uniform, geometric, graded)"),
            ))
        }
    }
    .map_err(|e| CliError::config(format!("{pointer}/grid"), e.to_string()))?;
    let a_source = d.diffusion.as_deref().unwrap_or("1");
    let b_source = d.drift.as_deref().unwrap_or("0");
    let a = CoeffExpr::parse(a_source)
        .map_err(|e| CliError::config(format!("{pointer}/diffusion"), e))?;
    let b = CoeffExpr::parse(b_source).map_err(|e| CliError::config(format!("{pointer}/drift"), e))?;
    DiffusionSpec::new(grid, |x| a.eval(x), |x| b.eval(x), boundary).map_err(|e| {
        CliError::config(
            pointer.to_string(),
            format!("a(x) = {}, b(x) = {}: {e}", a.source(), b.source()),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "imsg_cli_config_{}_{}",
            std::process::id(),
            COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        path
    }

    static COUNTER: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

    #[test]
    fn minimal_config_loads_with_defaults() {
        let path = write_config(r#"{ "tasks": [] }"#);
        let experiment = load(&path).unwrap();
        assert_eq!(experiment.seed, 0);
        assert!(experiment.tasks.is_empty());
    }

    #[test]
    fn unknown_fields_are_located_by_pointer() {
        let path = write_config(r#"{ "tasks": [], "bogus": 1 }"#);
        let err = load(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("bogus"), "{text}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_fixture_references_name_the_fixture_and_task() {
        let path = write_config(
            r#"{ "tasks": [ { "kind": "curvature", "generator": "ghost" } ] }"#,
        );
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("/tasks/0/generator"), "{err}");
        assert!(err.contains("ghost"), "{err}");
    }

    #[test]
    fn wrong_types_are_located_by_pointer() {
        let path = write_config(r#"{ "tasks": [ { "kind": 3 } ] }"#);
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("/tasks/0/kind"), "{err}");
    }

    #[test]
    fn bundled_generators_and_two_state_shorthand_resolve() {
        let path = write_config(
            r#"{
                "fixtures": { "generators": [
                    { "name": "a", "bundled": "pair_balanced" },
                    { "name": "b", "two_state": [1.0, 3.0] },
                    { "name": "c", "rates": [[-1.0, 1.0], [2.0, -2.0]] }
                ] },
                "tasks": []
            }"#,
        );
        let experiment = load(&path).unwrap();
        assert_eq!(experiment.fixtures.generators.len(), 3);
        assert_eq!(
            experiment.fixtures.generators["b"].rate(0, 1),
            1.0
        );
    }

    #[test]
    fn custom_diffusions_parse_their_coefficients() {
        let path = write_config(
            r#"{
                "fixtures": { "diffusions": [ {
                    "name": "custom",
                    "grid": { "lo": -2.0, "hi": 2.0, "nodes": 32 },
                    "diffusion": "1",
                    "drift": "-x^3"
                } ] },
                "tasks": []
            }"#,
        );
        let experiment = load(&path).unwrap();
        let spec = &experiment.fixtures.diffusions["custom"];
        assert_eq!(spec.size(), 32);
        let mid = spec.grid().iter().position(|&x| x > 0.9).unwrap();
        let x = spec.grid()[mid];
        assert!((spec.coeff_b()[mid] + x * x * x).abs() < 1e-12);
    }

    #[test]
    fn bad_coefficient_expressions_point_at_their_field() {
        let path = write_config(
            r#"{
                "fixtures": { "diffusions": [ {
                    "name": "broken",
                    "grid": { "lo": 0.0, "hi": 1.0, "nodes": 20 },
                    "drift": "x +"
                } ] },
                "tasks": []
            }"#,
        );
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("/fixtures/diffusions/0/drift"), "{err}");
    }

    #[test]
    fn ellipticity_violations_are_config_errors() {
        let path = write_config(
            r#"{
                "fixtures": { "diffusions": [ {
                    "name": "degenerate",
                    "grid": { "lo": -1.0, "hi": 1.0, "nodes": 20 },
                    "diffusion": "x"
                } ] },
                "tasks": []
            }"#,
        );
        let err = load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn slugs_keep_word_characters_only() {
        assert_eq!(slug("Three-Chain Sandwich"), "three-chain_sandwich");
        assert_eq!(slug("__x__"), "x");
    }
}
