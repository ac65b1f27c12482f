//! Task: scan a discretized one-dimensional model for its curvature
//! constant using a seeded family of smooth test functions.

use imsg_core::diffusion::{curvature_1d, smooth_test_family};

use super::{expectation_row, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::{CliError, CliResult};

const DEFAULT_BUMPS: usize = 50;
const DEFAULT_MARGIN: usize = 2;
const DEFAULT_TOL: f64 = 1e-2;

pub struct DiffusionBench;

impl TaskStrategy for DiffusionBench {
    fn kind(&self) -> &'static str {
        "diffusion-bench"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        let name = task.diffusion.as_deref().ok_or_else(|| {
            CliError::config(
                format!("{pointer}/diffusion"),
                "the diffusion-bench task needs a diffusion fixture",
            )
        })?;
        let spec = fixtures.diffusion(name, &format!("{pointer}/diffusion"))?;
        let margin = task.margin.unwrap_or(DEFAULT_MARGIN);
        if spec.size() <= 2 * margin + 1 {
            return Err(CliError::config(
                format!("{pointer}/margin"),
                format!(
                    "margin {margin} leaves no interior on {} nodes",
                    spec.size()
                ),
            ));
        }
        if task.bumps == Some(0) {
            return Err(CliError::config(
                format!("{pointer}/bumps"),
                "the test family needs at least one bump",
            ));
        }
        super::tolerance(task.tol, DEFAULT_TOL, pointer)?;
        Ok(())
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let name = task.diffusion.as_deref().unwrap_or_default();
        let spec = ctx.fixtures.diffusion(name, "/")?;
        let bumps = task.bumps.unwrap_or(DEFAULT_BUMPS);
        let margin = task.margin.unwrap_or(DEFAULT_MARGIN);
        let tol = super::tolerance(task.tol, DEFAULT_TOL, "/")?;
        let family = smooth_test_family(spec, ctx.seed, bumps);
        let scan = curvature_1d(spec, &family, margin)?;

        let mut checks = Vec::new();
        if let Some(row) = expectation_row("rho", scan.rho_estimate, task.expected_rho, tol) {
            checks.push(row);
        }
        if let Some(analytic) = scan.analytic_rho {
            checks.push(serde_json::json!({
                "check": "analytic_agreement",
                "computed": scan.rho_estimate,
                "expected": analytic,
                "tolerance": tol,
                "pass": scan.agrees_with_analytic(tol),
            }));
        }
        let pass = super::rows_pass(&checks);

        let payload = serde_json::json!({
            "diffusion": name,
            "seed": ctx.seed,
            "bumps": bumps,
            "margin": margin,
            "scan": scan,
            "checks": checks,
            "pass": pass,
        });
        Ok(TaskOutput {
            pass,
            payload,
            mirrors: Vec::new(),
        })
    }
}
