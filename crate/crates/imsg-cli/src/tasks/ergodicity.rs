//! Task: follow one chain's action on a functional out to its ergodic
//! limit, fit the exponential decay rate, and compare with the spectral gap.

use imsg_core::ergodicity::check_ergodic_limit;
use imsg_core::io::curve_csv;

use super::{expectation_row, generator_for, tolerance, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::{CliError, CliResult};

const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_EXPECT_TOL: f64 = 1e-8;

pub struct Ergodicity;

impl TaskStrategy for Ergodicity {
    fn kind(&self) -> &'static str {
        "ergodicity"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        let l = generator_for(task, pointer, fixtures)?;
        let name = task.functional.as_deref().ok_or_else(|| {
            CliError::config(
                format!("{pointer}/functional"),
                "the ergodicity task needs a functional fixture",
            )
        })?;
        let values = fixtures.functional(name, &format!("{pointer}/functional"))?;
        super::functional_on(l, values, name, &format!("{pointer}/functional"))?;
        tolerance(task.tol, DEFAULT_TOL, pointer)?;
        Ok(())
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let l = generator_for(task, "/", ctx.fixtures)?;
        let name = task.functional.as_deref().unwrap_or_default();
        let values = ctx.fixtures.functional(name, "/")?;
        let f = super::functional_on(l, values, name, "/")?;
        let tol = tolerance(task.tol, DEFAULT_TOL, "/")?;
        let report = check_ergodic_limit(l, &f, tol)?;

        let mut checks = Vec::new();
        let expect_tol = task.expect_tol.unwrap_or(DEFAULT_EXPECT_TOL);
        checks.push(serde_json::json!({
            "check": "converged",
            "computed": report.final_error,
            "tolerance": tol,
            "pass": report.final_error <= tol,
        }));
        if let Some(row) = expectation_row("limit", report.limit, task.expected_limit, expect_tol)
        {
            checks.push(row);
        }
        if let Some(cap) = task.max_rate_disagreement {
            let agreement = report.rate_agreement;
            checks.push(serde_json::json!({
                "check": "rate_agreement",
                "computed": agreement,
                "tolerance": cap,
                "pass": agreement.map(|a| a <= cap).unwrap_or(false),
            }));
        }
        let pass = super::rows_pass(&checks);

        let csv = curve_csv("t,deviation", &report.decay);
        let payload = serde_json::json!({
            "generator": task.generator,
            "functional": name,
            "convergence": report,
            "checks": checks,
            "pass": pass,
        });
        Ok(TaskOutput {
            pass,
            payload,
            mirrors: vec![("csv".to_string(), csv)],
        })
    }
}
