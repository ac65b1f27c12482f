//! Task: certify that every member's ergodic limit is bracketed by the
//! invariant means of the family's least and greatest members.

use imsg_core::ergodicity::check_sandwich;

use super::{expectation_row, family_for, tolerance, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::CliResult;

const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_EXPECT_TOL: f64 = 1e-6;

pub struct Sandwich;

impl TaskStrategy for Sandwich {
    fn kind(&self) -> &'static str {
        "sandwich"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        family_for(task, pointer, fixtures, None)?;
        tolerance(task.tol, DEFAULT_TOL, pointer)?;
        Ok(())
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let family = family_for(task, "/", ctx.fixtures, ctx.eps_order)?;
        let tol = tolerance(task.tol, DEFAULT_TOL, "/")?;
        let report = check_sandwich(&family, tol)?;

        let expect_tol = task.expect_tol.unwrap_or(DEFAULT_EXPECT_TOL);
        let mut checks = vec![serde_json::json!({
            "check": "bracketing",
            "pass": report.pass,
        })];
        if let Some(row) =
            expectation_row("lower_bound", report.lower_bound, task.expected_lower, expect_tol)
        {
            checks.push(row);
        }
        if let Some(row) =
            expectation_row("upper_bound", report.upper_bound, task.expected_upper, expect_tol)
        {
            checks.push(row);
        }
        let pass = super::rows_pass(&checks);

        let mut csv = String::from("member,limit\n");
        for (name, limit) in report.names.iter().zip(&report.limits) {
            csv.push_str(&format!("{name},{limit}\n"));
        }
        let payload = serde_json::json!({
            "members": task.members,
            "payoff": task.payoff,
            "sandwich": report,
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
