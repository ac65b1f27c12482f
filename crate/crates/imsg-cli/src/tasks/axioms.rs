//! Task: verify the defining semigroup properties of one generator's
//! transition family, plus invariance of its stationary measure.

use imsg_core::semigroup::{check_invariance, check_semigroup_axioms, invariant_measure};
use imsg_core::state::Functional;

use super::{generator_for, time_grid, tolerance, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::CliResult;

const DEFAULT_TIMES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const DEFAULT_TOL: f64 = 1e-8;

pub struct Axioms;

impl TaskStrategy for Axioms {
    fn kind(&self) -> &'static str {
        "axioms"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        generator_for(task, pointer, fixtures)?;
        time_grid(&task.times, &DEFAULT_TIMES, pointer)?;
        tolerance(task.tol, DEFAULT_TOL, pointer)?;
        Ok(())
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let l = generator_for(task, "/", ctx.fixtures)?;
        let times = time_grid(&task.times, &DEFAULT_TIMES, "/")?;
        let tol = tolerance(task.tol, DEFAULT_TOL, "/")?;
        let axioms = check_semigroup_axioms(l, &times, tol)?;
        let mu = invariant_measure(l)?;
        // A ramp distinguishes every state, so invariance is exercised on a
        // functional with full support.
        let ramp = Functional::new(
            l.states().clone(),
            (0..l.size()).map(|i| i as f64).collect(),
        )?;
        let invariance = check_invariance(l, &mu, &ramp, &times, tol)?;
        let pass = axioms.pass && invariance.pass;
        let payload = serde_json::json!({
            "generator": task.generator,
            "axioms": axioms,
            "invariance": invariance,
            "pass": pass,
        });
        Ok(TaskOutput {
            pass,
            payload,
            mirrors: Vec::new(),
        })
    }
}
