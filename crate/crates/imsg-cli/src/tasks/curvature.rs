//! Task: compute the curvature constant of a chain and verify the
//! gradient-commutation bound at a claimed (or the computed) constant.

use imsg_core::ergodicity::check_gradient_bound;
use imsg_core::gamma::{curvature, indicator_basis};
use imsg_core::state::Functional;

use super::{generator_for, time_grid, tolerance, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::{CliError, CliResult};

const DEFAULT_TIMES: [f64; 4] = [0.01, 0.05, 0.25, 1.0];
const DEFAULT_TOL: f64 = 1e-8;

pub struct Curvature;

impl TaskStrategy for Curvature {
    fn kind(&self) -> &'static str {
        "curvature"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        generator_for(task, pointer, fixtures)?;
        time_grid(&task.times, &DEFAULT_TIMES, pointer)?;
        tolerance(task.tol, DEFAULT_TOL, pointer)?;
        if let Some(dim) = task.dimension {
            if !(dim > 0.0) {
                return Err(CliError::config(
                    format!("{pointer}/dimension"),
                    format!("dimension must be positive, got {dim}"),
                ));
            }
        }
        if let Some(rho) = task.assert_rho {
            if !rho.is_finite() {
                return Err(CliError::config(
                    format!("{pointer}/assert_rho"),
                    format!("claimed curvature must be finite, got {rho}"),
                ));
            }
        }
        Ok(())
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let l = generator_for(task, "/", ctx.fixtures)?;
        let times = time_grid(&task.times, &DEFAULT_TIMES, "/")?;
        let tol = tolerance(task.tol, DEFAULT_TOL, "/")?;
        let dimension = task.dimension.unwrap_or(f64::INFINITY);
        let report = curvature(l, dimension)?;
        let computed = report.global_rho.value();
        let rho_checked = task.assert_rho.or(computed);

        let mut test_set: Vec<(String, Functional)> = indicator_basis(l)
            .into_iter()
            .enumerate()
            .map(|(i, f)| (format!("indicator_{i}"), f))
            .collect();
        if let Some(witness) = report.witness.clone() {
            test_set.push(("witness".to_string(), witness));
        }

        let mut rows = Vec::new();
        let mut worst: Option<(f64, serde_json::Value)> = None;
        let mut bound_pass = true;
        if let Some(rho) = rho_checked {
            for (name, f) in &test_set {
                let check = check_gradient_bound(l, f, rho, &times, tol)?;
                bound_pass &= check.pass;
                rows.push(serde_json::json!({
                    "functional": name,
                    "worst_violation": check.worst_violation,
                    "witness_time": check.witness_time,
                    "witness_state": check.witness_state,
                    "pass": check.pass,
                }));
                if worst
                    .as_ref()
                    .map(|(v, _)| check.worst_violation > *v)
                    .unwrap_or(true)
                {
                    worst = Some((
                        check.worst_violation,
                        serde_json::json!({
                            "functional": name,
                            "report": check,
                        }),
                    ));
                }
            }
        } else {
            bound_pass = false;
        }

        let pass = computed.is_some() && bound_pass;
        let payload = serde_json::json!({
            "generator": task.generator,
            "curvature": report,
            "rho_checked": rho_checked,
            "gradient_bound": rows,
            "worst_case": worst.map(|(_, v)| v),
            "pass": pass,
        });
        Ok(TaskOutput {
            pass,
            payload,
            mirrors: Vec::new(),
        })
    }
}
