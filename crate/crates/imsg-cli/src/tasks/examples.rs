//! Task: recompute the bundled catalog of reference values — each a small
//! computation with an independently known answer — and compare every one
//! against its frozen expectation.

use imsg_core::catalog::catalog;

use super::{RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawTask};
use crate::error::{CliError, CliResult};

pub struct Examples;

impl TaskStrategy for Examples {
    fn kind(&self) -> &'static str {
        "examples"
    }

    fn validate(&self, task: &RawTask, pointer: &str, _fixtures: &FixtureSet) -> CliResult<()> {
        if let Some(entries) = &task.entries {
            let known = catalog();
            for (i, name) in entries.iter().enumerate() {
                if !known.iter().any(|e| e.name == name) {
                    return Err(CliError::config(
                        format!("{pointer}/entries/{i}"),
                        format!("no catalog entry named '{name}'"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn execute(&self, task: &RawTask, _ctx: &RunContext) -> CliResult<TaskOutput> {
        let entries = catalog();
        let mut rows = Vec::new();
        let mut csv = csv::Writer::from_writer(Vec::new());
        csv.write_record(["name", "computed", "expected", "tolerance", "deviation", "pass", "error"])
            .map_err(csv_err)?;
        let mut all_pass = true;
        for entry in &entries {
            if let Some(filter) = &task.entries {
                if !filter.iter().any(|n| n == entry.name) {
                    continue;
                }
            }
            match (entry.run)() {
                Ok(outcome) => {
                    let pass = outcome.pass();
                    all_pass &= pass;
                    rows.push(serde_json::json!({
                        "name": entry.name,
                        "description": entry.description,
                        "computed": outcome.computed,
                        "expected": outcome.expected,
                        "tolerance": outcome.tolerance,
                        "deviation": outcome.deviation(),
                        "pass": pass,
                    }));
                    csv.write_record([
                        entry.name,
                        &outcome.computed.to_string(),
                        &outcome.expected.to_string(),
                        &outcome.tolerance.to_string(),
                        &outcome.deviation().to_string(),
                        &pass.to_string(),
                        "",
                    ])
                    .map_err(csv_err)?;
                }
                Err(e) => {
                    all_pass = false;
                    rows.push(serde_json::json!({
                        "name": entry.name,
                        "description": entry.description,
                        "error": e.to_string(),
                        "pass": false,
                    }));
                    csv.write_record([entry.name, "", "", "", "", "false", &e.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        let table = csv.into_inner().map_err(|e| csv_err_str(e.to_string()))?;
        let table = String::from_utf8(table).map_err(|e| csv_err_str(e.to_string()))?;
        let payload = serde_json::json!({
            "entries": rows,
            "pass": all_pass,
        });
        Ok(TaskOutput {
            pass: all_pass,
            payload,
            mirrors: vec![("csv".to_string(), table)],
        })
    }
}

fn csv_err(e: csv::Error) -> CliError {
    csv_err_str(e.to_string())
}

fn csv_err_str(message: String) -> CliError {
    CliError::Core(imsg_core::Error::Io(format!("writing catalog table: {message}")))
}
