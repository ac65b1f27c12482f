//! Task: compute the order structure of a collection — either a family of
//! generators compared through their action on a payoff, or an explicit
//! comparison matrix — and report width, extremes, and covering edges.

use imsg_core::fixtures::fan_relation;
use imsg_core::io::relation_csv;
use imsg_core::poset::{analyze_relation, order_report, Comparison, OrderReport};

use super::{family_for, RunContext, TaskOutput, TaskStrategy};
use crate::config::{FixtureSet, RawRelation, RawTask};
use crate::error::{CliError, CliResult};

pub struct Order;

impl TaskStrategy for Order {
    fn kind(&self) -> &'static str {
        "order"
    }

    fn validate(&self, task: &RawTask, pointer: &str, fixtures: &FixtureSet) -> CliResult<()> {
        match (&task.relation, &task.members) {
            (Some(relation), None) => {
                // Building the report is cheap and validates the matrix
                // (diagonal, symmetry, transitivity) exactly as the run will.
                relation_report(relation, pointer)?;
                Ok(())
            }
            (None, Some(_)) => {
                family_for(task, pointer, fixtures, None)?;
                Ok(())
            }
            (Some(_), Some(_)) => Err(CliError::config(
                pointer,
                "give either 'members' or 'relation', not both",
            )),
            (None, None) => Err(CliError::config(
                pointer,
                "the order task needs 'members' + 'payoff', or a 'relation'",
            )),
        }
    }

    fn execute(&self, task: &RawTask, ctx: &RunContext) -> CliResult<TaskOutput> {
        let report = match &task.relation {
            Some(relation) => relation_report(relation, "/")?,
            None => {
                let family = family_for(task, "/", ctx.fixtures, ctx.eps_order)?;
                order_report(&family)?
            }
        };

        let mut checks = Vec::new();
        if let Some(expected) = task.expected_width {
            checks.push(serde_json::json!({
                "check": "width",
                "computed": report.width,
                "expected": expected,
                "pass": report.width == expected,
            }));
        }
        if let Some(expected) = &task.expected_least {
            let found = report.least.map(|i| report.names[i].clone());
            checks.push(extreme_row("least", found, expected));
        }
        if let Some(expected) = &task.expected_greatest {
            let found = report.greatest.map(|i| report.names[i].clone());
            checks.push(extreme_row("greatest", found, expected));
        }
        let pass = super::rows_pass(&checks);

        let csv = relation_csv(&report);
        // The report's own fields stay at the top level so a saved file can
        // be fed straight back into the diagram exporter.
        let mut payload = serde_json::to_value(&report).map_err(to_core)?;
        if let serde_json::Value::Object(map) = &mut payload {
            map.insert("checks".to_string(), serde_json::Value::Array(checks));
            map.insert("pass".to_string(), serde_json::Value::Bool(pass));
        }
        Ok(TaskOutput {
            pass,
            payload,
            mirrors: vec![("csv".to_string(), csv)],
        })
    }
}

fn to_core(e: serde_json::Error) -> CliError {
    CliError::Core(imsg_core::Error::Io(format!("serializing report: {e}")))
}

fn extreme_row(name: &str, found: Option<String>, expected: &str) -> serde_json::Value {
    let pass = found.as_deref() == Some(expected);
    serde_json::json!({
        "check": name,
        "computed": found,
        "expected": expected,
        "pass": pass,
    })
}

/// Builds an order report from a bundled or explicit comparison matrix.
fn relation_report(relation: &RawRelation, pointer: &str) -> CliResult<OrderReport> {
    if let Some(bundled) = &relation.bundled {
        if relation.names.is_some() || relation.matrix.is_some() {
            return Err(CliError::config(
                format!("{pointer}/relation"),
                "a bundled relation does not take 'names' or 'matrix'",
            ));
        }
        return match bundled.as_str() {
            "fan" => {
                let middle = relation.middle.unwrap_or(4);
                if middle == 0 {
                    return Err(CliError::config(
                        format!("{pointer}/relation/middle"),
                        "a fan needs at least one middle member",
                    ));
                }
                let (names, matrix) = fan_relation(middle);
                analyze_relation(names, matrix).map_err(CliError::from)
            }
            other => Err(CliError::config(
                format!("{pointer}/relation/bundled"),
                format!("no bundled relation named '{other}' (known: fan)"),
            )),
        };
    }
    let names = relation.names.clone().ok_or_else(|| {
        CliError::config(
            format!("{pointer}/relation/names"),
            "an explicit relation needs member names",
        )
    })?;
    let rows = relation.matrix.as_ref().ok_or_else(|| {
        CliError::config(
            format!("{pointer}/relation/matrix"),
            "an explicit relation needs a comparison matrix",
        )
    })?;
    if rows.len() != names.len() {
        return Err(CliError::config(
            format!("{pointer}/relation/matrix"),
            format!("{} rows for {} names", rows.len(), names.len()),
        ));
    }
    let mut matrix = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(CliError::config(
                format!("{pointer}/relation/matrix/{i}"),
                format!("{} entries for {} names", row.len(), names.len()),
            ));
        }
        let mut parsed = Vec::with_capacity(row.len());
        for (j, entry) in row.iter().enumerate() {
            let cmp = match entry.as_str() {
                "below" | "<" => Comparison::Below,
                "above" | ">" => Comparison::Above,
                "equal" | "=" => Comparison::Equal,
                "incomparable" | "?" => Comparison::Incomparable,
                other => {
                    return Err(CliError::config(
                        format!("{pointer}/relation/matrix/{i}/{j}"),
                        format!(
                            "unknown comparison '{other}' (known: below, above, equal, \
                             incomparable, <, >, =, ?)"
                        ),
                    ))
                }
            };
            parsed.push(cmp);
        }
        matrix.push(parsed);
    }
    analyze_relation(names, matrix).map_err(|e| {
        CliError::config(format!("{pointer}/relation/matrix"), e.to_string())
    })
}
