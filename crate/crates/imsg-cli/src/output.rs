//! Report writing. Task payloads and the summary are deterministic for a
//! fixed config and seed; wall-clock facts are quarantined in
//! `run_meta.json` so reruns stay byte-identical.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CliError, CliResult};
use crate::tasks::TaskOutput;

/// A finished task, ready to be written.
pub struct TaskRecord {
    pub index: usize,
    pub kind: String,
    pub label: String,
    pub output: TaskOutput,
}

impl TaskRecord {
    /// `01_three_chain_sandwich` for the first task, and so on.
    pub fn stem(&self) -> String {
        format!("{:02}_{}", self.index + 1, self.label)
    }

    pub fn report_file(&self) -> String {
        format!("{}.json", self.stem())
    }
}

fn write(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn pretty(value: &serde_json::Value) -> String {
    // serde_json maps carry sorted keys, so this is deterministic.
    let mut text = serde_json::to_string_pretty(value).expect("JSON value always serializes");
    text.push('\n');
    text
}

/// Writes one JSON report per task (plus any tabular mirrors) and the
/// summary. Returns the summary path.
pub fn write_reports(dir: &Path, records: &[TaskRecord]) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut rows = Vec::with_capacity(records.len());
    for record in records {
        let envelope = serde_json::json!({
            "index": record.index,
            "kind": record.kind,
            "label": record.label,
            "pass": record.output.pass,
            "report": record.output.payload,
        });
        write(&dir.join(record.report_file()), &pretty(&envelope))?;
        for (extension, content) in &record.output.mirrors {
            write(&dir.join(format!("{}.{extension}", record.stem())), content)?;
        }
        rows.push(serde_json::json!({
            "index": record.index,
            "kind": record.kind,
            "label": record.label,
            "file": record.report_file(),
            "pass": record.output.pass,
        }));
    }
    let passed = records.iter().filter(|r| r.output.pass).count();
    let summary = serde_json::json!({
        "total": records.len(),
        "passed": passed,
        "failed": records.len() - passed,
        "pass": passed == records.len(),
        "tasks": rows,
    });
    let path = dir.join("summary.json");
    write(&path, &pretty(&summary))?;
    Ok(path)
}

/// Writes the timing/provenance sidecar. Everything volatile lives here.
pub fn write_meta(
    dir: &Path,
    config: &Path,
    seed: u64,
    parallel: usize,
    elapsed_ms: u128,
) -> CliResult<()> {
    let finished_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "config": config.display().to_string(),
        "seed": seed,
        "parallel": parallel,
        "elapsed_ms": elapsed_ms,
        "finished_unix_ms": finished_unix_ms,
    });
    write(&dir.join("run_meta.json"), &pretty(&meta))
}
