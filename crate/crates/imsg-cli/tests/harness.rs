//! End-to-end tests driving the compiled binary exactly as a user would:
//! run configs, export diagrams, list fixtures, and check exit codes,
//! report layouts, and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

static COUNTER: AtomicUsize = AtomicUsize::new(0);

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_imsg")
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../experiments/reference_suite.json")
        .canonicalize()
        .expect("bundled config exists")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "imsg_harness_{tag}_{}_{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

/// Task reports are the `NN_*.json` files; the summary and metadata do not
/// count.
fn task_report_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|name| {
            name.ends_with(".json")
                && name.len() > 3
                && name.as_bytes()[0].is_ascii_digit()
                && name.as_bytes()[1].is_ascii_digit()
                && name.as_bytes()[2] == b'_'
        })
        .collect();
    names.sort();
    names
}

fn json_of(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reference_suite_passes_with_six_reports() {
    let out = scratch_dir("suite");
    let config = bundled_config();
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "42",
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let reports = task_report_files(&out);
    assert_eq!(reports.len(), 6, "reports: {reports:?}");

    let summary = json_of(&out.join("summary.json"));
    assert_eq!(summary["total"], 6);
    assert_eq!(summary["passed"], 6);
    assert_eq!(summary["failed"], 0);
    assert_eq!(summary["pass"], true);

    let text = stdout_of(&output);
    assert_eq!(text.matches(": PASS").count(), 6, "{text}");
    assert!(out.join("run_meta.json").is_file());

    // The sandwich report carries the certified envelope.
    let sandwich = json_of(&out.join("01_three_chain_sandwich.json"));
    assert_eq!(sandwich["report"]["sandwich"]["lower_bound"], 0.5);
    assert_eq!(sandwich["report"]["sandwich"]["upper_bound"], 0.75);

    // The order report records the documented shape.
    let order = json_of(&out.join("05_fan_order.json"));
    assert_eq!(order["report"]["width"], 4);
    assert_eq!(order["report"]["hasse_edges"].as_array().unwrap().len(), 8);
}

#[test]
fn reruns_and_parallel_runs_are_byte_identical() {
    let first = scratch_dir("det_seq");
    let second = scratch_dir("det_par");
    let config = bundled_config();
    for (dir, extra) in [(&first, None), (&second, Some(["--parallel", "4"]))] {
        let mut args = vec![
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "42",
        ];
        if let Some(extra) = extra {
            args.extend(extra);
        }
        let output = run(&args);
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&first).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if name == "run_meta.json" {
            continue;
        }
        let a = std::fs::read(first.join(&name)).unwrap();
        let b = std::fs::read(second.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        compared += 1;
    }
    // Six reports, three tabular mirrors, one summary.
    assert_eq!(compared, 10);
}

#[test]
fn missing_fixture_is_named_at_its_pointer() {
    let dir = scratch_dir("missing");
    let config = write_config(
        &dir,
        r#"{ "tasks": [ { "kind": "curvature", "generator": "ghost" } ] }"#,
    );
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    let text = stderr_of(&output);
    assert!(text.contains("/tasks/0/generator"), "{text}");
    assert!(text.contains("ghost"), "{text}");
}

#[test]
fn malformed_configs_are_config_errors() {
    let dir = scratch_dir("malformed");
    for (text, needle) in [
        (r#"{ "tasks": "nope" }"#, "/tasks"),
        (r#"{ "tasks": [ { "kind": "teleport" } ] }"#, "/tasks/0/kind"),
        (r#"{ not json"#, "config error"),
    ] {
        let config = write_config(&dir, text);
        let output = run(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 2, "config: {text}");
        let err = stderr_of(&output);
        assert!(err.contains(needle), "wanted {needle} in: {err}");
    }
}

#[test]
fn overstated_curvature_fails_the_gradient_bound() {
    let dir = scratch_dir("overstated");
    let config = write_config(
        &dir,
        r#"{
            "fixtures": { "generators": [ { "name": "pair", "bundled": "pair_balanced" } ] },
            "tasks": [
                { "kind": "curvature", "label": "honest", "generator": "pair" },
                { "kind": "curvature", "label": "claimed_too_high", "generator": "pair",
                  "assert_rho": 10.0 }
            ]
        }"#,
    );
    let out = dir.join("out");
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1);

    let honest = json_of(&out.join("01_honest.json"));
    assert_eq!(honest["pass"], true);
    let rho = honest["report"]["rho_checked"].as_f64().unwrap();
    assert!((rho - 2.0).abs() < 1e-9, "computed rho {rho}");

    let claimed = json_of(&out.join("02_claimed_too_high.json"));
    assert_eq!(claimed["pass"], false);
    let rows = claimed["report"]["gradient_bound"].as_array().unwrap();
    assert!(
        rows.iter().any(|row| row["pass"] == false),
        "no failing gradient-bound row: {rows:?}"
    );

    let summary = json_of(&out.join("summary.json"));
    assert_eq!(summary["passed"], 1);
    assert_eq!(summary["failed"], 1);
}

#[test]
fn hasse_export_annotates_extremes_and_counts_covering_edges() {
    let dir = scratch_dir("hasse");
    let config = write_config(
        &dir,
        r#"{
            "fixtures": {
                "generators": [
                    { "name": "slow", "two_state": [1.0, 1.0] },
                    { "name": "middle", "two_state": [1.0, 2.0] },
                    { "name": "fast", "two_state": [1.0, 3.0] }
                ],
                "functionals": [ { "name": "first", "values": [1.0, 0.0] } ]
            },
            "tasks": [
                { "kind": "order", "label": "fan", "relation": { "bundled": "fan", "middle": 4 } },
                { "kind": "order", "label": "chain", "members": ["slow", "middle", "fast"],
                  "payoff": "first" },
                { "kind": "order", "label": "single",
                  "relation": { "names": ["only"], "matrix": [["equal"]] } }
            ]
        }"#,
    );
    let out = dir.join("out");
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let cases = [
        ("01_fan.json", "fan.dot", 6, 8),
        ("02_chain.json", "chain.dot", 3, 2),
        ("03_single.json", "single.dot", 1, 0),
    ];
    for (report, dot_name, nodes, edges) in cases {
        let dot_path = dir.join(dot_name);
        let output = run(&[
            "hasse",
            "--report",
            out.join(report).to_str().unwrap(),
            "--out",
            dot_path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
        let dot = std::fs::read_to_string(&dot_path).unwrap();
        assert_eq!(
            dot.matches("label=").count(),
            nodes,
            "{dot_name} nodes:\n{dot}"
        );
        assert_eq!(
            dot.matches(" -> ").count(),
            edges,
            "{dot_name} edges:\n{dot}"
        );
        assert!(dot.contains("(least)"), "{dot_name} lacks a least node");
        assert!(dot.contains("(greatest)"), "{dot_name} lacks a greatest node");
    }

    // The fan's extremes carry their names.
    let fan_dot = std::fs::read_to_string(dir.join("fan.dot")).unwrap();
    assert!(fan_dot.contains("\"P1 (least)\""), "{fan_dot}");
    assert!(fan_dot.contains("\"P6 (greatest)\""), "{fan_dot}");

    // A file without any order report is rejected.
    let bogus = dir.join("bogus.json");
    std::fs::write(&bogus, "{}").unwrap();
    let output = run(&[
        "hasse",
        "--report",
        bogus.to_str().unwrap(),
        "--out",
        dir.join("bogus.dot").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn fixture_listing_covers_bundled_content() {
    let output = run_fixtures(None, false);
    assert_eq!(exit_code(&output), 0);
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 8, "only {} fixtures listed", lines.len());
    for name in ["pair_balanced", "fan", "three_chain", "heat", "laguerre"] {
        assert!(
            lines.iter().any(|l| l.starts_with(name)),
            "missing {name} in:\n{text}"
        );
    }
}

#[test]
fn fixture_listing_handles_override_dirs_and_strict_mode() {
    let dir = scratch_dir("fixtures");

    // An empty override directory adds nothing.
    let empty = run_fixtures(Some(&dir), false);
    let baseline = run_fixtures(None, false);
    assert_eq!(exit_code(&empty), 0);
    assert_eq!(stdout_of(&empty), stdout_of(&baseline));

    // A good file is listed with its origin; a corrupted one is annotated.
    std::fs::write(
        dir.join("good.json"),
        r#"{ "name": "visitor", "description": "guest chain",
             "rates": [[-1.0, 1.0], [2.0, -2.0]] }"#,
    )
    .unwrap();
    std::fs::write(dir.join("broken.json"), "{ not json").unwrap();

    let lax = run_fixtures(Some(&dir), false);
    assert_eq!(exit_code(&lax), 0, "stderr: {}", stderr_of(&lax));
    let text = stdout_of(&lax);
    assert!(text.contains("visitor"), "{text}");
    assert!(text.contains("parse error"), "{text}");

    let strict = run_fixtures(Some(&dir), true);
    assert_ne!(exit_code(&strict), 0);
}

fn run_fixtures(dir: Option<&Path>, strict: bool) -> Output {
    let mut command = Command::new(binary());
    command.arg("fixtures");
    if strict {
        command.arg("--strict");
    }
    match dir {
        Some(dir) => command.env("IMSG_FIXTURES", dir),
        None => command.env_remove("IMSG_FIXTURES"),
    };
    command.output().expect("binary runs")
}
