//! File formats: fixture JSON, tabular CSV exports, and diagram output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fixtures::Fixture;
use crate::generator::validate_generator;
use crate::poset::OrderReport;
use crate::state::{Functional, StateSpace};
use crate::{Error, Result};

/// Serialized form of a fixture: a rate matrix with optional labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    pub rates: Vec<Vec<f64>>,
}

impl FixtureSpec {
    pub fn from_fixture(fixture: &Fixture) -> FixtureSpec {
        let l = &fixture.generator;
        let n = l.size();
        FixtureSpec {
            name: fixture.name.clone(),
            description: fixture.description.clone(),
            labels: Some(l.states().labels().to_vec()),
            rates: (0..n)
                .map(|i| (0..n).map(|j| l.rate(i, j)).collect())
                .collect(),
        }
    }

    pub fn into_fixture(self) -> Result<Fixture> {
        let n = self.rates.len();
        let space = match self.labels {
            Some(labels) => StateSpace::new(labels)?,
            None => StateSpace::indexed(n)?,
        };
        if space.size() != n {
            return Err(Error::DimensionMismatch {
                context: "fixture labels",
                expected: n,
                got: space.size(),
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in &self.rates {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let rates = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        Ok(Fixture {
            name: self.name,
            description: self.description,
            generator: validate_generator(rates, space)?,
        })
    }
}

fn io_err(context: &str, path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Io(format!("{context} {}: {err}", path.display()))
}

/// Reads one JSON file holding either a single fixture or an array of them.
pub fn read_fixture_file(path: &Path) -> Result<Vec<Fixture>> {
    let text = fs::read_to_string(path).map_err(|e| io_err("reading", path, e))?;
    let specs: Vec<FixtureSpec> = match serde_json::from_str::<Vec<FixtureSpec>>(&text) {
        Ok(list) => list,
        Err(_) => vec![serde_json::from_str::<FixtureSpec>(&text)
            .map_err(|e| io_err("parsing", path, e))?],
    };
    specs.into_iter().map(FixtureSpec::into_fixture).collect()
}

/// Reads every `*.json` file in a directory, in name order.
pub fn read_fixture_dir(dir: &Path) -> Result<Vec<Fixture>> {
    let entries = fs::read_dir(dir).map_err(|e| io_err("listing", dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut fixtures = Vec::new();
    for path in paths {
        fixtures.extend(read_fixture_file(&path)?);
    }
    Ok(fixtures)
}

/// Writes fixtures as a JSON array.
pub fn write_fixture_file(path: &Path, fixtures: &[Fixture]) -> Result<()> {
    let specs: Vec<FixtureSpec> = fixtures.iter().map(FixtureSpec::from_fixture).collect();
    let text = to_json_pretty(&specs)?;
    fs::write(path, text).map_err(|e| io_err("writing", path, e))
}

/// Pretty JSON for any serializable report.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(format!("serializing: {e}")))
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Comparison matrix as CSV, one row per member.
pub fn relation_csv(report: &OrderReport) -> String {
    let mut out = String::from("member");
    for name in &report.names {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (i, row) in report.relation.iter().enumerate() {
        out.push_str(&csv_field(&report.names[i]));
        for cmp in row {
            out.push(',');
            out.push_str(&format!("{cmp:?}").to_lowercase());
        }
        out.push('\n');
    }
    out
}

/// `(t, value)` curve as CSV.
pub fn curve_csv(header: &str, curve: &[(f64, f64)]) -> String {
    let mut out = format!("t,{header}\n");
    for &(t, v) in curve {
        out.push_str(&format!("{t:.12e},{v:.12e}\n"));
    }
    out
}

/// State-indexed values as CSV.
pub fn functional_csv(f: &Functional) -> String {
    let mut out = String::from("state,value\n");
    for x in 0..f.len() {
        out.push_str(&format!(
            "{},{:.16e}\n",
            csv_field(f.space().label(x)),
            f.value(x)
        ));
    }
    out
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Covering diagram in DOT format: one node per equality class (members
/// joined by `=`), edges pointing from lower to higher classes. The least
/// and greatest classes, when they exist, are annotated in their labels and
/// drawn with a double border.
pub fn hasse_dot(report: &OrderReport) -> String {
    let mut class_of = vec![usize::MAX; report.names.len()];
    for (c, class) in report.classes.iter().enumerate() {
        for &m in class {
            class_of[m] = c;
        }
    }
    let least_class = report.least.map(|m| class_of[m]);
    let greatest_class = report.greatest.map(|m| class_of[m]);
    let mut out = String::from("digraph order {\n  rankdir=BT;\n  node [shape=box];\n");
    for (c, class) in report.classes.iter().enumerate() {
        let mut label = class
            .iter()
            .map(|&m| report.names[m].as_str())
            .collect::<Vec<_>>()
            .join(" = ");
        let mut extremal = false;
        if least_class == Some(c) {
            label.push_str(" (least)");
            extremal = true;
        }
        if greatest_class == Some(c) {
            label.push_str(" (greatest)");
            extremal = true;
        }
        let style = if extremal { ", peripheries=2" } else { "" };
        out.push_str(&format!(
            "  c{c} [label=\"{}\"{style}];\n",
            dot_escape(&label)
        ));
    }
    for &(lo, hi) in &report.hasse_edges {
        out.push_str(&format!("  c{} -> c{};\n", class_of[lo], class_of[hi]));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fan_relation, reversible_corpus};
    use crate::poset::analyze_relation;

    #[test]
    fn fixture_specs_round_trip_through_json() {
        let corpus = reversible_corpus();
        let dir = std::env::temp_dir().join(format!("imsg_io_roundtrip_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corpus.json");
        write_fixture_file(&path, &corpus[..3]).unwrap();
        let loaded = read_fixture_file(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        for (a, b) in corpus[..3].iter().zip(&loaded) {
            assert_eq!(a.name, b.name);
            let diff = (a.generator.rates() - b.generator.rates()).amax();
            assert!(diff == 0.0);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn single_object_fixture_files_parse_too() {
        let dir = std::env::temp_dir().join(format!("imsg_io_single_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("one.json");
        std::fs::write(
            &path,
            r#"{ "name": "tiny", "rates": [[-1.0, 1.0], [2.0, -2.0]] }"#,
        )
        .unwrap();
        let loaded = read_fixture_file(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].generator.rate(1, 0), 2.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_rate_matrices_are_rejected_on_load() {
        let spec = FixtureSpec {
            name: "broken".into(),
            description: String::new(),
            labels: None,
            rates: vec![vec![-1.0, 2.0], vec![1.0, -1.0]],
        };
        assert!(spec.into_fixture().is_err());
    }

    #[test]
    fn hasse_dot_names_every_class_and_edge() {
        let (names, matrix) = fan_relation(2);
        let report = analyze_relation(names, matrix).unwrap();
        let dot = hasse_dot(&report);
        assert!(dot.contains("digraph order"));
        assert!(dot.contains("\"P1 (least)\""));
        assert!(dot.contains("\"P4 (greatest)\""));
        // Four covering edges for two middle members.
        assert_eq!(dot.matches(" -> ").count(), 4);
    }

    #[test]
    fn relation_csv_has_a_row_per_member() {
        let (names, matrix) = fan_relation(2);
        let report = analyze_relation(names, matrix).unwrap();
        let csv = relation_csv(&report);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("P1,equal,below"));
    }
}
