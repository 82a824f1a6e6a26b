//! Line-delimited JSON records: one header line, one line per result row,
//! and a footer line.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, HarnessResult};

pub const SCHEMA: &str = "steinbound-record";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub schema_version: u32,
    pub library_version: String,
    pub kind: String,
    pub seed: u64,
    pub jobs: usize,
    /// Echo of the resolved configuration.
    pub config: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Footer {
    pub status: Status,
    pub rows: usize,
    pub wall_clock_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "kebab-case")]
enum Line {
    Header(Header),
    Row { index: usize, data: Value },
    Footer(Footer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub header: Header,
    pub rows: Vec<Value>,
    pub footer: Footer,
}

/// `{"value", "std_error", "replicas"}` for one statistic.
pub fn stat(value: f64, std_error: f64, replicas: usize) -> Value {
    serde_json::json!({ "value": value, "std_error": std_error, "replicas": replicas })
}

impl ExperimentRecord {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("records serialize"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        for (index, data) in self.rows.iter().enumerate() {
            push(&Line::Row {
                index,
                data: data.clone(),
            });
        }
        push(&Line::Footer(self.footer.clone()));
        out
    }

    pub fn parse(text: &str) -> HarnessResult<Self> {
        let bad = |msg: String| HarnessError::Validation(msg);
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| bad("record is empty".into()))?;
        // Check the schema before the strict parse so old or foreign records
        // get a versioned diagnostic instead of a field error.
        let probe: Value = serde_json::from_str(first).map_err(|e| bad(format!("line 1: {e}")))?;
        if probe.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
            return Err(bad(format!("line 1: not a {SCHEMA} header")));
        }
        match probe.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            other => {
                return Err(bad(format!(
                    "record schema version {} is not supported (expected {SCHEMA_VERSION})",
                    other.map_or("missing".to_string(), |v| v.to_string())
                )))
            }
        }
        let header = match serde_json::from_str::<Line>(first).map_err(|e| bad(format!("line 1: {e}")))? {
            Line::Header(h) => h,
            _ => return Err(bad("line 1: expected a header".into())),
        };
        let mut rows = Vec::new();
        let mut footer = None;
        for (no, line) in lines {
            if footer.is_some() {
                return Err(bad(format!("line {}: content after footer", no + 1)));
            }
            match serde_json::from_str::<Line>(line).map_err(|e| bad(format!("line {}: {e}", no + 1)))? {
                Line::Row { index, data } => {
                    if index != rows.len() {
                        return Err(bad(format!("line {}: row index {index} out of sequence", no + 1)));
                    }
                    rows.push(data);
                }
                Line::Footer(f) => footer = Some(f),
                Line::Header(_) => return Err(bad(format!("line {}: second header", no + 1))),
            }
        }
        let footer = footer.ok_or_else(|| bad("record has no footer (run interrupted?)".into()))?;
        if footer.rows != rows.len() {
            return Err(bad(format!("footer counts {} rows, found {}", footer.rows, rows.len())));
        }
        Ok(Self { header, rows, footer })
    }

    pub fn load(path: &std::path::Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Validation(format!("cannot read record {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        ExperimentRecord {
            header: Header {
                schema: SCHEMA.into(),
                schema_version: SCHEMA_VERSION,
                library_version: "0.1.0".into(),
                kind: "nu-sampler".into(),
                seed: 3,
                jobs: 1,
                config: serde_json::json!({"n": 4}),
            },
            rows: vec![
                serde_json::json!({"index": 0, "chi_square": stat(0.1 + 0.2, 1e-300, 7)}),
                serde_json::json!({"index": 1, "chi_square": stat(1.0 / 3.0, f64::MIN_POSITIVE, 7)}),
                // Needs exact float parsing to survive a round trip.
                serde_json::json!({"index": 2, "chi_square": stat(0.9812944833510052, 1.084579080193251, 7)}),
            ],
            footer: Footer {
                status: Status::Ok,
                rows: 3,
                wall_clock_seconds: 0.25,
                error: None,
            },
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = sample().to_jsonl();
        let back = ExperimentRecord::parse(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn schema_and_structure_checked() {
        let text = sample().to_jsonl();
        let err = ExperimentRecord::parse(&text.replace("\"schema_version\":1", "\"schema_version\":9")).unwrap_err();
        assert!(err.to_string().contains("schema version 9"), "{err}");
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(ExperimentRecord::parse(&truncated).is_err());
        assert!(ExperimentRecord::parse("").is_err());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn arbitrary_finite_values_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
            let rows: Vec<Value> = values.iter().map(|&v| serde_json::json!({"x": stat(v, v.abs(), 1)})).collect();
            let rec = ExperimentRecord {
                header: Header {
                    schema: SCHEMA.into(),
                    schema_version: SCHEMA_VERSION,
                    library_version: "0".into(),
                    kind: "k".into(),
                    seed: 0,
                    jobs: 1,
                    config: Value::Null,
                },
                footer: Footer { status: Status::Ok, rows: rows.len(), wall_clock_seconds: 0.0, error: None },
                rows,
            };
            let text = rec.to_jsonl();
            let back = ExperimentRecord::parse(&text).unwrap();
            prop_assert_eq!(back.to_jsonl(), text);
            prop_assert_eq!(back, rec);
        }
    }
}
