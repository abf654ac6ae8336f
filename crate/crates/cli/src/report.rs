//! Line-oriented report records.
//!
//! Each line is `kind key=value key=value ...`. Strings are JSON-quoted,
//! numbers print in shortest round-trip form, so reparsing recovers every
//! value exactly. A file whose name ends in `.json` holds the same records as
//! a JSON array of objects, each with a leading `"kind"` member.
//!
//! A cross-validation report is a block:
//!
//! ```text
//! report method="rvfl" dataset="iris" k=10 seed=0
//! config hidden_nodes=100 layers=1 lambda=0.0625 ...
//! fold index=0 accuracy=0.9333333333333333
//! ...
//! summary mean_accuracy=0.96 std_accuracy=0.0326598632371090
//! timing train_seconds=0.0123 test_seconds=0.0008
//! ```
//!
//! `timing` records carry the only wall-clock values in any report.

use std::fmt::Write as _;
use std::path::Path;

use randlink::harness::{mean_std, EvalReport};
use randlink::NetworkConfig;
use serde_json::{Map, Number, Value};

use crate::config::network_pairs;
use crate::error::CliError;

pub const TIMING_KIND: &str = "timing";

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            fields: Vec::new(),
        }
    }

    pub fn str(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.push((key.to_string(), Value::String(value.into())));
        self
    }

    pub fn num(mut self, key: &str, value: f64) -> Self {
        // Non-finite values have no JSON form; they are written as strings.
        let v = Number::from_f64(value).map_or_else(|| Value::String(value.to_string()), Value::Number);
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn int(mut self, key: &str, value: impl Into<Number>) -> Self {
        self.fields.push((key.to_string(), Value::Number(value.into())));
        self
    }

    pub fn flag(mut self, key: &str, value: bool) -> Self {
        self.fields.push((key.to_string(), Value::Bool(value)));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key)?.as_str()
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.parse().ok(),
            _ => None,
        }
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.get(key)?.as_u64()
    }

    /// The value as it would be written in a config file.
    pub fn get_plain(&self, key: &str) -> Option<String> {
        Some(match self.get(key)? {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    fn to_line(&self) -> String {
        let mut line = self.kind.clone();
        for (k, v) in &self.fields {
            let _ = write!(line, " {k}={v}");
        }
        line
    }

    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(self.kind.clone()));
        for (k, v) in &self.fields {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

impl Format {
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Text,
        }
    }
}

pub fn render(records: &[Record], format: Format) -> String {
    match format {
        Format::Text => records.iter().map(|r| r.to_line() + "\n").collect(),
        Format::Json => {
            let array = Value::Array(records.iter().map(Record::to_json).collect());
            serde_json::to_string_pretty(&array).expect("report values are serializable") + "\n"
        }
    }
}

/// Parses either format; JSON is recognised by a leading `[`.
pub fn parse(text: &str) -> Result<Vec<Record>, String> {
    if text.trim_start().starts_with('[') {
        parse_json(text)
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| parse_line(l).map_err(|e| format!("line {}: {e}", n + 1)))
            .collect()
    }
}

fn parse_json(text: &str) -> Result<Vec<Record>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Array(items) = value else {
        return Err("expected a JSON array of records".into());
    };
    items
        .into_iter()
        .map(|item| {
            let Value::Object(mut obj) = item else {
                return Err("record is not an object".to_string());
            };
            let kind = match obj.shift_remove("kind") {
                Some(Value::String(k)) => k,
                _ => return Err("record without a string \"kind\"".to_string()),
            };
            Ok(Record {
                kind,
                fields: obj.into_iter().collect(),
            })
        })
        .collect()
}

fn parse_line(line: &str) -> Result<Record, String> {
    let line = line.trim();
    let (kind, mut rest) = line.split_once(' ').unwrap_or((line, ""));
    let mut record = Record::new(kind);
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            return Ok(record);
        }
        let (key, after) = rest.split_once('=').ok_or_else(|| format!("field without '=' in {rest:?}"))?;
        let (raw, tail) = if after.starts_with('"') {
            let end = closing_quote(after).ok_or("unterminated string")?;
            after.split_at(end + 1)
        } else {
            after.split_at(after.find(' ').unwrap_or(after.len()))
        };
        let value = serde_json::from_str(raw).map_err(|e| format!("bad value {raw:?} for {key}: {e}"))?;
        record.fields.push((key.to_string(), value));
        rest = tail;
    }
}

fn closing_quote(s: &str) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in s.char_indices().skip(1) {
        match c {
            '\\' if !escaped => escaped = true,
            '"' if !escaped => return Some(i),
            _ => escaped = false,
        }
    }
    None
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|message| CliError::Report {
        path: path.to_path_buf(),
        message,
    })
}

/// Drops timing records so that reruns can be compared byte for byte.
pub fn without_timing(records: &[Record]) -> Vec<Record> {
    records.iter().filter(|r| r.kind != TIMING_KIND).cloned().collect()
}

pub fn config_record(cfg: &NetworkConfig<f64>) -> Record {
    let mut r = Record::new("config");
    for (k, v) in network_pairs(cfg) {
        // Keep numbers and booleans typed in the JSON variant.
        let value = match serde_json::from_str::<Value>(&v) {
            Ok(parsed @ (Value::Number(_) | Value::Bool(_))) => parsed,
            _ => Value::String(v),
        };
        r.fields.push((k.to_string(), value));
    }
    r
}

pub fn eval_records(report: &EvalReport<f64>, k: usize, seed: u64) -> Vec<Record> {
    let mut out = vec![
        Record::new("report")
            .str("method", &report.method)
            .str("dataset", &report.dataset)
            .int("k", k as u64)
            .int("seed", seed),
        config_record(&report.chosen_config),
    ];
    for (i, a) in report.fold_accuracies.iter().enumerate() {
        out.push(Record::new("fold").int("index", i as u64).num("accuracy", *a));
    }
    out.push(
        Record::new("summary")
            .num("mean_accuracy", report.mean_accuracy)
            .num("std_accuracy", report.std_accuracy),
    );
    out.push(
        Record::new(TIMING_KIND)
            .num("train_seconds", report.train_seconds)
            .num("test_seconds", report.test_seconds),
    );
    out
}

/// A `report` block read back from records.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub method: String,
    pub dataset: String,
    pub k: Option<u64>,
    pub seed: Option<u64>,
    pub config: Vec<(String, String)>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

impl ParsedReport {
    /// Mean and population std recomputed from the fold entries.
    pub fn recomputed(&self) -> (f64, f64) {
        mean_std(&self.fold_accuracies)
    }
}

/// Collects every `report` block. Records outside a block, such as grid
/// cells, are skipped.
pub fn parse_reports(records: &[Record]) -> Result<Vec<ParsedReport>, String> {
    let mut out: Vec<ParsedReport> = Vec::new();
    let mut open = false;
    let mut have_summary = false;
    for r in records {
        match r.kind.as_str() {
            "report" => {
                if open && !have_summary {
                    return Err("report block without a summary record".into());
                }
                out.push(ParsedReport {
                    method: r.get_str("method").ok_or("report without a method")?.to_string(),
                    dataset: r.get_str("dataset").ok_or("report without a dataset")?.to_string(),
                    k: r.get_u64("k"),
                    seed: r.get_u64("seed"),
                    config: Vec::new(),
                    fold_accuracies: Vec::new(),
                    mean_accuracy: f64::NAN,
                    std_accuracy: f64::NAN,
                });
                open = true;
                have_summary = false;
            }
            "config" if open => {
                let cur = out.last_mut().expect("open block");
                cur.config = r
                    .fields
                    .iter()
                    .map(|(k, _)| (k.clone(), r.get_plain(k).unwrap_or_default()))
                    .collect();
            }
            "fold" if open => {
                let a = r.get_f64("accuracy").ok_or("fold without an accuracy")?;
                out.last_mut().expect("open block").fold_accuracies.push(a);
            }
            "summary" if open => {
                let cur = out.last_mut().expect("open block");
                cur.mean_accuracy = r.get_f64("mean_accuracy").ok_or("summary without mean_accuracy")?;
                cur.std_accuracy = r.get_f64("std_accuracy").ok_or("summary without std_accuracy")?;
                have_summary = true;
            }
            _ => {}
        }
    }
    if open && !have_summary {
        return Err("report block without a summary record".into());
    }
    Ok(out)
}
