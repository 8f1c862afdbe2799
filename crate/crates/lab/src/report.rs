//! Report records and their CSV / JSON emission.

use crate::error::{LabError, Result};
use serde_json::{Map, Number, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Commit the binary was built from, when the build sets `CALORIC_COMMIT`.
pub const COMMIT: &str = match option_env!("CALORIC_COMMIT") {
    Some(c) => c,
    None => "unknown",
};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Num(f64),
    Text(String),
}

impl MetricValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Num(x) => Some(*x),
            MetricValue::Text(_) => None,
        }
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Num(x) => f.write_str(&format_number(*x)),
            MetricValue::Text(s) => f.write_str(s),
        }
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// One experiment result: parameters, provenance and named metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportRecord {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    /// Discretization details, reference anchor and build commit.
    pub provenance: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, MetricValue>,
}

impl ReportRecord {
    pub fn new(experiment: &str) -> Self {
        let mut r = Self { experiment: experiment.into(), ..Self::default() };
        r.provenance.insert("commit".into(), COMMIT.into());
        r
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn provenance(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.provenance.insert(key.into(), value.to_string());
        self
    }

    /// Records a numeric metric; non-finite values are rejected.
    pub fn metric(&mut self, name: impl Into<String>, value: f64) -> Result<&mut Self> {
        let name = name.into();
        if !value.is_finite() {
            return Err(LabError::NonFiniteMetric { experiment: self.experiment.clone(), metric: name });
        }
        self.metrics.insert(name, MetricValue::Num(value));
        Ok(self)
    }

    pub fn text_metric(&mut self, name: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.metrics.insert(name.into(), MetricValue::Text(value.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(MetricValue::as_f64)
    }

    /// Parameters and provenance under one namespace, as written to files.
    fn columns(&self) -> BTreeMap<&str, &str> {
        self.params.iter().chain(&self.provenance).map(|(k, v)| (k.as_str(), v.as_str())).collect()
    }
}

/// Acceptance bound on one metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
            Bound::Within(lo, hi) => (lo..=hi).contains(&x),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo:e}, {hi:e}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub metric: String,
    pub bound: Bound,
}

impl Threshold {
    pub fn new(metric: impl Into<String>, bound: Bound) -> Self {
        Self { metric: metric.into(), bound }
    }
}

/// A threshold a record failed to meet.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub experiment: String,
    pub metric: String,
    pub value: Option<f64>,
    pub bound: Bound,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{}: {} = {v:e}, required {}", self.experiment, self.metric, self.bound),
            None => write!(f, "{}: {} missing, required {}", self.experiment, self.metric, self.bound),
        }
    }
}

/// Records of a run with the thresholds they were checked against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub records: Vec<ReportRecord>,
    pub violations: Vec<Violation>,
}

impl RunOutcome {
    /// Checks `thresholds` against `record` and appends it.
    pub fn push(&mut self, record: ReportRecord, thresholds: &[Threshold]) {
        for t in thresholds {
            let value = record.get(&t.metric);
            if !value.is_some_and(|v| t.bound.holds(v)) {
                self.violations.push(Violation {
                    experiment: record.experiment.clone(),
                    metric: t.metric.clone(),
                    value,
                    bound: t.bound.clone(),
                });
            }
        }
        self.records.push(record);
    }

    pub fn extend(&mut self, other: RunOutcome) {
        self.records.extend(other.records);
        self.violations.extend(other.violations);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

/// Long-format CSV: one row per metric, columns
/// `experiment, param:<key>..., metric, value`, parameter columns sorted.
pub fn to_csv(records: &[ReportRecord]) -> Result<String> {
    let keys: BTreeSet<&str> = records.iter().flat_map(|r| r.columns().into_keys()).collect();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(keys.iter().map(|k| format!("param:{k}")));
    header.extend(["metric".to_string(), "value".to_string()]);
    w.write_record(&header)?;
    for r in records {
        let cols = r.columns();
        for (name, value) in &r.metrics {
            let mut row = vec![r.experiment.clone()];
            row.extend(keys.iter().map(|k| cols.get(k).map(|v| v.to_string()).unwrap_or_default()));
            row.push(name.clone());
            row.push(value.to_string());
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::Pool(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is built from strings"))
}

/// JSON array of flat objects with `experiment`, `param:<key>` strings and
/// `metric:<name>` values.
pub fn to_json(records: &[ReportRecord]) -> String {
    let array: Vec<Value> = records
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert("experiment".into(), Value::String(r.experiment.clone()));
            for (k, v) in r.columns() {
                obj.insert(format!("param:{k}"), Value::String(v.into()));
            }
            for (k, v) in &r.metrics {
                let value = match v {
                    MetricValue::Num(x) => Value::Number(Number::from_str(&format_number(*x)).expect("finite metric")),
                    MetricValue::Text(s) => Value::String(s.clone()),
                };
                obj.insert(format!("metric:{k}"), value);
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(array)).expect("serializing a value tree");
    s.push('\n');
    s
}

pub fn render(records: &[ReportRecord], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(records),
        Format::Json => Ok(to_json(records)),
    }
}

/// Writes `records` to `path`, creating parent directories.
pub fn emit_report(records: &[ReportRecord], format: Format, path: &Path) -> Result<PathBuf> {
    let text = render(records, format)?;
    let write_err = |source| LabError::Write { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(write_err)?;
    }
    std::fs::write(path, text).map_err(write_err)?;
    Ok(path.to_path_buf())
}
