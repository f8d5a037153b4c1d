//! Text formats: whitespace-separated samples, tab-separated count tables and
//! the JSON/CSV renderings of predictions and experiment reports.
//!
//! JSON documents carry a leading `"schema"` tag ([`PREDICTION_SCHEMA`],
//! [`REPORT_SCHEMA`]); floating-point values are rounded to 10 significant
//! digits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::embedding::Prediction;
use crate::environment::{Environment, Sample};
use crate::error::{Error, Result};
use crate::montecarlo::ExperimentReport;

pub const PREDICTION_SCHEMA: &str = "unseen.prediction/1";
pub const REPORT_SCHEMA: &str = "unseen.report/1";
pub const SIMULATION_SCHEMA: &str = "unseen.simulation/1";
pub const ENV_INFO_SCHEMA: &str = "unseen.env-info/1";

/// Serde helpers rounding `f64` fields to 10 significant digits.
pub mod sig10 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn round(v: f64) -> f64 {
        if v.is_finite() && v != 0.0 {
            format!("{v:.9e}").parse().unwrap_or(v)
        } else {
            v
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(round(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&round(*v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<f64>::deserialize(d)
        }
    }
}

fn decode(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        Error::format(line, "invalid UTF-8")
    })
}

/// Parse a sample: whitespace-separated tokens, `#` comment lines ignored.
pub fn read_sample(bytes: &[u8]) -> Result<Sample> {
    let text = decode(bytes)?;
    let tokens: Vec<&str> = text
        .lines()
        .filter(|line| !line.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptySample);
    }
    Sample::from_tokens(tokens)
}

/// Species-by-sample abundance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub id_header: String,
    pub species_ids: Vec<String>,
    pub column_names: Vec<String>,
    /// `counts[row][column]`.
    pub counts: Vec<Vec<u64>>,
}

/// A count column addressed by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_owned())
    }
}

impl From<usize> for ColumnRef {
    fn from(i: usize) -> Self {
        ColumnRef::Index(i)
    }
}

impl CountTable {
    /// Resolve a column. A name that matches no header but parses as an
    /// integer is taken as an index.
    pub fn column_index(&self, column: &ColumnRef) -> Result<usize> {
        match column {
            ColumnRef::Index(i) if *i < self.column_names.len() => Ok(*i),
            ColumnRef::Index(i) => Err(Error::Lookup(i.to_string())),
            ColumnRef::Name(name) => self
                .column_names
                .iter()
                .position(|c| c == name)
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < self.column_names.len()))
                .ok_or_else(|| Error::Lookup(name.clone())),
        }
    }

    pub fn column(&self, column: &ColumnRef) -> Result<Vec<u64>> {
        let j = self.column_index(column)?;
        Ok(self.counts.iter().map(|row| row[j]).collect())
    }
}

/// Parse a tab-separated table with a mandatory header row. Blank lines and
/// `#` comment lines are skipped.
pub fn read_count_table(bytes: &[u8]) -> Result<CountTable> {
    let text = decode(bytes)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or_else(|| Error::format(1, "missing header"))?;
    let mut fields = header.split('\t');
    let id_header = fields.next().unwrap_or_default().to_owned();
    let column_names: Vec<String> = fields.map(str::to_owned).collect();
    if column_names.is_empty() {
        return Err(Error::format(header_line, "header needs an id column and at least one sample column"));
    }
    let mut table = CountTable {
        id_header,
        species_ids: Vec::new(),
        column_names,
        counts: Vec::new(),
    };
    let mut seen = std::collections::HashSet::new();
    for (line_no, line) in lines {
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        if id.is_empty() {
            return Err(Error::format(line_no, "empty species id"));
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::format(line_no, format!("duplicate species id `{id}`")));
        }
        let row = fields
            .map(|f| {
                let f = f.trim();
                if f.starts_with('-') && f[1..].parse::<u64>().is_ok() {
                    return Err(Error::format(line_no, format!("negative count `{f}`")));
                }
                f.parse::<u64>()
                    .map_err(|_| Error::format(line_no, format!("count `{f}` is not a non-negative integer")))
            })
            .collect::<Result<Vec<u64>>>()?;
        if row.len() != table.column_names.len() {
            return Err(Error::format(
                line_no,
                format!("expected {} counts, found {}", table.column_names.len(), row.len()),
            ));
        }
        table.species_ids.push(id.to_owned());
        table.counts.push(row);
    }
    Ok(table)
}

/// Empirical environment from one column of a count table.
pub fn table_to_environment(table: &CountTable, column: &ColumnRef) -> Result<Environment> {
    let counts = table.column(column)?;
    Environment::from_counts(table.species_ids.iter().cloned().zip(counts))
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

fn to_json<T: Serialize>(schema: &str, body: &T) -> String {
    serde_json::to_string(&Tagged { schema, body }).expect("serializable")
}

/// JSON rendering with a fixed field order; failed predictions omit the
/// estimate fields.
pub fn write_prediction(p: &Prediction) -> String {
    to_json(PREDICTION_SCHEMA, p)
}

pub fn read_prediction(text: &str) -> Result<Prediction> {
    serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))
}

pub fn write_report(r: &ExperimentReport) -> String {
    to_json(REPORT_SCHEMA, r)
}

pub fn read_report(text: &str) -> Result<ExperimentReport> {
    serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))
}

/// Tagged JSON for auxiliary CLI documents.
pub fn write_tagged<T: Serialize>(schema: &str, body: &T) -> String {
    to_json(schema, body)
}

fn csv_num(v: Option<f64>) -> String {
    v.map(|v| sig10::round(v).to_string()).unwrap_or_default()
}

pub fn prediction_csv(p: &Prediction) -> String {
    let mut out = String::from("status,point,lower,upper,level,t,m,subsample_size,consumed,clamped\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        p.status.as_str(),
        csv_num(p.point),
        csv_num(p.lower),
        csv_num(p.upper),
        csv_num(Some(p.level)),
        csv_num(Some(p.t)),
        p.m,
        p.subsample_size,
        p.consumed.map(|c| c.to_string()).unwrap_or_default(),
        p.clamped.map(|c| c.to_string()).unwrap_or_default(),
    );
    out
}

/// Metrics as `metric,value,se,target,tolerance,pass` rows, followed by the
/// per-row table when the report has one.
pub fn report_csv(r: &ExperimentReport) -> String {
    let mut out = String::from("metric,value,se,target,tolerance,pass\n");
    for (name, m) in &r.metrics {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            csv_num(Some(m.value)),
            csv_num(m.se),
            csv_num(m.target),
            csv_num(m.tolerance),
            m.pass.map(|p| p.to_string()).unwrap_or_default(),
        );
    }
    if !r.rows.is_empty() {
        out.push('\n');
        out.push_str("t,replicates,successes,rate_ok,rate_insufficient_sample,rate_cut_exceeds_sample,coverage,analytic_cut_exceedance,pass\n");
        for row in &r.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_num(Some(row.t)),
                row.replicates,
                row.successes,
                csv_num(Some(row.rate_ok)),
                csv_num(Some(row.rate_insufficient_sample)),
                csv_num(Some(row.rate_cut_exceeds_sample)),
                csv_num(row.coverage),
                csv_num(Some(row.analytic_cut_exceedance)),
                row.pass,
            );
        }
    }
    out
}
