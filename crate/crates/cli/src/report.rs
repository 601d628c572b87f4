//! Report records and their CSV/JSON renderings.
//!
//! CSV uses a fixed long format, one row per datum:
//! `schema_version,experiment,seed,trial,kind,name,value` with kinds
//! `param`, `trial`, `aggregate`, `bound`, `verdict`, `error`. Floats are
//! rendered with 17 significant digits so parsing them back is bit-exact;
//! aggregates are always recomputable from the trial rows.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub per_trial: Vec<TrialRow>,
    pub aggregates: BTreeMap<String, f64>,
    pub bounds: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
}

impl ReportRecord {
    pub fn new(experiment: &str, seed: u64, trials: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            seed,
            trials,
            parameters: BTreeMap::new(),
            per_trial: Vec::new(),
            aggregates: BTreeMap::new(),
            bounds: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            error: None,
            wall_clock_seconds: 0.0,
        }
    }

    /// Mean and standard error of one metric across the trial rows, summed
    /// in trial order so the result is independent of execution order.
    pub fn aggregate_metric(&mut self, name: &str) {
        let values: Vec<f64> = self
            .per_trial
            .iter()
            .filter_map(|row| row.metrics.get(name).copied())
            .collect();
        if values.is_empty() {
            return;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        self.aggregates.insert(format!("mean_{name}"), mean);
        if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            self.aggregates
                .insert(format!("stderr_{name}"), (var / n).sqrt());
        }
    }

    /// Any verdict named `pass_*` that is false marks the run as a failed
    /// audit (exit code 1).
    pub fn failed_audit(&self) -> bool {
        self.verdicts
            .iter()
            .any(|(k, &v)| k.starts_with("pass") && !v)
    }
}

/// 17 significant digits: enough for f64 round trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_value_to_cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    fmt_f64(f)
                } else {
                    n.to_string()
                }
            } else {
                n.to_string()
            }
        }
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "schema_version",
    "experiment",
    "seed",
    "trial",
    "kind",
    "name",
    "value",
];

pub fn write_csv<W: Write>(record: &ReportRecord, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let base = |trial: &str, kind: &str, name: &str, value: String| {
        [
            record.schema_version.to_string(),
            record.experiment.clone(),
            record.seed.to_string(),
            trial.to_string(),
            kind.to_string(),
            name.to_string(),
            value,
        ]
    };
    for (k, v) in &record.parameters {
        w.write_record(base("", "param", k, json_value_to_cell(v)))?;
    }
    for row in &record.per_trial {
        for (k, v) in &row.metrics {
            w.write_record(base(&row.trial.to_string(), "trial", k, fmt_f64(*v)))?;
        }
    }
    for (k, v) in &record.aggregates {
        w.write_record(base("", "aggregate", k, fmt_f64(*v)))?;
    }
    for (k, v) in &record.bounds {
        w.write_record(base("", "bound", k, fmt_f64(*v)))?;
    }
    for (k, v) in &record.verdicts {
        w.write_record(base("", "verdict", k, v.to_string()))?;
    }
    if let Some(e) = &record.error {
        w.write_record(base("", "error", "error", e.clone()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(record: &ReportRecord) -> String {
    let mut buf = Vec::new();
    write_csv(record, &mut buf).expect("in-memory csv");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn to_json_string(record: &ReportRecord) -> String {
    serde_json::to_string_pretty(record).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> ReportRecord {
        let mut r = ReportRecord::new("jl", 42, 2);
        r.parameters
            .insert("eps".into(), serde_json::json!(0.25));
        r.per_trial = vec![
            TrialRow {
                trial: 0,
                metrics: [("err".to_string(), 0.1)].into_iter().collect(),
            },
            TrialRow {
                trial: 1,
                metrics: [("err".to_string(), 0.3)].into_iter().collect(),
            },
        ];
        r.aggregate_metric("err");
        r.bounds.insert("m".into(), 590.0);
        r.verdicts.insert("pass_demo".into(), true);
        r
    }

    #[test]
    fn csv_round_trips_aggregates_bit_exactly() {
        let record = sample_record();
        let text = to_csv_string(&record);
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut trial_values = Vec::new();
        let mut mean_cell = None;
        for row in rdr.records() {
            let row = row.unwrap();
            match (&row[4], &row[5]) {
                ("trial", "err") => trial_values.push(row[6].parse::<f64>().unwrap()),
                ("aggregate", "mean_err") => mean_cell = Some(row[6].parse::<f64>().unwrap()),
                _ => {}
            }
        }
        let recomputed = trial_values.iter().sum::<f64>() / trial_values.len() as f64;
        assert_eq!(recomputed.to_bits(), mean_cell.unwrap().to_bits());
    }

    #[test]
    fn empty_trials_yield_header_only_csv() {
        let r = ReportRecord::new("width", 1, 0);
        let text = to_csv_string(&r);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("schema_version,"));
    }

    #[test]
    fn json_round_trip_exact() {
        let record = sample_record();
        let text = to_json_string(&record);
        let parsed: ReportRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, record);
    }

    #[test]
    fn f64_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 0.9210340371976184, 1e-300, 6.02e23] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }
}
