//! Deterministic JSON and CSV serialization of harness reports.
//!
//! JSON reports carry a `schema` tag (`sigforge.chain.v1` or
//! `sigforge.comparison.v1`). CSV layouts are fixed by [`CHAIN_CSV_COLUMNS`]
//! and [`COMPARISON_CSV_COLUMNS`]; absent optional values are empty fields.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ChainReport, ComparisonReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schema")]
pub enum Report {
    #[serde(rename = "sigforge.chain.v1")]
    Chain(ChainReport),
    #[serde(rename = "sigforge.comparison.v1")]
    Comparison(ComparisonReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format \"{other}\""))),
        }
    }
}

pub const CHAIN_CSV_COLUMNS: [&str; 23] = [
    "step",
    "k_before",
    "k_after",
    "l",
    "method",
    "tsc_before",
    "tsc_after",
    "metric",
    "radius_c",
    "lambda_min",
    "quant_metric",
    "nodes_visited",
    "candidates_enumerated",
    "fp_bound",
    "fp_bound_saturated",
    "jitter_applied",
    "welch_after",
    "binary_bound_after",
    "binary_bound_kind",
    "audit_sd_metric",
    "audit_ml_metric",
    "audit_agrees",
    "signature",
];

pub const COMPARISON_CSV_COLUMNS: [&str; 17] = [
    "source",
    "k_after",
    "l",
    "tsc_before",
    "tsc_quant",
    "tsc_descent",
    "tsc_sd",
    "tsc_ml",
    "sd_equals_ml",
    "bound_after",
    "bound_kind",
    "gap_quant",
    "gap_descent",
    "gap_sd",
    "gap_ml",
    "error",
    "internal",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn chain_rows(report: &ChainReport) -> Vec<Vec<String>> {
    report
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.k_before.to_string(),
                (r.k_before + 1).to_string(),
                r.l.to_string(),
                r.method.to_string(),
                r.tsc_before.to_string(),
                r.tsc_after.to_string(),
                r.metric.to_string(),
                r.radius_c.to_string(),
                r.lambda_min.to_string(),
                r.quant_metric.to_string(),
                r.nodes_visited.to_string(),
                r.candidates_enumerated.to_string(),
                opt(r.fp_bound),
                r.fp_bound_saturated.to_string(),
                r.jitter_applied.to_string(),
                r.welch_after.value.to_string(),
                opt(r.binary_bound_after.map(|b| b.value)),
                opt(r.binary_bound_after.map(|b| b.kind)),
                opt(r.audit.map(|a| a.sd_metric)),
                opt(r.audit.map(|a| a.ml_metric)),
                opt(r.audit.map(|a| a.agrees)),
                r.signature.to_string(),
            ]
        })
        .collect()
}

fn comparison_rows(report: &ComparisonReport) -> Vec<Vec<String>> {
    report
        .entries
        .iter()
        .map(|e| match &e.row {
            Some(r) => vec![
                e.source.clone(),
                r.k_after.to_string(),
                r.l.to_string(),
                r.tsc_before.to_string(),
                r.tsc_quant.to_string(),
                r.tsc_descent.to_string(),
                r.tsc_sd.to_string(),
                r.tsc_ml.to_string(),
                r.sd_equals_ml.to_string(),
                opt(r.bound_after.map(|b| b.value)),
                opt(r.bound_after.map(|b| b.kind)),
                opt(r.gap_quant),
                opt(r.gap_descent),
                opt(r.gap_sd),
                opt(r.gap_ml),
                opt(e.error.as_ref()),
                e.internal.to_string(),
            ],
            None => {
                let mut row = vec![String::new(); COMPARISON_CSV_COLUMNS.len()];
                row[0] = e.source.clone();
                row[15] = opt(e.error.as_ref());
                row[16] = e.internal.to_string();
                row
            }
        })
        .collect()
}

fn write_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Report(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Report(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Report(e.to_string()))
}

/// Serializes a report. The same report always yields the same bytes.
pub fn emit_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::Report(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => match report {
            Report::Chain(c) => write_csv(&CHAIN_CSV_COLUMNS, chain_rows(c)),
            Report::Comparison(c) => write_csv(&COMPARISON_CSV_COLUMNS, comparison_rows(c)),
        },
    }
}

pub fn parse_report(json: &[u8]) -> Result<Report> {
    serde_json::from_slice(json).map_err(|e| Error::Report(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{upscale_chain, HarnessOptions, Method};
    use crate::sigcore::hadamard_set;

    fn one_step() -> Report {
        let h = hadamard_set(4).unwrap();
        Report::Chain(upscale_chain(&h, "hadamard-4", 5, Method::Sd, &HarnessOptions::default()).unwrap())
    }

    #[test]
    fn one_step_csv() {
        let bytes = emit_report(&one_step(), ReportFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CHAIN_CSV_COLUMNS.join(","));
        assert!(lines[1].starts_with("1,4,5,4,sd,64,112,16,16,"), "{}", lines[1]);
    }

    #[test]
    fn serialization_is_stable() {
        let r = one_step();
        for fmt in [ReportFormat::Json, ReportFormat::Csv] {
            assert_eq!(emit_report(&r, fmt).unwrap(), emit_report(&r, fmt).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let r = one_step();
        let bytes = emit_report(&r, ReportFormat::Json).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("\"schema\": \"sigforge.chain.v1\""));
        assert_eq!(parse_report(&bytes).unwrap(), r);
        assert!(parse_report(b"{\"schema\": \"other\"}").is_err());
    }

    #[test]
    fn comparison_csv_with_error_entry() {
        let report = Report::Comparison(ComparisonReport {
            entries: vec![super::super::ComparisonEntry {
                source: "x.txt".into(),
                row: None,
                error: Some("bad, file".into()),
                internal: false,
            }],
        });
        let text = String::from_utf8(emit_report(&report, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "x.txt,,,,,,,,,,,,,,,\"bad, file\",false");
    }
}
