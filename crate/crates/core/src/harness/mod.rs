//! Experiment orchestration: single extensions, consecutive upscaling chains,
//! method comparisons and bound-gap tables.

mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{binary_tsc_bound, welch_bound, BoundTable, BoundValue};
use crate::error::{Error, Result};
use crate::sigcore::{correlation_matrix, extend_set, load_set, tsc, tsc_increment, Signature, SignatureSet, Tsc};
use crate::sphere::{extend_optimal_for, local_descent_baseline, ml_exhaustive_capped, SearchResult, DEFAULT_ML_CAP};

pub use report::{emit_report, parse_report, Report, ReportFormat, CHAIN_CSV_COLUMNS, COMPARISON_CSV_COLUMNS};

/// Environment variable overriding the exhaustive-search cap.
pub const ML_CAP_ENV: &str = "SIGFORGE_ML_CAP";

/// Largest `L` for which [`AuditMode::Auto`] runs the exhaustive audit.
pub const AUTO_AUDIT_MAX_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "sd")]
    Sd,
    #[serde(rename = "ml")]
    Ml,
    #[serde(rename = "quant")]
    Quant,
    /// Single-bit-flip local descent; a stand-in comparator, not the
    /// slowest-descent method of the literature.
    #[serde(rename = "descent(stand-in)")]
    Descent,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Sd => "sd",
            Method::Ml => "ml",
            Method::Quant => "quant",
            Method::Descent => "descent(stand-in)",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(Method::Sd),
            "ml" => Ok(Method::Ml),
            "quant" => Ok(Method::Quant),
            "descent" | "descent(stand-in)" => Ok(Method::Descent),
            other => Err(Error::InvalidArgument(format!("unknown method \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuditMode {
    /// On for `L ≤ 16`, off above.
    #[default]
    Auto,
    On,
    Off,
}

impl AuditMode {
    pub fn active(self, len: usize) -> bool {
        match self {
            AuditMode::Auto => len <= AUTO_AUDIT_MAX_LEN,
            AuditMode::On => true,
            AuditMode::Off => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub ml_cap: usize,
    pub audit: AuditMode,
    pub bound_table: Option<BoundTable>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions { ml_cap: DEFAULT_ML_CAP, audit: AuditMode::Auto, bound_table: None }
    }
}

impl HarnessOptions {
    /// Defaults with the exhaustive cap taken from `SIGFORGE_ML_CAP` when set.
    pub fn from_env() -> Result<Self> {
        let mut opts = HarnessOptions::default();
        if let Ok(raw) = std::env::var(ML_CAP_ENV) {
            opts.ml_cap = raw
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{ML_CAP_ENV}=\"{raw}\" is not a count")))?;
        }
        Ok(opts)
    }

    fn binary_bound(&self, k: usize, l: usize) -> Result<Option<BoundValue>> {
        match binary_tsc_bound(k, l, self.bound_table.as_ref()) {
            Ok(b) => Ok(Some(b)),
            Err(Error::Underloaded { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Exhaustive cross-check of the sphere search on one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub sd_metric: i64,
    pub ml_metric: i64,
    pub agrees: bool,
}

/// One signature added to a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRecord {
    pub k_before: usize,
    pub l: usize,
    pub tsc_before: i64,
    pub tsc_after: i64,
    pub method: Method,
    pub metric: i64,
    pub signature: Signature,
    pub radius_c: f64,
    pub lambda_min: f64,
    pub quant_metric: i64,
    pub nodes_visited: u64,
    pub candidates_enumerated: u64,
    pub fp_bound: Option<f64>,
    pub fp_bound_saturated: bool,
    pub jitter_applied: bool,
    pub welch_after: BoundValue,
    /// `None` when `K + 1 < L`, outside the overloaded regime.
    pub binary_bound_after: Option<BoundValue>,
    pub audit: Option<Audit>,
}

impl ExtensionRecord {
    fn check(&self) -> Result<()> {
        let l = self.l as i64;
        if self.tsc_after - self.tsc_before != l * l + 2 * self.metric {
            return Err(Error::Inconsistent(format!(
                "TSC step {} -> {} does not match metric {}",
                self.tsc_before, self.tsc_after, self.metric
            )));
        }
        if self.tsc_after < self.welch_after.value {
            return Err(Error::Inconsistent(format!(
                "TSC {} below the Welch bound {}",
                self.tsc_after, self.welch_after.value
            )));
        }
        Ok(())
    }
}

/// Adds one signature to `set` with `method` and records everything about the step.
pub fn extend_with(set: &SignatureSet, method: Method, opts: &HarnessOptions) -> Result<(SignatureSet, ExtensionRecord)> {
    extend_step(set, tsc(set), method, opts)
}

fn extend_step(
    set: &SignatureSet,
    tsc_before: Tsc,
    method: Method,
    opts: &HarnessOptions,
) -> Result<(SignatureSet, ExtensionRecord)> {
    let (k, l) = (set.size(), set.signature_len());
    let r = correlation_matrix(set);
    let ext = extend_optimal_for(&r)?;
    let audit_on = opts.audit.active(l);

    let ml = if method == Method::Ml || audit_on { Some(ml_exhaustive_capped(&r, opts.ml_cap)?) } else { None };
    let chosen = match method {
        Method::Sd => ext.search.clone(),
        Method::Ml => ml.clone().expect("computed above"),
        Method::Quant => SearchResult {
            best: ext.setup.quant.clone(),
            best_metric: ext.setup.quant_metric,
            candidates_enumerated: 1,
            nodes_visited: 0,
            radius_c: None,
            ties: 1,
            candidates: None,
        },
        Method::Descent => local_descent_baseline(&r, &ext.setup.quant)?,
    };
    let audit = ml.filter(|_| audit_on).map(|ml| Audit {
        sd_metric: ext.metric,
        ml_metric: ml.best_metric,
        agrees: ext.metric == ml.best_metric,
    });

    let signature = chosen.best.clone();
    let metric = chosen.best_metric;
    let extended = extend_set(set, &signature)?;
    let tsc_after = tsc_increment(tsc_before, metric, l);
    let record = ExtensionRecord {
        k_before: k,
        l,
        tsc_before: tsc_before.value(),
        tsc_after: tsc_after.value(),
        method,
        metric,
        signature,
        radius_c: ext.setup.radius(),
        lambda_min: ext.setup.eigen.value,
        quant_metric: ext.setup.quant_metric,
        nodes_visited: chosen.nodes_visited,
        candidates_enumerated: chosen.candidates_enumerated,
        fp_bound: ext.fp_bound.map(|b| b.value),
        fp_bound_saturated: ext.fp_bound.is_some_and(|b| b.saturated),
        jitter_applied: ext.jitter_applied,
        welch_after: welch_bound(k + 1, l),
        binary_bound_after: opts.binary_bound(k + 1, l)?,
        audit,
    };
    record.check()?;
    Ok((extended, record))
}

/// Where a chain started.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetDescriptor {
    pub source: String,
    pub k: usize,
    pub l: usize,
    pub tsc: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub initial: SetDescriptor,
    pub target_k: usize,
    pub method: Method,
    pub audit: bool,
    pub records: Vec<ExtensionRecord>,
}

impl ChainReport {
    /// False if any audited step found the sphere search and the exhaustive
    /// search disagreeing.
    pub fn all_agree(&self) -> bool {
        self.records.iter().all(|r| r.audit.is_none_or(|a| a.agrees))
    }

    /// The set reached at the end of the chain, given the set it started from.
    pub fn final_set(&self, initial: &SignatureSet) -> Result<SignatureSet> {
        self.records.iter().try_fold(initial.clone(), |set, rec| extend_set(&set, &rec.signature))
    }
}

/// Adds signatures one at a time until the set has `target_k` members.
pub fn upscale_chain(
    initial: &SignatureSet,
    source: &str,
    target_k: usize,
    method: Method,
    opts: &HarnessOptions,
) -> Result<ChainReport> {
    if target_k <= initial.size() {
        return Err(Error::InvalidArgument(format!(
            "target K={target_k} must exceed the initial K={}",
            initial.size()
        )));
    }
    let initial_tsc = tsc(initial);
    let mut set = initial.clone();
    let mut current = initial_tsc;
    let mut records = Vec::with_capacity(target_k - initial.size());
    while set.size() < target_k {
        let (next, record) = extend_step(&set, current, method, opts)?;
        current = Tsc(record.tsc_after);
        set = next;
        records.push(record);
    }
    if tsc(&set) != current {
        return Err(Error::Inconsistent(format!(
            "chained TSC {current} differs from recomputed {}",
            tsc(&set)
        )));
    }
    Ok(ChainReport {
        initial: SetDescriptor {
            source: source.to_string(),
            k: initial.size(),
            l: initial.signature_len(),
            tsc: initial_tsc.value(),
        },
        target_k,
        method,
        audit: opts.audit.active(initial.signature_len()),
        records,
    })
}

/// TSC after one extension under each method, with gaps to the binary bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: String,
    pub k_after: usize,
    pub l: usize,
    pub tsc_before: i64,
    pub tsc_quant: i64,
    pub tsc_descent: i64,
    pub tsc_sd: i64,
    pub tsc_ml: i64,
    pub sd_equals_ml: bool,
    pub bound_after: Option<BoundValue>,
    pub gap_quant: Option<i64>,
    pub gap_descent: Option<i64>,
    pub gap_sd: Option<i64>,
    pub gap_ml: Option<i64>,
}

/// Runs all four methods on the same set. Fails with an internal-consistency
/// error if the sphere search does not match the exhaustive search.
pub fn compare_methods(set: &SignatureSet, source: &str, opts: &HarnessOptions) -> Result<ComparisonRow> {
    let (k, l) = (set.size(), set.signature_len());
    if l > opts.ml_cap {
        return Err(Error::CapExceeded { l, cap: opts.ml_cap });
    }
    let before = tsc(set);
    let r = correlation_matrix(set);
    let ext = extend_optimal_for(&r)?;
    let ml = ml_exhaustive_capped(&r, opts.ml_cap)?;
    let descent = local_descent_baseline(&r, &ext.setup.quant)?;

    let after = |metric| tsc_increment(before, metric, l).value();
    let bound = opts.binary_bound(k + 1, l)?;
    let gap = |t: i64| bound.map(|b| t - b.value);
    let (tq, td, ts, tm) =
        (after(ext.setup.quant_metric), after(descent.best_metric), after(ext.metric), after(ml.best_metric));
    let row = ComparisonRow {
        source: source.to_string(),
        k_after: k + 1,
        l,
        tsc_before: before.value(),
        tsc_quant: tq,
        tsc_descent: td,
        tsc_sd: ts,
        tsc_ml: tm,
        sd_equals_ml: ts == tm,
        bound_after: bound,
        gap_quant: gap(tq),
        gap_descent: gap(td),
        gap_sd: gap(ts),
        gap_ml: gap(tm),
    };
    if !row.sd_equals_ml {
        return Err(Error::Inconsistent(format!("{source}: sphere TSC {ts} differs from exhaustive TSC {tm}")));
    }
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub source: String,
    pub row: Option<ComparisonRow>,
    pub error: Option<String>,
    /// Set when the failure was an internal-consistency failure rather than bad input.
    #[serde(default)]
    pub internal: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    pub fn has_errors(&self) -> bool {
        self.entries.iter().any(|e| e.error.is_some())
    }

    pub fn has_internal_errors(&self) -> bool {
        self.entries.iter().any(|e| e.internal)
    }
}

/// Runs [`compare_methods`] on every set file. A bad file is reported in its
/// entry and does not stop the batch; entries keep the input order.
pub fn one_shot_experiment<P: AsRef<Path> + Sync>(paths: &[P], opts: &HarnessOptions) -> ComparisonReport {
    let entries = paths
        .par_iter()
        .map(|p| {
            let source = p.as_ref().display().to_string();
            match load_set(p).and_then(|set| compare_methods(&set, &source, opts)) {
                Ok(row) => ComparisonEntry { source, row: Some(row), error: None, internal: false },
                Err(e) => ComparisonEntry { source, row: None, internal: e.is_internal(), error: Some(e.to_string()) },
            }
        })
        .collect();
    ComparisonReport { entries }
}
