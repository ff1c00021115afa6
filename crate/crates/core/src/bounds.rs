//! Closed-form TSC lower bounds and the Fincke–Pohst operation-count bound.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Welch,
    BinaryTable2,
    BinaryFallbackWelch,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Welch => "welch",
            BoundKind::BinaryTable2 => "binary_table2",
            BoundKind::BinaryFallbackWelch => "binary_fallback_welch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: i64,
    pub kind: BoundKind,
}

/// `TSC ≥ K·L·max(K, L)` for any real set of `K` length-`L` signatures with `‖s‖² = L`.
pub fn welch_bound(k: usize, l: usize) -> BoundValue {
    BoundValue { value: (k as i64) * (l as i64) * (k.max(l) as i64), kind: BoundKind::Welch }
}

/// One polynomial term `coef · K^k_pow · L^l_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term(pub f64, pub u32, pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CaseRecord {
    k_mod: usize,
    l_mod: usize,
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct TableFile {
    #[serde(default, rename = "case")]
    cases: Vec<CaseRecord>,
}

/// Binary min-TSC lower bounds keyed by `(K mod 4, L mod 4)`.
///
/// Each case is a polynomial in `K` and `L`. The table ships empty; cases are
/// supplied from a TOML file:
///
/// ```toml
/// [[case]]
/// k_mod = 0
/// l_mod = 0
/// terms = [[1.0, 2, 1]]   # K²L
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundTable {
    cases: BTreeMap<(usize, usize), Vec<Term>>,
}

impl BoundTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, k_mod: usize, l_mod: usize, terms: Vec<Term>) -> Result<()> {
        if k_mod > 3 || l_mod > 3 {
            return Err(Error::BoundTable(format!("residues must be in 0..4, got ({k_mod}, {l_mod})")));
        }
        if self.cases.insert((k_mod, l_mod), terms).is_some() {
            return Err(Error::BoundTable(format!("duplicate case ({k_mod}, {l_mod})")));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: TableFile = toml::from_str(text).map_err(|e| Error::BoundTable(e.to_string()))?;
        let mut table = BoundTable::new();
        for case in file.cases {
            table.insert(case.k_mod, case.l_mod, case.terms)?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    fn evaluate(&self, k: usize, l: usize) -> Option<Result<i64>> {
        let terms = self.cases.get(&(k % 4, l % 4))?;
        let value: f64 = terms
            .iter()
            .map(|&Term(c, kp, lp)| c * (k as f64).powi(kp as i32) * (l as f64).powi(lp as i32))
            .sum();
        let rounded = value.round();
        if !value.is_finite() || (value - rounded).abs() > 1e-6 {
            return Some(Err(Error::BoundTable(format!(
                "case ({}, {}) gives non-integer value {value} at K={k}, L={l}",
                k % 4,
                l % 4
            ))));
        }
        Some(Ok(rounded as i64))
    }
}

/// Lower bound on the TSC of a binary antipodal set in the overloaded regime.
///
/// Without a table entry for `(K mod 4, L mod 4)` this returns the Welch bound
/// tagged [`BoundKind::BinaryFallbackWelch`].
pub fn binary_tsc_bound(k: usize, l: usize, table: Option<&BoundTable>) -> Result<BoundValue> {
    if k < l {
        return Err(Error::Underloaded { k, l });
    }
    let welch = welch_bound(k, l);
    match table.and_then(|t| t.evaluate(k, l)) {
        None => Ok(BoundValue { value: welch.value, kind: BoundKind::BinaryFallbackWelch }),
        Some(Err(e)) => Err(e),
        Some(Ok(value)) if value < welch.value => Err(Error::BoundTable(format!(
            "entry for K={k}, L={l} evaluates to {value}, below the Welch bound {}",
            welch.value
        ))),
        Some(Ok(value)) => Ok(BoundValue { value, kind: BoundKind::BinaryTable2 }),
    }
}

/// Result of the operation-count bound. `saturated` is set when the binomial
/// factor overflows `f64`; `value` is then `f64::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpBound {
    pub value: f64,
    pub saturated: bool,
}

/// Upper bound on the arithmetic operations of a fixed-radius Fincke–Pohst search:
///
/// `(2L³+3L²−5L)/6 + (L²+12L−7)/2 · ((2⌊√(Ct)⌋+1)·C(⌊4Ct⌋+L−1, ⌊4Ct⌋) + 1)`
///
/// where `1/t` lower-bounds the squared diagonal of the Cholesky factor.
pub fn fp_operation_bound(l: usize, c: f64, t: f64) -> Result<FpBound> {
    if l == 0 || !(c > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "operation bound needs L >= 1, C > 0, t > 0 (got L={l}, C={c}, t={t})"
        )));
    }
    let lf = l as f64;
    let setup = (2.0 * lf.powi(3) + 3.0 * lf.powi(2) - 5.0 * lf) / 6.0;
    let per_point = (lf * lf + 12.0 * lf - 7.0) / 2.0;
    let ct = c * t;
    let width = 2.0 * ct.sqrt().floor() + 1.0;
    let g = (4.0 * ct).floor();

    // C(g + L - 1, g) = C(g + L - 1, L - 1), built up so each partial product is an integer
    let mut binom = 1.0f64;
    for i in 1..l {
        let i = i as f64;
        binom = binom * (g + i) / i;
    }
    let value = setup + per_point * (width * binom + 1.0);
    if !value.is_finite() {
        return Ok(FpBound { value: f64::MAX, saturated: true });
    }
    Ok(FpBound { value, saturated: false })
}
