//! Binary antipodal signatures, signature sets and exact TSC accounting.
//!
//! Every quantity here is an exact integer. A set of `K` signatures of length
//! `L` has TSC at most `K²L²`, which fits an `i64` for any `L ≤ 2¹⁵`.

mod io;

use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_set, parse_set, save_set, write_set};

/// One user's spreading code: a vector over `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(chips: Vec<i8>) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::EmptySignature);
        }
        if let Some((index, &value)) = chips.iter().enumerate().find(|(_, &c)| c != 1 && c != -1) {
            return Err(Error::Alphabet { index, value: value.into() });
        }
        Ok(Signature(chips))
    }

    /// Builds a signature from arbitrary integers, rejecting anything outside `{-1, +1}`.
    pub fn from_ints(values: &[i64]) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &c)| c != 1 && c != -1) {
            return Err(Error::Alphabet { index, value });
        }
        Self::new(values.iter().map(|&v| v as i8).collect())
    }

    /// The all `+1` signature of length `len`.
    pub fn ones(len: usize) -> Result<Self> {
        Self::new(vec![1; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chips(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, index: usize) -> i8 {
        self.0[index]
    }

    /// Exact inner product. Panics if the lengths differ.
    pub fn dot(&self, other: &Signature) -> i64 {
        assert_eq!(self.len(), other.len(), "signature lengths differ");
        self.0.iter().zip(&other.0).map(|(&a, &b)| i64::from(a * b)).sum()
    }

    /// Returns the signature or its negation, whichever has a `+1` last chip.
    pub fn normalized_last_positive(&self) -> Signature {
        if *self.0.last().expect("non-empty") < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Lexicographic order over chips in index order with `+1` ranked before `-1`.
    pub fn tie_break_cmp(&self, other: &Signature) -> std::cmp::Ordering {
        // +1 -> 0, -1 -> 1 makes the natural integer order the wanted order
        let rank = |c: &i8| (1 - c) / 2;
        self.0.iter().map(rank).cmp(other.0.iter().map(rank))
    }
}

impl Neg for Signature {
    type Output = Signature;

    fn neg(self) -> Signature {
        Signature(self.0.into_iter().map(|c| -c).collect())
    }
}

impl TryFrom<Vec<i8>> for Signature {
    type Error = Error;

    fn try_from(chips: Vec<i8>) -> Result<Self> {
        Signature::new(chips)
    }
}

impl From<Signature> for Vec<i8> {
    fn from(s: Signature) -> Vec<i8> {
        s.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if c > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

/// An ordered, non-empty collection of equal-length signatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureSet {
    signatures: Vec<Signature>,
    len: usize,
}

impl SignatureSet {
    pub fn new(signatures: Vec<Signature>) -> Result<Self> {
        let len = signatures.first().ok_or(Error::EmptySet)?.len();
        if let Some(bad) = signatures.iter().find(|s| s.len() != len) {
            return Err(Error::DimensionMismatch { expected: len, found: bad.len() });
        }
        Ok(SignatureSet { signatures, len })
    }

    /// Number of signatures `K`.
    pub fn size(&self) -> usize {
        self.signatures.len()
    }

    /// Common signature length `L`.
    pub fn signature_len(&self) -> usize {
        self.len
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Signature> {
        self.signatures.iter()
    }
}

impl<'a> IntoIterator for &'a SignatureSet {
    type Item = &'a Signature;
    type IntoIter = std::slice::Iter<'a, Signature>;

    fn into_iter(self) -> Self::IntoIter {
        self.signatures.iter()
    }
}

/// Total squared correlation of a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tsc(pub i64);

impl Tsc {
    pub fn value(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Tsc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `R = Σ sᵢsᵢᵀ`, stored row-major as exact integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from row-major entries. Only the shape and symmetry are
    /// checked; use [`correlation_matrix`] to get one from a set.
    pub fn from_entries(dim: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        for m in 0..dim {
            for n in 0..m {
                if entries[m * dim + n] != entries[n * dim + m] {
                    return Err(Error::Inconsistent(format!(
                        "correlation matrix not symmetric at ({m}, {n})"
                    )));
                }
            }
        }
        Ok(CorrelationMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn trace(&self) -> i64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `trace(R²) = Σ_mn R_mn²`, which equals the TSC of the generating set.
    pub fn trace_of_square(&self) -> i64 {
        self.entries.iter().map(|&x| x * x).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> i64 {
        self.entries.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `R + s sᵀ`.
    pub fn add_outer(&self, s: &Signature) -> Result<CorrelationMatrix> {
        check_dim(self.dim, s.len())?;
        let mut entries = self.entries.clone();
        for m in 0..self.dim {
            for n in 0..self.dim {
                entries[m * self.dim + n] += i64::from(s.get(m) * s.get(n));
            }
        }
        Ok(CorrelationMatrix { dim: self.dim, entries })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&x| x as f64).collect()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `Σᵢ Σⱼ (sᵢᵀsⱼ)²` over all ordered pairs, self terms included.
pub fn tsc(set: &SignatureSet) -> Tsc {
    let sigs = set.signatures();
    let mut total = 0i64;
    for (i, a) in sigs.iter().enumerate() {
        // diagonal term plus twice each off-diagonal pair
        total += (a.len() as i64).pow(2);
        for b in &sigs[i + 1..] {
            let c = a.dot(b);
            total += 2 * c * c;
        }
    }
    Tsc(total)
}

pub fn correlation_matrix(set: &SignatureSet) -> CorrelationMatrix {
    let dim = set.signature_len();
    let mut entries = vec![0i64; dim * dim];
    for s in set {
        let chips = s.chips();
        for m in 0..dim {
            let row = &mut entries[m * dim..(m + 1) * dim];
            let sm = chips[m];
            for (e, &sn) in row.iter_mut().zip(chips) {
                *e += i64::from(sm * sn);
            }
        }
    }
    CorrelationMatrix { dim, entries }
}

/// The exact quadratic form `sᵀRs`.
pub fn quadratic_metric(r: &CorrelationMatrix, s: &Signature) -> Result<i64> {
    check_dim(r.dim(), s.len())?;
    let chips = s.chips();
    let mut total = 0i64;
    for (m, &sm) in chips.iter().enumerate() {
        let row_dot: i64 = r.row(m).iter().zip(chips).map(|(&x, &sn)| x * i64::from(sn)).sum();
        total += i64::from(sm) * row_dot;
    }
    Ok(total)
}

/// TSC after adding one signature whose quadratic metric against the
/// existing correlation matrix is `metric`: `TSC + L² + 2·metric`.
pub fn tsc_increment(tsc_before: Tsc, metric: i64, len: usize) -> Tsc {
    debug_assert!(metric >= 0, "quadratic metric of a PSD matrix is non-negative");
    let l = len as i64;
    Tsc(tsc_before.0 + l * l + 2 * metric)
}

/// Appends `s` as signature `K + 1`, leaving the original set untouched.
pub fn extend_set(set: &SignatureSet, s: &Signature) -> Result<SignatureSet> {
    check_dim(set.signature_len(), s.len())?;
    let mut signatures = set.signatures.clone();
    signatures.push(s.clone());
    Ok(SignatureSet { signatures, len: set.len })
}

/// Sylvester Hadamard set of order `len`, rows as signatures, starting from `[+1]`.
pub fn hadamard_set(len: usize) -> Result<SignatureSet> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut rows: Vec<Vec<i8>> = vec![vec![1]];
    while rows.len() < len {
        let mut next = Vec::with_capacity(rows.len() * 2);
        for row in &rows {
            next.push(row.iter().chain(row).copied().collect());
        }
        for row in &rows {
            next.push(row.iter().copied().chain(row.iter().map(|c| -c)).collect());
        }
        rows = next;
    }
    SignatureSet::new(rows.into_iter().map(Signature).collect())
}
