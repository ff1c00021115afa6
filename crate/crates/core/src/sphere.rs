//! Minimization of `sᵀRs` over `s ∈ {±1}^L`.
//!
//! The main entry point is [`SphereDecoder`], a fixed-radius depth-first
//! enumeration over the Cholesky factor of `R` with per-coordinate interval
//! pruning specialised to the antipodal alphabet. The radius comes from the
//! sign-quantized minimum eigenvector of `R`, which guarantees a non-empty
//! sphere and therefore an exact minimizer. [`ml_exhaustive`] and
//! [`local_descent_baseline`] are the reference and comparison methods.

use crate::bounds::{fp_operation_bound, FpBound};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, min_eigenpair, quantize_sign, CholeskyFactor, EigenPair};
use crate::sigcore::{correlation_matrix, quadratic_metric, CorrelationMatrix, Signature, SignatureSet};

/// Relative (and absolute) slack on the squared radius in float comparisons.
pub const RADIUS_INFLATION: f64 = 1e-9;

/// Largest `L` that [`ml_exhaustive`] accepts unless told otherwise.
pub const DEFAULT_ML_CAP: usize = 24;

/// `‖Us‖² = Σᵢ q_ii (sᵢ + Σ_{j>i} q_ij sⱼ)²` with `q_ii = u_ii²`, `q_ij = u_ij / u_ii`.
#[derive(Debug, Clone, PartialEq)]
pub struct QDecomposition {
    dim: usize,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl QDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `q_ij` for `j > i`; zero otherwise.
    pub fn upper(&self, i: usize, j: usize) -> f64 {
        self.upper[i * self.dim + j]
    }

    pub fn min_diag(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn weighted_norm_sq(&self, s: &Signature) -> f64 {
        assert_eq!(s.len(), self.dim);
        (0..self.dim).map(|i| self.diag[i] * (f64::from(s.get(i)) + self.delta(i, s.chips())).powi(2)).sum()
    }

    /// `Δ_i = Σ_{j>i} q_ij sⱼ`.
    fn delta(&self, i: usize, s: &[i8]) -> f64 {
        let row = &self.upper[i * self.dim..(i + 1) * self.dim];
        (i + 1..self.dim).map(|j| row[j] * f64::from(s[j])).sum()
    }
}

pub fn q_decomposition(u: &CholeskyFactor) -> Result<QDecomposition> {
    let n = u.dim();
    let mut diag = Vec::with_capacity(n);
    let mut upper = vec![0.0; n * n];
    for i in 0..n {
        let d = u.get(i, i);
        if !(d > 0.0) {
            return Err(Error::SingularMatrix { row: i, pivot: d * d });
        }
        diag.push(d * d);
        for j in i + 1..n {
            upper[i * n + j] = u.get(i, j) / d;
        }
    }
    Ok(QDecomposition { dim: n, diag, upper })
}

/// Integer interval `[lower, upper]` for one coordinate, already clamped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lower: i32,
    pub upper: i32,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lower: 1, upper: -1 };

    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn admits(&self, value: i8) -> bool {
        let v = i32::from(value);
        self.lower <= v && v <= self.upper
    }

    /// Admitted antipodal values, `+1` first. `0` is never produced.
    pub fn antipodal(self) -> impl Iterator<Item = i8> {
        [1i8, -1].into_iter().filter(move |&v| self.admits(v))
    }
}

/// `UB = min(⌊√(C_k/q_kk) − Δ_k⌋, 1)`, `LB = max(⌈−√(C_k/q_kk) − Δ_k⌉, −1)`.
/// A negative budget gives [`Interval::EMPTY`].
pub fn interval_bounds(budget: f64, q_kk: f64, delta: f64) -> Interval {
    if !(budget >= 0.0) {
        return Interval::EMPTY;
    }
    let half_width = (budget / q_kk).sqrt();
    let upper = (half_width - delta).floor().min(1.0);
    let lower = (-half_width - delta).ceil().max(-1.0);
    if upper < lower {
        return Interval::EMPTY;
    }
    Interval { lower: lower as i32, upper: upper as i32 }
}

/// One expanded node: entry `level` (0-based) has just been fixed.
#[derive(Debug, Clone, Copy)]
pub struct SearchState<'a> {
    pub level: usize,
    /// `Δ` at this level, from the entries below it in the tree.
    pub delta: f64,
    /// Remaining budget before fixing this entry.
    pub budget: f64,
    /// Budget handed to the next level: `budget − q_kk (Δ + s_k)²`.
    pub next_budget: f64,
    /// Fixed entries `s[level..]`.
    pub partial: &'a [i8],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusPolicy {
    /// The radius never changes during the search.
    #[default]
    Fixed,
    /// Shrink the radius to the best exact metric found so far.
    Shrinking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOptions {
    pub policy: RadiusPolicy,
    pub inflation: f64,
    pub collect_candidates: bool,
}

impl Default for SphereOptions {
    fn default() -> Self {
        SphereOptions { policy: RadiusPolicy::Fixed, inflation: RADIUS_INFLATION, collect_candidates: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Signature,
    pub best_metric: i64,
    pub candidates_enumerated: u64,
    pub nodes_visited: u64,
    /// Squared radius the search ran with; `None` for methods without one.
    pub radius_c: Option<f64>,
    /// Number of enumerated candidates sharing the best metric.
    pub ties: u64,
    /// Every enumerated candidate in visiting order, when requested.
    pub candidates: Option<Vec<Signature>>,
}

/// Returns true if `a` comes before `b` in tie-break order (`+1` before `-1`, index order).
fn precedes(a: &[i8], b: &[i8]) -> bool {
    // -a < -b lexicographically is exactly "+1 ranks first"
    a.iter().map(|&c| -c).lt(b.iter().map(|&c| -c))
}

struct Incumbent {
    chips: Vec<i8>,
    metric: i64,
    ties: u64,
}

impl Incumbent {
    fn offer(slot: &mut Option<Incumbent>, chips: &[i8], metric: i64) -> bool {
        match slot {
            None => {
                *slot = Some(Incumbent { chips: chips.to_vec(), metric, ties: 1 });
                true
            }
            Some(best) if metric < best.metric => {
                *best = Incumbent { chips: chips.to_vec(), metric, ties: 1 };
                true
            }
            Some(best) if metric == best.metric => {
                best.ties += 1;
                if precedes(chips, &best.chips) {
                    best.chips.copy_from_slice(chips);
                }
                false
            }
            Some(_) => false,
        }
    }
}

/// Prepared sphere search for one correlation matrix.
#[derive(Debug, Clone)]
pub struct SphereDecoder<'r> {
    r: &'r CorrelationMatrix,
    factor: CholeskyFactor,
    q: QDecomposition,
}

impl<'r> SphereDecoder<'r> {
    pub fn new(r: &'r CorrelationMatrix) -> Result<Self> {
        let factor = cholesky(r)?;
        let q = q_decomposition(&factor)?;
        Ok(SphereDecoder { r, factor, q })
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn q(&self) -> &QDecomposition {
        &self.q
    }

    /// Squared radius actually compared against in floating point.
    ///
    /// The factor may describe `R + εI` rather than `R`; since every binary `s`
    /// has `‖s‖² = L`, that adds exactly `εL` to each float metric.
    pub fn effective_radius(&self, c: f64, inflation: f64) -> f64 {
        c * (1.0 + inflation) + inflation + self.factor.jitter() * self.q.dim() as f64
    }

    pub fn search(&self, c: f64, options: &SphereOptions) -> Result<SearchResult> {
        self.search_observed(c, options, |_| {})
    }

    /// Depth-first enumeration from the last entry down to the first. The last
    /// entry is pinned to `+1`; values at each level are tried `+1` then `-1`.
    /// `observer` sees every expanded node.
    pub fn search_observed<F>(&self, c: f64, options: &SphereOptions, mut observer: F) -> Result<SearchResult>
    where
        F: FnMut(&SearchState<'_>),
    {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("squared radius must be finite and >= 0, got {c}")));
        }
        let n = self.q.dim();
        let mut walk = Walk {
            decoder: self,
            options,
            radius: self.effective_radius(c, options.inflation),
            chips: vec![1i8; n],
            nodes: 0,
            enumerated: 0,
            best: None,
            candidates: options.collect_candidates.then(Vec::new),
        };
        walk.descend(n - 1, 0.0, &mut observer)?;

        let best = walk.best.ok_or(Error::EmptySphere { radius: c })?;
        Ok(SearchResult {
            best: Signature::new(best.chips)?,
            best_metric: best.metric,
            candidates_enumerated: walk.enumerated,
            nodes_visited: walk.nodes,
            radius_c: Some(c),
            ties: best.ties,
            candidates: walk.candidates,
        })
    }
}

struct Walk<'a, 'r> {
    decoder: &'a SphereDecoder<'r>,
    options: &'a SphereOptions,
    radius: f64,
    chips: Vec<i8>,
    nodes: u64,
    enumerated: u64,
    best: Option<Incumbent>,
    candidates: Option<Vec<Signature>>,
}

impl Walk<'_, '_> {
    /// `consumed` is the float metric of the entries already fixed; the budget
    /// is taken against the current radius so a shrinking radius prunes at once.
    fn descend<F>(&mut self, level: usize, consumed: f64, observer: &mut F) -> Result<()>
    where
        F: FnMut(&SearchState<'_>),
    {
        let q = &self.decoder.q;
        let q_kk = q.diag[level];
        let delta = q.delta(level, &self.chips);
        let top = level == q.dim() - 1;

        for value in [1i8, -1] {
            if top && value < 0 {
                continue;
            }
            let budget = self.radius - consumed;
            if !interval_bounds(budget, q_kk, delta).admits(value) {
                continue;
            }
            self.chips[level] = value;
            let term = q_kk * (delta + f64::from(value)).powi(2);
            self.nodes += 1;
            observer(&SearchState {
                level,
                delta,
                budget,
                next_budget: budget - term,
                partial: &self.chips[level..],
            });

            if level == 0 {
                self.accept()?;
            } else {
                self.descend(level - 1, consumed + term, observer)?;
            }
        }
        Ok(())
    }

    fn accept(&mut self) -> Result<()> {
        let sig = Signature::new(self.chips.clone())?;
        let metric = quadratic_metric(self.decoder.r, &sig)?;
        self.enumerated += 1;
        if let Some(list) = self.candidates.as_mut() {
            list.push(sig);
        }
        let improved = Incumbent::offer(&mut self.best, &self.chips, metric);
        if improved && self.options.policy == RadiusPolicy::Shrinking {
            self.radius = self.decoder.effective_radius(metric as f64, self.options.inflation).min(self.radius);
        }
        Ok(())
    }
}

/// `C = s_quantᵀ R s_quant`, returned as a real.
pub fn radius_squared(r: &CorrelationMatrix, s_quant: &Signature) -> Result<f64> {
    Ok(quadratic_metric(r, s_quant)? as f64)
}

/// The radius rule: minimum eigenpair, its sign quantization (normalized to a
/// `+1` last entry) and the resulting squared radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSetup {
    pub eigen: EigenPair,
    pub quant: Signature,
    pub quant_metric: i64,
}

impl RadiusSetup {
    pub fn new(r: &CorrelationMatrix) -> Result<Self> {
        let eigen = min_eigenpair(r)?;
        let quant = quantize_sign(&eigen.vector)?.normalized_last_positive();
        let quant_metric = quadratic_metric(r, &quant)?;
        Ok(RadiusSetup { eigen, quant, quant_metric })
    }

    pub fn radius(&self) -> f64 {
        self.quant_metric as f64
    }
}

/// Fixed-radius sphere search of `R` with squared radius `c`.
pub fn sphere_search(r: &CorrelationMatrix, c: f64) -> Result<SearchResult> {
    SphereDecoder::new(r)?.search(c, &SphereOptions::default())
}

pub fn ml_exhaustive(r: &CorrelationMatrix) -> Result<SearchResult> {
    ml_exhaustive_capped(r, DEFAULT_ML_CAP)
}

/// Scans all `2^(L−1)` signatures with a `+1` last entry in Gray-code order,
/// updating the exact metric incrementally.
pub fn ml_exhaustive_capped(r: &CorrelationMatrix, cap: usize) -> Result<SearchResult> {
    let n = r.dim();
    if n > cap || n > 63 {
        return Err(Error::CapExceeded { l: n, cap });
    }
    let mut s = vec![1i8; n];
    // rs = R s
    let mut rs: Vec<i64> = (0..n).map(|i| r.row(i).iter().sum()).collect();
    let mut metric: i64 = rs.iter().sum();
    let mut best = None;
    Incumbent::offer(&mut best, &s, metric);

    let total: u64 = 1 << (n - 1);
    for step in 1..total {
        let j = step.trailing_zeros() as usize;
        let sj = i64::from(s[j]);
        metric += 4 * r.get(j, j) - 4 * sj * rs[j];
        for (m, v) in rs.iter_mut().enumerate() {
            *v -= 2 * sj * r.get(m, j);
        }
        s[j] = -s[j];
        Incumbent::offer(&mut best, &s, metric);
    }

    let best = best.expect("at least one signature scanned");
    Ok(SearchResult {
        best: Signature::new(best.chips)?,
        best_metric: best.metric,
        candidates_enumerated: total,
        nodes_visited: total,
        radius_c: None,
        ties: best.ties,
        candidates: None,
    })
}

/// Single-bit-flip descent on the exact metric from `s0`.
///
/// Each pass scans indices in ascending order and takes the first flip that
/// strictly lowers the metric, then starts a new pass; it stops when a full
/// pass finds no improving flip. This is a simple local-search comparator,
/// not an optimal method.
pub fn local_descent_baseline(r: &CorrelationMatrix, s0: &Signature) -> Result<SearchResult> {
    let n = r.dim();
    let mut metric = quadratic_metric(r, s0)?;
    let mut s = s0.chips().to_vec();
    let mut rs: Vec<i64> = (0..n)
        .map(|i| r.row(i).iter().zip(&s).map(|(&x, &c)| x * i64::from(c)).sum())
        .collect();
    let mut evaluated = 0u64;
    let mut visited = 1u64;
    loop {
        let mut moved = false;
        for j in 0..n {
            evaluated += 1;
            let sj = i64::from(s[j]);
            let change = 4 * r.get(j, j) - 4 * sj * rs[j];
            if change < 0 {
                metric += change;
                for (m, v) in rs.iter_mut().enumerate() {
                    *v -= 2 * sj * r.get(m, j);
                }
                s[j] = -s[j];
                visited += 1;
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(SearchResult {
        best: Signature::new(s)?,
        best_metric: metric,
        candidates_enumerated: visited,
        nodes_visited: evaluated,
        radius_c: None,
        ties: 1,
        candidates: None,
    })
}

/// Everything computed while choosing the optimal next signature for a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub signature: Signature,
    pub metric: i64,
    pub setup: RadiusSetup,
    pub search: SearchResult,
    /// `1 / min q_ii`, the `t` of the operation-count bound.
    pub t: f64,
    /// `None` when the squared radius is zero and the bound is undefined.
    pub fp_bound: Option<FpBound>,
    pub jitter_applied: bool,
}

/// Chooses the signature minimizing `sᵀR_K s` for the set's correlation matrix.
pub fn extend_optimal(set: &SignatureSet) -> Result<Extension> {
    let r = correlation_matrix(set);
    extend_optimal_for(&r)
}

pub fn extend_optimal_for(r: &CorrelationMatrix) -> Result<Extension> {
    let setup = RadiusSetup::new(r)?;
    let decoder = SphereDecoder::new(r)?;
    let c = setup.radius();
    let search = decoder.search(c, &SphereOptions::default()).map_err(|e| match e {
        Error::EmptySphere { radius } => Error::Inconsistent(format!(
            "sphere of squared radius {radius} excluded the quantized eigenvector"
        )),
        other => other,
    })?;
    if search.best_metric > setup.quant_metric {
        return Err(Error::Inconsistent(format!(
            "sphere optimum {} exceeds radius metric {}",
            search.best_metric, setup.quant_metric
        )));
    }
    let t = 1.0 / decoder.q().min_diag();
    let fp_bound = if c > 0.0 { Some(fp_operation_bound(r.dim(), c, t)?) } else { None };
    Ok(Extension {
        signature: search.best.clone(),
        metric: search.best_metric,
        setup,
        t,
        fp_bound,
        jitter_applied: decoder.factor().jitter_applied(),
        search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::hadamard_set;

    fn sig(v: &[i8]) -> Signature {
        Signature::new(v.to_vec()).unwrap()
    }

    #[test]
    fn interval_examples() {
        assert_eq!(interval_bounds(16.0, 4.0, 0.0), Interval { lower: -1, upper: 1 });
        let i = interval_bounds(0.5, 4.0, 0.0);
        assert_eq!(i, Interval { lower: 0, upper: 0 });
        assert_eq!(i.antipodal().count(), 0);
        let i = interval_bounds(4.0, 1.0, 1.5);
        assert_eq!(i, Interval { lower: -1, upper: 0 });
        assert_eq!(i.antipodal().collect::<Vec<_>>(), vec![-1]);
        assert!(interval_bounds(-1e-12, 1.0, -1.0).is_empty());
        assert_eq!(interval_bounds(16.0, 4.0, 0.0).antipodal().collect::<Vec<_>>(), vec![1, -1]);
    }

    #[test]
    fn q_of_scaled_identity_and_2x2() {
        let r = correlation_matrix(&hadamard_set(4).unwrap());
        let q = q_decomposition(&cholesky(&r).unwrap()).unwrap();
        assert_eq!(q.diag(), &[4.0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(q.upper(i, j), 0.0);
            }
        }

        let r = CorrelationMatrix::from_entries(2, vec![2, 1, 1, 2]).unwrap();
        let q = q_decomposition(&cholesky(&r).unwrap()).unwrap();
        assert!((q.diag()[0] - 2.0).abs() < 1e-14);
        assert!((q.diag()[1] - 1.5).abs() < 1e-14);
        assert!((q.upper(0, 1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn scaled_identity_search_enumerates_half_cube() {
        let r = correlation_matrix(&hadamard_set(4).unwrap());
        assert_eq!(radius_squared(&r, &sig(&[1, -1, -1, 1])).unwrap(), 16.0);
        let res = sphere_search(&r, 16.0).unwrap();
        assert_eq!(res.best_metric, 16);
        assert_eq!(res.best, sig(&[1, 1, 1, 1]));
        assert_eq!(res.candidates_enumerated, 8);
        assert_eq!(res.ties, 8);
    }

    #[test]
    fn duplicated_pair_search_uses_jitter() {
        let s = sig(&[1, 1]);
        let set = SignatureSet::new(vec![s.clone(), s]).unwrap();
        let r = correlation_matrix(&set);
        let setup = RadiusSetup::new(&r).unwrap();
        assert_eq!(setup.quant, sig(&[-1, 1]));
        assert_eq!(setup.quant_metric, 0);
        let res = sphere_search(&r, setup.radius()).unwrap();
        assert_eq!(res.best, sig(&[-1, 1]));
        assert_eq!(res.best_metric, 0);
        assert_eq!(res.candidates_enumerated, 1);
        let ext = extend_optimal(&set).unwrap();
        assert!(ext.jitter_applied);
        assert!(ext.fp_bound.is_none());
    }

    #[test]
    fn radius_below_everything_is_empty() {
        let r = correlation_matrix(&hadamard_set(4).unwrap());
        assert!(matches!(sphere_search(&r, 15.0), Err(Error::EmptySphere { .. })));
        assert!(matches!(sphere_search(&r, -1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ml_and_descent_on_identity() {
        let r = correlation_matrix(&hadamard_set(4).unwrap());
        let ml = ml_exhaustive(&r).unwrap();
        assert_eq!(ml.best_metric, 16);
        assert_eq!(ml.best, sig(&[1, 1, 1, 1]));
        assert_eq!(ml.candidates_enumerated, 8);
        let s0 = sig(&[-1, 1, -1, 1]);
        let d = local_descent_baseline(&r, &s0).unwrap();
        assert_eq!(d.best, s0);
        assert_eq!(d.best_metric, 16);
    }

    #[test]
    fn ml_cap() {
        let r = correlation_matrix(&hadamard_set(8).unwrap());
        assert!(matches!(ml_exhaustive_capped(&r, 7), Err(Error::CapExceeded { l: 8, cap: 7 })));
    }

    #[test]
    fn shrinking_radius_agrees() {
        let set = SignatureSet::new(vec![
            sig(&[1, 1, 1, -1, 1]),
            sig(&[1, -1, 1, 1, 1]),
            sig(&[-1, 1, 1, 1, -1]),
            sig(&[1, 1, -1, -1, -1]),
            sig(&[1, -1, -1, 1, 1]),
            sig(&[-1, -1, 1, -1, 1]),
        ])
        .unwrap();
        let r = correlation_matrix(&set);
        let setup = RadiusSetup::new(&r).unwrap();
        let dec = SphereDecoder::new(&r).unwrap();
        let fixed = dec.search(setup.radius(), &SphereOptions::default()).unwrap();
        let shrink = dec
            .search(setup.radius(), &SphereOptions { policy: RadiusPolicy::Shrinking, ..Default::default() })
            .unwrap();
        assert_eq!(fixed.best, shrink.best);
        assert_eq!(fixed.best_metric, ml_exhaustive(&r).unwrap().best_metric);
        assert!(shrink.nodes_visited <= fixed.nodes_visited);
    }

    #[test]
    fn extension_of_hadamard_sets() {
        let ext = extend_optimal(&hadamard_set(16).unwrap()).unwrap();
        assert_eq!(ext.metric, 256);
        assert_eq!(ext.setup.quant_metric, 256);
        let ext4 = extend_optimal(&hadamard_set(4).unwrap()).unwrap();
        assert_eq!(ext4.metric, 16);
        assert!(!ext4.jitter_applied);
        assert_eq!(ext4.t, 0.25);
        assert!(ext4.fp_bound.is_some());
    }
}
