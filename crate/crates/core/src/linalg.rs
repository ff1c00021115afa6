//! Dense symmetric kernels on correlation matrices: Cholesky factorization,
//! the smallest eigenpair by cyclic Jacobi rotations, and sign quantization.

use crate::error::{Error, Result};
use crate::sigcore::{CorrelationMatrix, Signature};

/// Relative pivot floor; pivots below `PIVOT_FLOOR · K` trigger regularization.
pub const PIVOT_FLOOR: f64 = 1e-9;

/// Jacobi stops once the off-diagonal Frobenius mass drops below this fraction of `‖R‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Upper-triangular `U` with `UᵀU = R + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    entries: Vec<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `u_ij`; zero below the diagonal.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Diagonal shift added before factoring, zero when none was needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn jitter_applied(&self) -> bool {
        self.jitter > 0.0
    }

    /// `‖U s‖²` in floating point.
    pub fn norm_sq(&self, s: &Signature) -> f64 {
        assert_eq!(s.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = &self.entries[i * self.dim..(i + 1) * self.dim];
                let z: f64 = (i..self.dim).map(|j| row[j] * f64::from(s.get(j))).sum();
                z * z
            })
            .sum()
    }

    /// `max |(UᵀU)_mn − R_mn|`, jitter included in the residual.
    pub fn reconstruction_error(&self, r: &CorrelationMatrix) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for m in 0..n {
            for c in 0..n {
                let prod: f64 = (0..=m.min(c)).map(|k| self.get(k, m) * self.get(k, c)).sum();
                worst = worst.max((prod - r.get(m, c) as f64).abs());
            }
        }
        worst
    }
}

fn factor(a: &[f64], n: usize, floor: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut u = vec![0.0f64; n * n];
    for i in 0..n {
        let pivot = a[i * n + i] - (0..i).map(|k| u[k * n + i].powi(2)).sum::<f64>();
        if pivot.is_nan() || pivot <= floor {
            return Err((i, pivot));
        }
        let d = pivot.sqrt();
        u[i * n + i] = d;
        for j in i + 1..n {
            let dot: f64 = (0..i).map(|k| u[k * n + i] * u[k * n + j]).sum();
            u[i * n + j] = (a[i * n + j] - dot) / d;
        }
    }
    Ok(u)
}

/// Factors `R = UᵀU`.
///
/// `R` built from an overloaded binary set can be singular, e.g. when two
/// signatures coincide. If a pivot falls below `1e-9·K` the factorization is
/// retried once on `R + εI` with `ε = 1e-9·K`; the shift is recorded in the
/// returned factor. The retry only fails if a pivot is still at or below
/// `ε/2`, which means `R` is not positive semidefinite.
pub fn cholesky(r: &CorrelationMatrix) -> Result<CholeskyFactor> {
    let n = r.dim();
    let k = (0..n).map(|i| r.get(i, i)).max().unwrap_or(0).max(1) as f64;
    let floor = PIVOT_FLOOR * k;
    let mut a = r.to_f64();
    match factor(&a, n, floor) {
        Ok(entries) => Ok(CholeskyFactor { dim: n, entries, jitter: 0.0 }),
        Err(_) => {
            let jitter = floor;
            for i in 0..n {
                a[i * n + i] += jitter;
            }
            factor(&a, n, 0.5 * jitter)
                .map(|entries| CholeskyFactor { dim: n, entries, jitter })
                .map_err(|(row, pivot)| Error::SingularMatrix { row, pivot })
        }
    }
}

/// Smallest eigenvalue and a unit eigenvector for it.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `‖R v − λ v‖₂`.
    pub fn residual(&self, r: &CorrelationMatrix) -> f64 {
        let n = r.dim();
        (0..n)
            .map(|i| {
                let rv: f64 = r.row(i).iter().zip(&self.vector).map(|(&x, v)| x as f64 * v).sum();
                (rv - self.value * self.vector[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi eigensolver, returning the pair for the smallest eigenvalue.
/// Among equal smallest diagonal values the lowest index wins.
pub fn min_eigenpair(r: &CorrelationMatrix) -> Result<EigenPair> {
    let n = r.dim();
    let mut a = r.to_f64();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * frob;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, n) < target {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a, n) < target {
        converged = true;
    }

    let idx = (0..n)
        .min_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]))
        .expect("matrix dimension is at least one");
    let mut vector: Vec<f64> = (0..n).map(|k| v[k * n + idx]).collect();
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    let pair = EigenPair { value: a[idx * n + idx], vector };

    let residual = pair.residual(r);
    let allowed = 1e-8 * (r.max_abs() as f64) * n as f64;
    if !converged || residual > allowed {
        return Err(Error::EigenFailure { sweeps, residual });
    }
    Ok(pair)
}

/// Entrywise sign; zero (and `-0.0`) maps to `+1`.
pub fn quantize_sign(v: &[f64]) -> Result<Signature> {
    Signature::new(v.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect())
}
