//! Upward scaling of binary antipodal signature sets with minimum total
//! squared correlation.
//!
//! Adding a signature `s` to a set with correlation matrix `R` raises the TSC
//! by `L² + 2·sᵀRs`, so the best new signature minimizes the binary quadratic
//! form `sᵀRs`. [`sphere::extend_optimal`] solves that exactly with a
//! fixed-radius sphere search whose radius is set from the quantized minimum
//! eigenvector of `R`.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod sigcore;
pub mod sphere;

pub use error::{Error, Result};
pub use sigcore::{CorrelationMatrix, Signature, SignatureSet, Tsc};
