//! Numerical toolkit for the entropy method on union-closed families.
//!
//! * [`kernel`]: binary entropy `H`, the rate `f(x) = H(x)/x`, `f'` and the
//!   inverse `g`.
//! * [`distribution`]: finite distributions on `[0, 1]`, the two-point merge,
//!   the reduction to one non-zero atom and the closed-form minimum of
//!   `E[H(X1 X2)]`.
//! * [`lab`]: monotonicity, convexity and inequality scanners with replayable
//!   witnesses.
//! * [`setfamily`]: union-closed families, element frequencies and the
//!   entropy of `A ∪ B`.
//! * [`suite`]: the full verification run behind `ucentropy verify-all`.
//!
//! Entropies are in bits throughout.

pub mod distribution;
pub mod error;
pub mod format;
pub mod kernel;
pub mod lab;
pub mod sampling;
pub mod setfamily;
pub mod suite;
pub mod tolerance;

pub use distribution::{FiniteDistribution, MergeResult, OptimumCertificate};
pub use error::{Error, Result};
pub use kernel::{binary_entropy, f, f_prime, g, Prob, GOLDEN, GOLDEN_COMPLEMENT};
pub use lab::{ScanConfig, ScanReport};
pub use setfamily::{SetFamily, SubsetDistribution};
