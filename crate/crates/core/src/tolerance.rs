//! Shared numerical tolerances.
//!
//! Scanners, the verification suite and the test-suites all read from here so
//! that a threshold is only ever written down once.

/// Root residual for the inverse `g`: `|f(g(y)) - y| <= KERNEL_TOL * max(1, y)`.
pub const KERNEL_TOL: f64 = 1e-10;

/// Agreement between analytic derivatives and central finite differences.
pub const DERIV_TOL: f64 = 1e-5;

/// Step used by the finite-difference derivative checks.
pub const FD_STEP: f64 = 1e-6;

/// Round trip `g(f(x))` against `x`.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

/// Single-step conservation (mean and expected entropy across one merge).
pub const CONSERVATION_TOL: f64 = 1e-10;

/// Accumulated drift across a multi-merge pipeline.
pub const PIPELINE_TOL: f64 = 1e-8;

/// Atom-for-atom agreement of a reduced distribution with the closed-form witness.
pub const WITNESS_TOL: f64 = 1e-7;

/// Slack allowed when comparing against a randomized brute-force oracle.
pub const ORACLE_TOL: f64 = 1e-4;

/// Constraint window for the randomized optimum search.
pub const ORACLE_CONSTRAINT_TOL: f64 = 1e-3;

/// Margin floor for closed-form inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-9;

/// Margin floor for finite-difference monotonicity and convexity scans.
pub const SCAN_TOL: f64 = 1e-6;

/// Weight-sum slack accepted by [`crate::distribution::FiniteDistribution::new`].
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Weight-sum slack accepted when loading a distribution file.
pub const FILE_WEIGHT_SUM_TOL: f64 = 1e-6;

/// Values below this are treated as exactly zero by the merge machinery.
pub const ZERO_VALUE: f64 = 1e-15;

/// Values closer than this are coalesced into one atom.
pub const COALESCE_TOL: f64 = 1e-15;

/// Slack on mean constraints (`mean <= alpha`, `mean >= beta`) before a
/// distribution is rejected as a caller error.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Witness re-evaluation must reproduce the reported margin this closely.
pub const REPLAY_TOL: f64 = 1e-12;
