use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::{INEQUALITY_TOL, SCAN_TOL};

/// Grid resolution, sample budget and acceptance threshold of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub grid_step: f64,
    pub random_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl ScanConfig {
    /// A grid scan over `[lo, hi]` with finite-difference tolerance.
    pub fn grid(lo: f64, hi: f64, step: f64) -> Self {
        Self {
            grid_step: step,
            random_samples: 0,
            seed: 42,
            tolerance: SCAN_TOL,
            range_lo: lo,
            range_hi: hi,
        }
    }

    /// A randomized scan with closed-form tolerance.
    pub fn random(samples: usize, seed: u64) -> Self {
        Self {
            grid_step: 1e-4,
            random_samples: samples,
            seed,
            tolerance: INEQUALITY_TOL,
            range_lo: 0.0,
            range_hi: 1.0,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0) || !self.grid_step.is_finite() {
            return Err(Error::Config(format!("grid step {} must be positive", self.grid_step)));
        }
        if !(self.range_lo < self.range_hi) || !self.range_hi.is_finite() {
            return Err(Error::Config(format!(
                "range [{}, {}] is empty",
                self.range_lo, self.range_hi
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be positive", self.tolerance)));
        }
        Ok(())
    }
}

/// Worst margin seen by a scan and the input that produced it.
///
/// `passed` holds exactly when `min_margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub name: String,
    pub points_checked: u64,
    pub min_margin: f64,
    pub witness: Vec<f64>,
    pub passed: bool,
    pub config: ScanConfig,
    /// Side measurements: endpoint values, secondary bounds, counters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl ScanReport {
    pub fn new(name: impl Into<String>, config: ScanConfig) -> Self {
        Self {
            name: name.into(),
            points_checked: 0,
            min_margin: f64::INFINITY,
            witness: Vec::new(),
            passed: true,
            config,
            extras: BTreeMap::new(),
        }
    }

    /// Records one evaluated margin. Ties keep the earlier witness.
    pub fn observe(&mut self, margin: f64, witness: impl FnOnce() -> Vec<f64>) {
        self.points_checked += 1;
        // NaN margins are failures, never silently skipped.
        if margin < self.min_margin || (margin.is_nan() && !self.min_margin.is_nan()) {
            self.min_margin = margin;
            self.witness = witness();
        }
        self.passed = self.min_margin >= -self.config.tolerance;
    }

    /// Combines two partial reports over disjoint work. The earlier report
    /// wins ties, so folding partials in a fixed order is deterministic.
    pub fn merge(mut self, other: ScanReport) -> ScanReport {
        self.points_checked += other.points_checked;
        if other.min_margin < self.min_margin
            || (other.min_margin.is_nan() && !self.min_margin.is_nan())
        {
            self.min_margin = other.min_margin;
            self.witness = other.witness;
        }
        for (k, v) in other.extras {
            self.extras.entry(k).or_insert(v);
        }
        self.passed = self.min_margin >= -self.config.tolerance;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str =
        "name,points_checked,min_margin,passed,seed,grid_step,random_samples,tolerance,witness";

    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        let c = &self.config;
        let _ = write!(
            row,
            "{},{},{:e},{},{},{:e},{},{:e},",
            self.name,
            self.points_checked,
            self.min_margin,
            self.passed,
            c.seed,
            c.grid_step,
            c.random_samples,
            c.tolerance
        );
        let witness: Vec<String> = self.witness.iter().map(|w| format!("{w:e}")).collect();
        row.push_str(&witness.join(";"));
        row
    }
}
