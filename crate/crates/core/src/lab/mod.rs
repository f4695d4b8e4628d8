//! Grid and randomized scanners for the entropy inequalities.
//!
//! Every scan reduces to a stream of margins (left side minus right side) and
//! keeps the smallest one together with the input that produced it, so a
//! report can be replayed with [`replay`].

pub mod lemmas;
pub mod report;
pub mod scans;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lemmas::{
    check_product_inequality, check_union_inequality, complement_bridge_margin,
    product_inequality_chain, product_inequality_margin, scan_complement_bridge,
    scan_product_inequality, scan_union_inequality, threshold_exploration,
    union_inequality_margin, union_ratio, ProofChain,
};
pub use report::{ScanConfig, ScanReport};
pub use scans::{
    log_ratio, rate_composition, rate_composition_slope, refined_grid, scan_log_ratio_decreasing,
    scan_rate_composition_convexity, scan_square_rate_ratio, scan_square_ratio, uniform_grid,
};

/// Scan identifiers, as used in report names and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    /// `H(x^2)/H(x)` increasing on `[0, 1]`.
    Turlough,
    /// `H(x^2)/(x H(x))` increasing on `[GOLDEN, 1]`.
    Adric,
    /// `x -> f(alpha g(x))` convex.
    Peri,
    /// `-(1 - z) ln(1 - z)/z` decreasing.
    Mercy,
    /// Union-form coordinate inequality.
    Main,
    /// Product-form coordinate inequality.
    Main2,
    /// Product-form margins across a range of thresholds.
    Threshold,
    /// Agreement of the union and product forms under `w = 1 - v`.
    Bridge,
}

impl ScanKind {
    pub const ALL: [ScanKind; 8] = [
        ScanKind::Turlough,
        ScanKind::Adric,
        ScanKind::Peri,
        ScanKind::Mercy,
        ScanKind::Main,
        ScanKind::Main2,
        ScanKind::Threshold,
        ScanKind::Bridge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScanKind::Turlough => "turlough",
            ScanKind::Adric => "adric",
            ScanKind::Peri => "peri",
            ScanKind::Mercy => "mercy",
            ScanKind::Main => "main",
            ScanKind::Main2 => "main2",
            ScanKind::Threshold => "threshold",
            ScanKind::Bridge => "bridge",
        }
    }
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scan '{s}'")))
    }
}

/// Runs `per_sample` over `cfg.random_samples` seeded draws, chunked across
/// threads, feeding one report per entry of `names`. Chunk reports are folded
/// in chunk order, so the outcome does not depend on the thread count.
///
/// `per_sample` returns how many draws it rejected before finding a usable
/// one; the total lands in `extras["rejected_draws"]` of every report. Other
/// extras written by `per_sample` are treated as running minima.
pub(crate) fn randomized_multi_scan<F>(
    names: &[&str],
    cfg: &ScanConfig,
    per_sample: F,
) -> Vec<ScanReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut [ScanReport]) -> u64 + Sync,
{
    let fresh = || -> Vec<ScanReport> {
        names
            .iter()
            .map(|n| ScanReport::new(*n, cfg.clone()))
            .collect()
    };
    let parts: Vec<(Vec<ScanReport>, u64)> = crate::sampling::chunks(cfg.random_samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(stream, len)| {
            let mut rng = crate::sampling::stream_rng(cfg.seed, stream);
            let mut reports = fresh();
            let mut rejected = 0;
            for _ in 0..len {
                rejected += per_sample(&mut rng, &mut reports);
            }
            (reports, rejected)
        })
        .collect();

    let mut rejected = 0;
    let mut out = fresh();
    let mut mins: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); names.len()];
    for (reports, r) in parts {
        rejected += r;
        for ((acc, part), m) in out.iter_mut().zip(reports).zip(&mut mins) {
            for (k, v) in &part.extras {
                let e = m.entry(k.clone()).or_insert(f64::INFINITY);
                *e = e.min(*v);
            }
            *acc = std::mem::replace(acc, ScanReport::new("", cfg.clone())).merge(part);
        }
    }
    for (report, m) in out.iter_mut().zip(mins) {
        report.extras = m;
        report.extras.insert("rejected_draws".into(), rejected as f64);
    }
    out
}

pub(crate) fn randomized_scan<F>(name: &str, cfg: &ScanConfig, per_sample: F) -> ScanReport
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut ScanReport) -> u64 + Sync,
{
    randomized_multi_scan(&[name], cfg, |rng, reports| per_sample(rng, &mut reports[0]))
        .pop()
        .expect("one report")
}

/// Re-evaluates the scanned expression at a report's witness.
pub fn replay(report: &ScanReport) -> Result<f64> {
    let kind: ScanKind = report.name.parse()?;
    let w = &report.witness;
    let need = |n: usize| {
        if w.len() == n {
            Ok(())
        } else {
            Err(Error::Config(format!("{kind} witness needs {n} values, has {}", w.len())))
        }
    };
    match kind {
        ScanKind::Turlough => {
            need(2)?;
            Ok(scans::square_ratio_at(w[1]) - scans::square_ratio_at(w[0]))
        }
        ScanKind::Adric => {
            need(2)?;
            Ok(scans::square_rate_ratio_at(w[1]) - scans::square_rate_ratio_at(w[0]))
        }
        ScanKind::Peri => {
            need(4)?;
            let a = w[0];
            Ok(rate_composition(a, w[1])? - 2.0 * rate_composition(a, w[2])?
                + rate_composition(a, w[3])?)
        }
        ScanKind::Mercy => {
            need(2)?;
            Ok(log_ratio(w[0]) - log_ratio(w[1]))
        }
        ScanKind::Main => {
            let (alpha, d) = lemmas::decode_witness(w)?;
            Ok(union_inequality_margin(&d, alpha))
        }
        ScanKind::Main2 | ScanKind::Threshold => {
            let (beta, d) = lemmas::decode_witness(w)?;
            Ok(product_inequality_margin(&d, beta))
        }
        ScanKind::Bridge => {
            let (alpha, d) = lemmas::decode_witness(w)?;
            Ok(complement_bridge_margin(&d, alpha))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Prob;

    #[test]
    fn kind_names_roundtrip() {
        for k in ScanKind::ALL {
            assert_eq!(k.as_str().parse::<ScanKind>().unwrap(), k);
        }
        assert!("nope".parse::<ScanKind>().is_err());
    }

    #[test]
    fn witnesses_replay() {
        let reports = vec![
            scan_square_ratio(&ScanConfig::grid(1e-3, 0.999, 1e-3)).unwrap(),
            scan_square_rate_ratio(&ScanConfig::grid(0.62, 0.999, 1e-3)).unwrap(),
            scan_rate_composition_convexity(Prob::HALF, &ScanConfig::grid(0.1, 5.0, 1e-2)).unwrap(),
            scan_log_ratio_decreasing(&ScanConfig::grid(1e-3, 0.999, 1e-3)).unwrap(),
            scan_union_inequality(&ScanConfig::random(3000, 1)).unwrap(),
            scan_product_inequality(&ScanConfig::random(3000, 1)).unwrap(),
            scan_complement_bridge(&ScanConfig::random(3000, 1).with_tolerance(1e-12)).unwrap(),
        ];
        for r in reports {
            let again = replay(&r).unwrap();
            assert!(
                (again - r.min_margin).abs() <= 1e-12,
                "{}: {again} vs {}",
                r.name,
                r.min_margin
            );
        }
    }
}
