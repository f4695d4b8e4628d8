//! Finite-difference monotonicity and convexity scans over dense grids.
//!
//! These give numerical evidence only. Two of the monotonicity claims have
//! no written proof; the scans record the worst margin so the evidence can be
//! inspected, they do not prove anything.

use crate::error::{Error, Result};
use crate::kernel::{self, f_raw, square_rate_ratio, square_ratio, Prob, GOLDEN};
use crate::tolerance::FD_STEP;

use super::report::{ScanConfig, ScanReport};
use super::ScanKind;

/// Hard cap on grid sizes so a typo in `--step` cannot exhaust memory.
pub const MAX_GRID_POINTS: usize = 50_000_000;

/// `lo, lo + step, ..., ` up to `hi`, with `hi` appended when the last step
/// falls short of it. Points are computed by index, not by accumulation.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let span = (hi - lo) / step;
    if span > MAX_GRID_POINTS as f64 {
        return Err(Error::Config(format!(
            "grid [{lo}, {hi}] step {step} exceeds {MAX_GRID_POINTS} points"
        )));
    }
    let n = (span + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let last = *pts.last().unwrap();
    if last > hi {
        pts.pop();
    }
    if hi - *pts.last().unwrap_or(&lo) > step * 1e-6 {
        pts.push(hi);
    }
    Ok(pts)
}

/// A uniform grid whose first and last stretches use a step ten times finer.
/// The fine stretch covers `min(100 * step, (hi - lo) / 4)` at each end.
pub fn refined_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    let edge = (100.0 * step).min((hi - lo) / 4.0);
    let fine = step / 10.0;
    let mut pts = uniform_grid(lo, lo + edge, fine)?;
    pts.extend(uniform_grid(lo + edge, hi - edge, step)?);
    pts.extend(uniform_grid(hi - edge, hi, fine)?);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= fine * 1e-6);
    if let Some(last) = pts.last_mut() {
        *last = hi;
    }
    Ok(pts)
}

fn check_unit_range(cfg: &ScanConfig, lo_min: f64, what: &str) -> Result<()> {
    cfg.validate()?;
    if cfg.range_lo < lo_min || cfg.range_hi > 1.0 {
        return Err(Error::Config(format!(
            "{what} scan range [{}, {}] must lie within [{lo_min}, 1]",
            cfg.range_lo, cfg.range_hi
        )));
    }
    Ok(())
}

/// Increasing-function scan: margin `F(x') - F(x)` over consecutive points.
fn scan_increasing(
    kind: ScanKind,
    cfg: &ScanConfig,
    pts: &[f64],
    eval: impl Fn(f64) -> f64,
) -> ScanReport {
    let mut report = ScanReport::new(kind.as_str(), cfg.clone());
    let values: Vec<f64> = pts.iter().map(|&x| eval(x)).collect();
    for (k, w) in values.windows(2).enumerate() {
        report.observe(w[1] - w[0], || vec![pts[k], pts[k + 1]]);
    }
    report
}

/// `R(x) = H(x^2) / H(x)` is increasing. Also records `R` at the scan endpoints.
pub fn scan_square_ratio(cfg: &ScanConfig) -> Result<ScanReport> {
    check_unit_range(cfg, 0.0, "H(x^2)/H(x)")?;
    let pts = refined_grid(cfg.range_lo, cfg.range_hi, cfg.grid_step)?;
    let mut report = scan_increasing(ScanKind::Turlough, cfg, &pts, square_ratio_at);
    report.extras.insert("value_at_lo".into(), square_ratio_at(cfg.range_lo));
    report.extras.insert("value_at_hi".into(), square_ratio_at(cfg.range_hi));
    Ok(report)
}

pub(crate) fn square_ratio_at(x: f64) -> f64 {
    square_ratio(Prob(x))
}

/// `S(x) = H(x^2) / (x H(x))` is increasing on `[GOLDEN, 1]`.
///
/// The range may start below the golden point for exploratory runs; the
/// report then simply records whether monotonicity survives there.
pub fn scan_square_rate_ratio(cfg: &ScanConfig) -> Result<ScanReport> {
    check_unit_range(cfg, f64::MIN_POSITIVE, "H(x^2)/(x H(x))")?;
    let pts = refined_grid(cfg.range_lo, cfg.range_hi, cfg.grid_step)?;
    let mut report = scan_increasing(ScanKind::Adric, cfg, &pts, square_rate_ratio_at);
    report.extras.insert("value_at_lo".into(), square_rate_ratio_at(cfg.range_lo));
    report.extras.insert("value_at_hi".into(), square_rate_ratio_at(cfg.range_hi));
    report
        .extras
        .insert("starts_below_golden".into(), f64::from(u8::from(cfg.range_lo < GOLDEN - 1e-10)));
    Ok(report)
}

pub(crate) fn square_rate_ratio_at(x: f64) -> f64 {
    square_rate_ratio(Prob(x)).unwrap_or(f64::NAN)
}

/// `x -> f(alpha g(x))`.
pub fn rate_composition(alpha: f64, x: f64) -> Result<f64> {
    let gx = kernel::g(x)?.get();
    Ok(f_raw(alpha * gx))
}

/// Closed-form slope of `x -> f(alpha g(x))`:
/// `log(1 - alpha g(x)) / (alpha log(1 - g(x)))`.
pub fn rate_composition_slope(alpha: f64, x: f64) -> Result<f64> {
    let gx = kernel::g(x)?.get();
    Ok((-alpha * gx).ln_1p() / (alpha * (-gx).ln_1p()))
}

/// Convexity of `x -> f(alpha g(x))`: every second central difference on a
/// uniform grid over `[range_lo, range_hi]` (a range of entropy rates, not
/// probabilities) must be nonnegative.
///
/// The closed-form slope is compared against a central difference with step
/// `1e-6` at every grid point; the worst disagreement lands in
/// `extras["max_slope_error"]`.
pub fn scan_rate_composition_convexity(alpha: Prob, cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let a = alpha.get();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!("alpha {a} must lie in (0, 1)")));
    }
    let top = f_raw(1e-6);
    if !(cfg.range_lo > 0.0) || cfg.range_hi > top {
        return Err(Error::Config(format!(
            "rate range [{}, {}] must lie within (0, {top}]",
            cfg.range_lo, cfg.range_hi
        )));
    }
    let pts = uniform_grid(cfg.range_lo, cfg.range_hi, cfg.grid_step)?;
    let values = pts
        .iter()
        .map(|&x| rate_composition(a, x))
        .collect::<Result<Vec<_>>>()?;

    let mut report = ScanReport::new(ScanKind::Peri.as_str(), cfg.clone());
    report.extras.insert("alpha".into(), a);
    for k in 1..pts.len().saturating_sub(1) {
        let margin = values[k - 1] - 2.0 * values[k] + values[k + 1];
        report.observe(margin, || vec![a, pts[k - 1], pts[k], pts[k + 1]]);
    }

    let mut max_slope_error: f64 = 0.0;
    for &x in &pts {
        if x - FD_STEP <= 0.0 || x + FD_STEP > top {
            continue;
        }
        let fd = (rate_composition(a, x + FD_STEP)? - rate_composition(a, x - FD_STEP)?)
            / (2.0 * FD_STEP);
        let slope = rate_composition_slope(a, x)?;
        max_slope_error = max_slope_error.max((fd - slope).abs());
    }
    report.extras.insert("max_slope_error".into(), max_slope_error);
    Ok(report)
}

/// `z -> -(1 - z) ln(1 - z) / z` in nats, with limit 1 at `z = 0`.
pub fn log_ratio(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z == 1.0 {
        return 0.0;
    }
    -(1.0 - z) * (-z).ln_1p() / z
}

/// `-(1 - z) ln(1 - z) / z` is decreasing: margin `m(z) - m(z')` for
/// consecutive `z < z'`. Also checks `ln(1 - z) <= -z` at every grid point and
/// stores the smallest `-z - ln(1 - z)` in `extras["exp_bound_min"]`.
pub fn scan_log_ratio_decreasing(cfg: &ScanConfig) -> Result<ScanReport> {
    check_unit_range(cfg, 0.0, "-(1-z)ln(1-z)/z")?;
    let pts = refined_grid(cfg.range_lo, cfg.range_hi, cfg.grid_step)?;
    let mut report = scan_increasing(ScanKind::Mercy, cfg, &pts, |z| -log_ratio(z));
    // scan_increasing stored -m(z') + m(z) as the margin; witnesses are (z, z').
    let exp_bound = pts
        .iter()
        .filter(|&&z| z < 1.0)
        .map(|&z| -z - (-z).ln_1p())
        .fold(f64::INFINITY, f64::min);
    report.extras.insert("exp_bound_min".into(), exp_bound);
    Ok(report)
}
