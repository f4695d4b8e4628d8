//! The two coordinate inequalities behind the union bound, and the chain of
//! estimates that proves the product form.
//!
//! Union form, for `v_i` with `sum p_i v_i <= alpha <= (3 - sqrt 5)/2`:
//!
//! ```text
//! sum_{i,j} p_i p_j H(v_i + v_j - v_i v_j) >= H(2 alpha - alpha^2) / H(alpha) * sum_i p_i H(v_i)
//! ```
//!
//! Product form, the same statement after `w = 1 - v`, `beta = 1 - alpha`:
//!
//! ```text
//! sum_{i,j} p_i p_j H(w_i w_j) >= H(beta^2) / H(beta) * sum_i p_i H(w_i)
//! ```
//!
//! The chain for the product form, with `t = sum p_i w_i`, `u = sum p_i H(w_i)`
//! and `v = g(u/t)`:
//!
//! ```text
//! sum p_i p_j H(w_i w_j) >= t^2 H(v^2) / v^2         (joint-entropy optimum)
//!                         = t u H(v^2) / (v H(v))     (f(v) = u/t)
//!                        >= t u H(t^2) / (t H(t))     (H(x^2)/(x H(x)) increasing, t <= v)
//!                         = u H(t^2) / H(t)
//!                        >= u H(beta^2) / H(beta)     (H(x^2)/H(x) increasing, beta <= t)
//! ```
//!
//! Where a written form of the chain drops `p_j` from the double sum, or
//! writes `H(x)^2` for `H(x^2)`, the code uses the dimensionally consistent
//! reading above.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{optimum_certificate, FiniteDistribution};
use crate::error::{Error, Result};
use crate::kernel::{h, Prob, GOLDEN, GOLDEN_COMPLEMENT};
use crate::sampling;
use crate::tolerance::CONSTRAINT_SLACK;

use super::report::{ScanConfig, ScanReport};
use super::scans::{square_rate_ratio_at, square_ratio_at};
use super::{randomized_scan, ScanKind};

/// `H(2 alpha - alpha^2) / H(alpha)`.
pub fn union_ratio(alpha: f64) -> f64 {
    h(alpha * (2.0 - alpha)) / h(alpha)
}

/// Union-form margin without precondition checks.
pub fn union_inequality_margin(d: &FiniteDistribution, alpha: f64) -> f64 {
    let a = d.atoms();
    let mut lhs = 0.0;
    for ai in a {
        let vi = ai.value.get();
        for aj in a {
            let vj = aj.value.get();
            lhs += ai.weight * aj.weight * h((vi + vj - vi * vj).min(1.0));
        }
    }
    lhs - union_ratio(alpha) * d.expected_entropy()
}

/// Product-form margin without precondition checks; used by the threshold
/// exploration below the golden point.
pub fn product_inequality_margin(d: &FiniteDistribution, beta: f64) -> f64 {
    d.expected_joint_entropy() - square_ratio_at(beta) * d.expected_entropy()
}

/// Union-form margin. A mean above `alpha` is a caller error.
pub fn check_union_inequality(d: &FiniteDistribution, alpha: Prob) -> Result<f64> {
    let a = alpha.get();
    if !(a > 0.0 && a <= GOLDEN_COMPLEMENT) {
        return Err(Error::Precondition(format!(
            "alpha = {a} must lie in (0, {GOLDEN_COMPLEMENT}]"
        )));
    }
    let mean = d.mean().get();
    if mean > a + CONSTRAINT_SLACK {
        return Err(Error::Precondition(format!("mean {mean} exceeds alpha = {a}")));
    }
    Ok(union_inequality_margin(d, a))
}

fn check_product_preconditions(d: &FiniteDistribution, beta: Prob) -> Result<()> {
    let b = beta.get();
    if !(b >= GOLDEN && b < 1.0) {
        return Err(Error::Precondition(format!("beta = {b} must lie in [{GOLDEN}, 1)")));
    }
    let mean = d.mean().get();
    if mean < b - CONSTRAINT_SLACK {
        return Err(Error::Precondition(format!("mean {mean} is below beta = {b}")));
    }
    Ok(())
}

/// Product-form margin. A mean below `beta` is a caller error.
pub fn check_product_inequality(d: &FiniteDistribution, beta: Prob) -> Result<f64> {
    check_product_preconditions(d, beta)?;
    Ok(product_inequality_margin(d, beta.get()))
}

/// Every intermediate of the product-form chain, evaluated for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChain {
    pub beta: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub double_sum: f64,
    /// `t^2 H(v^2) / v^2`.
    pub optimum: f64,
    /// `t u H(v^2) / (v H(v))`; equals `optimum` up to rounding.
    pub rate_form: f64,
    /// `u H(t^2) / H(t)`.
    pub at_mean: f64,
    /// `u H(beta^2) / H(beta)`.
    pub rhs: f64,
    /// `double_sum - optimum`.
    pub optimum_margin: f64,
    /// `H(v^2)/(v H(v)) - H(t^2)/(t H(t))`.
    pub rate_ratio_margin: f64,
    /// `H(t^2)/H(t) - H(beta^2)/H(beta)`.
    pub square_ratio_margin: f64,
    /// `|optimum - rate_form|`.
    pub identity_residual: f64,
    /// `double_sum - rhs`, the product-form margin.
    pub margin: f64,
}

impl ProofChain {
    /// Smallest of the three inequality steps.
    pub fn weakest_step(&self) -> f64 {
        self.optimum_margin
            .min(self.rate_ratio_margin)
            .min(self.square_ratio_margin)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.weakest_step() >= -tol && self.identity_residual <= tol
    }
}

/// Evaluates the product-form chain step by step.
pub fn product_inequality_chain(d: &FiniteDistribution, beta: Prob) -> Result<ProofChain> {
    check_product_preconditions(d, beta)?;
    let b = beta.get();
    let t = d.mean().get();
    let u = d.expected_entropy();
    let double_sum = d.expected_joint_entropy();

    let (v, optimum) = if u > 0.0 {
        let cert = optimum_certificate(Prob(t), u)?;
        (cert.v.get(), cert.optimum)
    } else {
        // Every w_i is 0 or 1: g(0) = 1 and the optimum degenerates to 0.
        (1.0, 0.0)
    };

    let rate_ratio_v = square_rate_ratio_at(v);
    let rate_ratio_t = square_rate_ratio_at(t);
    let rate_form = t * u * rate_ratio_v;
    let at_mean = u * square_ratio_at(t);
    let rhs = u * square_ratio_at(b);

    Ok(ProofChain {
        beta: b,
        t,
        u,
        v,
        double_sum,
        optimum,
        rate_form,
        at_mean,
        rhs,
        optimum_margin: double_sum - optimum,
        rate_ratio_margin: rate_ratio_v - rate_ratio_t,
        square_ratio_margin: square_ratio_at(t) - square_ratio_at(b),
        identity_residual: (optimum - rate_form).abs(),
        margin: double_sum - rhs,
    })
}

/// Flattens `(param, distribution)` into a witness vector.
pub(crate) fn encode_witness(param: f64, d: &FiniteDistribution) -> Vec<f64> {
    let mut w = Vec::with_capacity(1 + 2 * d.len());
    w.push(param);
    for (p, x) in d.pairs() {
        w.push(p);
        w.push(x);
    }
    w
}

pub(crate) fn decode_witness(witness: &[f64]) -> Result<(f64, FiniteDistribution)> {
    let Some((&param, rest)) = witness.split_first() else {
        return Err(Error::Config("empty witness".into()));
    };
    if rest.len() % 2 != 0 || rest.is_empty() {
        return Err(Error::Config("witness must hold (weight, value) pairs".into()));
    }
    let d = FiniteDistribution::new(rest.chunks_exact(2).map(|c| (c[0], c[1])))?;
    Ok((param, d))
}

/// Up to six atoms with mean at most `(3 - sqrt 5)/2` by rejection; `alpha`
/// is the mean itself half of the time (the tight case) and uniform between
/// the mean and the bound otherwise. Returns the instance and the number of
/// rejected draws.
pub fn sample_union_instance<R: Rng + ?Sized>(rng: &mut R) -> (FiniteDistribution, f64, u64) {
    let mut rejected = 0;
    loop {
        let d = sampling::random_distribution(rng, 6);
        let mean = d.mean().get();
        if mean > GOLDEN_COMPLEMENT {
            rejected += 1;
            continue;
        }
        let alpha = if rng.random::<bool>() && mean > 0.0 {
            mean
        } else {
            mean + (GOLDEN_COMPLEMENT - mean) * sampling::open_unit(rng)
        };
        return (d, alpha, rejected);
    }
}

/// Up to six atoms with mean at least the golden threshold by rejection;
/// `beta` is the mean half of the time and uniform in `[GOLDEN, mean]`
/// otherwise, always kept below 1.
pub fn sample_product_instance<R: Rng + ?Sized>(rng: &mut R) -> (FiniteDistribution, f64, u64) {
    let mut rejected = 0;
    loop {
        let d = sampling::random_distribution(rng, 6);
        let mean = d.mean().get();
        if mean < GOLDEN {
            rejected += 1;
            continue;
        }
        let top = mean.min(1.0 - 1e-12);
        let beta = if rng.random::<bool>() {
            top
        } else {
            GOLDEN + (top - GOLDEN) * rng.random::<f64>()
        };
        return (d, beta, rejected);
    }
}

/// Randomized union-form verification.
pub fn scan_union_inequality(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    Ok(randomized_scan(ScanKind::Main.as_str(), cfg, |rng, report| {
        let (d, alpha, rejected) = sample_union_instance(rng);
        let margin = union_inequality_margin(&d, alpha);
        report.observe(margin, || encode_witness(alpha, &d));
        rejected
    }))
}

/// Randomized product-form verification. Each instance also runs the chain;
/// the weakest chain step seen lands in `extras["weakest_chain_step"]`.
pub fn scan_product_inequality(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    Ok(randomized_scan(ScanKind::Main2.as_str(), cfg, |rng, report| {
        let (d, beta, rejected) = sample_product_instance(rng);
        let margin = product_inequality_margin(&d, beta);
        report.observe(margin, || encode_witness(beta, &d));
        if let Ok(chain) = product_inequality_chain(&d, Prob(beta)) {
            let step = chain.weakest_step().min(-chain.identity_residual);
            let slot = report
                .extras
                .entry("weakest_chain_step".into())
                .or_insert(f64::INFINITY);
            *slot = slot.min(step);
        }
        rejected
    }))
}

/// Difference between the union-form margin of `(d, alpha)` and the
/// product-form margin of `(1 - d, 1 - alpha)`, as `-|difference|`.
pub fn complement_bridge_margin(d: &FiniteDistribution, alpha: f64) -> f64 {
    let union = union_inequality_margin(d, alpha);
    let product = product_inequality_margin(&d.complement(), 1.0 - alpha);
    -(union - product).abs()
}

/// The `w = 1 - v` equivalence on random union-form instances; passes when
/// the two margins agree to within `cfg.tolerance`.
pub fn scan_complement_bridge(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    Ok(randomized_scan(ScanKind::Bridge.as_str(), cfg, |rng, report| {
        let (d, alpha, rejected) = sample_union_instance(rng);
        let margin = complement_bridge_margin(&d, alpha);
        report.observe(margin, || encode_witness(alpha, &d));
        rejected
    }))
}

/// Worst product-form margin for each `beta`, over random distributions with
/// mean at least `beta` and over the two-point family
/// `{v w.p. beta/v, 0 otherwise}` for `v` on a grid in `[beta, 1]`.
///
/// Exploratory: each row's `passed` flag follows the usual rule but nothing
/// is claimed below the golden threshold.
pub fn threshold_exploration(betas: &[f64], cfg: &ScanConfig) -> Result<Vec<ScanReport>> {
    cfg.validate()?;
    betas
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Config(format!("beta {beta} must lie in (0, 1)")));
            }
            let sub = cfg.clone().with_seed(cfg.seed.wrapping_add(k as u64));
            let mut random = randomized_scan(ScanKind::Threshold.as_str(), &sub, |rng, report| {
                let mut rejected = 0;
                let d = loop {
                    let d = sampling::random_distribution(rng, 6);
                    if d.mean().get() >= beta {
                        break d;
                    }
                    rejected += 1;
                };
                report.observe(product_inequality_margin(&d, beta), || encode_witness(beta, &d));
                rejected
            });
            random.config = cfg.clone();

            let mut family = ScanReport::new(ScanKind::Threshold.as_str(), cfg.clone());
            for v in super::scans::uniform_grid(beta, 1.0, cfg.grid_step)? {
                let w = (beta / v).min(1.0);
                let d = FiniteDistribution::new([(w, v), (1.0 - w, 0.0)])?;
                family.observe(product_inequality_margin(&d, beta), || encode_witness(beta, &d));
            }

            let random_min = random.min_margin;
            let family_min = family.min_margin;
            let mut row = family.merge(random);
            row.extras.insert("beta".into(), beta);
            row.extras.insert("random_min".into(), random_min);
            row.extras.insert("family_min".into(), family_min);
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(f64, f64)]) -> FiniteDistribution {
        FiniteDistribution::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn union_single_atom_at_alpha_is_tight() {
        for &a in &[0.05, 0.2, GOLDEN_COMPLEMENT] {
            let m = check_union_inequality(&dist(&[(1.0, a)]), Prob(a)).unwrap();
            assert!(m.abs() < 1e-12, "{a}: {m}");
        }
    }

    #[test]
    fn union_all_zero_values() {
        let m = check_union_inequality(&dist(&[(1.0, 0.0)]), Prob(0.2)).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn union_preconditions() {
        let d = dist(&[(1.0, 0.3)]);
        assert!(matches!(
            check_union_inequality(&d, Prob(0.2)),
            Err(Error::Precondition(_))
        ));
        assert!(check_union_inequality(&d, Prob(0.4)).is_err());
        assert!(check_union_inequality(&d, Prob::ZERO).is_err());
    }

    #[test]
    fn product_single_atom_at_beta_is_tight() {
        for &b in &[GOLDEN, 0.7, 0.95] {
            let m = check_product_inequality(&dist(&[(1.0, b)]), Prob(b)).unwrap();
            assert!(m.abs() < 1e-12, "{b}: {m}");
        }
    }

    #[test]
    fn product_preconditions() {
        let d = dist(&[(1.0, 0.7)]);
        assert!(check_product_inequality(&d, Prob(0.8)).is_err());
        assert!(check_product_inequality(&d, Prob(0.5)).is_err());
        assert!(check_product_inequality(&dist(&[(1.0, 1.0)]), Prob::ONE).is_err());
    }

    #[test]
    fn bridge_on_hand_picked_instance() {
        let d = dist(&[(0.3, 0.05), (0.5, 0.2), (0.2, 0.9)]);
        let alpha = d.mean().get() + 0.01;
        let union = check_union_inequality(&d, Prob(alpha)).unwrap();
        let product = check_product_inequality(&d.complement(), Prob(1.0 - alpha)).unwrap();
        assert!((union - product).abs() < 1e-12);
    }

    #[test]
    fn chain_steps_hold_and_identity_is_tight() {
        let d = dist(&[(0.2, 0.4), (0.3, 0.75), (0.5, 0.95)]);
        let beta = Prob(GOLDEN);
        let c = product_inequality_chain(&d, beta).unwrap();
        assert!(c.holds(1e-9), "{c:?}");
        assert!(c.t <= c.v + 1e-15);
        assert!(c.identity_residual < 1e-12);
        assert!((c.margin - check_product_inequality(&d, beta).unwrap()).abs() < 1e-15);
        assert!(c.double_sum >= c.optimum - 1e-9);
        assert!(c.optimum >= c.at_mean - 1e-9);
        assert!(c.at_mean >= c.rhs - 1e-9);
    }

    #[test]
    fn chain_degenerate_entropy() {
        let d = dist(&[(0.2, 0.0), (0.8, 1.0)]);
        let c = product_inequality_chain(&d, Prob(0.7)).unwrap();
        assert_eq!(c.u, 0.0);
        assert_eq!(c.v, 1.0);
        assert!(c.holds(1e-9));
        assert_eq!(c.margin, d.expected_joint_entropy());
    }

    #[test]
    fn witness_roundtrip() {
        let d = dist(&[(0.25, 0.1), (0.75, 0.6)]);
        let w = encode_witness(0.3, &d);
        let (a, e) = decode_witness(&w).unwrap();
        assert_eq!(a, 0.3);
        assert_eq!(e, d);
        assert!(decode_witness(&[]).is_err());
        assert!(decode_witness(&[0.1, 0.5]).is_err());
    }

    #[test]
    fn randomized_scans_are_deterministic() {
        let cfg = ScanConfig::random(10_000, 11);
        let a = scan_union_inequality(&cfg).unwrap();
        let b = scan_union_inequality(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
        let c = scan_product_inequality(&cfg).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.extras["weakest_chain_step"] >= -1e-9);
    }

    #[test]
    fn threshold_rows() {
        let cfg = ScanConfig::random(2_000, 5).with_tolerance(1e-9);
        let cfg = ScanConfig {
            grid_step: 1e-3,
            ..cfg
        };
        let rows = threshold_exploration(&[GOLDEN, 0.9], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].min_margin.abs() < 1e-9, "{:?}", rows[0]);
        assert!(rows[1].min_margin >= -1e-9);
        assert!(threshold_exploration(&[1.5], &cfg).is_err());
    }
}
