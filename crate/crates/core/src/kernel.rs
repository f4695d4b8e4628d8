//! Binary entropy, the entropy rate `f(x) = H(x)/x`, its derivative and its
//! inverse `g`.
//!
//! All entropies are in bits. Every inequality the toolkit checks compares
//! ratios of entropies, so the base only fixes the anchors `H(1/2) = 1` and
//! `f(1/2) = 2`.
//!
//! `f` is continuous and strictly decreasing from `(0, 1]` onto `[0, inf)`,
//! so for each `y >= 0` there is exactly one `g(y)` in `(0, 1]` with
//! `f(g(y)) = y`.

use std::f64::consts::{LN_2, LOG2_E};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The golden threshold `(sqrt 5 - 1) / 2`, where `beta^2 = 1 - beta`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `(3 - sqrt 5) / 2 = 1 - GOLDEN`, the frequency bound for union-closed families.
pub const GOLDEN_COMPLEMENT: f64 = 0.381_966_011_250_105_1;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prob(pub(crate) f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const HALF: Prob = Prob(0.5);
    pub const ONE: Prob = Prob(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(Error::InvalidProb(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - self`.
    #[inline]
    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl TryFrom<f64> for Prob {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Prob::new(value)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// A point `(x, f(x))` on the entropy-rate curve; read backwards it witnesses
/// `g(y) = x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRatePoint {
    pub x: Prob,
    pub y: f64,
}

impl EntropyRatePoint {
    pub fn at(x: Prob) -> Result<Self> {
        Ok(Self { x, y: f(x)? })
    }

    pub fn from_rate(y: f64) -> Result<Self> {
        Ok(Self { x: g(y)?, y })
    }
}

/// `-s log2 s - (1 - s) log2 (1 - s)` for `s <= 1/2`, with the `(1 - s)` term
/// evaluated through `ln_1p` so small `s` loses nothing to cancellation.
#[inline]
fn entropy_lower_half(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let c = 1.0 - s;
    -s * s.log2() - c * (-s).ln_1p() * LOG2_E
}

/// Unchecked binary entropy for hot loops. Inputs must lie in `[0, 1]`.
///
/// Both `x` and `1 - x` are folded onto the lower half before evaluation, so
/// `h(x) == h(1 - x)` bit for bit whenever `1 - x` is exact in `f64`.
#[inline]
pub(crate) fn h(x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x), "h({x})");
    if x <= 0.5 {
        entropy_lower_half(x)
    } else {
        // Sterbenz: 1 - x is exact on [1/2, 1].
        entropy_lower_half(1.0 - x)
    }
}

/// Binary entropy `H(x)` in bits with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: Prob) -> f64 {
    h(x.0)
}

/// Two-term expansion of `H(e)` about `e = 0`, i.e. of `H(1 - e)` about 1.
#[inline]
pub(crate) fn entropy_series(e: f64) -> f64 {
    e * (LOG2_E - e.log2()) - 0.5 * e * e * LOG2_E
}

/// Below this distance from 1, the ratios of entropies near `x = 1` switch to
/// the series form of `H`.
pub(crate) const SERIES_CUTOFF: f64 = 1e-8;

/// `H(1 - e)`, evaluated from the distance `e` to 1.
#[inline]
pub(crate) fn entropy_near_one(e: f64) -> f64 {
    if e < SERIES_CUTOFF {
        entropy_series(e)
    } else {
        h(e.min(1.0))
    }
}

/// `H(x^2) / H(x)` on `[0, 1]`, with the limits `0` at `x = 0` and `2` at
/// `x = 1`.
pub fn square_ratio(x: Prob) -> f64 {
    let x = x.0;
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 2.0;
    }
    if x <= 0.5 {
        return h(x * x) / h(x);
    }
    let e = 1.0 - x;
    // 1 - x^2 = e (2 - e), evaluated without cancellation.
    entropy_near_one(e * (2.0 - e)) / entropy_near_one(e)
}

/// `H(x^2) / (x H(x))` on `(0, 1]`, with the limit `2` at `x = 1`.
pub fn square_rate_ratio(x: Prob) -> Result<f64> {
    if x.0 == 0.0 {
        return Err(Error::Domain {
            what: "H(x^2)/(x H(x))",
            x: 0.0,
        });
    }
    Ok(square_ratio(x) / x.0)
}

/// `f(x) = H(x) / x` for `x` in `(0, 1]`.
pub fn f(x: Prob) -> Result<f64> {
    if x.0 == 0.0 {
        return Err(Error::Domain {
            what: "f(x) = H(x)/x",
            x: 0.0,
        });
    }
    Ok(f_raw(x.0))
}

#[inline]
pub(crate) fn f_raw(x: f64) -> f64 {
    h(x) / x
}

/// `f'(x) = log2(1 - x) / x^2` for `x` in `(0, 1)`.
pub fn f_prime(x: Prob) -> Result<f64> {
    if x.0 == 0.0 || x.0 == 1.0 {
        return Err(Error::Domain {
            what: "f'(x)",
            x: x.0,
        });
    }
    Ok(f_prime_raw(x.0))
}

#[inline]
pub(crate) fn f_prime_raw(x: f64) -> f64 {
    (-x).ln_1p() / (LN_2 * x * x)
}

const G_MAX_ITER: usize = 400;

/// The inverse of `f`: the unique `x` in `(0, 1]` with `f(x) = y`.
///
/// Safeguarded Newton iteration inside a bisection bracket. `f(x) > log2(1/x)`
/// puts the root above `2^-y`, so the lower end of the bracket is
/// `min(1e-15, 2^-y)`.
pub fn g(y: f64) -> Result<Prob> {
    if !(y >= 0.0) || y.is_infinite() {
        return Err(Error::Domain {
            what: "g(y)",
            x: y,
        });
    }
    if y == 0.0 {
        return Ok(Prob::ONE);
    }

    let mut lo = 1e-15_f64.min((-y).exp2());
    if lo == 0.0 || f_raw(lo) < y {
        // 2^-y underflowed: the root is below the smallest usable f64.
        return Err(Error::Domain {
            what: "g(y)",
            x: y,
        });
    }
    let mut hi = 1.0_f64;

    // f(x) <= log2(1/x) + log2(e), so 2^-(y - log2 e) is a close upper guess.
    let mut x = (LOG2_E - y).exp2().clamp(lo, hi);
    if x >= hi {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..G_MAX_ITER {
        let r = f_raw(x) - y;
        if r == 0.0 {
            return Ok(Prob(x));
        }
        if r > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }

        let slope = f_prime_raw(x);
        let newton = x - r / slope;
        if slope.is_finite() && (newton - x).abs() <= f64::EPSILON * x {
            let newton = newton.clamp(lo, hi);
            let pick = if (f_raw(newton) - y).abs() < r.abs() { newton } else { x };
            return Ok(Prob(pick));
        }
        x = if slope.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi > 4.0 * lo {
            // Far apart on a log scale: halve the exponent range instead.
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
    }

    // Settle on whichever end of the bracket has the smaller residual.
    let best = [x, lo, hi]
        .into_iter()
        .min_by(|a, b| {
            (f_raw(*a) - y)
                .abs()
                .total_cmp(&(f_raw(*b) - y).abs())
        })
        .unwrap_or(x);
    Ok(Prob(best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Prob {
        Prob::new(x).unwrap()
    }

    #[test]
    fn prob_rejects_out_of_range() {
        assert!(Prob::new(-1e-300).is_err());
        assert!(Prob::new(1.0 + f64::EPSILON).is_err());
        assert!(Prob::new(f64::NAN).is_err());
        assert!(Prob::new(f64::INFINITY).is_err());
        assert!(Prob::new(0.0).is_ok());
        assert!(Prob::new(1.0).is_ok());
    }

    #[test]
    fn prob_deserialize_checks_range() {
        assert!(serde_json::from_str::<Prob>("0.25").is_ok());
        assert!(serde_json::from_str::<Prob>("1.5").is_err());
    }

    #[test]
    fn entropy_anchors() {
        assert_eq!(binary_entropy(Prob::HALF), 1.0);
        assert_eq!(binary_entropy(Prob::ZERO), 0.0);
        assert_eq!(binary_entropy(Prob::ONE), 0.0);
        assert_eq!(binary_entropy(p(0.25)), binary_entropy(p(0.75)));
    }

    #[test]
    fn entropy_bitwise_symmetric_on_exact_complements() {
        for k in 0..=4096 {
            let x = k as f64 / 4096.0;
            assert_eq!(h(x).to_bits(), h(1.0 - x).to_bits(), "x = {x}");
        }
        // Any x whose complement round-trips exactly.
        let mut x = 1e-3;
        while x < 1.0 {
            if 1.0 - (1.0 - x) == x {
                assert_eq!(h(x).to_bits(), h(1.0 - x).to_bits(), "x = {x}");
            }
            x += 7.3e-4;
        }
    }

    #[test]
    fn entropy_small_argument_is_accurate() {
        // H(s) = s log2(1/s) + (s - s^2/2 - s^3/6) log2 e + O(s^4)
        for &s in &[1e-300_f64, 1e-20, 1e-12, 1e-8, 1e-5] {
            let series = s * (-s.log2()) + (s - s * s / 2.0 - s * s * s / 6.0) * LOG2_E;
            let rel = (h(s) - series).abs() / series;
            assert!(rel < 1e-14, "s = {s}: rel {rel}");
        }
    }

    #[test]
    fn f_anchors() {
        assert_eq!(f(Prob::ONE).unwrap(), 0.0);
        assert_eq!(f(Prob::HALF).unwrap(), 2.0);
        let h25 = binary_entropy(p(0.25));
        assert_eq!(f(p(0.25)).unwrap(), h25 / 0.25);
        assert!(matches!(f(Prob::ZERO), Err(Error::Domain { .. })));
    }

    #[test]
    fn f_prime_anchors_and_singularities() {
        assert_eq!(f_prime(Prob::HALF).unwrap(), -4.0);
        // log2(1 - x) diverges only logarithmically at 1.
        let near = f_prime(p(1.0 - 1e-6)).unwrap();
        assert!((near - 1e-6f64.log2() / (1.0 - 1e-6f64).powi(2)).abs() < 1e-9);
        assert!(f_prime(p(1.0 - 1e-15)).unwrap() < near);
        assert!(f_prime(Prob::ZERO).is_err());
        assert!(f_prime(Prob::ONE).is_err());
    }

    #[test]
    fn g_anchors() {
        assert_eq!(g(0.0).unwrap(), Prob::ONE);
        assert!((g(2.0).unwrap().get() - 0.5).abs() < 1e-15);
        assert!(g(-1e-9).is_err());
        assert!(g(f64::NAN).is_err());
        assert!(g(f64::INFINITY).is_err());
    }

    #[test]
    fn g_handles_large_rates() {
        for &y in &[30.0, 55.0, 120.0, 700.0] {
            let x = g(y).unwrap().get();
            assert!(x > 0.0);
            let resid = (f_raw(x) - y).abs();
            assert!(resid <= crate::tolerance::KERNEL_TOL * y, "y = {y}: {resid}");
        }
        assert!(g(5000.0).is_err());
    }

    #[test]
    fn square_ratio_limits() {
        assert_eq!(square_ratio(Prob::ZERO), 0.0);
        assert_eq!(square_ratio(Prob::ONE), 2.0);
        assert!((square_ratio(p(GOLDEN)) - 1.0).abs() < 1e-12);
        // The approach to 2 is logarithmic: 2 (1 - 1/log2(e/e')) near 1.
        let a = square_ratio(p(1.0 - 1e-6));
        let b = square_ratio(p(1.0 - 1e-12));
        assert!(a < b && b < 2.0 && b > 1.9, "{a} {b}");
        assert!(square_rate_ratio(Prob::ZERO).is_err());
        assert_eq!(square_rate_ratio(Prob::ONE).unwrap(), 2.0);
    }

    #[test]
    fn series_matches_direct_evaluation_at_cutoff() {
        let e = SERIES_CUTOFF;
        let rel = (entropy_series(e) - h(e)).abs() / h(e);
        assert!(rel < 1e-15, "{rel}");
    }

    #[test]
    fn golden_constants_agree() {
        assert!((GOLDEN - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        assert!((GOLDEN_COMPLEMENT - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-16);
        assert!((GOLDEN * GOLDEN - (1.0 - GOLDEN)).abs() <= 2.0 * f64::EPSILON);
    }
}
