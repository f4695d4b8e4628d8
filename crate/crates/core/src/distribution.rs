//! Finite-support distributions on `[0, 1]`, the two-point merge, the
//! reduction to a single non-zero atom, and the closed-form minimum of the
//! expected joint entropy.
//!
//! The merge replaces atoms `(p1, x1), (p2, x2)` by `(q, y)` plus mass
//! `p1 + p2 - q` at zero, where `y = g((p1 H(x1) + p2 H(x2)) / (p1 x1 + p2 x2))`
//! and `q = (p1 x1 + p2 x2) / y`. Mean and expected entropy are conserved
//! while `E[H(X1 X2)]` cannot increase, so repeated merging ends at the
//! two-point distribution `{v w.p. t/v, 0 otherwise}` with `v = g(u/t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, h, Prob};
use crate::sampling;
use crate::tolerance::{COALESCE_TOL, CONSTRAINT_SLACK, WEIGHT_SUM_TOL, ZERO_VALUE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub value: Prob,
}

/// Atoms sorted by ascending value, with positive weights summing to 1 and
/// distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    atoms: Vec<Atom>,
}

impl FiniteDistribution {
    /// Builds a distribution from `(weight, value)` pairs.
    ///
    /// Zero weights are dropped, values within `1e-15` of each other are
    /// coalesced, and weights within `1e-9` of summing to 1 are rescaled.
    /// Weights whose sum is off from 1 only by rounding are kept as given, so
    /// rebuilding a distribution from its own pairs is exact.
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        Self::with_sum_tolerance(pairs, WEIGHT_SUM_TOL)
    }

    pub(crate) fn with_sum_tolerance<I>(pairs: I, sum_tol: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut atoms = Vec::new();
        for (weight, value) in pairs {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {weight} is not a nonnegative number"
                )));
            }
            let value = Prob::new(value)?;
            if weight > 0.0 {
                atoms.push(Atom { weight, value });
            }
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atom with positive weight".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > sum_tol {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        if (total - 1.0).abs() > atoms.len() as f64 * f64::EPSILON {
            for a in &mut atoms {
                a.weight /= total;
            }
        }
        Ok(Self {
            atoms: coalesce(atoms),
        })
    }

    /// Point mass at `value`.
    pub fn point(value: Prob) -> Self {
        Self {
            atoms: vec![Atom { weight: 1.0, value }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(weight, value)` pairs in ascending value order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().map(|a| (a.weight, a.value.get()))
    }

    /// `sum p_i x_i`.
    pub fn mean(&self) -> Prob {
        let m: f64 = self.pairs().map(|(p, x)| p * x).sum();
        Prob(m.clamp(0.0, 1.0))
    }

    /// `sum p_i H(x_i)`.
    pub fn expected_entropy(&self) -> f64 {
        self.pairs().map(|(p, x)| p * h(x)).sum()
    }

    /// `sum_{i,j} p_i p_j H(x_i x_j)` over ordered pairs, diagonal included.
    pub fn expected_joint_entropy(&self) -> f64 {
        let a = &self.atoms;
        let mut total = 0.0;
        for i in 0..a.len() {
            let (pi, xi) = (a[i].weight, a[i].value.get());
            total += pi * pi * h(xi * xi);
            for aj in &a[i + 1..] {
                total += 2.0 * pi * aj.weight * h(xi * aj.value.get());
            }
        }
        total
    }

    /// Number of atoms with a value treated as non-zero.
    pub fn nonzero_support(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.value.get() >= ZERO_VALUE)
            .count()
    }

    /// At most one non-zero point in the support.
    pub fn is_reduced(&self) -> bool {
        self.nonzero_support() <= 1
    }

    /// Mass sitting at (or below the zero threshold of) zero.
    pub fn zero_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.value.get() < ZERO_VALUE)
            .map(|a| a.weight)
            .sum()
    }

    /// The distribution of `1 - X`.
    pub fn complement(&self) -> Self {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                weight: a.weight,
                value: a.value.complement(),
            })
            .collect();
        atoms.reverse();
        Self {
            atoms: coalesce(atoms),
        }
    }

    /// Rebuilds from atoms that are already normalized.
    fn from_normalized(atoms: Vec<Atom>) -> Self {
        Self {
            atoms: coalesce(atoms),
        }
    }
}

/// Sorts by value and folds together atoms whose values are within
/// [`COALESCE_TOL`] of the first value of their run.
fn coalesce(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| a.weight > 0.0);
    atoms.sort_by(|a, b| a.value.get().total_cmp(&b.value.get()));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    let mut anchor = f64::NAN;
    for a in atoms {
        match out.last_mut() {
            Some(last) if (a.value.get() - anchor).abs() <= COALESCE_TOL => {
                let w = last.weight + a.weight;
                let v = (last.weight * last.value.get() + a.weight * a.value.get()) / w;
                last.weight = w;
                last.value = Prob(v.clamp(0.0, 1.0));
            }
            _ => {
                anchor = a.value.get();
                out.push(a);
            }
        }
    }
    out
}

/// Outcome of merging two weighted non-zero atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeResult {
    pub q: f64,
    pub y: Prob,
    pub residual_at_zero: f64,
}

fn check_merge_inputs(p1: f64, x1: Prob, p2: f64, x2: Prob) -> Result<()> {
    for p in [p1, p2] {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Precondition(format!("merge weight {p} must be positive")));
        }
    }
    for x in [x1, x2] {
        if x.get() == 0.0 {
            return Err(Error::Domain {
                what: "merge (f is undefined at 0)",
                x: 0.0,
            });
        }
    }
    Ok(())
}

/// Replaces `(p1, x1), (p2, x2)` by a single atom `(q, y)` with
/// `q y = p1 x1 + p2 x2` and `q H(y) = p1 H(x1) + p2 H(x2)`.
pub fn merge(p1: f64, x1: Prob, p2: f64, x2: Prob) -> Result<MergeResult> {
    check_merge_inputs(p1, x1, p2, x2)?;
    Ok(merge_unchecked(p1, x1.get(), p2, x2.get()))
}

fn merge_unchecked(p1: f64, x1: f64, p2: f64, x2: f64) -> MergeResult {
    if x1 == x2 {
        return MergeResult {
            q: p1 + p2,
            y: Prob(x1),
            residual_at_zero: 0.0,
        };
    }
    let mass = p1 * x1 + p2 * x2;
    let entropy = p1 * h(x1) + p2 * h(x2);
    let rate = entropy / mass;
    // rate lies between f(x1) and f(x2), and f never fails on that range.
    let y = kernel::g(rate)
        .map(Prob::get)
        .unwrap_or(x1.max(x2))
        .clamp(x1.min(x2), x1.max(x2));
    let q = mass / y;
    MergeResult {
        q,
        y: Prob(y),
        residual_at_zero: (p1 + p2 - q).max(0.0),
    }
}

/// `p1 H(z x1) + p2 H(z x2) - q H(z y)`, nonnegative for every `z` in `[0, 1]`.
pub fn scaled_entropy_inequality_check(
    p1: f64,
    x1: Prob,
    p2: f64,
    x2: Prob,
    z: Prob,
) -> Result<f64> {
    let m = merge(p1, x1, p2, x2)?;
    Ok(scaled_entropy_margin(p1, x1.get(), p2, x2.get(), &m, z.get()))
}

pub(crate) fn scaled_entropy_margin(
    p1: f64,
    x1: f64,
    p2: f64,
    x2: f64,
    m: &MergeResult,
    z: f64,
) -> f64 {
    p1 * h(z * x1) + p2 * h(z * x2) - m.q * h(z * m.y.get())
}

/// `p1^2 H(x1^2) + 2 p1 p2 H(x1 x2) + p2^2 H(x2^2) - q^2 H(y^2)`, the change
/// in the pair's contribution to the expected joint entropy.
pub fn pair_joint_entropy_margin(p1: f64, x1: Prob, p2: f64, x2: Prob) -> Result<f64> {
    let m = merge(p1, x1, p2, x2)?;
    Ok(pair_joint_margin(p1, x1.get(), p2, x2.get(), &m))
}

pub(crate) fn pair_joint_margin(p1: f64, x1: f64, p2: f64, x2: f64, m: &MergeResult) -> f64 {
    let y = m.y.get();
    p1 * p1 * h(x1 * x1) + 2.0 * p1 * p2 * h(x1 * x2) + p2 * p2 * h(x2 * x2)
        - m.q * m.q * h(y * y)
}

/// Which pair of non-zero atoms [`reduce_with`] merges next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MergeOrder {
    /// The two smallest non-zero values.
    #[default]
    Ascending,
    /// The two largest values.
    Descending,
}

/// Moments after one merge step of a traced reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub merged: MergeResult,
    pub mean: f64,
    pub expected_entropy: f64,
    pub expected_joint_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub result: FiniteDistribution,
    /// Expected joint entropy of the input, before any merge.
    pub initial_joint_entropy: f64,
    pub steps: Vec<ReductionStep>,
}

/// Merges non-zero atoms until at most one remains.
pub fn reduce(d: &FiniteDistribution) -> FiniteDistribution {
    reduce_inner(d, MergeOrder::Ascending, false).result
}

pub fn reduce_with(d: &FiniteDistribution, order: MergeOrder) -> FiniteDistribution {
    reduce_inner(d, order, false).result
}

/// Like [`reduce`] but records the moments after every merge.
pub fn reduce_traced(d: &FiniteDistribution, order: MergeOrder) -> Reduction {
    reduce_inner(d, order, true)
}

fn reduce_inner(d: &FiniteDistribution, order: MergeOrder, trace: bool) -> Reduction {
    let initial_joint_entropy = if trace {
        d.expected_joint_entropy()
    } else {
        f64::NAN
    };
    if d.is_reduced() {
        return Reduction {
            result: d.clone(),
            initial_joint_entropy,
            steps: Vec::new(),
        };
    }

    let mut zero_mass = 0.0;
    let mut live: Vec<(f64, f64)> = Vec::with_capacity(d.len());
    for (p, x) in d.pairs() {
        if x < ZERO_VALUE {
            zero_mass += p;
        } else {
            live.push((p, x));
        }
    }

    let mut steps = Vec::new();
    while live.len() > 1 {
        let ((p1, x1), (p2, x2)) = match order {
            MergeOrder::Ascending => {
                let a = live.remove(0);
                let b = live.remove(0);
                (a, b)
            }
            MergeOrder::Descending => {
                let b = live.pop().unwrap();
                let a = live.pop().unwrap();
                (a, b)
            }
        };
        let m = merge_unchecked(p1, x1, p2, x2);
        zero_mass += p1 + p2 - m.q;
        insert_sorted(&mut live, m.q, m.y.get());

        if trace {
            let snapshot = snapshot(&live, zero_mass);
            steps.push(ReductionStep {
                merged: m,
                mean: snapshot.pairs().map(|(p, x)| p * x).sum(),
                expected_entropy: snapshot.expected_entropy(),
                expected_joint_entropy: snapshot.expected_joint_entropy(),
            });
        }
    }

    Reduction {
        result: snapshot(&live, zero_mass),
        initial_joint_entropy,
        steps,
    }
}

fn insert_sorted(live: &mut Vec<(f64, f64)>, q: f64, y: f64) {
    let at = live.partition_point(|&(_, x)| x < y);
    for k in [at.wrapping_sub(1), at] {
        if let Some(slot) = live.get_mut(k) {
            if (slot.1 - y).abs() <= COALESCE_TOL {
                slot.0 += q;
                return;
            }
        }
    }
    live.insert(at, (q, y));
}

fn snapshot(live: &[(f64, f64)], zero_mass: f64) -> FiniteDistribution {
    let mut atoms: Vec<Atom> = live
        .iter()
        .map(|&(weight, x)| Atom {
            weight,
            value: Prob(x),
        })
        .collect();
    if zero_mass > 0.0 {
        atoms.push(Atom {
            weight: zero_mass,
            value: Prob::ZERO,
        });
    }
    FiniteDistribution::from_normalized(atoms)
}

/// The minimizer of `E[H(X1 X2)]` subject to `E[X] = t` and `E[H(X)] = u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumCertificate {
    pub t: Prob,
    pub u: f64,
    pub v: Prob,
    pub optimum: f64,
    pub witness: FiniteDistribution,
}

impl OptimumCertificate {
    /// Weight of the non-zero atom, `t / v`.
    pub fn weight(&self) -> f64 {
        (self.t.get() / self.v.get()).min(1.0)
    }
}

/// `v = g(u/t)` and the optimum `t^2 H(v^2) / v^2`, attained by `v` with
/// probability `t/v` and `0` otherwise.
///
/// Requires `0 < t < 1` and `0 < u <= H(t)`. A `u` exceeding `H(t)` by at
/// most `1e-12` is treated as `H(t)`, which absorbs the rounding in `u`
/// computed from a near point mass.
pub fn optimum_certificate(t: Prob, u: f64) -> Result<OptimumCertificate> {
    let tv = t.get();
    if !(tv > 0.0 && tv < 1.0) {
        return Err(Error::Infeasible(format!("mean {tv} must lie in (0, 1)")));
    }
    let cap = h(tv);
    if !(u > 0.0) || u > cap + CONSTRAINT_SLACK {
        return Err(Error::Infeasible(format!(
            "expected entropy {u} must lie in (0, H({tv}) = {cap}]"
        )));
    }
    let u = u.min(cap);
    // f(v) = u/t <= f(t), so v >= t; clamp away the rounding in g.
    let v = kernel::g(u / tv)?.get().max(tv);
    let weight = (tv / v).min(1.0);
    let witness = FiniteDistribution::from_normalized(vec![
        Atom {
            weight,
            value: Prob(v),
        },
        Atom {
            weight: 1.0 - weight,
            value: Prob::ZERO,
        },
    ]);
    Ok(OptimumCertificate {
        t,
        u,
        v: Prob(v),
        optimum: tv * tv * h(v * v) / (v * v),
        witness,
    })
}

/// Result of [`random_search_joint_entropy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub attempts: usize,
    pub accepted: usize,
    pub best_value: f64,
    pub best: Option<FiniteDistribution>,
}

/// Naive randomized search for small `E[H(X1 X2)]` among distributions with
/// at most three atoms, mean `t` and expected entropy `u`.
///
/// Each attempt draws three support points (each exactly 0 with probability
/// 1/3, uniform otherwise) and solves the 3x3 linear system
/// `sum p = 1, sum p x = t, sum p H(x) = u` for the weights. Draws with a
/// negative weight or a near-singular system are discarded; accepted draws
/// are re-checked against the `tol` window before being scored.
pub fn random_search_joint_entropy(
    t: f64,
    u: f64,
    attempts: usize,
    seed: u64,
    tol: f64,
) -> SearchOutcome {
    let mut best_value = f64::INFINITY;
    let mut best = None;
    let mut accepted = 0;
    for (stream, len) in sampling::chunks(attempts) {
        let mut rng = sampling::stream_rng(seed, stream);
        for _ in 0..len {
            let xs: [f64; 3] = std::array::from_fn(|_| {
                if rng.random_range(0..3) == 0 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            });
            let Some(ps) = solve_weights(xs, t, u) else {
                continue;
            };
            let mean: f64 = (0..3).map(|i| ps[i] * xs[i]).sum();
            let ent: f64 = (0..3).map(|i| ps[i] * h(xs[i])).sum();
            if (mean - t).abs() > tol || (ent - u).abs() > tol {
                continue;
            }
            accepted += 1;
            let mut joint = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    joint += ps[i] * ps[j] * h(xs[i] * xs[j]);
                }
            }
            if joint < best_value {
                best_value = joint;
                best = FiniteDistribution::new((0..3).map(|i| (ps[i], xs[i]))).ok();
            }
        }
    }
    SearchOutcome {
        attempts,
        accepted,
        best_value,
        best,
    }
}

/// Cramer's rule for `[1 1 1; x; H(x)] p = [1; t; u]`, rejecting negative weights.
fn solve_weights(xs: [f64; 3], t: f64, u: f64) -> Option<[f64; 3]> {
    let hs = xs.map(h);
    let det3 = |c0: [f64; 3], c1: [f64; 3], c2: [f64; 3]| {
        c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1])
            + c2[0] * (c0[1] * c1[2] - c0[2] * c1[1])
    };
    let col = |i: usize| [1.0, xs[i], hs[i]];
    let rhs = [1.0, t, u];
    let det = det3(col(0), col(1), col(2));
    if det.abs() < 1e-12 {
        return None;
    }
    let p = [
        det3(rhs, col(1), col(2)) / det,
        det3(col(0), rhs, col(2)) / det,
        det3(col(0), col(1), rhs) / det,
    ];
    if p.iter().any(|&w| !(w >= 0.0)) {
        return None;
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Prob {
        Prob::new(x).unwrap()
    }

    fn dist(pairs: &[(f64, f64)]) -> FiniteDistribution {
        FiniteDistribution::new(pairs.iter().copied()).unwrap()
    }

    /// Bisection for the root of `H(y)/y = rate`, independent of `kernel::g`.
    fn bisect_rate(rate: f64) -> f64 {
        let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) / mid > rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn construction_rules() {
        let d = dist(&[(0.5, 0.3), (0.0, 0.9), (0.25, 0.1), (0.25, 0.3)]);
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms()[0].value.get(), 0.1);
        assert_eq!(d.atoms()[1].weight, 0.75);

        assert!(FiniteDistribution::new([(0.5, 0.1)]).is_err());
        assert!(FiniteDistribution::new([(1.0, 1.5)]).is_err());
        assert!(FiniteDistribution::new([(-0.5, 0.1), (1.5, 0.2)]).is_err());
        assert!(FiniteDistribution::new([(f64::NAN, 0.1)]).is_err());
        assert!(FiniteDistribution::new(std::iter::empty()).is_err());

        let d = dist(&[(0.5 + 4e-10, 0.2), (0.5, 0.4)]);
        assert_eq!(d.atoms().iter().map(|a| a.weight).sum::<f64>(), 1.0);
    }

    #[test]
    fn coalesces_near_equal_values() {
        let d = dist(&[(0.5, 0.3), (0.5, 0.3 + 1e-16)]);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(dist(&[(1.0, 0.5)]).mean().get(), 0.5);
        assert_eq!(dist(&[(0.5, 0.25), (0.5, 0.75)]).mean().get(), 0.5);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(dist(&[(1.0, 0.5)]).expected_entropy(), 1.0);
        assert_eq!(dist(&[(0.5, 0.0), (0.5, 1.0)]).expected_entropy(), 0.0);
        let w = 0.37;
        assert_eq!(dist(&[(1.0, w)]).expected_joint_entropy(), h(w * w));
        assert_eq!(dist(&[(0.5, 0.0), (0.5, 1.0)]).expected_joint_entropy(), 0.0);
    }

    #[test]
    fn joint_entropy_matches_naive_double_sum() {
        let d = dist(&[(0.2, 0.1), (0.3, 0.55), (0.5, 0.9)]);
        let a = d.atoms();
        let mut naive = 0.0;
        for ai in a {
            for aj in a {
                naive += ai.weight * aj.weight * h(ai.value.get() * aj.value.get());
            }
        }
        assert!((d.expected_joint_entropy() - naive).abs() < 1e-14);
    }

    #[test]
    fn merge_equal_values_is_identity() {
        let m = merge(0.3, p(0.5), 0.3, p(0.5)).unwrap();
        assert_eq!(m.y.get(), 0.5);
        assert!((m.q - 0.6).abs() < 1e-15);
        assert_eq!(m.residual_at_zero, 0.0);
    }

    #[test]
    fn merge_two_point_example() {
        let m = merge(0.5, p(0.25), 0.5, p(0.75)).unwrap();
        let rate = (h(0.25) + h(0.75)) / (0.25 + 0.75);
        let y = bisect_rate(rate);
        assert!((m.y.get() - y).abs() < 1e-12);
        assert!((m.q - 0.5 / y).abs() < 1e-12);
        assert!((m.q * m.y.get() - 0.5).abs() < 1e-10);
        assert!((m.q * h(m.y.get()) - 0.5 * (h(0.25) + h(0.75))).abs() < 1e-10);
        assert!(m.q <= 1.0);
        assert!((m.residual_at_zero - (1.0 - m.q)).abs() < 1e-15);
    }

    #[test]
    fn merge_rejects_zero_values_and_weights() {
        assert!(merge(0.5, Prob::ZERO, 0.5, p(0.3)).is_err());
        assert!(merge(0.5, p(0.3), 0.5, Prob::ZERO).is_err());
        assert!(merge(0.0, p(0.3), 0.5, p(0.4)).is_err());
        assert!(merge(f64::NAN, p(0.3), 0.5, p(0.4)).is_err());
    }

    #[test]
    fn scaled_inequality_endpoints() {
        let z0 = scaled_entropy_inequality_check(0.3, p(0.2), 0.6, p(0.9), Prob::ZERO).unwrap();
        assert_eq!(z0, 0.0);
        let z1 = scaled_entropy_inequality_check(0.3, p(0.2), 0.6, p(0.9), Prob::ONE).unwrap();
        assert!(z1.abs() < 1e-12);
    }

    #[test]
    fn scaled_inequality_grid() {
        let grid = [0.05, 0.2, 0.45, 0.7, 0.95, 1.0];
        for &p1 in &grid {
            for &x1 in &grid {
                for &p2 in &grid {
                    for &x2 in &grid {
                        for k in 0..=20 {
                            let z = p(k as f64 / 20.0);
                            let m = scaled_entropy_inequality_check(p1, p(x1), p2, p(x2), z)
                                .unwrap();
                            assert!(m >= -1e-9, "{p1} {x1} {p2} {x2} {z}: {m}");
                        }
                        assert!(pair_joint_entropy_margin(p1, p(x1), p2, p(x2)).unwrap() >= -1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn reduce_fixed_points() {
        let d = dist(&[(0.3, 0.0), (0.7, 0.6)]);
        assert_eq!(reduce(&d), d);
        let d = dist(&[(1.0, 0.0)]);
        assert_eq!(reduce(&d), d);
    }

    #[test]
    fn reduce_single_merge() {
        let d = dist(&[(0.5, 0.25), (0.5, 0.75)]);
        let m = merge(0.5, p(0.25), 0.5, p(0.75)).unwrap();
        let r = reduce(&d);
        assert_eq!(r.len(), 2);
        assert_eq!(r.atoms()[0].value, Prob::ZERO);
        assert!((r.atoms()[0].weight - (1.0 - m.q)).abs() < 1e-15);
        assert_eq!(r.atoms()[1].value, m.y);
        assert!((r.atoms()[1].weight - m.q).abs() < 1e-15);
    }

    #[test]
    fn reduce_trace_is_monotone() {
        let d = dist(&[(0.1, 0.05), (0.2, 0.3), (0.3, 0.5), (0.15, 0.8), (0.25, 0.99)]);
        for order in [MergeOrder::Ascending, MergeOrder::Descending] {
            let r = reduce_traced(&d, order);
            assert_eq!(r.steps.len(), 4);
            let mut prev = r.initial_joint_entropy;
            for s in &r.steps {
                assert!(s.expected_joint_entropy <= prev + 1e-8);
                assert!((s.mean - d.mean().get()).abs() < 1e-12);
                assert!((s.expected_entropy - d.expected_entropy()).abs() < 1e-12);
                prev = s.expected_joint_entropy;
            }
        }
    }

    #[test]
    fn optimum_at_entropy_cap_is_point_mass() {
        let t = p(0.3);
        let c = optimum_certificate(t, h(0.3)).unwrap();
        assert!((c.v.get() - 0.3).abs() < 1e-12);
        assert!((c.optimum - h(0.09)).abs() < 1e-12);
        assert_eq!(c.witness.nonzero_support(), 1);
        assert!(c.witness.zero_mass() < 1e-12);
    }

    #[test]
    fn optimum_half_half() {
        let c = optimum_certificate(p(0.5), 0.5).unwrap();
        let v = bisect_rate(1.0);
        assert!((c.v.get() - v).abs() < 1e-12);
        assert!((c.optimum - 0.25 * h(v * v) / (v * v)).abs() < 1e-12);
        assert!((c.witness.expected_joint_entropy() - c.optimum).abs() < 1e-9);
        assert!((c.witness.mean().get() - 0.5).abs() < 1e-9);
        assert!((c.witness.expected_entropy() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn optimum_rejects_infeasible() {
        assert!(matches!(optimum_certificate(p(0.3), 0.0), Err(Error::Infeasible(_))));
        assert!(optimum_certificate(p(0.3), h(0.3) + 1e-6).is_err());
        assert!(optimum_certificate(Prob::ZERO, 0.1).is_err());
        assert!(optimum_certificate(Prob::ONE, 0.1).is_err());
        assert!(optimum_certificate(p(0.3), f64::NAN).is_err());
    }

    #[test]
    fn solve_weights_recovers_known_distribution() {
        let xs = [0.0, 0.4, 0.8];
        let ps = [0.2, 0.5, 0.3];
        let t: f64 = (0..3).map(|i| ps[i] * xs[i]).sum();
        let u: f64 = (0..3).map(|i| ps[i] * h(xs[i])).sum();
        let got = solve_weights(xs, t, u).unwrap();
        for i in 0..3 {
            assert!((got[i] - ps[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn search_never_beats_optimum_small() {
        let c = optimum_certificate(p(0.4), 0.6).unwrap();
        let s = random_search_joint_entropy(0.4, 0.6, 20_000, 3, 1e-3);
        assert!(s.accepted > 0);
        assert!(s.best_value >= c.optimum - 1e-4, "{} < {}", s.best_value, c.optimum);
    }
}
