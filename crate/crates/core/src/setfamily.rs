//! Union-closed families over small ground sets, element frequencies, and the
//! entropy of the union of two independent random sets.
//!
//! Members are bitmasks: bit `i` stands for element `i + 1` of `[n]`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{h, GOLDEN_COMPLEMENT};
use crate::lab::union_ratio;
use crate::tolerance::{CONSTRAINT_SLACK, WEIGHT_SUM_TOL};

/// Largest ground set handled by the general operations.
pub const MAX_GROUND: u8 = 16;

/// Largest ground set for exhaustive enumeration (`2^(2^4)` candidates).
pub const MAX_ENUM_GROUND: u8 = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetFamily {
    ground_n: u8,
    members: Vec<u32>,
    #[serde(skip)]
    closed: OnceLock<bool>,
}

impl PartialEq for SetFamily {
    fn eq(&self, other: &Self) -> bool {
        self.ground_n == other.ground_n && self.members == other.members
    }
}

impl Eq for SetFamily {}

fn check_ground(ground_n: u8) -> Result<()> {
    if ground_n > MAX_GROUND {
        return Err(Error::InvalidFamily(format!(
            "ground set of size {ground_n} exceeds {MAX_GROUND}"
        )));
    }
    Ok(())
}

impl SetFamily {
    /// Sorts and deduplicates `members`; every mask must fit in `ground_n` bits.
    pub fn new(ground_n: u8, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        check_ground(ground_n)?;
        let mut members: Vec<u32> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&m| u64::from(m) >= 1u64 << ground_n) {
            return Err(Error::InvalidFamily(format!(
                "member {bad:#b} does not fit in a ground set of size {ground_n}"
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            ground_n,
            members,
            closed: OnceLock::new(),
        })
    }

    /// All `2^n` subsets of `[n]`.
    pub fn power_set(ground_n: u8) -> Result<Self> {
        check_ground(ground_n)?;
        Self::new(ground_n, 0..(1u32 << ground_n))
    }

    pub fn ground_n(&self) -> u8 {
        self.ground_n
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The family `{∅}`.
    pub fn is_empty_set_only(&self) -> bool {
        self.members == [0]
    }

    /// First pair `(a, b)` whose union is missing, scanning in member order.
    pub fn union_violation(&self) -> Option<(u32, u32, u32)> {
        let present = presence(self.ground_n, &self.members);
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                let u = a | b;
                if !present[u as usize] {
                    return Some((a, b, u));
                }
            }
        }
        None
    }

    pub fn is_union_closed(&self) -> bool {
        *self.closed.get_or_init(|| self.union_violation().is_none())
    }

    /// Errors with the violating pair unless the family is union-closed.
    pub fn require_union_closed(&self) -> Result<()> {
        match self.union_violation() {
            None => Ok(()),
            Some((a, b, union)) => Err(Error::NotUnionClosed { a, b, union }),
        }
    }

    /// Element labels (1-based) of a member.
    pub fn elements(mask: u32) -> impl Iterator<Item = u32> {
        (0..32).filter(move |i| mask >> i & 1 == 1).map(|i| i + 1)
    }
}

fn presence(ground_n: u8, members: &[u32]) -> Vec<bool> {
    let mut present = vec![false; 1usize << ground_n];
    for &m in members {
        present[m as usize] = true;
    }
    present
}

/// Smallest union-closed family containing `members`.
pub fn union_closure(ground_n: u8, members: impl IntoIterator<Item = u32>) -> Result<SetFamily> {
    let seed = SetFamily::new(ground_n, members)?;
    let mut present = presence(ground_n, &seed.members);
    let mut list = seed.members;
    let mut i = 0;
    while i < list.len() {
        let m = list[i];
        for j in 0..i {
            let u = m | list[j];
            if !present[u as usize] {
                present[u as usize] = true;
                list.push(u);
            }
        }
        i += 1;
    }
    let family = SetFamily::new(ground_n, list)?;
    let _ = family.closed.set(true);
    Ok(family)
}

/// Per-element membership counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    /// `|F|`.
    pub size: u64,
    /// `counts[i]` members contain element `i + 1`.
    pub counts: Vec<u64>,
    pub frequency: Vec<f64>,
    pub max_frequency: f64,
    pub max_count: u64,
    /// 1-based label of the most frequent element, smallest on ties; `None`
    /// for an empty ground set.
    pub argmax_element: Option<u32>,
}

pub fn frequency_profile(f: &SetFamily) -> Result<FrequencyProfile> {
    if f.is_empty() {
        return Err(Error::InvalidFamily("frequency profile of an empty family".into()));
    }
    let n = f.ground_n as usize;
    let mut counts = vec![0u64; n];
    for &m in &f.members {
        for (i, c) in counts.iter_mut().enumerate() {
            *c += u64::from(m >> i & 1);
        }
    }
    let size = f.len() as u64;
    let mut argmax = None;
    let mut max_count = 0;
    for (i, &c) in counts.iter().enumerate() {
        if argmax.is_none() || c > max_count {
            argmax = Some(i as u32 + 1);
            max_count = c;
        }
    }
    Ok(FrequencyProfile {
        size,
        frequency: counts.iter().map(|&c| c as f64 / size as f64).collect(),
        counts,
        max_frequency: max_count as f64 / size as f64,
        max_count,
        argmax_element: argmax,
    })
}

/// `count / size >= (3 - sqrt 5)/2`, decided in integers:
/// `3 size - 2 count <= sqrt(5) size`, squared when the left side is positive.
pub fn meets_golden_bound(count: u64, size: u64) -> bool {
    let (c, s) = (i128::from(count), i128::from(size));
    let lhs = 3 * s - 2 * c;
    lhs <= 0 || lhs * lhs <= 5 * s * s
}

/// Outcome of the frequency-bound check on one union-closed family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBoundCheck {
    /// `max_frequency - (3 - sqrt 5)/2`.
    pub margin: f64,
    pub max_count: u64,
    pub size: u64,
    pub argmax_element: Option<u32>,
    /// The bound decided in exact integer arithmetic.
    pub meets_bound: bool,
    /// Some element lies in at least half the members.
    pub meets_half: bool,
}

/// Some element of a union-closed family `F != {∅}` lies in at least a
/// `(3 - sqrt 5)/2` fraction of its members.
///
/// `{∅}` is rejected: all its frequencies are 0, and the bound is only
/// meaningful once some member is non-empty.
pub fn check_frequency_bound(f: &SetFamily) -> Result<FrequencyBoundCheck> {
    if f.is_empty() {
        return Err(Error::InvalidFamily("family is empty".into()));
    }
    if f.is_empty_set_only() {
        return Err(Error::InvalidFamily("the family {∅} is excluded".into()));
    }
    f.require_union_closed()?;
    Ok(frequency_bound_unchecked(f))
}

fn frequency_bound_unchecked(f: &SetFamily) -> FrequencyBoundCheck {
    let p = frequency_profile(f).expect("nonempty");
    FrequencyBoundCheck {
        margin: p.max_frequency - GOLDEN_COMPLEMENT,
        max_count: p.max_count,
        size: p.size,
        argmax_element: p.argmax_element,
        meets_bound: meets_golden_bound(p.max_count, p.size),
        meets_half: 2 * p.max_count >= p.size,
    }
}

/// A distribution over subsets of `[n]`: distinct masks in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDistribution {
    ground_n: u8,
    atoms: Vec<(f64, u32)>,
}

impl SubsetDistribution {
    /// Probabilities must be nonnegative and sum to within `1e-9` of 1;
    /// repeated masks are merged and zero-probability masks dropped.
    pub fn new(ground_n: u8, atoms: impl IntoIterator<Item = (f64, u32)>) -> Result<Self> {
        check_ground(ground_n)?;
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for (p, m) in atoms {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("probability {p}")));
            }
            if u64::from(m) >= 1u64 << ground_n {
                return Err(Error::InvalidDistribution(format!(
                    "mask {m:#b} does not fit in a ground set of size {ground_n}"
                )));
            }
            if p > 0.0 {
                *merged.entry(m).or_default() += p;
            }
        }
        let total: f64 = merged.values().sum();
        if merged.is_empty() || (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            ground_n,
            atoms: merged.into_iter().map(|(m, p)| (p / total, m)).collect(),
        })
    }

    /// Uniform on the members of `f`.
    pub fn uniform(f: &SetFamily) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::InvalidFamily("uniform distribution on an empty family".into()));
        }
        let p = 1.0 / f.len() as f64;
        Ok(Self {
            ground_n: f.ground_n,
            atoms: f.members.iter().map(|&m| (p, m)).collect(),
        })
    }

    /// Each element included independently with its own probability.
    pub fn product(marginals: &[f64]) -> Result<Self> {
        let n = u8::try_from(marginals.len())
            .ok()
            .filter(|&n| n <= MAX_GROUND)
            .ok_or_else(|| Error::InvalidFamily("too many marginals".into()))?;
        if marginals.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
            return Err(Error::InvalidDistribution("marginals must lie in [0, 1]".into()));
        }
        let atoms = (0..(1u32 << n)).map(|m| {
            let p: f64 = marginals
                .iter()
                .enumerate()
                .map(|(i, &q)| if m >> i & 1 == 1 { q } else { 1.0 - q })
                .product();
            (p, m)
        });
        Self::new(n, atoms)
    }

    pub fn ground_n(&self) -> u8 {
        self.ground_n
    }

    pub fn atoms(&self) -> &[(f64, u32)] {
        &self.atoms
    }

    /// `Pr[i in A]` for each element.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ground_n as usize];
        for &(p, m) in &self.atoms {
            for (i, q) in out.iter_mut().enumerate() {
                if m >> i & 1 == 1 {
                    *q += p;
                }
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).sum()
    }
}

/// Shannon entropy `-sum p log2 p` of the atom probabilities.
pub fn entropy_of(d: &SubsetDistribution) -> f64 {
    d.atoms
        .iter()
        .filter(|a| a.0 > 0.0)
        .map(|&(p, _)| -p * p.log2())
        .sum()
}

/// Exact law of `A ∪ B` for independent `A, B ~ d`.
pub fn union_distribution(d: &SubsetDistribution) -> SubsetDistribution {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for &(pa, a) in &d.atoms {
        for &(pb, b) in &d.atoms {
            *acc.entry(a | b).or_default() += pa * pb;
        }
    }
    SubsetDistribution {
        ground_n: d.ground_n,
        atoms: acc.into_iter().map(|(m, p)| (p, m)).collect(),
    }
}

/// Entropies behind the union bound for one subset distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionEntropyCheck {
    pub alpha: f64,
    /// `H(A)`.
    pub entropy: f64,
    /// `H(A ∪ B)`.
    pub union_entropy: f64,
    /// `H(A ∪ B) - H(alpha^2)/H(alpha) * H(A)`.
    pub margin: f64,
    /// `H(A ∪ B) - H(2 alpha - alpha^2)/H(alpha) * H(A)`, the form whose
    /// ratio exceeds 1 below the golden complement.
    pub sharp_margin: f64,
}

/// `H(A ∪ B) >= H(alpha^2)/H(alpha) H(A)` for `A, B ~ d` independent, when
/// every element marginal is at most `alpha <= (3 - sqrt 5)/2`.
///
/// Also reports the margin against `H(2 alpha - alpha^2)/H(alpha)`; that is
/// the ratio that exceeds 1 and drives the frequency bound, whereas
/// `H(alpha^2)/H(alpha)` is below 1 on the whole admissible range.
pub fn check_union_entropy(d: &SubsetDistribution, alpha: f64) -> Result<UnionEntropyCheck> {
    if !(alpha > 0.0 && alpha <= GOLDEN_COMPLEMENT) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} must lie in (0, {GOLDEN_COMPLEMENT}]"
        )));
    }
    if let Some((i, q)) = d
        .marginals()
        .into_iter()
        .enumerate()
        .find(|&(_, q)| q > alpha + CONSTRAINT_SLACK)
    {
        return Err(Error::Precondition(format!(
            "Pr[{} in A] = {q} exceeds alpha = {alpha}",
            i + 1
        )));
    }
    Ok(union_entropy_unchecked(d, alpha))
}

pub(crate) fn union_entropy_unchecked(d: &SubsetDistribution, alpha: f64) -> UnionEntropyCheck {
    let entropy = entropy_of(d);
    let union_entropy = entropy_of(&union_distribution(d));
    let stated = h(alpha * alpha) / h(alpha);
    UnionEntropyCheck {
        alpha,
        entropy,
        union_entropy,
        margin: union_entropy - stated * entropy,
        sharp_margin: union_entropy - union_ratio(alpha) * entropy,
    }
}

/// Random subset distribution on `[n]` for the union-bound scan: up to eight
/// masks whose elements are included with a common rate drawn from `(0, 1/2)`,
/// flat-simplex weights. Callers reject draws whose marginals are too large.
pub fn random_subset_distribution<R: Rng + ?Sized>(rng: &mut R, ground_n: u8) -> SubsetDistribution {
    loop {
        let k = rng.random_range(1..=8);
        let rate = 0.5 * rng.random::<f64>();
        let weights = crate::sampling::flat_simplex(rng, k);
        let atoms: Vec<(f64, u32)> = weights
            .into_iter()
            .map(|w| {
                let mask = (0..ground_n).fold(0u32, |m, i| {
                    if rng.random::<f64>() < rate {
                        m | 1 << i
                    } else {
                        m
                    }
                });
                (w, mask)
            })
            .collect();
        if let Ok(d) = SubsetDistribution::new(ground_n, atoms) {
            return d;
        }
    }
}

/// Union closure of `k` distinct random masks, `k` uniform in `[1, 2^n]`.
pub fn random_family<R: Rng + ?Sized>(rng: &mut R, ground_n: u8) -> Result<SetFamily> {
    check_ground(ground_n)?;
    let universe = 1usize << ground_n;
    let k = rng.random_range(1..=universe);
    let masks = index::sample(rng, universe, k).into_iter().map(|m| m as u32);
    union_closure(ground_n, masks)
}

/// Every nonempty union-closed subfamily of `2^[n]`, in ascending order of
/// the member bitset (bit `m` set when mask `m` is a member).
pub struct UnionClosedFamilies {
    ground_n: u8,
    next: u64,
    end: u64,
    emitted: u64,
}

impl UnionClosedFamilies {
    /// Families yielded so far; after exhaustion, the census count.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }
}

impl Iterator for UnionClosedFamilies {
    type Item = (u64, SetFamily);

    fn next(&mut self) -> Option<Self::Item> {
        while self.next < self.end {
            let id = self.next;
            self.next += 1;
            if bitset_is_union_closed(id, self.ground_n) {
                self.emitted += 1;
                let family = SetFamily::new(self.ground_n, bitset_members(id))
                    .expect("masks fit the ground set");
                let _ = family.closed.set(true);
                return Some((id, family));
            }
        }
        None
    }
}

pub fn enumerate_union_closed(ground_n: u8) -> Result<UnionClosedFamilies> {
    enumerate_range(ground_n, 1, candidate_count(ground_n)?)
}

/// Candidates `id` in `[start, end)`; used to partition a census.
pub fn enumerate_range(ground_n: u8, start: u64, end: u64) -> Result<UnionClosedFamilies> {
    let total = candidate_count(ground_n)?;
    Ok(UnionClosedFamilies {
        ground_n,
        next: start.max(1),
        end: end.min(total),
        emitted: 0,
    })
}

/// `2^(2^n)`, the number of member bitsets.
pub fn candidate_count(ground_n: u8) -> Result<u64> {
    if ground_n > MAX_ENUM_GROUND {
        return Err(Error::InvalidFamily(format!(
            "exhaustive enumeration is limited to ground sets of size {MAX_ENUM_GROUND}"
        )));
    }
    Ok(1u64 << (1u32 << ground_n))
}

fn bitset_members(id: u64) -> impl Iterator<Item = u32> {
    (0..64u32).filter(move |m| id >> m & 1 == 1)
}

fn bitset_is_union_closed(id: u64, ground_n: u8) -> bool {
    let universe = 1u32 << ground_n;
    for a in 0..universe {
        if id >> a & 1 == 0 {
            continue;
        }
        for b in (a + 1)..universe {
            if id >> b & 1 == 1 && id >> (a | b) & 1 == 0 {
                return false;
            }
        }
    }
    true
}

/// Summary of the frequency bound over every union-closed family on `[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub ground_n: u8,
    /// Nonempty union-closed families, `{∅}` included.
    pub families: u64,
    /// Families checked against the bound (`{∅}` excluded).
    pub checked: u64,
    /// Smallest max-frequency as `(count, size)`.
    pub min_max_frequency: Option<(u64, u64)>,
    pub min_family_id: Option<u64>,
    pub all_meet_bound: bool,
    pub all_meet_half: bool,
}

impl Census {
    fn empty(ground_n: u8) -> Self {
        Self {
            ground_n,
            families: 0,
            checked: 0,
            min_max_frequency: None,
            min_family_id: None,
            all_meet_bound: true,
            all_meet_half: true,
        }
    }

    fn absorb(&mut self, id: u64, f: &SetFamily) {
        self.families += 1;
        if f.is_empty_set_only() {
            return;
        }
        self.checked += 1;
        let c = frequency_bound_unchecked(f);
        self.all_meet_bound &= c.meets_bound;
        self.all_meet_half &= c.meets_half;
        let smaller = match self.min_max_frequency {
            None => true,
            // c.max_count / c.size < count / size
            Some((count, size)) => {
                u128::from(c.max_count) * u128::from(size) < u128::from(count) * u128::from(c.size)
            }
        };
        if smaller {
            self.min_max_frequency = Some((c.max_count, c.size));
            self.min_family_id = Some(id);
        }
    }

    /// Combines the census of a later candidate range into this one.
    fn merge(mut self, other: Census) -> Census {
        self.families += other.families;
        self.checked += other.checked;
        self.all_meet_bound &= other.all_meet_bound;
        self.all_meet_half &= other.all_meet_half;
        if let Some((oc, os)) = other.min_max_frequency {
            let take = match self.min_max_frequency {
                None => true,
                Some((c, s)) => u128::from(oc) * u128::from(s) < u128::from(c) * u128::from(os),
            };
            if take {
                self.min_max_frequency = other.min_max_frequency;
                self.min_family_id = other.min_family_id;
            }
        }
        self
    }
}

/// Exhaustive frequency-bound census over `parts` contiguous candidate
/// ranges, merged in range order. The result does not depend on `parts`.
pub fn census(ground_n: u8, parts: usize) -> Result<Census> {
    let total = candidate_count(ground_n)?;
    let parts = parts.clamp(1, total as usize) as u64;
    let width = total.div_ceil(parts);
    let pieces: Vec<Census> = (0..parts)
        .into_par_iter()
        .map(|k| {
            let mut c = Census::empty(ground_n);
            let start = k * width;
            let end = (start + width).min(total);
            for (id, f) in enumerate_range(ground_n, start, end).expect("ground checked") {
                c.absorb(id, &f);
            }
            c
        })
        .collect();
    Ok(pieces
        .into_iter()
        .fold(Census::empty(ground_n), Census::merge))
}
