use proptest::collection::vec;
use proptest::prelude::*;

use ucentropy::distribution::{
    merge, optimum_certificate, pair_joint_entropy_margin, reduce, reduce_traced, reduce_with,
    scaled_entropy_inequality_check, MergeOrder,
};
use ucentropy::format::{parse_distribution, parse_family, write_distribution, write_family};
use ucentropy::kernel::{square_ratio, square_rate_ratio};
use ucentropy::lab::{product_inequality_chain, product_inequality_margin, union_inequality_margin};
use ucentropy::setfamily::{
    check_frequency_bound, entropy_of, frequency_profile, meets_golden_bound, union_closure,
    union_distribution, SubsetDistribution,
};
use ucentropy::{binary_entropy, f, g, FiniteDistribution, Prob, GOLDEN, GOLDEN_COMPLEMENT};

fn p(x: f64) -> Prob {
    Prob::new(x).unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => 0.0..=1.0f64,
        1 => Just(0.0),
        1 => Just(1.0),
    ]
}

fn open_unit() -> impl Strategy<Value = f64> {
    1e-9..=1.0f64
}

fn distribution(max_atoms: usize) -> impl Strategy<Value = FiniteDistribution> {
    vec((1e-3..1.0f64, unit()), 1..=max_atoms).prop_map(|raw| {
        let total: f64 = raw.iter().map(|a| a.0).sum();
        FiniteDistribution::new(raw.into_iter().map(|(w, x)| (w / total, x))).unwrap()
    })
}

/// Values scaled down so the mean is at most the golden complement.
fn low_mean_distribution(max_atoms: usize) -> impl Strategy<Value = FiniteDistribution> {
    (distribution(max_atoms), 0.0..=1.0f64).prop_map(|(d, s)| {
        let mean = d.mean().get();
        let c = if mean > GOLDEN_COMPLEMENT { GOLDEN_COMPLEMENT / mean * (0.5 + 0.5 * s) } else { 1.0 };
        FiniteDistribution::new(d.pairs().map(|(w, x)| (w, (x * c).min(1.0)))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn entropy_is_symmetric_and_bounded(x in unit()) {
        let hx = binary_entropy(p(x));
        prop_assert!((0.0..=1.0).contains(&hx));
        prop_assert!((hx - binary_entropy(p(1.0 - x))).abs() < 1e-15);
    }

    #[test]
    fn rate_is_decreasing(a in open_unit(), b in open_unit()) {
        prop_assume!(a < b);
        prop_assert!(f(p(a)).unwrap() >= f(p(b)).unwrap());
    }

    #[test]
    fn inverse_round_trips(x in 1e-6..=1.0f64) {
        let y = f(p(x)).unwrap();
        let back = g(y).unwrap().get();
        prop_assert!((back - x).abs() <= 1e-9, "x = {x}, back = {back}");
        let y2 = f(g(y).unwrap()).unwrap();
        prop_assert!((y2 - y).abs() <= 1e-10 * y.max(1.0));
    }

    #[test]
    fn square_ratio_is_monotone(a in unit(), b in unit()) {
        prop_assume!(a < b);
        prop_assert!(square_ratio(p(a)) <= square_ratio(p(b)) + 1e-12);
    }

    #[test]
    fn square_rate_ratio_is_monotone_above_golden(a in GOLDEN..=1.0f64, b in GOLDEN..=1.0f64) {
        prop_assume!(a < b);
        prop_assert!(square_rate_ratio(p(a)).unwrap() <= square_rate_ratio(p(b)).unwrap() + 1e-12);
    }

    #[test]
    fn merge_conserves_and_shrinks(
        p1 in 1e-6..1.0f64, x1 in open_unit(), p2 in 1e-6..1.0f64, x2 in open_unit(), z in unit()
    ) {
        let m = merge(p1, p(x1), p2, p(x2)).unwrap();
        let y = m.y.get();
        prop_assert!(y >= x1.min(x2) && y <= x1.max(x2));
        prop_assert!((m.q * y - (p1 * x1 + p2 * x2)).abs() <= 1e-10);
        let ent = p1 * binary_entropy(p(x1)) + p2 * binary_entropy(p(x2));
        prop_assert!((m.q * binary_entropy(m.y) - ent).abs() <= 1e-10);
        prop_assert!(m.q <= p1 + p2 + 1e-12);
        prop_assert!(scaled_entropy_inequality_check(p1, p(x1), p2, p(x2), p(z)).unwrap() >= -1e-9);
        prop_assert!(pair_joint_entropy_margin(p1, p(x1), p2, p(x2)).unwrap() >= -1e-9);
    }

    #[test]
    fn merge_is_symmetric(p1 in 1e-3..1.0f64, x1 in open_unit(), p2 in 1e-3..1.0f64, x2 in open_unit()) {
        let a = merge(p1, p(x1), p2, p(x2)).unwrap();
        let b = merge(p2, p(x2), p1, p(x1)).unwrap();
        prop_assert!((a.q - b.q).abs() <= 1e-12 * a.q.max(1.0));
        prop_assert!((a.y.get() - b.y.get()).abs() <= 1e-12);
    }

    #[test]
    fn reduction_preserves_moments_and_is_idempotent(d in distribution(12)) {
        let r = reduce(&d);
        prop_assert!(r.is_reduced());
        prop_assert!((r.mean().get() - d.mean().get()).abs() <= 1e-8);
        prop_assert!((r.expected_entropy() - d.expected_entropy()).abs() <= 1e-8);
        prop_assert!(r.expected_joint_entropy() <= d.expected_joint_entropy() + 1e-8);
        prop_assert_eq!(reduce(&r), r.clone());
        let total: f64 = r.pairs().map(|a| a.0).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn reduction_steps_never_raise_joint_entropy(d in distribution(12)) {
        let trace = reduce_traced(&d, MergeOrder::Ascending);
        let mut prev = trace.initial_joint_entropy;
        for s in &trace.steps {
            prop_assert!(s.expected_joint_entropy <= prev + 1e-8);
            prev = s.expected_joint_entropy;
        }
    }

    #[test]
    fn reduction_does_not_depend_on_order(d in distribution(12)) {
        let a: Vec<(f64, f64)> = reduce_with(&d, MergeOrder::Ascending).pairs().collect();
        let b: Vec<(f64, f64)> = reduce_with(&d, MergeOrder::Descending).pairs().collect();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.0 - y.0).abs() <= 1e-7 && (x.1 - y.1).abs() <= 1e-7);
        }
    }

    #[test]
    fn optimum_is_below_every_distribution(d in distribution(8)) {
        let t = d.mean().get();
        let u = d.expected_entropy();
        prop_assume!(t > 0.0 && t < 1.0 && u > 0.0);
        let c = optimum_certificate(p(t), u).unwrap();
        prop_assert!(c.v.get() >= t);
        prop_assert!(d.expected_joint_entropy() >= c.optimum - 1e-9);
        prop_assert!((c.witness.expected_joint_entropy() - c.optimum).abs() <= 1e-10);
        prop_assert!((c.witness.mean().get() - t).abs() <= 1e-12);
        prop_assert!((c.witness.expected_entropy() - u).abs() <= 1e-10);
    }

    #[test]
    fn union_form_holds(d in low_mean_distribution(6), s in open_unit()) {
        let mean = d.mean().get();
        let alpha = mean + (GOLDEN_COMPLEMENT - mean) * s;
        prop_assume!(alpha > 0.0);
        prop_assert!(union_inequality_margin(&d, alpha) >= -1e-9);
    }

    #[test]
    fn product_form_and_its_chain_hold(d in low_mean_distribution(6), s in 0.0..=1.0f64) {
        let d = d.complement();
        let mean = d.mean().get();
        prop_assume!(mean >= GOLDEN);
        let beta = (GOLDEN + (mean - GOLDEN) * s).min(1.0 - 1e-12);
        prop_assert!(product_inequality_margin(&d, beta) >= -1e-9);
        let chain = product_inequality_chain(&d, p(beta)).unwrap();
        prop_assert!(chain.holds(1e-9), "{chain:?}");
    }

    #[test]
    fn complement_swaps_the_two_forms(d in low_mean_distribution(6), s in open_unit()) {
        let mean = d.mean().get();
        let alpha = (mean + (GOLDEN_COMPLEMENT - mean) * s).max(1e-9);
        let a = union_inequality_margin(&d, alpha);
        let b = product_inequality_margin(&d.complement(), 1.0 - alpha);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn distribution_file_round_trips(d in distribution(10)) {
        prop_assert_eq!(parse_distribution(&write_distribution(&d)).unwrap(), d);
    }

    #[test]
    fn closure_is_closed_and_idempotent(n in 1u8..=6, seeds in vec(any::<u32>(), 1..10)) {
        let masks = seeds.into_iter().map(|m| m & ((1u32 << n) - 1));
        let c = union_closure(n, masks).unwrap();
        prop_assert!(c.is_union_closed());
        prop_assert_eq!(union_closure(n, c.members().iter().copied()).unwrap(), c.clone());
        prop_assert_eq!(parse_family(&write_family(&c)).unwrap(), c.clone());
        let prof = frequency_profile(&c).unwrap();
        prop_assert!(prof.counts.iter().all(|&k| k <= prof.size));
        if !c.is_empty_set_only() {
            prop_assert!(check_frequency_bound(&c).unwrap().meets_bound);
        }
    }

    #[test]
    fn golden_bound_agrees_with_floats_away_from_ties(count in 0u64..10_000, extra in 0u64..10_000) {
        let size = count + extra;
        prop_assume!(size > 0);
        let q = count as f64 / size as f64;
        prop_assume!((q - GOLDEN_COMPLEMENT).abs() > 1e-12);
        prop_assert_eq!(meets_golden_bound(count, size), q >= GOLDEN_COMPLEMENT);
    }

    #[test]
    fn union_never_adds_entropy_for_uniform_on_closed_families(
        n in 1u8..=4, seeds in vec(any::<u32>(), 1..6)
    ) {
        let c = union_closure(n, seeds.into_iter().map(|m| m & ((1u32 << n) - 1))).unwrap();
        let d = SubsetDistribution::uniform(&c).unwrap();
        prop_assert!(entropy_of(&union_distribution(&d)) <= entropy_of(&d) + 1e-12);
    }
}
