//! The ten acceptance checks at full budget. Each test prints one line:
//! `criterion <n> <title>: PASS|FAIL (<worst report> min_margin=<m> tol=<t>)`.

use std::time::Instant;

use ucentropy::suite::{run_criterion, SuiteConfig};

fn check(n: u8) {
    let start = Instant::now();
    let out = run_criterion(n, &SuiteConfig::default()).expect("check runs");
    let worst = out.worst().expect("at least one report");
    let verdict = if out.passed() { "PASS" } else { "FAIL" };
    println!(
        "criterion {n} {}: {verdict} ({} min_margin={:e} tol={:e}, {} reports, {:.2?})",
        out.title,
        worst.name,
        worst.min_margin,
        worst.config.tolerance,
        out.reports.len(),
        start.elapsed()
    );
    for r in out.reports.iter().filter(|r| !r.passed) {
        println!("  failing: {}", r.to_json());
    }
    assert!(out.passed(), "criterion {n} failed");
}

#[test]
fn criterion_01_golden_anchor() {
    check(1);
}

#[test]
fn criterion_02_kernel_round_trip() {
    check(2);
}

#[test]
fn criterion_03_merge_properties() {
    check(3);
}

#[test]
fn criterion_04_reduction_matches_closed_form() {
    check(4);
}

#[test]
fn criterion_05_optimum_not_beaten() {
    check(5);
}

#[test]
fn criterion_06_monotonicity_and_convexity() {
    check(6);
}

#[test]
fn criterion_07_coordinate_inequalities() {
    check(7);
}

#[test]
fn criterion_08_union_entropy_bound() {
    check(8);
}

#[test]
fn criterion_09_frequency_census() {
    check(9);
}

#[test]
fn criterion_10_uniform_entropy_maximality() {
    check(10);
}
