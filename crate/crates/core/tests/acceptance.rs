//! Acceptance suite: criteria 1 to 10 at full scale, one PASS/FAIL line each.
//!
//! The summary goes straight to stderr, so it is shown by a plain
//! `cargo test` as well.

use std::io::Write;

use germ_core::cli::{write_reports, Format, THREADS_ENV};
use germ_core::stats::GofReport;
use germ_core::verify::{run_all, VerifyConfig};

fn criterion_of(report: &GofReport) -> u64 {
    report.meta["criterion"].as_u64().expect("every report carries its criterion")
}

fn to_json(reports: &[GofReport]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_reports(reports, Format::Json, &mut buf).unwrap();
    buf
}

#[test]
fn acceptance() {
    let config = VerifyConfig::default();

    std::env::set_var(THREADS_ENV, "1");
    let first = run_all(&config).expect("verification run");
    std::env::set_var(THREADS_ENV, "4");
    let second = run_all(&config).expect("repeat run");
    std::env::remove_var(THREADS_ENV);

    // Written to the raw handle so the summary shows even without --nocapture.
    let mut out = std::io::stderr().lock();
    for r in &first {
        writeln!(
            out,
            "  [{}] {:<45} statistic={:.6e} threshold={:.6e} {}",
            criterion_of(r),
            r.test_name,
            r.statistic,
            r.threshold,
            if r.pass { "ok" } else { "FAILED" }
        )
        .unwrap();
    }

    let mut failed = Vec::new();
    for criterion in 1..=10u64 {
        let pass = if criterion == 9 {
            to_json(&first) == to_json(&second)
        } else {
            let checks: Vec<_> = first.iter().filter(|r| criterion_of(r) == criterion).collect();
            assert!(!checks.is_empty(), "criterion {criterion} produced no checks");
            checks.iter().all(|r| r.pass)
        };
        writeln!(out, "criterion {criterion:>2}: {}", if pass { "PASS" } else { "FAIL" }).unwrap();
        if !pass {
            failed.push(criterion);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
