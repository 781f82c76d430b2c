//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use fsi_core::harness::suite::{run_suite, SuiteOptions};

fn main() {
    let only: Vec<usize> = std::env::var("FSI_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let options = SuiteOptions { seed: 0, only, scratch: None };
    let results = run_suite(&options, |r| println!("{r}"));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
