//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when all
//! criteria pass. Set `POLARCBO_ACCEPTANCE_ONLY=3,4` to run a subset.

use polarcbo::harness::checks::{run_check, CHECK_IDS};
use std::process::ExitCode;
use std::time::Instant;

fn selected_ids() -> Vec<u8> {
    match std::env::var("POLARCBO_ACCEPTANCE_ONLY") {
        Ok(list) if !list.trim().is_empty() => list
            .split(',')
            .map(|s| s.trim().parse().expect("POLARCBO_ACCEPTANCE_ONLY must be a comma list of ids"))
            .collect(),
        _ => CHECK_IDS.to_vec(),
    }
}

fn main() -> ExitCode {
    let ids = selected_ids();
    println!("running {} acceptance criteria", ids.len());
    let mut failed = Vec::new();
    for id in ids {
        let start = Instant::now();
        let outcome = run_check(id).unwrap_or_else(|| panic!("unknown criterion id {id}"));
        println!("{} ({:.1}s)", outcome.line(), start.elapsed().as_secs_f64());
        if outcome.asserted && !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance result: ok");
        ExitCode::SUCCESS
    } else {
        println!("acceptance result: FAILED criteria {failed:?}");
        ExitCode::FAILURE
    }
}
