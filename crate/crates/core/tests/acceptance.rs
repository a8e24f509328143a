//! One line per acceptance criterion; exits non-zero if any fails.
//! `SQE_CRITERIA=1,3` restricts the run.

use sqe_core::acceptance::{evaluate, AcceptanceOptions, CRITERIA};

fn main() {
    let only: Option<Vec<u8>> = std::env::var("SQE_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let opts = AcceptanceOptions::default();
    let mut failed = 0;
    for (id, _) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let outcome = evaluate(id, &opts);
        println!("{}", outcome.line());
        failed += !outcome.passed as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
