//! Runs every verification suite with one seed and prints a summary line
//! per report: the rearrangement comparison, the weighted upper bound, the
//! leafwise domination, the weighted moment chain, the profile limit, and
//! the Doob-type chain.
//!
//! Run with: `cargo run --example verify_all [seed]`

use bellmax::verify::{fmt_sig, run_suite, Suite, SuiteConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = SuiteConfig::default();
    let reports = match run_suite(Suite::All, &cfg, seed) {
        Ok(reports) => reports,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    println!("seed {seed}:");
    let mut all_pass = true;
    for r in &reports {
        all_pass &= r.pass;
        println!(
            "  {:<22} {:>5} trials ({} skipped)  worst margin {:>24}  {}",
            r.name,
            r.trials,
            r.skipped,
            fmt_sig(r.margin),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    if !all_pass {
        for r in reports.iter().filter(|r| !r.pass) {
            eprintln!("violation in {}: worst instance {}", r.name, r.worst_instance);
        }
        std::process::exit(1);
    }
}
