//! Compact formulation against full-profile enumeration on random instances.

use symic::verify::{run_verification, VerifyOptions};

fn main() -> symic::Result<()> {
    let report = run_verification(VerifyOptions {
        seed: 7,
        instances: 20,
        ..Default::default()
    })?;
    for c in &report.checks {
        println!(
            "{:<5} {:<45} {:>5} cases, worst {:.2e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.cases,
            c.worst
        );
    }
    std::process::exit(if report.passed() { 0 } else { 1 })
}
