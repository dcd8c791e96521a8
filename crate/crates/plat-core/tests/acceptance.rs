use std::process::ExitCode;
use std::time::Instant;

use plat_core::suites::{run_criterion, SuiteConfig, CRITERIA};

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let mut failed = Vec::new();
    for c in CRITERIA.iter() {
        let start = Instant::now();
        let (pass, detail) = match run_criterion(c.id, &cfg) {
            Ok(reps) if reps.is_empty() => (false, "no reports".to_string()),
            Ok(reps) => {
                let bad: Vec<String> = reps
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| format!("{} {:?}", r.claim, r.params))
                    .collect();
                (
                    bad.is_empty(),
                    format!(
                        "{} reports{}",
                        reps.len(),
                        if bad.is_empty() {
                            String::new()
                        } else {
                            format!(", failing: {}", bad.join("; "))
                        }
                    ),
                )
            }
            Err(e) => (false, format!("error: {}", e)),
        };
        println!(
            "criterion {:>2} {}: {} ({}, {:.1}s)",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            detail,
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {:?}", failed);
        ExitCode::FAILURE
    }
}
