//! Runs the full claim suite on a smaller system and prints the table plus
//! the witness of every failing claim.

use pushoutforge::verify::{run_claim_suite, summary, ClaimClass, SuiteConfig, Verdict};

fn main() -> pushoutforge::error::Result<()> {
    let cfg = SuiteConfig { ground_size: 2, samples: 10, ..Default::default() };
    cfg.validate()?;
    let reports = run_claim_suite(&cfg)?;
    print!("{}", summary(&reports));
    for r in reports.iter().filter(|r| r.verdict == Verdict::Fail) {
        let tag = if r.class == ClaimClass::Assert { "assert" } else { "report" };
        println!("\n{} ({tag}, {})", r.claim_id, r.anchor);
        println!("{}", serde_json::to_string(&r.witness)?);
    }
    Ok(())
}
