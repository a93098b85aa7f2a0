//! Round-trips a run artifact through JSON, re-verifies it, then corrupts one
//! rung index and shows the disjointness failure it causes.

use std::error::Error;

use shannon_odometer::artifact::{construct, verify, RunArtifact, RunConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let config = RunConfig {
        q: "2:2,3:1,11:inf".parse()?,
        ..RunConfig::default()
    };
    let run = construct(&config)?;
    let json = run.to_json()?;
    let stored = RunArtifact::from_json(&json)?;
    assert_eq!(stored.to_json()?, json, "serialization is byte-stable");

    let report = verify(&stored)?;
    println!(
        "fresh artifact: {} checks recomputed, stored verdicts reproduced: {}",
        report.checks.len(),
        report.reproduced()
    );

    // Move rung 2 of stage (1,2) onto level 21, which lies in a rung of (1,1).
    let mut tampered = stored.clone();
    tampered.stages[1].s[2] = 21;
    let report = verify(&tampered)?;
    println!("\ntampered artifact:");
    for c in report.checks.iter().filter(|c| !c.pass) {
        println!("  {c}");
    }
    for m in &report.mismatches {
        println!("  mismatch: {m}");
    }
    Ok(())
}
