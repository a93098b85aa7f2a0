//! The two-stage reference run: q = 2²·3·11^∞, relaxed schedule, d_1 ≥ 12.
//!
//! Prints the moduli, every ladder stage with its rungs and leftovers, the
//! exact piece masses and the region ledger.

use std::error::Error;

use shannon_odometer::artifact::{construct, RunConfig};
use shannon_odometer::checks::CheckKind;

fn main() -> Result<(), Box<dyn Error>> {
    let config = RunConfig {
        q: "2:2,3:1,11:inf".parse()?,
        stages: 2,
        ..RunConfig::default()
    };
    let run = construct(&config)?;

    println!("moduli  {:?}", run.moduli);
    println!("consumed primes {:?}", run.consumed);
    for row in &run.schedule {
        println!(
            "stage {}: p = {}, d = {}, a = {}, w = {}, v = {}, beta = {}",
            row.n, row.p, row.d, row.a, row.w, row.v, row.beta
        );
    }

    println!("\nladder stages");
    for st in &run.stages {
        let used = (st.t as usize) * run.schedule[st.n - 1].a as usize;
        println!(
            "  ({},{}) r = {:?}, t = {}, spreads {:?}",
            st.n, st.m, st.r, st.t, st.spreads
        );
        println!("        rungs {:?}", &st.s[..used.min(st.s.len())]);
        println!("        leftovers {:?}", &st.s[used.min(st.s.len())..]);
    }

    println!("\nexact masses");
    for m in &run.masses {
        println!("  {:<6} {:<6} {}", m.name, m.stage, m.mass);
    }

    let structural = run.checks.iter().filter(|c| c.kind == CheckKind::Structural);
    let (total, failed) = structural.fold((0, 0), |(t, f), c| (t + 1, f + usize::from(!c.pass)));
    println!("\n{total} structural checks, {failed} failing");
    Ok(())
}
