//! Strict mode grows each d_n until every inequality attached to stage n
//! holds. One stage fits under the default cap; a second one does not.

use std::error::Error;

use shannon_odometer::odometer::{EnumerationPolicy, SupernaturalNumber};
use shannon_odometer::schedule::{build_schedule, stage_checks, Constraints, PrimePolicy, ScheduleMode};

fn main() -> Result<(), Box<dyn Error>> {
    let q = SupernaturalNumber::universal();
    let constraints = Constraints {
        mode: ScheduleMode::Strict,
        ..Constraints::default()
    };

    let mut stream = q.factor_stream(EnumerationPolicy::FiniteFirst);
    let one = build_schedule(&mut stream, &PrimePolicy::Diagonal, 1, &constraints)?;
    let row = &one.rows[0];
    println!("strict stage 1: d_1 = {}, a_1 = {}, w_1 = {}", row.d, row.a, row.w);
    for c in stage_checks(&one.rows, 1, 1.0) {
        println!("  {c}");
    }

    let mut stream = q.factor_stream(EnumerationPolicy::FiniteFirst);
    match build_schedule(&mut stream, &PrimePolicy::Diagonal, 2, &constraints) {
        Ok(s) => println!("two strict stages: d = {:?}", s.rows.iter().map(|r| r.d).collect::<Vec<_>>()),
        Err(e) => println!("two strict stages: {e}"),
    }
    Ok(())
}
