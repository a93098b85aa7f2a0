//! How the supernatural number and the enumeration policy determine the
//! moduli d_1 < d_2 < ⋯ of the relaxed schedule.

use std::error::Error;

use shannon_odometer::odometer::{EnumerationPolicy, SupernaturalNumber};
use shannon_odometer::schedule::{build_schedule, Constraints, PrimePolicy};

fn main() -> Result<(), Box<dyn Error>> {
    let cases = [
        "2:2,3:1,11:inf",
        "2:inf,3:inf,5:inf,7:inf,11:inf",
        "2:inf,3:inf",
        "*:inf",
        "3:inf",
    ];
    for text in cases {
        let q: SupernaturalNumber = text.parse()?;
        for policy in [EnumerationPolicy::FiniteFirst, EnumerationPolicy::RoundRobin] {
            let first: Vec<u64> = q.factor_stream(policy).take(10).collect();
            let mut stream = q.factor_stream(policy);
            let outcome = match build_schedule(&mut stream, &PrimePolicy::Diagonal, 3, &Constraints::default()) {
                Ok(s) => format!("d = {:?}", s.rows.iter().map(|r| r.d).collect::<Vec<_>>()),
                Err(e) => e.to_string(),
            };
            println!("{text:<32} {policy:<12} factors {first:?}");
            println!("{:<45} {outcome}", "");
        }
    }
    let finite: SupernaturalNumber = "2:3,5:1".parse()?;
    if let Err(e) = finite.factor_stream_checked(EnumerationPolicy::FiniteFirst) {
        println!("{finite}: {e}");
    }
    Ok(())
}
