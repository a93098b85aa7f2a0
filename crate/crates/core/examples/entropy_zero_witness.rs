//! The odometer has entropy zero: the join of n translates of the first-digit
//! partition never gains atoms, so H/n decays like ln(d_1)/n. A Bernoulli
//! partition, by contrast, keeps H/|F| = H(P) on every window.

use std::error::Error;

use shannon_odometer::odometer::OdometerSystem;
use shannon_odometer::witness::{bernoulli_reference, window_entropies, witnesses_zero_entropy};

fn main() -> Result<(), Box<dyn Error>> {
    let system = OdometerSystem::new(vec![1, 12, 132])?;
    let rows = window_entropies(&system, 64)?;
    println!("window  atoms  H/n        ln(d_1 n)/n");
    for r in rows.iter().filter(|r| r.window.is_power_of_two()) {
        println!("{:>6}  {:>5}  {:.6}  {:.6}", r.window, r.atoms, r.rate, r.bound);
    }
    println!("decreasing and within bound: {}", witnesses_zero_entropy(&rows));

    println!("\nBernoulli rows");
    for b in bernoulli_reference() {
        let dist: Vec<String> = b.distribution.iter().map(ToString::to_string).collect();
        println!("  ({}) |F| = {}: H/|F| = {:.12}, H(P) = {:.12}", dist.join(", "), b.window, b.rate, b.single);
    }
    Ok(())
}
