//! The base-4 odometer seen as a ℤ² action through the digit bijection
//! 2a + b: its cocycle partition has finite entropy (8/3) ln 2 although the
//! two generators' partitions each have entropy 2 ln 2.

use std::error::Error;

use shannon_odometer::remark::{cocycle_identity_holds, entropy_generator_limit, entropy_q_limit, remark_report};

fn main() -> Result<(), Box<dyn Error>> {
    let report = remark_report(20, 4, 0)?;
    println!("first atoms (carry length N, low digit j) -> cocycle value");
    for a in report.atoms.iter().take(9) {
        println!("  N = {}, j = {}: ({:>3}, {:>3})  mass {}", a.carry, a.j, a.m, a.k, a.mass);
    }
    println!(
        "\nH(Q): partial {:.9} + tail {:.2e}, limit {:.9} (closed form {:.9})",
        report.q.partial,
        report.q.tail,
        report.q.limit,
        entropy_q_limit()
    );
    for (name, p) in [("u", &report.u), ("v", &report.v)] {
        println!(
            "H(P_{name}): partial {:.9} + tail {:.2e}, limit {:.9} (closed form {:.9})",
            p.partial,
            p.tail,
            p.limit,
            entropy_generator_limit()
        );
    }
    println!("cocycle identity on cylinders of length 6: {}", cocycle_identity_holds(6));
    Ok(())
}
