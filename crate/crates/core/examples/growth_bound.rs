//! Counts products b_1⋯b_n with some factors fixed and the others ranging over
//! a word-metric ball, against the bound e^{c₁|Ω₀|} c₂ (rn)^k.

use std::error::Error;

use shannon_odometer::growth::{check_bound, exhaustive_sweep, random_sweep, GrowthGroup, GrowthInstance};

fn main() -> Result<(), Box<dyn Error>> {
    let z: GrowthGroup = "z".parse()?;
    let fixed = GrowthInstance::parse_fixed(&z, "2=5")?;
    let one = check_bound(&z, &GrowthInstance::new(3, 2, fixed)?)?;
    println!(
        "Z, n = 3, r = 2, b_2 = 5: {} products, bound {:.1}",
        one.count, one.lemma_bound
    );

    for group in ["z", "z^2"] {
        let g: GrowthGroup = group.parse()?;
        let rows = exhaustive_sweep(&g, 6, 2, 0)?;
        let worst = rows
            .iter()
            .filter(|r| r.r > 0)
            .map(|r| r.count as f64 / r.lemma_bound)
            .fold(0.0, f64::max);
        println!(
            "{group}: {} instances, all within bound: {}, largest count/bound {worst:.4}",
            rows.len(),
            rows.iter().all(|r| r.pass)
        );
    }

    let dihedral = GrowthGroup::InfiniteDihedral;
    let c = dihedral.constants();
    println!(
        "\nD_inf: C = {}, k = {}, |E| = {}, K in B({}), c1 = {:.4}, c2 = {}",
        c.growth_c, c.order, c.conjugators, c.k_radius, c.c1, c.c2
    );
    let rows = random_sweep(&dihedral, 8, 2, 0..200)?;
    println!("200 random instances, all within bound: {}", rows.iter().all(|r| r.pass));
    Ok(())
}
