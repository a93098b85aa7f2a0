//! Both cocycle entropy ledgers of the reference run, block by block against
//! their uniform-split majorants, and the rate table for powers of `T`.

use std::error::Error;

use shannon_odometer::checks::fmt_f64;
use shannon_odometer::ladder::Construction;
use shannon_odometer::orbit::{analyze, cocycle_entropy_rate, EntropyLedger};

fn print_ledger(name: &str, ledger: &EntropyLedger) {
    println!("{name}");
    for b in &ledger.blocks {
        println!(
            "  {:<6} mass {:<8} values {:>3} <= {:<5} H = {} <= {}",
            b.block,
            b.mass.to_string(),
            b.distinct,
            b.count_bound,
            fmt_f64(b.entropy),
            fmt_f64(b.majorant)
        );
    }
    let d = &ledger.distribution;
    println!(
        "  total H = {} (block sum {}), resolved {}, defect {}",
        fmt_f64(ledger.entropy),
        fmt_f64(ledger.block_sum),
        d.resolved(),
        d.defect
    );
    println!(
        "  majorant sum {} vs closing bound {}",
        fmt_f64(ledger.majorant_sum),
        fmt_f64(ledger.closing_bound)
    );
}

fn main() -> Result<(), Box<dyn Error>> {
    let c = Construction::new().extend(12, 2)?.extend(132, 2)?;
    let analysis = analyze(&c)?;
    print_ledger("P_{S,T}: S x = T^k x", &analysis.s_over_t);
    print_ledger("P_{T,S}: T x = S^k x", &analysis.t_over_s.ledger);

    println!("\ndisplacement distribution of P_{{T,S}}");
    for (k, mass) in &analysis.t_over_s.ledger.distribution.masses {
        println!("  k = {k:>4}: {mass}");
    }

    let rates = cocycle_entropy_rate(&analysis.t_over_s.displacement, 8, 0.5);
    println!("\n(1/n) H(Q_{{T^n}})");
    for r in &rates.rows {
        println!("  n = {}: {} on mass {}", r.n, fmt_f64(r.rate), r.resolved);
    }
    let holding = rates.pairs.iter().filter(|p| p.rate_holds() && p.chain_holds()).count();
    println!("{holding} of {} refinement pairs hold", rates.pairs.len());
    Ok(())
}
