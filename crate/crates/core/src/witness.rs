//! Exact window entropies `H(𝒫^{[0,n)})/n` of the first-digit partition of the
//! odometer, and the Bernoulli reference rows they are contrasted with.

use serde::{Deserialize, Serialize};

use crate::error::OdometerError;
use crate::measure::{entropy_of_masses, LabeledPartition, LevelSet, Measure};
use crate::odometer::OdometerSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window: u64,
    pub atoms: usize,
    pub entropy: f64,
    pub rate: f64,
    /// `ln(d_1 n)/n`.
    pub bound: f64,
}

impl WindowRow {
    pub fn within_bound(&self) -> bool {
        self.rate <= self.bound
    }
}

/// `{T^{-c}B_1 : 0 ≤ c < d_1}`, refined to the deepest tower of `system`.
pub fn first_digit_partition(system: &OdometerSystem) -> Result<LabeledPartition<usize>, OdometerError> {
    let depth = system.depth();
    let top = system.modulus(depth);
    let d1 = system.modulus(1);
    let cells = (0..d1)
        .map(|c| {
            let cell = LevelSet::new(1, d1, vec![c]).expect("level below d_1");
            (c as usize, cell.lift(depth, top).expect("d_1 divides d_M"))
        })
        .collect();
    Ok(LabeledPartition::new(depth, top, cells)?)
}

fn relabel<L: Clone>(p: LabeledPartition<L>) -> LabeledPartition<usize> {
    let cells = p.cells().iter().enumerate().map(|(i, (_, s))| (i, s.clone())).collect();
    LabeledPartition::new(p.depth(), p.modulus(), cells).expect("cells stay disjoint")
}

fn translate(p: &LabeledPartition<usize>, power: i64) -> LabeledPartition<usize> {
    let cells = p.cells().iter().map(|(l, s)| (*l, s.apply_t(power))).collect();
    LabeledPartition::new(p.depth(), p.modulus(), cells).expect("T permutes levels")
}

/// Rows for `n = 1..=max_window`, joining one translate `T^{-(n-1)}𝒫` per row.
pub fn window_entropies(system: &OdometerSystem, max_window: u64) -> Result<Vec<WindowRow>, OdometerError> {
    if system.depth() == 0 {
        return Ok(Vec::new());
    }
    let base = first_digit_partition(system)?;
    let d1 = system.modulus(1) as f64;
    let mut join = base.clone();
    let mut rows = Vec::with_capacity(max_window as usize);
    for n in 1..=max_window {
        if n > 1 {
            let shifted = translate(&base, -(n as i64 - 1));
            join = relabel(join.join(&shifted)?);
        }
        let entropy = join.shannon_entropy();
        rows.push(WindowRow {
            window: n,
            atoms: join.len(),
            entropy,
            rate: entropy / n as f64,
            bound: (d1 * n as f64).ln() / n as f64,
        });
    }
    Ok(rows)
}

/// Strictly decreasing rates, each within its bound.
pub fn witnesses_zero_entropy(rows: &[WindowRow]) -> bool {
    rows.iter().all(WindowRow::within_bound) && rows.windows(2).all(|w| w[1].rate < w[0].rate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliRow {
    pub distribution: Vec<Measure>,
    pub window: u32,
    /// `H(𝒫^F)/|F|` from the exact product masses of all words of length `|F|`.
    pub rate: f64,
    pub single: f64,
}

impl BernoulliRow {
    pub fn matches(&self, tolerance: f64) -> bool {
        (self.rate - self.single).abs() <= tolerance
    }
}

pub fn bernoulli_row(distribution: &[Measure], window: u32) -> BernoulliRow {
    let mut words = vec![Measure::one()];
    for _ in 0..window {
        words = words
            .iter()
            .flat_map(|w| distribution.iter().map(move |p| w.clone() * p.clone()))
            .collect();
    }
    BernoulliRow {
        distribution: distribution.to_vec(),
        window,
        rate: entropy_of_masses(&words) / window as f64,
        single: entropy_of_masses(distribution),
    }
}

/// The sanity rows emitted next to the odometer table.
pub fn bernoulli_reference() -> Vec<BernoulliRow> {
    let half = vec![Measure::new(1, 2), Measure::new(1, 2)];
    let skew = vec![Measure::new(1, 2), Measure::new(1, 3), Measure::new(1, 6)];
    [(&half, 4), (&half, 8), (&skew, 4), (&skew, 6)]
        .into_iter()
        .map(|(d, w)| bernoulli_row(d, w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_odometer_window() {
        let system = OdometerSystem::new(vec![1, 12, 132]).unwrap();
        let rows = window_entropies(&system, 64).unwrap();
        assert!(rows.iter().all(|r| r.atoms == 12));
        assert!(witnesses_zero_entropy(&rows));
        assert!(rows[63].rate < 0.15);
        assert!((rows[63].rate - 12f64.ln() / 64.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_is_memoryless() {
        for row in bernoulli_reference() {
            assert!(row.matches(1e-12), "{row:?}");
        }
        assert!((bernoulli_row(&[Measure::new(1, 2), Measure::new(1, 2)], 3).rate - 2f64.ln()).abs() < 1e-15);
    }
}
