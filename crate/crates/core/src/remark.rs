//! An explicit Shannon orbit equivalence between the base-4 odometer
//! `ℤ`-action on `{0,1,2,3}^ℕ` and the `ℤ²`-action by two independent base-2
//! odometers, through the digitwise bijection `σ(a, b) = 2a + b`.
//!
//! Cylinders are finite digit vectors, least significant digit first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::Measure;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RemarkError {
    #[error("cocycle is not constant on atom {atom}: {first:?} vs {second:?}")]
    NotConstant {
        atom: String,
        first: (i64, i64),
        second: (i64, i64),
    },
    #[error("symbol {0} outside the alphabet")]
    BadSymbol(u8),
}

/// `σ(a, b) = 2a + b`.
pub fn sigma(a: u8, b: u8) -> Result<u8, RemarkError> {
    if a > 1 {
        return Err(RemarkError::BadSymbol(a));
    }
    if b > 1 {
        return Err(RemarkError::BadSymbol(b));
    }
    Ok(2 * a + b)
}

pub fn sigma_inv(x: u8) -> Result<(u8, u8), RemarkError> {
    if x > 3 {
        return Err(RemarkError::BadSymbol(x));
    }
    Ok((x >> 1, x & 1))
}

/// `Φ`, digitwise.
pub fn phi(a: &[u8], b: &[u8]) -> Result<Vec<u8>, RemarkError> {
    a.iter().zip(b).map(|(&x, &y)| sigma(x, y)).collect()
}

pub fn phi_inv(x: &[u8]) -> Result<(Vec<u8>, Vec<u8>), RemarkError> {
    let pairs = x.iter().map(|&d| sigma_inv(d)).collect::<Result<Vec<_>, _>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Adds one with carry to the right; `None` when the carry leaves the window.
pub fn odometer_step(digits: &[u8], base: u8) -> Option<Vec<u8>> {
    let mut out = digits.to_vec();
    for d in out.iter_mut() {
        if *d + 1 < base {
            *d += 1;
            return Some(out);
        }
        *d = 0;
    }
    None
}

fn value(digits: &[u8], base: i64) -> i64 {
    digits.iter().rev().fold(0, |acc, &d| acc * base + d as i64)
}

/// `(m, k)` with `(T₂^m × T₂^k)(Φ⁻¹x) = Φ⁻¹(T₄x)`, read off a window in
/// which the carry of `T₄` stays.
pub fn z_cocycle_at(x: &[u8]) -> Option<(i64, i64)> {
    let next = odometer_step(x, 4)?;
    let (a, b) = phi_inv(x).ok()?;
    let (a2, b2) = phi_inv(&next).ok()?;
    Some((value(&a2, 2) - value(&a, 2), value(&b2, 2) - value(&b, 2)))
}

/// The `ℤ`-displacement `k` with `Φ(g(a, b)) = T₄^k Φ(a, b)` for a `ℤ²`
/// generator `g` acting on one coordinate.
fn z2_generator_at(a: &[u8], b: &[u8], on_a: bool) -> Option<i64> {
    let (a2, b2) = if on_a {
        (odometer_step(a, 2)?, b.to_vec())
    } else {
        (a.to_vec(), odometer_step(b, 2)?)
    };
    let before = phi(a, b).ok()?;
    let after = phi(&a2, &b2).ok()?;
    Some(value(&after, 4) - value(&before, 4))
}

/// Above this many cylinders an atom is checked on a seeded sample.
const EXHAUSTIVE_LIMIT: u64 = 1 << 12;
const SAMPLES: usize = 1024;

/// Atom `(N, j)` of `𝒬`: `N` leading 3s, then `j ∈ {0,1,2}`. The cocycle is
/// evaluated on every cylinder of the atom with `extra` further free digits.
pub fn cocycle_z_generator(carry: usize, j: u8, extra: usize) -> Result<(i64, i64), RemarkError> {
    if j > 2 {
        return Err(RemarkError::BadSymbol(j));
    }
    let len = carry + 1 + extra;
    let mut value_seen = None;
    for tail in 0..4u64.pow(extra as u32) {
        let mut x = vec![3u8; carry];
        x.push(j);
        let mut t = tail;
        for _ in 0..extra {
            x.push((t % 4) as u8);
            t /= 4;
        }
        debug_assert_eq!(x.len(), len);
        let v = z_cocycle_at(&x).expect("carry stops at digit N");
        match value_seen {
            None => value_seen = Some(v),
            Some(first) if first != v => {
                return Err(RemarkError::NotConstant {
                    atom: format!("(N={carry}, j={j})"),
                    first,
                    second: v,
                })
            }
            _ => {}
        }
    }
    Ok(value_seen.expect("at least one cylinder"))
}

/// Atom of carry length `N` for the generator acting on one coordinate: that
/// coordinate starts with `N` ones and then a zero, the other is free.
pub fn cocycle_z2_generator(carry: usize, on_a: bool, extra: usize, seed: u64) -> Result<i64, RemarkError> {
    let len = carry + 1 + extra;
    let free_bits = (len + extra) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ carry as u64);
    let samples: Box<dyn Iterator<Item = u64>> = if 1u64.checked_shl(free_bits).is_some_and(|c| c <= EXHAUSTIVE_LIMIT) {
        Box::new(0..1u64 << free_bits)
    } else {
        Box::new((0..SAMPLES).map(move |_| rng.gen::<u64>()))
    };
    let mut value_seen = None;
    for bits in samples {
        let mut moving = vec![1u8; carry];
        moving.push(0);
        let mut t = bits;
        for _ in 0..extra {
            moving.push((t & 1) as u8);
            t >>= 1;
        }
        let other: Vec<u8> = (0..len).map(|i| ((t >> i) & 1) as u8).collect();
        let (a, b) = if on_a { (moving, other) } else { (other, moving) };
        let v = z2_generator_at(&a, &b, on_a).expect("carry stops at digit N");
        match value_seen {
            None => value_seen = Some(v),
            Some(first) if first != v => {
                return Err(RemarkError::NotConstant {
                    atom: format!("(N={carry}, {})", if on_a { "u" } else { "v" }),
                    first: (first, 0),
                    second: (v, 0),
                })
            }
            _ => {}
        }
    }
    Ok(value_seen.expect("at least one cylinder"))
}

/// `Σ_{n>N} n xⁿ = x^{N+1}((N+1) - N x) / (1-x)²` for `0 ≤ x < 1`.
pub fn series_tail(x: f64, terms: usize) -> f64 {
    let n = terms as f64;
    x.powf(n + 1.0) * ((n + 1.0) - n * x) / (1.0 - x).powi(2)
}

/// `H(𝒬) = Σ_{n≥1} 3 n 4^{-n} ln 4 = (8/3) ln 2`.
pub fn entropy_q_limit() -> f64 {
    3.0 * 4f64.ln() * series_tail(0.25, 0)
}

/// `Σ_{n≥1} n 2^{-n} ln 2 = 2 ln 2`, the entropy of either generator's partition.
pub fn entropy_generator_limit() -> f64 {
    2f64.ln() * series_tail(0.5, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub carry: usize,
    pub j: u8,
    pub m: i64,
    pub k: i64,
    pub mass: Measure,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRow {
    pub generator: String,
    pub carry: usize,
    pub k: i64,
    pub mass: Measure,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialEntropy {
    pub partial: f64,
    /// Exact tail of the series beyond the computed atoms.
    pub tail: f64,
    pub limit: f64,
    /// Mass of the atoms not yet enumerated.
    pub unresolved: Measure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemarkReport {
    pub depth: usize,
    pub atoms: Vec<AtomRow>,
    pub q: PartialEntropy,
    /// `H(𝒫)`, the coarsening of `𝒬` by equal cocycle values.
    pub p_partial: f64,
    pub generators: Vec<GeneratorRow>,
    pub u: PartialEntropy,
    pub v: PartialEntropy,
}

/// Atoms with carry length `N < depth`, i.e. `n = N + 1 ≤ depth` in the series.
pub fn remark_report(depth: usize, extra: usize, seed: u64) -> Result<RemarkReport, RemarkError> {
    let mut atoms = Vec::new();
    for carry in 0..depth {
        let mass = Measure::new(1, num_bigint::BigInt::from(4u8).pow(carry as u32 + 1));
        for j in 0..3 {
            let (m, k) = cocycle_z_generator(carry, j, extra)?;
            atoms.push(AtomRow {
                carry,
                j,
                m,
                k,
                entropy: mass.entropy_term(),
                mass: mass.clone(),
            });
        }
    }
    let partial: f64 = atoms.iter().map(|a| a.entropy).collect::<crate::measure::CompensatedSum>().value();
    let unresolved = Measure::new(1, num_bigint::BigInt::from(4u8).pow(depth as u32));
    let q = PartialEntropy {
        partial,
        tail: 3.0 * 4f64.ln() * series_tail(0.25, depth),
        limit: entropy_q_limit(),
        unresolved,
    };

    let mut merged: std::collections::BTreeMap<(i64, i64), Measure> = std::collections::BTreeMap::new();
    for a in &atoms {
        *merged.entry((a.m, a.k)).or_default() += &a.mass;
    }
    let p_partial = crate::measure::entropy_of_masses(merged.values());

    let mut generators = Vec::new();
    let mut sums = [0.0f64; 2];
    for (slot, name, on_a) in [(0, "u", true), (1, "v", false)] {
        for carry in 0..depth {
            let k = cocycle_z2_generator(carry, on_a, extra, seed)?;
            let mass = Measure::new(1, num_bigint::BigInt::from(2u8).pow(carry as u32 + 1));
            let entropy = mass.entropy_term();
            sums[slot] += entropy;
            generators.push(GeneratorRow {
                generator: name.to_string(),
                carry,
                k,
                mass,
                entropy,
            });
        }
    }
    let generator_entropy = |partial: f64| PartialEntropy {
        partial,
        tail: 2f64.ln() * series_tail(0.5, depth),
        limit: entropy_generator_limit(),
        unresolved: Measure::new(1, num_bigint::BigInt::from(2u8).pow(depth as u32)),
    };
    Ok(RemarkReport {
        depth,
        atoms,
        q,
        p_partial,
        generators,
        u: generator_entropy(sums[0]),
        v: generator_entropy(sums[1]),
    })
}

/// `κ(T₄², x) = κ(T₄, T₄x) + κ(T₄, x)` on every cylinder of length `len`
/// whose carries stay in the window.
pub fn cocycle_identity_holds(len: usize) -> bool {
    (0..4u64.pow(len as u32)).all(|code| {
        let x: Vec<u8> = (0..len).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
        let Some(y) = odometer_step(&x, 4) else { return true };
        let Some(z) = odometer_step(&y, 4) else { return true };
        let (Some(first), Some(second)) = (z_cocycle_at(&x), z_cocycle_at(&y)) else {
            return true;
        };
        let (a, b) = phi_inv(&x).expect("valid");
        let (a2, b2) = phi_inv(&z).expect("valid");
        let direct = (value(&a2, 2) - value(&a, 2), value(&b2, 2) - value(&b, 2));
        direct == (first.0 + second.0, first.1 + second.1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0, 0).unwrap(), 0);
        assert_eq!(sigma(0, 1).unwrap(), 1);
        assert_eq!(sigma(1, 0).unwrap(), 2);
        assert_eq!(sigma(1, 1).unwrap(), 3);
        assert!(sigma(2, 0).is_err());
        for x in 0..4 {
            let (a, b) = sigma_inv(x).unwrap();
            assert_eq!(sigma(a, b).unwrap(), x);
        }
    }

    #[test]
    fn phi_round_trip_depth_8() {
        for code in 0..4u32.pow(8) {
            let x: Vec<u8> = (0..8).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
            let (a, b) = phi_inv(&x).unwrap();
            assert_eq!(phi(&a, &b).unwrap(), x);
        }
    }

    #[test]
    fn atom_cocycles() {
        assert_eq!(cocycle_z_generator(0, 0, 4).unwrap(), (0, 1));
        assert_eq!(cocycle_z_generator(0, 1, 4).unwrap(), (1, -1));
        assert_eq!(cocycle_z_generator(0, 2, 4).unwrap(), (0, 1));
        assert_eq!(cocycle_z_generator(1, 0, 4).unwrap(), (-1, 1));
    }

    #[test]
    fn generator_cocycles() {
        for n in 0..6 {
            let four = 4i64.pow(n as u32);
            assert_eq!(cocycle_z2_generator(n, true, 4, 7).unwrap(), 2 * four - 2 * (four - 1) / 3);
            assert_eq!(cocycle_z2_generator(n, false, 4, 7).unwrap(), four - (four - 1) / 3);
        }
    }

    #[test]
    fn limits() {
        assert!((entropy_q_limit() - 8.0 / 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((entropy_generator_limit() - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn identity_on_short_cylinders() {
        for len in 1..=6 {
            assert!(cocycle_identity_holds(len));
        }
    }
}
