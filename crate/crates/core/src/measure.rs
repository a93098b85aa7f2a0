//! Exact measure arithmetic on odometer tower levels.
//!
//! Every set the construction manipulates is a finite union of levels of some
//! `B_m` tower, so it is stored as a [`LevelSet`]: a sorted list of level indices
//! in `[0, d_m)`. Masses are exact rationals ([`Measure`]); the natural
//! logarithm only enters when a Shannon entropy is evaluated.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::MeasureError;

/// An exact non-negative rational mass, kept in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measure(BigRational);

impl Measure {
    pub fn zero() -> Self {
        Measure(BigRational::zero())
    }

    pub fn one() -> Self {
        Measure(BigRational::one())
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Measure(BigRational::new(numer.into(), denom.into()))
    }

    /// Mass of `count` levels of a tower with `modulus` levels.
    pub fn from_count(count: u64, modulus: u64) -> Self {
        Self::new(count, modulus)
    }

    pub fn from_rational(r: BigRational) -> Self {
        Measure(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    /// Natural log of the mass, computed as `ln p - ln q` so that tiny masses
    /// with large denominators keep full relative precision.
    pub fn ln(&self) -> f64 {
        big_ln(self.0.numer()) - big_ln(self.0.denom())
    }

    /// `-μ ln μ`, zero for a null mass.
    pub fn entropy_term(&self) -> f64 {
        if self.0.is_zero() {
            0.0
        } else {
            -self.to_f64() * self.ln()
        }
    }

    /// `-μ ln(μ / count)`: the entropy of a set of mass `μ` split uniformly into
    /// `count` pieces. This is the largest entropy any partition of that set
    /// into at most `count` cells can have.
    pub fn uniform_split_entropy(&self, count: f64) -> f64 {
        if self.0.is_zero() {
            0.0
        } else {
            self.to_f64() * (count.ln() - self.ln())
        }
    }
}

fn big_ln(x: &BigInt) -> f64 {
    // f64 covers integers up to ~1e308; beyond that shift down first.
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().expect("finite").ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = x >> shift;
        top.to_f64().expect("finite").ln() + (shift as f64) * std::f64::consts::LN_2
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

impl Default for Measure {
    fn default() -> Self {
        Measure::zero()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Measure {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MeasureError::ParseRational(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() || d.is_negative() {
            return Err(bad());
        }
        Ok(Measure(BigRational::new(n, d)))
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Add for Measure {
    type Output = Measure;
    fn add(self, rhs: Measure) -> Measure {
        Measure(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Measure> for &'a Measure {
    type Output = Measure;
    fn add(self, rhs: &Measure) -> Measure {
        Measure(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Measure> for Measure {
    fn add_assign(&mut self, rhs: &Measure) {
        self.0 += &rhs.0;
    }
}

impl Sub for Measure {
    type Output = Measure;
    fn sub(self, rhs: Measure) -> Measure {
        Measure(self.0 - rhs.0)
    }
}

impl<'a> Sub<&'a Measure> for &'a Measure {
    type Output = Measure;
    fn sub(self, rhs: &Measure) -> Measure {
        Measure(&self.0 - &rhs.0)
    }
}

impl Mul for Measure {
    type Output = Measure;
    fn mul(self, rhs: Measure) -> Measure {
        Measure(self.0 * rhs.0)
    }
}

impl std::iter::Sum for Measure {
    fn sum<I: Iterator<Item = Measure>>(iter: I) -> Measure {
        iter.fold(Measure::zero(), |acc, m| acc + m)
    }
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Shannon entropy (nats) of a disjoint collection with the given masses.
pub fn entropy_of_masses<'a>(masses: impl IntoIterator<Item = &'a Measure>) -> f64 {
    masses
        .into_iter()
        .map(Measure::entropy_term)
        .collect::<CompensatedSum>()
        .value()
}

/// A set of levels of the `B_m` tower. Level `k` is `T^{-k} B_m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelSet {
    depth: usize,
    modulus: u64,
    members: Vec<u64>,
}

impl LevelSet {
    /// Builds a level set, rejecting unsorted, duplicated or out-of-range members.
    pub fn new(depth: usize, modulus: u64, members: Vec<u64>) -> Result<Self, MeasureError> {
        let set = LevelSet {
            depth,
            modulus,
            members,
        };
        set.validate()?;
        Ok(set)
    }

    /// Sorts and deduplicates `members` first.
    pub fn from_unsorted(
        depth: usize,
        modulus: u64,
        mut members: Vec<u64>,
    ) -> Result<Self, MeasureError> {
        members.sort_unstable();
        members.dedup();
        Self::new(depth, modulus, members)
    }

    pub fn empty(depth: usize, modulus: u64) -> Self {
        LevelSet {
            depth,
            modulus,
            members: Vec::new(),
        }
    }

    pub fn full(depth: usize, modulus: u64) -> Self {
        LevelSet {
            depth,
            modulus,
            members: (0..modulus).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.modulus == 0 {
            return Err(MeasureError::ZeroModulus);
        }
        for w in self.members.windows(2) {
            if w[0] >= w[1] {
                return Err(MeasureError::UnsortedMembers {
                    depth: self.depth,
                    at: w[1],
                });
            }
        }
        if let Some(&last) = self.members.last() {
            if last >= self.modulus {
                return Err(MeasureError::LevelOutOfRange {
                    level: last,
                    modulus: self.modulus,
                });
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn into_members(self) -> Vec<u64> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, level: u64) -> bool {
        self.members.binary_search(&level).is_ok()
    }

    pub fn measure(&self) -> Measure {
        Measure::from_count(self.members.len() as u64, self.modulus)
    }

    fn check_same_tower(&self, other: &LevelSet) -> Result<(), MeasureError> {
        if self.depth != other.depth || self.modulus != other.modulus {
            return Err(MeasureError::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &LevelSet) -> Result<LevelSet, MeasureError> {
        self.check_same_tower(other)?;
        let (a, b) = (&self.members, &other.members);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(self.with_members(out))
    }

    pub fn intersection(&self, other: &LevelSet) -> Result<LevelSet, MeasureError> {
        self.check_same_tower(other)?;
        let (a, b) = (&self.members, &other.members);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(self.with_members(out))
    }

    pub fn difference(&self, other: &LevelSet) -> Result<LevelSet, MeasureError> {
        self.check_same_tower(other)?;
        let out = self
            .members
            .iter()
            .copied()
            .filter(|x| !other.contains(*x))
            .collect();
        Ok(self.with_members(out))
    }

    pub fn complement(&self) -> LevelSet {
        let out = (0..self.modulus).filter(|x| !self.contains(*x)).collect();
        self.with_members(out)
    }

    pub fn is_subset(&self, other: &LevelSet) -> Result<bool, MeasureError> {
        self.check_same_tower(other)?;
        Ok(self.members.iter().all(|x| other.contains(*x)))
    }

    pub fn is_disjoint(&self, other: &LevelSet) -> Result<bool, MeasureError> {
        Ok(self.intersection(other)?.is_empty())
    }

    /// Refines to a deeper tower with `target_modulus` levels: level `k` becomes
    /// `{k + j·d_m : 0 ≤ j < d_{m'}/d_m}`.
    pub fn lift(&self, target_depth: usize, target_modulus: u64) -> Result<LevelSet, MeasureError> {
        if target_depth < self.depth || !target_modulus.is_multiple_of(self.modulus) {
            return Err(MeasureError::IncompatibleLift {
                from_depth: self.depth,
                from_modulus: self.modulus,
                to_depth: target_depth,
                to_modulus: target_modulus,
            });
        }
        let copies = target_modulus / self.modulus;
        let mut out = Vec::with_capacity(self.members.len() * copies as usize);
        for j in 0..copies {
            let offset = j * self.modulus;
            out.extend(self.members.iter().map(|k| k + offset));
        }
        Ok(LevelSet {
            depth: target_depth,
            modulus: target_modulus,
            members: out,
        })
    }

    /// Image under `T^power`. `T` sends level `i` to level `i - 1 (mod d_m)`.
    pub fn apply_t(&self, power: i64) -> LevelSet {
        let d = self.modulus as i128;
        let k = power as i128;
        let mut out: Vec<u64> = self
            .members
            .iter()
            .map(|&i| (i as i128 - k).rem_euclid(d) as u64)
            .collect();
        out.sort_unstable();
        self.with_members(out)
    }

    fn with_members(&self, members: Vec<u64>) -> LevelSet {
        LevelSet {
            depth: self.depth,
            modulus: self.modulus,
            members,
        }
    }
}

/// A finite disjoint collection of labelled level sets at one depth. The cells
/// need not cover the whole space; null cells are dropped on construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPartition<L> {
    depth: usize,
    modulus: u64,
    cells: Vec<(L, LevelSet)>,
}

impl<L: Clone> LabeledPartition<L> {
    pub fn new(
        depth: usize,
        modulus: u64,
        cells: Vec<(L, LevelSet)>,
    ) -> Result<Self, MeasureError> {
        let mut owner = vec![false; modulus as usize];
        let mut kept = Vec::with_capacity(cells.len());
        for (label, set) in cells {
            if set.depth != depth || set.modulus != modulus {
                return Err(MeasureError::DepthMismatch {
                    left: depth,
                    right: set.depth,
                });
            }
            for &x in &set.members {
                if std::mem::replace(&mut owner[x as usize], true) {
                    return Err(MeasureError::OverlappingCells { level: x });
                }
            }
            if !set.is_empty() {
                kept.push((label, set));
            }
        }
        Ok(LabeledPartition {
            depth,
            modulus,
            cells: kept,
        })
    }

    /// The one-cell partition `{X}`.
    pub fn trivial(depth: usize, modulus: u64, label: L) -> Self {
        LabeledPartition {
            depth,
            modulus,
            cells: vec![(label, LevelSet::full(depth, modulus))],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn cells(&self) -> &[(L, LevelSet)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn support(&self) -> LevelSet {
        let members = self
            .cells
            .iter()
            .flat_map(|(_, s)| s.members.iter().copied())
            .collect();
        LevelSet::from_unsorted(self.depth, self.modulus, members).expect("cells are valid")
    }

    pub fn masses(&self) -> Vec<Measure> {
        self.cells.iter().map(|(_, s)| s.measure()).collect()
    }

    pub fn shannon_entropy(&self) -> f64 {
        entropy_of_masses(&self.masses())
    }

    /// Cells `A ∩ B` over all non-null pairs, labelled `(a, b)`.
    pub fn join<M: Clone>(
        &self,
        other: &LabeledPartition<M>,
    ) -> Result<LabeledPartition<(L, M)>, MeasureError> {
        self.check_same_tower(other.depth, other.modulus)?;
        let owner = other.owner_table();
        let mut cells = Vec::new();
        for (la, a) in &self.cells {
            let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); other.cells.len()];
            for &x in &a.members {
                if let Some(idx) = owner[x as usize] {
                    buckets[idx].push(x);
                }
            }
            for (idx, members) in buckets.into_iter().enumerate() {
                if !members.is_empty() {
                    let label = (la.clone(), other.cells[idx].0.clone());
                    cells.push((label, a.with_members(members)));
                }
            }
        }
        Ok(LabeledPartition {
            depth: self.depth,
            modulus: self.modulus,
            cells,
        })
    }

    /// `H(self | given) = Σ_B Σ_A −μ(A∩B) ln(μ(A∩B)/μ(B))`. The cells of
    /// `given` must cover the support of `self`.
    pub fn conditional_entropy<M: Clone>(
        &self,
        given: &LabeledPartition<M>,
    ) -> Result<f64, MeasureError> {
        self.check_same_tower(given.depth, given.modulus)?;
        let owner = given.owner_table();
        if let Some(x) = self
            .cells
            .iter()
            .flat_map(|(_, s)| s.members.iter())
            .find(|x| owner[**x as usize].is_none())
        {
            return Err(MeasureError::CoverageViolation { level: *x });
        }
        let given_masses = given.masses();
        let mut acc = CompensatedSum::new();
        for (_, a) in &self.cells {
            let mut counts = vec![0u64; given.cells.len()];
            for &x in &a.members {
                counts[owner[x as usize].expect("checked above")] += 1;
            }
            for (idx, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let joint = Measure::from_count(c, self.modulus);
                let ratio = Measure::from_rational(joint.as_rational() / given_masses[idx].as_rational());
                acc.add(-joint.to_f64() * ratio.ln());
            }
        }
        Ok(acc.value())
    }

    /// `(H(P), Σ_i H(P restricted to B_i))` for a cover `{B_i}` of the support.
    pub fn cover_entropy_bound(&self, cover: &[LevelSet]) -> Result<(f64, f64), MeasureError> {
        let mut covered = vec![false; self.modulus as usize];
        for block in cover {
            self.check_same_tower(block.depth, block.modulus)?;
            for &x in &block.members {
                covered[x as usize] = true;
            }
        }
        if let Some(x) = self
            .cells
            .iter()
            .flat_map(|(_, s)| s.members.iter())
            .find(|x| !covered[**x as usize])
        {
            return Err(MeasureError::CoverageViolation { level: *x });
        }
        let whole = self.shannon_entropy();
        let mut pieces = CompensatedSum::new();
        for block in cover {
            let restricted: Vec<Measure> = self
                .cells
                .iter()
                .map(|(_, a)| a.intersection(block).map(|s| s.measure()))
                .collect::<Result<_, _>>()?;
            pieces.add(entropy_of_masses(&restricted));
        }
        Ok((whole, pieces.value()))
    }

    fn check_same_tower(&self, depth: usize, modulus: u64) -> Result<(), MeasureError> {
        if self.depth != depth || self.modulus != modulus {
            return Err(MeasureError::DepthMismatch {
                left: self.depth,
                right: depth,
            });
        }
        Ok(())
    }

    fn owner_table(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.modulus as usize];
        for (idx, (_, s)) in self.cells.iter().enumerate() {
            for &x in &s.members {
                owner[x as usize] = Some(idx);
            }
        }
        owner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(d: u64, members: &[u64]) -> LevelSet {
        LevelSet::from_unsorted(1, d, members.to_vec()).unwrap()
    }

    #[test]
    fn measure_of_full_empty_and_partial_sets() {
        assert_eq!(LevelSet::full(1, 12).measure(), Measure::one());
        assert_eq!(LevelSet::empty(1, 12).measure(), Measure::zero());
        assert_eq!(set(12, &(0..10).collect::<Vec<_>>()).measure(), Measure::new(5, 6));
    }

    #[test]
    fn rational_string_form() {
        let m = Measure::new(10, 12);
        assert_eq!(m.to_string(), "5/6");
        assert_eq!("5/6".parse::<Measure>().unwrap(), m);
        assert_eq!("3".parse::<Measure>().unwrap(), Measure::new(3, 1));
        assert!("1/0".parse::<Measure>().is_err());
        assert!("x/2".parse::<Measure>().is_err());
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "\"5/6\"");
    }

    #[test]
    fn invalid_level_sets_rejected() {
        assert!(LevelSet::new(1, 12, vec![3, 2]).is_err());
        assert!(LevelSet::new(1, 12, vec![2, 2]).is_err());
        assert!(LevelSet::new(1, 12, vec![12]).is_err());
        assert!(LevelSet::new(1, 0, vec![]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let one = LabeledPartition::trivial(1, 12, 0);
        assert_eq!(one.shannon_entropy(), 0.0);

        let quarters = LabeledPartition::new(
            1,
            12,
            (0..4).map(|c| (c, set(12, &[3 * c, 3 * c + 1, 3 * c + 2]))).collect(),
        )
        .unwrap();
        assert!((quarters.shannon_entropy() - 4f64.ln()).abs() < 1e-15);

        let lopsided = LabeledPartition::new(
            1,
            12,
            vec![(0, set(12, &(0..9).collect::<Vec<_>>())), (1, set(12, &[9, 10, 11]))],
        )
        .unwrap();
        let expected = 0.75 * (4.0f64 / 3.0).ln() + 0.25 * 4f64.ln();
        assert!((lopsided.shannon_entropy() - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_cells_dropped() {
        let p = LabeledPartition::new(1, 4, vec![(0, set(4, &[])), (1, set(4, &[0, 1, 2, 3]))])
            .unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn overlapping_cells_rejected() {
        let err = LabeledPartition::new(1, 4, vec![(0, set(4, &[0, 1])), (1, set(4, &[1, 2]))]);
        assert!(matches!(err, Err(MeasureError::OverlappingCells { level: 1 })));
    }

    #[test]
    fn conditional_entropy_examples() {
        let halves = LabeledPartition::new(1, 8, vec![(0, set(8, &[0, 1, 2, 3])), (1, set(8, &[4, 5, 6, 7]))])
            .unwrap();
        assert_eq!(halves.conditional_entropy(&halves).unwrap(), 0.0);

        let whole = LabeledPartition::trivial(1, 8, ());
        let h = halves.conditional_entropy(&whole).unwrap();
        assert!((h - halves.shannon_entropy()).abs() < 1e-15);

        let quarters = LabeledPartition::new(
            1,
            8,
            vec![
                (0, set(8, &[0, 1])),
                (1, set(8, &[2, 3])),
                (2, set(8, &[4, 5])),
                (3, set(8, &[6, 7])),
            ],
        )
        .unwrap();
        let h = quarters.conditional_entropy(&halves).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);

        let partial = LabeledPartition::new(1, 8, vec![(0, set(8, &[0, 1]))]).unwrap();
        assert!(matches!(
            halves.conditional_entropy(&partial),
            Err(MeasureError::CoverageViolation { .. })
        ));
    }

    #[test]
    fn join_with_trivial_partition_is_identity() {
        let p = LabeledPartition::new(1, 6, vec![(0, set(6, &[0, 2])), (1, set(6, &[1, 3, 5]))]).unwrap();
        let j = p.join(&LabeledPartition::trivial(1, 6, ())).unwrap();
        assert_eq!(j.len(), p.len());
        for ((l, a), (lp, ap)) in j.cells().iter().zip(p.cells()) {
            assert_eq!(l.0, *lp);
            assert_eq!(a, ap);
        }
    }

    #[test]
    fn join_of_complementary_pairs() {
        let p = LabeledPartition::new(1, 8, vec![(0, set(8, &[0, 1, 2, 3])), (1, set(8, &[4, 5, 6, 7]))]).unwrap();
        let q = LabeledPartition::new(1, 8, vec![(0, set(8, &[0, 2, 4, 6])), (1, set(8, &[1, 3, 5, 7]))]).unwrap();
        let j = p.join(&q).unwrap();
        assert!(j.len() <= 4);
        let total: Measure = j.masses().into_iter().sum();
        assert_eq!(total, Measure::one());
    }

    #[test]
    fn cover_bound_examples() {
        let p = LabeledPartition::new(
            1,
            12,
            vec![(0, set(12, &[0, 1, 2, 3])), (1, set(12, &[4, 5, 6, 7])), (2, set(12, &[8, 9, 10, 11]))],
        )
        .unwrap();
        let (h, bound) = p.cover_entropy_bound(&[p.support()]).unwrap();
        assert_eq!(h, bound);

        // Each block takes half of every cell.
        let left = set(12, &[0, 1, 4, 5, 8, 9]);
        let right = set(12, &[2, 3, 6, 7, 10, 11]);
        let (h, bound) = p.cover_entropy_bound(&[left, right]).unwrap();
        // Direct evaluation: 3·(1/3)ln 3 versus 6·(1/6)ln 6.
        assert!((h - 3f64.ln()).abs() < 1e-15);
        assert!((bound - 6f64.ln()).abs() < 1e-15);
        assert!(h <= bound);

        assert!(matches!(
            p.cover_entropy_bound(&[set(12, &[0])]),
            Err(MeasureError::CoverageViolation { .. })
        ));
    }

    #[test]
    fn lift_and_shift() {
        let s = set(12, &[0]);
        let lifted = s.lift(2, 132).unwrap();
        assert_eq!(lifted.members(), &(0..11).map(|j| 12 * j).collect::<Vec<_>>()[..]);
        let t = set(12, &[10, 11]);
        assert_eq!(t.measure(), Measure::new(1, 6));
        assert_eq!(t.lift(2, 132).unwrap().measure(), Measure::new(1, 6));
        assert!(s.lift(2, 100).is_err());

        let five = set(12, &[5]);
        assert_eq!(five.apply_t(1).members(), &[4]);
        assert_eq!(five.apply_t(0), five);
        assert_eq!(five.apply_t(12), five);
        assert_eq!(set(12, &[0]).apply_t(1).members(), &[11]);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-15)).abs() < 1e-18);
    }

    #[test]
    fn huge_denominator_log() {
        let tiny = Measure::new(1, BigInt::from(2).pow(2000));
        assert!((tiny.ln() + 2000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
