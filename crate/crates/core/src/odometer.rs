//! Supernatural numbers, their factor streams, and the finite cyclic
//! truncations `ℤ/d_M` of the odometer.
//!
//! Orientation: level `i` of the `B_m` tower is `T^{-i} B_m`, so `T` lowers the
//! level index by one (mod `d_m`). In digit terms a point whose first `m`
//! coordinates encode the integer `x` lies on level `(-x) mod d_m`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::OdometerError;
use crate::measure::LevelSet;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// The primes in increasing order.
pub fn primes() -> impl Iterator<Item = u64> {
    (2u64..).filter(|&n| is_prime(n))
}

/// Exponent `k_p` of a prime in a supernatural number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    pub fn is_zero(self) -> bool {
        self == Exponent::Finite(0)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(k) => write!(f, "{k}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" => Ok(Exponent::Infinite),
            other => other
                .parse::<u32>()
                .map(Exponent::Finite)
                .map_err(|_| format!("bad exponent {other:?}")),
        }
    }
}

/// A formal product `∏ p^{k_p}`: explicit exponents for finitely many primes
/// plus a default exponent for every other prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupernaturalNumber {
    explicit: BTreeMap<u64, Exponent>,
    default: Exponent,
}

impl SupernaturalNumber {
    pub fn new(explicit: BTreeMap<u64, Exponent>, default: Exponent) -> Result<Self, OdometerError> {
        if let Some(&p) = explicit.keys().find(|&&p| !is_prime(p)) {
            return Err(OdometerError::NotPrime(p));
        }
        let explicit = explicit.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        Ok(SupernaturalNumber { explicit, default })
    }

    /// Every prime with infinite exponent.
    pub fn universal() -> Self {
        SupernaturalNumber {
            explicit: BTreeMap::new(),
            default: Exponent::Infinite,
        }
    }

    pub fn exponent(&self, p: u64) -> Exponent {
        if !is_prime(p) {
            return Exponent::Finite(0);
        }
        self.explicit.get(&p).copied().unwrap_or(self.default)
    }

    pub fn explicit(&self) -> &BTreeMap<u64, Exponent> {
        &self.explicit
    }

    pub fn default_exponent(&self) -> Exponent {
        self.default
    }

    /// Whether `Σ k_p = ∞`, the hypothesis for odometers with infinitely many
    /// prime factors counted with multiplicity.
    pub fn has_infinitely_many_factors(&self) -> bool {
        !self.default.is_zero() || self.explicit.values().any(|e| *e == Exponent::Infinite)
    }

    pub fn factor_stream(&self, policy: EnumerationPolicy) -> FactorStream {
        FactorStream::new(self.clone(), policy)
    }

    /// Like [`factor_stream`](Self::factor_stream) but refuses numbers with
    /// finitely many factors.
    pub fn factor_stream_checked(&self, policy: EnumerationPolicy) -> Result<FactorStream, OdometerError> {
        if !self.has_infinitely_many_factors() {
            return Err(OdometerError::FinitelyManyFactors(self.to_string()));
        }
        Ok(self.factor_stream(policy))
    }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.explicit.iter().map(|(p, e)| format!("{p}:{e}")).collect();
        if !self.default.is_zero() {
            parts.push(format!("*:{}", self.default));
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for SupernaturalNumber {
    type Err = OdometerError;

    /// Syntax: `"2:inf,3:inf,5:4"`; `"*:k"` sets the exponent of every
    /// unlisted prime; `"1"` is the trivial number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| OdometerError::Parse {
            input: s.to_string(),
            reason,
        };
        let mut explicit = BTreeMap::new();
        let mut default = Exponent::Finite(0);
        if s.trim() == "1" {
            return Ok(SupernaturalNumber { explicit, default });
        }
        for entry in s.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (p, e) = entry
                .split_once(':')
                .ok_or_else(|| err(format!("entry {entry:?} is not prime:exponent")))?;
            let e: Exponent = e.parse().map_err(err)?;
            if p.trim() == "*" {
                default = e;
                continue;
            }
            let p: u64 = p.trim().parse().map_err(|_| err(format!("bad prime {p:?}")))?;
            if explicit.insert(p, e).is_some() {
                return Err(err(format!("prime {p} listed twice")));
            }
        }
        Self::new(explicit, default)
    }
}

impl Serialize for SupernaturalNumber {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SupernaturalNumber {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Order in which a [`FactorStream`] emits the prime-factor multiset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationPolicy {
    /// All explicit finite-exponent factors first (ascending primes), then
    /// rounds over the infinite-exponent primes.
    #[default]
    FiniteFirst,
    /// Rounds over every prime with remaining multiplicity from the start.
    RoundRobin,
}

impl fmt::Display for EnumerationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnumerationPolicy::FiniteFirst => "finite-first",
            EnumerationPolicy::RoundRobin => "round-robin",
        })
    }
}

impl FromStr for EnumerationPolicy {
    type Err = OdometerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "finite-first" => Ok(EnumerationPolicy::FiniteFirst),
            "round-robin" => Ok(EnumerationPolicy::RoundRobin),
            _ => Err(OdometerError::Parse {
                input: s.to_string(),
                reason: "expected finite-first or round-robin".to_string(),
            }),
        }
    }
}

/// Enumeration of the prime factors of a supernatural number, counted with
/// multiplicity, with a record of what has been consumed.
///
/// In round `r` of the open-ended phase every explicit `∞` prime is emitted
/// once; an infinite default contributes the first `r + 1` unlisted primes, a
/// finite default `k` contributes the `r`-th unlisted prime `k` times.
#[derive(Clone, Debug)]
pub struct FactorStream {
    q: SupernaturalNumber,
    policy: EnumerationPolicy,
    remaining: BTreeMap<u64, u32>,
    buffer: VecDeque<u64>,
    round: usize,
    unlisted: Vec<u64>,
    consumed: BTreeMap<u64, u64>,
    started: bool,
}

impl FactorStream {
    pub fn new(q: SupernaturalNumber, policy: EnumerationPolicy) -> Self {
        let remaining = q
            .explicit
            .iter()
            .filter_map(|(&p, &e)| match e {
                Exponent::Finite(k) => Some((p, k)),
                Exponent::Infinite => None,
            })
            .collect();
        FactorStream {
            q,
            policy,
            remaining,
            buffer: VecDeque::new(),
            round: 0,
            unlisted: Vec::new(),
            consumed: BTreeMap::new(),
            started: false,
        }
    }

    pub fn supernatural(&self) -> &SupernaturalNumber {
        &self.q
    }

    pub fn policy(&self) -> EnumerationPolicy {
        self.policy
    }

    /// Multiset of primes handed out so far.
    pub fn consumed(&self) -> &BTreeMap<u64, u64> {
        &self.consumed
    }

    pub fn consumed_count(&self) -> u64 {
        self.consumed.values().sum()
    }

    fn nth_unlisted(&mut self, r: usize) -> u64 {
        while self.unlisted.len() <= r {
            let start = self.unlisted.last().map_or(2, |p| p + 1);
            let next = (start..)
                .find(|&n| is_prime(n) && !self.q.explicit.contains_key(&n))
                .expect("infinitely many primes");
            self.unlisted.push(next);
        }
        self.unlisted[r]
    }

    fn open_ended(&self) -> bool {
        self.q.has_infinitely_many_factors()
    }

    fn refill(&mut self) {
        if !self.started {
            self.started = true;
            if self.policy == EnumerationPolicy::FiniteFirst {
                for (&p, k) in self.remaining.iter_mut() {
                    self.buffer.extend(std::iter::repeat_n(p, *k as usize));
                    *k = 0;
                }
                if !self.buffer.is_empty() {
                    return;
                }
            }
        }
        loop {
            let finite_left = self.remaining.values().any(|&k| k > 0);
            if !finite_left && !self.open_ended() {
                return;
            }
            let r = self.round;
            self.round += 1;
            for (&p, &e) in &self.q.explicit {
                match e {
                    Exponent::Infinite => self.buffer.push_back(p),
                    Exponent::Finite(_) => {
                        let k = self.remaining.get_mut(&p).expect("tracked");
                        if *k > 0 {
                            *k -= 1;
                            self.buffer.push_back(p);
                        }
                    }
                }
            }
            match self.q.default {
                Exponent::Infinite => {
                    for i in 0..=r {
                        let p = self.nth_unlisted(i);
                        self.buffer.push_back(p);
                    }
                }
                Exponent::Finite(k) if k > 0 => {
                    let p = self.nth_unlisted(r);
                    self.buffer.extend(std::iter::repeat_n(p, k as usize));
                }
                Exponent::Finite(_) => {}
            }
            if !self.buffer.is_empty() {
                return;
            }
        }
    }
}

impl Iterator for FactorStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.buffer.is_empty() {
            self.refill();
        }
        let p = self.buffer.pop_front()?;
        *self.consumed.entry(p).or_insert(0) += 1;
        Some(p)
    }
}

/// The moduli `1 = d_0 < d_1 < … < d_M` of a truncated odometer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct OdometerSystem {
    moduli: Vec<u64>,
}

impl TryFrom<Vec<u64>> for OdometerSystem {
    type Error = OdometerError;

    fn try_from(moduli: Vec<u64>) -> Result<Self, Self::Error> {
        Self::new(moduli)
    }
}

impl From<OdometerSystem> for Vec<u64> {
    fn from(s: OdometerSystem) -> Vec<u64> {
        s.moduli
    }
}

impl OdometerSystem {
    /// Checks `d_0 = 1` and that every quotient is an integer greater than 2.
    pub fn new(moduli: Vec<u64>) -> Result<Self, OdometerError> {
        if moduli.first() != Some(&1) {
            return Err(OdometerError::BadModuli { stage: 0 });
        }
        for (n, w) in moduli.windows(2).enumerate() {
            if w[1] % w[0] != 0 || w[1] / w[0] <= 2 {
                return Err(OdometerError::BadModuli { stage: n + 1 });
            }
        }
        Ok(OdometerSystem { moduli })
    }

    /// The trivial system with only `d_0 = 1`.
    pub fn trivial() -> Self {
        OdometerSystem { moduli: vec![1] }
    }

    pub fn push(&mut self, modulus: u64) -> Result<(), OdometerError> {
        let last = *self.moduli.last().expect("d_0 present");
        if !modulus.is_multiple_of(last) || modulus / last <= 2 {
            return Err(OdometerError::BadModuli {
                stage: self.moduli.len(),
            });
        }
        self.moduli.push(modulus);
        Ok(())
    }

    /// Largest depth `M`.
    pub fn depth(&self) -> usize {
        self.moduli.len() - 1
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn modulus(&self, m: usize) -> u64 {
        self.moduli[m]
    }

    /// `q_n = d_n / d_{n-1}` for `n = 1..=M`.
    pub fn quotients(&self) -> Vec<u64> {
        self.moduli.windows(2).map(|w| w[1] / w[0]).collect()
    }

    fn check_depth(&self, m: usize) -> Result<(), OdometerError> {
        if m > self.depth() {
            return Err(OdometerError::DepthOverflow {
                depth: m,
                max: self.depth(),
            });
        }
        Ok(())
    }

    /// The finite factor `ℤ/d_m` on which `T` acts.
    pub fn model(&self, m: usize) -> Result<CyclicModel, OdometerError> {
        self.check_depth(m)?;
        Ok(CyclicModel {
            depth: m,
            modulus: self.moduli[m],
        })
    }

    /// All `d_m` levels of the `B_m` tower; the base `B_m` is level 0.
    pub fn tower_levels(&self, m: usize) -> Result<LevelSet, OdometerError> {
        self.check_depth(m)?;
        Ok(LevelSet::full(m, self.moduli[m]))
    }

    /// Refines `s` to the `B_{m'}` tower.
    pub fn lift(&self, s: &LevelSet, target: usize) -> Result<LevelSet, OdometerError> {
        self.check_depth(target)?;
        self.check_depth(s.depth())?;
        if s.modulus() != self.moduli[s.depth()] {
            return Err(OdometerError::BadModuli { stage: s.depth() });
        }
        Ok(s.lift(target, self.moduli[target])?)
    }

    pub fn apply_t(&self, s: &LevelSet, power: i64) -> LevelSet {
        s.apply_t(power)
    }

    /// Mixed-radix digits of `index` in radices `q_1, …, q_M`, least significant first.
    pub fn digits(&self, index: u64) -> Result<Vec<u64>, OdometerError> {
        let modulus = *self.moduli.last().expect("d_0 present");
        if index >= modulus {
            return Err(OdometerError::IndexOutOfRange { index, modulus });
        }
        let mut rest = index;
        Ok(self
            .quotients()
            .into_iter()
            .map(|q| {
                let d = rest % q;
                rest /= q;
                d
            })
            .collect())
    }

    pub fn from_digits(&self, digits: &[u64]) -> Result<u64, OdometerError> {
        let quotients = self.quotients();
        if digits.len() != quotients.len() || digits.iter().zip(&quotients).any(|(d, q)| d >= q) {
            return Err(OdometerError::BadDigits);
        }
        Ok(digits
            .iter()
            .zip(&quotients)
            .rev()
            .fold(0, |acc, (d, q)| acc * q + d))
    }
}

/// `ℤ/d_M` with `T: i ↦ i − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicModel {
    pub depth: usize,
    pub modulus: u64,
}

impl CyclicModel {
    /// `T^power` applied to a level.
    pub fn shift(&self, level: u64, power: i64) -> u64 {
        (level as i128 - power as i128).rem_euclid(self.modulus as i128) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn take(q: &str, policy: EnumerationPolicy, n: usize) -> Vec<u64> {
        q.parse::<SupernaturalNumber>()
            .unwrap()
            .factor_stream(policy)
            .take(n)
            .collect()
    }

    #[test]
    fn stream_examples() {
        assert_eq!(take("3:inf", EnumerationPolicy::FiniteFirst, 4), vec![3, 3, 3, 3]);
        assert_eq!(take("2:inf,3:inf", EnumerationPolicy::FiniteFirst, 4), vec![2, 3, 2, 3]);
        assert_eq!(take("2:2,3:inf", EnumerationPolicy::FiniteFirst, 5), vec![2, 2, 3, 3, 3]);
        assert_eq!(take("2:2,3:inf", EnumerationPolicy::RoundRobin, 5), vec![2, 3, 2, 3, 3]);
        assert_eq!(take("2:2,3:1,11:inf", EnumerationPolicy::FiniteFirst, 5), vec![2, 2, 3, 11, 11]);
        assert_eq!(take("*:inf", EnumerationPolicy::FiniteFirst, 6), vec![2, 2, 3, 2, 3, 5]);
        assert_eq!(take("2:inf,*:1", EnumerationPolicy::FiniteFirst, 6), vec![2, 3, 2, 5, 2, 7]);
    }

    #[test]
    fn finite_stream_ends() {
        let q: SupernaturalNumber = "2:2,5:1".parse().unwrap();
        assert!(!q.has_infinitely_many_factors());
        assert!(q.factor_stream_checked(EnumerationPolicy::FiniteFirst).is_err());
        let all: Vec<u64> = q.factor_stream(EnumerationPolicy::RoundRobin).collect();
        assert_eq!(all, vec![2, 5, 2]);
    }

    #[test]
    fn parse_and_display() {
        let q: SupernaturalNumber = "5:4, 2:inf,3:inf".parse().unwrap();
        assert_eq!(q.to_string(), "2:inf,3:inf,5:4");
        assert_eq!(q.exponent(5), Exponent::Finite(4));
        assert_eq!(q.exponent(7), Exponent::Finite(0));
        assert_eq!(SupernaturalNumber::universal().to_string(), "*:inf");
        assert!("4:1".parse::<SupernaturalNumber>().is_err());
        assert!("2:x".parse::<SupernaturalNumber>().is_err());
        assert!("2:1,2:3".parse::<SupernaturalNumber>().is_err());
    }

    #[test]
    fn stream_consumption_is_recorded() {
        let q: SupernaturalNumber = "2:2,3:1,11:inf".parse().unwrap();
        let mut s = q.factor_stream(EnumerationPolicy::FiniteFirst);
        s.by_ref().take(6).count();
        let consumed = s.consumed();
        assert_eq!(consumed.get(&2), Some(&2));
        assert_eq!(consumed.get(&3), Some(&1));
        assert_eq!(consumed.get(&11), Some(&3));
    }

    #[test]
    fn moduli_validation() {
        assert!(OdometerSystem::new(vec![1, 12, 132]).is_ok());
        assert!(OdometerSystem::new(vec![1, 2]).is_err());
        assert!(OdometerSystem::new(vec![1, 12, 30]).is_err());
        assert!(OdometerSystem::new(vec![2, 12]).is_err());
    }

    #[test]
    fn tower_levels_and_depth_overflow() {
        let sys = OdometerSystem::new(vec![1, 12, 132]).unwrap();
        assert_eq!(sys.tower_levels(0).unwrap().members(), &[0]);
        assert_eq!(sys.tower_levels(1).unwrap().len(), 12);
        assert!(sys.tower_levels(3).is_err());
    }

    #[test]
    fn digits_examples() {
        let sys = OdometerSystem::new(vec![1, 12, 132]).unwrap();
        assert_eq!(sys.digits(0).unwrap(), vec![0, 0]);
        assert_eq!(sys.digits(131).unwrap(), vec![11, 10]);
        assert_eq!(sys.digits(25).unwrap(), vec![1, 2]);
        assert_eq!(sys.from_digits(&[1, 2]).unwrap(), 25);
        assert!(sys.digits(132).is_err());
        assert!(sys.from_digits(&[12, 0]).is_err());
    }

    #[test]
    fn cyclic_shift() {
        let model = OdometerSystem::new(vec![1, 12]).unwrap().model(1).unwrap();
        assert_eq!(model.shift(5, 1), 4);
        assert_eq!(model.shift(0, 1), 11);
        assert_eq!(model.shift(3, -2), 5);
    }
}
