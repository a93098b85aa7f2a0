//! The double recursion over `(n, m)` that builds the ladders `ℒ_{n,m}`.
//!
//! Stages are built depth by depth: when the modulus `d_m` is appended, the
//! stages `(1,m), …, (m-1,m)` are extensions of earlier ladder families and
//! `(m,m)` opens family `m`. A stage stores the sorted levels `s(n,m,·)` of the
//! `B_m` tower it may use; its rungs are consecutive blocks of `a_n` of those
//! levels and the unused tail is the leftover.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::checks::{stage_label, Check};
use crate::error::LadderError;
use crate::measure::LevelSet;
use crate::odometer::OdometerSystem;
use crate::schedule::derive_a;

/// Which of the three recursion cases produced a stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageCase {
    /// `m = n = 1`: the first `a_1` levels of the `B_1` tower.
    Base,
    /// `m = n > 1`: levels of `C_{n-1,n-1,0} ⊔ C_{n-1,n,0}`.
    Diagonal,
    /// `m > n`: what is left of the family-`(n-1)` bases at depth `m`.
    Extension,
}

impl StageCase {
    pub fn of(n: usize, m: usize) -> Self {
        match (n, m) {
            (1, 1) => StageCase::Base,
            (n, m) if n == m => StageCase::Diagonal,
            _ => StageCase::Extension,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LadderStage {
    pub n: usize,
    pub m: usize,
    /// `a_n`.
    pub rung_count: u64,
    /// `s(n,m,0) < … < s(n,m,r_{n,m})`.
    pub s: Vec<u64>,
    /// `t_{n,m}`: number of sub-ladders; zero marks an empty stage.
    pub t: u64,
}

impl LadderStage {
    pub fn case(&self) -> StageCase {
        StageCase::of(self.n, self.m)
    }

    /// `r_{n,m}`, absent when no level was available.
    pub fn r(&self) -> Option<u64> {
        (self.s.len() as u64).checked_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    fn used(&self) -> usize {
        ((self.rung_count * self.t) as usize).min(self.s.len())
    }

    /// Shape sanity needed before any indexing into `s`.
    pub fn validate_shape(&self) -> Result<(), LadderError> {
        let bad = |reason: &str| LadderError::Malformed {
            n: self.n,
            m: self.m,
            reason: reason.to_string(),
        };
        if self.rung_count < 2 {
            return Err(bad("rung count below 2"));
        }
        if (self.rung_count * self.t) as usize > self.s.len() {
            return Err(bad("a_n·t exceeds the number of levels"));
        }
        Ok(())
    }

    /// Level of rung `i` in sub-ladder `j`.
    pub fn rung_level(&self, j: u64, i: u64) -> u64 {
        self.s[(self.rung_count * j + i) as usize]
    }

    /// Members of `C_{n,m,i}` as raw levels, one per sub-ladder.
    pub fn rung_members(&self, i: u64) -> Vec<u64> {
        (0..self.t).map(|j| self.rung_level(j, i)).collect()
    }

    /// `C_{n,m,i}` at the stage's native depth.
    pub fn rung(&self, i: u64, modulus: u64) -> LevelSet {
        LevelSet::from_unsorted(self.m, modulus, self.rung_members(i))
            .expect("rung levels below modulus")
    }

    /// Every level used by some rung.
    pub fn rung_levels(&self) -> &[u64] {
        &self.s[..self.used()]
    }

    /// Levels of `W_{n,m}` not used by any sub-ladder.
    pub fn leftovers(&self) -> &[u64] {
        &self.s[self.used()..]
    }

    /// Largest gap between consecutive rungs of each sub-ladder.
    pub fn spreads(&self) -> Vec<u64> {
        let a = self.rung_count as usize;
        (0..self.t as usize)
            .map(|j| {
                self.s[a * j..a * (j + 1)]
                    .windows(2)
                    .map(|w| w[1].saturating_sub(w[0]))
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Displacement of `S_{n,m}` on the level at position `idx` of `s`:
    /// `S_{n,m} = T^k` there with `k = s(idx) - s(idx+1)`.
    pub fn displacement(&self, idx: usize) -> Option<i64> {
        let a = self.rung_count as usize;
        (idx < self.used() && idx % a + 1 < a).then(|| self.s[idx] as i64 - self.s[idx + 1] as i64)
    }

    /// The combined ladder `(C_{n,m,0..a_n}, S_{n,m})`.
    pub fn ladder(&self, modulus: u64) -> Ladder {
        let rungs = (0..self.rung_count).map(|i| self.rung(i, modulus)).collect();
        let map = (0..self.used())
            .filter_map(|idx| self.displacement(idx).map(|k| (self.s[idx], k)))
            .collect();
        Ladder { rungs, map }
    }
}

/// Rungs `C_0, …, C_{a-1}` and a partial map sending `C_i` onto `C_{i+1}`,
/// given as level ↦ displacement `k` (the map is `T^k` on that level).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub rungs: Vec<LevelSet>,
    pub map: BTreeMap<u64, i64>,
}

impl Ladder {
    /// Checks disjoint rungs and that the map is a bijection
    /// `C_0 ⊔ … ⊔ C_{a-2} → C_1 ⊔ … ⊔ C_{a-1}` with `S C_i = C_{i+1}`.
    pub fn verify(&self) -> Result<(), String> {
        let mut seen = BTreeMap::new();
        for (i, rung) in self.rungs.iter().enumerate() {
            for &x in rung.members() {
                if let Some(prev) = seen.insert(x, i) {
                    return Err(format!("level {x} in rungs {prev} and {i}"));
                }
            }
        }
        let mut domain = 0;
        for (i, pair) in self.rungs.windows(2).enumerate() {
            let (from, to) = (&pair[0], &pair[1]);
            let mut images = Vec::with_capacity(from.len());
            for &x in from.members() {
                let k = *self
                    .map
                    .get(&x)
                    .ok_or_else(|| format!("rung {i} level {x} not in the map's domain"))?;
                let image = x as i64 - k;
                if image < 0 || image as u64 >= from.modulus() {
                    return Err(format!("level {x} leaves the tower"));
                }
                images.push(image as u64);
            }
            images.sort_unstable();
            if images != to.members() {
                return Err(format!("map does not send rung {i} onto rung {}", i + 1));
            }
            domain += from.len();
        }
        if domain != self.map.len() {
            return Err("map defined outside C_0 ⊔ … ⊔ C_{a-2}".to_string());
        }
        Ok(())
    }
}

/// `(B, h)` with `B, T^{-1}B, …, T^{-(h-1)}B` pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub base: LevelSet,
    pub height: u64,
}

impl Tower {
    pub fn levels(&self) -> Vec<LevelSet> {
        (0..self.height).map(|j| self.base.apply_t(-(j as i64))).collect()
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.base.modulus() as usize];
        self.levels()
            .iter()
            .flat_map(|l| l.members().to_vec())
            .all(|x| !std::mem::replace(&mut seen[x as usize], true))
    }
}

/// Case I: rungs are levels `0..a_1` of the `B_1` tower and `S_{1,1} = T^{-1}`.
pub fn build_case_i(d1: u64, a1: u64) -> Result<LadderStage, LadderError> {
    if a1 < 2 || a1 + 1 > d1 {
        return Err(LadderError::RungCountOutOfRange {
            n: 1,
            a: a1,
            max: d1.saturating_sub(1),
        });
    }
    Ok(LadderStage {
        n: 1,
        m: 1,
        rung_count: a1,
        s: (0..d1).collect(),
        t: 1,
    })
}

/// All ladders built so far, together with the moduli and the per-family
/// primes `p_n` and rung counts `a_n`.
#[derive(Clone, Debug, Default)]
pub struct Construction {
    system: Option<OdometerSystem>,
    primes: Vec<u64>,
    rung_counts: Vec<u64>,
    stages: BTreeMap<(usize, usize), LadderStage>,
    index: HashMap<(usize, usize), HashMap<u64, usize>>,
}

impl Construction {
    pub fn new() -> Self {
        Construction {
            system: Some(OdometerSystem::trivial()),
            ..Default::default()
        }
    }

    /// Reassembles a construction from stored parts without rebuilding it,
    /// so that its invariants can be re-verified.
    pub fn from_parts(
        system: OdometerSystem,
        primes: Vec<u64>,
        rung_counts: Vec<u64>,
        stages: Vec<LadderStage>,
    ) -> Result<Self, LadderError> {
        let depth = system.depth();
        if primes.len() != depth || rung_counts.len() != depth {
            return Err(LadderError::Malformed {
                n: primes.len(),
                m: depth,
                reason: "schedule length differs from depth".to_string(),
            });
        }
        let mut c = Construction {
            system: Some(system),
            primes,
            rung_counts,
            ..Default::default()
        };
        for st in stages {
            if st.n == 0 || st.n > st.m || st.m > depth {
                return Err(LadderError::Malformed {
                    n: st.n,
                    m: st.m,
                    reason: "stage outside the constructed range".to_string(),
                });
            }
            if st.rung_count != c.rung_counts[st.n - 1] {
                return Err(LadderError::Malformed {
                    n: st.n,
                    m: st.m,
                    reason: "rung count differs from a_n".to_string(),
                });
            }
            st.validate_shape()?;
            if st.s.iter().any(|&x| x >= c.d(st.m)) {
                return Err(LadderError::Malformed {
                    n: st.n,
                    m: st.m,
                    reason: "level beyond modulus".to_string(),
                });
            }
            c.insert(st);
        }
        for m in 1..=depth {
            for n in 1..=m {
                if !c.stages.contains_key(&(n, m)) {
                    return Err(LadderError::Malformed {
                        n,
                        m,
                        reason: "stage missing".to_string(),
                    });
                }
            }
        }
        Ok(c)
    }

    pub fn system(&self) -> &OdometerSystem {
        self.system.as_ref().expect("constructed via new or from_parts")
    }

    /// Number of built depths `M` (also the number of ladder families).
    pub fn depth(&self) -> usize {
        self.system().depth()
    }

    pub fn d(&self, m: usize) -> u64 {
        self.system().modulus(m)
    }

    /// `a_n`.
    pub fn a(&self, n: usize) -> u64 {
        self.rung_counts[n - 1]
    }

    /// `p_n`.
    pub fn p(&self, n: usize) -> u64 {
        self.primes[n - 1]
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn rung_counts(&self) -> &[u64] {
        &self.rung_counts
    }

    pub fn stage(&self, n: usize, m: usize) -> Option<&LadderStage> {
        self.stages.get(&(n, m))
    }

    pub fn stages(&self) -> impl Iterator<Item = &LadderStage> {
        self.stages.values()
    }

    /// Mutable access for fault-injection tests; the lookup index is rebuilt.
    pub fn with_stage_mut(&mut self, n: usize, m: usize, f: impl FnOnce(&mut LadderStage)) {
        if let Some(mut st) = self.stages.remove(&(n, m)) {
            f(&mut st);
            self.insert(st);
        }
    }

    fn require(&self, n: usize, m: usize, need_n: usize, need_m: usize) -> Result<&LadderStage, LadderError> {
        self.stage(need_n, need_m).ok_or(LadderError::MissingStage {
            n,
            m,
            need_n,
            need_m,
        })
    }

    fn insert(&mut self, st: LadderStage) {
        let idx = st
            .rung_levels()
            .iter()
            .enumerate()
            .map(|(pos, &lvl)| (lvl, pos))
            .collect();
        self.index.insert((st.n, st.m), idx);
        self.stages.insert((st.n, st.m), st);
    }

    /// `C_{n,l,i}` refined to depth `m`.
    pub fn rung_at(&self, n: usize, l: usize, i: u64, m: usize) -> Result<LevelSet, LadderError> {
        let st = self.require(n, m, n, l)?;
        Ok(st.rung(i, self.d(l)).lift(m, self.d(m))?)
    }

    /// `⊔_{l=lo..=hi} C_{n,l,0}` at depth `m`.
    pub fn bases_at(&self, n: usize, lo: usize, hi: usize, m: usize) -> Result<LevelSet, LadderError> {
        let mut acc = LevelSet::empty(m, self.d(m));
        for l in lo..=hi {
            acc = acc.union(&self.rung_at(n, l, 0, m)?)?;
        }
        Ok(acc)
    }

    /// Every rung of `ℒ_{n,l}` for `l = lo..=hi`, at depth `m`.
    pub fn ladders_at(&self, n: usize, lo: usize, hi: usize, m: usize) -> Result<LevelSet, LadderError> {
        let mut members = Vec::new();
        for l in lo..=hi {
            let st = self.require(n, m, n, l)?;
            let rungs = LevelSet::from_unsorted(l, self.d(l), st.rung_levels().to_vec())?;
            members.extend(rungs.lift(m, self.d(m))?.into_members());
        }
        Ok(LevelSet::from_unsorted(m, self.d(m), members)?)
    }

    /// `W_{n,m}` recomputed from the earlier stages.
    pub fn w_set(&self, n: usize, m: usize) -> Result<LevelSet, LadderError> {
        let dm = self.d(m);
        match StageCase::of(n, m) {
            StageCase::Base => Ok(LevelSet::full(1, dm)),
            StageCase::Diagonal => Ok(self.bases_at(n - 1, n - 1, n, m)?),
            StageCase::Extension if n == 1 => {
                let used = if m > 1 {
                    self.ladders_at(1, 1, m - 1, m)?
                } else {
                    LevelSet::empty(m, dm)
                };
                Ok(used.complement())
            }
            StageCase::Extension => {
                let bases = self.bases_at(n - 1, n - 1, m, m)?;
                let used = self.ladders_at(n, n, m - 1, m)?;
                Ok(bases.difference(&used)?)
            }
        }
    }

    /// Case II at the newest depth `n`: rungs at the first `a_n` levels of
    /// `W_{n,n}`, with `a_n` the largest multiple of `p_n` not above `r_{n,n}`.
    pub fn build_case_ii(&self, n: usize, prime: u64) -> Result<LadderStage, LadderError> {
        self.require(n, n, n - 1, n - 1)?;
        self.require(n, n, n - 1, n)?;
        let w = self.w_set(n, n)?;
        let levels = w.len() as u64;
        let r = levels.saturating_sub(1);
        let a = derive_a(n, r, prime).map_err(|_| LadderError::TooFewLevels {
            n,
            levels,
            needed: prime + 1,
        })?;
        Ok(LadderStage {
            n,
            m: n,
            rung_count: a,
            s: w.into_members(),
            t: 1,
        })
    }

    /// Case III: `t_{n,m}` sub-ladders on consecutive blocks of `a_n` levels of
    /// `W_{n,m}`; `t = 0` when fewer than `a_n + 1` levels are available.
    pub fn build_case_iii(&self, n: usize, m: usize) -> Result<LadderStage, LadderError> {
        if n > 1 {
            self.require(n, m, n - 1, m)?;
        }
        self.require(n, m, n, m - 1)?;
        let a = self.a(n);
        let w = self.w_set(n, m)?;
        let t = match (w.len() as u64).checked_sub(1) {
            Some(r) => r / a,
            None => 0,
        };
        Ok(LadderStage {
            n,
            m,
            rung_count: a,
            s: w.into_members(),
            t,
        })
    }

    /// Appends depth `m = M + 1` with modulus `d_m` and prime `p_m`, building
    /// stages `(1,m), …, (m,m)`.
    pub fn extend(&self, modulus: u64, prime: u64) -> Result<Construction, LadderError> {
        let mut next = self.clone();
        next.system
            .as_mut()
            .expect("constructed via new or from_parts")
            .push(modulus)?;
        let m = next.depth();
        for n in 1..m {
            let st = next.build_case_iii(n, m)?;
            next.insert(st);
        }
        let diagonal = if m == 1 {
            let a = derive_a(1, modulus - 1, prime).map_err(|_| LadderError::TooFewLevels {
                n: 1,
                levels: modulus,
                needed: prime + 1,
            })?;
            build_case_i(modulus, a)?
        } else {
            next.build_case_ii(m, prime)?
        };
        next.primes.push(prime);
        next.rung_counts.push(diagonal.rung_count);
        next.insert(diagonal);
        Ok(next)
    }

    /// One step of `S_p` (restricted to the ladders `ℒ_{p,l}`, `l ≤ m`) on a
    /// level of the `B_m` tower; `None` where undefined.
    pub fn step(&self, p: usize, level: u64, m: usize, forward: bool) -> Option<u64> {
        self.step_within(p, level, m, m, forward)
    }

    /// As [`Construction::step`] on a level of the `B_depth` tower, using only
    /// the ladders `ℒ_{p,l}` with `l ≤ max_l`.
    pub fn step_within(&self, p: usize, level: u64, depth: usize, max_l: usize, forward: bool) -> Option<u64> {
        let dm = self.d(depth) as i64;
        for l in p..=max_l.min(depth) {
            let Some(st) = self.stages.get(&(p, l)) else {
                continue;
            };
            let Some(&idx) = self.index.get(&(p, l)).and_then(|ix| ix.get(&(level % self.d(l)))) else {
                continue;
            };
            let a = st.rung_count as usize;
            let i = idx % a;
            let gap = if forward {
                if i + 1 >= a {
                    return None;
                }
                st.s[idx + 1] as i64 - st.s[idx] as i64
            } else {
                if i == 0 {
                    return None;
                }
                st.s[idx - 1] as i64 - st.s[idx] as i64
            };
            let image = level as i64 + gap;
            return (0..dm).contains(&image).then_some(image as u64);
        }
        None
    }

    /// Position `(l, j, i)` of a depth-`m` level inside family `p`: ladder
    /// `ℒ_{p,l}`, sub-ladder `j`, rung `i`.
    pub fn locate(&self, p: usize, level: u64, m: usize) -> Option<(usize, u64, u64)> {
        (p..=m).find_map(|l| {
            let st = self.stages.get(&(p, l))?;
            let idx = *self.index.get(&(p, l))?.get(&(level % self.d(l)))? as u64;
            Some((l, idx / st.rung_count, idx % st.rung_count))
        })
    }

    /// Re-derives every recursion invariant exactly.
    pub fn verify_recursion_invariants(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let depth = self.depth();
        for st in self.stages.values() {
            self.verify_stage(st, &mut checks);
        }
        for n in 1..=depth {
            checks.push(self.check_family_disjoint(n, depth));
        }
        checks
    }

    fn verify_stage(&self, st: &LadderStage, checks: &mut Vec<Check>) {
        let (n, m) = (st.n, st.m);
        let label = stage_label(n, m);
        let dm = self.d(m);
        let a = st.rung_count;

        let increasing = st.s.windows(2).all(|w| w[0] < w[1]) && st.s.iter().all(|&x| x < dm);
        checks.push(Check::structural("s-increasing", &label, increasing, true, increasing));

        match self.w_set(n, m) {
            Ok(w) => {
                let same = w.members() == st.s.as_slice();
                checks.push(Check::structural("W-consistency", &label, st.s.len(), w.len(), same));
            }
            Err(e) => checks.push(Check::structural("W-consistency", &label, e, "computable", false)),
        }

        let r = st.r();
        let r_str = r.map_or("none".to_string(), |r| r.to_string());
        let eq_holds = r.is_some_and(|r| a * st.t <= r) || st.t == 0;
        let maximal = match r {
            Some(r) => a * (st.t + 1) > r,
            None => true,
        };
        checks.push(Check::structural(
            "E-q",
            &label,
            format!("a*t={}", a * st.t),
            format!("r={r_str}"),
            eq_holds && maximal,
        ));
        let leftover = st.s.len() as u64 - (a * st.t).min(st.s.len() as u64);
        checks.push(Check::structural(
            "leftover",
            &label,
            leftover,
            ">=1",
            leftover >= 1 || st.s.is_empty(),
        ));

        if st.case() != StageCase::Extension {
            let p = self.p(n);
            let ok = st.t == 1
                && r.is_some_and(|r| a <= r && a.is_multiple_of(p) && a == p * (r / p))
                && a >= 2;
            checks.push(Check::structural("rung-count", &label, format!("a={a}"), format!("p={p},r={r_str}"), ok));
        }

        if m > n {
            let spread = st.spreads().into_iter().max().unwrap_or(0);
            let bound = self.d(m - 1);
            checks.push(Check::structural("spread", &label, spread, bound, spread <= bound));
        }

        let ladder_ok = st.ladder(dm).verify();
        checks.push(Check::structural(
            "ladder-map",
            &label,
            ladder_ok.as_ref().err().cloned().unwrap_or_else(|| "bijective".to_string()),
            "bijective",
            ladder_ok.is_ok(),
        ));

        // (i): each rung refined to any deeper B_{m'} tower is a union of whole levels
        // and projects back onto itself.
        let mut levels_ok = true;
        for target in m..=self.depth() {
            for i in 0..a {
                let rung = st.rung(i, dm);
                let Ok(lifted) = rung.lift(target, self.d(target)) else {
                    levels_ok = false;
                    continue;
                };
                let back: Vec<u64> = lifted.members().iter().map(|x| x % dm).collect();
                let back = LevelSet::from_unsorted(m, dm, back).ok();
                levels_ok &= back.as_ref() == Some(&rung)
                    && lifted.len() as u64 == rung.len() as u64 * (self.d(target) / dm);
            }
        }
        checks.push(Check::structural("recursion(i)", &label, levels_ok, true, levels_ok));

        if n > 1 {
            let res = self
                .ladders_at(n, m, m, m)
                .and_then(|rungs| Ok((rungs.clone(), self.bases_at(n - 1, n - 1, m, m)?)));
            let (lhs, ok) = match res {
                Ok((rungs, bases)) => {
                    let outside = rungs.difference(&bases).map(|d| d.len()).unwrap_or(usize::MAX);
                    (format!("{outside} levels outside"), outside == 0)
                }
                Err(e) => (e.to_string(), false),
            };
            checks.push(Check::structural("recursion(ii)", &label, lhs, "0 levels outside", ok));
        }
    }

    fn check_family_disjoint(&self, n: usize, depth: usize) -> Check {
        let dm = self.d(depth);
        let mut owner: Vec<Option<(usize, u64)>> = vec![None; dm as usize];
        let mut clash = None;
        'outer: for m in n..=depth {
            let Some(st) = self.stage(n, m) else { continue };
            let dl = self.d(m);
            for (pos, &x) in st.rung_levels().iter().enumerate() {
                let i = pos as u64 % st.rung_count;
                let mut lvl = x;
                while lvl < dm {
                    match owner[lvl as usize] {
                        Some((m0, i0)) => {
                            clash = Some(format!("({n},{m},{i}) meets ({n},{m0},{i0})"));
                            break 'outer;
                        }
                        None => owner[lvl as usize] = Some((m, i)),
                    }
                    lvl += dl;
                }
            }
        }
        let ok = clash.is_none();
        Check::structural(
            "ladder-disjoint",
            clash.clone().unwrap_or_else(|| format!("n={n}")),
            clash.unwrap_or_else(|| "disjoint".to_string()),
            "disjoint",
            ok,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// d = (12, 132), p = (2, 2).
    fn worked() -> Construction {
        Construction::new().extend(12, 2).unwrap().extend(132, 2).unwrap()
    }

    #[test]
    fn case_i_worked_values() {
        let st = build_case_i(12, 10).unwrap();
        assert_eq!(st.rung_levels(), (0..10).collect::<Vec<_>>().as_slice());
        assert_eq!(st.leftovers(), &[10, 11]);
        let ladder = st.ladder(12);
        assert_eq!(ladder.map.len(), 9);
        assert!(ladder.map.values().all(|&k| k == -1));
        assert!(ladder.rungs.iter().all(|r| r.measure() == crate::measure::Measure::new(1, 12)));
        ladder.verify().unwrap();
    }

    #[test]
    fn case_i_minimal_and_out_of_range() {
        let st = build_case_i(12, 2).unwrap();
        assert_eq!(st.ladder(12).map.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert!(build_case_i(12, 12).is_err());
        assert!(build_case_i(12, 1).is_err());
    }

    #[test]
    fn case_iii_worked_values() {
        let c = worked();
        let st = c.stage(1, 2).unwrap();
        assert_eq!(st.s.len(), 22);
        assert_eq!(st.r(), Some(21));
        assert_eq!(st.t, 2);
        assert_eq!(st.rung_levels()[..10], [10, 11, 22, 23, 34, 35, 46, 47, 58, 59]);
        assert_eq!(st.rung_levels()[10..], [70, 71, 82, 83, 94, 95, 106, 107, 118, 119]);
        assert_eq!(st.leftovers(), &[130, 131]);
        assert_eq!(st.spreads(), vec![11, 11]);
    }

    #[test]
    fn case_ii_worked_values() {
        let c = worked();
        let st = c.stage(2, 2).unwrap();
        assert_eq!(st.s, vec![0, 10, 12, 24, 36, 48, 60, 70, 72, 84, 96, 108, 120]);
        assert_eq!(st.r(), Some(12));
        assert_eq!(st.rung_count, 12);
        assert_eq!(st.leftovers(), &[120]);
        assert_eq!(c.rung_counts(), &[10, 12]);
    }

    #[test]
    fn empty_stage_when_too_few_levels() {
        let c = Construction::new().extend(12, 2).unwrap().extend(72, 2).unwrap();
        assert_eq!(c.stage(1, 2).unwrap().t, 1);
        // 216 - 18·10 - 3·10 = 6 levels are left for (1,3).
        let c3 = c.extend(216, 2).unwrap();
        let st = c3.stage(1, 3).unwrap();
        assert_eq!(st.r(), Some(5));
        assert!(st.is_empty());
        assert!(st.rung_levels().is_empty());
        assert_eq!(st.leftovers().len(), 6);
        assert!(c3.verify_recursion_invariants().iter().all(|c| c.pass));
    }

    #[test]
    fn too_few_levels_for_prime() {
        let err = Construction::new().extend(12, 2).unwrap().extend(36, 7);
        assert!(matches!(err, Err(LadderError::TooFewLevels { n: 2, .. })));
    }

    #[test]
    fn stepping_through_family_one() {
        let c = worked();
        let mut lvl = 10;
        for _ in 0..9 {
            lvl = c.step(1, lvl, 2, true).unwrap();
        }
        assert_eq!(lvl, 59);
        assert_eq!(c.step(1, 59, 2, true), None);
        assert_eq!(c.step(1, 59, 2, false), Some(58));
        let mut lvl = 0;
        for _ in 0..9 {
            lvl = c.step(1, lvl, 2, true).unwrap();
        }
        assert_eq!(lvl, 9);
        assert_eq!(c.locate(1, 58, 2), Some((2, 0, 8)));
    }

    #[test]
    fn invariants_hold_on_worked_run() {
        let c = worked();
        let checks = c.verify_recursion_invariants();
        for ch in &checks {
            assert!(ch.pass, "{ch}");
        }
        assert!(checks.iter().any(|c| c.name == "recursion(ii)"));
    }

    #[test]
    fn single_stage_has_no_ii_check() {
        let c = Construction::new().extend(12, 2).unwrap();
        let checks = c.verify_recursion_invariants();
        assert!(checks.iter().all(|c| c.pass));
        assert!(!checks.iter().any(|c| c.name == "recursion(ii)"));
    }

    #[test]
    fn mutated_rung_is_caught() {
        let mut c = worked();
        c.with_stage_mut(1, 2, |st| st.s[1] = 10);
        let checks = c.verify_recursion_invariants();
        let bad = checks
            .iter()
            .find(|c| c.name == "ladder-disjoint" && !c.pass)
            .expect("disjointness failure");
        assert!(bad.stage.contains("(1,2,1)"), "{}", bad.stage);
    }

    #[test]
    fn towers() {
        let base = LevelSet::new(1, 12, vec![0]).unwrap();
        assert!(Tower { base: base.clone(), height: 12 }.is_valid());
        let wide = LevelSet::new(1, 12, vec![0, 3]).unwrap();
        assert!(Tower { base: wide.clone(), height: 3 }.is_valid());
        assert!(!Tower { base: wide, height: 4 }.is_valid());
    }
}
