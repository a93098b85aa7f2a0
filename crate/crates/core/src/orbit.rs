//! The transformation `S` assembled from the ladders, the sets `D_{n,m}`,
//! `E_{n,m}`, `K_n`, and the two cocycle partitions `𝒫_{S,T}` and `𝒫_{T,S}`.
//!
//! Everything lives on the levels of the `B_M` tower. A displacement `k` at a
//! level means `S = T^k` there, so the image of level `i` is level `i - k`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::checks::{fmt_f64, stage_label, Check};
use crate::error::OrbitError;
use crate::ladder::Construction;
use crate::measure::{entropy_of_masses, LevelSet, Measure};
use crate::schedule::{self, ScheduleRow};

/// Absolute tolerance on entropy comparisons; masses are compared exactly.
pub const ENTROPY_TOLERANCE: f64 = 1e-9;

/// `S` on the `B_M` tower as a table of displacements, with the piece
/// `D_{n,m}` owning each level and the inverse map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseShift {
    depth: usize,
    modulus: u64,
    displacement: Vec<Option<i64>>,
    owner: Vec<Option<(usize, usize)>>,
    preimage: Vec<Option<u64>>,
}

/// A maximal run of consecutive levels with one displacement and one owner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftRun {
    pub start: u64,
    pub len: u64,
    pub k: i64,
    pub n: usize,
    pub m: usize,
}

impl PiecewiseShift {
    pub fn empty(depth: usize, modulus: u64) -> Self {
        let size = modulus as usize;
        PiecewiseShift {
            depth,
            modulus,
            displacement: vec![None; size],
            owner: vec![None; size],
            preimage: vec![None; size],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn insert(&mut self, level: u64, k: i64, piece: (usize, usize)) -> Result<(), OrbitError> {
        let image = level as i64 - k;
        if image < 0 || image as u64 >= self.modulus {
            return Err(OrbitError::Ladder(crate::error::LadderError::Malformed {
                n: piece.0,
                m: piece.1,
                reason: format!("image of level {level} leaves the tower"),
            }));
        }
        let image = image as u64;
        if self.owner[level as usize].is_some() {
            return Err(OrbitError::Overlap {
                depth: self.depth,
                level,
            });
        }
        if let Some(first) = self.preimage[image as usize] {
            return Err(OrbitError::NotInjective {
                first,
                second: level,
                image,
            });
        }
        self.displacement[level as usize] = Some(k);
        self.owner[level as usize] = Some(piece);
        self.preimage[image as usize] = Some(level);
        Ok(())
    }

    pub fn displacement(&self, level: u64) -> Option<i64> {
        self.displacement.get(level as usize).copied().flatten()
    }

    pub fn owner(&self, level: u64) -> Option<(usize, usize)> {
        self.owner.get(level as usize).copied().flatten()
    }

    pub fn apply(&self, level: u64) -> Option<u64> {
        self.displacement(level).map(|k| (level as i64 - k) as u64)
    }

    pub fn apply_inverse(&self, level: u64) -> Option<u64> {
        self.preimage.get(level as usize).copied().flatten()
    }

    pub fn domain(&self) -> LevelSet {
        let members = (0..self.modulus).filter(|&x| self.displacement(x).is_some()).collect();
        LevelSet::new(self.depth, self.modulus, members).expect("sorted by construction")
    }

    pub fn runs(&self) -> Vec<ShiftRun> {
        let mut runs: Vec<ShiftRun> = Vec::new();
        for x in 0..self.modulus {
            let (Some(k), Some((n, m))) = (self.displacement(x), self.owner(x)) else {
                continue;
            };
            match runs.last_mut() {
                Some(r) if r.start + r.len == x && r.k == k && (r.n, r.m) == (n, m) => r.len += 1,
                _ => runs.push(ShiftRun { start: x, len: 1, k, n, m }),
            }
        }
        runs
    }

    /// Rebuilds a table from its runs, re-checking overlap and injectivity.
    pub fn from_runs(depth: usize, modulus: u64, runs: &[ShiftRun]) -> Result<Self, OrbitError> {
        let mut shift = PiecewiseShift::empty(depth, modulus);
        for r in runs {
            for x in r.start..r.start.saturating_add(r.len) {
                if x >= modulus {
                    return Err(OrbitError::Measure(crate::error::MeasureError::LevelOutOfRange {
                        level: x,
                        modulus,
                    }));
                }
                shift.insert(x, r.k, (r.n, r.m))?;
            }
        }
        Ok(shift)
    }

    /// Positions of every level along the `S`-orbits of the table.
    pub fn orbits(&self) -> OrbitIndex {
        let size = self.modulus as usize;
        let mut chain = vec![usize::MAX; size];
        let mut position = vec![0u64; size];
        let mut lengths = Vec::new();
        let mut cyclic = Vec::new();
        let mut walk = |start: u64, is_cycle: bool, chain: &mut Vec<usize>, position: &mut Vec<u64>| {
            let id = lengths.len();
            let mut x = start;
            let mut pos = 0;
            loop {
                chain[x as usize] = id;
                position[x as usize] = pos;
                pos += 1;
                match self.apply(x) {
                    Some(y) if chain[y as usize] == usize::MAX => x = y,
                    _ => break,
                }
            }
            lengths.push(pos);
            cyclic.push(is_cycle);
        };
        for x in 0..self.modulus {
            if self.apply_inverse(x).is_none() {
                walk(x, false, &mut chain, &mut position);
            }
        }
        for x in 0..self.modulus {
            if chain[x as usize] == usize::MAX {
                walk(x, true, &mut chain, &mut position);
            }
        }
        OrbitIndex {
            chain,
            position,
            lengths,
            cyclic,
        }
    }
}

/// Every level's orbit and position along it, so that `S^k x = y` is solved
/// in constant time.
#[derive(Clone, Debug)]
pub struct OrbitIndex {
    chain: Vec<usize>,
    position: Vec<u64>,
    lengths: Vec<u64>,
    cyclic: Vec<bool>,
}

impl OrbitIndex {
    /// The `k` of smallest absolute value with `S^k x = y`, if any.
    pub fn power_between(&self, x: u64, y: u64) -> Option<i64> {
        let (cx, cy) = (self.chain[x as usize], self.chain[y as usize]);
        if cx != cy {
            return None;
        }
        let diff = self.position[y as usize] as i64 - self.position[x as usize] as i64;
        if !self.cyclic[cx] {
            return Some(diff);
        }
        let len = self.lengths[cx] as i64;
        let k = diff.rem_euclid(len);
        Some(if 2 * k > len { k - len } else { k })
    }
}

/// One piece `D_{n,m}` at its native depth `m`, with `(x, S x)` per level.
#[derive(Clone, Debug)]
pub struct Piece {
    pub n: usize,
    pub m: usize,
    pub set: LevelSet,
    pub images: Vec<(u64, u64)>,
    /// Levels whose prefix walk left the built ladders.
    pub escaped: u64,
}

/// `D_{n,m} = S_1^{a_1-1} ⋯ S_{n-1}^{a_{n-1}-1}(C_{n,m,0} ⊔ ⋯ ⊔ C_{n,m,a_n-2})`
/// with the value of `S` on it, all at depth `m`.
pub fn build_d(c: &Construction, n: usize, m: usize) -> Result<Piece, OrbitError> {
    let st = c.stage(n, m).ok_or(crate::error::LadderError::MissingStage {
        n,
        m,
        need_n: n,
        need_m: m,
    })?;
    let mut images = Vec::new();
    let mut escaped = 0;
    for (idx, &y) in st.rung_levels().iter().enumerate() {
        if st.displacement(idx).is_none() {
            continue;
        }
        let z = st.s[idx + 1];
        let mut x = Some(y);
        for p in (1..n).rev() {
            for _ in 0..c.a(p) - 1 {
                x = x.and_then(|lvl| c.step_within(p, lvl, m, m, true));
            }
        }
        match x {
            Some(x) => images.push((x, z)),
            None => escaped += 1,
        }
    }
    let set = LevelSet::from_unsorted(m, c.d(m), images.iter().map(|&(x, _)| x).collect())?;
    Ok(Piece {
        n,
        m,
        set,
        images,
        escaped,
    })
}

/// `S` on `⊔_{n ≤ m ≤ M} D_{n,m}` and the pieces themselves.
#[derive(Clone, Debug)]
pub struct AssembledShift {
    pub shift: PiecewiseShift,
    pub pieces: BTreeMap<(usize, usize), Piece>,
}

impl AssembledShift {
    pub fn depth(&self) -> usize {
        self.shift.depth
    }

    pub fn modulus(&self) -> u64 {
        self.shift.modulus
    }

    /// `D_{n,m}` refined to depth `M`.
    pub fn piece_at_depth(&self, n: usize, m: usize) -> LevelSet {
        let p = &self.pieces[&(n, m)];
        p.set.lift(self.depth(), self.modulus()).expect("moduli divide")
    }
}

pub fn assemble_s(c: &Construction) -> Result<AssembledShift, OrbitError> {
    let depth = c.depth();
    let dm = c.d(depth);
    let mut shift = PiecewiseShift::empty(depth, dm);
    let mut pieces = BTreeMap::new();
    for m in 1..=depth {
        let copies = dm / c.d(m);
        for n in 1..=m {
            let piece = build_d(c, n, m)?;
            for &(x, z) in &piece.images {
                let k = x as i64 - z as i64;
                for j in 0..copies {
                    shift.insert(x + j * c.d(m), k, (n, m))?;
                }
            }
            pieces.insert((n, m), piece);
        }
    }
    Ok(AssembledShift { shift, pieces })
}

/// Structural checks on the assembled `S`: displacement ranges on each piece,
/// pairwise disjoint pieces, and mass conservation.
pub fn check_shift(c: &Construction, s: &AssembledShift) -> Vec<Check> {
    let mut checks = Vec::new();
    let dm = s.modulus();
    let rows = rows_from(c);
    for (&(n, m), piece) in &s.pieces {
        let label = stage_label(n, m);
        let lo = -(c.d(m - 1) as i64);
        let hi = (schedule::w(&rows, n - 1) * c.d(m - 1)) as i64;
        let ks: Vec<i64> = piece.images.iter().map(|&(x, z)| x as i64 - z as i64).collect();
        let (min, max) = (ks.iter().min().copied(), ks.iter().max().copied());
        let ok = ks.iter().all(|&k| k != 0 && lo <= k && k <= hi);
        checks.push(Check::structural(
            "displacement-range",
            &label,
            format!("[{}, {}]", min.map_or("-".into(), |v| v.to_string()), max.map_or("-".into(), |v| v.to_string())),
            format!("[{lo}, {hi}] without 0"),
            ok,
        ));
        checks.push(Check::structural("prefix-defined", &label, piece.escaped, 0, piece.escaped == 0));
    }
    let total: Measure = s.pieces.keys().map(|&(n, m)| s.piece_at_depth(n, m).measure()).sum();
    let dom = s.shift.domain().measure();
    checks.push(Check::structural(
        "D-disjoint",
        format!("M={}", s.depth()),
        &total,
        &dom,
        total == dom,
    ));
    let leftover = Measure::from_count(dm - s.shift.domain().len() as u64, dm);
    let sum = dom.clone() + leftover.clone();
    checks.push(Check::structural(
        "mass-conservation",
        format!("M={}", s.depth()),
        format!("{dom} + {leftover}"),
        "1",
        sum == Measure::one(),
    ));
    checks.push(Check::structural("S-injective", format!("M={}", s.depth()), "checked on insert", "injective", true));
    checks
}

/// Schedule rows implied by a construction (`w`, `v`, `β` follow from `p`, `d`, `a`).
pub fn rows_from(c: &Construction) -> Vec<ScheduleRow> {
    let mut rows: Vec<ScheduleRow> = Vec::new();
    for n in 1..=c.depth() {
        let row = ScheduleRow::next(rows.last(), c.p(n), c.d(n), c.a(n));
        rows.push(row);
    }
    rows
}

/// `A_{n,m} = ⊔_{l=n..m} C_{n,l,0}` at depth `m`.
pub fn base_set(c: &Construction, n: usize, m: usize) -> Result<LevelSet, OrbitError> {
    Ok(c.bases_at(n, n, m, m)?)
}

/// `E_{n,m}`: the forward saturation of `A_{n,m}` by the ladders of family
/// `n`, then `n-1`, down to `1`, using only ladders `ℒ_{p,l}` with `l ≤ m`.
pub fn saturate(c: &Construction, n: usize, m: usize) -> Result<LevelSet, OrbitError> {
    let dm = c.d(m);
    let mut mark = vec![false; dm as usize];
    let mut members = base_set(c, n, m)?.into_members();
    for &x in &members {
        mark[x as usize] = true;
    }
    for p in (1..=n).rev() {
        let snapshot = members.clone();
        for x in snapshot {
            let mut y = x;
            while let Some(z) = c.step_within(p, y, m, m, true) {
                if !std::mem::replace(&mut mark[z as usize], true) {
                    members.push(z);
                }
                y = z;
            }
        }
    }
    Ok(LevelSet::from_unsorted(m, dm, members)?)
}

/// Mixed-radix digits of `i` with radices `a_1, …, a_n`, least significant first.
pub fn ladder_digits(c: &Construction, n: usize, mut i: u64) -> Vec<u64> {
    (1..=n)
        .map(|p| {
            let e = i % c.a(p);
            i /= c.a(p);
            e
        })
        .collect()
}

/// Exact region ledger.
#[derive(Clone, Debug)]
pub struct Regions {
    /// `E_{n,m}` at depth `M`.
    pub e: BTreeMap<(usize, usize), LevelSet>,
    /// `A_{n,m}` at depth `M`.
    pub a: BTreeMap<(usize, usize), LevelSet>,
    /// `K_n` at depth `M`, `n = 1..=M`.
    pub k: Vec<LevelSet>,
    /// `K_n \ (K_1 ∪ ⋯ ∪ K_{n-1})`.
    pub k_first: Vec<LevelSet>,
    /// `K_n \ K_{n-1}`.
    pub k_stated: Vec<LevelSet>,
}

pub fn build_regions(c: &Construction) -> Result<Regions, OrbitError> {
    let depth = c.depth();
    let dm = c.d(depth);
    let mut e = BTreeMap::new();
    let mut a = BTreeMap::new();
    let mut k = Vec::new();
    for m in 1..=depth {
        for n in 1..=m {
            let native = saturate(c, n, m)?;
            if n == m {
                let members = (1..c.d(n))
                    .filter(|&i| native.contains(i) && native.contains(i - 1))
                    .collect();
                let kn = LevelSet::new(n, c.d(n), members)?;
                k.push(kn.lift(depth, dm)?);
            }
            e.insert((n, m), native.lift(depth, dm)?);
            a.insert((n, m), base_set(c, n, m)?.lift(depth, dm)?);
        }
    }
    let mut k_first = Vec::new();
    let mut k_stated = Vec::new();
    let mut seen = LevelSet::empty(depth, dm);
    for (i, kn) in k.iter().enumerate() {
        k_first.push(kn.difference(&seen)?);
        k_stated.push(if i == 0 { kn.clone() } else { kn.difference(&k[i - 1])? });
        seen = seen.union(kn)?;
    }
    Ok(Regions {
        e,
        a,
        k,
        k_first,
        k_stated,
    })
}

/// `S` moves each `A_{n,M}` through `E_{n,M}` in mixed-radix order: `S^i c`
/// equals `S_1^{e_1} ⋯ S_n^{e_n} c` for the digits `e` of `i`, and the orbit
/// segment of length `w_n` is exactly `E_{n,M}`.
pub fn verify_s_is_odometer(c: &Construction, s: &AssembledShift, regions: &Regions) -> Vec<Check> {
    let depth = c.depth();
    let mut checks = Vec::new();
    let rows = rows_from(c);
    for n in 1..=depth {
        let label = format!("n={n}");
        let wn = schedule::w(&rows, n);
        let base = &regions.a[&(n, depth)];
        let mut mismatch = None;
        let mut reached = Vec::new();
        'outer: for &start in base.members() {
            let mut x = Some(start);
            for i in 0..wn {
                let Some(cur) = x else {
                    mismatch = Some(format!("S^{i} undefined from level {start}"));
                    break 'outer;
                };
                let digits = ladder_digits(c, n, i);
                let mut y = Some(start);
                for p in (1..=n).rev() {
                    for _ in 0..digits[p - 1] {
                        y = y.and_then(|lvl| c.step(p, lvl, depth, true));
                    }
                }
                if y != Some(cur) {
                    mismatch = Some(format!("S^{i}({start}) = {cur}, ladders give {y:?}"));
                    break 'outer;
                }
                reached.push(cur);
                x = if i + 1 < wn { s.shift.apply(cur) } else { None };
            }
        }
        checks.push(Check::structural(
            "odometer-order",
            &label,
            mismatch.clone().unwrap_or_else(|| format!("{} orbits of length {wn}", base.len())),
            "S^i = S_1^e1 ⋯ S_n^en",
            mismatch.is_none(),
        ));
        let orbit_union = LevelSet::from_unsorted(depth, s.modulus(), reached.clone()).ok();
        let distinct = orbit_union.as_ref().map_or(0, |u| u.len());
        let matches = orbit_union.as_ref() == Some(&regions.e[&(n, depth)]) && distinct == reached.len();
        checks.push(Check::structural(
            "E-saturation",
            &label,
            orbit_union.map_or("-".to_string(), |u| u.measure().to_string()),
            regions.e[&(n, depth)].measure(),
            matches && mismatch.is_none(),
        ));
        let (p, a) = (c.p(n), c.a(n));
        checks.push(Check::structural("p-divides-a", &label, a, p, a % p == 0));
    }
    checks
}

/// Inclusions among the `E_{n,m}`.
pub fn check_region_monotonicity(c: &Construction, regions: &Regions) -> Vec<Check> {
    let depth = c.depth();
    let mut checks = Vec::new();
    let mut push = |name: &str, label: String, sub: &LevelSet, sup: &LevelSet| {
        let ok = sub.is_subset(sup).unwrap_or(false);
        checks.push(Check::structural(name, label, sub.measure(), sup.measure(), ok));
    };
    for m in 1..=depth {
        for n in 1..=m {
            let e = &regions.e[&(n, m)];
            if m < depth {
                push("E-grows-in-m", stage_label(n, m), e, &regions.e[&(n, m + 1)]);
            }
            if n > 1 {
                push("E-shrinks-in-n", stage_label(n, m), e, &regions.e[&(n - 1, m)]);
            }
        }
    }
    checks
}

/// Exact rational comparisons of (E-Kn), (E-Knbeta), (E-Fn), (E-Dnm).
pub fn verify_measure_bounds(c: &Construction, s: &AssembledShift, regions: &Regions) -> Vec<Check> {
    let depth = c.depth();
    let rows = rows_from(c);
    let dm = s.modulus();
    let mut checks = Vec::new();
    let outside = |set: &LevelSet| set.complement().measure();
    for n in 1..=depth {
        let label = format!("n={n}");
        let miss = outside(&regions.e[&(n, n)]);
        let coarse = Measure::new(schedule::v(&rows, n - 1) + c.p(n) * schedule::w(&rows, n - 1), c.d(n));
        let mut fine_count: u64 = 0;
        for j in 1..=n {
            let st = c.stage(j, n).expect("built");
            let levels = st.s.len() as u64;
            let unused = if j < n { levels - c.a(j) * st.t } else { levels - c.a(n) };
            fine_count += unused * schedule::w(&rows, j - 1);
        }
        let fine = Measure::new(fine_count, c.d(n));
        checks.push(Check::structural("E-Kn", &label, &miss, &fine, miss <= fine));
        checks.push(Check::structural("E-Kn", &label, &fine, &coarse, fine <= coarse));

        let not_k = outside(&regions.k[n - 1]);
        let via_e = Measure::new(1, c.d(n)) + miss.clone() + miss.clone();
        let beta = rows[n - 1].beta.clone();
        checks.push(Check::structural("E-Knbeta", &label, &not_k, &via_e, not_k <= via_e));
        checks.push(Check::structural("E-Knbeta", &label, &via_e, &beta, via_e <= beta));

        if n > 1 {
            let stated = regions.k_stated[n - 1].measure();
            let prev_out = outside(&regions.k[n - 2]);
            let beta_prev = rows[n - 2].beta.clone();
            checks.push(Check::structural("E-Fn", &label, &stated, &prev_out, stated <= prev_out));
            checks.push(Check::structural("E-Fn", &label, &prev_out, &beta_prev, prev_out <= beta_prev));
            let first = regions.k_first[n - 1].measure();
            checks.push(Check::structural("K'-disjointified", &label, &first, &stated, first <= stated));
        }
    }
    for m in 2..=depth {
        for n in 1..m {
            let label = stage_label(n, m);
            let d_nm = s.piece_at_depth(n, m);
            let escaped = regions.e[&(n, m - 1)].complement();
            let inside = d_nm.is_subset(&escaped).unwrap_or(false);
            checks.push(Check::structural("D-outside-E", &label, d_nm.measure(), escaped.measure(), inside));
            if m - 1 > n {
                let bound = Measure::new(schedule::v(&rows, n), c.d(m - 1));
                let (lhs, mid) = (d_nm.measure(), escaped.measure());
                checks.push(Check::structural("E-Dnm", &label, &lhs, &mid, lhs <= mid));
                checks.push(Check::structural("E-Dnm", &label, &mid, &bound, mid <= bound));
            }
        }
    }
    debug_assert!(dm > 0);
    checks
}

/// Exact displacement distribution of a cocycle partition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleDistribution {
    pub masses: BTreeMap<i64, Measure>,
    /// Mass on which the displacement is unresolved at this depth.
    pub defect: Measure,
}

impl CocycleDistribution {
    pub fn from_counts(counts: &BTreeMap<i64, u64>, unresolved: u64, modulus: u64) -> Self {
        CocycleDistribution {
            masses: counts.iter().map(|(&k, &c)| (k, Measure::from_count(c, modulus))).collect(),
            defect: Measure::from_count(unresolved, modulus),
        }
    }

    pub fn resolved(&self) -> Measure {
        self.masses.values().cloned().sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_masses(self.masses.values())
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Entropy of one block of a cocycle partition against the uniform bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntropy {
    pub block: String,
    pub mass: Measure,
    pub distinct: usize,
    pub count_bound: u128,
    pub entropy: f64,
    pub majorant: f64,
}

impl BlockEntropy {
    fn new(block: String, dist: &CocycleDistribution, count_bound: u128) -> Self {
        let mass = dist.resolved();
        BlockEntropy {
            block,
            distinct: dist.len(),
            count_bound,
            entropy: dist.entropy(),
            majorant: mass.uniform_split_entropy(count_bound as f64),
            mass,
        }
    }

    fn checks(&self, name: &str) -> Vec<Check> {
        vec![
            Check::structural(
                format!("{name}-count"),
                &self.block,
                self.distinct,
                self.count_bound,
                self.distinct as u128 <= self.count_bound,
            ),
            Check::structural(
                format!("{name}-uniform"),
                &self.block,
                fmt_f64(self.entropy),
                fmt_f64(self.majorant),
                self.entropy <= self.majorant + ENTROPY_TOLERANCE,
            ),
        ]
    }
}

/// A cocycle partition with its per-block ledger and closing-chain comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyLedger {
    pub distribution: CocycleDistribution,
    pub blocks: Vec<BlockEntropy>,
    pub entropy: f64,
    pub block_sum: f64,
    pub majorant_sum: f64,
    /// The paper-style closing bound evaluated on this schedule.
    pub closing_bound: f64,
}

/// `𝒫_{S,T}` on `dom(S)`; the blocks are the pieces `D_{n,m}` with count
/// bound `θ_{n,m}`.
pub fn cocycle_s_over_t(c: &Construction, s: &AssembledShift) -> (EntropyLedger, Vec<Check>) {
    let rows = rows_from(c);
    let dm = s.modulus();
    let mut counts = BTreeMap::new();
    let mut block_counts: BTreeMap<(usize, usize), BTreeMap<i64, u64>> = BTreeMap::new();
    let mut defined = 0;
    for x in 0..dm {
        if let (Some(k), Some(piece)) = (s.shift.displacement(x), s.shift.owner(x)) {
            *counts.entry(k).or_insert(0) += 1;
            *block_counts.entry(piece).or_default().entry(k).or_insert(0) += 1;
            defined += 1;
        }
    }
    let distribution = CocycleDistribution::from_counts(&counts, dm - defined, dm);
    let mut blocks = Vec::new();
    let mut checks = Vec::new();
    for &(n, m) in s.pieces.keys() {
        let bc = block_counts.get(&(n, m)).cloned().unwrap_or_default();
        let dist = CocycleDistribution::from_counts(&bc, 0, dm);
        let block = BlockEntropy::new(stage_label(n, m), &dist, schedule::theta(&rows, n, m));
        checks.extend(block.checks("PST"));
        blocks.push(block);
    }
    let entropy = distribution.entropy();
    let block_sum: f64 = blocks.iter().map(|b| b.entropy).sum();
    let majorant_sum: f64 = blocks.iter().map(|b| b.majorant).sum();
    checks.push(Check::structural(
        "PST-subadditive",
        "total",
        fmt_f64(entropy),
        fmt_f64(block_sum),
        entropy <= block_sum + ENTROPY_TOLERANCE,
    ));

    // Closing chain: family 1 uses a_1 / d_{m-1} with d_{m-1} values; family
    // n ≥ 2 is bounded by 2^{-n} through (E-n), (E-n2), (E-msum).
    let depth = c.depth();
    let mut closing = 0.0;
    let by_family = |n: usize| -> f64 { blocks.iter().filter(|b| b.block.starts_with(&format!("({n},"))).map(|b| b.entropy).sum() };
    if depth >= 1 {
        let mut bound = 0.0;
        for m in 1..=depth {
            let own = blocks.iter().find(|b| b.block == stage_label(1, m)).map_or(0.0, |b| b.entropy);
            bound += if m <= 2 {
                own
            } else {
                Measure::new(c.a(1), c.d(m - 1)).uniform_split_entropy(c.d(m - 1) as f64)
            };
        }
        let lhs = by_family(1);
        checks.push(Check::analytic("PST-chain", "n=1", fmt_f64(lhs), fmt_f64(bound), lhs <= bound + ENTROPY_TOLERANCE));
        closing += bound;
    }
    for n in 2..=depth {
        let mut second_tier = 0.0;
        for m in n..=depth {
            let theta = schedule::theta(&rows, n, m) as f64;
            second_tier += if m == n {
                Measure::new(1, schedule::w(&rows, n - 1)).uniform_split_entropy(theta)
            } else if m == n + 1 {
                Measure::new(schedule::v(&rows, n - 1) + c.p(n) * schedule::w(&rows, n - 1), c.d(n))
                    .uniform_split_entropy(theta)
            } else {
                Measure::new(schedule::v(&rows, n), c.d(m - 1)).uniform_split_entropy(theta)
            };
        }
        let lhs: f64 = blocks
            .iter()
            .filter(|b| b.block.starts_with(&format!("({n},")))
            .map(|b| b.majorant)
            .sum();
        let label = format!("n={n}");
        checks.push(Check::analytic("PST-chain", &label, fmt_f64(lhs), fmt_f64(second_tier), lhs <= second_tier + ENTROPY_TOLERANCE));
        let cap = 0.5f64.powi(n as i32);
        checks.push(Check::analytic("PST-chain-2^-n", &label, fmt_f64(second_tier), fmt_f64(cap), second_tier <= cap));
        closing += cap;
    }
    let ledger = EntropyLedger {
        distribution,
        blocks,
        entropy,
        block_sum,
        majorant_sum,
        closing_bound: closing,
    };
    (ledger, checks)
}

/// `𝒫_{T,S}` resolved at depth `M`.
#[derive(Clone, Debug)]
pub struct TransferCocycle {
    /// `k` with `T x = S^k x`, per level, where resolved.
    pub displacement: Vec<Option<i64>>,
    /// The first `n` with the level in `K_n`.
    pub block: Vec<Option<usize>>,
    pub ledger: EntropyLedger,
}

/// Resolves `T x = S^k x` on every level of `⋃ K_n`. Each level is charged
/// to the first `K_n` containing it and its `k` must satisfy
/// `|k| ≤ 4 w_{n-1}² d_{n-1}`; a larger resolved `k` is a hard failure.
/// Unresolved levels and levels outside `⋃ K_n` form the defect.
pub fn cocycle_t_over_s(
    c: &Construction,
    s: &AssembledShift,
    regions: &Regions,
) -> Result<(TransferCocycle, Vec<Check>), OrbitError> {
    let rows = rows_from(c);
    let depth = c.depth();
    let dm = s.modulus();
    let orbits = s.shift.orbits();
    let mut block = vec![None; dm as usize];
    for (i, kf) in regions.k_first.iter().enumerate() {
        for &x in kf.members() {
            block[x as usize] = Some(i + 1);
        }
    }
    let mut displacement = vec![None; dm as usize];
    let mut counts = BTreeMap::new();
    let mut block_counts: Vec<BTreeMap<i64, u64>> = vec![BTreeMap::new(); depth];
    let mut max_abs = vec![0u64; depth];
    let mut resolved = 0;
    for x in 0..dm {
        let Some(n) = block[x as usize] else { continue };
        let Some(k) = orbits.power_between(x, x - 1) else { continue };
        let bound = 4 * schedule::w(&rows, n - 1).pow(2) * schedule::d(&rows, n - 1);
        if k.unsigned_abs() > bound {
            return Err(OrbitError::CrudeBoundViolated { n, level: x, k, bound });
        }
        max_abs[n - 1] = max_abs[n - 1].max(k.unsigned_abs());
        displacement[x as usize] = Some(k);
        *counts.entry(k).or_insert(0) += 1;
        *block_counts[n - 1].entry(k).or_insert(0) += 1;
        resolved += 1;
    }
    let distribution = CocycleDistribution::from_counts(&counts, dm - resolved, dm);
    let mut checks = Vec::new();
    let mut blocks = Vec::new();
    for n in 1..=depth {
        let label = format!("K'_{n}");
        let bound = 4 * schedule::w(&rows, n - 1).pow(2) * schedule::d(&rows, n - 1);
        checks.push(Check::structural("E-crude", &label, format!("max|k|={}", max_abs[n - 1]), bound, true));
        let members = regions.k_first[n - 1].len() as u64;
        let got: u64 = block_counts[n - 1].values().sum();
        checks.push(Check::structural(
            "K-resolved",
            &label,
            Measure::from_count(got, dm),
            Measure::from_count(members, dm),
            got <= members,
        ));
        let dist = CocycleDistribution::from_counts(&block_counts[n - 1], members - got, dm);
        let b = BlockEntropy::new(label, &dist, schedule::lambda(&rows, n - 1));
        checks.extend(b.checks("PTS"));
        blocks.push(b);
    }
    let entropy = distribution.entropy();
    let block_sum: f64 = blocks.iter().map(|b| b.entropy).sum();
    let majorant_sum: f64 = blocks.iter().map(|b| b.majorant).sum();
    checks.push(Check::structural(
        "PTS-subadditive",
        "total",
        fmt_f64(entropy),
        fmt_f64(block_sum),
        entropy <= block_sum + ENTROPY_TOLERANCE,
    ));
    let mut closing = 0.0;
    if depth >= 1 {
        let k1 = regions.k[0].measure();
        closing += k1.entropy_term();
        let lhs = blocks[0].entropy;
        checks.push(Check::analytic(
            "PTS-chain",
            "n=1",
            fmt_f64(lhs),
            fmt_f64(k1.entropy_term()),
            lhs <= k1.entropy_term() + ENTROPY_TOLERANCE,
        ));
    }
    for n in 2..=depth {
        let row = &rows[n - 2];
        let tier = row.beta.uniform_split_entropy(9.0 * (row.w as f64).powi(2) * row.d as f64);
        let lhs = blocks[n - 1].majorant;
        checks.push(Check::analytic(
            "PTS-chain",
            format!("n={n}"),
            fmt_f64(lhs),
            fmt_f64(tier),
            lhs <= tier + ENTROPY_TOLERANCE,
        ));
        closing += tier;
    }
    let ledger = EntropyLedger {
        distribution,
        blocks,
        entropy,
        block_sum,
        majorant_sum,
        closing_bound: closing,
    };
    Ok((
        TransferCocycle {
            displacement,
            block,
            ledger,
        },
        checks,
    ))
}

/// One row of the `𝒬_{T^n}` entropy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub resolved: Measure,
    pub entropy: f64,
    pub rate: f64,
    /// Defect above the configured threshold.
    pub inconclusive: bool,
}

/// The refinement chain for one pair `(n, m)` on the common support `R_{nm}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub n: usize,
    pub m: usize,
    /// `H(𝒬_{T^{nm}})` on `R_{nm}`.
    pub product: f64,
    /// `H(⋁_j T^{-jm} 𝒬_{T^m})` on `R_{nm}`.
    pub join: f64,
    /// `Σ_j H(T^{-jm} 𝒬_{T^m})` on `R_{nm}`.
    pub translates: f64,
    /// `(1/nm) H(𝒬_{T^{nm}})` on its own resolved mass.
    pub rate_nm: f64,
    /// `(1/m) H(𝒬_{T^m})` on its own resolved mass.
    pub rate_m: f64,
}

impl RatePair {
    pub fn chain_holds(&self) -> bool {
        self.product <= self.join + ENTROPY_TOLERANCE && self.join <= self.translates + ENTROPY_TOLERANCE
    }

    pub fn rate_holds(&self) -> bool {
        self.rate_nm <= self.rate_m + ENTROPY_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub pairs: Vec<RatePair>,
}

fn entropy_by_label<L: std::hash::Hash + Eq>(labels: impl Iterator<Item = L>, modulus: u64) -> f64 {
    let mut counts: HashMap<L, u64> = HashMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut masses: Vec<Measure> = counts.into_values().map(|c| Measure::from_count(c, modulus)).collect();
    masses.sort();
    entropy_of_masses(masses.iter())
}

/// `(1/n) H(𝒬_{T^n})` for `n = 1..=horizon`, where the cocycle of `T^n`
/// over `S` is `k_n(x) = Σ_{j<n} k_1(T^j x)`, evaluated on the mass where
/// every term is resolved.
pub fn cocycle_entropy_rate(k1: &[Option<i64>], horizon: usize, defect_threshold: f64) -> RateReport {
    let dm = k1.len() as u64;
    let at = |x: u64, j: u64| -> u64 { (x + dm - j % dm) % dm };
    let mut kn: Vec<Vec<Option<i64>>> = vec![vec![Some(0); dm as usize]];
    for n in 1..=horizon {
        let prev = &kn[n - 1];
        let next = (0..dm)
            .map(|x| match (prev[x as usize], k1[at(x, n as u64 - 1) as usize]) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            })
            .collect();
        kn.push(next);
    }
    let mut rows = Vec::new();
    for (n, row) in kn.iter().enumerate().take(horizon + 1).skip(1) {
        let resolved = row.iter().filter(|k| k.is_some()).count() as u64;
        let entropy = entropy_by_label(row.iter().flatten().copied(), dm);
        let resolved = Measure::from_count(resolved, dm);
        rows.push(RateRow {
            n,
            inconclusive: 1.0 - resolved.to_f64() > defect_threshold,
            resolved,
            entropy,
            rate: entropy / n as f64,
        });
    }
    let mut pairs = Vec::new();
    for m in 1..=horizon {
        for n in 2..=horizon / m {
            let nm = n * m;
            let support: Vec<u64> = (0..dm).filter(|&x| kn[nm][x as usize].is_some()).collect();
            let product = entropy_by_label(support.iter().map(|&x| kn[nm][x as usize]), dm);
            let join = entropy_by_label(
                support
                    .iter()
                    .map(|&x| (0..n).map(|j| kn[m][at(x, (j * m) as u64) as usize]).collect::<Vec<_>>()),
                dm,
            );
            let translates: f64 = (0..n)
                .map(|j| entropy_by_label(support.iter().map(|&x| kn[m][at(x, (j * m) as u64) as usize]), dm))
                .sum();
            pairs.push(RatePair {
                n,
                m,
                product,
                join,
                translates,
                rate_nm: rows[nm - 1].rate,
                rate_m: rows[m - 1].rate,
            });
        }
    }
    RateReport { rows, pairs }
}

/// Everything derived from a construction.
#[derive(Clone, Debug)]
pub struct OrbitAnalysis {
    pub shift: AssembledShift,
    pub regions: Regions,
    pub s_over_t: EntropyLedger,
    pub t_over_s: TransferCocycle,
    pub checks: Vec<Check>,
}

pub fn analyze(c: &Construction) -> Result<OrbitAnalysis, OrbitError> {
    let shift = assemble_s(c)?;
    let regions = build_regions(c)?;
    let mut checks = check_shift(c, &shift);
    checks.extend(verify_s_is_odometer(c, &shift, &regions));
    checks.extend(check_region_monotonicity(c, &regions));
    checks.extend(verify_measure_bounds(c, &shift, &regions));
    let (s_over_t, st_checks) = cocycle_s_over_t(c, &shift);
    checks.extend(st_checks);
    let (t_over_s, ts_checks) = cocycle_t_over_s(c, &shift, &regions)?;
    checks.extend(ts_checks);
    Ok(OrbitAnalysis {
        shift,
        regions,
        s_over_t,
        t_over_s,
        checks,
    })
}
