//! Choice of the parameters `p_n`, `d_n`, `a_n` and the admissibility
//! inequalities they must satisfy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checks::{fmt_f64, Check};
use crate::error::{LadderError, ScheduleError};
use crate::ladder::Construction;
use crate::measure::Measure;
use crate::odometer::{primes, FactorStream};

/// How the primes `p_n` are enumerated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum PrimePolicy {
    /// `2, 2,3, 2,3,5, 2,3,5,7, …`
    #[default]
    Diagonal,
    Constant(u64),
    /// The given primes, repeated cyclically.
    Cycle(Vec<u64>),
}

impl PrimePolicy {
    pub fn sequence(&self) -> Box<dyn Iterator<Item = u64>> {
        match self {
            PrimePolicy::Diagonal => Box::new((1..).flat_map(|k| primes().take(k))),
            PrimePolicy::Constant(p) => Box::new(std::iter::repeat(*p)),
            PrimePolicy::Cycle(ps) => Box::new(ps.clone().into_iter().cycle()),
        }
    }

    pub fn nth(&self, n: usize) -> u64 {
        self.sequence().nth(n - 1).expect("prime sequences are infinite")
    }
}

impl fmt::Display for PrimePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimePolicy::Diagonal => f.write_str("diagonal"),
            PrimePolicy::Constant(p) => write!(f, "const:{p}"),
            PrimePolicy::Cycle(ps) => {
                let parts: Vec<_> = ps.iter().map(u64::to_string).collect();
                write!(f, "cycle:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for PrimePolicy {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScheduleError::ParseMode(s.to_string());
        let parse_prime = |t: &str| -> Result<u64, ScheduleError> {
            let p: u64 = t.trim().parse().map_err(|_| bad())?;
            crate::odometer::is_prime(p).then_some(p).ok_or_else(bad)
        };
        match s.split_once(':') {
            None if s == "diagonal" => Ok(PrimePolicy::Diagonal),
            Some(("const", p)) => Ok(PrimePolicy::Constant(parse_prime(p)?)),
            Some(("cycle", list)) => {
                let ps = list.split(',').map(parse_prime).collect::<Result<Vec<_>, _>>()?;
                Ok(PrimePolicy::Cycle(ps))
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for PrimePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PrimePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `a_n`: the largest multiple of `p_n` not above `r`.
pub fn derive_a(n: usize, r: u64, prime: u64) -> Result<u64, ScheduleError> {
    if r < prime {
        return Err(ScheduleError::TooFewRungs {
            stage: n,
            available: r,
            prime,
        });
    }
    Ok(prime * (r / prime))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScheduleMode {
    /// Every inequality must hold; moduli grow until they do.
    Strict,
    /// Only structural feasibility is enforced. Analytic inequalities are
    /// reported against their bound scaled by `slack`.
    Relaxed { slack: f64 },
}

impl Default for ScheduleMode {
    fn default() -> Self {
        ScheduleMode::Relaxed { slack: 1.0 }
    }
}

impl ScheduleMode {
    pub fn is_strict(&self) -> bool {
        matches!(self, ScheduleMode::Strict)
    }

    pub fn slack(&self) -> f64 {
        match self {
            ScheduleMode::Strict => 1.0,
            ScheduleMode::Relaxed { slack } => *slack,
        }
    }
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleMode::Strict => f.write_str("strict"),
            ScheduleMode::Relaxed { slack } if *slack == 1.0 => f.write_str("relaxed"),
            ScheduleMode::Relaxed { slack } => write!(f, "relaxed:{slack}"),
        }
    }
}

impl FromStr for ScheduleMode {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "strict" => Ok(ScheduleMode::Strict),
            None if s == "relaxed" => Ok(ScheduleMode::default()),
            Some(("relaxed", slack)) => match slack.parse::<f64>() {
                Ok(x) if x.is_finite() && x > 0.0 => Ok(ScheduleMode::Relaxed { slack: x }),
                _ => Err(ScheduleError::ParseMode(s.to_string())),
            },
            _ => Err(ScheduleError::ParseMode(s.to_string())),
        }
    }
}

/// Parameters of stage `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub n: usize,
    pub p: u64,
    pub d: u64,
    pub a: u64,
    /// `a_1 ⋯ a_n`.
    pub w: u64,
    /// `w_1 + ⋯ + w_n`.
    pub v: u64,
    /// `(1 + 2(v_{n-1} + p_n w_{n-1})) / d_n`.
    pub beta: Measure,
    /// `8 w_n² d_n + 1`, the displacement count allowed on `K'_{n+1}`.
    pub lambda: u128,
}

impl ScheduleRow {
    /// Derives `w`, `v`, `β`, `λ` from the previous row.
    pub fn next(prev: Option<&ScheduleRow>, p: u64, d: u64, a: u64) -> Self {
        let (n, w_prev, v_prev) = prev.map_or((1, 1, 0), |r| (r.n + 1, r.w, r.v));
        let w = a * w_prev;
        let v = v_prev + w;
        ScheduleRow {
            n,
            p,
            d,
            a,
            w,
            v,
            beta: Measure::new(1 + 2 * (v_prev + p * w_prev), d),
            lambda: 8 * (w as u128).pow(2) * d as u128 + 1,
        }
    }
}

/// `w_{n}` with `w_0 = 1`.
pub fn w(rows: &[ScheduleRow], n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        rows[n - 1].w
    }
}

/// `v_n` with `v_0 = 0`.
pub fn v(rows: &[ScheduleRow], n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        rows[n - 1].v
    }
}

/// `d_n` with `d_0 = 1`.
pub fn d(rows: &[ScheduleRow], n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        rows[n - 1].d
    }
}

/// `θ_{n,m} = (1 + w_{n-1}) d_{m-1}`.
pub fn theta(rows: &[ScheduleRow], n: usize, m: usize) -> u128 {
    (1 + w(rows, n - 1) as u128) * d(rows, m - 1) as u128
}

/// `λ_{n} = 8 w_n² d_n + 1`, with `λ_0 = 9`.
pub fn lambda(rows: &[ScheduleRow], n: usize) -> u128 {
    if n == 0 {
        9
    } else {
        rows[n - 1].lambda
    }
}

/// Inequalities whose truth is decided by the choice of `d_n`, given
/// `rows[..n]`.
pub fn stage_checks(rows: &[ScheduleRow], n: usize, slack: f64) -> Vec<Check> {
    let row = &rows[n - 1];
    let label = format!("n={n}");
    let mut out = Vec::new();
    let ratio = Measure::new(row.w, row.d);
    let half = Measure::new(1, 2);
    let in_range = ratio >= half && ratio <= Measure::one();
    out.push(Check::analytic("ratio", label.clone(), &ratio, "[1/2, 1]", in_range));

    let mut push = |name: &str, lhs: f64, rhs: f64, strict_lt: bool| {
        let bound = rhs * slack;
        let pass = if strict_lt { lhs < bound } else { lhs <= bound };
        out.push(Check::analytic(name, label.clone(), fmt_f64(lhs), fmt_f64(bound), pass));
    };

    let finitesum = row.beta.uniform_split_entropy(9.0 * (row.w as f64).powi(2) * row.d as f64);
    push("E-finitesum", finitesum, 0.5f64.powi(n as i32), false);

    let prefix: f64 = rows[..n]
        .iter()
        .map(|r| r.beta.uniform_split_entropy(9.0 * (r.w as f64).powi(2) * r.d as f64))
        .sum();
    push("E-finitesum-prefix", prefix, 1.0 - 0.5f64.powi(n as i32), false);

    // (E-n) at index n+1 is fixed once w_n and d_n are.
    let with_next_theta = Measure::new(1, row.w)
        .uniform_split_entropy((1.0 + row.w as f64) * row.d as f64);
    push("E-n", with_next_theta, 0.5f64.powi(n as i32 + 3), true);

    if n >= 2 {
        let x = Measure::new(v(rows, n - 1) + row.p * w(rows, n - 1), row.d);
        push("E-n2", x.uniform_split_entropy(theta(rows, n, n + 1) as f64), 0.5f64.powi(n as i32 + 2), true);

        let an1 = Measure::new(rows[0].a, row.d);
        push("E-n1", an1.uniform_split_entropy(row.d as f64), 0.5f64.powi(n as i32), false);
    }

    // (E-msum) terms with m - 1 = n, which exist for m = n + 1 >= 4.
    if n >= 3 {
        let m = n + 1;
        for p in 1..=m - 2 {
            let x = Measure::new(v(rows, p), row.d);
            let term = x.uniform_split_entropy(theta(rows, p, m) as f64);
            push(&format!("E-msum[p={p}]"), term, 0.5f64.powi(m as i32 + 1), true);
        }
    }
    out
}

/// Exact recurrences that hold in every mode.
pub fn structural_checks(rows: &[ScheduleRow]) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let label = format!("n={}", row.n);
        let prev = i.checked_sub(1).map(|j| &rows[j]);
        let expect = ScheduleRow::next(prev, row.p, row.d, row.a);
        out.push(Check::structural(
            "w-v-beta-recurrence",
            &label,
            format!("w={},v={},beta={}", row.w, row.v, row.beta),
            format!("w={},v={},beta={}", expect.w, expect.v, expect.beta),
            expect == *row && row.n == i + 1,
        ));
        out.push(Check::structural(
            "p-divides-a",
            &label,
            row.a,
            row.p,
            row.a >= 2 && row.a % row.p == 0,
        ));
        let d_prev = d(rows, i);
        let quotient_ok = row.d % d_prev == 0 && row.d / d_prev > 2;
        out.push(Check::structural("quotient", &label, format!("{}/{}", row.d, d_prev), "> 2", quotient_ok));
    }
    out
}

/// Evaluates every inequality on completed rows. In strict mode a failure is
/// an error.
pub fn check_inequalities(rows: &[ScheduleRow], mode: ScheduleMode) -> Result<Vec<Check>, ScheduleError> {
    let mut checks = structural_checks(rows);
    for n in 1..=rows.len() {
        let stage = stage_checks(rows, n, mode.slack());
        if mode.is_strict() {
            let failing: Vec<String> = stage.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
            if !failing.is_empty() {
                return Err(ScheduleError::AnalyticFailure { stage: n, failing });
            }
        }
        checks.extend(stage);
    }
    Ok(checks)
}

/// Constraints applied when growing `d_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraints {
    pub mode: ScheduleMode,
    /// Smallest admissible `d_1`.
    pub min_quotient: u64,
    /// Largest admissible modulus.
    pub depth_cap: u64,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            mode: ScheduleMode::default(),
            min_quotient: 12,
            depth_cap: 100_000,
        }
    }
}

/// Grows `d_n` from `d_{n-1}` by factors from `stream` until the quotient
/// exceeds 2, stage `(n,n)` has at least `p_n + 1` levels, stage `(n-1,n)`
/// has a sub-ladder, and (in strict mode) the stage-`n` inequalities hold.
/// Returns the new row and the construction extended to depth `n`.
pub fn propose_d(
    rows: &[ScheduleRow],
    construction: &Construction,
    prime: u64,
    stream: &mut FactorStream,
    constraints: &Constraints,
) -> Result<(ScheduleRow, Construction), ScheduleError> {
    let n = rows.len() + 1;
    let d_prev = d(rows, n - 1);
    let mut candidate = d_prev;
    let mut failing: Vec<String> = Vec::new();
    loop {
        let factor = stream.next().ok_or(ScheduleError::StreamExhausted { stage: n })?;
        candidate = candidate
            .checked_mul(factor)
            .filter(|&c| c <= constraints.depth_cap)
            .ok_or_else(|| ScheduleError::DepthCap {
                stage: n,
                cap: constraints.depth_cap,
                candidate: candidate.saturating_mul(factor),
                failing: if failing.is_empty() { vec!["depth-cap".to_string()] } else { failing.clone() },
            })?;
        failing.clear();
        if candidate / d_prev <= 2 {
            failing.push("quotient".to_string());
            continue;
        }
        if n == 1 && candidate < constraints.min_quotient {
            failing.push("min-quotient".to_string());
            continue;
        }
        let next = match construction.extend(candidate, prime) {
            Ok(c) => c,
            Err(LadderError::TooFewLevels { .. } | LadderError::RungCountOutOfRange { .. }) => {
                failing.push("r_nn>=p_n".to_string());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if n >= 2 && next.stage(n - 1, n).is_none_or(|st| st.t == 0) {
            failing.push("t_{n-1,n}>=1".to_string());
            continue;
        }
        let row = ScheduleRow::next(rows.last(), prime, candidate, next.a(n));
        if constraints.mode.is_strict() {
            let mut with = rows.to_vec();
            with.push(row.clone());
            failing.extend(stage_checks(&with, n, 1.0).into_iter().filter(|c| !c.pass).map(|c| c.name));
            if !failing.is_empty() {
                continue;
            }
        }
        log::debug!("stage {n}: d = {candidate}, a = {}", row.a);
        return Ok((row, next));
    }
}

/// A completed schedule together with the ladders it determines.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub rows: Vec<ScheduleRow>,
    pub construction: Construction,
    /// Primes consumed from `q`, with multiplicity.
    pub consumed: std::collections::BTreeMap<u64, u64>,
}

/// Builds `stages` rows in succession.
pub fn build_schedule(
    stream: &mut FactorStream,
    primes: &PrimePolicy,
    stages: usize,
    constraints: &Constraints,
) -> Result<Schedule, ScheduleError> {
    let mut rows = Vec::with_capacity(stages);
    let mut construction = Construction::new();
    for (n, p) in (1..=stages).zip(primes.sequence()) {
        let (row, next) = propose_d(&rows, &construction, p, stream, constraints)?;
        debug_assert_eq!(row.n, n);
        rows.push(row);
        construction = next;
    }
    Ok(Schedule {
        rows,
        construction,
        consumed: stream.consumed().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odometer::{EnumerationPolicy, SupernaturalNumber};

    fn worked_stream() -> FactorStream {
        let q: SupernaturalNumber = "2:2,3:1,11:inf".parse().unwrap();
        q.factor_stream(EnumerationPolicy::FiniteFirst)
    }

    #[test]
    fn diagonal_primes() {
        let first: Vec<u64> = PrimePolicy::Diagonal.sequence().take(10).collect();
        assert_eq!(first, vec![2, 2, 3, 2, 3, 5, 2, 3, 5, 7]);
        let constant: Vec<u64> = PrimePolicy::Constant(2).sequence().take(3).collect();
        assert_eq!(constant, vec![2, 2, 2]);
        assert!(PrimePolicy::Diagonal.sequence().take(200).any(|p| p == 17));
        for s in ["diagonal", "const:3", "cycle:2,5"] {
            assert_eq!(s.parse::<PrimePolicy>().unwrap().to_string(), s);
        }
        assert!("const:4".parse::<PrimePolicy>().is_err());
    }

    #[test]
    fn derive_a_values() {
        assert_eq!(derive_a(1, 11, 2).unwrap(), 10);
        assert_eq!(derive_a(2, 12, 2).unwrap(), 12);
        assert_eq!(derive_a(3, 5, 5).unwrap(), 5);
        assert!(derive_a(3, 4, 5).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("strict".parse::<ScheduleMode>().unwrap(), ScheduleMode::Strict);
        assert_eq!("relaxed".parse::<ScheduleMode>().unwrap(), ScheduleMode::Relaxed { slack: 1.0 });
        assert_eq!("relaxed:4".parse::<ScheduleMode>().unwrap(), ScheduleMode::Relaxed { slack: 4.0 });
        assert!("relaxed:-1".parse::<ScheduleMode>().is_err());
        assert!("lax".parse::<ScheduleMode>().is_err());
    }

    #[test]
    fn worked_schedule() {
        let s = build_schedule(&mut worked_stream(), &PrimePolicy::Diagonal, 2, &Constraints::default()).unwrap();
        let ds: Vec<u64> = s.rows.iter().map(|r| r.d).collect();
        let as_: Vec<u64> = s.rows.iter().map(|r| r.a).collect();
        assert_eq!(ds, vec![12, 132]);
        assert_eq!(as_, vec![10, 12]);
        assert_eq!(s.rows[0].beta, Measure::new(5, 12));
        assert_eq!(s.rows[1].beta, Measure::new(61, 132));
        assert_eq!((s.rows[1].w, s.rows[1].v), (120, 130));
        assert_eq!(theta(&s.rows, 2, 2), 11 * 12);
        assert_eq!(lambda(&s.rows, 0), 9);
        let checks = check_inequalities(&s.rows, ScheduleMode::default()).unwrap();
        let ratio: Vec<_> = checks.iter().filter(|c| c.name == "ratio").collect();
        assert_eq!(ratio[0].lhs, "5/6");
        assert_eq!(ratio[1].lhs, "10/11");
        assert!(ratio.iter().all(|c| c.pass));
        let fs = checks.iter().find(|c| c.name == "E-finitesum").unwrap();
        assert!(!fs.pass);
        assert!(matches!(
            check_inequalities(&s.rows, ScheduleMode::Strict),
            Err(ScheduleError::AnalyticFailure { stage: 1, .. })
        ));
        assert!(structural_checks(&s.rows).iter().all(|c| c.pass));
    }

    #[test]
    fn depth_cap_reported() {
        let constraints = Constraints {
            depth_cap: 100,
            ..Constraints::default()
        };
        let err = build_schedule(&mut worked_stream(), &PrimePolicy::Diagonal, 2, &constraints).unwrap_err();
        assert!(matches!(err, ScheduleError::DepthCap { stage: 2, candidate: 132, cap: 100, .. }));
    }

    #[test]
    fn quotient_two_rejected() {
        let q: SupernaturalNumber = "2:inf".parse().unwrap();
        let constraints = Constraints {
            min_quotient: 1,
            ..Constraints::default()
        };
        let s = build_schedule(&mut q.factor_stream(EnumerationPolicy::FiniteFirst), &PrimePolicy::Constant(2), 2, &constraints)
            .unwrap();
        assert_eq!(s.rows[0].d, 4);
        assert!(s.rows[1].d / s.rows[0].d > 2);
    }

    #[test]
    fn strict_grows_beyond_worked_values() {
        let q: SupernaturalNumber = "*:inf".parse().unwrap();
        let constraints = Constraints {
            mode: ScheduleMode::Strict,
            depth_cap: 1_000_000,
            ..Constraints::default()
        };
        let s = build_schedule(&mut q.factor_stream(EnumerationPolicy::FiniteFirst), &PrimePolicy::Diagonal, 1, &constraints)
            .unwrap();
        assert!(s.rows[0].d > 12);
        assert!(stage_checks(&s.rows, 1, 1.0).iter().all(|c| c.pass));
        let err = build_schedule(
            &mut q.factor_stream(EnumerationPolicy::FiniteFirst),
            &PrimePolicy::Diagonal,
            2,
            &Constraints {
                depth_cap: 100_000,
                ..constraints
            },
        )
        .unwrap_err();
        assert!(matches!(err, ScheduleError::DepthCap { stage: 2, .. }));
    }

    #[test]
    fn exhausted_stream() {
        let q: SupernaturalNumber = "2:2".parse().unwrap();
        let err = build_schedule(
            &mut q.factor_stream(EnumerationPolicy::FiniteFirst),
            &PrimePolicy::Diagonal,
            1,
            &Constraints::default(),
        )
        .unwrap_err();
        assert_eq!(err, ScheduleError::StreamExhausted { stage: 1 });
    }
}
