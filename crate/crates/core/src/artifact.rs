//! Run artifacts: a self-contained JSON record of one construction with every
//! derived quantity and check verdict, and the re-verification of a stored
//! record from its ladder stages alone.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::{fmt_f64, stage_label, Check};
use crate::error::{ArtifactError, OrbitError, RunError};
use crate::ladder::{Construction, LadderStage};
use crate::measure::{LevelSet, Measure};
use crate::odometer::{EnumerationPolicy, OdometerSystem, SupernaturalNumber};
use crate::orbit::{analyze, cocycle_entropy_rate, EntropyLedger, OrbitAnalysis, RateReport, ShiftRun};
use crate::schedule::{build_schedule, stage_checks, structural_checks, Constraints, PrimePolicy, ScheduleMode, ScheduleRow};
use crate::witness::{bernoulli_reference, window_entropies, BernoulliRow, WindowRow};

/// Bumped whenever the artifact layout changes.
pub const ARTIFACT_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub q: SupernaturalNumber,
    pub enumeration: EnumerationPolicy,
    pub primes: PrimePolicy,
    pub schedule: ScheduleMode,
    pub stages: usize,
    pub min_quotient: u64,
    pub depth_cap: u64,
    /// Largest `n` in the `𝒬_{T^n}` rate table.
    pub rate_horizon: usize,
    /// Rate rows whose unresolved mass exceeds this are marked inconclusive.
    pub rate_defect_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let constraints = Constraints::default();
        RunConfig {
            q: SupernaturalNumber::universal(),
            enumeration: EnumerationPolicy::default(),
            primes: PrimePolicy::Diagonal,
            schedule: constraints.mode,
            stages: 2,
            min_quotient: constraints.min_quotient,
            depth_cap: constraints.depth_cap,
            rate_horizon: 8,
            rate_defect_threshold: 0.5,
        }
    }
}

impl RunConfig {
    pub fn constraints(&self) -> Constraints {
        Constraints {
            mode: self.schedule,
            min_quotient: self.min_quotient,
            depth_cap: self.depth_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub m: usize,
    pub s: Vec<u64>,
    pub r: Option<u64>,
    pub t: u64,
    pub spreads: Vec<u64>,
}

impl From<&LadderStage> for StageRecord {
    fn from(st: &LadderStage) -> Self {
        StageRecord {
            n: st.n,
            m: st.m,
            s: st.s.clone(),
            r: st.r(),
            t: st.t,
            spreads: st.spreads(),
        }
    }
}

/// A named exact mass from the region ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MassRow {
    pub name: String,
    pub stage: String,
    pub mass: Measure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledgers {
    pub s_over_t: EntropyLedger,
    pub t_over_s: EntropyLedger,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub format: u32,
    pub tool: String,
    pub config: RunConfig,
    pub moduli: Vec<u64>,
    /// Primes consumed from `q`, with multiplicity.
    pub consumed: BTreeMap<u64, u64>,
    pub schedule: Vec<ScheduleRow>,
    pub stages: Vec<StageRecord>,
    pub s_table: Vec<ShiftRun>,
    pub masses: Vec<MassRow>,
    pub ledgers: Option<Ledgers>,
    pub rates: Option<RateReport>,
    pub checks: Vec<Check>,
}

/// Everything recomputed from a construction; shared by `construct` and
/// `verify` so both produce the same verdict list.
#[derive(Clone, Debug)]
struct Derived {
    s_table: Vec<ShiftRun>,
    masses: Vec<MassRow>,
    ledgers: Option<Ledgers>,
    rates: Option<RateReport>,
    checks: Vec<Check>,
}

fn schedule_checks(rows: &[ScheduleRow], mode: ScheduleMode) -> Vec<Check> {
    let mut checks = structural_checks(rows);
    for n in 1..=rows.len() {
        checks.extend(stage_checks(rows, n, mode.slack()));
    }
    checks
}

fn mass_rows(analysis: &OrbitAnalysis) -> Vec<MassRow> {
    let mut out = vec![MassRow {
        name: "dom(S)".to_string(),
        stage: String::new(),
        mass: analysis.shift.shift.domain().measure(),
    }];
    let row = |name: &str, stage: String, set: &LevelSet| MassRow {
        name: name.to_string(),
        stage,
        mass: set.measure(),
    };
    for (&(n, m), piece) in &analysis.shift.pieces {
        out.push(row("D", stage_label(n, m), &piece.set));
    }
    for (&(n, m), e) in &analysis.regions.e {
        out.push(row("X\\E", stage_label(n, m), &e.complement()));
    }
    for (i, k) in analysis.regions.k.iter().enumerate() {
        out.push(row("K", (i + 1).to_string(), k));
        out.push(row("K'", (i + 1).to_string(), &analysis.regions.k_first[i]));
    }
    out
}

fn rate_checks(report: &RateReport) -> Vec<Check> {
    report
        .pairs
        .iter()
        .flat_map(|p| {
            let label = format!("n={} m={}", p.n, p.m);
            [
                Check::structural("rate-chain", &label, fmt_f64(p.product), fmt_f64(p.translates), p.chain_holds()),
                Check::analytic("rate-refinement", &label, fmt_f64(p.rate_nm), fmt_f64(p.rate_m), p.rate_holds()),
            ]
        })
        .collect()
}

fn derive(c: &Construction, rows: &[ScheduleRow], config: &RunConfig) -> Result<Derived, OrbitError> {
    let mut checks = schedule_checks(rows, config.schedule);
    checks.extend(c.verify_recursion_invariants());
    if c.depth() == 0 {
        return Ok(Derived {
            s_table: Vec::new(),
            masses: Vec::new(),
            ledgers: None,
            rates: None,
            checks,
        });
    }
    let analysis = analyze(c)?;
    checks.extend(analysis.checks.iter().cloned());
    let rates = cocycle_entropy_rate(
        &analysis.t_over_s.displacement,
        config.rate_horizon,
        config.rate_defect_threshold,
    );
    checks.extend(rate_checks(&rates));
    Ok(Derived {
        s_table: analysis.shift.shift.runs(),
        masses: mass_rows(&analysis),
        ledgers: Some(Ledgers {
            s_over_t: analysis.s_over_t.clone(),
            t_over_s: analysis.t_over_s.ledger.clone(),
        }),
        rates: Some(rates),
        checks,
    })
}

/// Builds the schedule and ladders for `config` and records every check.
pub fn construct(config: &RunConfig) -> Result<RunArtifact, RunError> {
    let mut stream = config.q.factor_stream_checked(config.enumeration)?;
    let schedule = build_schedule(&mut stream, &config.primes, config.stages, &config.constraints())?;
    let c = &schedule.construction;
    let derived = derive(c, &schedule.rows, config)?;
    Ok(RunArtifact {
        format: ARTIFACT_FORMAT,
        tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        moduli: c.system().moduli().to_vec(),
        consumed: schedule.consumed,
        schedule: schedule.rows,
        stages: c.stages().map(StageRecord::from).collect(),
        s_table: derived.s_table,
        masses: derived.masses,
        ledgers: derived.ledgers,
        rates: derived.rates,
        checks: derived.checks,
    })
}

impl RunArtifact {
    pub fn to_json(&self) -> Result<String, ArtifactError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses an artifact, reporting a format mismatch before any layout error.
    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let format = value.get("format").and_then(serde_json::Value::as_u64);
        if format != Some(ARTIFACT_FORMAT as u64) {
            return Err(ArtifactError::VersionMismatch {
                found: format.map_or_else(|| "none".to_string(), |f| f.to_string()),
                expected: ARTIFACT_FORMAT.to_string(),
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), ArtifactError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn read(path: &Path) -> Result<Self, ArtifactError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn system(&self) -> Result<OdometerSystem, ArtifactError> {
        OdometerSystem::new(self.moduli.clone()).map_err(|e| ArtifactError::Corrupt(e.to_string()))
    }

    /// Reassembles the stored ladders without re-running the schedule search.
    pub fn construction(&self) -> Result<Construction, ArtifactError> {
        let system = self.system()?;
        let depth = system.depth();
        if self.schedule.len() != depth {
            return Err(ArtifactError::Corrupt(format!(
                "{} schedule rows for depth {depth}",
                self.schedule.len()
            )));
        }
        let primes = self.schedule.iter().map(|r| r.p).collect();
        let rung_counts: Vec<u64> = self.schedule.iter().map(|r| r.a).collect();
        let stages = self
            .stages
            .iter()
            .map(|st| {
                let rung_count = *rung_counts
                    .get(st.n.wrapping_sub(1))
                    .ok_or_else(|| ArtifactError::Corrupt(format!("stage ({},{}) has no schedule row", st.n, st.m)))?;
                Ok(LadderStage {
                    n: st.n,
                    m: st.m,
                    rung_count,
                    s: st.s.clone(),
                    t: st.t,
                })
            })
            .collect::<Result<Vec<_>, ArtifactError>>()?;
        Construction::from_parts(system, primes, rung_counts, stages).map_err(|e| ArtifactError::Corrupt(e.to_string()))
    }
}

/// Outcome of re-verifying a stored artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Checks on the stored records themselves, followed by the full
    /// recomputed verdict list.
    pub checks: Vec<Check>,
    /// Differences between the stored and the recomputed verdicts.
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn reproduced(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn record_checks(artifact: &RunArtifact) -> Vec<Check> {
    let mut out = Vec::new();
    let mut prev: Option<ScheduleRow> = None;
    for (i, row) in artifact.schedule.iter().enumerate() {
        let rebuilt = ScheduleRow::next(prev.as_ref(), row.p, row.d, row.a);
        out.push(Check::structural(
            "schedule-row",
            (i + 1).to_string(),
            format!("w={} v={} beta={}", row.w, row.v, row.beta),
            format!("w={} v={} beta={}", rebuilt.w, rebuilt.v, rebuilt.beta),
            rebuilt == *row && artifact.moduli.get(i + 1) == Some(&row.d),
        ));
        out.push(Check::structural(
            "prime-policy",
            (i + 1).to_string(),
            row.p,
            artifact.config.primes.nth(i + 1),
            row.p == artifact.config.primes.nth(i + 1),
        ));
        prev = Some(rebuilt);
    }
    for st in &artifact.stages {
        let r = (st.s.len() as u64).checked_sub(1);
        out.push(Check::structural(
            "stage-record",
            stage_label(st.n, st.m),
            format!("r={:?}", st.r),
            format!("r={r:?}"),
            st.r == r,
        ));
    }
    out
}

/// Recomputes every check from the stored ladders and compares the verdicts,
/// the `S` table, the masses and the ledgers with what is stored.
pub fn verify(artifact: &RunArtifact) -> Result<VerifyReport, ArtifactError> {
    let mut checks = record_checks(artifact);
    let mut mismatches = Vec::new();
    let c = match artifact.construction() {
        Ok(c) => c,
        Err(ArtifactError::Corrupt(reason)) if !artifact.stages.is_empty() => {
            checks.push(Check::structural("stage-shape", "", reason, "well-formed stages", false));
            mismatches.push("stored stages do not reassemble".to_string());
            return Ok(VerifyReport { checks, mismatches });
        }
        Err(e) => return Err(e),
    };
    for (st, stored) in c.stages().zip(&artifact.stages) {
        let fresh = StageRecord::from(st);
        checks.push(Check::structural(
            "spread-record",
            stage_label(st.n, st.m),
            format!("{:?}", stored.spreads),
            format!("{:?}", fresh.spreads),
            fresh.spreads == stored.spreads,
        ));
    }
    let derived = match derive(&c, &artifact.schedule, &artifact.config) {
        Ok(d) => d,
        Err(e) => {
            checks.extend(c.verify_recursion_invariants());
            checks.push(Check::structural("orbit-assembly", "", e.to_string(), "S assembles", false));
            mismatches.push("S cannot be assembled from the stored stages".to_string());
            return Ok(VerifyReport { checks, mismatches });
        }
    };
    let fields = [
        ("s-table", derived.s_table == artifact.s_table),
        ("masses", derived.masses == artifact.masses),
        ("ledgers", derived.ledgers == artifact.ledgers),
        ("rates", derived.rates == artifact.rates),
    ];
    for (name, same) in fields {
        checks.push(Check::structural(name, "", if same { "stored" } else { "differs" }, "recomputed", same));
        if !same {
            mismatches.push(format!("{name} differs from the recomputed value"));
        }
    }
    if derived.checks.len() != artifact.checks.len() {
        mismatches.push(format!(
            "{} stored checks, {} recomputed",
            artifact.checks.len(),
            derived.checks.len()
        ));
    }
    for (fresh, stored) in derived.checks.iter().zip(&artifact.checks) {
        if fresh != stored {
            mismatches.push(format!("stored `{stored}` recomputed as `{fresh}`"));
        }
    }
    checks.extend(derived.checks);
    Ok(VerifyReport { checks, mismatches })
}

/// Both cocycle ledgers, the rate table, and the odometer window table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub moduli: Vec<u64>,
    pub ledgers: Option<Ledgers>,
    pub rates: Option<RateReport>,
    pub windows: Vec<WindowRow>,
    pub bernoulli: Vec<BernoulliRow>,
}

/// One line of the flat entropy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub table: String,
    pub stage: String,
    pub quantity: String,
    pub value: String,
    pub bound: String,
    pub pass: bool,
}

pub fn entropy_report(artifact: &RunArtifact, max_window: u64) -> Result<EntropyReport, RunError> {
    let c = artifact.construction()?;
    let derived = derive(&c, &artifact.schedule, &artifact.config)?;
    Ok(EntropyReport {
        moduli: artifact.moduli.clone(),
        ledgers: derived.ledgers,
        rates: derived.rates,
        windows: window_entropies(c.system(), max_window)?,
        bernoulli: bernoulli_reference(),
    })
}

impl EntropyReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let row = |table: &str, stage: String, quantity: &str, value: String, bound: String, pass: bool| ReportRow {
            table: table.to_string(),
            stage,
            quantity: quantity.to_string(),
            value,
            bound,
            pass,
        };
        let mut out = Vec::new();
        if let Some(ledgers) = &self.ledgers {
            for (table, ledger) in [("P_ST", &ledgers.s_over_t), ("P_TS", &ledgers.t_over_s)] {
                for b in &ledger.blocks {
                    out.push(row(table, b.block.clone(), "mass", b.mass.to_string(), String::new(), true));
                    out.push(row(
                        table,
                        b.block.clone(),
                        "distinct",
                        b.distinct.to_string(),
                        b.count_bound.to_string(),
                        b.distinct as u128 <= b.count_bound,
                    ));
                    out.push(row(
                        table,
                        b.block.clone(),
                        "entropy",
                        fmt_f64(b.entropy),
                        fmt_f64(b.majorant),
                        b.entropy <= b.majorant + crate::orbit::ENTROPY_TOLERANCE,
                    ));
                }
                let d = &ledger.distribution;
                out.push(row(table, "total".into(), "resolved", d.resolved().to_string(), String::new(), true));
                out.push(row(table, "total".into(), "defect", d.defect.to_string(), String::new(), true));
                out.push(row(
                    table,
                    "total".into(),
                    "entropy",
                    fmt_f64(ledger.entropy),
                    fmt_f64(ledger.block_sum),
                    ledger.entropy <= ledger.block_sum + crate::orbit::ENTROPY_TOLERANCE,
                ));
                out.push(row(
                    table,
                    "total".into(),
                    "closing-chain",
                    fmt_f64(ledger.majorant_sum),
                    fmt_f64(ledger.closing_bound),
                    ledger.majorant_sum <= ledger.closing_bound + crate::orbit::ENTROPY_TOLERANCE,
                ));
            }
        }
        if let Some(rates) = &self.rates {
            for r in &rates.rows {
                out.push(row("Q_T^n", r.n.to_string(), "rate", fmt_f64(r.rate), r.resolved.to_string(), !r.inconclusive));
            }
            for p in &rates.pairs {
                out.push(row(
                    "Q_T^n-pair",
                    format!("n={} m={}", p.n, p.m),
                    "rate",
                    fmt_f64(p.rate_nm),
                    fmt_f64(p.rate_m),
                    p.rate_holds(),
                ));
            }
        }
        for w in &self.windows {
            out.push(row(
                "odometer-window",
                w.window.to_string(),
                "H/n",
                fmt_f64(w.rate),
                fmt_f64(w.bound),
                w.within_bound(),
            ));
        }
        for b in &self.bernoulli {
            let dist: Vec<String> = b.distribution.iter().map(Measure::to_string).collect();
            out.push(row(
                "bernoulli",
                format!("{} |F|={}", dist.join(" "), b.window),
                "H/|F|",
                fmt_f64(b.rate),
                fmt_f64(b.single),
                b.matches(crate::orbit::ENTROPY_TOLERANCE),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_config() -> RunConfig {
        RunConfig {
            q: "2:2,3:1,11:inf".parse().unwrap(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn construct_and_verify_worked_run() {
        let a = construct(&worked_config()).unwrap();
        assert_eq!(a.moduli, vec![1, 12, 132]);
        assert!(a.checks.iter().filter(|c| c.kind == crate::checks::CheckKind::Structural).all(|c| c.pass));
        let text = a.to_json().unwrap();
        let back = RunArtifact::from_json(&text).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json().unwrap(), text);
        let report = verify(&back).unwrap();
        assert!(report.reproduced(), "{:?}", report.mismatches);
        assert!(report.checks.iter().take(8).all(|c| c.pass));
    }

    #[test]
    fn empty_run() {
        let a = construct(&RunConfig {
            stages: 0,
            ..worked_config()
        })
        .unwrap();
        assert_eq!(a.moduli, vec![1]);
        assert!(a.stages.is_empty() && a.ledgers.is_none());
        let report = verify(&a).unwrap();
        assert!(report.reproduced());
        assert!(report.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn version_mismatch() {
        let a = construct(&RunConfig {
            stages: 1,
            ..worked_config()
        })
        .unwrap();
        let text = a.to_json().unwrap().replacen("\"format\": 1", "\"format\": 99", 1);
        assert!(matches!(
            RunArtifact::from_json(&text),
            Err(ArtifactError::VersionMismatch { .. })
        ));
    }
}
