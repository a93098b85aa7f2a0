use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use shannon_odometer::artifact::{construct, entropy_report, verify, RunArtifact, RunConfig};
use shannon_odometer::checks::{all_pass, Check, CheckKind};
use shannon_odometer::error::{ArtifactError, GrowthError, OdometerError, RunError, ScheduleError};
use shannon_odometer::growth::{check_bound, exhaustive_sweep, random_sweep, GrowthGroup, GrowthInstance, GrowthReport};
use shannon_odometer::odometer::{EnumerationPolicy, SupernaturalNumber};
use shannon_odometer::remark::remark_report;
use shannon_odometer::schedule::{PrimePolicy, ScheduleMode};

const OK: u8 = 0;
const USAGE: u8 = 1;
const STRUCTURAL: u8 = 2;
const ANALYTIC: u8 = 3;
const DEPTH_CAP: u8 = 4;
const INFEASIBLE: u8 = 5;
const CORRUPT: u8 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Sweep {
    Exhaustive,
    Random,
}

/// Exact finite-depth Shannon orbit equivalence between odometers.
#[derive(Parser, Debug)]
#[command(name = "soe", version)]
struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for sampled cocycle values and randomized sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Refuse any modulus d_M above this.
    #[arg(long, global = true, default_value_t = 100_000)]
    depth_cap: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the schedule and ladders and write a run artifact.
    Construct {
        /// Supernatural number, e.g. "2:inf,3:inf" or "*:inf".
        #[arg(long, default_value = "*:inf")]
        q: SupernaturalNumber,
        #[arg(long, default_value_t = 2)]
        stages: usize,
        /// strict | relaxed | relaxed:<slack>
        #[arg(long, default_value = "relaxed")]
        schedule: ScheduleMode,
        #[arg(long, default_value_t = 12)]
        min_quotient: u64,
        /// diagonal | const:<p> | cycle:<p>,<p>,…
        #[arg(long, default_value = "diagonal")]
        primes: PrimePolicy,
        /// finite-first | round-robin
        #[arg(long, default_value = "finite-first")]
        enumeration: EnumerationPolicy,
        #[arg(long, default_value_t = 8)]
        rate_horizon: usize,
    },
    /// Re-check a stored artifact and compare every verdict.
    Verify { artifact: PathBuf },
    /// Entropy ledgers, rate table and odometer window entropies.
    Entropy {
        artifact: PathBuf,
        #[arg(long, default_value_t = 64)]
        windows: u64,
    },
    /// The Z² odometer example with its cocycle partition.
    Remark {
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Extra digits used to confirm constancy on atoms.
        #[arg(long, default_value_t = 4)]
        extra: usize,
        /// Same as --format, for the atom table.
        #[arg(long, value_enum)]
        report: Option<Format>,
    },
    /// Count products in a virtually Abelian group against the growth bound.
    Growth {
        /// z | z^<d> | dihedral
        #[arg(long, default_value = "z")]
        group: GrowthGroup,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        r: u64,
        /// Fixed factors as "pos=coords;…", e.g. "2=5" or "1=3,1".
        #[arg(long, default_value = "")]
        omega0: String,
        #[arg(long, value_enum)]
        sweep: Option<Sweep>,
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        max_r: u64,
        /// Number of seeds in a random sweep, starting at --seed.
        #[arg(long, default_value_t = 200)]
        seeds: u64,
    },
}

fn emit(cli: &Cli, text: &str) -> Result<(), ArtifactError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn check_table(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(s, "{} checks, {failed} failing", checks.len());
    s
}

fn verdict(checks: &[Check], mode: ScheduleMode) -> u8 {
    if !all_pass(checks, CheckKind::Structural) {
        STRUCTURAL
    } else if mode.is_strict() && !all_pass(checks, CheckKind::Analytic) {
        ANALYTIC
    } else {
        OK
    }
}

fn run_error_code(e: &RunError) -> u8 {
    match e {
        RunError::Odometer(OdometerError::FinitelyManyFactors(_)) => INFEASIBLE,
        RunError::Odometer(_) => USAGE,
        RunError::Schedule(ScheduleError::DepthCap { .. }) => DEPTH_CAP,
        RunError::Schedule(ScheduleError::AnalyticFailure { .. }) => ANALYTIC,
        RunError::Schedule(ScheduleError::StreamExhausted { .. } | ScheduleError::TooFewRungs { .. }) => INFEASIBLE,
        RunError::Schedule(ScheduleError::ParseMode(_)) => USAGE,
        RunError::Schedule(ScheduleError::Ladder(_)) | RunError::Orbit(_) => STRUCTURAL,
        RunError::Artifact(e) => artifact_error_code(e),
    }
}

fn artifact_error_code(e: &ArtifactError) -> u8 {
    match e {
        ArtifactError::Io(_) => USAGE,
        _ => CORRUPT,
    }
}

fn cmd_construct(cli: &Cli, config: RunConfig) -> Result<u8, RunError> {
    let artifact = construct(&config)?;
    let code = verdict(&artifact.checks, config.schedule);
    for c in artifact.checks.iter().filter(|c| !c.pass) {
        if c.kind == CheckKind::Structural || config.schedule.is_strict() {
            log::warn!("{c}");
        } else {
            log::info!("{c}");
        }
    }
    log::info!("moduli {:?}, {} checks", artifact.moduli, artifact.checks.len());
    match cli.format {
        Format::Csv => {
            if let Some(path) = &cli.out {
                artifact.write(path)?;
            }
            print!("{}", to_csv(&artifact.checks));
        }
        _ => emit(cli, &artifact.to_json()?)?,
    }
    Ok(code)
}

fn cmd_verify(cli: &Cli, path: &Path) -> Result<u8, RunError> {
    let artifact = RunArtifact::read(path)?;
    let report = verify(&artifact)?;
    let text = match cli.format {
        Format::Text => {
            let mut s = check_table(&report.checks);
            for m in &report.mismatches {
                let _ = writeln!(s, "mismatch: {m}");
            }
            let _ = writeln!(
                s,
                "{}",
                if report.reproduced() { "all stored verdicts reproduced" } else { "stored verdicts NOT reproduced" }
            );
            s
        }
        Format::Json => to_json(&report),
        Format::Csv => to_csv(&report.checks),
    };
    emit(cli, &text)?;
    let code = verdict(&report.checks, artifact.config.schedule);
    Ok(if code == OK && !report.reproduced() { STRUCTURAL } else { code })
}

fn cmd_entropy(cli: &Cli, path: &Path, windows: u64) -> Result<u8, RunError> {
    let artifact = RunArtifact::read(path)?;
    let report = entropy_report(&artifact, windows)?;
    let rows = report.rows();
    let text = match cli.format {
        Format::Json => to_json(&report),
        Format::Csv => to_csv(&rows),
        Format::Text => {
            let mut s = String::new();
            for r in &rows {
                let _ = writeln!(
                    s,
                    "[{}] {:<16} {:<14} {:<14} {} vs {}",
                    if r.pass { "pass" } else { "FAIL" },
                    r.table,
                    r.stage,
                    r.quantity,
                    r.value,
                    r.bound
                );
            }
            s
        }
    };
    emit(cli, &text)?;
    Ok(OK)
}

fn cmd_remark(cli: &Cli, depth: usize, extra: usize, report: Option<Format>) -> Result<u8, String> {
    let r = remark_report(depth, extra, cli.seed).map_err(|e| e.to_string())?;
    let text = match report.unwrap_or(cli.format) {
        Format::Json => to_json(&r),
        Format::Csv => to_csv(&r.atoms),
        Format::Text => {
            let mut s = String::from("N  j  cocycle      mass          entropy\n");
            for a in &r.atoms {
                let _ = writeln!(s, "{:<2} {}  ({}, {})  {:<12}  {:.9}", a.carry, a.j, a.m, a.k, a.mass, a.entropy);
            }
            for (name, p) in [("H(Q)", &r.q), ("H(P_u)", &r.u), ("H(P_v)", &r.v)] {
                let _ = writeln!(
                    s,
                    "{name}: partial {:.9} + tail {:.3e} -> limit {:.9}; unresolved {}",
                    p.partial, p.tail, p.limit, p.unresolved
                );
            }
            s
        }
    };
    emit(cli, &text).map_err(|e| e.to_string())?;
    Ok(OK)
}

#[derive(Serialize)]
struct GrowthRow {
    group: String,
    n: usize,
    r: u64,
    omega0: String,
    count: u64,
    lemma_bound: f64,
    proof_bound: f64,
    pass: bool,
}

impl From<&GrowthReport> for GrowthRow {
    fn from(g: &GrowthReport) -> Self {
        GrowthRow {
            group: g.group.clone(),
            n: g.n,
            r: g.r,
            omega0: g.omega0.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            count: g.count,
            lemma_bound: g.lemma_bound,
            proof_bound: g.proof_bound,
            pass: g.pass,
        }
    }
}

struct GrowthArgs<'a> {
    group: GrowthGroup,
    n: usize,
    r: u64,
    omega0: &'a str,
    sweep: Option<Sweep>,
    max_n: usize,
    max_r: u64,
    seeds: u64,
}

fn growth_reports(seed: u64, a: &GrowthArgs) -> Result<Vec<GrowthReport>, GrowthError> {
    match a.sweep {
        None => {
            let fixed = GrowthInstance::parse_fixed(&a.group, a.omega0)?;
            Ok(vec![check_bound(&a.group, &GrowthInstance::new(a.n, a.r, fixed)?)?])
        }
        Some(Sweep::Exhaustive) => exhaustive_sweep(&a.group, a.max_n, a.max_r, seed),
        Some(Sweep::Random) => random_sweep(&a.group, a.max_n, a.max_r, seed..seed + a.seeds),
    }
}

fn cmd_growth(cli: &Cli, args: &GrowthArgs) -> Result<u8, String> {
    let reports = growth_reports(cli.seed, args).map_err(|e| e.to_string())?;
    let rows: Vec<GrowthRow> = reports.iter().map(GrowthRow::from).collect();
    let text = match cli.format {
        Format::Json => to_json(&reports),
        Format::Csv => to_csv(&rows),
        Format::Text => {
            let mut s = String::new();
            for g in &rows {
                let _ = writeln!(
                    s,
                    "[{}] {} n={} r={} omega0={{{}}} count={} lemma={:.4e} proof={:.4e}",
                    if g.pass { "pass" } else { "FAIL" },
                    g.group,
                    g.n,
                    g.r,
                    g.omega0,
                    g.count,
                    g.lemma_bound,
                    g.proof_bound
                );
            }
            let failed = rows.iter().filter(|g| !g.pass).count();
            let _ = writeln!(s, "{} instances, {failed} failing", rows.len());
            s
        }
    };
    emit(cli, &text).map_err(|e| e.to_string())?;
    Ok(if rows.iter().all(|g| g.pass) { OK } else { STRUCTURAL })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OEL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let code = match &cli.command {
        Command::Construct {
            q,
            stages,
            schedule,
            min_quotient,
            primes,
            enumeration,
            rate_horizon,
        } => {
            let config = RunConfig {
                q: q.clone(),
                enumeration: *enumeration,
                primes: primes.clone(),
                schedule: *schedule,
                stages: *stages,
                min_quotient: *min_quotient,
                depth_cap: cli.depth_cap,
                rate_horizon: *rate_horizon,
                ..RunConfig::default()
            };
            cmd_construct(&cli, config).unwrap_or_else(|e| {
                eprintln!("error: {e}");
                run_error_code(&e)
            })
        }
        Command::Verify { artifact } => cmd_verify(&cli, artifact).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            run_error_code(&e)
        }),
        Command::Entropy { artifact, windows } => cmd_entropy(&cli, artifact, *windows).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            run_error_code(&e)
        }),
        Command::Remark { depth, extra, report } => cmd_remark(&cli, *depth, *extra, *report).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            USAGE
        }),
        Command::Growth {
            group,
            n,
            r,
            omega0,
            sweep,
            max_n,
            max_r,
            seeds,
        } => {
            let args = GrowthArgs {
                group: *group,
                n: *n,
                r: *r,
                omega0,
                sweep: *sweep,
                max_n: *max_n,
                max_r: *max_r,
                seeds: *seeds,
            };
            cmd_growth(&cli, &args).unwrap_or_else(|e| {
                eprintln!("error: {e}");
                USAGE
            })
        }
    };
    ExitCode::from(code)
}
