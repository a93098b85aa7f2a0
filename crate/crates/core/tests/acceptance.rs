//! Acceptance criteria 1 to 10. Each test prints exactly one verdict line of the
//! form `acceptance <id>: PASS|FAIL <title> (<elapsed>)` and then asserts.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the lines in order.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use shannon_odometer::artifact::{construct, verify, RunArtifact, RunConfig};
use shannon_odometer::checks::{Check, CheckKind};
use shannon_odometer::growth::{check_bound, exhaustive_sweep, random_sweep, GrowthGroup, GrowthInstance};
use shannon_odometer::measure::Measure;
use shannon_odometer::orbit::analyze;
use shannon_odometer::remark::{remark_report, series_tail};
use shannon_odometer::schedule::{theta, ScheduleMode};
use shannon_odometer::witness::window_entropies;

/// Float tolerance on entropy values.
const ENTROPY_TOLERANCE: f64 = 1e-9;
/// Distance of the remark partial entropy from its limit at depth 20.
const REMARK_TOLERANCE: f64 = 1e-6;
const REMARK_DEPTH: usize = 20;
const WITNESS_WINDOW: u64 = 64;
const WITNESS_CEILING: f64 = 0.15;
const MAX_MODULUS: u64 = 100_000;

const WORKED_BUDGET: Duration = Duration::from_secs(1);
const STRUCTURAL_BUDGET: Duration = Duration::from_secs(60);
const REMARK_BUDGET: Duration = Duration::from_secs(1);
const GROWTH_BUDGET: Duration = Duration::from_secs(120);

struct Verdict {
    id: u8,
    title: &'static str,
    start: Instant,
    failures: Vec<String>,
}

impl Verdict {
    fn new(id: u8, title: &'static str) -> Self {
        Verdict {
            id,
            title,
            start: Instant::now(),
            failures: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn within(&mut self, budget: Duration) {
        let elapsed = self.start.elapsed();
        self.require(elapsed < budget, || format!("took {elapsed:?}, budget {budget:?}"));
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "acceptance {}: {status} {} ({:.3}s)",
            self.id,
            self.title,
            self.start.elapsed().as_secs_f64()
        );
        assert!(self.failures.is_empty(), "criterion {} failed:\n{}", self.id, self.failures.join("\n"));
    }
}

fn config(q: &str, stages: usize) -> RunConfig {
    RunConfig {
        q: q.parse().expect("valid q"),
        stages,
        schedule: ScheduleMode::Relaxed { slack: 1.0 },
        min_quotient: 12,
        ..RunConfig::default()
    }
}

fn worked() -> RunConfig {
    config("2:2,3:1,11:inf", 2)
}

/// The desk-scale runs with N ≤ 3 and d_M ≤ 10^5.
fn suite() -> Vec<RunConfig> {
    vec![
        config("2:2,3:1,11:inf", 1),
        worked(),
        config("2:2,3:1,11:inf", 3),
        config("*:inf", 3),
        config("2:inf,3:inf", 3),
        config("2:inf", 3),
        config("3:inf", 3),
        config("5:inf,7:inf", 2),
        config("2:inf,3:inf,5:inf,7:inf,11:inf", 2),
    ]
}

fn named<'a>(checks: &'a [Check], name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
    checks.iter().filter(move |c| c.name == name)
}

#[test]
fn criterion_01_worked_reference_run() {
    let mut v = Verdict::new(1, "worked reference run d=(12,132), a=(10,12), rungs and leftovers");
    let run = construct(&worked()).expect("worked run constructs");
    v.within(WORKED_BUDGET);

    v.require(run.moduli == [1, 12, 132], || format!("moduli {:?}", run.moduli));
    let a: Vec<u64> = run.schedule.iter().map(|r| r.a).collect();
    v.require(a == [10, 12], || format!("a = {a:?}"));

    let stage = |n: usize, m: usize| run.stages.iter().find(|s| s.n == n && s.m == m).expect("stage present");
    let (s11, s12, s22) = (stage(1, 1), stage(1, 2), stage(2, 2));
    let s12_expected: Vec<u64> = (0..11).flat_map(|j| [10 + 12 * j, 11 + 12 * j]).collect();
    let s22_expected = vec![0, 10, 12, 24, 36, 48, 60, 70, 72, 84, 96, 108, 120];
    v.require(s11.s == (0..12).collect::<Vec<_>>(), || format!("s(1,1) = {:?}", s11.s));
    v.require(s12.s == s12_expected, || format!("s(1,2) = {:?}", s12.s));
    v.require(s22.s == s22_expected, || format!("s(2,2) = {:?}", s22.s));
    v.require(s12.r == Some(21) && s12.t == 2, || format!("(1,2): r={:?} t={}", s12.r, s12.t));
    v.require(s22.r == Some(12) && s22.t == 1, || format!("(2,2): r={:?} t={}", s22.r, s22.t));
    let leftovers = |s: &[u64], used: usize| s[used..].to_vec();
    v.require(leftovers(&s12.s, 2 * 10) == [130, 131], || "leftovers of (1,2)".into());
    v.require(leftovers(&s22.s, 12) == [120], || "leftover of (2,2)".into());
    v.require(s12.spreads.iter().all(|&x| x <= 11), || format!("spreads {:?}", s12.spreads));
    v.require(
        run.checks.iter().filter(|c| c.kind == CheckKind::Structural).all(|c| c.pass),
        || "a structural check fails".into(),
    );
    v.finish();
}

#[test]
fn criterion_02_structural_invariants() {
    let mut v = Verdict::new(2, "structural invariant suite, N <= 3, d_M <= 1e5, zero tolerance");
    let required = [
        "recursion(i)",
        "ladder-disjoint",
        "E-q",
        "S-injective",
        "displacement-range",
        "D-disjoint",
        "mass-conservation",
        "odometer-order",
    ];
    for cfg in suite() {
        let run = match construct(&cfg) {
            Ok(run) => run,
            Err(e) => {
                v.require(false, || format!("{}: {e}", cfg.q));
                continue;
            }
        };
        let dm = *run.moduli.last().expect("d_0");
        v.require(dm <= MAX_MODULUS, || format!("{}: d_M = {dm}", cfg.q));
        let names: BTreeSet<&str> = run.checks.iter().map(|c| c.name.as_str()).collect();
        for name in required {
            v.require(names.contains(name), || format!("{}: no {name} check", cfg.q));
        }
        if cfg.stages >= 2 {
            for name in ["recursion(ii)", "spread"] {
                v.require(names.contains(name), || format!("{}: no {name} check", cfg.q));
            }
        }
        for c in run.checks.iter().filter(|c| c.kind == CheckKind::Structural && !c.pass) {
            v.require(false, || format!("{} N={}: {c}", cfg.q, cfg.stages));
        }
    }
    v.within(STRUCTURAL_BUDGET);
    v.finish();
}

#[test]
fn criterion_03_measure_bounds() {
    let mut v = Verdict::new(3, "measure bounds E-Kn, E-Knbeta, E-Fn, E-Dnm exact; mu(X minus E_11) = 2/12");
    let mut seen = BTreeSet::new();
    for cfg in suite() {
        let run = construct(&cfg).expect("suite run constructs");
        for name in ["E-Kn", "E-Knbeta", "E-Fn", "E-Dnm"] {
            for c in named(&run.checks, name) {
                seen.insert(name);
                v.require(c.pass, || format!("{} N={}: {c}", cfg.q, cfg.stages));
            }
        }
    }
    v.require(seen.len() == 4, || format!("only {seen:?} were exercised"));

    let run = construct(&worked()).expect("worked run");
    let first = named(&run.checks, "E-Kn").find(|c| c.stage == "n=1").expect("E-Kn at n=1");
    let two_twelfths = Measure::new(2, 12).to_string();
    v.require(
        first.lhs == two_twelfths && first.rhs == two_twelfths,
        || format!("E-Kn at n=1: {} vs {}", first.lhs, first.rhs),
    );
    let mass = run.masses.iter().find(|m| m.name == "X\\E" && m.stage == "(1,1)").expect("E_11 mass");
    v.require(mass.mass == Measure::new(2, 12), || format!("mu(X minus E_11) = {}", mass.mass));
    v.finish();
}

#[test]
fn criterion_04_crude_displacement_bound() {
    let mut v = Verdict::new(4, "E-crude |k| <= 4 w^2 d on every resolved K'_n level; K_1 has k = -1, mass 3/4");
    for cfg in suite() {
        let schedule_run = construct(&cfg).expect("suite run constructs");
        for c in named(&schedule_run.checks, "E-crude") {
            v.require(c.pass, || format!("{}: {c}", cfg.q));
        }
        let artifact = RunArtifact::from_json(&schedule_run.to_json().unwrap()).unwrap();
        let construction = artifact.construction().expect("stored stages reassemble");
        let analysis = analyze(&construction).expect("analysis succeeds");
        let t = &analysis.t_over_s;
        for (level, (k, block)) in t.displacement.iter().zip(&t.block).enumerate() {
            if let (Some(k), Some(n)) = (k, block) {
                let (w, d) = if *n == 1 {
                    (1, 1)
                } else {
                    let row = &artifact.schedule[n - 2];
                    (row.w as i128, row.d as i128)
                };
                let bound = 4 * w * w * d;
                v.require((*k as i128).abs() <= bound, || {
                    format!("{}: level {level} in K'_{n} has k = {k} > {bound}", cfg.q)
                });
            }
        }
    }

    let c = RunArtifact::from_json(&construct(&worked()).unwrap().to_json().unwrap())
        .unwrap()
        .construction()
        .unwrap();
    let analysis = analyze(&c).unwrap();
    let k1 = &analysis.regions.k[0];
    v.require(k1.measure() == Measure::new(3, 4), || format!("mu(K_1) = {}", k1.measure()));
    let all_minus_one = k1.members().iter().all(|&x| analysis.t_over_s.displacement[x as usize] == Some(-1));
    v.require(all_minus_one, || "K_1 does not resolve to k = -1 everywhere".into());
    v.finish();
}

#[test]
fn criterion_05_entropy_ledgers() {
    let mut v = Verdict::new(5, "entropy ledgers finite and below per-stage majorants (theta, lambda)");
    for cfg in suite() {
        let run = construct(&cfg).expect("suite run constructs");
        let ledgers = run.ledgers.as_ref().expect("ledgers present");
        let rows = &run.schedule;
        for (name, ledger) in [("P_ST", &ledgers.s_over_t), ("P_TS", &ledgers.t_over_s)] {
            v.require(ledger.entropy.is_finite(), || format!("{}: {name} entropy not finite", cfg.q));
            let total = ledger.distribution.resolved() + ledger.distribution.defect.clone();
            v.require(total == Measure::one(), || format!("{}: {name} resolved + defect = {total}", cfg.q));
            v.require(
                ledger.entropy <= ledger.block_sum + ENTROPY_TOLERANCE
                    && ledger.block_sum <= ledger.majorant_sum + ENTROPY_TOLERANCE,
                || format!("{}: {name} chain {} <= {} <= {}", cfg.q, ledger.entropy, ledger.block_sum, ledger.majorant_sum),
            );
            let block_mass: Measure = ledger.blocks.iter().map(|b| b.mass.clone()).sum();
            v.require(block_mass == ledger.distribution.resolved(), || {
                format!("{}: {name} block masses {block_mass}", cfg.q)
            });
            for b in &ledger.blocks {
                v.require(
                    b.distinct as u128 <= b.count_bound && b.entropy <= b.majorant + ENTROPY_TOLERANCE,
                    || format!("{}: {name} block {}: {} values / {}, H {} vs {}", cfg.q, b.block, b.distinct, b.count_bound, b.entropy, b.majorant),
                );
            }
        }
        for b in &ledgers.s_over_t.blocks {
            let (n, m) = parse_pair(&b.block);
            v.require(b.count_bound == theta(rows, n, m), || format!("{}: theta({n},{m})", cfg.q));
        }
        for b in &ledgers.t_over_s.blocks {
            let n: usize = b.block.trim_start_matches("K'_").parse().expect("block label");
            let expected = if n == 1 { 9 } else { rows[n - 2].lambda };
            v.require(b.count_bound == expected, || format!("{}: lambda_{}", cfg.q, n - 1));
        }
    }
    v.finish();
}

fn parse_pair(label: &str) -> (usize, usize) {
    let inner = label.trim_start_matches('(').trim_end_matches(')');
    let (n, m) = inner.split_once(',').expect("(n,m) label");
    (n.parse().unwrap(), m.parse().unwrap())
}

#[test]
fn criterion_06_remark_example() {
    let mut v = Verdict::new(6, "remark: H(Q) -> (8/3) ln 2 within 1e-6 at depth 20; atom values; finite generator entropies");
    let report = remark_report(REMARK_DEPTH, 4, 0).expect("remark report");
    v.within(REMARK_BUDGET);

    let limit = 8.0 / 3.0 * 2f64.ln();
    v.require((report.q.partial - limit).abs() < REMARK_TOLERANCE, || {
        format!("partial {} vs {limit}", report.q.partial)
    });
    // Independent closed form: Σ_{n≥1} n x^n = x/(1-x)² at x = 1/4, times 3 ln 4.
    let x: f64 = 0.25;
    let closed = 3.0 * 4f64.ln() * x / (1.0 - x).powi(2);
    v.require((closed - limit).abs() < 1e-12, || format!("closed form {closed}"));
    let tail = 3.0 * 4f64.ln() * series_tail(x, REMARK_DEPTH);
    v.require((report.q.partial + tail - closed).abs() < ENTROPY_TOLERANCE, || {
        format!("partial + tail = {}", report.q.partial + tail)
    });

    let atom = |n: usize, j: u8| report.atoms.iter().find(|a| a.carry == n && a.j == j).map(|a| (a.m, a.k));
    v.require(atom(0, 0) == Some((0, 1)), || format!("atom (0,0) = {:?}", atom(0, 0)));
    v.require(atom(0, 1) == Some((1, -1)), || format!("atom (0,1) = {:?}", atom(0, 1)));
    v.require(atom(0, 2) == Some((0, 1)), || format!("atom (0,2) = {:?}", atom(0, 2)));

    for (name, p) in [("u", &report.u), ("v", &report.v)] {
        v.require(p.partial.is_finite() && p.tail >= 0.0, || format!("{name}: {p:?}"));
        v.require((p.partial + p.tail - 2.0 * 2f64.ln()).abs() < ENTROPY_TOLERANCE, || {
            format!("{name}: partial {} + tail {}", p.partial, p.tail)
        });
    }
    v.finish();
}

#[test]
fn criterion_07_growth_bound() {
    let mut v = Verdict::new(7, "growth: exhaustive Z, Z^2 (n<=6, r<=2), 200 dihedral seeds (n<=8), Z reference = 9");
    let z = GrowthGroup::FreeAbelian(1);
    let fixed = GrowthInstance::parse_fixed(&z, "2=5").unwrap();
    let reference = check_bound(&z, &GrowthInstance::new(3, 2, fixed).unwrap()).unwrap();
    v.require(reference.count == 9, || format!("reference count {}", reference.count));

    let mut instances = 0;
    for group in [z, GrowthGroup::FreeAbelian(2)] {
        for report in exhaustive_sweep(&group, 6, 2, 0).expect("sweep within horizon") {
            instances += 1;
            v.require(report.pass, || format!("{report:?}"));
        }
    }
    v.require(instances == 2 * 3 * 126, || format!("{instances} exhaustive instances"));
    let dihedral = random_sweep(&GrowthGroup::InfiniteDihedral, 8, 2, 0..200).expect("sweep within horizon");
    v.require(dihedral.len() == 200, || "200 dihedral seeds".into());
    for report in dihedral.iter().filter(|r| !r.pass) {
        v.require(false, || format!("{report:?}"));
    }
    v.within(GROWTH_BUDGET);
    v.finish();
}

#[test]
fn criterion_08_entropy_zero_witness() {
    let mut v = Verdict::new(8, "first-digit window entropy decreasing, <= ln(d_1 n)/n, < 0.15 at n = 64");
    let run = construct(&worked()).unwrap();
    let c = run.construction().unwrap();
    let rows = window_entropies(c.system(), WITNESS_WINDOW).unwrap();
    v.require(rows.len() == WITNESS_WINDOW as usize, || "window count".into());
    for w in rows.windows(2) {
        v.require(w[1].rate < w[0].rate, || format!("not decreasing at n = {}", w[1].window));
    }
    for r in &rows {
        v.require(r.rate <= r.bound, || format!("n = {}: {} > {}", r.window, r.rate, r.bound));
    }
    let last = rows.last().unwrap();
    v.require(last.rate < WITNESS_CEILING, || format!("H/64 = {}", last.rate));
    v.finish();
}

#[test]
fn criterion_09_rate_report() {
    let mut v = Verdict::new(9, "rate report: (1/nm) H(Q_T^nm) <= (1/m) H(Q_T^m) for every computed pair");
    let run = construct(&worked()).unwrap();
    let rates = run.rates.as_ref().expect("rates present");
    v.require(!rates.pairs.is_empty(), || "no pairs".into());
    for p in &rates.pairs {
        v.require(p.chain_holds(), || format!("chain fails for n={} m={}: {p:?}", p.n, p.m));
        v.require(p.rate_holds(), || format!("rate fails for n={} m={}: {p:?}", p.n, p.m));
    }
    for w in rates.rows.windows(2) {
        v.require(w[1].resolved <= w[0].resolved, || format!("resolved mass grows at n = {}", w[1].n));
    }
    v.finish();
}

#[test]
fn criterion_10_determinism() {
    let mut v = Verdict::new(10, "identical configs give identical bytes; verify reproduces every verdict");
    for cfg in [worked(), config("*:inf", 3), config("2:inf", 0)] {
        let first = construct(&cfg).unwrap().to_json().unwrap();
        let second = construct(&cfg).unwrap().to_json().unwrap();
        v.require(first == second, || format!("{}: artifacts differ", cfg.q));
        let stored = RunArtifact::from_json(&first).unwrap();
        v.require(stored.to_json().unwrap() == first, || format!("{}: re-serialization differs", cfg.q));
        let report = verify(&stored).unwrap();
        v.require(report.reproduced(), || format!("{}: {:?}", cfg.q, report.mismatches));
        let again = verify(&RunArtifact::from_json(&stored.to_json().unwrap()).unwrap()).unwrap();
        v.require(again == report, || format!("{}: verify is not deterministic", cfg.q));
    }
    v.finish();
}
