//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use giurn::analytic::{a_of, c_of, gw_nu0, gw_total_progeny_gf, nonconformist_pmf, ode_residual, q0, q_ell, r_ell};
use giurn::cli::main_with_args;
use giurn::oracle::{fixation_table, single_urn_sequence_law};
use giurn::simulate::{direct_single_urn, estimate_fixation, rubin_single_urn, EstimateMode, Horizon};
use giurn::{ModelParams, RngStream, WeightSequence, WeightTerm};

const GRID: [f64; 9] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let mut r = csv::Reader::from_path(path).expect("csv output");
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
        Csv { header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect()
    }
}

/// Runs the command line with `--out` pointing into the scratch directory.
struct Runner {
    dir: tempfile::TempDir,
    commands: Vec<(String, Vec<String>, PathBuf)>,
}

impl Runner {
    fn run(&mut self, name: &str, args: &[&str]) -> Result<Csv, String> {
        let path = self.dir.path().join(format!("{name}-{}.csv", self.commands.len()));
        let mut argv: Vec<String> = std::iter::once("giurn").chain(args.iter().copied()).map(String::from).collect();
        let code = main_with_args([argv.clone(), vec!["--out".into(), path.display().to_string()]].concat());
        if code != ExitCode::SUCCESS {
            return Err(format!("`{}` exited with {code:?}", argv.join(" ")));
        }
        argv.push("--out".into());
        self.commands.push((name.to_string(), argv, path.clone()));
        Ok(Csv::read(&path))
    }
}

fn tv(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    0.5 * keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let checks = [
        (q0(0.0).unwrap(), 0.5),
        (q0(0.5).unwrap(), 1.0),
        (c_of(0.0).unwrap(), 0.5),
        (c_of(0.5).unwrap(), 1.0),
        (a_of(0.0).unwrap(), 0.0),
        (a_of(0.5).unwrap(), 0.0),
    ];
    let elapsed = start.elapsed();
    let worst = checks.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    outcome(
        worst < 1e-12 && elapsed < Duration::from_millis(1),
        format!("max error {worst:e}, {elapsed:?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst_width: f64 = 0.0;
    let mut failures = Vec::new();
    for p in GRID {
        let t = fixation_table(p, 400).unwrap();
        worst_width = worst_width.max(t.q0_width());
        if t.q0_width() >= 1e-8 || !t.q_contains(0, q0(p).unwrap(), 1e-12) {
            failures.push(format!("q0 at p={p}"));
        }
        for l in 0..=20u32 {
            if !t.q_contains(l as usize, q_ell(p, l).unwrap(), 1e-12) {
                failures.push(format!("q_{l} at p={p}"));
            }
            if !t.r_contains(l as usize, r_ell(p, l).unwrap(), 1e-12) {
                failures.push(format!("r_{l} at p={p}"));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(1),
        format!("max q0 bracket width {worst_width:e}, {} misses {failures:?}, {elapsed:?}", failures.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut q_res: f64 = 0.0;
    let mut ode: f64 = 0.0;
    let mut r_res: f64 = 0.0;
    for p in GRID {
        for l in 1..=50u32 {
            let res = q_ell(p, l).unwrap()
                - (p / 2.0).powi(2) * q_ell(p, l - 1).unwrap()
                - (1.0 - p / 2.0).powi(2) * q_ell(p, l + 1).unwrap()
                - p * (1.0 - p / 2.0) * r_ell(p, l - 1).unwrap();
            q_res = q_res.max(res.abs());
            let rr = r_ell(p, l).unwrap() - p * r_ell(p, l - 1).unwrap() - (1.0 - p) * r_ell(p, l + 1).unwrap();
            r_res = r_res.max(rr.abs());
        }
        let r0 = r_ell(p, 0).unwrap();
        let r1 = r_ell(p, 1).unwrap();
        r_res = r_res.max((r0 - (1.0 + p) / 2.0 - (1.0 - p) / 2.0 * r1).abs());
        r_res = r_res.max((r1 - p / (1.0 - p) * r0).abs());
        for x in [0.0, 0.5, 1.0, 2.0] {
            ode = ode.max(ode_residual(p, x).unwrap().abs());
        }
    }
    outcome(
        q_res < 1e-10 && ode < 1e-10 && r_res < 1e-12,
        format!("q recurrence {q_res:e}, ode {ode:e}, r recurrences {r_res:e}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let params = ModelParams::two_urn_infinite(0.3).unwrap();
    let ruin = estimate_fixation(&params, 100_000, 4, EstimateMode::RuinShortcut).unwrap();
    let bracket = estimate_fixation(&params, 100_000, 40, EstimateMode::Bracket(Horizon::default())).unwrap();
    let elapsed = start.elapsed();
    let target = q0(0.3).unwrap();
    let z = (ruin.point - target).abs() / ruin.stderr;
    let unresolved = bracket.unresolved as f64 / bracket.replicas as f64;
    outcome(
        z <= 4.0 && unresolved < 1e-3 && elapsed < Duration::from_secs(10),
        format!(
            "ruin estimate {:.5} vs {target:.5} ({z:.2} stderr); bracket [{:.5}, {:.5}], unresolved fraction {unresolved}; {elapsed:?}",
            ruin.point, bracket.lower, bracket.upper
        ),
    )
}

fn criterion_5(runner: &mut Runner) -> Outcome {
    let start = Instant::now();
    let t = match runner.run("sweep-p", &["sweep-p", "--points", "51", "--replicas", "10000", "--seed", "0"]) {
        Ok(t) => t,
        Err(e) => return outcome(false, e),
    };
    let elapsed = start.elapsed();
    let q = t.col("q0_analytic");
    let (lo, hi, se) = (t.col("mc_lower"), t.col("mc_upper"), t.col("stderr"));
    let monotone = q.windows(2).all(|w| w[1] >= w[0]);
    let endpoints = (q[0] - 0.5).abs() < 1e-12 && (q[50] - 1.0).abs() < 1e-12;
    let misses: Vec<usize> = (0..q.len()).filter(|&i| q[i] < lo[i] - 4.0 * se[i] || q[i] > hi[i] + 4.0 * se[i]).collect();
    let worst = (0..q.len())
        .map(|i| ((lo[i] - q[i]).max(q[i] - hi[i]).max(0.0)) / se[i])
        .fold(0.0, f64::max);
    outcome(
        t.rows.len() == 51 && monotone && endpoints && misses.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "51 rows, monotone {monotone}, endpoints {endpoints}, worst gap {worst:.2} stderr, misses at rows {misses:?}; {elapsed:?}"
        ),
    )
}

fn doubling_ratio(rate_a: f64, rate_b: f64, rho_a: f64, rho_b: f64) -> f64 {
    (rate_b / rate_a).powf(1.0 / (rho_b / rho_a).log2())
}

fn criterion_6(runner: &mut Runner) -> Outcome {
    let start = Instant::now();
    let main = runner.run("sweep-rho", &["sweep-rho", "--p", "0.3", "--rho-list", "2,8,32,128,1024", "--replicas", "100000", "--seed", "6"]);
    let doubling = runner.run("sweep-rho", &["sweep-rho", "--p", "0.3", "--rho-list", "8,16,32,64,128", "--replicas", "100000", "--seed", "66"]);
    let elapsed = start.elapsed();
    let (main, doubling) = match (main, doubling) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let rho = main.col("rho");
    let dev = main.col("deviation");
    let se = main.col("stderr");
    let mut trend_ok = true;
    for i in 1..dev.len() {
        let noise = 4.0 * (se[i] * se[i] + se[i - 1] * se[i - 1]).sqrt();
        trend_ok &= dev[i] <= dev[i - 1] + noise;
    }
    let last = dev.len() - 1;
    let final_ok = dev[last] < 0.01 + 4.0 * se[last];

    let ai = main.col("ai_draw_rate");
    let per_doubling: Vec<f64> = (1..ai.len()).map(|i| doubling_ratio(ai[i - 1], ai[i], rho[i - 1], rho[i])).collect();
    let ai2 = doubling.col("ai_draw_rate");
    let direct: Vec<f64> = ai2.windows(2).map(|w| w[1] / w[0]).collect();
    let ratios_ok = per_doubling.iter().chain(&direct).all(|r| (0.3..=0.8).contains(r));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    outcome(
        trend_ok && final_ok && ratios_ok && elapsed < Duration::from_secs(300),
        format!(
            "deviations [{}], rho=1024 deviation {:.4} (stderr {:.4}); ai ratio per doubling on the list [{}], on 8..128 [{}]; {elapsed:?}",
            fmt(&dev),
            dev[last],
            se[last],
            fmt(&per_doubling),
            fmt(&direct)
        ),
    )
}

fn criterion_7(runner: &mut Runner) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for urns in [3u32, 5] {
        for p in [0.1, 0.3] {
            let (u, ps) = (urns.to_string(), p.to_string());
            let mc = match runner.run("nonconformist", &["nonconformist", "--urns", &u, "--p", &ps, "--mode", "mc", "--replicas", "100000", "--seed", "7"]) {
                Ok(t) => t,
                Err(e) => return outcome(false, e),
            };
            let exact = nonconformist_pmf(urns, p).unwrap();
            let emp = mc.col("probability");
            let max_n = ((urns - 1) / 2) as usize;
            let support_ok = emp.len() <= max_n + 1 && (max_n as f64) < urns as f64 / (2.0 - 2.0 * p);
            let d = 0.5 * (0..exact.len().max(emp.len()))
                .map(|n| (exact.get(n).unwrap_or(&0.0) - emp.get(n).unwrap_or(&0.0)).abs())
                .sum::<f64>();
            pass &= support_ok && d < 0.01;
            notes.push(format!("U={urns} p={p}: TV {d:.4}{}", if support_ok { "" } else { " SUPPORT VIOLATED" }));
        }
    }
    outcome(pass, notes.join("; "))
}

fn table(vs: &[f64]) -> WeightSequence {
    WeightSequence::table(vs.iter().map(|&v| WeightTerm::new(0.0, v).unwrap()).collect()).unwrap()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let horizon = 20;
    let increasing = table(&(0..=horizon).map(|i| i as f64).collect::<Vec<_>>());
    let decreasing = table(&(0..=horizon).map(|i| -(i as f64)).collect::<Vec<_>>());
    let running_min = table(&[5.0, 4.0, 6.0, 1.0, 3.0, 2.0, 7.0, 0.5]);
    let mut counts = [[0u32; 3]; 2];
    for (s, sampler) in [direct_single_urn::<rand_chacha::ChaCha8Rng>, rubin_single_urn].iter().enumerate() {
        for i in 0..10_000u64 {
            let mut rng = RngStream::new(8 + s as u64, i).rng();
            let a = sampler(&increasing, horizon, &mut rng).unwrap();
            counts[s][0] += a.iter().all(|&c| c == a[0]) as u32;
            let b = sampler(&decreasing, horizon, &mut rng).unwrap();
            counts[s][1] += b.chunks(2).all(|pair| pair[0] != pair[1]) as u32;
            let c = sampler(&running_min, 6, &mut rng).unwrap();
            counts[s][2] += (c.iter().filter(|&&x| x == 0).count() == 3) as u32;
        }
    }
    let elapsed = start.elapsed();
    let all = counts.iter().flatten().all(|&c| c == 10_000);
    outcome(
        all && elapsed < Duration::from_secs(5),
        format!(
            "direct (a,b,c) = {:?}, rubin (a,b,c) = {:?} out of 10000; {elapsed:?}",
            counts[0], counts[1]
        ),
    )
}

fn criterion_9(runner: &mut Runner) -> Outcome {
    let weights = "table:1@0,2@0,4@0,8@0";
    let w = WeightSequence::table(
        [1.0, 2.0, 4.0, 8.0].iter().map(|&u| WeightTerm::from_magnitude(u, 0.0).unwrap()).collect(),
    )
    .unwrap();
    let exact = single_urn_sequence_law(&w, 4).unwrap();
    let mut laws = Vec::new();
    for (sampler, seed) in [("rubin", "9"), ("direct", "99")] {
        let t = match runner.run("single-urn", &["single-urn", "--weights", weights, "--sampler", sampler, "--horizon", "4", "--replicas", "100000", "--seed", seed]) {
            Ok(t) => t,
            Err(e) => return outcome(false, e),
        };
        let freq = t.col("frequency");
        let law: BTreeMap<Vec<usize>, f64> = t
            .rows
            .iter()
            .zip(freq)
            .map(|(r, f)| (r[0].chars().map(|c| (c == 'W') as usize).collect(), f))
            .collect();
        laws.push(law);
    }
    let rubin_exact = tv(&laws[0], &exact);
    let direct_exact = tv(&laws[1], &exact);
    let rubin_direct = tv(&laws[0], &laws[1]);
    outcome(
        rubin_exact < 0.01 && direct_exact < 0.01 && exact.len() == 16,
        format!(
            "TV(rubin, exact) {rubin_exact:.4}, TV(direct, exact) {direct_exact:.4}, TV(rubin, direct) {rubin_direct:.4} over {} sequences",
            exact.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut fixed: f64 = 0.0;
    for p in GRID {
        let nu0 = gw_nu0(p).unwrap();
        for i in 0..=40 {
            let nu = nu0 * i as f64 / 40.0;
            let g = gw_total_progeny_gf(p, nu).unwrap();
            fixed = fixed.max((g - nu * (1.0 - p) / (1.0 - p * g)).abs());
        }
    }
    let at_one = [0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|&p| (gw_total_progeny_gf(p, 1.0).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(fixed < 1e-12 && at_one < 1e-12, format!("fixed-point residual {fixed:e}, |g(p,1)-1| {at_one:e}"))
}

fn criterion_11(runner: &mut Runner) -> Outcome {
    let mut extra = Runner { dir: tempfile::tempdir().unwrap(), commands: Vec::new() };
    for args in [vec!["analytic", "--p", "0.3", "--ell-max", "20"], vec!["oracle", "--p", "0.3"]] {
        if let Err(e) = extra.run("det", &args) {
            return outcome(false, e);
        }
    }
    let mut mismatched = Vec::new();
    let commands: Vec<_> = runner.commands.iter().chain(&extra.commands).cloned().collect();
    for (name, argv, first) in &commands {
        let second = first.with_extension("rerun.csv");
        let mut args = argv.clone();
        args.push(second.display().to_string());
        if main_with_args(args) != ExitCode::SUCCESS {
            mismatched.push(format!("{name} failed on rerun"));
            continue;
        }
        if std::fs::read(first).unwrap() != std::fs::read(&second).unwrap() {
            mismatched.push(name.clone());
        }
    }
    outcome(
        mismatched.is_empty() && !commands.is_empty(),
        format!("{} commands rerun, mismatches {mismatched:?}", commands.len()),
    )
}

fn main() -> ExitCode {
    let mut runner = Runner { dir: tempfile::tempdir().unwrap(), commands: Vec::new() };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "endpoint identities", criterion_1()),
        (2, "oracle containment", criterion_2()),
        (3, "recurrence and ODE residuals", criterion_3()),
        (4, "Monte Carlo fixation at p=0.3", criterion_4()),
        (5, "fixation curve over 51 grid points", criterion_5(&mut runner)),
        (6, "convergence in rho", criterion_6(&mut runner)),
        (7, "non-conformist law", criterion_7(&mut runner)),
        (8, "single-urn lemma", criterion_8()),
        (9, "exponential-clock equivalence", criterion_9(&mut runner)),
        (10, "Galton-Watson generating function", criterion_10()),
        (11, "byte determinism", criterion_11(&mut runner)),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as u32;
    }
    println!("{} of {} criteria passed", results.len() as u32 - failed, results.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
