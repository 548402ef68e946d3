//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Desk-scale settings throughout (N = 2000, mean degree 10, T = 1e7,
//! window 1000) except the ER statistics and throughput checks, which use N = 10^4.

use std::fs;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use num_traits::Signed;
use rand::{Rng, SeedableRng};

use deffuant::cli_io::{self, Command, Settings};
use deffuant::dynamics::{self, pair_update};
use deffuant::measure::{detect_peaks, mass_split, symmetry_l1, PeakParams};
use deffuant::network;
use deffuant::sweep::{self, SweepOutput};
use deffuant::{MutationProfile, SimConfig, SimRng, SweepPlan};

const DESK_N: usize = 2000;
const DESK_DEGREE: f64 = 10.0;
const DESK_STEPS: u64 = 10_000_000;
const DESK_WINDOW: u64 = 1000;
const REPLICATES: usize = 5;
const MASTER_SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

/// Desk-scale plan for a single tolerance with `REPLICATES` networks.
fn desk_plan(d: f64, profile: MutationProfile) -> SweepPlan {
    let mut base = SimConfig::new(d, DESK_STEPS, 0);
    base.window = DESK_WINDOW;
    SweepPlan {
        d_start: d,
        d_end: d,
        d_step: 0.05,
        replicates: REPLICATES,
        base_config: base,
        nodes: DESK_N,
        avg_degree: DESK_DEGREE,
        profile,
        master_seed: MASTER_SEED,
    }
}

fn desk_sweep(d: f64, profile: MutationProfile) -> SweepOutput<f64> {
    sweep::execute(&desk_plan(d, profile), workers()).expect("desk sweep")
}

fn c1_conservation() -> Outcome {
    let started = Instant::now();
    let mut rng = SimRng::seed_from_u64(1);
    let mut worst_sum = 0.0f64;
    let mut worst_gap = 0.0f64;
    for _ in 0..1_000_000 {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let d: f64 = rng.random_range(1e-6..=1.0);
        let mu: f64 = rng.random_range(1e-6..=0.5);
        let (na, nb) = pair_update(a, b, d, mu);
        worst_sum = worst_sum.max((na + nb - (a + b)).abs());
        let expected_gap = if (a - b).abs() < d {
            (1.0 - 2.0 * mu).abs() * (a - b).abs()
        } else {
            (a - b).abs()
        };
        worst_gap = worst_gap.max(((na - nb).abs() - expected_gap).abs());
    }
    // exact arithmetic: the same update over rationals
    let mut exact_ok = true;
    for _ in 0..100_000 {
        let r = |rng: &mut SimRng, hi: i128| Ratio::new(rng.random_range(0..=hi), 1_000_000i128);
        let (a, b) = (r(&mut rng, 1_000_000), r(&mut rng, 1_000_000));
        let d = r(&mut rng, 1_000_000) + Ratio::new(1, 1_000_000);
        let mu = r(&mut rng, 500_000).max(Ratio::new(1, 1_000_000));
        let (na, nb) = pair_update(a, b, d, mu);
        let gap = (a - b).abs();
        let factor = if gap < d {
            (Ratio::from_integer(1) - mu * 2).abs()
        } else {
            Ratio::from_integer(1)
        };
        exact_ok &= na + nb == a + b && (na - nb).abs() == factor * gap;
    }
    let elapsed = started.elapsed();
    outcome(
        worst_sum <= 1e-12 && worst_gap <= 1e-12 && exact_ok && elapsed < Duration::from_secs(1),
        format!(
            "max |sum drift| {worst_sum:.1e}, max gap error {worst_gap:.1e}, exact rationals {}, {:.3}s",
            if exact_ok { "ok" } else { "MISMATCH" },
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_mean_preservation() -> Outcome {
    let started = Instant::now();
    let mut profiles = Vec::new();
    for alpha in [-0.02, -0.01, 0.01, 0.02] {
        profiles.push(MutationProfile::asymmetric(0.01, alpha).unwrap());
    }
    for alpha in [-0.04, -0.02, 0.02, 0.04] {
        profiles.push(MutationProfile::symmetric(0.01, alpha).unwrap());
    }
    const POINTS: usize = 1_000_000;
    let mut worst = 0.0f64;
    let mut analytic_ok = true;
    for p in &profiles {
        analytic_ok &= p.mean_rate() == 0.01;
        // midpoint rule on a uniform grid
        let sum: f64 = (0..POINTS)
            .map(|i| p.evaluate((i as f64 + 0.5) / POINTS as f64).unwrap())
            .sum();
        worst = worst.max((sum / POINTS as f64 - p.mean_rate()).abs());
    }
    let elapsed = started.elapsed();
    outcome(
        analytic_ok && worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "8 profiles, analytic mean 0.01 {}, max quadrature error {worst:.1e}, {:.3}s",
            if analytic_ok { "ok" } else { "WRONG" },
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_consensus() -> Outcome {
    let started = Instant::now();
    let g = network::generate_er(DESK_N, DESK_DEGREE, &mut SimRng::seed_from_u64(MASTER_SEED)).unwrap();
    let giant = g.giant_component();
    let profile = MutationProfile::uniform(0.0).unwrap();
    let out = dynamics::run(&g, &SimConfig::new(1.0, DESK_STEPS, 3), &profile).unwrap();
    let vals: Vec<f64> = giant.iter().map(|&u| out.state.opinions[u]).collect();
    let gap = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    let elapsed = started.elapsed();
    outcome(
        gap < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "giant component {} nodes, max-min gap {gap:.2e}, {:.2}s",
            giant.len(),
            elapsed.as_secs_f64()
        ),
    )
}

struct UniformResults {
    d_values: Vec<f64>,
    outputs: Vec<SweepOutput<f64>>,
    elapsed: Duration,
}

fn c4_peak_law(res: &UniformResults) -> Outcome {
    let params = PeakParams::default();
    let mut pass = res.elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for (d, out) in res.d_values.iter().zip(&res.outputs) {
        let target = (1.0 / (2.0 * d)).round();
        let counts: Vec<usize> = out
            .results
            .iter()
            .map(|r| detect_peaks(&r.histogram.density::<f64>(), &params).count())
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        pass &= (mean - target).abs() <= 1.0;
        parts.push(format!("d={d}: {counts:?} mean {mean:.1} vs {target}"));
    }
    parts.push(format!("{:.1}s", res.elapsed.as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn c5_equal_heights(res: &UniformResults) -> Outcome {
    let d = res.d_values[0];
    let density = &res.outputs[0].map.densities[0];
    let peaks = detect_peaks(density, &PeakParams::default());
    let interior: Vec<f64> = peaks
        .peaks
        .iter()
        .filter(|p| p.location > d / 2.0 && p.location < 1.0 - d / 2.0)
        .map(|p| p.height)
        .collect();
    if interior.len() < 2 {
        return outcome(false, format!("only {} interior peaks", interior.len()));
    }
    let ratio = interior.iter().cloned().fold(f64::MIN, f64::max)
        / interior.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        ratio < 1.5,
        format!(
            "d={d}: {} interior peaks at {:?}, max/min height {ratio:.3}",
            interior.len(),
            peaks.locations()
        ),
    )
}

fn c6_symmetry(sym: &SweepOutput<f64>, asym: &SweepOutput<f64>) -> Outcome {
    let s = symmetry_l1(&sym.map.densities[0]);
    let a = symmetry_l1(&asym.map.densities[0]);
    let per_rep: Vec<String> = sym
        .results
        .iter()
        .map(|r| format!("{:.2}", symmetry_l1(&r.histogram.density::<f64>())))
        .collect();
    outcome(
        s < 0.15 && a > 0.15,
        format!(
            "d=0.1, R={REPLICATES}: sym(alpha=-0.02) {s:.3} (need < 0.15; per replicate [{}]), asym(alpha=0.02) {a:.3} (need > 0.15)",
            per_rep.join(", ")
        ),
    )
}

fn c7_mass_shift(asym: &SweepOutput<f64>) -> Outcome {
    let (lower, upper) = mass_split(&asym.map.densities[0]);
    outcome(
        upper < lower,
        format!("asym alpha=0.02, d=0.1: mass below 0.5 = {lower:.3}, above = {upper:.3}"),
    )
}

fn c8_schedule_independence() -> Outcome {
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let explicit = |workers: usize| -> Vec<(String, String)> {
        [
            ("n", DESK_N.to_string()),
            ("degree", "10".into()),
            ("d-start", "0.1".into()),
            ("d-end", "0.5".into()),
            ("d-step", "0.05".into()),
            ("steps", "1000000".into()),
            ("replicates", "2".into()),
            ("seed", "99".into()),
            ("workers", workers.to_string()),
            ("out", root.path().display().to_string()),
            ("name", format!("w{workers}")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    };
    let mut files = Vec::new();
    for w in [1, 4, 8] {
        let s = Settings::resolve(Command::Sweep, explicit(w), None).unwrap();
        let report = cli_io::cmd_sweep(&s).unwrap();
        let dir = report.dir.unwrap();
        files.push((
            fs::read(dir.join("bifurcation.csv")).unwrap(),
            fs::read(dir.join("peaks.csv")).unwrap(),
        ));
    }
    let columns = String::from_utf8_lossy(&files[0].0)
        .lines()
        .next()
        .map_or(0, |h| h.split(',').count() - 1);
    let identical = files.windows(2).all(|w| w[0] == w[1]);
    let elapsed = started.elapsed();
    outcome(
        identical && columns == 9 && elapsed < Duration::from_secs(120),
        format!(
            "{columns} d columns, workers 1/4/8 byte-identical: {identical}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c9_er_statistics() -> Outcome {
    let n = 10_000usize;
    let p = 10.0 / (n - 1) as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    let mean_expected = pairs * p;
    let sd_single = (pairs * p * (1.0 - p)).sqrt();
    let sd_mean = sd_single / 10.0;
    let total: usize = (0..100u64)
        .map(|seed| {
            let mut rng = SimRng::seed_from_u64(sweep::derive_seed(MASTER_SEED, seed, 0, sweep::StreamTag::Network));
            network::generate_er(n, 10.0, &mut rng).unwrap().edge_count()
        })
        .sum();
    let mean = total as f64 / 100.0;
    let z = (mean - mean_expected) / sd_mean;
    outcome(
        z.abs() <= 3.0,
        format!(
            "mean edges {mean:.1} vs {mean_expected:.1}, z = {z:.2} (sd of the 100-graph mean {sd_mean:.1})"
        ),
    )
}

fn c10_throughput() -> Outcome {
    let g = network::generate_er(10_000, 10.0, &mut SimRng::seed_from_u64(7)).unwrap();
    let profile = MutationProfile::uniform(0.01).unwrap();
    let started = Instant::now();
    let out = dynamics::run(&g, &SimConfig::new(0.1, 50_000_000, 8), &profile).unwrap();
    let elapsed = started.elapsed();
    outcome(
        elapsed < Duration::from_secs(60) && out.stats.steps == 50_000_000,
        format!(
            "N=10^4, T=5e7: {:.2}s ({:.1} M events/s)",
            elapsed.as_secs_f64(),
            50.0 / elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name: &'static str, o: Outcome| {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    record("1 conservation & contraction", c1_conservation());
    record("2 mean preservation", c2_mean_preservation());
    record("3 pure-Deffuant consensus", c3_consensus());

    let started = Instant::now();
    let d_values = vec![0.1, 0.15, 0.25, 0.4];
    let uniform = MutationProfile::uniform(0.01).unwrap();
    let outputs = d_values.iter().map(|&d| desk_sweep(d, uniform)).collect();
    let uniform_results = UniformResults {
        d_values,
        outputs,
        elapsed: started.elapsed(),
    };
    record("4 peak-count law", c4_peak_law(&uniform_results));
    record("5 uniform peak heights", c5_equal_heights(&uniform_results));

    let sym = desk_sweep(0.1, MutationProfile::symmetric(0.01, -0.02).unwrap());
    let asym = desk_sweep(0.1, MutationProfile::asymmetric(0.01, 0.02).unwrap());
    record("6 symmetric-profile symmetry", c6_symmetry(&sym, &asym));
    record("7 asymmetric mass shift", c7_mass_shift(&asym));

    record("8 determinism & schedule independence", c8_schedule_independence());
    record("9 ER statistics", c9_er_statistics());
    record("10 throughput", c10_throughput());

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
