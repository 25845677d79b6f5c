//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use flola::lola::{noise_bound_rhs, nonlinearity_score, GradientEstimate, Neighborhood};
use flola::noise::{
    expected_noise_sum_published, simulate_noise_sum, variance_noise_sum_published, zeta_stats,
};
use flola::sampler::compute_scores;
use flola::testbed::{
    make_evaluator, nn_distance_stats, peaks, peaks_nonlinear_region, peaks_space, region_fraction,
    TestFunction,
};
use flola::voronoi::{assign_owners, build_pool, estimate_volumes};
use flola::{
    propose_next, rank, Design, DesignSpace, EvaluatedPoint, Execution, FnEvaluator, RunState,
    SamplerConfig, Strategy,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Pinned thresholds.
const LINEAR_SCORE_MAX: f64 = 1e-9;
const VOLUME_TOL: f64 = 0.01;
const STD_ERRORS: f64 = 3.0;
const FORMULA_REL_TOL: f64 = 1e-9;
const AFFINE_H_TOL: f64 = 1e-9;
const FIG_BUDGET: usize = 120;
const FIG_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(label: &str, start: Instant, limit: Duration) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el < limit, || {
        format!("{label} took {el:?}, limit {limit:?}")
    })
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flola"))
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "flola {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

// 1 -------------------------------------------------------------------------

fn linear_run(strategy: Strategy) -> Result<(Design, Vec<flola::ScoreTable>), String> {
    let space = DesignSpace::new(vec![-1.0, 0.0], vec![2.0, 4.0]).unwrap();
    let mut cfg = SamplerConfig::new(space, 30, 2024);
    cfg.strategy = strategy;
    let mut f = make_evaluator(
        TestFunction::Linear {
            intercept: 1.5,
            coefficients: vec![-2.0, 0.75],
        },
        0.0,
        cfg.seed,
    )
    .unwrap();
    let out = flola::run(cfg, &mut f).map_err(|e| e.to_string())?;
    Ok((out.design, out.history))
}

fn ac1_linear_exactness() -> Outcome {
    let start = Instant::now();
    let (hybrid, history) = linear_run(Strategy::Hybrid)?;
    let worst = history
        .iter()
        .flat_map(|t| t.e.iter().copied())
        .fold(0.0, f64::max);
    ensure(worst <= LINEAR_SCORE_MAX, || format!("max E = {worst:e}"))?;
    let (voronoi, _) = linear_run(Strategy::VoronoiOnly)?;
    ensure(hybrid.len() == 30, || {
        format!("design size {}", hybrid.len())
    })?;
    for (a, b) in hybrid.points().iter().zip(voronoi.points()) {
        ensure(a.coords == b.coords, || {
            format!("proposals differ: {:?} vs {:?}", a.coords, b.coords)
        })?;
    }
    within_time("linear runs", start, Duration::from_secs(5))?;
    Ok(format!(
        "max E = {worst:.2e} over {} iterations; 30/30 points equal to pure-Voronoi run; {:?}",
        history.len(),
        start.elapsed()
    ))
}

// 2 -------------------------------------------------------------------------

fn ac2_voronoi_accuracy() -> Outcome {
    let start = Instant::now();
    let space = DesignSpace::unit(1).unwrap();
    let mut design = Design::new(space.clone());
    for x in [0.0, 0.4, 1.0] {
        design.push(EvaluatedPoint::new(vec![x], 0.0, 0)).unwrap();
    }
    // analytic cells: boundaries at the midpoints 0.2 and 0.7
    let analytic = [0.2, 0.5, 0.3];
    let mut mean_v = [0.0; 3];
    let mut mean_max_err = 0.0;
    for seed in 0..20u64 {
        let pool = assign_owners(build_pool(&space, 100_000, seed).unwrap(), &design).unwrap();
        let v = estimate_volumes(&pool, 3).unwrap().v;
        let err = v
            .iter()
            .zip(analytic)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        mean_max_err += err / 20.0;
        for k in 0..3 {
            mean_v[k] += v[k] / 20.0;
        }
    }
    ensure(mean_max_err <= VOLUME_TOL, || {
        format!("mean max error {mean_max_err}")
    })?;
    within_time("volume estimation", start, Duration::from_secs(5))?;
    Ok(format!(
        "mean v = ({:.4}, {:.4}, {:.4}), mean max |err| = {mean_max_err:.2e}; {:?}",
        mean_v[0],
        mean_v[1],
        mean_v[2],
        start.elapsed()
    ))
}

// 3 -------------------------------------------------------------------------

fn ac3_zeta_statistics() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (k, lambda) in [0.25, 1.0, 4.0].into_iter().enumerate() {
        let (mean, var) = zeta_stats(lambda).unwrap();
        let mc = simulate_noise_sum(1, lambda, 1_000_000, 300 + k as u64).unwrap();
        let zm = (mc.stats.mean - mean) / mc.mean_std_error;
        let zv = (mc.stats.variance - var) / mc.variance_std_error;
        ensure(zm.abs() <= STD_ERRORS && zv.abs() <= STD_ERRORS, || {
            format!("λ={lambda}: mean z={zm:.2}, variance z={zv:.2}")
        })?;
        lines.push(format!("λ={lambda}: z_mean={zm:+.2} z_var={zv:+.2}"));
    }
    within_time("zeta simulation", start, Duration::from_secs(10))?;
    Ok(format!("{}; {:?}", lines.join(", "), start.elapsed()))
}

// 4 -------------------------------------------------------------------------

/// `(T, λ, E[X], Var[X])`, the published expressions evaluated once in
/// 30-digit arithmetic.
#[allow(clippy::excessive_precision)]
const PUBLISHED_VALUES: [(usize, f64, f64, f64); 9] = [
    (1, 0.5, 0.48097301150712215123, 1.3359281266549711334),
    (1, 1.0, 0.68019855600880285506, 2.9536037203153837142),
    (1, 2.0, 0.96194602301424430246, 6.305658529634128836),
    (2, 0.5, 1.6421445790230471575, 2.4543277728975999263),
    (2, 1.0, 2.3223431350318500126, 5.8706015688094441551),
    (2, 2.0, 3.284289158046094315, 13.10160024963649402),
    (3, 0.5, 3.5938957326667938641, 6.4159501093365935882),
    (3, 1.0, 5.0825360868921710134, 14.937155597114603891),
    (3, 2.0, 7.1877914653335877281, 32.851591902679962081),
];

fn ac4_formula_regression() -> Outcome {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut worst: f64 = 0.0;
    for (t, lambda, mean, var) in PUBLISHED_VALUES {
        let m = expected_noise_sum_published(t, lambda).unwrap();
        let v = variance_noise_sum_published(t, lambda).unwrap();
        worst = worst.max(rel(m, mean)).max(rel(v, var));
    }
    ensure(worst <= FORMULA_REL_TOL, || {
        format!("worst relative error {worst:e}")
    })?;

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    run_bin(&[
        "noise-report",
        "--t-max",
        "1",
        "--lambda-list",
        "1",
        "--draws",
        "1000000",
        "--seed",
        "5",
        "--out",
        csv.to_str().unwrap(),
    ])?;
    let text = fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let (published, mc, se) = (col("published_mean"), col("mc_mean"), col("mc_mean_se"));
    ensure((published - 0.680_198_556_008_802_9).abs() < 1e-12, || {
        format!("report published mean {published}")
    })?;
    let (zeta_mean, _) = zeta_stats(1.0).unwrap();
    ensure((mc - zeta_mean).abs() <= STD_ERRORS * se, || {
        format!("report MC mean {mc} ± {se}")
    })?;
    // the gap between the published mean and the simulated mean must be visible
    ensure((mc - published).abs() > 100.0 * se, || {
        format!("discrepancy not present: {mc} vs {published}")
    })?;
    Ok(format!(
        "9 values within {worst:.1e} relative; report T=1 λ=1: published {published:.6} vs MC {mc:.4} ± {se:.1e} (discrepancy present)"
    ))
}

// 5 -------------------------------------------------------------------------

/// Random value on the 2^-20 grid so every sum and product below is exact.
fn on_grid(x: f64) -> f64 {
    (x * 1_048_576.0).round() / 1_048_576.0
}

fn ac5_noise_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut max_slack: f64 = 0.0;
    let mut tight = 0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=4);
        let n = rng.random_range(3..=10);
        let space = DesignSpace::unit(dim).unwrap();
        let lambda = rng.random_range(0.01..4.0f64);
        let mut det = Design::new(space.clone());
        let mut noisy = Design::new(space);
        let mut eps = Vec::new();
        while det.len() < n {
            let coords: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(0..=1024) as f64 / 1024.0)
                .collect();
            let f = on_grid(rng.random_range(-8.0..8.0));
            let e = on_grid(lambda.sqrt() * rng.sample::<f64, _>(StandardNormal));
            if det.push(EvaluatedPoint::new(coords.clone(), f, 0)).is_ok() {
                noisy.push(EvaluatedPoint::new(coords, f + e, 0)).unwrap();
                eps.push(e);
            }
        }
        let r = rng.random_range(0..n);
        let t = rng.random_range(1..n);
        let others: Vec<usize> = (0..n).filter(|&i| i != r).collect();
        let neighbors: Vec<usize> = sample(&mut rng, others.len(), t)
            .into_iter()
            .map(|k| others[k])
            .collect();
        let nb = Neighborhood {
            ref_index: r,
            neighbor_indices: neighbors.clone(),
        };
        let g = GradientEstimate {
            g: (0..dim)
                .map(|_| rng.random_range(-8192..=8192) as f64 / 1024.0)
                .collect(),
            residual_norm: 0.0,
        };
        let zeta: Vec<f64> = neighbors.iter().map(|&i| (eps[i] - eps[r]).abs()).collect();
        let bound = noise_bound_rhs(nonlinearity_score(&det, &nb, &g), &zeta).unwrap();
        let score = nonlinearity_score(&noisy, &nb, &g);
        ensure(score <= bound, || {
            format!("noisy score {score} exceeds bound {bound}")
        })?;
        max_slack = max_slack.max(bound - score);
        if score == bound {
            tight += 1;
        }
    }
    Ok(format!(
        "100/100 instances satisfy the bound exactly ({tight} tight, max slack {max_slack:.3})"
    ))
}

// 6 -------------------------------------------------------------------------

fn ac6_peaks_illustration() -> Outcome {
    let region = peaks_nonlinear_region();
    let mut rf = [0.0; 2];
    let mut cv = [0.0; 2];
    let mut slowest = Duration::ZERO;
    for (k, lambda) in [0.0, 1.0].into_iter().enumerate() {
        for seed in FIG_SEEDS {
            let start = Instant::now();
            let mut cfg = SamplerConfig::new(peaks_space(), FIG_BUDGET, seed);
            cfg.lambda = lambda;
            let mut f = make_evaluator(TestFunction::Peaks, lambda, seed).unwrap();
            let design = flola::run(cfg, &mut f).map_err(|e| e.to_string())?.design;
            within_time("peaks run", start, Duration::from_secs(60))?;
            slowest = slowest.max(start.elapsed());
            rf[k] += region_fraction(&design, &region) / FIG_SEEDS.len() as f64;
            cv[k] += nn_distance_stats(&design).unwrap().1 / FIG_SEEDS.len() as f64;
        }
    }
    ensure(rf[0] > rf[1], || {
        format!(
            "region fraction λ=0 {:.4} not above λ=1 {:.4}",
            rf[0], rf[1]
        )
    })?;
    ensure(cv[1] < cv[0], || {
        format!("NN-distance CV λ=1 {:.4} not below λ=0 {:.4}", cv[1], cv[0])
    })?;
    Ok(format!(
        "region fraction λ=0 {:.4} > λ=1 {:.4}; NN CV λ=1 {:.4} < λ=0 {:.4}; slowest run {slowest:?}",
        rf[0], rf[1], cv[1], cv[0]
    ))
}

// 7 -------------------------------------------------------------------------

fn ac7_determinism_replay() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    let common = [
        "run",
        "--function",
        "peaks",
        "--dim",
        "2",
        "--budget",
        "120",
        "--noise-lambda",
        "0",
        "--seed",
        "42",
    ];
    let (r0, r1, r2) = (p("r0"), p("r1"), p("r2"));
    run_bin(&[&common[..], &["--out", &r0]].concat())?;
    run_bin(&[&common[..], &["--out", &r1]].concat())?;
    let samples = |dir: &str| fs::read(Path::new(dir).join("samples.csv")).unwrap();
    let batch = samples(&r0);
    ensure(batch == samples(&r1), || "repeated runs differ".into())?;
    ensure(
        String::from_utf8_lossy(&batch).lines().count() == 121,
        || "samples.csv is not 120 rows".into(),
    )?;

    let cfg = Path::new(&r0).join("run.json");
    run_bin(&["run", "--config", cfg.to_str().unwrap(), "--out", &r2])?;
    ensure(batch == samples(&r2), || {
        "re-run from run.json differs".into()
    })?;

    let at = p("asktell");
    run_bin(&[
        "init", "--dim", "2", "--lower", "-3", "--upper", "3", "--budget", "120", "--seed", "42",
        "--out", &at,
    ])?;
    let dir = Path::new(&at);
    for _ in 0..120 {
        run_bin(&["ask", &at])?;
        let prop = fs::read_to_string(dir.join("proposed.csv")).unwrap();
        let row: Vec<f64> = prop
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        let y = peaks(row[0], row[1]);
        let line = prop.lines().nth(1).unwrap();
        fs::write(
            dir.join("observed.csv"),
            format!("x1,x2,y\n{line},{}\n", flola_cli::files::fmt_f64(y)),
        )
        .unwrap();
        run_bin(&["tell", &at])?;
    }
    ensure(samples(&at) == batch, || {
        "ask/tell replay differs from batch run".into()
    })?;
    Ok(
        "two runs byte-identical, run.json re-run identical, 120-point ask/tell replay identical"
            .into(),
    )
}

// 8 -------------------------------------------------------------------------

fn ac8_affine_invariance() -> Outcome {
    let cfg = SamplerConfig::new(peaks_space(), FIG_BUDGET, 8);
    let mut state = RunState::new(cfg.clone()).unwrap();
    let mut f = FnEvaluator(|x: &[f64]| peaks(x[0], x[1]));
    let mut checked = 0;
    let mut worst_h: f64 = 0.0;
    while !state.is_complete() {
        if state.design.len() >= state.initial_size() {
            let it = state.iteration + 1;
            let transformed = state.design.map_responses(|y| 3.0 * y + 7.0);
            let (a, pa) = compute_scores(&state.design, &cfg, it, Execution::default()).unwrap();
            let (b, pb) = compute_scores(&transformed, &cfg, it, Execution::default()).unwrap();
            let dh =
                a.h.iter()
                    .zip(&b.h)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
            worst_h = worst_h.max(dh);
            ensure(dh <= AFFINE_H_TOL, || {
                format!("iteration {it}: h moved by {dh:e}")
            })?;
            ensure(
                rank(&a.h, &a.v).unwrap() == rank(&b.h, &b.v).unwrap(),
                || format!("iteration {it}: ranking changed"),
            )?;
            let xa = propose_next(&state.design, &pa, &a).unwrap();
            let xb = propose_next(&transformed, &pb, &b).unwrap();
            ensure(xa == xb, || {
                format!("iteration {it}: proposal {xa:?} vs {xb:?}")
            })?;
            checked += 1;
        }
        state.step(&mut f).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{checked} iterations: ranking and proposal unchanged, max |Δh| = {worst_h:.1e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 linear exactness", ac1_linear_exactness),
        ("AC2 Voronoi Monte-Carlo accuracy", ac2_voronoi_accuracy),
        (
            "AC3 folded-normal noise term statistics",
            ac3_zeta_statistics,
        ),
        ("AC4 noise-sum formula regression", ac4_formula_regression),
        ("AC5 noisy score bound", ac5_noise_bound),
        (
            "AC6 peaks: noise-free focuses, noisy explores",
            ac6_peaks_illustration,
        ),
        (
            "AC7 determinism and ask/tell replay",
            ac7_determinism_replay,
        ),
        ("AC8 affine invariance of ranking", ac8_affine_invariance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
