use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use flola::noise::{simulate_noise_sum, zeta_stats, NoiseSumStats};
use flola::seed::derive_seed;
use flola::testbed::{make_evaluator, TestFunction};
use flola::{DesignSpace, Execution, InitialScheme, RunState, SamplerConfig, Strategy};

use crate::args::{FunctionName, InitArgs, NoiseReportArgs, RunArgs, SamplerArgs, StrategyArg};
use crate::files::{self, fmt_f64, DirLock, RunMeta};
use crate::CliError;

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{flag}: '{v}' is not a number")))
        })
        .collect()
}

fn bound(flag: &str, text: Option<&str>, default: f64, dim: usize) -> Result<Vec<f64>, CliError> {
    match text {
        None => Ok(vec![default; dim]),
        Some(t) => {
            let vals = parse_list(flag, t)?;
            match vals.len() {
                1 => Ok(vec![vals[0]; dim]),
                n if n == dim => Ok(vals),
                n => Err(CliError::Usage(format!(
                    "--{flag}: expected 1 or {dim} values, got {n}"
                ))),
            }
        }
    }
}

fn parse_initial(text: Option<&str>, dim: usize) -> Result<InitialScheme, CliError> {
    let Some(text) = text else {
        return Ok(InitialScheme::default_for(dim));
    };
    match text.split_once(':') {
        None if text == "corners_center" => Ok(InitialScheme::CornersCenter),
        None if text == "latin_hypercube" => Ok(InitialScheme::LatinHypercube { size: 5 * dim }),
        Some(("latin_hypercube", n)) => n
            .parse()
            .map(|size| InitialScheme::LatinHypercube { size })
            .map_err(|_| CliError::Usage(format!("--initial: bad size '{n}'"))),
        _ => Err(CliError::Usage(format!(
            "--initial: expected corners_center, latin_hypercube or latin_hypercube:SIZE, got '{text}'"
        ))),
    }
}

/// Builds and validates the sampler configuration shared by `run` and `init`.
fn sampler_config(
    args: &SamplerArgs,
    dim: usize,
    default_bounds: (f64, f64),
) -> Result<SamplerConfig, CliError> {
    let budget = args
        .budget
        .ok_or_else(|| CliError::Usage("--budget is required".into()))?;
    let seed = args
        .seed
        .ok_or_else(|| CliError::Usage("--seed is required".into()))?;
    let lower = bound("lower", args.lower.as_deref(), default_bounds.0, dim)?;
    let upper = bound("upper", args.upper.as_deref(), default_bounds.1, dim)?;
    let mut config = SamplerConfig::new(DesignSpace::new(lower, upper)?, budget, seed);
    config.lambda = args.noise_lambda;
    if let Some(t) = args.neighbors {
        config.max_neighbors = t;
    }
    config.mc_points = args.mc_points;
    config.initial = parse_initial(args.initial.as_deref(), dim)?;
    config.strategy = match args.strategy {
        StrategyArg::Hybrid => Strategy::Hybrid,
        StrategyArg::VoronoiOnly => Strategy::VoronoiOnly,
    };
    config.validate()?;
    Ok(config)
}

fn test_function(args: &RunArgs, name: FunctionName, dim: usize) -> Result<TestFunction, CliError> {
    let f = match name {
        FunctionName::Peaks => {
            if dim != 2 {
                return Err(CliError::Usage(format!(
                    "peaks is two-dimensional, got --dim {dim}"
                )));
            }
            TestFunction::Peaks
        }
        FunctionName::Linear => match &args.coefficients {
            None => TestFunction::by_name("linear", dim)?,
            Some(text) => {
                let c = parse_list("coefficients", text)?;
                if c.len() != dim + 1 {
                    return Err(CliError::Usage(format!(
                        "--coefficients: expected {} values (intercept then one per axis), got {}",
                        dim + 1,
                        c.len()
                    )));
                }
                TestFunction::Linear {
                    intercept: c[0],
                    coefficients: c[1..].to_vec(),
                }
            }
        },
        FunctionName::Quadratic => match &args.matrix {
            None => TestFunction::by_name("quadratic", dim)?,
            Some(text) => {
                let m = parse_list("matrix", text)?;
                if m.len() != dim * dim {
                    return Err(CliError::Usage(format!(
                        "--matrix: expected {} values, got {}",
                        dim * dim,
                        m.len()
                    )));
                }
                TestFunction::Quadratic { matrix: m }
            }
        },
    };
    Ok(f)
}

fn resolve_run(args: &RunArgs) -> Result<RunMeta, CliError> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
        let meta: RunMeta = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if meta.function.is_none() {
            return Err(CliError::Usage(format!(
                "{} records an ask/tell run without a built-in function",
                path.display()
            )));
        }
        meta.sampler.validate()?;
        return Ok(RunMeta::new("run", meta.function, meta.sampler));
    }
    let name = args
        .function
        .expect("clap enforces --function without --config");
    let dim = args
        .sampler
        .dim
        .ok_or_else(|| CliError::Usage("--dim is required".into()))?;
    let bounds = if name == FunctionName::Peaks {
        (-3.0, 3.0)
    } else {
        (0.0, 1.0)
    };
    let function = test_function(args, name, dim)?;
    let sampler = sampler_config(&args.sampler, dim, bounds)?;
    Ok(RunMeta::new("run", Some(function), sampler))
}

fn save_progress(dir: &Path, state: &RunState) -> Result<(), CliError> {
    files::write(dir, files::SAMPLES, &files::samples_csv(&state.design))?;
    files::write(dir, files::STATE, &state.to_json()?)
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let meta = resolve_run(args)?;
    let function = meta
        .function
        .clone()
        .expect("resolved runs carry a function");
    let mut evaluator = make_evaluator(function, meta.sampler.lambda, meta.sampler.seed)?;
    let mut state = RunState::new(meta.sampler.clone())?;

    let _lock = DirLock::acquire(&args.out)?;
    files::write(&args.out, files::RUN_META, &files::to_json(&meta)?)?;

    let exec = Execution::default();
    while !state.is_complete() {
        match state.step_with(&mut evaluator, exec) {
            Ok(proposal) => {
                if let Some(scores) = proposal.scores {
                    files::write(
                        &args.out,
                        &files::scores_file(scores.iteration),
                        &files::scores_csv(&scores),
                    )?;
                }
            }
            Err(e) => {
                save_progress(&args.out, &state)?;
                return Err(CliError::Runtime(e.to_string()));
            }
        }
    }
    save_progress(&args.out, &state)?;
    eprintln!(
        "wrote {} samples ({} adaptive) to {}",
        state.design.len(),
        state.iteration,
        args.out.display()
    );
    Ok(())
}

pub fn init(args: &InitArgs) -> Result<(), CliError> {
    let dim = args
        .sampler
        .dim
        .ok_or_else(|| CliError::Usage("--dim is required".into()))?;
    let config = sampler_config(&args.sampler, dim, (0.0, 1.0))?;
    let state = RunState::new(config.clone())?;
    let _lock = DirLock::acquire(&args.out)?;
    if args.out.join(files::STATE).exists() {
        return Err(CliError::Runtime(format!(
            "{} already holds a run",
            args.out.display()
        )));
    }
    files::write(
        &args.out,
        files::RUN_META,
        &files::to_json(&RunMeta::new("init", None, config))?,
    )?;
    save_progress(&args.out, &state)
}

fn load_state(dir: &Path) -> Result<RunState, CliError> {
    Ok(RunState::from_json(&files::read(dir, files::STATE)?)?)
}

pub fn ask(dir: &Path) -> Result<(), CliError> {
    let _lock = DirLock::acquire(dir)?;
    let mut state = load_state(dir)?;
    let proposal = match &state.pending {
        Some(p) => p.clone(),
        None => state.next_proposal(Execution::default())?,
    };
    if let Some(scores) = &proposal.scores {
        files::write(
            dir,
            &files::scores_file(scores.iteration),
            &files::scores_csv(scores),
        )?;
    }
    files::write(dir, files::PROPOSED, &files::proposed_csv(&proposal.coords))?;
    state.pending = Some(proposal);
    files::write(dir, files::STATE, &state.to_json()?)
}

/// Normalized distance beyond which an observed row does not answer the
/// pending proposal.
const COORD_MATCH_TOLERANCE: f64 = 1e-9;

pub fn tell(dir: &Path) -> Result<(), CliError> {
    let _lock = DirLock::acquire(dir)?;
    let mut state = load_state(dir)?;
    let pending = state
        .pending
        .clone()
        .ok_or_else(|| CliError::Runtime("no pending proposal: run `ask` first".into()))?;
    let rows = files::parse_observed(
        &files::read(dir, files::OBSERVED)?,
        state.config.space.dim(),
    )?;
    if rows.len() != 1 {
        return Err(CliError::Runtime(format!(
            "observed.csv must answer exactly 1 pending proposal, got {} rows (diff: {:+})",
            rows.len(),
            rows.len() as i64 - 1
        )));
    }
    let (coords, y) = &rows[0];
    let space = &state.config.space;
    let gap = space
        .normalize(coords)
        .iter()
        .zip(space.normalize(&pending.coords))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    if gap > COORD_MATCH_TOLERANCE {
        return Err(CliError::Runtime(format!(
            "observed point {coords:?} does not match pending proposal {:?} (normalized distance {gap:e})",
            pending.coords
        )));
    }
    state.record(&pending, *y)?;
    save_progress(dir, &state)
}

pub struct NoiseReportRow {
    pub published: NoiseSumStats,
    pub linear_mean: f64,
    pub mc: flola::NoiseSumSimulation,
}

pub fn noise_report_rows(args: &NoiseReportArgs) -> Result<Vec<NoiseReportRow>, CliError> {
    if args.t_max == 0 {
        return Err(CliError::Usage("--t-max must be >= 1".into()));
    }
    if args.draws == 0 {
        return Err(CliError::Usage("--draws must be >= 1".into()));
    }
    let lambdas = parse_list("lambda-list", &args.lambda_list)?;
    let mut rows = Vec::new();
    for t in 1..=args.t_max {
        for (k, &lambda) in lambdas.iter().enumerate() {
            let published = NoiseSumStats::published(t, lambda)?;
            let (zeta_mean, _) = zeta_stats(lambda)?;
            let seed = derive_seed(args.seed, t as u64, k as u64);
            let mc = simulate_noise_sum(t, lambda, args.draws, seed)?;
            rows.push(NoiseReportRow {
                published,
                linear_mean: t as f64 * zeta_mean,
                mc,
            });
        }
    }
    Ok(rows)
}

pub const NOISE_REPORT_HEADER: &str =
    "t,lambda,published_mean,published_variance,mc_mean,mc_mean_se,mc_variance,mc_variance_se,linear_mean,draws,shards";

pub fn noise_report_csv(rows: &[NoiseReportRow]) -> String {
    let mut out = format!("{NOISE_REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.published.t,
            fmt_f64(r.published.lambda),
            fmt_f64(r.published.mean),
            fmt_f64(r.published.variance),
            fmt_f64(r.mc.stats.mean),
            fmt_f64(r.mc.mean_std_error),
            fmt_f64(r.mc.stats.variance),
            fmt_f64(r.mc.variance_std_error),
            fmt_f64(r.linear_mean),
            r.mc.draws,
            r.mc.shards,
        );
    }
    out
}

pub fn noise_report(args: &NoiseReportArgs) -> Result<(), CliError> {
    let rows = noise_report_rows(args)?;
    println!(
        "{:>3} {:>8} | {:>12} {:>12} | {:>12} {:>10} {:>12} {:>10} | {:>12}",
        "T", "lambda", "pub E[X]", "pub Var[X]", "MC mean", "± se", "MC var", "± se", "T·E[zeta]"
    );
    for r in &rows {
        println!(
            "{:>3} {:>8.4} | {:>12.6} {:>12.6} | {:>12.6} {:>10.2e} {:>12.6} {:>10.2e} | {:>12.6}",
            r.published.t,
            r.published.lambda,
            r.published.mean,
            r.published.variance,
            r.mc.stats.mean,
            r.mc.mean_std_error,
            r.mc.stats.variance,
            r.mc.variance_std_error,
            r.linear_mean
        );
    }
    if let Some(r) = rows.first() {
        println!(
            "# {} draws per row in {} fixed shards, master seed {}",
            r.mc.draws, r.mc.shards, args.seed
        );
    }
    let path = &args.out;
    fs::write(path, noise_report_csv(&rows))
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}
