use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use brg_core::algorithms::{solve as run_solver, SolverConfig, SolverKind, TraceEntry};
use brg_core::experiments::report::{
    mean_objectives, metrics_json, read_records, write_general_table, write_pareto, write_records,
    write_social_table,
};
use brg_core::experiments::{generate_game, run_batch, Algorithm, BatchConfig, GeneratorSpec, PolicyMetrics};
use brg_core::{Error as CoreError, Game, RiskMeasure};
use serde::Serialize;

use crate::svg;
use crate::{BatchArgs, GenerateArgs, GeneratorArgs, ParetoArgs, SolveArgs, SolverArgs};

/// Exit status for a batch that wrote its outputs but had failing cells.
const EXIT_PARTIAL: u8 = 7;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Io(_) => 3,
                CoreError::Parse(_) | CoreError::UnsupportedVersion(_) | CoreError::MissingColumn(_) => 4,
                CoreError::NonFinite(_) | CoreError::SingularSystem(..) | CoreError::NonFiniteObjective { .. } => 6,
                _ => 5,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn generator_spec(args: &GeneratorArgs, seed_override: Option<u64>) -> Result<GeneratorSpec> {
    let num_actions = match args.num_actions.as_slice() {
        [a] => [*a, *a],
        [a, b] => [*a, *b],
        _ => return Err(CoreError::InvalidConfig("--num-actions takes one or two counts".into()).into()),
    };
    let spec = GeneratorSpec {
        num_states: args.num_states,
        num_actions,
        num_types: args.num_types,
        dirichlet_alpha: args.dirichlet_alpha,
        reward_mean: args.reward_mean,
        reward_std: args.reward_std,
        xi_mode: args.xi_mode.into(),
        discount: args.discount,
        master_seed: seed_override.unwrap_or(args.master_seed),
    };
    spec.validate()?;
    Ok(spec)
}

fn solver_config(args: &SolverArgs, risk: RiskMeasure, seed: u64) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        eta1: args.eta1,
        eta2: args.eta2,
        risk,
        outer_iters: args.outer_iters,
        inner_iters: args.inner_iters,
        grad_tol: args.grad_tol,
        seed,
        init_jitter: args.init_jitter,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct WallClock {
    started_unix_secs: u64,
    elapsed_secs: f64,
}

impl WallClock {
    fn since(started: SystemTime, timer: Instant) -> Self {
        WallClock {
            started_unix_secs: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_secs: timer.elapsed().as_secs_f64(),
        }
    }
}

#[derive(Serialize)]
struct NamedConfig {
    algorithm: String,
    config: SolverConfig,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    generator: GeneratorSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch: Option<BatchConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    solvers: Vec<NamedConfig>,
    artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_clock: Option<WallClock>,
}

impl Manifest {
    fn new(command: &'static str, generator: GeneratorSpec) -> Self {
        Manifest {
            tool: "brg",
            version: env!("CARGO_PKG_VERSION"),
            command,
            generator,
            batch: None,
            solvers: Vec::new(),
            artifacts: Vec::new(),
            wall_clock: None,
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn generate(args: GenerateArgs, seed_override: Option<u64>) -> Result<ExitCode> {
    let started = (SystemTime::now(), Instant::now());
    let spec = generator_spec(&args.generator, seed_override)?;
    create_dir(&args.out)?;
    let mut manifest = Manifest::new("generate", spec);
    for i in 0..args.games {
        let g = generate_game(&spec, i as u64)?;
        let name = format!("game_{i:04}.json");
        write_file(&args.out.join(&name), g.to_json().as_bytes())?;
        manifest.artifacts.push(name);
    }
    if args.timestamps {
        manifest.wall_clock = Some(WallClock::since(started.0, started.1));
    }
    write_json(&args.out.join("manifest.json"), &manifest)?;
    eprintln!("wrote {} games to {}", args.games, args.out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveOutput {
    solver: String,
    game: PathBuf,
    config: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    mmbi_horizon: Option<usize>,
    metric_alpha: f64,
    metrics: PolicyMetrics,
    converged: bool,
    iterations_used: usize,
    /// `[player][type][state][action]` logits.
    theta: Vec<Vec<Vec<Vec<f64>>>>,
    trace: Vec<TraceEntry>,
}

pub fn solve(args: SolveArgs, seed_override: Option<u64>) -> Result<ExitCode> {
    let kind: SolverKind = args.solver.parse()?;
    let risk = match args.cvar {
        Some(alpha) => RiskMeasure::cvar(alpha)?,
        None => RiskMeasure::Expectation,
    };
    RiskMeasure::cvar(args.metric_alpha)?;
    let cfg = solver_config(&args.solver_args, risk, seed_override.unwrap_or(args.seed))?;

    let text = fs::read_to_string(&args.game)
        .with_context(|| format!("reading {}", args.game.display()))?;
    let game = Game::from_json(&text).with_context(|| format!("loading {}", args.game.display()))?;

    let res = run_solver(kind, &game, &cfg, args.solver_args.horizon)?;
    let metrics = PolicyMetrics::compute(&game, &res.theta, args.metric_alpha)?;
    let label = Algorithm::new(kind, risk.is_risk_sensitive()).to_string();
    let out = SolveOutput {
        solver: label,
        game: args.game,
        config: cfg,
        mmbi_horizon: (kind == SolverKind::Mmbi).then_some(args.solver_args.horizon),
        metric_alpha: args.metric_alpha,
        metrics,
        converged: res.converged,
        iterations_used: res.iterations_used,
        theta: res.theta.to_nested(),
        trace: res.trace,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    match &args.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_algorithms(names: Option<&[String]>) -> Result<Vec<Algorithm>> {
    let Some(names) = names else {
        return Ok(Algorithm::default_set());
    };
    let mut algs = Vec::new();
    for n in names {
        let a: Algorithm = n.trim().parse()?;
        if algs.contains(&a) {
            return Err(anyhow!(CoreError::InvalidConfig(format!("solver {a} listed twice"))));
        }
        algs.push(a);
    }
    if algs.is_empty() {
        return Err(CoreError::InvalidConfig("no solvers selected".into()).into());
    }
    Ok(algs)
}

pub fn batch(args: BatchArgs, seed_override: Option<u64>) -> Result<ExitCode> {
    let started = (SystemTime::now(), Instant::now());
    let spec = generator_spec(&args.generator, seed_override)?;
    let algorithms = parse_algorithms(args.solvers.as_deref())?;
    let solver = solver_config(&args.solver_args, RiskMeasure::Expectation, spec.master_seed)?;
    let cfg = BatchConfig {
        solver,
        alpha: args.alpha,
        mmbi_horizon: args.solver_args.horizon,
        num_games: args.games,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("starting worker pool")?;
    let report = pool.install(|| run_batch(&spec, &algorithms, &cfg))?;

    create_dir(&args.out)?;
    let mut buf = Vec::new();
    write_records(&mut buf, &report.records)?;
    write_file(&args.out.join("per_game.csv"), &buf)?;
    buf.clear();
    write_social_table(&mut buf, &report.rows)?;
    write_file(&args.out.join("social.csv"), &buf)?;
    buf.clear();
    write_general_table(&mut buf, &report.rows)?;
    write_file(&args.out.join("general.csv"), &buf)?;
    write_file(&args.out.join("metrics.json"), (metrics_json(&report) + "\n").as_bytes())?;

    let mut manifest = Manifest::new("batch", spec);
    manifest.batch = Some(cfg);
    manifest.solvers = algorithms
        .iter()
        .map(|a| NamedConfig {
            algorithm: a.to_string(),
            config: cfg.solver.with_risk(a.risk(cfg.alpha)),
        })
        .collect();
    manifest.artifacts = ["per_game.csv", "social.csv", "general.csv", "metrics.json"]
        .map(String::from)
        .to_vec();
    if args.timestamps {
        manifest.wall_clock = Some(WallClock::since(started.0, started.1));
    }
    write_json(&args.out.join("manifest.json"), &manifest)?;

    for row in &report.rows {
        eprintln!(
            "{:<8} SW {:>8.4} ± {:.4}   CVaR_SW {:>8.4} ± {:.4}   games {} failures {}",
            row.algorithm,
            row.social_welfare.mean,
            row.social_welfare.std,
            row.cvar_social_welfare.mean,
            row.cvar_social_welfare.std,
            row.games,
            row.failures
        );
    }
    if report.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            eprintln!("failed: game {} {}: {}", f.game_index, f.solver, f.error);
        }
        eprintln!("{} of {} cells failed", report.failures.len(), args.games * algorithms.len());
        Ok(ExitCode::from(EXIT_PARTIAL))
    }
}

pub fn pareto(args: ParetoArgs) -> Result<ExitCode> {
    let file = fs::File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let records = read_records(file).with_context(|| format!("reading {}", args.input.display()))?;
    if records.is_empty() {
        return Err(CoreError::InvalidConfig(format!("{} has no records", args.input.display())).into());
    }
    let points = mean_objectives(&records, &args.x, &args.y)?;
    let mut buf = Vec::new();
    let front = write_pareto(&mut buf, &points)?;
    write_file(&args.out_csv, &buf)?;
    let plot = svg::scatter(&points, &front, &args.x, &args.y);
    write_file(&args.out_svg, plot.as_bytes())?;
    for (p, on) in points.iter().zip(&front) {
        println!("{:<8} {:>10.4} {:>10.4}{}", p.label, p.x, p.y, if *on { "  *" } else { "" });
    }
    Ok(ExitCode::SUCCESS)
}
