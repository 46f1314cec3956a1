//! `gradplay` — analyze and simulate gradient-play dynamics in two-player
//! games.
//!
//! Subcommands: `analyze` (equilibrium report), `qnr` (numerical-range point
//! clouds), `simulate` (discrete or continuous trajectories), `sweep`
//! (learning-rate-ratio sweeps). Games come from `--preset` or a JSON file
//! via `--game`; artifacts land in `--out` (or `$GRADPLAY_OUT`).
//!
//! Exit codes: 0 success, 2 input error, 3 analysis precondition failure,
//! 4 numerical failure.

mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use gradplay::classify::{classify_equilibrium, ClassifyConfig, log_spaced};
use gradplay::dynamics::{
    default_divergence_bound, optimal_tau, simulate_continuous, simulate_discrete, tau_sweep,
};
use gradplay::game::presets::{build_preset, PresetId, PresetParams};
use gradplay::game::{find_fixed_point, load_game};
use gradplay::qnr::sample_qnr;
use gradplay::{Error, GradientField, JointAction, LearningConfig, QuadraticGame};

use output::{qnr_csv, sweep_csv, trajectory_csv, OutputDir, RunManifest};

#[derive(Parser)]
#[command(name = "gradplay", version, about = "Stability analysis of gradient play in two-player games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a fixed point: Nash and stability flags, bounds, certificates
    Analyze(AnalyzeArgs),
    /// Sample the numerical range and quadratic numerical range
    Qnr(QnrArgs),
    /// Simulate gradient play in discrete or continuous time
    Simulate(SimulateArgs),
    /// Sweep the learning-rate ratio and locate the fastest one
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GameSource {
    /// Built-in game: example1, example2, example4 or example5
    #[arg(long, conflicts_with = "game")]
    preset: Option<String>,
    /// Path to a JSON game-definition file
    #[arg(long)]
    game: Option<PathBuf>,
    /// Preset parameter override, e.g. `--param b=2` (repeatable; keys b, p, eps)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct OutArg {
    /// Output directory for artifacts (default: $GRADPLAY_OUT; stdout-only if unset)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArg {
    fn resolve(&self) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| std::env::var_os("GRADPLAY_OUT").map(PathBuf::from))
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: GameSource,
    /// Fixed point to classify, comma-separated; located by Newton iteration
    /// from the origin when omitted
    #[arg(long)]
    point: Option<String>,
    /// Max allowed gradient residual at the point
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct QnrArgs {
    #[command(flatten)]
    source: GameSource,
    /// Number of sampled unit pairs (the cloud holds 2n points)
    #[arg(short = 'n', long = "samples", default_value_t = gradplay::qnr::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Discrete,
    Continuous,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: GameSource,
    #[arg(long, default_value_t = 1e-3)]
    gamma1: f64,
    /// Learning-rate ratio gamma2 / gamma1
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Initial state, comma-separated (default: all ones)
    #[arg(long)]
    x0: Option<String>,
    /// Discrete steps to run
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Mode::Discrete)]
    mode: Mode,
    /// Convergence threshold on the state norm (discrete mode)
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Integration horizon (continuous mode)
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    /// Integrator step (continuous mode)
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: GameSource,
    #[arg(long, default_value_t = 1e-3)]
    gamma1: f64,
    #[arg(long)]
    tau_lo: f64,
    #[arg(long)]
    tau_hi: f64,
    /// Grid resolution
    #[arg(short = 'n', long = "grid", default_value_t = 100)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

enum CliError {
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::InvalidInput(_))
            | CliError::Core(Error::DimensionMismatch { .. }) => 2,
            CliError::Core(Error::NotFixedPoint { .. })
            | CliError::Core(Error::StructureMismatch { .. }) => 3,
            CliError::Core(_) => 4,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => format!("i/o error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors, 0 on --help/--version
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Qnr(args) => cmd_qnr(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gradplay: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Parsed `--param` overrides, kept for the manifest.
fn parse_params(raw: &[String]) -> Result<(PresetParams, BTreeMap<String, f64>), CliError> {
    let mut params = PresetParams::default();
    let mut seen = BTreeMap::new();
    for item in raw {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("--param expects KEY=VALUE, got '{item}'")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::InvalidInput(format!("--param {key}: '{value}' is not a number")))?;
        match key {
            "b" => params.b = value,
            "p" => params.p = value,
            "eps" => params.eps = value,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown preset parameter '{other}' (expected b, p or eps)"
                ))
                .into())
            }
        }
        seen.insert(key.to_string(), value);
    }
    Ok((params, seen))
}

impl GameSource {
    fn load(&self) -> Result<(QuadraticGame, RunManifestSeed), CliError> {
        let (params, seen) = parse_params(&self.params)?;
        if let Some(name) = &self.preset {
            let id = PresetId::parse(name)?;
            let game = build_preset(id, &params)?;
            return Ok((game, RunManifestSeed { input: format!("preset:{name}"), params: seen }));
        }
        if let Some(path) = &self.game {
            if !self.params.is_empty() {
                return Err(Error::InvalidInput(
                    "--param only applies to --preset; put parameters inside the game file".into(),
                )
                .into());
            }
            let game = load_game(path)?;
            return Ok((game, RunManifestSeed { input: path.display().to_string(), params: seen }));
        }
        Err(Error::InvalidInput("either --preset or --game is required".into()).into())
    }
}

struct RunManifestSeed {
    input: String,
    params: BTreeMap<String, f64>,
}

impl RunManifestSeed {
    fn manifest(&self, command: &str, seed: Option<u64>) -> RunManifest {
        let mut m = RunManifest::new(command, self.input.clone(), seed);
        for (k, v) in &self.params {
            m.param(k, *v);
        }
        m
    }
}

fn parse_vector(text: &str, d1: usize, d2: usize, what: &str) -> Result<JointAction, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values =
        values.map_err(|_| Error::InvalidInput(format!("{what} must be comma-separated numbers")))?;
    if values.len() != d1 + d2 {
        return Err(Error::InvalidInput(format!(
            "{what} must have {} coordinates, got {}",
            d1 + d2,
            values.len()
        ))
        .into());
    }
    Ok(JointAction::from_stacked(d1, &DVector::from_vec(values))?)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let (game, seed_info) = args.source.load()?;
    let point = match &args.point {
        Some(text) => parse_vector(text, game.d1(), game.d2(), "--point")?,
        None => {
            let origin = JointAction::zeros(game.d1(), game.d2())?;
            find_fixed_point(&game, &origin, (args.tol * 0.01).min(1e-10), 200)?
        }
    };
    let config = ClassifyConfig { fixed_point_tol: args.tol, ..ClassifyConfig::default() };
    let report = classify_equilibrium(&game, &point, &config)?;
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    println!("{text}");
    if let Some(dir) = args.out.resolve() {
        let mut manifest = seed_info.manifest("analyze", None);
        manifest.param("tol", args.tol);
        if let Some(p) = &args.point {
            manifest.param("point", p.clone());
        }
        let mut out = OutputDir::new(&dir, manifest)?;
        out.write_json("report.json", &report)?;
        out.finalize()?;
    }
    Ok(())
}

fn cmd_qnr(args: QnrArgs) -> Result<(), CliError> {
    let (game, seed_info) = args.source.load()?;
    let estimate = sample_qnr(&game.jacobian(), args.samples, args.seed)?;
    let csv = qnr_csv(&estimate);
    let box_json = serde_json::json!({
        "re_min": estimate.bounding_box.re_min,
        "re_max": estimate.bounding_box.re_max,
        "im_min": -estimate.bounding_box.im_abs_max,
        "im_max": estimate.bounding_box.im_abs_max,
        "samples": estimate.samples,
        "seed": estimate.seed,
    });
    match args.out.resolve() {
        Some(dir) => {
            let mut manifest = seed_info.manifest("qnr", Some(args.seed));
            manifest.param("samples", args.samples as f64);
            let mut out = OutputDir::new(&dir, manifest)?;
            out.write("qnr.csv", &csv)?;
            out.write_json("box.json", &box_json)?;
            out.finalize()?;
            println!("{}", serde_json::to_string_pretty(&box_json).expect("serializable box"));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (game, seed_info) = args.source.load()?;
    let (d1, d2) = (game.d1(), game.d2());
    let x0 = match &args.x0 {
        Some(text) => parse_vector(text, d1, d2, "--x0")?,
        None => JointAction::new(DVector::from_element(d1, 1.0), DVector::from_element(d2, 1.0))?,
    };
    let record = match args.mode {
        Mode::Discrete => {
            let config = LearningConfig::new(args.gamma1, args.tau)?;
            simulate_discrete(
                &game,
                &config,
                &x0,
                args.steps,
                args.tol,
                default_divergence_bound(x0.norm()),
            )?
        }
        Mode::Continuous => simulate_continuous(&game, args.tau, &x0, args.t_end, args.dt)?,
    };
    let csv = trajectory_csv(&record, d1, d2);
    // for continuous records the time column is in seconds, not step counts
    let steps = match args.mode {
        Mode::Discrete => record.steps_taken(),
        Mode::Continuous => {
            record.times.last().map(|t| (t / args.dt).round() as usize).unwrap_or(0)
        }
    };
    let summary = serde_json::json!({
        "terminated": record.terminated,
        "steps": steps,
        "final_norm": record.final_norm(),
    });
    match args.out.resolve() {
        Some(dir) => {
            let mut manifest = seed_info.manifest("simulate", None);
            manifest.param("gamma1", args.gamma1);
            manifest.param("tau", args.tau);
            manifest.param("steps", args.steps as f64);
            manifest.param(
                "mode",
                match args.mode {
                    Mode::Discrete => "discrete",
                    Mode::Continuous => "continuous",
                },
            );
            if args.mode == Mode::Continuous {
                manifest.param("t_end", args.t_end);
                manifest.param("dt", args.dt);
            }
            let mut out = OutputDir::new(&dir, manifest)?;
            out.write("trajectory.csv", &csv)?;
            out.finalize()?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let (game, seed_info) = args.source.load()?;
    if !(args.tau_lo > 0.0 && args.tau_hi > args.tau_lo) {
        return Err(Error::InvalidInput(format!(
            "need 0 < tau-lo < tau-hi, got [{}, {}]",
            args.tau_lo, args.tau_hi
        ))
        .into());
    }
    if args.grid < 2 {
        return Err(Error::InvalidInput("sweep grid needs at least 2 points".into()).into());
    }
    let j = game.jacobian();
    let taus = log_spaced(args.tau_lo, args.tau_hi, args.grid);
    let sweep = tau_sweep(&j, args.gamma1, &taus)?;
    let (best_tau, best_rho) = optimal_tau(&j, args.gamma1, args.tau_lo, args.tau_hi, args.grid)?;
    let csv = sweep_csv(&sweep);
    let best = serde_json::json!({
        "best_tau": best_tau,
        "best_rho": best_rho,
        "grid_best_tau": sweep.best_tau,
        "grid_best_rho": sweep.best_rho,
    });
    match args.out.resolve() {
        Some(dir) => {
            let mut manifest = seed_info.manifest("sweep", None);
            manifest.param("gamma1", args.gamma1);
            manifest.param("tau_lo", args.tau_lo);
            manifest.param("tau_hi", args.tau_hi);
            manifest.param("grid", args.grid as f64);
            let mut out = OutputDir::new(&dir, manifest)?;
            out.write("sweep.csv", &csv)?;
            out.write_json("best.json", &best)?;
            out.finalize()?;
            println!("{}", serde_json::to_string_pretty(&best).expect("serializable best"));
        }
        None => {
            print!("{csv}");
            eprintln!("best_tau = {best_tau}, best_rho = {best_rho}");
        }
    }
    Ok(())
}
