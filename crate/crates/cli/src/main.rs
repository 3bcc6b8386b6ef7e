//! Command-line driver for the pose-tracking toolkit: synthetic dataset
//! generation, loss-gradient verification, toy training, and tracking
//! benchmarks.
//!
//! Exit codes: 0 on success, 1 when a check or benchmark fails (gradient
//! violation, failure budget exceeded), 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use posetrack::fit::{
    train, Checkpoint, OptimConfig, ToyRegressor, TrainSample, TrainSession, FEATURE_DIM,
};
use posetrack::geom::{ellipsoid, TriMesh};
use posetrack::losses::families::check_all;
use posetrack::symmetry::SymmetryBank;
use posetrack::synth::{generate_to_dir, load_manifest, load_sample, GenConfig};
use posetrack::track::{
    build_scenario, run_track, scenario_camera, scenario_mesh, BiasedOracle, Estimator,
    FlipInjector, ModelEstimator, NoisyOracle, OracleEstimator, ScenarioKind, TrackPolicy,
    TrackReport, SCENARIO_COLOR,
};

#[derive(Parser)]
#[command(
    name = "posetrack",
    version,
    about = "Synthetic 6-DOF pose tracking: data generation, gradient checks, training, benchmarks"
)]
struct Cli {
    /// Master random seed; every subcommand is bit-deterministic in it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for generated files (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// File format for tracking reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic RGB-D frame-pair dataset into --out.
    Gen(GenArgs),
    /// Verify analytic loss gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Train the toy pose regressor on a generated dataset.
    Fit(FitArgs),
    /// Run a tracking benchmark scenario and write its report.
    Track(TrackArgs),
}

#[derive(Args)]
struct GenArgs {
    /// OBJ file with the tracked object's mesh; a built-in ellipsoid is
    /// used when omitted.
    #[arg(long)]
    mesh: Option<PathBuf>,

    /// Number of samples to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,

    /// Flat JSON object overriding augmentation/noise fields by name
    /// (e.g. {"p_occluder": 0.5, "axial_a0": 0.001}). Unknown fields are
    /// rejected.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random configurations checked per loss family.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
}

#[derive(Args)]
struct FitArgs {
    /// Directory containing a generated dataset (manifest.json and sample
    /// files).
    #[arg(long)]
    data: PathBuf,

    /// Total training epochs.
    #[arg(long, default_value_t = 50)]
    epochs: usize,

    /// Leading epochs trained with the robust warm-up objective.
    #[arg(long, default_value_t = 25)]
    warmup: usize,

    /// Symmetry bank size; used when --symmetry-axis is not "none".
    #[arg(long, default_value_t = 64)]
    b2: usize,

    /// Treat the object as rotationally symmetric about this axis.
    #[arg(long, value_enum, default_value_t = SymmetryAxis::None)]
    symmetry_axis: SymmetryAxis,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymmetryAxis {
    Z,
    None,
}

#[derive(Args)]
struct TrackArgs {
    /// Scenario to run; "flip" wraps the chosen estimator with scripted
    /// 180° x-flips on a translation trajectory, "all" runs every scenario.
    #[arg(long, value_enum)]
    scenario: ScenarioArg,

    /// Delta estimator driving the tracker.
    #[arg(long, value_enum)]
    estimator: EstimatorArg,

    /// Trained checkpoint JSON; required with --estimator model.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Trajectory length in frames.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    frames: u64,

    /// Re-anchor the tracker to ground truth every this many frames.
    #[arg(long, default_value_t = 15)]
    reset: usize,

    /// Reflective-flip filtering of the estimated orientation.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    reflective: Toggle,

    /// Constant x drift of the bias estimator, millimeters per frame
    /// (0 gives the pure true-motion estimator).
    #[arg(long, default_value_t = 10.0)]
    bias_mm: f64,

    /// Translation jitter of the noise estimator, millimeters.
    #[arg(long, default_value_t = 2.0)]
    noise_sigma_mm: f64,

    /// Per-axis rotation jitter of the noise estimator, degrees.
    #[arg(long, default_value_t = 0.5)]
    noise_sigma_deg: f64,

    /// Maximum total failures tolerated per scenario before exit code 1.
    #[arg(long, default_value_t = 0)]
    fail_budget: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Translation,
    Rotation,
    Occlusion,
    Hard,
    Flip,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Oracle,
    Bias,
    Noise,
    Model,
}

impl EstimatorArg {
    fn name(self) -> &'static str {
        match self {
            EstimatorArg::Oracle => "oracle",
            EstimatorArg::Bias => "bias",
            EstimatorArg::Noise => "noise",
            EstimatorArg::Model => "model",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns `Ok(true)` when a check or benchmark failed (exit 1) and
/// `Ok(false)` on clean success; configuration errors bubble up as `Err`.
fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(cli.seed, &cli.out, args).map(|()| false),
        Command::Gradcheck(args) => cmd_gradcheck(cli.seed, args),
        Command::Fit(args) => cmd_fit(cli.seed, &cli.out, args).map(|()| false),
        Command::Track(args) => cmd_track(cli.seed, &cli.out, cli.format, args),
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

/// Default tracked object when no mesh file is supplied.
fn builtin_object() -> TriMesh {
    ellipsoid(0.09, 0.06, 0.045, 2)
}

/// Occluder composited over the object by the generation pipeline.
fn builtin_occluder() -> TriMesh {
    ellipsoid(0.05, 0.08, 0.03, 1)
}

/// Apply a flat JSON object of field overrides to the augmentation and
/// noise blocks of the generation config. Every key must name a field of
/// exactly one of the two blocks; anything else is a configuration error.
fn apply_flat_overrides(cfg: &mut GenConfig, text: &str) -> Result<()> {
    let overrides: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(text).context("config file is not a flat JSON object")?;
    let mut augment = serde_json::to_value(cfg.augment)?;
    let mut noise = serde_json::to_value(cfg.noise)?;

    for (key, value) in overrides {
        if let Some(slot) = augment.as_object_mut().and_then(|m| m.get_mut(&key)) {
            *slot = value;
            cfg.augment = serde_json::from_value(augment.clone())
                .map_err(|e| anyhow::anyhow!("config field `{key}`: {e}"))?;
        } else if let Some(slot) = noise.as_object_mut().and_then(|m| m.get_mut(&key)) {
            *slot = value;
            cfg.noise = serde_json::from_value(noise.clone())
                .map_err(|e| anyhow::anyhow!("config field `{key}`: {e}"))?;
        } else {
            bail!("unknown config field `{key}`");
        }
    }
    Ok(())
}

fn cmd_gen(seed: u64, out: &Path, args: &GenArgs) -> Result<()> {
    let object = match &args.mesh {
        Some(path) => TriMesh::load_obj(path)
            .with_context(|| format!("loading mesh {}", path.display()))?,
        None => builtin_object(),
    };
    let occluder = builtin_occluder();

    let mut cfg = GenConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        apply_flat_overrides(&mut cfg, &text)?;
    }

    generate_to_dir(&object, &occluder, &cfg, args.n as usize, seed, out)?;
    println!("{}", out.join("manifest.json").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

fn cmd_gradcheck(seed: u64, args: &GradcheckArgs) -> Result<bool> {
    let reports = check_all(args.trials as usize, seed);
    let mut failed = false;
    for r in &reports {
        println!(
            "{:<22} max_rel_err {:.3e}  ({} trials)  {}",
            r.family.name(),
            r.max_rel_err,
            r.trials,
            if r.passed() { "ok" } else { "FAIL" }
        );
        if !r.passed() {
            failed = true;
            eprintln!(
                "gradient check failed for {}: offending configuration seed ({seed}, trial {})",
                r.family.name(),
                r.worst_trial
            );
        }
    }
    Ok(failed)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(seed: u64, out: &Path, args: &FitArgs) -> Result<()> {
    let manifest = load_manifest(&args.data)
        .with_context(|| format!("loading dataset manifest from {}", args.data.display()))?;
    let mut samples = Vec::with_capacity(manifest.n_samples);
    for i in 0..manifest.n_samples {
        samples.push(
            load_sample(&args.data, i)
                .with_context(|| format!("loading sample {i} from {}", args.data.display()))?,
        );
    }
    let data = TrainSample::batch_from(&samples);

    let bank = match args.symmetry_axis {
        SymmetryAxis::None => None,
        SymmetryAxis::Z => Some(SymmetryBank::clustered(args.b2, [false, false, true], seed)?),
    };
    let mut session = TrainSession::new(FEATURE_DIM, bank)?;
    let cfg = OptimConfig {
        epochs: args.epochs,
        warmup_epochs: args.warmup,
        b2: args.b2,
        delta_scale_m: manifest.config.delta_scale_m,
        ..OptimConfig::default()
    };
    let history = train(&mut session, &data, &cfg, seed)?;

    std::fs::create_dir_all(out)?;
    let checkpoint_path = out.join("checkpoint.json");
    std::fs::write(
        &checkpoint_path,
        serde_json::to_string_pretty(&session.checkpoint())?,
    )?;
    let history_path = out.join("history.csv");
    std::fs::write(&history_path, history.to_csv())?;

    if let Some(last) = history.epochs.last() {
        println!(
            "trained {} epochs: loss {:.6}, trans {:.3} mm, rot {:.3} deg, {} skipped",
            history.epochs.len(),
            last.loss,
            last.trans_err_mm,
            last.rot_err_deg,
            history.skipped_samples
        );
    }
    println!("{}", checkpoint_path.display());
    println!("{}", history_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

/// One benchmark run: a base scenario, optionally with flip injection.
#[derive(Clone, Copy)]
enum RunSpec {
    Base(ScenarioKind),
    Flip,
}

impl RunSpec {
    fn label(self) -> &'static str {
        match self {
            RunSpec::Base(kind) => kind.name(),
            RunSpec::Flip => "flip",
        }
    }
}

/// Scripted flip frames for the flip scenario: the middle of every reset
/// window, which is never frame 0 or a reset frame.
fn flip_frames(n_frames: usize, reset_interval: usize) -> Vec<usize> {
    let half = (reset_interval / 2).max(1);
    (0..n_frames)
        .step_by(reset_interval)
        .map(|start| start + half)
        .filter(|&t| t < n_frames && t % reset_interval != 0)
        .collect()
}

fn load_model(path: &Path) -> Result<ToyRegressor> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model checkpoint {}", path.display()))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .with_context(|| format!("parsing model checkpoint {}", path.display()))?;
    let model = TrainSession::from_checkpoint(ck)?.model;
    if model.f_dim() != FEATURE_DIM {
        bail!(
            "model expects {} features but the tracker extracts {FEATURE_DIM}",
            model.f_dim()
        );
    }
    Ok(model)
}

fn cmd_track(seed: u64, out: &Path, format: Format, args: &TrackArgs) -> Result<bool> {
    if args.estimator == EstimatorArg::Model && args.model.is_none() {
        bail!("--model is required with --estimator model");
    }
    // Load once up front so a bad checkpoint is a configuration error, not
    // a benchmark failure.
    let model = match (args.estimator, &args.model) {
        (EstimatorArg::Model, Some(path)) => Some(load_model(path)?),
        _ => None,
    };

    let policy = TrackPolicy {
        reset_interval: args.reset,
        reflective: match args.reflective {
            Toggle::On => Some(Default::default()),
            Toggle::Off => None,
        },
        ..TrackPolicy::default()
    };
    policy.validate()?;

    let runs: Vec<RunSpec> = match args.scenario {
        ScenarioArg::Translation => vec![RunSpec::Base(ScenarioKind::Translation)],
        ScenarioArg::Rotation => vec![RunSpec::Base(ScenarioKind::Rotation)],
        ScenarioArg::Occlusion => vec![RunSpec::Base(ScenarioKind::Occlusion)],
        ScenarioArg::Hard => vec![RunSpec::Base(ScenarioKind::Hard)],
        ScenarioArg::Flip => vec![RunSpec::Flip],
        ScenarioArg::All => {
            let mut all: Vec<RunSpec> = ScenarioKind::ALL.iter().map(|&k| RunSpec::Base(k)).collect();
            all.push(RunSpec::Flip);
            all
        }
    };

    let n_frames = args.frames as usize;
    let make_estimator = |spec: RunSpec| -> Box<dyn Estimator> {
        let base: Box<dyn Estimator> = match args.estimator {
            EstimatorArg::Oracle => Box::new(OracleEstimator),
            EstimatorArg::Bias => Box::new(BiasedOracle::new(Vector3::new(
                args.bias_mm / 1000.0,
                0.0,
                0.0,
            ))),
            EstimatorArg::Noise => Box::new(NoisyOracle::new(
                args.noise_sigma_mm / 1000.0,
                args.noise_sigma_deg,
                seed,
            )),
            EstimatorArg::Model => Box::new(ModelEstimator::new(
                model.clone().expect("validated above"),
                scenario_mesh(),
                scenario_camera(),
                SCENARIO_COLOR,
            )),
        };
        match spec {
            RunSpec::Base(_) => base,
            RunSpec::Flip => Box::new(FlipInjector::new(base, flip_frames(n_frames, args.reset))),
        }
    };

    // Scenario runs are independent; build and track them concurrently.
    let reports: Vec<Result<TrackReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|&spec| {
                let make_estimator = &make_estimator;
                let policy = &policy;
                scope.spawn(move || -> Result<TrackReport> {
                    let kind = match spec {
                        RunSpec::Base(kind) => kind,
                        RunSpec::Flip => ScenarioKind::Translation,
                    };
                    let traj = build_scenario(kind, n_frames, seed)?;
                    let mut estimator = make_estimator(spec);
                    let mut report = run_track(&traj, estimator.as_mut(), policy)?;
                    report.scenario = spec.label().to_string();
                    Ok(report)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tracking thread panicked"))
            .collect()
    });

    std::fs::create_dir_all(out)?;
    let mut over_budget = false;
    println!(
        "{:<12} {:<14} {:>22} {:>22} {:>7} {:>6}",
        "scenario", "estimator", "trans mm (mean±std)", "rot deg (mean±std)", "resets", "fails"
    );
    for (spec, report) in runs.iter().zip(reports) {
        let report = report?;
        let s = &report.summary;
        println!(
            "{:<12} {:<14} {:>22} {:>22} {:>7} {:>6}",
            report.scenario,
            report.estimator,
            format!("{:.3} ± {:.3}", s.trans_mean_mm, s.trans_std_mm),
            format!("{:.3} ± {:.3}", s.rot_mean_deg, s.rot_std_deg),
            s.resets,
            s.failures
        );
        if s.failures > args.fail_budget {
            over_budget = true;
        }

        let stem = format!("track_{}_{}", spec.label(), args.estimator.name());
        let path = match format {
            Format::Json => {
                let path = out.join(format!("{stem}.json"));
                std::fs::write(&path, report.to_json()?)?;
                path
            }
            Format::Csv => {
                let path = out.join(format!("{stem}.csv"));
                std::fs::write(&path, report.to_csv())?;
                path
            }
        };
        println!("  -> {}", path.display());
    }
    if over_budget {
        eprintln!(
            "failure budget exceeded: a scenario recorded more than {} failures",
            args.fail_budget
        );
    }
    Ok(over_budget)
}
