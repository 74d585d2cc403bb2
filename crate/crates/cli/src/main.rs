//! `flowmap`: generate flow-map datasets, train surrogates, evaluate them,
//! compute FTLE fields and serve a model over HTTP.

mod config;
mod error;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use flowmap_core::fields::VectorField;
use flowmap_core::flowmap::{
    assemble_samples, extract, read_dataset, validation_seeds, write_dataset, ExtractionConfig, FlowMapStrategy,
};
use flowmap_core::reconstruct::{
    evaluate_model, ftle_from_field, ftle_from_model, test_seeds, write_error_map, write_ftle, write_per_cycle,
    write_violin, TEST_SEED_COUNT, TEST_SEED_OFFSET,
};
use flowmap_core::seeding::{regenerate, SeedingStrategy};
use flowmap_core::surrogate::{
    load_model, save_model, train_with_progress, Architecture, TrainConfig, TrainingContext,
};

use crate::config::{build_seeds, parse_field, parse_grid, FileConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "flowmap", version, about = "Lagrangian flow maps and their neural surrogates")]
struct Cli {
    /// TOML file with defaults for any flag; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FLOWMAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Seed, advect and write a flow-map dataset (.npy plus .json sidecar).
    Generate(GenerateArgs),
    /// Train a surrogate on a dataset; validation data is generated from 0.1·N seeds.
    Train(TrainArgs),
    /// Compare model inference against ground truth on random test seeds.
    Eval(EvalArgs),
    /// Forward FTLE from the field, the model, or both.
    Ftle(FtleArgs),
    /// Serve a model over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ExtractionFlags {
    /// `double-gyre`, `still`, or a gridded-field descriptor path.
    #[arg(long)]
    field: Option<String>,
    /// `long` or `short`.
    #[arg(long)]
    strategy: Option<String>,
    /// Time step per cycle.
    #[arg(long)]
    delta: Option<f64>,
    /// File-cycle interval C.
    #[arg(long)]
    interval: Option<u32>,
    /// Simulated duration T.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    extraction: ExtractionFlags,
    /// Seed count, or NXxNY for uniform seeding.
    #[arg(long)]
    seeds: Option<String>,
    /// `sobol`, `random` or `uniform`.
    #[arg(long)]
    seeding: Option<String>,
    /// RNG seed (random) or sequence offset (sobol).
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Dataset path (.npy).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training dataset (.npy with sidecar).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Validation dataset; generated from the training seeds when omitted.
    #[arg(long)]
    val_data: Option<PathBuf>,
    /// Field used to generate validation data.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    width_scale: Option<f64>,
    /// Seed for initialization and shuffling.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Model path; the training log goes next to it as .csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    field: Option<String>,
    /// Expected model strategy; a mismatch is an error.
    #[arg(long)]
    strategy: Option<String>,
    /// Number of test seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Output directory for the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FtleArgs {
    #[arg(long)]
    field: Option<String>,
    /// Also (or only, with --source model) compute from this model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// `truth`, `model` or `both`.
    #[arg(long)]
    source: Option<String>,
    /// Grid as GXxGY.
    #[arg(long)]
    grid: Option<String>,
    /// Integration time |T|.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Field for ground-truth overlays.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

fn parse_strategy(s: &str) -> Result<FlowMapStrategy, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("unknown strategy '{s}' (long or short)")))
}

fn parse_seeding(s: &str) -> Result<SeedingStrategy, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("unknown seeding '{s}' (sobol, random or uniform)")))
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

fn file_size(path: &Path) -> u64 {
    std::fs::metadata(path).map(|m| m.len()).unwrap_or(0)
}

fn cmd_generate(a: GenerateArgs, f: &FileConfig) -> Result<(), CliError> {
    let e = &a.extraction;
    let field = parse_field(e.field.as_deref().or(f.field.as_deref()).unwrap_or("double-gyre"))?;
    let strategy = parse_strategy(e.strategy.as_deref().or(f.strategy.as_deref()).unwrap_or("long"))?;
    let cfg = ExtractionConfig::new(
        e.delta.or(f.delta).unwrap_or(0.01),
        e.interval.or(f.interval).unwrap_or(50),
        e.duration.or(f.duration).unwrap_or(10.0),
        strategy,
    )?;
    let seeding = parse_seeding(a.seeding.as_deref().or(f.seeding.as_deref()).unwrap_or("sobol"))?;
    let count = a.seeds.or(f.seeds.clone()).unwrap_or_else(|| "5000".into());
    let seeds = build_seeds(field.domain(), seeding, &count, a.rng_seed.or(f.rng_seed).unwrap_or(0))?;
    let out = a.out.or(f.out.clone()).unwrap_or_else(|| "flowmap.npy".into());

    let started = Instant::now();
    let ds = extract(field.as_ref(), &seeds, &cfg)?;
    write_dataset(&ds, &out)?;
    println!("n = {}", cfg.file_cycles());
    println!("N = {}", seeds.len());
    println!("samples = {}", cfg.file_cycles() * seeds.len());
    println!("shape = [{}, {}, 3]", cfg.file_cycles() + 1, seeds.len());
    println!("wrote {} ({} bytes) in {:.2}s", out.display(), file_size(&out), started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_train(a: TrainArgs, f: &FileConfig) -> Result<(), CliError> {
    let data = required(a.data.or(f.data.clone()), "data")?;
    if !data.exists() {
        return Err(CliError::Io(format!("dataset {} not found", data.display())));
    }
    let ds = read_dataset(&data)?;
    let val = match a.val_data {
        Some(path) => {
            let v = read_dataset(&path)?;
            if v.config != ds.config {
                return Err(CliError::Config(format!(
                    "validation dataset {} uses a different extraction than {}",
                    path.display(),
                    data.display()
                )));
            }
            v
        }
        None => {
            let field = parse_field(a.field.as_deref().or(f.field.as_deref()).unwrap_or("double-gyre"))?;
            let count = std::num::NonZeroUsize::new(ds.seeds.count).ok_or_else(|| CliError::Config("empty dataset".into()))?;
            let train_seeds = regenerate(ds.seeds.strategy, ds.seeds.domain, count, ds.seeds.token);
            let recorded = ds.seed_positions();
            let matches = train_seeds.len() == recorded.len()
                && train_seeds.positions.iter().zip(&recorded).all(|(p, q)| p.distance(*q) < 1e-5);
            if !matches || field.domain() != ds.seeds.domain {
                return Err(CliError::Config(format!(
                    "dataset {} does not match its sidecar seeding or the --field domain; pass --val-data",
                    data.display()
                )));
            }
            extract(field.as_ref(), &validation_seeds(&train_seeds), &ds.config)?
        }
    };

    let defaults = TrainConfig::for_strategy(ds.config.strategy);
    let cfg = TrainConfig {
        epochs: a.epochs.or(f.epochs).unwrap_or(defaults.epochs),
        batch_size: a.batch_size.or(f.batch_size).unwrap_or(defaults.batch_size),
        lr0: a.lr.or(f.lr).unwrap_or(defaults.lr0),
        rng_seed: a.rng_seed.or(f.rng_seed).unwrap_or(defaults.rng_seed),
        ..defaults
    };
    let arch = Architecture::scaled(a.width_scale.or(f.width_scale).unwrap_or(1.0));
    let out = a.out.or(f.out.clone()).unwrap_or_else(|| "model.bin".into());
    let log_path = out.with_extension("csv");

    let samples = assemble_samples(&ds);
    let val_samples = assemble_samples(&val);
    println!(
        "training {} parameters on {} samples ({} validation), {} epochs",
        arch.param_count(),
        samples.len(),
        val_samples.len(),
        cfg.epochs
    );
    let (model, log) = train_with_progress(&samples, &val_samples, &TrainingContext::from_dataset(&ds), &arch, &cfg, |r| {
        eprintln!(
            "epoch {:>4}  train {:.6}  val {:.6}  lr {:.2e}  {:.1}s",
            r.epoch, r.train_loss, r.val_loss, r.lr, r.seconds
        );
    })?;
    save_model(&model, &out)?;
    log.write_csv(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    println!("wrote {} ({} bytes) and {}", out.display(), file_size(&out), log_path.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs, f: &FileConfig) -> Result<(), CliError> {
    let model_path = required(a.model.or(f.model.clone()), "model")?;
    let model = load_model(&model_path)?;
    if let Some(s) = a.strategy.as_deref().or(f.strategy.as_deref()) {
        let wanted = parse_strategy(s)?;
        if wanted != model.strategy() {
            return Err(CliError::Config(format!(
                "model {} was trained with the {} strategy, {wanted} requested",
                model_path.display(),
                model.strategy()
            )));
        }
    }
    let field = parse_field(a.field.as_deref().or(f.field.as_deref()).unwrap_or("double-gyre"))?;
    if field.domain() != model.domain() {
        return Err(CliError::Config("field domain differs from the model domain".into()));
    }
    let count: usize = match a.seeds.or(f.seeds.clone()) {
        Some(s) => s.parse().map_err(|_| CliError::Config(format!("bad seed count '{s}'")))?,
        None => TEST_SEED_COUNT,
    };
    let count = std::num::NonZeroUsize::new(count).ok_or_else(|| CliError::Config("seed count must be at least 1".into()))?;
    let seeds = test_seeds(model.domain(), count, TEST_SEED_OFFSET, a.rng_seed.or(f.rng_seed).unwrap_or(0))?;
    let out = a.out.or(f.out.clone()).unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let ev = evaluate_model(&model, field.as_ref(), &seeds.positions)?;
    write_error_map(out.join("error_map.csv"), &seeds.positions, &ev.report.errors)?;
    write_violin(out.join("violin.csv"), &ev.report)?;
    write_per_cycle(out.join("per_cycle.csv"), &ev.report.per_cycle)?;
    println!("trajectories = {}", ev.report.errors.len());
    println!("min = {:.6}", ev.report.min);
    println!("median = {:.6}", ev.report.median);
    println!("max = {:.6}", ev.report.max);
    println!("wrote error_map.csv, violin.csv, per_cycle.csv to {}", out.display());
    Ok(())
}

fn cmd_ftle(a: FtleArgs, f: &FileConfig) -> Result<(), CliError> {
    let model = match a.model.or(f.model.clone()) {
        Some(p) => Some(load_model(&p)?),
        None => None,
    };
    let default_source = if model.is_some() { "both" } else { "truth" };
    let source = a.source.or(f.source.clone()).unwrap_or_else(|| default_source.into());
    let (want_truth, want_model) = match source.as_str() {
        "truth" => (true, false),
        "model" => (false, true),
        "both" => (true, true),
        other => return Err(CliError::Config(format!("unknown source '{other}' (truth, model or both)"))),
    };
    if want_model && model.is_none() {
        return Err(CliError::Config("--model is required for model FTLE".into()));
    }
    let (gx, gy) = parse_grid(a.grid.as_deref().or(f.grid.as_deref()).unwrap_or("256x128"))?;
    let delta = a.delta.or(f.delta).or(model.as_ref().map(|m| m.extraction.delta)).unwrap_or(0.01);
    let default_duration = model.as_ref().map(|m| m.extraction.total_cycles() as f64 * m.extraction.delta);
    let duration = a.duration.or(f.duration).or(default_duration).unwrap_or(10.0);
    if !(duration.is_finite() && duration > 0.0) || !(delta.is_finite() && delta > 0.0) {
        return Err(CliError::Config(format!("duration ({duration}) and delta ({delta}) must be positive")));
    }
    let ratio = duration / delta;
    let cycles = ratio.round();
    if cycles < 1.0 || (ratio - cycles).abs() > 1e-6 * ratio.max(1.0) {
        return Err(CliError::Config(format!("duration {duration} is not a positive whole number of {delta} cycles")));
    }
    let cycles = cycles as u32;
    let out = a.out.or(f.out.clone()).unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    if want_truth {
        let field = parse_field(a.field.as_deref().or(f.field.as_deref()).unwrap_or("double-gyre"))?;
        let ftle = ftle_from_field(field.as_ref(), gx, gy, cycles, delta)?;
        let path = out.join("ftle_truth.csv");
        write_ftle(&path, &ftle)?;
        println!("truth: {} values in [{:.4}, {:.4}] -> {}", ftle.values.len(), ftle.min(), ftle.max(), path.display());
    }
    if let (true, Some(m)) = (want_model, model.as_ref()) {
        let ftle = ftle_from_model(m, gx, gy, cycles)?;
        let path = out.join("ftle_model.csv");
        write_ftle(&path, &ftle)?;
        println!("model: {} values in [{:.4}, {:.4}] -> {}", ftle.values.len(), ftle.min(), ftle.max(), path.display());
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs, f: &FileConfig) -> Result<(), CliError> {
    let model = required(a.model.or(f.model.clone()), "model")?;
    if !model.is_file() {
        return Err(CliError::Io(format!("model {} not found", model.display())));
    }
    let truth: Option<Arc<dyn VectorField>> = match a.field.as_deref().or(f.field.as_deref()) {
        Some(spec) => Some(parse_field(spec)?),
        None => None,
    };
    let port = a.port.or(f.port).unwrap_or(flowmap_server::DEFAULT_PORT);
    let addr: SocketAddr = format!("{}:{port}", a.host)
        .parse()
        .map_err(|_| CliError::Config(format!("bad host '{}'", a.host)))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    println!("listening on http://{addr}");
    runtime
        .block_on(flowmap_server::serve(addr, model, truth, flowmap_server::shutdown_signal()))
        .map_err(|e| match e {
            flowmap_server::ServeError::Model(m) => m.into(),
            other => CliError::Io(other.to_string()),
        })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &file),
        Command::Train(a) => cmd_train(a, &file),
        Command::Eval(a) => cmd_eval(a, &file),
        Command::Ftle(a) => cmd_ftle(a, &file),
        Command::Serve(a) => cmd_serve(a, &file),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
