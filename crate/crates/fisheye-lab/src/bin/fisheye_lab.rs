//! Command-line front end: every library capability behind one binary with
//! machine-readable outputs.
//!
//! Exit codes: 0 on success (including `--help`), 1 on usage errors such as
//! unknown flags or invalid parameter JSON, 2 on runtime failures.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fisheye_lab::camera::DEFAULT_THETA_MAX;
use fisheye_lab::metrics::{paired_diff_ci, EvalMode};
use fisheye_lab::pipeline::{generate_dataset, load_manifest, run_evaluation, GenerateConfig};
use fisheye_lab::presets::{
    adapt_to_size, preset_catalog, sample_presets, sweep_all_parameters, sweep_parameter,
    SweepResult, SweepSpec, DEFAULT_SWEEP_HI, DEFAULT_SWEEP_LO, DEFAULT_SWEEP_STEPS,
};
use fisheye_lab::toynet::{
    calibrate_toy, make_calib_dataset, measure_mean_shift, parse_layer_stack, receptive_field,
    save_net_json, shift_benchmark_config, shift_benchmark_nets, stride_discrepancy_note,
    train_wgan, write_loss_trace_csv, CalibConfig, CalibFamily, CalibLossConfig, ShiftTask,
};
use fisheye_lab::warp::{
    load_image, rectify_image_with, save_image, save_mask, synthesize_fisheye_with,
};
use fisheye_lab::CameraParams;

/// How many decimal places the human-readable summaries print.
const SUMMARY_DECIMALS: usize = 4;
/// Seed for the held-out evaluation draw of `train-toy`, distinct from any
/// training seed so evaluation never reuses training samples.
const SHIFT_EVAL_SEED: u64 = 0x6576616c;
/// Sample count for the held-out evaluation draw of `train-toy`.
const SHIFT_EVAL_SAMPLES: usize = 2000;

#[derive(Parser)]
#[command(
    name = "fisheye-lab",
    version,
    about = "Synthesize, rectify, sweep, and evaluate radial fisheye distortion",
    propagate_version = true
)]
struct Cli {
    /// Worker threads (default: FISHEYE_LAB_THREADS, else all cores).
    /// Results are identical at any setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit a machine-readable JSON summary on standard output.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a distortion model to a perspective image.
    Synthesize(SynthesizeArgs),
    /// Remove a distortion model from a fisheye image.
    Rectify(RectifyArgs),
    /// Render a montage stepping one coefficient (or all five) over a range.
    Sweep(SweepArgs),
    /// List or sample the built-in distortion presets.
    Presets(PresetsArgs),
    /// Batch-synthesize a labeled fisheye dataset from an image directory.
    Dataset(DatasetArgs),
    /// Score rectifications listed in a dataset manifest.
    Evaluate(EvaluateArgs),
    /// Paired-difference confidence interval over score files.
    Ci(CiArgs),
    /// Train the 1-D adversarial shift benchmark.
    TrainToy(TrainToyArgs),
    /// Train the radial-profile calibration regressor.
    CalibrateToy(CalibrateToyArgs),
    /// Receptive fields of a convolutional layer stack.
    Rf(RfArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SynthesizeArgs {
    /// Camera parameter JSON ({"fx","fy","cx","cy","k":[k1..k5]}).
    #[arg(long)]
    params: PathBuf,
    /// Input perspective image (PNG or JPEG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output fisheye PNG.
    #[arg(long)]
    out: PathBuf,
    /// Optional output PNG marking pixels with an in-view source.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Largest admissible field angle in radians.
    #[arg(long, default_value_t = DEFAULT_THETA_MAX)]
    theta_max: f64,
    /// Fill value for out-of-view pixels, in the image's sample scale.
    #[arg(long, default_value_t = 0.0)]
    fill: f32,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RectifyArgs {
    /// Camera parameter JSON ({"fx","fy","cx","cy","k":[k1..k5]}).
    #[arg(long)]
    params: PathBuf,
    /// Input fisheye image (PNG or JPEG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output rectified PNG.
    #[arg(long)]
    out: PathBuf,
    /// Optional output PNG marking pixels with an in-view source.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Largest admissible field angle in radians.
    #[arg(long, default_value_t = DEFAULT_THETA_MAX)]
    theta_max: f64,
    /// Fill value for out-of-view pixels, in the image's sample scale.
    #[arg(long, default_value_t = 0.0)]
    fill: f32,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Coefficient to sweep: k1..k5 (or a bare 1..5).
    #[arg(long, conflicts_with = "all")]
    coeff: Option<String>,
    /// Sweep every coefficient, one montage row each.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = DEFAULT_SWEEP_LO)]
    lo: f64,
    #[arg(long, default_value_t = DEFAULT_SWEEP_HI)]
    hi: f64,
    /// Number of evenly spaced values; the last lands on --hi exactly.
    #[arg(long, default_value_t = DEFAULT_SWEEP_STEPS)]
    steps: usize,
    /// Input perspective image the cells are synthesized from.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output montage PNG.
    #[arg(long)]
    out: PathBuf,
    /// Baseline camera JSON; defaults to an equidistant model fitted to the
    /// input size with every other coefficient zero.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Where to write the per-cell parameter JSON (default: <out>.params.json).
    #[arg(long)]
    cells_out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print a seeded random subset of this size instead of the catalog.
    #[arg(long)]
    sample: Option<usize>,
    /// Seed for --sample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale intrinsics to this raster, e.g. 640x480.
    #[arg(long)]
    size: Option<String>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Directory of source perspective images (PNG or JPEG).
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory (images, masks, manifest.jsonl).
    #[arg(long)]
    out: PathBuf,
    /// Distortion presets drawn per source image.
    #[arg(long, default_value_t = 4)]
    per_image: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of entries assigned to the training split.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Largest admissible field angle in radians.
    #[arg(long, default_value_t = DEFAULT_THETA_MAX)]
    theta_max: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalModeArg {
    /// Rectify each fisheye with its recorded ground-truth parameters.
    QuickRect,
    /// Score prediction PNGs named <id>.png from --predictions.
    FullPipeline,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset manifest (JSONL) produced by `dataset`.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalModeArg::QuickRect)]
    mode: EvalModeArg,
    /// Directory of prediction PNGs for --mode full-pipeline.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Write the full report as pretty JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CiArgs {
    /// File of paired differences, one number per line.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    diffs: Option<PathBuf>,
    /// First score file (paired line by line with --b).
    #[arg(long, requires = "b")]
    a: Option<PathBuf>,
    /// Second score file; the interval covers mean(a - b).
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Confidence level in (0, 1).
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TrainToyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator updates; each is preceded by --n-critic critic updates.
    #[arg(long)]
    steps: Option<usize>,
    /// Target translation of the 1-D task.
    #[arg(long, default_value_t = 3.0)]
    shift: f64,
    #[arg(long)]
    critic_lr: Option<f64>,
    #[arg(long)]
    gen_lr: Option<f64>,
    /// Critic weight-clipping bound.
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    n_critic: Option<usize>,
    /// Weight on the reconstruction term.
    #[arg(long)]
    lambda: Option<f64>,
    /// Write the per-step loss trace CSV (step,L_D,L_G,L1) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the trained generator JSON here.
    #[arg(long)]
    generator_out: Option<PathBuf>,
    /// Write the trained critic JSON here.
    #[arg(long)]
    critic_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CalibFamilyArg {
    /// Only the leading coefficient varies across samples.
    K1Only,
    /// All five polynomial coefficients vary.
    All,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CalibrateToyArgs {
    /// Number of generated samples.
    #[arg(long, default_value_t = 240)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = CalibFamilyArg::K1Only)]
    family: CalibFamilyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Weight on the leading-coefficient term of the loss.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Write the trained regressor JSON here.
    #[arg(long)]
    net_out: Option<PathBuf>,
}

#[derive(Args)]
struct RfArgs {
    /// Comma-separated stack in KxKsS or KxKsSpP form, e.g.
    /// 4x4s2,4x4s2,4x4s2,4x4s1,4x4s1 (padding defaults to 1).
    #[arg(long)]
    layers: String,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() {
    // Die quietly on a closed pipe (`fisheye-lab presets | head`) instead of
    // panicking; Rust masks SIGPIPE by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(msg) = init_threads(cli.threads) {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
    match dispatch(&cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

/// Builds the global worker pool from --threads, the FISHEYE_LAB_THREADS
/// environment variable, or the machine's parallelism, in that order.
fn init_threads(flag: Option<usize>) -> Result<(), String> {
    let from_env = match std::env::var("FISHEYE_LAB_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| format!("FISHEYE_LAB_THREADS must be a number, got `{v}`"))?,
        ),
        Err(_) => None,
    };
    let threads = flag.or(from_env);
    if let Some(n) = threads {
        if n == 0 {
            return Err("--threads must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synthesize(args) => run_warp(cli, args_to_warp(args, true)),
        Command::Rectify(args) => run_warp(cli, args_to_warp_rect(args)),
        Command::Sweep(args) => run_sweep(cli, args),
        Command::Presets(args) => run_presets(cli, args),
        Command::Dataset(args) => run_dataset(cli, args),
        Command::Evaluate(args) => run_evaluate(cli, args),
        Command::Ci(args) => run_ci(cli, args),
        Command::TrainToy(args) => run_train_toy(cli, args),
        Command::CalibrateToy(args) => run_calibrate_toy(cli, args),
        Command::Rf(args) => run_rf(cli, args),
    }
}

/// Loads and validates camera parameter JSON. Malformed or out-of-range
/// content is a usage error whose message names the offending field.
fn load_params(path: &Path) -> Result<CameraParams, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid params in {}: {e}", path.display())))
}

struct WarpJob<'a> {
    params: &'a Path,
    input: &'a Path,
    out: &'a Path,
    mask: Option<&'a Path>,
    theta_max: f64,
    fill: f32,
    synthesize: bool,
}

fn args_to_warp(a: &SynthesizeArgs, synthesize: bool) -> WarpJob<'_> {
    WarpJob {
        params: &a.params,
        input: &a.input,
        out: &a.out,
        mask: a.mask.as_deref(),
        theta_max: a.theta_max,
        fill: a.fill,
        synthesize,
    }
}

fn args_to_warp_rect(a: &RectifyArgs) -> WarpJob<'_> {
    WarpJob {
        params: &a.params,
        input: &a.input,
        out: &a.out,
        mask: a.mask.as_deref(),
        theta_max: a.theta_max,
        fill: a.fill,
        synthesize: false,
    }
}

fn run_warp(cli: &Cli, job: WarpJob<'_>) -> Result<(), CliError> {
    let params = load_params(job.params)?;
    let img = load_image(job.input).map_err(CliError::runtime)?;
    let (out, mask) = if job.synthesize {
        synthesize_fisheye_with(&img, &params, job.theta_max, job.fill)
    } else {
        rectify_image_with(&img, &params, job.theta_max, job.fill)
    }
    .map_err(CliError::runtime)?;
    save_image(&out, job.out).map_err(CliError::runtime)?;
    if let Some(mask_path) = job.mask {
        save_mask(&mask, mask_path).map_err(CliError::runtime)?;
    }
    let valid = mask.fraction_true();
    if cli.json {
        println!(
            "{}",
            json!({
                "command": if job.synthesize { "synthesize" } else { "rectify" },
                "input": job.input,
                "output": job.out,
                "mask": job.mask,
                "width": out.width,
                "height": out.height,
                "valid_fraction": valid,
            })
        );
    } else {
        println!(
            "wrote {} ({}x{}, {:.1}% of pixels in view)",
            job.out.display(),
            out.width,
            out.height,
            100.0 * valid
        );
        if let Some(mask_path) = job.mask {
            println!("wrote {}", mask_path.display());
        }
    }
    Ok(())
}

fn parse_coefficient(text: &str) -> Result<usize, CliError> {
    let digits = text.strip_prefix('k').unwrap_or(text);
    match digits.parse::<usize>() {
        Ok(i) if (1..=5).contains(&i) => Ok(i),
        _ => Err(CliError::Usage(format!(
            "--coeff must be k1..k5 or 1..5, got `{text}`"
        ))),
    }
}

fn run_sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let img = load_image(&args.input).map_err(CliError::runtime)?;
    let baseline = match &args.params {
        Some(path) => load_params(path)?,
        None => {
            let canonical = fisheye_lab::presets::find_preset("fullframe-2")
                .expect("catalog preset exists")
                .params;
            adapt_to_size(&canonical, img.width, img.height)
        }
    };
    let (result, row_count): (SweepResult, usize) = if args.all {
        let all = sweep_all_parameters(&baseline, args.lo, args.hi, args.steps, &img)
            .map_err(CliError::runtime)?;
        (all, 5)
    } else {
        let coeff = match &args.coeff {
            Some(c) => parse_coefficient(c)?,
            None => return Err(CliError::Usage("pass --coeff k1..k5 or --all".into())),
        };
        let spec = SweepSpec {
            coefficient: coeff,
            lo: args.lo,
            hi: args.hi,
            steps: args.steps,
            baseline,
        };
        let row = sweep_parameter(&spec, &img).map_err(CliError::runtime)?;
        (row, 1)
    };
    save_image(&result.montage, &args.out).map_err(CliError::runtime)?;

    let cells_path = args
        .cells_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("params.json"));
    let payload = json!({
        "lo": args.lo,
        "hi": args.hi,
        "steps": args.steps,
        "cells": result.cells,
    });
    let mut text = serde_json::to_string_pretty(&payload).expect("json value serializes");
    text.push('\n');
    std::fs::write(&cells_path, text).map_err(CliError::runtime)?;

    let flagged: usize = result.cells.iter().filter(|c| !c.admissible).count();
    if cli.json {
        println!(
            "{}",
            json!({
                "command": "sweep",
                "montage": args.out,
                "cells": cells_path,
                "rows": row_count,
                "cells_per_row": args.steps,
                "inadmissible_cells": flagged,
            })
        );
    } else {
        println!(
            "wrote {} ({} row{}, {} cells each, {} inadmissible) and {}",
            args.out.display(),
            row_count,
            if row_count == 1 { "" } else { "s" },
            args.steps,
            flagged,
            cells_path.display()
        );
    }
    Ok(())
}

fn parse_size(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--size must look like 640x480, got `{text}`"));
    let (w, h) = text.split_once('x').ok_or_else(bad)?;
    let w = w.parse::<usize>().map_err(|_| bad())?;
    let h = h.parse::<usize>().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn run_presets(cli: &Cli, args: &PresetsArgs) -> Result<(), CliError> {
    let catalog = preset_catalog();
    let chosen = match args.sample {
        Some(n) => sample_presets(&catalog, n, args.seed).map_err(CliError::usage)?,
        None => catalog,
    };
    let chosen: Vec<_> = match &args.size {
        Some(size) => {
            let (w, h) = parse_size(size)?;
            chosen
                .into_iter()
                .map(|mut p| {
                    p.params = adapt_to_size(&p.params, w, h);
                    p
                })
                .collect()
        }
        None => chosen,
    };
    if cli.json {
        println!("{}", serde_json::to_string(&chosen).expect("presets serialize"));
    } else {
        println!(
            "{:<14} {:<12} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "name", "category", "f", "k1", "k2", "k3", "k4", "k5"
        );
        for p in &chosen {
            let k = p.params.distortion.k;
            println!(
                "{:<14} {:<12} {:>9.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                p.name, p.category.to_string(), p.params.intrinsics.fx,
                k[0], k[1], k[2], k[3], k[4]
            );
        }
    }
    Ok(())
}

fn run_dataset(cli: &Cli, args: &DatasetArgs) -> Result<(), CliError> {
    let config = GenerateConfig {
        per_image_presets: args.per_image,
        seed: args.seed,
        train_fraction: args.train_fraction,
        theta_max: args.theta_max,
    };
    let catalog = preset_catalog();
    let manifest =
        generate_dataset(&args.corpus, &catalog, &config, &args.out).map_err(CliError::runtime)?;
    let train = manifest
        .split(fisheye_lab::pipeline::Split::Train)
        .count();
    let test = manifest.split(fisheye_lab::pipeline::Split::Test).count();
    let manifest_path = args.out.join("manifest.jsonl");
    if cli.json {
        println!(
            "{}",
            json!({
                "command": "dataset",
                "manifest": manifest_path,
                "entries": manifest.entries.len(),
                "train": train,
                "test": test,
                "seed": args.seed,
            })
        );
    } else {
        println!(
            "wrote {} ({} entries: {} train, {} test)",
            manifest_path.display(),
            manifest.entries.len(),
            train,
            test
        );
    }
    Ok(())
}

fn run_evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<(), CliError> {
    // Flag consistency is a usage matter; check it before touching files.
    match args.mode {
        EvalModeArg::QuickRect if args.predictions.is_some() => {
            return Err(CliError::Usage(
                "--predictions only applies to --mode full-pipeline".into(),
            ));
        }
        EvalModeArg::FullPipeline if args.predictions.is_none() => {
            return Err(CliError::Usage(
                "--mode full-pipeline requires --predictions".into(),
            ));
        }
        _ => {}
    }
    let manifest = load_manifest(&args.manifest).map_err(CliError::runtime)?;
    let root = args
        .manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let mode = match args.mode {
        EvalModeArg::QuickRect => EvalMode::QuickRect,
        EvalModeArg::FullPipeline => EvalMode::FullPipeline {
            predictions: args.predictions.as_deref().expect("checked above"),
        },
    };
    let report =
        run_evaluation(&manifest, &root, mode, args.out.as_deref()).map_err(CliError::runtime)?;
    if cli.json {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print!("{}", report.render_table());
        if let Some(out) = &args.out {
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn read_score_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            CliError::Usage(format!(
                "{} line {}: `{line}` is not a number",
                path.display(),
                i + 1
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

fn run_ci(cli: &Cli, args: &CiArgs) -> Result<(), CliError> {
    let diffs = match (&args.diffs, &args.a, &args.b) {
        (Some(path), None, None) => read_score_file(path)?,
        (None, Some(a), Some(b)) => {
            let xs = read_score_file(a)?;
            let ys = read_score_file(b)?;
            if xs.len() != ys.len() {
                return Err(CliError::Usage(format!(
                    "paired files differ in length: {} has {}, {} has {}",
                    a.display(),
                    xs.len(),
                    b.display(),
                    ys.len()
                )));
            }
            xs.iter().zip(&ys).map(|(x, y)| x - y).collect()
        }
        _ => {
            return Err(CliError::Usage(
                "pass --diffs FILE, or --a FILE with --b FILE".into(),
            ))
        }
    };
    let ci = paired_diff_ci(&diffs, args.level).map_err(CliError::runtime)?;
    if cli.json {
        let mut value = serde_json::to_value(&ci).expect("interval serializes");
        value["contains_zero"] = json!(ci.contains_zero());
        println!("{value}");
    } else {
        println!(
            "mean difference {:.prec$} with {:.1}% interval [{:.prec$}, {:.prec$}] (half width {:.prec$}, n={})",
            ci.mean,
            100.0 * ci.level,
            ci.lower,
            ci.upper,
            ci.half_width,
            ci.n,
            prec = SUMMARY_DECIMALS + 2,
        );
        println!(
            "zero {} the interval",
            if ci.contains_zero() {
                "lies inside"
            } else {
                "lies outside"
            }
        );
    }
    Ok(())
}

fn run_train_toy(cli: &Cli, args: &TrainToyArgs) -> Result<(), CliError> {
    let mut cfg = shift_benchmark_config(args.seed);
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.critic_lr {
        cfg.critic_lr = v;
    }
    if let Some(v) = args.gen_lr {
        cfg.gen_lr = v;
    }
    if let Some(v) = args.clip {
        cfg.clip = v;
    }
    if let Some(v) = args.batch {
        cfg.batch = v;
    }
    if let Some(v) = args.n_critic {
        cfg.n_critic = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    let (gen, critic) = shift_benchmark_nets(args.seed);
    let task = ShiftTask { shift: args.shift };
    let result = train_wgan(gen, critic, &task, &cfg).map_err(CliError::runtime)?;
    let mean_shift =
        measure_mean_shift(&result.generator, SHIFT_EVAL_SAMPLES, SHIFT_EVAL_SEED)
            .map_err(CliError::runtime)?;
    if let Some(path) = &args.trace {
        write_loss_trace_csv(path, &result.trace).map_err(CliError::runtime)?;
    }
    if let Some(path) = &args.generator_out {
        save_net_json(path, &result.generator).map_err(CliError::runtime)?;
    }
    if let Some(path) = &args.critic_out {
        save_net_json(path, &result.critic).map_err(CliError::runtime)?;
    }
    let last = result.trace.last();
    let max_critic_weight = result
        .trace
        .iter()
        .map(|r| r.max_critic_weight)
        .fold(0.0f64, f64::max);
    if cli.json {
        println!(
            "{}",
            json!({
                "command": "train-toy",
                "seed": args.seed,
                "steps": cfg.steps,
                "target_shift": args.shift,
                "mean_shift": mean_shift,
                "final_critic_loss": last.map(|r| r.critic_loss),
                "final_generator_loss": last.map(|r| r.generator_loss),
                "final_l1": last.map(|r| r.l1),
                "max_critic_weight": max_critic_weight,
                "clip": cfg.clip,
                "trace": args.trace,
            })
        );
    } else {
        println!(
            "mean generated shift {:.prec$} (target {}), {} steps",
            mean_shift,
            args.shift,
            cfg.steps,
            prec = SUMMARY_DECIMALS,
        );
        if let Some(row) = last {
            println!(
                "final losses: critic {:.prec$}, generator {:.prec$}, reconstruction {:.prec$}",
                row.critic_loss,
                row.generator_loss,
                row.l1,
                prec = SUMMARY_DECIMALS,
            );
        }
        println!(
            "critic weights stayed within the clip bound {} (max seen {:.prec$})",
            cfg.clip,
            max_critic_weight,
            prec = SUMMARY_DECIMALS + 2,
        );
    }
    Ok(())
}

fn run_calibrate_toy(cli: &Cli, args: &CalibrateToyArgs) -> Result<(), CliError> {
    let family = match args.family {
        CalibFamilyArg::K1Only => CalibFamily::K1Only,
        CalibFamilyArg::All => CalibFamily::AllCoefficients,
    };
    let dataset = make_calib_dataset(args.samples, family, args.seed);
    let mut cfg = CalibConfig {
        seed: args.seed,
        ..CalibConfig::default()
    };
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.batch {
        cfg.batch = v;
    }
    if let Some(v) = args.train_fraction {
        cfg.train_fraction = v;
    }
    let loss_cfg = match args.beta {
        Some(beta) => CalibLossConfig { beta },
        None => CalibLossConfig::default(),
    };
    let result = calibrate_toy(&dataset, &cfg, &loss_cfg).map_err(CliError::runtime)?;
    if let Some(path) = &args.net_out {
        save_net_json(path, &result.net).map_err(CliError::runtime)?;
    }
    if cli.json {
        println!(
            "{}",
            json!({
                "command": "calibrate-toy",
                "samples": args.samples,
                "seed": args.seed,
                "epochs": cfg.epochs,
                "beta": loss_cfg.beta,
                "mean_abs_k1_error": result.score.mean_abs_k1_error,
                "mean_weighted_l2": result.score.mean_weighted_l2,
                "heldout": result.score.n,
            })
        );
    } else {
        println!(
            "heldout mean |k1 error| {:.prec$}, mean weighted squared error {:.prec$} ({} samples, beta {})",
            result.score.mean_abs_k1_error,
            result.score.mean_weighted_l2,
            result.score.n,
            loss_cfg.beta,
            prec = SUMMARY_DECIMALS + 2,
        );
    }
    Ok(())
}

fn run_rf(cli: &Cli, args: &RfArgs) -> Result<(), CliError> {
    let stack = parse_layer_stack(&args.layers).map_err(CliError::usage)?;
    let fields = receptive_field(&stack).map_err(CliError::usage)?;
    let note = stride_discrepancy_note(&stack);
    if cli.json {
        println!(
            "{}",
            json!({
                "layers": stack,
                "receptive_fields": fields,
                "note": note,
            })
        );
    } else {
        let rendered: Vec<String> = fields.iter().map(|v| v.to_string()).collect();
        println!("{}", rendered.join(" "));
        if let Some(note) = note {
            eprintln!("note: {note}");
        }
    }
    Ok(())
}
