//! Command-line front end: simulation experiments, single-frame estimation,
//! and dataset evaluation with machine-readable outputs.
//!
//! Outputs are deterministic for a fixed `--seed`, independently of
//! `--threads`. Log verbosity is controlled by the `FCOP_LOG` environment
//! variable. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fcop::geometry::TripletSolution;
use fcop::ingest::{evaluate_dataset, subsample_object, DatasetManifest, DatasetReport};
use fcop::robust::{
    estimate_frame_focal, interval_stab, object_candidates, ransac_focal, RobustConfig,
};
use fcop::synth::{run_noise_sweep, run_stability_experiment, NoiseAxis, SynthError};

#[derive(Parser)]
#[command(name = "fcop", version, about = "Focal length estimation from depth and canonical object coordinates")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solver error distribution over noise-free random scenes
    Stability {
        /// Number of random trials
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (quantiles followed by log10 histograms)
        #[arg(long)]
        out: PathBuf,
    },
    /// Median focal error as a function of injected noise bounds
    NoiseSweep {
        /// Which noise bound to vary
        #[arg(long)]
        axis: NoiseAxisArg,
        /// Comma-separated noise levels, ascending (meters for depth)
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        /// Trials per level (per grid cell for --axis both)
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Consensus half-width in pixels
        #[arg(long, default_value_t = 5.0)]
        eps: f64,
        /// Triplet samples per object
        #[arg(long = "samples-T", default_value_t = 200)]
        samples_t: usize,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the focal length of one dataset frame
    Estimate {
        /// Dataset manifest (JSON)
        #[arg(long)]
        manifest: PathBuf,
        /// Frame id to estimate
        #[arg(long)]
        frame: String,
        /// Robust scheme
        #[arg(long, value_enum, default_value_t = RobustScheme::Is)]
        robust: RobustScheme,
        #[arg(long, default_value_t = 5.0)]
        eps: f64,
        #[arg(long = "samples-T", default_value_t = 200)]
        samples_t: usize,
        /// Inlier threshold in meters (ransac scheme only)
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        /// Cap on correspondences per object
        #[arg(long, default_value_t = 1000)]
        max_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON result here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate focal estimation over every frame of a dataset
    Evaluate {
        /// Dataset manifest (JSON)
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        eps: f64,
        #[arg(long = "samples-T", default_value_t = 200)]
        samples_t: usize,
        #[arg(long, default_value_t = 1000)]
        max_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output base path; writes <out>.json, <out>.frames.csv, <out>.scenes.csv
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RobustScheme {
    Is,
    Ransac,
}

#[derive(Clone, Copy)]
struct NoiseAxisArg(NoiseAxis);

impl std::str::FromStr for NoiseAxisArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NoiseAxisArg)
    }
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            // Bad levels/trials are flag mistakes, not runtime failures.
            SynthError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.into()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FCOP_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(CliError::Runtime)?;
    Ok(BufWriter::new(file))
}

fn finish_output(mut w: BufWriter<File>, what: &str) -> Result<(), CliError> {
    w.flush()
        .with_context(|| format!("writing {what}"))
        .map_err(CliError::Runtime)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stability { trials, seed, out } => {
            let dist = run_stability_experiment(trials as usize, seed)?;
            let mut w = create_output(&out)?;
            dist.write_csv(&mut w)
                .context("writing stability CSV")
                .map_err(CliError::Runtime)?;
            finish_output(w, "stability CSV")?;
            log::info!(
                "stability: {} trials, median focal error {:e}%",
                dist.trials,
                dist.focal_pct.median
            );
            Ok(())
        }
        Command::NoiseSweep {
            axis,
            levels,
            trials,
            seed,
            eps,
            samples_t,
            out,
        } => {
            let robust = RobustConfig {
                num_samples: samples_t,
                noise_bound_px: eps,
                seed,
            };
            let table = run_noise_sweep(axis.0, &levels, trials as usize, seed, &robust)?;
            let mut w = create_output(&out)?;
            table
                .write_csv(&mut w)
                .context("writing sweep CSV")
                .map_err(CliError::Runtime)?;
            finish_output(w, "sweep CSV")?;
            Ok(())
        }
        Command::Estimate {
            manifest,
            frame,
            robust,
            eps,
            samples_t,
            threshold,
            max_points,
            seed,
            out,
        } => {
            let output = cmd_estimate(
                &manifest, &frame, robust, eps, samples_t, threshold, max_points, seed,
            )?;
            let json = serde_json::to_string_pretty(&output).expect("result serializes");
            match out {
                Some(path) => {
                    let mut w = create_output(&path)?;
                    writeln!(w, "{json}")
                        .context("writing JSON result")
                        .map_err(CliError::Runtime)?;
                    finish_output(w, "JSON result")?;
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Evaluate {
            manifest,
            eps,
            samples_t,
            max_points,
            seed,
            out,
        } => cmd_evaluate(&manifest, eps, samples_t, max_points, seed, &out),
    }
}

#[derive(Serialize)]
struct EstimateConfigEcho {
    method: &'static str,
    eps_px: f64,
    samples_per_object: usize,
    threshold_m: Option<f64>,
    max_points: usize,
    seed: u64,
}

#[derive(Serialize)]
struct ObjectResult {
    index: usize,
    category: String,
    num_points: usize,
    focal: Option<f64>,
    support: Option<usize>,
    num_rejected: usize,
    candidates: Vec<TripletSolution>,
}

#[derive(Serialize)]
struct EstimateResult {
    frame_id: String,
    focal: f64,
    support: usize,
    num_rejected: usize,
    config: EstimateConfigEcho,
    objects: Vec<ObjectResult>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    manifest_path: &Path,
    frame_id: &str,
    scheme: RobustScheme,
    eps: f64,
    samples_t: usize,
    threshold: f64,
    max_points: usize,
    seed: u64,
) -> Result<EstimateResult, CliError> {
    let manifest = DatasetManifest::load(manifest_path)
        .context("loading manifest")
        .map_err(CliError::Runtime)?;
    let frame = manifest
        .load_frame_by_id(frame_id)
        .context("loading frame")
        .map_err(CliError::Runtime)?;
    let cfg = RobustConfig {
        num_samples: samples_t,
        noise_bound_px: eps,
        seed,
    };
    let objects: Vec<_> = frame
        .objects
        .iter()
        .map(|obj| subsample_object(obj, max_points, seed))
        .collect();

    match scheme {
        RobustScheme::Is => {
            let corrs: Vec<Vec<_>> = objects.iter().map(|o| o.correspondences.clone()).collect();
            let estimate = estimate_frame_focal(&corrs, &cfg)
                .context("frame estimation")
                .map_err(CliError::Runtime)?;
            let object_results = objects
                .iter()
                .enumerate()
                .map(|(i, obj)| {
                    let per_object = object_candidates(&obj.correspondences, &cfg, i).ok();
                    let (focal, support, num_rejected, candidates) = match per_object {
                        Some(c) => {
                            let focals: Vec<f64> = c.candidates.iter().map(|s| s.f).collect();
                            let stab = interval_stab(&focals, eps).ok();
                            (
                                stab.map(|(f, _)| f),
                                stab.map(|(_, s)| s),
                                c.num_rejected,
                                c.candidates,
                            )
                        }
                        None => (None, None, 0, Vec::new()),
                    };
                    ObjectResult {
                        index: i,
                        category: obj.category.clone(),
                        num_points: obj.correspondences.len(),
                        focal,
                        support,
                        num_rejected,
                        candidates,
                    }
                })
                .collect();
            Ok(EstimateResult {
                frame_id: frame.frame_id,
                focal: estimate.f,
                support: estimate.support,
                num_rejected: estimate.num_rejected,
                config: EstimateConfigEcho {
                    method: "is",
                    eps_px: eps,
                    samples_per_object: samples_t,
                    threshold_m: None,
                    max_points,
                    seed,
                },
                objects: object_results,
            })
        }
        RobustScheme::Ransac => {
            // Per-object hypothesize-and-verify; the frame focal is the
            // median of the per-object results.
            let mut object_results = Vec::new();
            let mut focals = Vec::new();
            let mut total_support = 0;
            let mut total_rejected = 0;
            for (i, obj) in objects.iter().enumerate() {
                let result = ransac_focal(
                    &obj.correspondences,
                    threshold,
                    samples_t,
                    fcop_object_seed(seed, i),
                );
                let (focal, support, num_rejected, candidates) = match result {
                    Ok(est) => {
                        focals.push(est.f);
                        total_support += est.support;
                        total_rejected += est.num_rejected;
                        (
                            Some(est.f),
                            Some(est.support),
                            est.num_rejected,
                            est.candidates,
                        )
                    }
                    Err(e) => {
                        log::warn!("object {i} skipped: {e}");
                        (None, None, 0, Vec::new())
                    }
                };
                object_results.push(ObjectResult {
                    index: i,
                    category: obj.category.clone(),
                    num_points: obj.correspondences.len(),
                    focal,
                    support,
                    num_rejected,
                    candidates,
                });
            }
            if focals.is_empty() {
                return Err(CliError::Runtime(anyhow::anyhow!(
                    "no object produced a focal hypothesis"
                )));
            }
            focals.sort_by(f64::total_cmp);
            let focal = fcop::synth::quantile_sorted(&focals, 0.5);
            Ok(EstimateResult {
                frame_id: frame.frame_id,
                focal,
                support: total_support,
                num_rejected: total_rejected,
                config: EstimateConfigEcho {
                    method: "ransac",
                    eps_px: eps,
                    samples_per_object: samples_t,
                    threshold_m: Some(threshold),
                    max_points,
                    seed,
                },
                objects: object_results,
            })
        }
    }
}

fn fcop_object_seed(seed: u64, object_index: usize) -> u64 {
    // Offset per object so RANSAC streams differ between objects.
    seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(object_index as u64 + 1))
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    config: EvaluateConfigEcho,
    report: &'a DatasetReport,
}

#[derive(Serialize)]
struct EvaluateConfigEcho {
    manifest: String,
    eps_px: f64,
    samples_per_object: usize,
    max_points: usize,
    seed: u64,
}

fn cmd_evaluate(
    manifest_path: &Path,
    eps: f64,
    samples_t: usize,
    max_points: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(manifest_path)
        .context("loading manifest")
        .map_err(CliError::Runtime)?;
    let cfg = RobustConfig {
        num_samples: samples_t,
        noise_bound_px: eps,
        seed,
    };
    let report = evaluate_dataset(&manifest, &cfg, max_points);

    let base = out.to_string_lossy();
    let json_path = PathBuf::from(format!("{base}.json"));
    let frames_path = PathBuf::from(format!("{base}.frames.csv"));
    let scenes_path = PathBuf::from(format!("{base}.scenes.csv"));

    let output = EvaluateOutput {
        config: EvaluateConfigEcho {
            manifest: manifest_path.display().to_string(),
            eps_px: eps,
            samples_per_object: samples_t,
            max_points,
            seed,
        },
        report: &report,
    };
    let mut w = create_output(&json_path)?;
    writeln!(
        w,
        "{}",
        serde_json::to_string_pretty(&output).expect("report serializes")
    )
    .context("writing JSON report")
    .map_err(CliError::Runtime)?;
    finish_output(w, "JSON report")?;

    let mut frames_csv = create_output(&frames_path)?;
    report
        .write_frames_csv(&mut frames_csv)
        .context("writing frames CSV")
        .map_err(CliError::Runtime)?;
    finish_output(frames_csv, "frames CSV")?;

    let mut scenes_csv = create_output(&scenes_path)?;
    report
        .write_scenes_csv(&mut scenes_csv)
        .context("writing scenes CSV")
        .map_err(CliError::Runtime)?;
    finish_output(scenes_csv, "scenes CSV")?;

    if report.frames.is_empty() && !report.failures.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "all {} frames failed to evaluate",
            report.failures.len()
        )));
    }
    if let Some(overall) = report.overall_median_focal_error_pct {
        log::info!("overall median focal error: {overall:.3}%");
    }
    Ok(())
}
