//! Command-line interface: analyze single meshes, run corpus batches,
//! generate the procedural corpus, and evaluate against annotations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sitsim_core::harness::{
    batch_evaluate, batch_run, generate_corpus, run_pipeline, PipelineConfig, RunOptions,
};
use sitsim_core::parallel::{with_workers, Execution};
use sitsim_core::se3::RotationMetric;

#[derive(Parser)]
#[command(
    name = "sitsim",
    about = "Decides whether a 3D mesh affords sitting by simulating the interaction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Pipeline configuration file (JSON); defaults are built in.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Rotation metric override.
    #[arg(long, global = true, value_parser = parse_metric)]
    metric: Option<RotationMetric>,

    /// Random seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (1 = sequential).
    #[arg(long, global = true, default_value_t = default_workers())]
    workers: usize,

    /// Capture wall-clock timings in reports (breaks byte reproducibility).
    #[arg(long, global = true)]
    timings: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn parse_metric(s: &str) -> Result<RotationMetric, String> {
    match s {
        "frobenius" => Ok(RotationMetric::Frobenius),
        "geodesic" => Ok(RotationMetric::Geodesic),
        other => Err(format!("unknown metric '{other}' (frobenius|geodesic)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a single mesh and print its report as JSON.
    Imagine {
        mesh: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include per-trial records in the report.
        #[arg(long)]
        verbose_trials: bool,
        /// Dump per-step scene states under this directory.
        #[arg(long)]
        dump_frames: Option<PathBuf>,
    },
    /// Run the pipeline over a corpus directory (meshes/ subdirectory).
    Batch {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Directory for per-object reports.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Generate a procedural corpus (meshes/ + annotations/).
    GenCorpus {
        dir: PathBuf,
        /// Total object count; half are chairs.
        #[arg(long, short = 'n', default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Batch run plus evaluation against corpus annotations.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Directory for per-object reports and the summary.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

fn load_config(common: &CommonOpts) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(metric) = common.metric {
        cfg.metric = metric;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate().context("validating config")?;
    Ok(cfg)
}

fn run_options(common: &CommonOpts, verbose_trials: bool) -> RunOptions {
    RunOptions {
        execution: Execution::for_workers(common.workers),
        verbose_trials,
        timings: common.timings,
        dump_frames: None,
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Imagine {
            mesh,
            common,
            out,
            verbose_trials,
            dump_frames,
        } => {
            let cfg = load_config(&common)?;
            let mut options = run_options(&common, verbose_trials);
            if let Some(dir) = dump_frames {
                std::fs::create_dir_all(&dir)?;
                options.dump_frames = Some(dir);
            }
            let object_id = mesh
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("object")
                .to_string();
            let report = with_workers(common.workers, || {
                run_pipeline(&mesh, &object_id, &cfg, &options)
            });
            let json = report.to_json()?;
            match out {
                Some(path) => std::fs::write(&path, json)?,
                None => println!("{json}"),
            }
            if report.status != "ok" {
                bail!("analysis failed: {}", report.status);
            }
            Ok(())
        }
        Command::Batch { corpus, common, out } => {
            let cfg = load_config(&common)?;
            let options = run_options(&common, false);
            let reports = with_workers(common.workers, || {
                batch_run(&corpus, &cfg, &options, Some(&out))
            })?;
            let failed = reports.iter().filter(|r| r.status != "ok").count();
            eprintln!(
                "{} objects processed, {} failed; reports in {}",
                reports.len(),
                failed,
                out.display()
            );
            if failed > 0 {
                bail!("{failed} objects failed");
            }
            Ok(())
        }
        Command::GenCorpus { dir, n, seed } => {
            let annotations = generate_corpus(&dir, n, seed)?;
            eprintln!(
                "generated {} objects under {} ({} sittable)",
                annotations.len(),
                dir.display(),
                annotations.iter().filter(|a| a.sittable).count()
            );
            Ok(())
        }
        Command::Eval { corpus, common, out } => {
            let cfg = load_config(&common)?;
            let options = run_options(&common, false);
            let (_, summary) = with_workers(common.workers, || {
                batch_evaluate(&corpus, &cfg, &options, Some(&out))
            })?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            eprintln!(
                "accuracy {:.3} precision {:.3} recall {:.3} (tp {} tn {} fp {} fn {})",
                summary.accuracy,
                summary.precision,
                summary.recall,
                summary.true_positives,
                summary.true_negatives,
                summary.false_positives,
                summary.false_negatives
            );
            Ok(())
        }
    }
}
