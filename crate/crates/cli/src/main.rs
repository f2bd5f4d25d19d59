//! `scriptsort`: cluster document images by script.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

mod commands;
mod config;
mod failure;
mod files;

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use scriptsort::{Binarization, FeatureMode};

use commands::{EvaluateArgs, ImageFormat};
use config::{parse_config, PipelineConfig};
use failure::{Classify, Failure};

#[derive(Parser)]
#[command(name = "scriptsort", version, about = "Cluster document images by script")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CoderFlags {
    /// `otsu` or `fixed:<t>`.
    #[arg(long)]
    binarize: Option<Binarization>,
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    #[arg(long)]
    min_gap: Option<usize>,
    #[arg(long)]
    min_ink: Option<usize>,
    #[arg(long)]
    min_area: Option<usize>,
}

#[derive(Args, Default)]
struct FeatureFlags {
    /// rl, albp or concat.
    #[arg(long)]
    mode: Option<FeatureMode>,
    /// Skip corpus min-max normalization.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args, Default)]
struct ClusterFlags {
    /// Final number of clusters.
    #[arg(short, long, visible_alias = "K")]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Neighbours per node in the similarity graph.
    #[arg(long)]
    h: Option<usize>,
    /// Label-difference pruning threshold (default: half the corpus, rounded up).
    #[arg(long = "T", visible_alias = "threshold")]
    threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seeded repetitions; run r uses seed + r.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Turn page images into coded text.
    Encode {
        /// Image files or directories of images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        coder: CoderFlags,
    },
    /// Texture features of coded texts, as CSV.
    Features {
        /// Coded-text JSON files or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureFlags,
    },
    /// Cluster a feature CSV.
    Cluster {
        features: PathBuf,
        /// Output JSON (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        cluster: ClusterFlags,
    },
    /// Score cluster assignments against ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        /// Cluster JSON or a plain {doc_id: cluster} map.
        #[arg(long)]
        pred: PathBuf,
        /// Score only the first N runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Feature CSV; when given, k-means and complete linkage are scored too.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Cluster count for the baselines (default: number of classes).
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        kmeans_restarts: usize,
        /// Directory for report.json, report.txt and report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic ground-truthed corpus.
    Synth {
        /// Corpus spec JSON (default: the three-script 5/10/5 benchmark).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "pgm")]
        format: ImageFormat,
    },
    /// Encode, extract features, cluster and (with truth) evaluate.
    Pipeline {
        /// Images, coded-text JSON, or directories of either.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Skip the k-means and complete-linkage baselines.
        #[arg(long)]
        no_baselines: bool,
        #[command(flatten)]
        coder: CoderFlags,
        #[command(flatten)]
        features: FeatureFlags,
        #[command(flatten)]
        cluster: ClusterFlags,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => parse_config(p).usage(),
        None => Ok(PipelineConfig::default()),
    }
}

fn apply_coder(cfg: &mut PipelineConfig, f: &CoderFlags) {
    if let Some(b) = f.binarize {
        cfg.binarize = b;
    }
    if let Some(v) = f.tau {
        cfg.coder.tau = v;
    }
    if let Some(v) = f.min_gap {
        cfg.coder.min_gap = v;
    }
    if let Some(v) = f.min_ink {
        cfg.coder.min_ink = v;
    }
    if let Some(v) = f.min_area {
        cfg.coder.min_area = v;
    }
}

fn apply_features(cfg: &mut PipelineConfig, f: &FeatureFlags) {
    if let Some(m) = f.mode {
        cfg.features.mode = m;
    }
    if f.no_normalize {
        cfg.features.normalize = false;
    }
}

fn apply_cluster(cfg: &mut PipelineConfig, f: &ClusterFlags) {
    if let Some(v) = f.k {
        cfg.cluster.k = v;
    }
    if let Some(v) = f.alpha {
        cfg.cluster.alpha = v;
    }
    if let Some(v) = f.h {
        cfg.cluster.h = v;
    }
    if f.threshold.is_some() {
        cfg.cluster.threshold = f.threshold;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(v) = f.runs {
        cfg.runs = v;
    }
    if let Some(v) = f.population {
        cfg.cluster.ga.population_size = v;
    }
    if let Some(v) = f.generations {
        cfg.cluster.ga.generations = v;
    }
}

fn build_config(
    path: Option<&Path>,
    coder: Option<&CoderFlags>,
    features: Option<&FeatureFlags>,
    cluster: Option<&ClusterFlags>,
) -> Result<PipelineConfig, Failure> {
    let mut cfg = load_config(path)?;
    if let Some(f) = coder {
        apply_coder(&mut cfg, f);
    }
    if let Some(f) = features {
        apply_features(&mut cfg, f);
    }
    if let Some(f) = cluster {
        apply_cluster(&mut cfg, f);
    }
    cfg.validate().usage()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Encode {
            inputs,
            out,
            config,
            coder,
        } => {
            let cfg = build_config(config.as_deref(), Some(&coder), None, None)?;
            commands::encode(&inputs, &out, &cfg)
        }
        Command::Features {
            inputs,
            out,
            config,
            features,
        } => {
            let cfg = build_config(config.as_deref(), None, Some(&features), None)?;
            commands::features(&inputs, out.as_deref(), &cfg.features)
        }
        Command::Cluster {
            features,
            out,
            config,
            cluster,
        } => {
            let cfg = build_config(config.as_deref(), None, None, Some(&cluster))?;
            commands::cluster(&features, out.as_deref(), &cfg)
        }
        Command::Evaluate {
            truth,
            pred,
            runs,
            features,
            k,
            kmeans_restarts,
            out,
        } => {
            if runs == Some(0) {
                return Err(anyhow!("--runs must be at least 1")).usage();
            }
            if kmeans_restarts == 0 {
                return Err(anyhow!("--kmeans-restarts must be at least 1")).usage();
            }
            commands::evaluate(&EvaluateArgs {
                truth: &truth,
                pred: &pred,
                runs,
                features: features.as_deref(),
                k,
                kmeans_restarts,
                out: out.as_deref(),
            })
        }
        Command::Synth {
            spec,
            out,
            seed,
            format,
        } => commands::synth(spec.as_deref(), seed, &out, format),
        Command::Pipeline {
            inputs,
            out,
            config,
            truth,
            no_baselines,
            coder,
            features,
            cluster,
        } => {
            let mut cfg = build_config(config.as_deref(), Some(&coder), Some(&features), Some(&cluster))?;
            if no_baselines {
                cfg.baselines.enabled = false;
            }
            commands::pipeline(&inputs, &out, truth.as_deref(), &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("internal error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    match panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("scriptsort: {failure}");
            failure.exit_code()
        }
        Err(_) => {
            eprintln!("scriptsort: internal error (panic)");
            ExitCode::from(3)
        }
    }
}
