//! Command-line surface over the library: generate synthetic datasets,
//! train and checkpoint the adversarial model, run online prediction,
//! benchmark all methods over one shared split, and render adjacency
//! heatmaps.
//!
//! Flag values win over `HQTLP_*` environment variables, which win over
//! the `--config` file, which wins over built-in defaults. Exit codes:
//! 0 success, 1 runtime failure, 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hqtlp::bench::{records_csv, run_bench, train_log_csv, BenchOptions, Method, RunConfig};
use hqtlp::checkpoint::{load_checkpoint, save_checkpoint};
use hqtlp::datagen::{gen_synthetic, load_edgelist, save_edgelist, summarize, SynthConfig};
use hqtlp::dyngraph::{DynamicNetwork, Snapshot};
use hqtlp::heatmap::save_ppm;
use hqtlp::metrics;
use hqtlp::tensor::Tensor;
use hqtlp::train::{predict_online, TrainConfig};
use hqtlp::{HqtlpError, Result};

#[derive(Parser)]
#[command(
    name = "hqtlp",
    version,
    about = "Weighted temporal link prediction benchmark for dynamic networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonOpts {
    /// TOML configuration file.
    #[arg(long, env = "HQTLP_CONFIG")]
    config: Option<PathBuf>,
    /// Base RNG seed.
    #[arg(long, env = "HQTLP_SEED")]
    seed: Option<u64>,
    /// Window length L (historical snapshots per prediction).
    #[arg(long, env = "HQTLP_WINDOW")]
    window: Option<usize>,
    /// Test-set size: the last K snapshots.
    #[arg(long = "test-steps", env = "HQTLP_TEST_STEPS")]
    test_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset and write it as an edge list.
    Generate {
        /// Named preset: mesh-like, adhoc-like, or dcn-like.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, env = "HQTLP_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "HQTLP_SEED")]
        seed: Option<u64>,
        /// Output file.
        #[arg(short, long, env = "HQTLP_OUT", default_value = "dataset.tsv")]
        out: PathBuf,
    },
    /// Pretrain the adversarial model and save a checkpoint.
    Train {
        /// Edge-list dataset.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory (checkpoint.bin, train_log.csv).
        #[arg(short, long, env = "HQTLP_OUT", default_value = "train-out")]
        out: PathBuf,
    },
    /// Online prediction from a checkpoint over the test split.
    Predict {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory (records.csv, predictions.tsv).
        #[arg(short, long, env = "HQTLP_OUT", default_value = "predict-out")]
        out: PathBuf,
    },
    /// Benchmark methods over one shared split and emit CSV results.
    Bench {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated methods (default: all of hqtlp, lstm, gru,
        /// cn-svd, cn-nmf, dw-nmf).
        #[arg(long, env = "HQTLP_METHODS", value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Run methods on separate threads (results are unchanged).
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        common: CommonOpts,
        /// Results directory.
        #[arg(short, long, env = "HQTLP_OUT", default_value = "bench-out")]
        out: PathBuf,
    },
    /// Render one snapshot of a dataset as a PPM heatmap.
    Heatmap {
        /// Edge-list file (a dataset or a predictions dump).
        #[arg(long)]
        data: PathBuf,
        /// Snapshot index to render.
        #[arg(short, long)]
        t: usize,
        /// Output image path.
        #[arg(short, long, env = "HQTLP_OUT", default_value = "snapshot.ppm")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Flags/env > config file > defaults.
fn resolve_train(rc: &RunConfig, common: &CommonOpts) -> TrainConfig {
    let mut cfg = rc.effective_train();
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(window) = common.window {
        cfg.window = window;
    }
    cfg
}

fn resolve_test_steps(rc: &RunConfig, common: &CommonOpts) -> usize {
    common.test_steps.or(rc.test_steps).unwrap_or(50)
}

fn split_point(net: &DynamicNetwork, window: usize, test_steps: usize) -> Result<usize> {
    let t_total = net.len();
    if t_total <= window + test_steps {
        return Err(HqtlpError::config(format!(
            "dataset too short: T={t_total} needs T > window + test_steps = {}",
            window + test_steps
        )));
    }
    Ok(t_total - test_steps)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Generate { preset, config, seed, out } => {
            let rc = load_config(&config)?;
            let mut synth = match &preset {
                Some(name) => SynthConfig::preset(name).ok_or_else(|| {
                    HqtlpError::config(format!(
                        "unknown preset `{name}`; expected mesh-like, adhoc-like, or dcn-like"
                    ))
                })?,
                None => rc.synth,
            };
            if let Some(seed) = seed.or(rc.seed) {
                synth.seed = seed;
            }
            let net = gen_synthetic(&synth)?;
            save_edgelist(&net, &out)?;
            let s = summarize(&net);
            println!(
                "wrote {} (n={}, T={}, sparsity={:.3}, weights [{:.3}, {:.3}])",
                out.display(),
                s.n,
                s.t_steps,
                s.sparsity,
                s.w_min_positive,
                s.w_max
            );
            Ok(())
        }

        Cmd::Train { data, common, out } => {
            let rc = load_config(&common.config)?;
            let cfg = resolve_train(&rc, &common);
            let test_steps = resolve_test_steps(&rc, &common);
            let net = load_edgelist(&data)?;
            let split_t = split_point(&net, cfg.window, test_steps)?;

            let (g, d, log) = hqtlp::bench::pretrain_hqtlp(&net, split_t, &cfg, &rc.model)?;
            std::fs::create_dir_all(&out)?;
            save_checkpoint(&out.join("checkpoint.bin"), &g, &d)?;
            std::fs::write(out.join("train_log.csv"), train_log_csv(&log))?;
            let last = log.last().map(|r| (r.loss_g, r.loss_d)).unwrap_or((0.0, 0.0));
            println!(
                "trained on targets 0..{split_t} ({} updates); final loss_g={:.6}, loss_d={:.6}",
                log.len(),
                last.0,
                last.1
            );
            println!("wrote {}", out.join("checkpoint.bin").display());
            Ok(())
        }

        Cmd::Predict { data, checkpoint, common, out } => {
            let rc = load_config(&common.config)?;
            let cfg = resolve_train(&rc, &common);
            let test_steps = resolve_test_steps(&rc, &common);
            let net = load_edgelist(&data)?;
            let split_t = split_point(&net, cfg.window, test_steps)?;
            let (mut g, mut d) = load_checkpoint(&checkpoint)?;
            if g.n != net.n() {
                return Err(HqtlpError::Checkpoint(format!(
                    "checkpoint is for n={} but dataset has n={}",
                    g.n,
                    net.n()
                )));
            }

            let records = predict_online(&net, split_t, &mut g, &mut d, &cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("records.csv"), records_csv(&records))?;
            save_edgelist(&predictions_network(&net, &records)?, &out.join("predictions.tsv"))?;

            let reports: Vec<_> = records.iter().map(|r| r.report).collect();
            let (armse, aew_kl, amr) = metrics::aggregate(&reports)?;
            println!(
                "{} test steps: armse={armse:.6}, aew_kl={aew_kl:.6}, amr={amr:.6}",
                records.len()
            );
            println!("wrote {}", out.join("records.csv").display());
            Ok(())
        }

        Cmd::Bench { data, methods, parallel, common, out } => {
            let rc = load_config(&common.config)?;
            let method_names = methods.or_else(|| rc.methods.clone());
            let methods = match method_names {
                Some(names) => names
                    .iter()
                    .map(|s| s.trim().parse::<Method>())
                    .collect::<Result<Vec<_>>>()?,
                None => Method::ALL.to_vec(),
            };
            let opts = BenchOptions {
                methods,
                test_steps: resolve_test_steps(&rc, &common),
                train: resolve_train(&rc, &common),
                model: rc.model,
                collapse: rc.collapse,
                parallel: parallel || rc.parallel,
            };
            let net = load_edgelist(&data)?;
            let report = run_bench(&net, &opts, &out)?;
            if report.clamped > 0 {
                eprintln!(
                    "warning: {} test-period weights exceeded the training max and were clamped",
                    report.clamped
                );
            }
            println!("split at t={} ({} test steps)", report.split_t, opts.test_steps);
            println!("method,armse,aew_kl,amr,wall_seconds");
            for row in &report.summary {
                println!(
                    "{},{:.6},{:.6},{:.6},{:.2}",
                    row.method, row.armse, row.aew_kl, row.amr, row.wall_seconds
                );
            }
            println!("wrote {}", out.join("summary.csv").display());
            Ok(())
        }

        Cmd::Heatmap { data, t, out } => {
            let net = load_edgelist(&data)?;
            if t >= net.len() {
                return Err(HqtlpError::config(format!(
                    "snapshot {t} out of range 0..{}",
                    net.len()
                )));
            }
            let w_max = net.max_weight(net.len()).max(f64::MIN_POSITIVE);
            save_ppm(&out, &net.snapshot(t).adj, w_max)?;
            println!("wrote {} ({}x{} pixels at t={})", out.display(), net.n(), net.n(), t);
            Ok(())
        }
    }
}

/// Wraps predicted snapshots into a full-length network (zero snapshots
/// before the split) so they can be saved in the edge-list format and fed
/// back to `heatmap`.
fn predictions_network(
    net: &DynamicNetwork,
    records: &[hqtlp::train::PredictionRecord],
) -> Result<DynamicNetwork> {
    let n = net.n();
    let first_t = records.first().map(|r| r.t).unwrap_or(net.len());
    let mut snaps: Vec<Snapshot> =
        (0..first_t).map(|t| Snapshot::new(Tensor::zeros(&[n, n]), t)).collect();
    snaps.extend(records.iter().map(|r| r.pred.clone()));
    DynamicNetwork::new(snaps)
}
