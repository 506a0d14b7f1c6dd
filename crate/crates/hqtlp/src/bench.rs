//! Benchmark harness: run every requested method over one shared
//! train/test split and emit per-step and summary CSVs.
//!
//! The split is the standard protocol: the last `test_steps` snapshots
//! (default 50) are the test set, everything earlier trains the
//! data-driven methods, and the window length defaults to 10. Each method
//! gets its own seed derived from the base seed and the method name, the
//! same derivation whether methods run sequentially or in parallel, so
//! `--parallel` changes wall time but not results.
//!
//! CSV conventions: header row, LF line endings, floats with 17
//! significant digits (see [`fmt_g17`]). Per-step files are named
//! `<method>.csv` with columns `t,rmse,ew_kl,mr`; `summary.csv` has one
//! row per method with columns `method,armse,aew_kl,amr,wall_seconds`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::baselines::{
    rnn_baseline_predict, CellKind, CollapseConfig, MfKind, MfOnline,
};
use crate::datagen::fmt_g17;
use crate::dyngraph::{scale_weights, DynamicNetwork};
use crate::error::{HqtlpError, Result};
use crate::metrics;
use crate::model::{DiscriminatorParams, GeneratorParams, ModelConfig};
use crate::train::{
    predict_online, pretrain_windows, run_online_eval, train_adversarial, PredictionRecord,
    TrainConfig, TrainLogRow,
};

/// The six benchmarked methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hqtlp,
    Lstm,
    Gru,
    CnSvd,
    CnNmf,
    DwNmf,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Hqtlp, Method::Lstm, Method::Gru, Method::CnSvd, Method::CnNmf, Method::DwNmf];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Hqtlp => "hqtlp",
            Method::Lstm => "lstm",
            Method::Gru => "gru",
            Method::CnSvd => "cn-svd",
            Method::CnNmf => "cn-nmf",
            Method::DwNmf => "dw-nmf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HqtlpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hqtlp" => Ok(Method::Hqtlp),
            "lstm" => Ok(Method::Lstm),
            "gru" => Ok(Method::Gru),
            "cn-svd" => Ok(Method::CnSvd),
            "cn-nmf" => Ok(Method::CnNmf),
            "dw-nmf" => Ok(Method::DwNmf),
            other => Err(HqtlpError::config(format!(
                "unknown method `{other}`; expected one of hqtlp, lstm, gru, cn-svd, cn-nmf, dw-nmf"
            ))),
        }
    }
}

/// Structured configuration file contents. Every field is optional or
/// defaulted; unknown keys are rejected. The CLI merges this with flags
/// and environment overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Edge-list dataset path.
    pub dataset: Option<String>,
    /// Methods to benchmark (names as in `Method`).
    pub methods: Option<Vec<String>>,
    /// Output directory.
    pub out: Option<String>,
    /// Overrides `train.seed` when set.
    pub seed: Option<u64>,
    /// Overrides `train.window` when set.
    pub window: Option<usize>,
    /// Test-set size (last `test_steps` snapshots). Default 50.
    pub test_steps: Option<usize>,
    /// Run independent methods on separate threads.
    pub parallel: bool,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub collapse: CollapseConfig,
    pub synth: crate::datagen::SynthConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HqtlpError::config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Train config with the top-level seed/window overrides applied.
    pub fn effective_train(&self) -> TrainConfig {
        let mut t = self.train;
        if let Some(seed) = self.seed {
            t.seed = seed;
        }
        if let Some(window) = self.window {
            t.window = window;
        }
        t
    }
}

/// Fully resolved options for one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub test_steps: usize,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub collapse: CollapseConfig,
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            methods: Method::ALL.to_vec(),
            test_steps: 50,
            train: TrainConfig::default(),
            model: ModelConfig::default(),
            collapse: CollapseConfig::default(),
            parallel: false,
        }
    }
}

/// One `summary.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub armse: f64,
    pub aew_kl: f64,
    pub amr: f64,
    pub wall_seconds: f64,
}

/// Everything a bench run produces besides the files on disk.
pub struct BenchReport {
    pub summary: Vec<SummaryRow>,
    /// Test-period weights that exceeded the training maximum and were
    /// clamped during scaling.
    pub clamped: usize,
    pub split_t: usize,
}

/// Stable per-method seed: FNV-1a of the method name mixed into the base
/// seed, finalized with splitmix64.
pub fn derive_seed(base: u64, method: Method) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in method.name().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(base ^ h)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Initializes and pretrains the adversarial pair on windows with targets
/// before `split_t`. Returns the trained pair and the loss log.
pub fn pretrain_hqtlp(
    net: &DynamicNetwork,
    split_t: usize,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
) -> Result<(GeneratorParams, DiscriminatorParams, Vec<TrainLogRow>)> {
    let mut init = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = GeneratorParams::init(net.n(), model_cfg, &mut init);
    let mut d = DiscriminatorParams::init(net.n(), model_cfg, &mut init);
    let scaled = scale_weights(net, split_t)?;
    let windows = pretrain_windows(&scaled.net, cfg.window, split_t)?;
    let log = train_adversarial(&windows, &mut g, &mut d, cfg)?;
    Ok((g, d, log))
}

/// Runs one method over the shared split and returns its records.
pub fn run_method(
    net: &DynamicNetwork,
    split_t: usize,
    method: Method,
    opts: &BenchOptions,
) -> Result<Vec<PredictionRecord>> {
    let mut cfg = opts.train;
    cfg.seed = derive_seed(cfg.seed, method);
    match method {
        Method::Hqtlp => {
            let (mut g, mut d, _log) = pretrain_hqtlp(net, split_t, &cfg, &opts.model)?;
            predict_online(net, split_t, &mut g, &mut d, &cfg)
        }
        Method::Lstm => rnn_baseline_predict(net, split_t, CellKind::Lstm, &cfg, &opts.model),
        Method::Gru => rnn_baseline_predict(net, split_t, CellKind::Gru, &cfg, &opts.model),
        Method::CnSvd | Method::CnNmf | Method::DwNmf => {
            let kind = match method {
                Method::CnSvd => MfKind::CnSvd,
                Method::CnNmf => MfKind::CnNmf,
                _ => MfKind::DwNmf,
            };
            let mut model = MfOnline { kind, cfg: opts.collapse, window: cfg.window };
            run_online_eval(net, split_t, cfg.window, cfg.tau, cfg.mr_base, &mut model)
        }
    }
}

/// Per-step CSV body for one method.
pub fn records_csv(records: &[PredictionRecord]) -> String {
    let mut out = String::from("t,rmse,ew_kl,mr\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.t,
            fmt_g17(r.report.rmse),
            fmt_g17(r.report.ew_kl),
            fmt_g17(r.report.mr)
        ));
    }
    out
}

/// `summary.csv` body.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("method,armse,aew_kl,amr,wall_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            fmt_g17(r.armse),
            fmt_g17(r.aew_kl),
            fmt_g17(r.amr),
            fmt_g17(r.wall_seconds)
        ));
    }
    out
}

/// Per-update training-log CSV body.
pub fn train_log_csv(log: &[TrainLogRow]) -> String {
    let mut out = String::from("epoch,window,loss_g,loss_d\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch,
            r.window,
            fmt_g17(r.loss_g),
            fmt_g17(r.loss_d)
        ));
    }
    out
}

/// Full benchmark: validates the split, runs every requested method
/// (sequentially or in parallel), writes `<method>.csv` per method plus
/// `summary.csv` into `out_dir`.
pub fn run_bench(net: &DynamicNetwork, opts: &BenchOptions, out_dir: &Path) -> Result<BenchReport> {
    opts.train.validate()?;
    opts.collapse.validate(net.n())?;
    if opts.methods.is_empty() {
        return Err(HqtlpError::config("no methods requested"));
    }
    if opts.test_steps == 0 {
        return Err(HqtlpError::config("test_steps must be at least 1"));
    }
    let t_total = net.len();
    let window = opts.train.window;
    if t_total <= window + opts.test_steps {
        return Err(HqtlpError::config(format!(
            "dataset too short: T={t_total} needs T > window + test_steps = {}",
            window + opts.test_steps
        )));
    }
    let split_t = t_total - opts.test_steps;
    // Scaling is recomputed per method; this instance only reports clamps.
    let clamped = scale_weights(net, split_t)?.clamped;

    fs::create_dir_all(out_dir)?;

    let outcomes: Vec<(Method, Result<(Vec<PredictionRecord>, f64)>)> = if opts.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = opts
                .methods
                .iter()
                .map(|&method| {
                    scope.spawn(move || {
                        let start = Instant::now();
                        let records = run_method(net, split_t, method, opts);
                        (method, records.map(|r| (r, start.elapsed().as_secs_f64())))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("method thread")).collect()
        })
    } else {
        opts.methods
            .iter()
            .map(|&method| {
                let start = Instant::now();
                let records = run_method(net, split_t, method, opts);
                (method, records.map(|r| (r, start.elapsed().as_secs_f64())))
            })
            .collect()
    };

    let mut summary = Vec::with_capacity(outcomes.len());
    for (method, outcome) in outcomes {
        let (records, wall_seconds) = outcome?;
        fs::write(out_dir.join(format!("{method}.csv")), records_csv(&records))?;
        let reports: Vec<_> = records.iter().map(|r| r.report).collect();
        let (armse, aew_kl, amr) = metrics::aggregate(&reports)?;
        summary.push(SummaryRow { method, armse, aew_kl, amr, wall_seconds });
    }
    fs::write(out_dir.join("summary.csv"), summary_csv(&summary))?;

    Ok(BenchReport { summary, clamped, split_t })
}
