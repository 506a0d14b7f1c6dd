//! Adversarial training and online prediction.
//!
//! The generator objective linearly combines reconstruction error against
//! the ground truth with a non-saturating fooling term `-log D(G(...))`;
//! the discriminator minimizes the usual binary cross-entropy. Updates
//! alternate per window: `d_steps_per_g_step` discriminator steps on
//! (truth, fresh sample), then one generator step. All randomness derives
//! from `TrainConfig::seed` through two independent streams — one feeds
//! the generator's noise, one the discriminator's fresh samples — so with
//! `lambda_adv = 0` the generator walks the exact parameter trajectory of
//! a discriminator-free reconstruction trainer.
//!
//! Online prediction advances one step at a time: fine-tune on the newest
//! fully-observed window, then predict the next snapshot from the last
//! `window` observed ones. The evaluation loop hands models only the
//! observed prefix, so reading the target before predicting it is
//! impossible by construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dyngraph::{
    from_upper_triangle, scale_weights, upper_triangle, DynamicNetwork, Snapshot, Window,
};
use crate::error::{HqtlpError, Result};
use crate::metrics::{self, MetricReport, MrBase};
use crate::model::{
    discriminator_forward_tape, DiscVars, DiscriminatorParams, GeneratorParams, ModelConfig,
    SeqPredictor,
};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Additive guard inside the loss logs so that a fully saturated
/// discriminator score still yields a finite loss.
pub const LOG_GUARD: f64 = 1e-12;

/// RNG stream ids derived from the config seed.
const STREAM_MODEL: u64 = 1;
const STREAM_DISC: u64 = 2;
const STREAM_ONLINE_MODEL: u64 = 3;
const STREAM_ONLINE_DISC: u64 = 4;

/// Training hyperparameters. Every field has a default; `window` is the
/// historical sequence length L.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Window length L.
    pub window: usize,
    /// Weight of the reconstruction term; must be positive.
    pub lambda_rec: f64,
    /// Weight of the adversarial term; 0 degenerates to pure
    /// reconstruction and is used as an ablation.
    pub lambda_adv: f64,
    pub epochs_pretrain: usize,
    /// Fine-tune epochs per new time step during online prediction.
    pub epochs_online: usize,
    pub d_steps_per_g_step: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub seed: u64,
    /// Edge threshold as a fraction of `w_max`; a weight below
    /// `tau * w_max` counts as "no edge" in the metrics.
    pub tau: f64,
    /// Noise draws averaged per prediction (1 = single draw).
    pub noise_draws: usize,
    /// Fine-tune on every observed window instead of only the newest.
    pub fine_tune_all_windows: bool,
    /// Re-initialize and retrain on the full observed prefix at every
    /// online step instead of warm-starting.
    pub retrain_from_scratch: bool,
    /// Mismatch-rate denominator.
    pub mr_base: MrBase,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 10,
            lambda_rec: 1.0,
            lambda_adv: 0.01,
            epochs_pretrain: 200,
            epochs_online: 20,
            d_steps_per_g_step: 1,
            lr_g: 1e-3,
            lr_d: 1e-3,
            seed: 0,
            tau: 0.001,
            noise_draws: 1,
            fine_tune_all_windows: false,
            retrain_from_scratch: false,
            mr_base: MrBase::Union,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(HqtlpError::config("window must be at least 1"));
        }
        if !(self.lambda_rec > 0.0) {
            return Err(HqtlpError::config("lambda_rec must be positive"));
        }
        if self.lambda_adv < 0.0 {
            return Err(HqtlpError::config("lambda_adv must be nonnegative"));
        }
        if self.noise_draws == 0 {
            return Err(HqtlpError::config("noise_draws must be at least 1"));
        }
        if self.tau < 0.0 {
            return Err(HqtlpError::config("tau must be nonnegative"));
        }
        Ok(())
    }
}

/// One prediction step's outcome: predicted and true snapshots in original
/// units plus the metric report.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub t: usize,
    pub pred: Snapshot,
    pub truth: Snapshot,
    pub report: MetricReport,
}

/// One training-log line: losses for a (epoch, window) update pair.
/// `loss_d` is 0 for discriminator-free training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub window: usize,
    pub loss_g: f64,
    pub loss_d: f64,
}

/// Generator loss value:
/// `lambda_rec * MSE(upper triangles) + lambda_adv * (-log(d_score))`.
pub fn loss_g(
    pred_scaled: &Tensor,
    truth_scaled: &Tensor,
    d_score: f64,
    lambda_rec: f64,
    lambda_adv: f64,
) -> f64 {
    let pv = upper_triangle(pred_scaled);
    let tv = upper_triangle(truth_scaled);
    let m = pv.numel() as f64;
    let sum: f64 = pv.data().iter().zip(tv.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let mse = (1.0 / m) * sum;
    lambda_rec * mse + (-lambda_adv) * (d_score + LOG_GUARD).ln()
}

/// Discriminator loss value: `-log(d_real) - log(1 - d_fake)`.
pub fn loss_d(d_real: f64, d_fake: f64) -> f64 {
    -((d_real + LOG_GUARD).ln() + ((1.0 + LOG_GUARD) - d_fake).ln())
}

/// Mean squared error between two equally-shaped vectors, on the tape.
pub fn mse_tape(tape: &mut Tape, pred: Var, truth: Var) -> Var {
    let diff = tape.sub(pred, truth);
    let sq = tape.mul(diff, diff);
    tape.mean(sq)
}

/// Generator loss on the tape; `d_score` is `None` when the adversarial
/// term is disabled, keeping the recorded graph identical to a pure
/// reconstruction trainer's.
pub fn loss_g_tape(
    tape: &mut Tape,
    mse: Var,
    d_score: Option<Var>,
    lambda_rec: f64,
    lambda_adv: f64,
) -> Var {
    let rec = tape.scale(mse, lambda_rec);
    match d_score {
        Some(score) => {
            let shifted = tape.add_scalar(score, LOG_GUARD);
            let lg = tape.ln(shifted);
            let adv = tape.scale(lg, -lambda_adv);
            tape.add(rec, adv)
        }
        None => rec,
    }
}

/// Discriminator loss on the tape.
pub fn loss_d_tape(tape: &mut Tape, d_real: Var, d_fake: Var) -> Var {
    let real_shifted = tape.add_scalar(d_real, LOG_GUARD);
    let lr = tape.ln(real_shifted);
    let one = tape.constant(Tensor::scalar(1.0 + LOG_GUARD));
    let inv = tape.sub(one, d_fake);
    let lf = tape.ln(inv);
    let s = tape.add(lr, lf);
    tape.scale(s, -1.0)
}

/// Optimizer and RNG bundle that persists across training calls so online
/// fine-tuning warm-starts both parameters and Adam moments.
struct TrainState {
    adam_model: AdamState,
    adam_disc: Option<AdamState>,
    rng_model: ChaCha8Rng,
    rng_disc: ChaCha8Rng,
}

impl TrainState {
    fn new<M: SeqPredictor + ?Sized>(
        model: &M,
        disc: Option<&DiscriminatorParams>,
        seed: u64,
        model_stream: u64,
        disc_stream: u64,
    ) -> Self {
        let mut rng_model = ChaCha8Rng::seed_from_u64(seed);
        rng_model.set_stream(model_stream);
        let mut rng_disc = ChaCha8Rng::seed_from_u64(seed);
        rng_disc.set_stream(disc_stream);
        TrainState {
            adam_model: AdamState::new(&model.param_tensors()),
            adam_disc: disc.map(|d| AdamState::new(&d.tensors())),
            rng_model,
            rng_disc,
        }
    }
}

/// The shared inner loop. With `disc` present this is the alternating
/// minimax game; without it, plain reconstruction training. The model-side
/// work is identical in both cases when `lambda_adv` is 0.
fn train_epochs<M: SeqPredictor + ?Sized>(
    windows: &[Window],
    model: &mut M,
    mut disc: Option<&mut DiscriminatorParams>,
    state: &mut TrainState,
    cfg: &TrainConfig,
    epochs: usize,
    log: &mut Vec<TrainLogRow>,
) -> Result<()> {
    if windows.is_empty() {
        return Err(HqtlpError::config("training needs at least one window"));
    }
    let adam_g = AdamConfig::with_lr(cfg.lr_g);
    let adam_d = AdamConfig::with_lr(cfg.lr_d);

    for epoch in 0..epochs {
        for (wi, window) in windows.iter().enumerate() {
            let truth_vec = upper_triangle(&window.target.adj);
            let mut d_loss_val = 0.0;

            if let Some(d) = disc.as_deref_mut() {
                let adam_state = state.adam_disc.as_mut().expect("disc state");
                for _ in 0..cfg.d_steps_per_g_step {
                    let mut tape = Tape::new();
                    let (fake, _) =
                        model.forward(&mut tape, window.inputs, &mut state.rng_disc, false);
                    let dv = DiscVars::bind(&mut tape, d);
                    let real = tape.constant(truth_vec.clone());
                    let d_real = discriminator_forward_tape(&mut tape, real, &dv);
                    let d_fake = discriminator_forward_tape(&mut tape, fake, &dv);
                    let loss = loss_d_tape(&mut tape, d_real, d_fake);
                    d_loss_val = tape.value(loss).scalar_value();
                    let grads = tape.backward(loss);
                    let gvec = grads.collect(&dv.vars(), &d.tensors());
                    adam_step(&mut d.tensors_mut(), &gvec, adam_state, &adam_d);
                }
            }

            let mut tape = Tape::new();
            let (pred, pvars) = model.forward(&mut tape, window.inputs, &mut state.rng_model, true);
            let truth = tape.constant(truth_vec);
            let mse = mse_tape(&mut tape, pred, truth);
            let d_score = match disc.as_deref() {
                Some(d) if cfg.lambda_adv > 0.0 => {
                    let dv = DiscVars::bind_frozen(&mut tape, d);
                    Some(discriminator_forward_tape(&mut tape, pred, &dv))
                }
                _ => None,
            };
            let loss = loss_g_tape(&mut tape, mse, d_score, cfg.lambda_rec, cfg.lambda_adv);
            let g_loss_val = tape.value(loss).scalar_value();
            let grads = tape.backward(loss);
            let gvec = grads.collect(&pvars, &model.param_tensors());
            adam_step(&mut model.param_tensors_mut(), &gvec, &mut state.adam_model, &adam_g);

            log.push(TrainLogRow { epoch, window: wi, loss_g: g_loss_val, loss_d: d_loss_val });
        }
    }
    Ok(())
}

/// Alternating adversarial pretraining over the given windows for
/// `cfg.epochs_pretrain` epochs. Returns the per-update loss log.
pub fn train_adversarial(
    windows: &[Window],
    g: &mut GeneratorParams,
    d: &mut DiscriminatorParams,
    cfg: &TrainConfig,
) -> Result<Vec<TrainLogRow>> {
    cfg.validate()?;
    let mut state = TrainState::new(g, Some(d), cfg.seed, STREAM_MODEL, STREAM_DISC);
    let mut log = Vec::new();
    train_epochs(windows, g, Some(d), &mut state, cfg, cfg.epochs_pretrain, &mut log)?;
    Ok(log)
}

/// Discriminator-free reconstruction pretraining (pure MSE). Drives the
/// LSTM/GRU baselines and the `lambda_adv = 0` ablation.
pub fn train_reconstruction<M: SeqPredictor + ?Sized>(
    windows: &[Window],
    model: &mut M,
    cfg: &TrainConfig,
) -> Result<Vec<TrainLogRow>> {
    cfg.validate()?;
    let mut state = TrainState::new(model, None, cfg.seed, STREAM_MODEL, STREAM_DISC);
    let mut log = Vec::new();
    train_epochs(windows, model, None, &mut state, cfg, cfg.epochs_pretrain, &mut log)?;
    Ok(log)
}

/// Windows whose targets precede `split_t`: the pretraining set of the
/// standard protocol. Errors when the split leaves nothing to train on.
pub fn pretrain_windows(
    net: &DynamicNetwork,
    window: usize,
    split_t: usize,
) -> Result<Vec<Window<'_>>> {
    let mut ws = crate::dyngraph::make_windows(net, window)?;
    ws.retain(|w| w.target.t < split_t);
    if ws.is_empty() {
        return Err(HqtlpError::config(format!(
            "no training windows: split {split_t} with window {window}"
        )));
    }
    Ok(ws)
}

/// The observed prefix of the network handed to online models: snapshots
/// strictly before the step being predicted, in both unit systems.
pub struct History<'a> {
    pub scaled: &'a [Snapshot],
    pub orig: &'a [Snapshot],
    pub w_max: f64,
}

/// A model that can participate in the step-by-step online evaluation.
/// Implementations only ever see the observed prefix.
pub trait OnlineModel {
    /// Adapt to the newest observations (no-op for training-free models).
    fn fine_tune(&mut self, hist: &History) -> Result<()>;
    /// Predict the snapshot following the prefix, in original units.
    fn predict_next(&mut self, hist: &History) -> Result<Tensor>;
}

/// Steps through targets `split_t..T`, fine-tuning then predicting, and
/// scores every prediction against the truth through one metrics path.
pub fn run_online_eval(
    net: &DynamicNetwork,
    split_t: usize,
    window: usize,
    tau: f64,
    mr_base: MrBase,
    model: &mut dyn OnlineModel,
) -> Result<Vec<PredictionRecord>> {
    if split_t < window + 1 {
        return Err(HqtlpError::config(format!(
            "split {split_t} too small: need at least window + 1 = {}",
            window + 1
        )));
    }
    if split_t >= net.len() {
        return Err(HqtlpError::config(format!(
            "split {split_t} leaves no test steps in {} snapshots",
            net.len()
        )));
    }
    let scaled = scale_weights(net, split_t)?;
    let tau_abs = tau * scaled.w_max;

    let mut records = Vec::with_capacity(net.len() - split_t);
    for t in split_t..net.len() {
        let hist = History {
            scaled: &scaled.net.snapshots()[..t],
            orig: &net.snapshots()[..t],
            w_max: scaled.w_max,
        };
        model.fine_tune(&hist)?;
        let pred_adj = model.predict_next(&hist)?;
        let truth = net.snapshot(t);
        let report = metrics::report(&pred_adj, &truth.adj, tau_abs, mr_base);
        records.push(PredictionRecord {
            t,
            pred: Snapshot::new(pred_adj, t),
            truth: truth.clone(),
            report,
        });
    }
    Ok(records)
}

/// Online wrapper around the adversarial pair: per step, fine-tune the
/// minimax game on the newest fully-observed window, then predict.
pub struct AdversarialOnline<'a> {
    g: &'a mut GeneratorParams,
    d: &'a mut DiscriminatorParams,
    cfg: TrainConfig,
    state: TrainState,
}

impl<'a> AdversarialOnline<'a> {
    pub fn new(
        g: &'a mut GeneratorParams,
        d: &'a mut DiscriminatorParams,
        cfg: &TrainConfig,
    ) -> Self {
        let state = TrainState::new(g, Some(d), cfg.seed, STREAM_ONLINE_MODEL, STREAM_ONLINE_DISC);
        AdversarialOnline { g, d, cfg: *cfg, state }
    }

    fn model_config(&self) -> ModelConfig {
        ModelConfig {
            d_z: self.g.d_z,
            d_1: self.g.d_1,
            d_2: self.g.d_2,
            d_h: self.g.d_h,
            h_1: self.d.w1.cols(),
            h_2: self.d.w2.cols(),
        }
    }
}

impl OnlineModel for AdversarialOnline<'_> {
    fn fine_tune(&mut self, hist: &History) -> Result<()> {
        if self.cfg.epochs_online == 0 {
            return Ok(());
        }
        let cfg = self.cfg;
        if cfg.retrain_from_scratch {
            let mut init = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mc = self.model_config();
            *self.g = GeneratorParams::init(self.g.n, &mc, &mut init);
            *self.d = DiscriminatorParams::init(self.d.n, &mc, &mut init);
            self.state = TrainState::new(
                self.g,
                Some(self.d),
                cfg.seed,
                STREAM_ONLINE_MODEL,
                STREAM_ONLINE_DISC,
            );
        }
        let all = cfg.fine_tune_all_windows || cfg.retrain_from_scratch;
        let windows = online_windows(hist.scaled, cfg.window, all);
        let mut log = Vec::new();
        train_epochs(
            &windows,
            self.g,
            Some(self.d),
            &mut self.state,
            &cfg,
            cfg.epochs_online,
            &mut log,
        )
    }

    fn predict_next(&mut self, hist: &History) -> Result<Tensor> {
        predict_from_prefix(self.g, hist, &self.cfg, &mut self.state.rng_model)
    }
}

/// Online wrapper for reconstruction-only sequence models.
pub struct ReconstructionOnline<'a, M: SeqPredictor> {
    model: &'a mut M,
    cfg: TrainConfig,
    state: TrainState,
}

impl<'a, M: SeqPredictor> ReconstructionOnline<'a, M> {
    pub fn new(model: &'a mut M, cfg: &TrainConfig) -> Self {
        let state = TrainState::new(model, None, cfg.seed, STREAM_ONLINE_MODEL, STREAM_ONLINE_DISC);
        ReconstructionOnline { model, cfg: *cfg, state }
    }
}

impl<M: SeqPredictor> OnlineModel for ReconstructionOnline<'_, M> {
    fn fine_tune(&mut self, hist: &History) -> Result<()> {
        if self.cfg.epochs_online == 0 {
            return Ok(());
        }
        let cfg = self.cfg;
        let windows = online_windows(hist.scaled, cfg.window, cfg.fine_tune_all_windows);
        let mut log = Vec::new();
        train_epochs(&windows, self.model, None, &mut self.state, &cfg, cfg.epochs_online, &mut log)
    }

    fn predict_next(&mut self, hist: &History) -> Result<Tensor> {
        predict_from_prefix(self.model, hist, &self.cfg, &mut self.state.rng_model)
    }
}

/// Fine-tuning windows inside an observed prefix: the newest fully
/// observed one (inputs end at the second-to-last snapshot, target is the
/// last), or all of them.
fn online_windows(scaled: &[Snapshot], window: usize, all: bool) -> Vec<Window<'_>> {
    let len = scaled.len();
    debug_assert!(len >= window + 1);
    if all {
        (0..len - window)
            .map(|k| Window { inputs: &scaled[k..k + window], target: &scaled[k + window] })
            .collect()
    } else {
        vec![Window { inputs: &scaled[len - 1 - window..len - 1], target: &scaled[len - 1] }]
    }
}

/// Prediction for the step after the prefix: forward over the last
/// `window` observed snapshots, average over `noise_draws` draws, expand
/// to a matrix and unscale.
fn predict_from_prefix<M: SeqPredictor + ?Sized>(
    model: &M,
    hist: &History,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor> {
    let len = hist.scaled.len();
    let inputs = &hist.scaled[len - cfg.window..];
    let n = model.node_count();
    let mut acc: Option<Tensor> = None;
    for _ in 0..cfg.noise_draws {
        let mut tape = Tape::new();
        let (pred, _) = model.forward(&mut tape, inputs, rng, false);
        let v = tape.value(pred).clone();
        acc = Some(match acc {
            Some(a) => a.add(&v),
            None => v,
        });
    }
    let avg = acc.expect("noise_draws >= 1").scale(1.0 / cfg.noise_draws as f64);
    Ok(from_upper_triangle(&avg, n).scale(hist.w_max))
}

/// Pretrained-model online prediction over targets `split_t..T`:
/// fine-tune on the newest window, predict, record metrics, advance.
pub fn predict_online(
    net: &DynamicNetwork,
    split_t: usize,
    g: &mut GeneratorParams,
    d: &mut DiscriminatorParams,
    cfg: &TrainConfig,
) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let (tau, mr_base, window) = (cfg.tau, cfg.mr_base, cfg.window);
    let mut model = AdversarialOnline::new(g, d, cfg);
    run_online_eval(net, split_t, window, tau, mr_base, &mut model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyngraph::make_windows;
    use crate::model::{discriminator_forward, generator_forward, NoiseSpec};
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn tiny_model_cfg() -> ModelConfig {
        ModelConfig { d_z: 3, d_1: 4, d_2: 3, d_h: 6, h_1: 8, h_2: 4 }
    }

    fn toy_network(n: usize, t_total: usize, seed: u64, w_hi: f64) -> DynamicNetwork {
        let mut r = rng(seed);
        // Fixed support, weights jitter around per-edge levels; some pairs
        // stay empty the whole run.
        let mut level = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in (i + 1)..n {
                if r.random_bool(0.5) {
                    let w = r.random_range(0.1 * w_hi..w_hi);
                    level.set(i, j, w);
                    level.set(j, i, w);
                }
            }
        }
        let snaps: Vec<Snapshot> = (0..t_total)
            .map(|t| {
                let mut adj = Tensor::zeros(&[n, n]);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let base = level.at(i, j);
                        if base > 0.0 {
                            let w = (base * r.random_range(0.8..1.2)).min(w_hi);
                            adj.set(i, j, w);
                            adj.set(j, i, w);
                        }
                    }
                }
                Snapshot::new(adj, t)
            })
            .collect();
        DynamicNetwork::new(snaps).unwrap()
    }

    #[test]
    fn loss_g_zero_at_perfect_reconstruction() {
        let a = Tensor::from_rows(&[vec![0.0, 0.4], vec![0.4, 0.0]]);
        assert_eq!(loss_g(&a, &a, 0.9, 1.0, 0.0), 0.0);
    }

    #[test]
    fn loss_g_adversarial_term_hand_value() {
        let a = Tensor::zeros(&[2, 2]);
        let v = loss_g(&a, &a, 0.5, 1.0, 2.0);
        assert!((v - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn loss_g_decreases_in_d_score() {
        let a = Tensor::zeros(&[3, 3]);
        let b = Tensor::from_rows(&[
            vec![0.0, 0.3, 0.0],
            vec![0.3, 0.0, 0.6],
            vec![0.0, 0.6, 0.0],
        ]);
        let lo = loss_g(&a, &b, 0.2, 1.0, 0.5);
        let hi = loss_g(&a, &b, 0.8, 1.0, 0.5);
        assert!(hi < lo);
    }

    #[test]
    fn loss_d_hand_values() {
        let v = loss_d(0.5, 0.5);
        assert!((v - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(loss_d(1.0, 0.0).abs() < 1e-9);
        // Symmetry under (real, fake) -> (1 - fake, 1 - real).
        let (a, b) = (0.3, 0.85);
        assert!((loss_d(a, b) - loss_d(1.0 - b, 1.0 - a)).abs() < 1e-9);
    }

    #[test]
    fn taped_losses_match_plain_losses() {
        let mut r = rng(77);
        let n = 5;
        let pred = {
            let mut m = Tensor::zeros(&[n, n]);
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = r.random_range(0.0..1.0);
                    m.set(i, j, w);
                    m.set(j, i, w);
                }
            }
            m
        };
        let truth = pred.map(|x| (x * 0.7).min(1.0));
        let d_score = 0.37;

        let plain = loss_g(&pred, &truth, d_score, 1.0, 0.25);
        let mut tape = Tape::new();
        let pv = tape.constant(upper_triangle(&pred));
        let tv = tape.constant(upper_triangle(&truth));
        let mse = mse_tape(&mut tape, pv, tv);
        let sv = tape.constant(Tensor::scalar(d_score));
        let taped = loss_g_tape(&mut tape, mse, Some(sv), 1.0, 0.25);
        assert_eq!(tape.value(taped).scalar_value(), plain);

        let plain_d = loss_d(0.81, 0.33);
        let mut tape = Tape::new();
        let dr = tape.constant(Tensor::scalar(0.81));
        let df = tape.constant(Tensor::scalar(0.33));
        let taped_d = loss_d_tape(&mut tape, dr, df);
        assert_eq!(tape.value(taped_d).scalar_value(), plain_d);
    }

    #[test]
    fn zero_epochs_leaves_params_unchanged() {
        let net = toy_network(5, 8, 1, 1.0);
        let windows = make_windows(&net, 3).unwrap();
        let mc = tiny_model_cfg();
        let mut r = rng(5);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let g0 = g.clone();
        let d0 = d.clone();
        let cfg = TrainConfig { epochs_pretrain: 0, window: 3, ..TrainConfig::default() };
        let log = train_adversarial(&windows, &mut g, &mut d, &cfg).unwrap();
        assert!(log.is_empty());
        assert_eq!(g, g0);
        assert_eq!(d, d0);
    }

    #[test]
    fn empty_window_list_is_config_error() {
        let mc = tiny_model_cfg();
        let mut r = rng(5);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let cfg = TrainConfig { epochs_pretrain: 1, ..TrainConfig::default() };
        assert!(matches!(
            train_adversarial(&[], &mut g, &mut d, &cfg),
            Err(HqtlpError::Config(_))
        ));
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let net = toy_network(5, 9, 2, 1.0);
        let windows = make_windows(&net, 3).unwrap();
        let mc = tiny_model_cfg();
        let cfg =
            TrainConfig { epochs_pretrain: 3, window: 3, seed: 11, ..TrainConfig::default() };

        let run = || {
            let mut r = rng(123);
            let mut g = GeneratorParams::init(5, &mc, &mut r);
            let mut d = DiscriminatorParams::init(5, &mc, &mut r);
            let log = train_adversarial(&windows, &mut g, &mut d, &cfg).unwrap();
            (g, d, log)
        };
        let (g1, d1, l1) = run();
        let (g2, d2, l2) = run();
        assert_eq!(g1, g2);
        assert_eq!(d1, d2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn ablation_matches_reconstruction_trainer_bitwise() {
        let net = toy_network(6, 10, 3, 1.0);
        let windows = make_windows(&net, 3).unwrap();
        let mc = tiny_model_cfg();
        let base_cfg = TrainConfig { window: 3, seed: 21, ..TrainConfig::default() };

        for epochs in [1usize, 2, 4] {
            let mut r = rng(9);
            let mut g_adv = GeneratorParams::init(6, &mc, &mut r);
            let mut d = DiscriminatorParams::init(6, &mc, &mut r);
            let mut g_rec = g_adv.clone();

            let cfg_adv = TrainConfig { lambda_adv: 0.0, epochs_pretrain: epochs, ..base_cfg };
            let log_adv = train_adversarial(&windows, &mut g_adv, &mut d, &cfg_adv).unwrap();
            let log_rec = train_reconstruction(&windows, &mut g_rec, &cfg_adv).unwrap();

            assert_eq!(g_adv, g_rec, "trajectories diverged at {epochs} epochs");
            let adv_losses: Vec<f64> = log_adv.iter().map(|r| r.loss_g).collect();
            let rec_losses: Vec<f64> = log_rec.iter().map(|r| r.loss_g).collect();
            assert_eq!(adv_losses, rec_losses);
        }
    }

    #[test]
    fn adversarial_training_moves_both_networks() {
        let net = toy_network(5, 9, 4, 1.0);
        let windows = make_windows(&net, 3).unwrap();
        let mc = tiny_model_cfg();
        let mut r = rng(31);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let g0 = g.clone();
        let d0 = d.clone();
        let cfg = TrainConfig { epochs_pretrain: 2, window: 3, ..TrainConfig::default() };
        train_adversarial(&windows, &mut g, &mut d, &cfg).unwrap();
        assert_ne!(g, g0);
        assert_ne!(d, d0);

        // The trained pair still produces valid scores and snapshots.
        let pred = generator_forward(&g, windows[0].inputs, &NoiseSpec { d_z: 3, seed: 7 });
        let score = discriminator_forward(&d, &pred);
        assert!(score > 0.0 && score < 1.0);
    }

    #[test]
    fn online_prediction_record_shape() {
        let net = toy_network(5, 16, 6, 100.0);
        let mc = tiny_model_cfg();
        let mut r = rng(41);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let cfg = TrainConfig {
            window: 4,
            epochs_pretrain: 1,
            epochs_online: 1,
            ..TrainConfig::default()
        };
        let records = predict_online(&net, 12, &mut g, &mut d, &cfg).unwrap();
        assert_eq!(records.len(), 4);
        for (k, rec) in records.iter().enumerate() {
            assert_eq!(rec.t, 12 + k);
            assert_eq!(rec.truth.t, rec.t);
            assert_eq!(rec.pred.n(), 5);
            assert!(rec.report.rmse >= 0.0);
        }
    }

    #[test]
    fn online_prediction_with_zero_epochs_is_pure_rollout() {
        let net = toy_network(5, 14, 7, 10.0);
        let mc = tiny_model_cfg();
        let mut r = rng(43);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let g0 = g.clone();
        let cfg = TrainConfig { window: 4, epochs_online: 0, ..TrainConfig::default() };
        let records = predict_online(&net, 11, &mut g, &mut d, &cfg).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(g, g0, "zero online epochs must not move parameters");
    }

    #[test]
    fn online_split_too_small_is_config_error() {
        let net = toy_network(5, 14, 8, 10.0);
        let mc = tiny_model_cfg();
        let mut r = rng(44);
        let mut g = GeneratorParams::init(5, &mc, &mut r);
        let mut d = DiscriminatorParams::init(5, &mc, &mut r);
        let cfg = TrainConfig { window: 10, ..TrainConfig::default() };
        assert!(matches!(
            predict_online(&net, 10, &mut g, &mut d, &cfg),
            Err(HqtlpError::Config(_))
        ));
    }

    #[test]
    fn online_loop_never_reads_the_target_step() {
        // Two networks identical except at the last snapshot: the
        // prediction for that step must not change.
        let net_a = toy_network(5, 13, 9, 10.0);
        let mut snaps = net_a.snapshots().to_vec();
        let last = snaps.len() - 1;
        let mut adj = snaps[last].adj.clone();
        let bump = adj.at(0, 1) + 5.0;
        adj.set(0, 1, bump);
        adj.set(1, 0, bump);
        snaps[last] = Snapshot::new(adj, last);
        let net_b = DynamicNetwork::new(snaps).unwrap();

        let mc = tiny_model_cfg();
        let cfg = TrainConfig {
            window: 4,
            epochs_online: 1,
            epochs_pretrain: 0,
            ..TrainConfig::default()
        };
        let run = |net: &DynamicNetwork| {
            let mut r = rng(50);
            let mut g = GeneratorParams::init(5, &mc, &mut r);
            let mut d = DiscriminatorParams::init(5, &mc, &mut r);
            predict_online(net, 11, &mut g, &mut d, &cfg).unwrap()
        };
        let ra = run(&net_a);
        let rb = run(&net_b);
        let pa = ra.last().unwrap();
        let pb = rb.last().unwrap();
        assert_eq!(pa.pred.adj, pb.pred.adj, "prediction leaked the target snapshot");
        assert_ne!(pa.report.rmse, pb.report.rmse, "metrics should see different truths");
    }
}
