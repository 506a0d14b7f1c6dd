//! Comparison methods: collapsed-network matrix factorization (CN-SVD,
//! CN-NMF), a decay-weighted NMF over the raw window (DW-NMF), and
//! reconstruction-only LSTM/GRU sequence regressors.
//!
//! The matrix-factorization methods are training-free: a window of
//! snapshots in, a prediction out, deterministic across calls. The RNN
//! regressors run through the same trainer and online evaluation loop as
//! the adversarial model, with the flattened upper triangle as the
//! per-step input and pure MSE as the loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dyngraph::{pair_count, symmetrize_and_clean, upper_triangle, Snapshot};
use crate::error::Result;
use crate::model::{gru_cell_tape, GruParams, ModelConfig, SeqPredictor};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::train::{
    run_online_eval, train_reconstruction, History, OnlineModel, PredictionRecord,
    ReconstructionOnline, TrainConfig,
};
use crate::DynamicNetwork;

/// Shared init seed so that CN-NMF and DW-NMF start from the same factors;
/// with identical inputs and weights their iterates then coincide exactly.
const NMF_INIT_SEED: u64 = 0x4e4d46;

/// Floor added to multiplicative-update denominators.
const NMF_EPS: f64 = 1e-12;

/// Collapse and factorization settings for the MF baselines.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseConfig {
    /// Exponential decay per step of age, in (0,1): the newest snapshot
    /// gets weight 1, the one before it `beta`, then `beta^2`, ...
    pub beta: f64,
    /// Factorization rank; defaults to `min(16, n/2)` (at least 1).
    pub rank: Option<usize>,
    /// Multiplicative-update iterations.
    pub nmf_iters: usize,
}

impl Default for CollapseConfig {
    fn default() -> Self {
        CollapseConfig { beta: 0.5, rank: None, nmf_iters: 300 }
    }
}

impl CollapseConfig {
    pub fn resolve_rank(&self, n: usize) -> usize {
        self.rank.unwrap_or_else(|| (n / 2).clamp(1, 16))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(crate::HqtlpError::config("beta must lie in (0,1)"));
        }
        let r = self.resolve_rank(n);
        if r == 0 || r > n {
            return Err(crate::HqtlpError::config(format!("rank {r} out of range 1..={n}")));
        }
        Ok(())
    }
}

/// Collapsed network: the decay-weighted mean of the window,
/// `CN = sum_l beta^(L-l) A_l / sum_l beta^(L-l)`, newest snapshot
/// weighted 1.
pub fn collapse(inputs: &[Snapshot], beta: f64) -> Tensor {
    assert!(!inputs.is_empty(), "collapse needs at least one snapshot");
    let n = inputs[0].n();
    let count = inputs.len();
    let mut acc = Tensor::zeros(&[n, n]);
    let mut norm = 0.0;
    for (l, s) in inputs.iter().enumerate() {
        let w = beta.powi((count - 1 - l) as i32);
        acc = acc.add(&s.adj.scale(w));
        norm += w;
    }
    acc.scale(1.0 / norm)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matching eigenvectors as columns, with each
/// vector's largest-magnitude entry made positive.
pub fn jacobi_eigen(a: &Tensor) -> (Vec<f64>, Tensor) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "jacobi needs a square matrix, got {:?}", a.shape());
    let mut m = a.clone();
    let mut v = Tensor::eye(n);
    let tol = 1e-14 * a.max_abs().max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.at(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.at(k, p);
                    let mkq = m.at(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.at(p, k);
                    let mqk = m.at(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..n).map(|i| m.at(i, i)).collect();
    // Sign convention: largest-magnitude entry of each column positive.
    for j in 0..n {
        let mut best = 0usize;
        for i in 1..n {
            if v.at(i, j).abs() > v.at(best, j).abs() {
                best = i;
            }
        }
        if v.at(best, j) < 0.0 {
            for i in 0..n {
                let x = v.at(i, j);
                v.set(i, j, -x);
            }
        }
    }
    (eigenvalues, v)
}

/// Rank-`r` truncated SVD reconstruction of a symmetric matrix: keep the
/// `r` eigenpairs of largest magnitude (for symmetric input the singular
/// values are the absolute eigenvalues).
pub fn truncated_svd_reconstruct(a: &Tensor, r: usize) -> Tensor {
    let n = a.rows();
    assert!(r <= n, "rank {r} exceeds matrix order {n}");
    let (vals, vecs) = jacobi_eigen(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].abs().partial_cmp(&vals[x].abs()).unwrap());
    let mut out = Tensor::zeros(&[n, n]);
    for &k in order.iter().take(r) {
        let lambda = vals[k];
        for i in 0..n {
            let vik = vecs.at(i, k);
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                let x = out.at(i, j) + lambda * vik * vecs.at(j, k);
                out.set(i, j, x);
            }
        }
    }
    out
}

/// CN-SVD prediction: truncated SVD reconstruction of the collapsed
/// network, cleaned into a valid adjacency.
pub fn cn_svd_predict(cn: &Tensor, r: usize) -> Tensor {
    symmetrize_and_clean(&truncated_svd_reconstruct(cn, r))
}

/// Nonnegative factorization result with the per-iteration objective.
pub struct NmfResult {
    pub w: Tensor,
    pub h: Tensor,
    /// `||V - WH||_F^2` after init and after each update (for DW-NMF, the
    /// decay-weighted sum over the window).
    pub objective: Vec<f64>,
}

fn nmf_init(rows: usize, cols: usize, r: usize, scale: f64) -> (Tensor, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(NMF_INIT_SEED);
    let mut draw = |a: usize, b: usize| {
        Tensor::new(vec![a, b], (0..a * b).map(|_| rng.random_range(0.1..1.0) * scale).collect())
    };
    (draw(rows, r), draw(r, cols))
}

fn frobenius_sq(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lee-Seung multiplicative updates minimizing `||V - WH||_F^2` with
/// nonnegative factors. The objective is non-increasing across iterations.
pub fn nmf_factorize(v: &Tensor, r: usize, iters: usize) -> NmfResult {
    let (rows, cols) = (v.rows(), v.cols());
    let mean = v.sum() / v.numel() as f64;
    let scale = (mean.max(NMF_EPS) / r as f64).sqrt();
    let (mut w, mut h) = nmf_init(rows, cols, r, scale);

    let mut objective = Vec::with_capacity(iters + 1);
    objective.push(frobenius_sq(v, &w.matmul(&h)));
    for _ in 0..iters {
        // H <- H .* (W^T V) ./ (W^T W H + eps)
        let wt = w.transpose();
        let wtv = wt.matmul(v);
        let wtwh = wt.matmul(&w).matmul(&h);
        h = h.zip(&wtv, |hv, num| hv * num).zip(&wtwh, |num, den| num / (den + NMF_EPS));
        // W <- W .* (V H^T) ./ (W H H^T + eps)
        let ht = h.transpose();
        let vht = v.matmul(&ht);
        let whht = w.matmul(&h).matmul(&ht);
        w = w.zip(&vht, |wv, num| wv * num).zip(&whht, |num, den| num / (den + NMF_EPS));
        objective.push(frobenius_sq(v, &w.matmul(&h)));
    }
    NmfResult { w, h, objective }
}

/// CN-NMF prediction: factorize the collapsed network, predict `W * H`,
/// clean.
pub fn cn_nmf_predict(cn: &Tensor, r: usize, iters: usize) -> Tensor {
    let res = nmf_factorize(cn, r, iters);
    symmetrize_and_clean(&res.w.matmul(&res.h))
}

/// Decay-weighted NMF over the raw window: multiplicative updates on
/// `sum_l beta^(L-l) ||A_l - WH||_F^2`, one shared factor pair across the
/// window. Returns the factorization plus the weighted objective trace.
pub fn dw_nmf_factorize(inputs: &[Snapshot], beta: f64, r: usize, iters: usize) -> NmfResult {
    assert!(!inputs.is_empty(), "dw-nmf needs at least one snapshot");
    let n = inputs[0].n();
    let count = inputs.len();
    let weights: Vec<f64> = (0..count).map(|l| beta.powi((count - 1 - l) as i32)).collect();
    let total: f64 = weights.iter().sum();
    // Weighted sum S = sum_l w_l A_l; the update ratios only see S and the
    // total weight.
    let mut s = Tensor::zeros(&[n, n]);
    for (wl, snap) in weights.iter().zip(inputs) {
        s = s.add(&snap.adj.scale(*wl));
    }

    let mean = s.sum() / (total * s.numel() as f64);
    let scale = (mean.max(NMF_EPS) / r as f64).sqrt();
    let (mut w, mut h) = nmf_init(n, n, r, scale);

    let weighted_objective = |w: &Tensor, h: &Tensor| -> f64 {
        let wh = w.matmul(h);
        weights.iter().zip(inputs).map(|(wl, snap)| wl * frobenius_sq(&snap.adj, &wh)).sum()
    };

    let mut objective = Vec::with_capacity(iters + 1);
    objective.push(weighted_objective(&w, &h));
    for _ in 0..iters {
        // Gradient of the weighted sum uses S and total where plain NMF
        // uses V and 1.
        let wt = w.transpose();
        let wts = wt.matmul(&s);
        let wtwh = wt.matmul(&w).matmul(&h).scale(total);
        h = h.zip(&wts, |hv, num| hv * num).zip(&wtwh, |num, den| num / (den + NMF_EPS));
        let ht = h.transpose();
        let sht = s.matmul(&ht);
        let whht = w.matmul(&h).matmul(&ht).scale(total);
        w = w.zip(&sht, |wv, num| wv * num).zip(&whht, |num, den| num / (den + NMF_EPS));
        objective.push(weighted_objective(&w, &h));
    }
    NmfResult { w, h, objective }
}

/// DW-NMF prediction: `clean(W * H)` from [`dw_nmf_factorize`].
pub fn dw_nmf_predict(inputs: &[Snapshot], beta: f64, r: usize, iters: usize) -> Tensor {
    let res = dw_nmf_factorize(inputs, beta, r, iters);
    symmetrize_and_clean(&res.w.matmul(&res.h))
}

/// Which MF pipeline a [`MfOnline`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfKind {
    CnSvd,
    CnNmf,
    DwNmf,
}

/// Training-free online model: prediction is a pure function of the last
/// `window` observed snapshots (original units).
pub struct MfOnline {
    pub kind: MfKind,
    pub cfg: CollapseConfig,
    pub window: usize,
}

impl OnlineModel for MfOnline {
    fn fine_tune(&mut self, _hist: &History) -> Result<()> {
        Ok(())
    }

    fn predict_next(&mut self, hist: &History) -> Result<Tensor> {
        let len = hist.orig.len();
        let inputs = &hist.orig[len.saturating_sub(self.window)..];
        let n = inputs[0].n();
        let r = self.cfg.resolve_rank(n);
        Ok(match self.kind {
            MfKind::CnSvd => cn_svd_predict(&collapse(inputs, self.cfg.beta), r),
            MfKind::CnNmf => {
                cn_nmf_predict(&collapse(inputs, self.cfg.beta), r, self.cfg.nmf_iters)
            }
            MfKind::DwNmf => dw_nmf_predict(inputs, self.cfg.beta, r, self.cfg.nmf_iters),
        })
    }
}

/// One LSTM cell's gate parameters (input, forget, output, cell gates).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_i: Tensor,
    pub u_i: Tensor,
    pub b_i: Tensor,
    pub w_f: Tensor,
    pub u_f: Tensor,
    pub b_f: Tensor,
    pub w_o: Tensor,
    pub u_o: Tensor,
    pub b_o: Tensor,
    pub w_g: Tensor,
    pub u_g: Tensor,
    pub b_g: Tensor,
}

impl LstmParams {
    pub fn init(x_dim: usize, d_h: usize, rng: &mut ChaCha8Rng) -> Self {
        let b = || Tensor::zeros(&[1, d_h]);
        LstmParams {
            w_i: Tensor::glorot(x_dim, d_h, rng),
            u_i: Tensor::glorot(d_h, d_h, rng),
            b_i: b(),
            w_f: Tensor::glorot(x_dim, d_h, rng),
            u_f: Tensor::glorot(d_h, d_h, rng),
            b_f: b(),
            w_o: Tensor::glorot(x_dim, d_h, rng),
            u_o: Tensor::glorot(d_h, d_h, rng),
            b_o: b(),
            w_g: Tensor::glorot(x_dim, d_h, rng),
            u_g: Tensor::glorot(d_h, d_h, rng),
            b_g: b(),
        }
    }

    pub fn zeros(x_dim: usize, d_h: usize) -> Self {
        let w = || Tensor::zeros(&[x_dim, d_h]);
        let u = || Tensor::zeros(&[d_h, d_h]);
        let b = || Tensor::zeros(&[1, d_h]);
        LstmParams {
            w_i: w(),
            u_i: u(),
            b_i: b(),
            w_f: w(),
            u_f: u(),
            b_f: b(),
            w_o: w(),
            u_o: u(),
            b_o: b(),
            w_g: w(),
            u_g: u(),
            b_g: b(),
        }
    }

    fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_i, &self.u_i, &self.b_i, &self.w_f, &self.u_f, &self.b_f, &self.w_o,
            &self.u_o, &self.b_o, &self.w_g, &self.u_g, &self.b_g,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_i, &mut self.u_i, &mut self.b_i, &mut self.w_f, &mut self.u_f,
            &mut self.b_f, &mut self.w_o, &mut self.u_o, &mut self.b_o, &mut self.w_g,
            &mut self.u_g, &mut self.b_g,
        ]
    }
}

struct LstmVars {
    w_i: Var,
    u_i: Var,
    b_i: Var,
    w_f: Var,
    u_f: Var,
    b_f: Var,
    w_o: Var,
    u_o: Var,
    b_o: Var,
    w_g: Var,
    u_g: Var,
    b_g: Var,
}

impl LstmVars {
    fn bind(tape: &mut Tape, p: &LstmParams, tracked: bool) -> Self {
        let mut one = |t: &Tensor| if tracked { tape.param(t) } else { tape.constant(t.clone()) };
        LstmVars {
            w_i: one(&p.w_i),
            u_i: one(&p.u_i),
            b_i: one(&p.b_i),
            w_f: one(&p.w_f),
            u_f: one(&p.u_f),
            b_f: one(&p.b_f),
            w_o: one(&p.w_o),
            u_o: one(&p.u_o),
            b_o: one(&p.b_o),
            w_g: one(&p.w_g),
            u_g: one(&p.u_g),
            b_g: one(&p.b_g),
        }
    }

    fn vars(&self) -> Vec<Var> {
        vec![
            self.w_i, self.u_i, self.b_i, self.w_f, self.u_f, self.b_f, self.w_o, self.u_o,
            self.b_o, self.w_g, self.u_g, self.b_g,
        ]
    }
}

/// One LSTM step on the tape. Returns `(h, c)`.
fn lstm_cell_tape(tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var, p: &LstmVars) -> (Var, Var) {
    let lin = |tape: &mut Tape, w: Var, u: Var, b: Var| {
        let xw = tape.matmul(x, w);
        let hu = tape.matmul(h_prev, u);
        let s = tape.add(xw, hu);
        tape.add(s, b)
    };
    let i = lin(tape, p.w_i, p.u_i, p.b_i);
    let i = tape.sigmoid(i);
    let f = lin(tape, p.w_f, p.u_f, p.b_f);
    let f = tape.sigmoid(f);
    let o = lin(tape, p.w_o, p.u_o, p.b_o);
    let o = tape.sigmoid(o);
    let g = lin(tape, p.w_g, p.u_g, p.b_g);
    let g = tape.tanh(g);
    let fc = tape.mul(f, c_prev);
    let ig = tape.mul(i, g);
    let c = tape.add(fc, ig);
    let ct = tape.tanh(c);
    let h = tape.mul(o, ct);
    (h, c)
}

/// Plain LSTM step for direct evaluation. Returns `(h, c)`.
pub fn lstm_cell(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    p: &LstmParams,
) -> (Tensor, Tensor) {
    let lin = |w: &Tensor, u: &Tensor, b: &Tensor| x.matmul(w).add(&h_prev.matmul(u)).add(b);
    let i = lin(&p.w_i, &p.u_i, &p.b_i).map(crate::tensor::sigmoid);
    let f = lin(&p.w_f, &p.u_f, &p.b_f).map(crate::tensor::sigmoid);
    let o = lin(&p.w_o, &p.u_o, &p.b_o).map(crate::tensor::sigmoid);
    let g = lin(&p.w_g, &p.u_g, &p.b_g).map(f64::tanh);
    let c = f.mul(c_prev).add(&i.mul(&g));
    let h = o.mul(&c.map(f64::tanh));
    (h, c)
}

/// Recurrent cell flavor for the reconstruction baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    Gru,
}

enum CellParams {
    Lstm(LstmParams),
    Gru(GruParams),
}

/// Reconstruction-only sequence regressor: a recurrent cell over the
/// flattened upper triangles of the window, one fully-connected logistic
/// output layer. No graph convolution, no noise, no discriminator.
pub struct RnnRegressor {
    n: usize,
    d_h: usize,
    cell: CellParams,
    fc_w: Tensor,
    fc_b: Tensor,
}

impl RnnRegressor {
    pub fn init(n: usize, kind: CellKind, cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = pair_count(n);
        let cell = match kind {
            CellKind::Lstm => CellParams::Lstm(LstmParams::init(m, cfg.d_h, rng)),
            CellKind::Gru => CellParams::Gru(GruParams::init(m, cfg.d_h, rng)),
        };
        RnnRegressor {
            n,
            d_h: cfg.d_h,
            cell,
            fc_w: Tensor::glorot(cfg.d_h, m, rng),
            fc_b: Tensor::zeros(&[1, m]),
        }
    }
}

impl SeqPredictor for RnnRegressor {
    fn node_count(&self) -> usize {
        self.n
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut v = match &self.cell {
            CellParams::Lstm(p) => p.tensors(),
            CellParams::Gru(p) => p.gate_tensors(),
        };
        v.push(&self.fc_w);
        v.push(&self.fc_b);
        v
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = match &mut self.cell {
            CellParams::Lstm(p) => p.tensors_mut(),
            CellParams::Gru(p) => p.gate_tensors_mut(),
        };
        v.push(&mut self.fc_w);
        v.push(&mut self.fc_b);
        v
    }

    fn forward(
        &self,
        tape: &mut Tape,
        inputs: &[Snapshot],
        _rng: &mut ChaCha8Rng,
        tracked: bool,
    ) -> (Var, Vec<Var>) {
        let mut h = tape.constant(Tensor::zeros(&[1, self.d_h]));
        let mut param_vars;
        match &self.cell {
            CellParams::Gru(p) => {
                let gv = crate::model::bind_gru(tape, p, tracked);
                param_vars = gv.vars_list();
                for s in inputs {
                    let x = tape.constant(upper_triangle(&s.adj));
                    h = gru_cell_tape(tape, x, h, &gv);
                }
            }
            CellParams::Lstm(p) => {
                let lv = LstmVars::bind(tape, p, tracked);
                param_vars = lv.vars();
                let mut c = tape.constant(Tensor::zeros(&[1, self.d_h]));
                for s in inputs {
                    let x = tape.constant(upper_triangle(&s.adj));
                    let (nh, nc) = lstm_cell_tape(tape, x, h, c, &lv);
                    h = nh;
                    c = nc;
                }
            }
        }
        let fc_w = if tracked { tape.param(&self.fc_w) } else { tape.constant(self.fc_w.clone()) };
        let fc_b = if tracked { tape.param(&self.fc_b) } else { tape.constant(self.fc_b.clone()) };
        param_vars.push(fc_w);
        param_vars.push(fc_b);
        let fc = tape.matmul(h, fc_w);
        let logits = tape.add(fc, fc_b);
        let y = tape.sigmoid(logits);
        (y, if tracked { param_vars } else { Vec::new() })
    }
}

/// Pretrains a reconstruction RNN on windows with targets before
/// `split_t`, then runs the shared online evaluation over the rest.
pub fn rnn_baseline_predict(
    net: &DynamicNetwork,
    split_t: usize,
    kind: CellKind,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = RnnRegressor::init(net.n(), kind, model_cfg, &mut init_rng);

    let scaled = crate::dyngraph::scale_weights(net, split_t)?;
    let windows = crate::train::pretrain_windows(&scaled.net, cfg.window, split_t)?;
    train_reconstruction(&windows, &mut model, cfg)?;

    let mut online = ReconstructionOnline::new(&mut model, cfg);
    run_online_eval(net, split_t, cfg.window, cfg.tau, cfg.mr_base, &mut online)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn unit_offdiag(n: usize, v: f64) -> Tensor {
        let mut m = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    fn random_cn(n: usize, r: &mut ChaCha8Rng) -> Tensor {
        let mut m = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in (i + 1)..n {
                if r.random_bool(0.7) {
                    let w = r.random_range(0.1..10.0);
                    m.set(i, j, w);
                    m.set(j, i, w);
                }
            }
        }
        m
    }

    #[test]
    fn collapse_single_snapshot_is_identity() {
        let s = Snapshot::new(unit_offdiag(3, 2.5), 0);
        for beta in [0.1, 0.5, 0.9] {
            assert_eq!(collapse(&[s.clone()], beta), s.adj);
        }
    }

    #[test]
    fn collapse_hand_example() {
        let a1 = Snapshot::new(unit_offdiag(3, 2.0), 0);
        let a2 = Snapshot::new(unit_offdiag(3, 4.0), 1);
        let cn = collapse(&[a1, a2], 0.5);
        // weights 0.5 and 1, normalized: (0.5*2 + 1*4) / 1.5 = 10/3.
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((cn.at(i, j) - 10.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn collapse_of_identical_snapshots_is_that_snapshot() {
        let mut r = rng(3);
        let adj = random_cn(5, &mut r);
        let snaps: Vec<Snapshot> = (0..4).map(|t| Snapshot::new(adj.clone(), t)).collect();
        let cn = collapse(&snaps, 0.3);
        let diff = cn.sub(&adj).max_abs();
        assert!(diff < 1e-12);
    }

    #[test]
    fn jacobi_recovers_diagonal_matrix() {
        let mut a = Tensor::zeros(&[3, 3]);
        a.set(0, 0, 3.0);
        a.set(1, 1, -1.0);
        a.set(2, 2, 0.5);
        let (vals, vecs) = jacobi_eigen(&a);
        let mut sorted = vals.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((sorted[0] + 1.0).abs() < 1e-12);
        assert!((sorted[1] - 0.5).abs() < 1e-12);
        assert!((sorted[2] - 3.0).abs() < 1e-12);
        // Eigenvectors orthonormal.
        let vtv = vecs.transpose().matmul(&vecs);
        assert!(vtv.sub(&Tensor::eye(3)).max_abs() < 1e-12);
    }

    #[test]
    fn full_rank_svd_reconstructs_exactly() {
        let mut r = rng(7);
        for _ in 0..5 {
            let cn = random_cn(6, &mut r);
            let rec = truncated_svd_reconstruct(&cn, 6);
            assert!(rec.sub(&cn).max_abs() < 1e-8);
        }
    }

    #[test]
    fn rank_one_svd_recovers_rank_one_matrix() {
        // CN = u u^T for a nonnegative u (diagonal kept on purpose: the
        // reconstruction target is the full rank-1 matrix).
        let u = vec![1.0, 2.0, 0.5, 3.0];
        let n = u.len();
        let mut cn = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..n {
                cn.set(i, j, u[i] * u[j]);
            }
        }
        let rec = truncated_svd_reconstruct(&cn, 1);
        assert!(rec.sub(&cn).max_abs() < 1e-8);
    }

    #[test]
    fn cn_svd_prediction_is_valid_and_deterministic() {
        let mut r = rng(9);
        let cn = random_cn(7, &mut r);
        let a = cn_svd_predict(&cn, 3);
        let b = cn_svd_predict(&cn, 3);
        assert_eq!(a, b);
        assert_eq!(symmetrize_and_clean(&a), a);
    }

    #[test]
    #[should_panic(expected = "exceeds matrix order")]
    fn svd_rank_above_n_panics() {
        let cn = unit_offdiag(3, 1.0);
        let _ = truncated_svd_reconstruct(&cn, 4);
    }

    #[test]
    fn nmf_objective_non_increasing_and_factors_nonnegative() {
        let mut r = rng(11);
        for _ in 0..10 {
            let cn = random_cn(6, &mut r);
            let res = nmf_factorize(&cn, 3, 100);
            let tol = 1e-12 * res.objective[0].max(1.0);
            for w in res.objective.windows(2) {
                assert!(w[1] <= w[0] + tol, "objective rose: {} -> {}", w[0], w[1]);
            }
            assert!(res.w.data().iter().all(|&x| x >= 0.0));
            assert!(res.h.data().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn nmf_rank_one_recovery() {
        let u = vec![1.0, 2.0, 0.5, 3.0, 1.5];
        let n = u.len();
        let mut cn = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..n {
                cn.set(i, j, u[i] * u[j]);
            }
        }
        let res = nmf_factorize(&cn, 1, 500);
        let rec = res.w.matmul(&res.h);
        let rel = rec.sub(&cn).max_abs() / cn.max_abs();
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn dw_nmf_on_identical_snapshots_matches_cn_nmf() {
        let mut r = rng(13);
        let adj = random_cn(5, &mut r);
        let snaps: Vec<Snapshot> = (0..3).map(|t| Snapshot::new(adj.clone(), t)).collect();
        let dw = dw_nmf_predict(&snaps, 0.5, 2, 80);
        let cn = cn_nmf_predict(&collapse(&snaps, 0.5), 2, 80);
        assert!(dw.sub(&cn).max_abs() < 1e-9);
    }

    #[test]
    fn dw_nmf_objective_non_increasing() {
        let mut r = rng(17);
        let snaps: Vec<Snapshot> =
            (0..4).map(|t| Snapshot::new(random_cn(5, &mut r), t)).collect();
        let res = dw_nmf_factorize(&snaps, 0.6, 2, 120);
        let tol = 1e-12 * res.objective[0].max(1.0);
        for w in res.objective.windows(2) {
            assert!(w[1] <= w[0] + tol);
        }
    }

    #[test]
    fn dw_nmf_beats_zero_predictor_on_stationary_sequence() {
        let mut r = rng(19);
        let adj = random_cn(6, &mut r);
        let snaps: Vec<Snapshot> = (0..5).map(|t| Snapshot::new(adj.clone(), t)).collect();
        let pred = dw_nmf_predict(&snaps[..4], 0.5, 3, 300);
        let next = &snaps[4].adj;
        let err = pred.sub(next).max_abs();
        let zero_err = next.max_abs();
        assert!(err < zero_err, "dw-nmf {err} not better than zero {zero_err}");
    }

    #[test]
    fn lstm_zero_params_hand_evaluation() {
        let p = LstmParams::zeros(3, 4);
        let x = Tensor::from_rows(&[vec![1.0, -1.0, 2.0]]);
        let h = Tensor::from_rows(&[vec![0.1, 0.2, 0.3, 0.4]]);
        let c = Tensor::from_rows(&[vec![0.8, -0.4, 1.2, 0.0]]);
        let (h_new, c_new) = lstm_cell(&x, &h, &c, &p);
        for k in 0..4 {
            let expect_c = 0.5 * c.data()[k];
            assert!((c_new.data()[k] - expect_c).abs() < 1e-15);
            let expect_h = 0.5 * expect_c.tanh();
            assert!((h_new.data()[k] - expect_h).abs() < 1e-15);
        }
    }

    #[test]
    fn taped_lstm_matches_plain_lstm() {
        let mut r = rng(23);
        let p = LstmParams::init(4, 3, &mut r);
        let x = Tensor::randn(&[1, 4], &mut r);
        let h = Tensor::randn(&[1, 3], &mut r);
        let c = Tensor::randn(&[1, 3], &mut r);
        let (ph, pc) = lstm_cell(&x, &h, &c, &p);
        let mut tape = Tape::new();
        let lv = LstmVars::bind(&mut tape, &p, false);
        let xv = tape.constant(x);
        let hv = tape.constant(h);
        let cv = tape.constant(c);
        let (th, tc) = lstm_cell_tape(&mut tape, xv, hv, cv, &lv);
        assert!(tape.value(th).sub(&ph).max_abs() < 1e-15);
        assert!(tape.value(tc).sub(&pc).max_abs() < 1e-15);
    }

    fn jitter_network(n: usize, t_total: usize, seed: u64) -> DynamicNetwork {
        let mut r = rng(seed);
        let level = random_cn(n, &mut r);
        let snaps: Vec<Snapshot> = (0..t_total)
            .map(|t| {
                let adj = level.map(|w| if w > 0.0 { w * (0.9 + 0.01 * (t as f64)) } else { 0.0 });
                Snapshot::new(adj, t)
            })
            .collect();
        DynamicNetwork::new(snaps).unwrap()
    }

    #[test]
    fn rnn_baselines_are_deterministic_and_count_records() {
        let net = jitter_network(5, 12, 31);
        let cfg = TrainConfig {
            window: 3,
            epochs_pretrain: 2,
            epochs_online: 1,
            seed: 5,
            ..TrainConfig::default()
        };
        let mc = ModelConfig { d_z: 2, d_1: 2, d_2: 2, d_h: 5, h_1: 4, h_2: 2 };
        for kind in [CellKind::Gru, CellKind::Lstm] {
            let a = rnn_baseline_predict(&net, 9, kind, &cfg, &mc).unwrap();
            let b = rnn_baseline_predict(&net, 9, kind, &cfg, &mc).unwrap();
            assert_eq!(a.len(), 3);
            for (ra, rb) in a.iter().zip(&b) {
                assert_eq!(ra.pred.adj, rb.pred.adj);
                assert_eq!(ra.report, rb.report);
            }
        }
    }

    #[test]
    fn mf_online_records_are_valid_and_repeatable() {
        let net = jitter_network(6, 10, 37);
        let cfg = CollapseConfig::default();
        for kind in [MfKind::CnSvd, MfKind::CnNmf, MfKind::DwNmf] {
            let run = || {
                let mut model = MfOnline { kind, cfg, window: 4 };
                run_online_eval(&net, 7, 4, 0.001, crate::metrics::MrBase::Union, &mut model)
                    .unwrap()
            };
            let a = run();
            let b = run();
            assert_eq!(a.len(), 3);
            for (ra, rb) in a.iter().zip(&b) {
                assert_eq!(ra.pred.adj, rb.pred.adj);
                assert!(ra.pred.adj.data().iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn pretrain_windows_only_cover_training_targets() {
        let net = jitter_network(4, 15, 41);
        let ws = crate::train::pretrain_windows(&net, 3, 10).unwrap();
        assert_eq!(ws.len(), 7); // targets 3..=9
        assert!(ws.iter().all(|w| w.target.t < 10));
    }
}
