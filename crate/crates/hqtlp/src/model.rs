//! The adversarial predictor pair: a generator that turns a window of
//! snapshots plus per-node noise into the next snapshot, and a
//! discriminator scoring snapshots as real or generated.
//!
//! Generator layout: per input step, two GCN layers propagate the noise
//! attributes over the normalized adjacency (ReLU after the first layer,
//! linear second); the flattened node features feed one GRU cell; the last
//! GRU state passes through a fully-connected layer with logistic output,
//! emitting one value per unordered node pair. The pair vector is mirrored
//! into a symmetric zero-diagonal matrix, so structural validity holds by
//! construction for every parameter setting.
//!
//! GRU update convention (fixed; tests depend on it):
//! `h_t = z .* h_prev + (1 - z) .* h_cand`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dyngraph::{from_upper_triangle, gcn_normalize, pair_count, upper_triangle, Snapshot};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Layer sizes. The node count `n` and window length come from the data;
/// everything here is free to tune.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Per-node noise dimension.
    pub d_z: usize,
    /// First GCN layer output width.
    pub d_1: usize,
    /// Second GCN layer output width.
    pub d_2: usize,
    /// GRU hidden width.
    pub d_h: usize,
    /// Discriminator hidden widths.
    pub h_1: usize,
    pub h_2: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { d_z: 16, d_1: 64, d_2: 32, d_h: 128, h_1: 256, h_2: 64 }
    }
}

/// Standard-normal noise source: `L` independent `n x d_z` matrices per
/// window, reproducible from the seed.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub d_z: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn draw(&self, n: usize, steps: usize) -> Vec<Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        draw_noise(&mut rng, n, self.d_z, steps)
    }
}

/// `steps` fresh noise matrices from an existing stream.
pub fn draw_noise(rng: &mut ChaCha8Rng, n: usize, d_z: usize, steps: usize) -> Vec<Tensor> {
    (0..steps).map(|_| Tensor::randn(&[n, d_z], rng)).collect()
}

/// One GRU cell's gate parameters: input, hidden, and bias tensors for the
/// reset, update, and candidate-activation gates.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_r: Tensor,
    pub u_r: Tensor,
    pub b_r: Tensor,
    pub w_z: Tensor,
    pub u_z: Tensor,
    pub b_z: Tensor,
    pub w_c: Tensor,
    pub u_c: Tensor,
    pub b_c: Tensor,
}

impl GruParams {
    pub fn init(x_dim: usize, d_h: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = |rng: &mut ChaCha8Rng| Tensor::glorot(x_dim, d_h, rng);
        let u = |rng: &mut ChaCha8Rng| Tensor::glorot(d_h, d_h, rng);
        GruParams {
            w_r: w(rng),
            u_r: u(rng),
            b_r: Tensor::zeros(&[1, d_h]),
            w_z: w(rng),
            u_z: u(rng),
            b_z: Tensor::zeros(&[1, d_h]),
            w_c: w(rng),
            u_c: u(rng),
            b_c: Tensor::zeros(&[1, d_h]),
        }
    }

    pub fn zeros(x_dim: usize, d_h: usize) -> Self {
        GruParams {
            w_r: Tensor::zeros(&[x_dim, d_h]),
            u_r: Tensor::zeros(&[d_h, d_h]),
            b_r: Tensor::zeros(&[1, d_h]),
            w_z: Tensor::zeros(&[x_dim, d_h]),
            u_z: Tensor::zeros(&[d_h, d_h]),
            b_z: Tensor::zeros(&[1, d_h]),
            w_c: Tensor::zeros(&[x_dim, d_h]),
            u_c: Tensor::zeros(&[d_h, d_h]),
            b_c: Tensor::zeros(&[1, d_h]),
        }
    }

    /// Gate tensors in a fixed order (reset, update, candidate).
    pub fn gate_tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_r, &self.u_r, &self.b_r, &self.w_z, &self.u_z, &self.b_z, &self.w_c,
            &self.u_c, &self.b_c,
        ]
    }

    pub fn gate_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_r, &mut self.u_r, &mut self.b_r, &mut self.w_z, &mut self.u_z,
            &mut self.b_z, &mut self.w_c, &mut self.u_c, &mut self.b_c,
        ]
    }
}

/// Tape handles for one GRU cell's parameters.
#[derive(Debug, Clone, Copy)]
pub struct GruVars {
    pub w_r: Var,
    pub u_r: Var,
    pub b_r: Var,
    pub w_z: Var,
    pub u_z: Var,
    pub b_z: Var,
    pub w_c: Var,
    pub u_c: Var,
    pub b_c: Var,
}

fn bind_one(tape: &mut Tape, t: &Tensor, tracked: bool) -> Var {
    if tracked {
        tape.param(t)
    } else {
        tape.constant(t.clone())
    }
}

impl GruVars {
    fn bind(tape: &mut Tape, p: &GruParams, tracked: bool) -> Self {
        GruVars {
            w_r: bind_one(tape, &p.w_r, tracked),
            u_r: bind_one(tape, &p.u_r, tracked),
            b_r: bind_one(tape, &p.b_r, tracked),
            w_z: bind_one(tape, &p.w_z, tracked),
            u_z: bind_one(tape, &p.u_z, tracked),
            b_z: bind_one(tape, &p.b_z, tracked),
            w_c: bind_one(tape, &p.w_c, tracked),
            u_c: bind_one(tape, &p.u_c, tracked),
            b_c: bind_one(tape, &p.b_c, tracked),
        }
    }

    /// Vars in [`GruParams::gate_tensors`] order.
    pub fn vars_list(&self) -> Vec<Var> {
        vec![
            self.w_r, self.u_r, self.b_r, self.w_z, self.u_z, self.b_z, self.w_c, self.u_c,
            self.b_c,
        ]
    }
}

/// Register one GRU cell's parameters on a tape.
pub fn bind_gru(tape: &mut Tape, p: &GruParams, tracked: bool) -> GruVars {
    GruVars::bind(tape, p, tracked)
}

/// All trainable weights of the generator for a fixed node count.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub d_z: usize,
    pub d_1: usize,
    pub d_2: usize,
    pub d_h: usize,
    pub gcn1: Tensor,
    pub gcn2: Tensor,
    pub gru: GruParams,
    pub fc_w: Tensor,
    pub fc_b: Tensor,
}

impl GeneratorParams {
    pub fn init(n: usize, cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = pair_count(n);
        let x_dim = n * cfg.d_2;
        GeneratorParams {
            n,
            d_z: cfg.d_z,
            d_1: cfg.d_1,
            d_2: cfg.d_2,
            d_h: cfg.d_h,
            gcn1: Tensor::glorot(cfg.d_z, cfg.d_1, rng),
            gcn2: Tensor::glorot(cfg.d_1, cfg.d_2, rng),
            gru: GruParams::init(x_dim, cfg.d_h, rng),
            fc_w: Tensor::glorot(cfg.d_h, m, rng),
            fc_b: Tensor::zeros(&[1, m]),
        }
    }

    /// Fixed parameter enumeration order shared by the optimizer, gradient
    /// collection, and checkpoints.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.gcn1, &self.gcn2];
        v.extend(self.gru.gate_tensors());
        v.push(&self.fc_w);
        v.push(&self.fc_b);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.gcn1, &mut self.gcn2];
        v.extend(self.gru.gate_tensors_mut());
        v.push(&mut self.fc_w);
        v.push(&mut self.fc_b);
        v
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.numel()).sum()
    }
}

/// Tape handles for the generator parameters.
#[derive(Debug, Clone, Copy)]
pub struct GenVars {
    pub gcn1: Var,
    pub gcn2: Var,
    pub gru: GruVars,
    pub fc_w: Var,
    pub fc_b: Var,
}

impl GenVars {
    pub fn bind(tape: &mut Tape, p: &GeneratorParams) -> Self {
        Self::bind_inner(tape, p, true)
    }

    /// Bind as constants: forward passes work, gradients do not flow.
    /// Used while updating the discriminator with the generator fixed.
    pub fn bind_frozen(tape: &mut Tape, p: &GeneratorParams) -> Self {
        Self::bind_inner(tape, p, false)
    }

    fn bind_inner(tape: &mut Tape, p: &GeneratorParams, tracked: bool) -> Self {
        GenVars {
            gcn1: bind_one(tape, &p.gcn1, tracked),
            gcn2: bind_one(tape, &p.gcn2, tracked),
            gru: GruVars::bind(tape, &p.gru, tracked),
            fc_w: bind_one(tape, &p.fc_w, tracked),
            fc_b: bind_one(tape, &p.fc_b, tracked),
        }
    }

    /// Vars in [`GeneratorParams::tensors`] order.
    pub fn vars(&self) -> Vec<Var> {
        vec![
            self.gcn1, self.gcn2, self.gru.w_r, self.gru.u_r, self.gru.b_r, self.gru.w_z,
            self.gru.u_z, self.gru.b_z, self.gru.w_c, self.gru.u_c, self.gru.b_c, self.fc_w,
            self.fc_b,
        ]
    }
}

/// Discriminator: MLP over the pair vector, ReLU hidden layers, logistic
/// output in (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub n: usize,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
}

impl DiscriminatorParams {
    pub fn init(n: usize, cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = pair_count(n);
        DiscriminatorParams {
            n,
            w1: Tensor::glorot(m, cfg.h_1, rng),
            b1: Tensor::zeros(&[1, cfg.h_1]),
            w2: Tensor::glorot(cfg.h_1, cfg.h_2, rng),
            b2: Tensor::zeros(&[1, cfg.h_2]),
            w3: Tensor::glorot(cfg.h_2, 1, rng),
            b3: Tensor::zeros(&[1, 1]),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3, &mut self.b3]
    }
}

/// Tape handles for the discriminator parameters.
#[derive(Debug, Clone, Copy)]
pub struct DiscVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
    pub w3: Var,
    pub b3: Var,
}

impl DiscVars {
    pub fn bind(tape: &mut Tape, p: &DiscriminatorParams) -> Self {
        Self::bind_inner(tape, p, true)
    }

    pub fn bind_frozen(tape: &mut Tape, p: &DiscriminatorParams) -> Self {
        Self::bind_inner(tape, p, false)
    }

    fn bind_inner(tape: &mut Tape, p: &DiscriminatorParams, tracked: bool) -> Self {
        DiscVars {
            w1: bind_one(tape, &p.w1, tracked),
            b1: bind_one(tape, &p.b1, tracked),
            w2: bind_one(tape, &p.w2, tracked),
            b2: bind_one(tape, &p.b2, tracked),
            w3: bind_one(tape, &p.w3, tracked),
            b3: bind_one(tape, &p.b3, tracked),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        vec![self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]
    }
}

/// One GCN layer on the tape: `activation(A_hat * H * W)`.
pub fn gcn_layer_tape(tape: &mut Tape, a_hat: Var, h: Var, w: Var, relu: bool) -> Var {
    let prop = tape.matmul(a_hat, h);
    let out = tape.matmul(prop, w);
    if relu {
        tape.relu(out)
    } else {
        out
    }
}

/// Plain-tensor GCN layer for direct evaluation.
pub fn gcn_layer(a_hat: &Tensor, h: &Tensor, w: &Tensor, relu: bool) -> Tensor {
    let out = a_hat.matmul(h).matmul(w);
    if relu {
        out.map(|x| x.max(0.0))
    } else {
        out
    }
}

/// One GRU step on the tape.
pub fn gru_cell_tape(tape: &mut Tape, x: Var, h_prev: Var, g: &GruVars) -> Var {
    let r = gate(tape, x, h_prev, g.w_r, g.u_r, g.b_r);
    let r = tape.sigmoid(r);
    let z = gate(tape, x, h_prev, g.w_z, g.u_z, g.b_z);
    let z = tape.sigmoid(z);
    let rh = tape.mul(r, h_prev);
    let c_pre = gate(tape, x, rh, g.w_c, g.u_c, g.b_c);
    let cand = tape.tanh(c_pre);
    // h = z .* h_prev + (1 - z) .* cand
    let d_h = tape.value(h_prev).numel();
    let ones = tape.constant(Tensor::filled(&[1, d_h], 1.0));
    let zi = tape.sub(ones, z);
    let keep = tape.mul(z, h_prev);
    let take = tape.mul(zi, cand);
    tape.add(keep, take)
}

fn gate(tape: &mut Tape, x: Var, h: Var, w: Var, u: Var, b: Var) -> Var {
    let xw = tape.matmul(x, w);
    let hu = tape.matmul(h, u);
    let s = tape.add(xw, hu);
    tape.add(s, b)
}

/// Plain-tensor GRU step for direct evaluation.
pub fn gru_cell(x: &Tensor, h_prev: &Tensor, g: &GruParams) -> Tensor {
    let lin = |w: &Tensor, u: &Tensor, b: &Tensor, hh: &Tensor| {
        x.matmul(w).add(&hh.matmul(u)).add(b)
    };
    let r = lin(&g.w_r, &g.u_r, &g.b_r, h_prev).map(crate::tensor::sigmoid);
    let z = lin(&g.w_z, &g.u_z, &g.b_z, h_prev).map(crate::tensor::sigmoid);
    let rh = r.mul(h_prev);
    let cand = lin(&g.w_c, &g.u_c, &g.b_c, &rh).map(f64::tanh);
    z.mul(h_prev).add(&z.map(|v| 1.0 - v).mul(&cand))
}

/// Full generator pass on the tape. `a_hats` are the normalized window
/// adjacencies, `noise` the per-step noise matrices. Returns the predicted
/// pair vector, entries in (0,1).
pub fn generator_forward_tape(
    tape: &mut Tape,
    a_hats: &[Tensor],
    noise: &[Tensor],
    vars: &GenVars,
    params: &GeneratorParams,
) -> Var {
    assert_eq!(a_hats.len(), noise.len(), "one noise matrix per window step");
    assert!(!a_hats.is_empty(), "empty window");
    let x_dim = params.n * params.d_2;
    let mut h = tape.constant(Tensor::zeros(&[1, params.d_h]));
    for (a, z) in a_hats.iter().zip(noise) {
        let av = tape.constant(a.clone());
        let zv = tape.constant(z.clone());
        let h1 = gcn_layer_tape(tape, av, zv, vars.gcn1, true);
        let h2 = gcn_layer_tape(tape, av, h1, vars.gcn2, false);
        let x = tape.reshape(h2, &[1, x_dim]);
        h = gru_cell_tape(tape, x, h, &vars.gru);
    }
    let fc = tape.matmul(h, vars.fc_w);
    let logits = tape.add(fc, vars.fc_b);
    tape.sigmoid(logits)
}

/// Normalized adjacencies for a window of scaled snapshots.
pub fn window_a_hats(inputs: &[Snapshot]) -> Vec<Tensor> {
    inputs.iter().map(|s| gcn_normalize(&s.adj)).collect()
}

/// Predicted scaled adjacency for a window: symmetric, zero diagonal,
/// entries in (0,1). Deterministic given the noise spec and parameters.
pub fn generator_forward(
    params: &GeneratorParams,
    inputs: &[Snapshot],
    noise: &NoiseSpec,
) -> Tensor {
    let a_hats = window_a_hats(inputs);
    let noise = noise.draw(params.n, inputs.len());
    let mut tape = Tape::new();
    let vars = GenVars::bind_frozen(&mut tape, params);
    let y = generator_forward_tape(&mut tape, &a_hats, &noise, &vars, params);
    from_upper_triangle(tape.value(y), params.n)
}

/// Discriminator pass on the tape over a pair vector.
pub fn discriminator_forward_tape(tape: &mut Tape, x: Var, vars: &DiscVars) -> Var {
    let l1 = tape.matmul(x, vars.w1);
    let l1 = tape.add(l1, vars.b1);
    let l1 = tape.relu(l1);
    let l2 = tape.matmul(l1, vars.w2);
    let l2 = tape.add(l2, vars.b2);
    let l2 = tape.relu(l2);
    let l3 = tape.matmul(l2, vars.w3);
    let l3 = tape.add(l3, vars.b3);
    tape.sigmoid(l3)
}

/// Probability-of-real for one scaled adjacency. Only the upper triangle
/// is read, so the score cannot depend on how the lower half is stored.
pub fn discriminator_forward(params: &DiscriminatorParams, adj_scaled: &Tensor) -> f64 {
    let x = upper_triangle(adj_scaled);
    let mut tape = Tape::new();
    let vars = DiscVars::bind_frozen(&mut tape, params);
    let xv = tape.constant(x);
    let y = discriminator_forward_tape(&mut tape, xv, &vars);
    tape.value(y).scalar_value()
}

/// Anything that maps a window of scaled snapshots to a predicted pair
/// vector. The trainer and the online evaluator only see this surface, so
/// the adversarial generator and the plain sequence regressors share one
/// training and evaluation path.
pub trait SeqPredictor {
    fn node_count(&self) -> usize;

    /// Parameter tensors in a fixed order, matching [`Self::forward`]'s
    /// returned vars.
    fn param_tensors(&self) -> Vec<&Tensor>;
    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor>;

    /// Record a forward pass over the window. Returns the predicted pair
    /// vector (`1 x n(n-1)/2`, entries in (0,1)) and, when `tracked`, the
    /// parameter vars in `param_tensors()` order (empty otherwise).
    /// Stochastic models draw what they need from `rng`.
    fn forward(
        &self,
        tape: &mut Tape,
        inputs: &[Snapshot],
        rng: &mut ChaCha8Rng,
        tracked: bool,
    ) -> (Var, Vec<Var>);
}

impl SeqPredictor for GeneratorParams {
    fn node_count(&self) -> usize {
        self.n
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        self.tensors()
    }

    fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors_mut()
    }

    fn forward(
        &self,
        tape: &mut Tape,
        inputs: &[Snapshot],
        rng: &mut ChaCha8Rng,
        tracked: bool,
    ) -> (Var, Vec<Var>) {
        let a_hats = window_a_hats(inputs);
        let noise = draw_noise(rng, self.n, self.d_z, inputs.len());
        let vars =
            if tracked { GenVars::bind(tape, self) } else { GenVars::bind_frozen(tape, self) };
        let y = generator_forward_tape(tape, &a_hats, &noise, &vars, self);
        (y, if tracked { vars.vars() } else { Vec::new() })
    }
}
