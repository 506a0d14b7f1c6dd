//! Reverse-mode automatic differentiation over dense tensors.
//!
//! Define-by-run: every pass records its operations on a fresh [`Tape`] and
//! [`Tape::backward`] replays them once in reverse. Nodes are appended in
//! topological order by construction, so the backward sweep is a single
//! reverse iteration.
//!
//! A tape and its [`Var`] handles are confined to one thread; independent
//! tapes can run in parallel.

use crate::tensor::{matmul_nt, matmul_tn, sigmoid, Tensor};

/// Handle to a value recorded on a [`Tape`]. Only valid for the tape that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Node {
    Leaf,
    Matmul { a: usize, b: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    Scale { a: usize, c: f64 },
    AddScalar { a: usize },
    Sigmoid { a: usize },
    Tanh { a: usize },
    Relu { a: usize },
    Ln { a: usize },
    Sum { a: usize },
    Reshape { a: usize },
}

/// Append-only record of one forward pass.
pub struct Tape {
    nodes: Vec<Node>,
    vals: Vec<Tensor>,
    tracked: Vec<bool>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), vals: Vec::new(), tracked: Vec::new() }
    }

    fn push(&mut self, node: Node, val: Tensor, tracked: bool) -> Var {
        let id = self.vals.len();
        self.nodes.push(node);
        self.vals.push(val);
        self.tracked.push(tracked);
        Var(id)
    }

    /// Record an input that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Node::Leaf, t, false)
    }

    /// Record a trainable parameter; gradients flow back to it.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(Node::Leaf, t.clone(), true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.vals[v.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn tracked2(&self, a: Var, b: Var) -> bool {
        self.tracked[a.0] || self.tracked[b.0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.vals[a.0].matmul(&self.vals[b.0]);
        let tr = self.tracked2(a, b);
        self.push(Node::Matmul { a: a.0, b: b.0 }, out, tr)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.vals[a.0].add(&self.vals[b.0]);
        let tr = self.tracked2(a, b);
        self.push(Node::Add { a: a.0, b: b.0 }, out, tr)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.vals[a.0].sub(&self.vals[b.0]);
        let tr = self.tracked2(a, b);
        self.push(Node::Sub { a: a.0, b: b.0 }, out, tr)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.vals[a.0].mul(&self.vals[b.0]);
        let tr = self.tracked2(a, b);
        self.push(Node::Mul { a: a.0, b: b.0 }, out, tr)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.vals[a.0].scale(c);
        let tr = self.tracked[a.0];
        self.push(Node::Scale { a: a.0, c }, out, tr)
    }

    /// Elementwise `x + c`; gradient passes through unchanged.
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.vals[a.0].map(|x| x + c);
        let tr = self.tracked[a.0];
        self.push(Node::AddScalar { a: a.0 }, out, tr)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.vals[a.0].map(sigmoid);
        let tr = self.tracked[a.0];
        self.push(Node::Sigmoid { a: a.0 }, out, tr)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.vals[a.0].map(f64::tanh);
        let tr = self.tracked[a.0];
        self.push(Node::Tanh { a: a.0 }, out, tr)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.vals[a.0].map(|x| x.max(0.0));
        let tr = self.tracked[a.0];
        self.push(Node::Relu { a: a.0 }, out, tr)
    }

    /// Natural log; every entry must be strictly positive.
    pub fn ln(&mut self, a: Var) -> Var {
        assert!(
            self.vals[a.0].data().iter().all(|&x| x > 0.0),
            "ln domain error: nonpositive entry in operand"
        );
        let out = self.vals[a.0].map(f64::ln);
        let tr = self.tracked[a.0];
        self.push(Node::Ln { a: a.0 }, out, tr)
    }

    /// Sum of all entries, as a 1x1 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.vals[a.0].sum());
        let tr = self.tracked[a.0];
        self.push(Node::Sum { a: a.0 }, out, tr)
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let out = self.vals[a.0].reshape(shape);
        let tr = self.tracked[a.0];
        self.push(Node::Reshape { a: a.0 }, out, tr)
    }

    /// Mean of all entries, as a 1x1 tensor.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.vals[a.0].numel() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Gradients of a scalar `loss` with respect to every tracked leaf.
    ///
    /// Visits each node exactly once, in reverse recording order. Calling
    /// it twice without recording anything new yields identical maps.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert!(
            self.vals[loss.0].is_scalar(),
            "backward requires a scalar loss, got shape {:?}",
            self.vals[loss.0].shape()
        );
        let mut adj: Vec<Option<Tensor>> = vec![None; self.vals.len()];
        adj[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            if !self.tracked[id] {
                continue;
            }
            let g = match adj[id].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[id] {
                Node::Leaf => {
                    adj[id] = Some(g);
                    continue;
                }
                Node::Matmul { a, b } => {
                    let (va, vb) = (&self.vals[*a], &self.vals[*b]);
                    let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                    if self.tracked[*a] {
                        let da = matmul_nt(g.data(), vb.data(), m, n, k);
                        self.accumulate(&mut adj, *a, Tensor::new(vec![m, k], da));
                    }
                    if self.tracked[*b] {
                        let db = matmul_tn(va.data(), g.data(), m, k, n);
                        self.accumulate(&mut adj, *b, Tensor::new(vec![k, n], db));
                    }
                }
                Node::Add { a, b } => {
                    if self.tracked[*a] {
                        self.accumulate(&mut adj, *a, g.clone());
                    }
                    if self.tracked[*b] {
                        self.accumulate(&mut adj, *b, g.clone());
                    }
                }
                Node::Sub { a, b } => {
                    if self.tracked[*a] {
                        self.accumulate(&mut adj, *a, g.clone());
                    }
                    if self.tracked[*b] {
                        self.accumulate(&mut adj, *b, g.scale(-1.0));
                    }
                }
                Node::Mul { a, b } => {
                    if self.tracked[*a] {
                        self.accumulate(&mut adj, *a, g.mul(&self.vals[*b]));
                    }
                    if self.tracked[*b] {
                        self.accumulate(&mut adj, *b, g.mul(&self.vals[*a]));
                    }
                }
                Node::Scale { a, c } => {
                    self.accumulate(&mut adj, *a, g.scale(*c));
                }
                Node::AddScalar { a } => {
                    self.accumulate(&mut adj, *a, g);
                }
                Node::Sigmoid { a } => {
                    let y = &self.vals[id];
                    let dg = g.zip(y, |gi, yi| gi * yi * (1.0 - yi));
                    self.accumulate(&mut adj, *a, dg);
                }
                Node::Tanh { a } => {
                    let y = &self.vals[id];
                    let dg = g.zip(y, |gi, yi| gi * (1.0 - yi * yi));
                    self.accumulate(&mut adj, *a, dg);
                }
                Node::Relu { a } => {
                    let x = &self.vals[*a];
                    let dg = g.zip(x, |gi, xi| if xi > 0.0 { gi } else { 0.0 });
                    self.accumulate(&mut adj, *a, dg);
                }
                Node::Ln { a } => {
                    let x = &self.vals[*a];
                    let dg = g.zip(x, |gi, xi| gi / xi);
                    self.accumulate(&mut adj, *a, dg);
                }
                Node::Sum { a } => {
                    let s = g.scalar_value();
                    let dg = Tensor::filled(self.vals[*a].shape(), s);
                    self.accumulate(&mut adj, *a, dg);
                }
                Node::Reshape { a } => {
                    let dg = g.reshape(self.vals[*a].shape());
                    self.accumulate(&mut adj, *a, dg);
                }
            }
        }

        // Keep only leaf adjoints: those are the parameter gradients.
        let grads = adj
            .into_iter()
            .enumerate()
            .map(|(id, g)| match (&self.nodes[id], g) {
                (Node::Leaf, Some(g)) if self.tracked[id] => Some(g),
                _ => None,
            })
            .collect();
        Gradients { grads }
    }

    fn accumulate(&self, adj: &mut [Option<Tensor>], target: usize, g: Tensor) {
        if !self.tracked[target] {
            return;
        }
        match &mut adj[target] {
            Some(acc) => *acc = acc.add(&g),
            slot @ None => *slot = Some(g),
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Gradient map produced by [`Tape::backward`], keyed by parameter [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for one parameter; zero tensor if the loss never touched it.
    pub fn wrt(&self, v: Var, shape: &[usize]) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
    }

    /// Gradients for a parameter list, zero-filled for untouched entries.
    pub fn collect(&self, vars: &[Var], shapes: &[&Tensor]) -> Vec<Tensor> {
        vars.iter()
            .zip(shapes)
            .map(|(v, t)| self.wrt(*v, t.shape()))
            .collect()
    }
}

/// Max relative error between analytic gradients and central differences.
///
/// `f` must rebuild the same deterministic scalar loss from the parameter
/// slice each call. The error for one entry is
/// `|analytic - numeric| / max(1, |numeric|)`.
pub fn grad_check<F>(f: F, params: &[Tensor], h: f64) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |ps: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param(p)).collect();
        let loss = f(&mut tape, &vars);
        tape.value(loss).scalar_value()
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
    let loss = f(&mut tape, &vars);
    let grads = tape.backward(loss);

    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, p) in params.iter().enumerate() {
        let analytic = grads.wrt(vars[pi], p.shape());
        for ei in 0..p.numel() {
            let orig = p.data()[ei];
            work[pi].data_mut()[ei] = orig + h;
            let up = eval(&work);
            work[pi].data_mut()[ei] = orig - h;
            let down = eval(&work);
            work[pi].data_mut()[ei] = orig;
            let numeric = (up - down) / (2.0 * h);
            let err = (analytic.data()[ei] - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}
