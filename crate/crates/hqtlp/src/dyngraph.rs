//! Weighted dynamic networks: per-step snapshots, window slicing, the
//! symmetric GCN normalization, and global max-scaling of edge weights.
//!
//! A snapshot's adjacency is dense, symmetric, nonnegative, and has a zero
//! diagonal; an exact zero means "no edge", which downstream metrics treat
//! as categorically different from a small weight. Snapshots and networks
//! are immutable after construction and safe to share across threads.

use crate::error::{HqtlpError, Result};
use crate::tensor::Tensor;

/// One time step's weighted undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub adj: Tensor,
    pub t: usize,
}

impl Snapshot {
    /// Wraps an adjacency after checking symmetry, nonnegativity, and a
    /// zero diagonal. Use [`symmetrize_and_clean`] for raw model output.
    pub fn new(adj: Tensor, t: usize) -> Self {
        let n = adj.rows();
        assert_eq!(n, adj.cols(), "adjacency must be square, got {:?}", adj.shape());
        for i in 0..n {
            assert_eq!(adj.at(i, i), 0.0, "nonzero diagonal at node {i}");
            for j in 0..n {
                let w = adj.at(i, j);
                assert!(w >= 0.0 && w.is_finite(), "bad weight {w} at ({i},{j})");
                assert_eq!(w, adj.at(j, i), "asymmetric at ({i},{j})");
            }
        }
        Snapshot { adj, t }
    }

    pub fn n(&self) -> usize {
        self.adj.rows()
    }

    /// Count of unordered pairs with weight strictly above `tau`.
    pub fn edge_count(&self, tau: f64) -> usize {
        let n = self.n();
        let mut c = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adj.at(i, j) > tau {
                    c += 1;
                }
            }
        }
        c
    }
}

/// Ordered snapshot sequence over a fixed node set.
#[derive(Debug, Clone)]
pub struct DynamicNetwork {
    snapshots: Vec<Snapshot>,
    n: usize,
}

impl DynamicNetwork {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(HqtlpError::config("network needs at least one snapshot"));
        }
        let n = snapshots[0].n();
        for (t, s) in snapshots.iter().enumerate() {
            if s.n() != n {
                return Err(HqtlpError::config(format!(
                    "snapshot {t} has {} nodes, expected {n}",
                    s.n()
                )));
            }
            if s.t != t {
                return Err(HqtlpError::config(format!(
                    "snapshot at position {t} carries index {}",
                    s.t
                )));
            }
        }
        Ok(DynamicNetwork { snapshots, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time steps T.
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Maximum edge weight over snapshots `0..end`.
    pub fn max_weight(&self, end: usize) -> f64 {
        self.snapshots[..end]
            .iter()
            .fold(0.0f64, |m, s| m.max(s.adj.max_abs()))
    }
}

/// `L` consecutive input snapshots plus the snapshot they should predict.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub inputs: &'a [Snapshot],
    pub target: &'a Snapshot,
}

/// All length-`window` training windows of `net`, in time order.
///
/// Window `k` has inputs at steps `k..k+window-1` and target `k+window`;
/// every target step in `window..T-1` is covered exactly once.
pub fn make_windows(net: &DynamicNetwork, window: usize) -> Result<Vec<Window<'_>>> {
    if window == 0 {
        return Err(HqtlpError::config("window length must be at least 1"));
    }
    let t_total = net.len();
    if t_total <= window {
        return Err(HqtlpError::config(format!(
            "need at least {} snapshots for window length {window}, got {t_total}",
            window + 1
        )));
    }
    Ok((0..t_total - window)
        .map(|k| Window {
            inputs: &net.snapshots()[k..k + window],
            target: net.snapshot(k + window),
        })
        .collect())
}

/// Symmetric normalization with self-loops:
/// `A_hat = D^{-1/2} (A + I) D^{-1/2}` where `D` is the row-sum diagonal of
/// `A + I`. Isolated nodes get self-loop weight 1 and row-sum 1.
pub fn gcn_normalize(adj: &Tensor) -> Tensor {
    let n = adj.rows();
    assert_eq!(n, adj.cols(), "adjacency must be square, got {:?}", adj.shape());
    let mut with_loops = adj.clone();
    for i in 0..n {
        let v = with_loops.at(i, i) + 1.0;
        with_loops.set(i, i, v);
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = (0..n).map(|j| with_loops.at(i, j)).sum();
            1.0 / d.sqrt()
        })
        .collect();
    let mut out = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, inv_sqrt[i] * with_loops.at(i, j) * inv_sqrt[j]);
        }
    }
    out
}

/// A network rescaled into `[0,1]` units, remembering the scale.
#[derive(Debug, Clone)]
pub struct ScaledNetwork {
    pub net: DynamicNetwork,
    /// Maximum weight observed over the training portion (original units).
    pub w_max: f64,
    /// Entries past the training portion that exceeded `w_max` and were
    /// clamped to 1. Surfaced so the benchmark can report it.
    pub clamped: usize,
}

/// Divides every weight by the maximum observed over snapshots
/// `0..train_end`. Training weights land in `[0,1]`; later weights may
/// exceed 1 and are clamped, with the clamp count reported.
pub fn scale_weights(net: &DynamicNetwork, train_end: usize) -> Result<ScaledNetwork> {
    assert!(
        train_end >= 1 && train_end <= net.len(),
        "train_end {train_end} out of range 1..={}",
        net.len()
    );
    let w_max = net.max_weight(train_end);
    if w_max <= 0.0 {
        return Err(HqtlpError::config(
            "cannot scale: training portion has no edges",
        ));
    }
    let mut clamped = 0usize;
    let snapshots = net
        .snapshots()
        .iter()
        .map(|s| {
            let adj = s.adj.map(|w| (w / w_max).min(1.0));
            // Symmetric entries counted once per unordered pair.
            clamped += s.adj.data().iter().filter(|&&w| w / w_max > 1.0).count() / 2;
            Snapshot { adj, t: s.t }
        })
        .collect();
    Ok(ScaledNetwork { net: DynamicNetwork::new(snapshots)?, w_max, clamped })
}

/// Entry-wise inverse of [`scale_weights`] for a predicted adjacency.
pub fn unscale(pred: &Tensor, w_max: f64) -> Tensor {
    pred.scale(w_max)
}

/// Forces a raw square matrix into a valid adjacency: average with its
/// transpose, zero the diagonal, clamp negatives to zero.
pub fn symmetrize_and_clean(raw: &Tensor) -> Tensor {
    let n = raw.rows();
    assert_eq!(n, raw.cols(), "expected square matrix, got {:?}", raw.shape());
    let mut out = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = 0.5 * (raw.at(i, j) + raw.at(j, i));
            out.set(i, j, v.max(0.0));
        }
    }
    out
}

/// Number of unordered node pairs, `n(n-1)/2`.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Packs the strict upper triangle into a `1 x n(n-1)/2` row vector, pairs
/// ordered `(0,1), (0,2), ..., (0,n-1), (1,2), ...`.
pub fn upper_triangle(adj: &Tensor) -> Tensor {
    let n = adj.rows();
    assert_eq!(n, adj.cols(), "expected square matrix, got {:?}", adj.shape());
    let mut data = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            data.push(adj.at(i, j));
        }
    }
    Tensor::new(vec![1, pair_count(n)], data)
}

/// Inverse of [`upper_triangle`]: expands a pair vector to the symmetric
/// zero-diagonal matrix.
pub fn from_upper_triangle(vec: &Tensor, n: usize) -> Tensor {
    assert_eq!(
        vec.numel(),
        pair_count(n),
        "pair vector length {} does not match n={n}",
        vec.numel()
    );
    let mut out = Tensor::zeros(&[n, n]);
    let mut idx = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = vec.data()[idx];
            out.set(i, j, v);
            out.set(j, i, v);
            idx += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_adjacency(n: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let mut adj = Tensor::zeros(&[n, n]);
        for i in 0..n {
            for j in (i + 1)..n {
                // Leave some exact zeros so sparsity paths get exercised.
                let w = if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..5.0) };
                adj.set(i, j, w);
                adj.set(j, i, w);
            }
        }
        adj
    }

    fn net_from_weights(weights: &[f64]) -> DynamicNetwork {
        // One 2-node snapshot per weight.
        let snaps = weights
            .iter()
            .enumerate()
            .map(|(t, &w)| {
                Snapshot::new(Tensor::from_rows(&[vec![0.0, w], vec![w, 0.0]]), t)
            })
            .collect();
        DynamicNetwork::new(snaps).unwrap()
    }

    #[test]
    fn gcn_normalize_empty_graph_is_identity() {
        let a = Tensor::zeros(&[2, 2]);
        assert_eq!(gcn_normalize(&a), Tensor::eye(2));
    }

    #[test]
    fn gcn_normalize_hand_example() {
        let a = Tensor::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let out = gcn_normalize(&a);
        for &v in out.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn gcn_normalize_symmetric_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=10 {
            let a = random_adjacency(n, &mut rng);
            let out = gcn_normalize(&a);
            for i in 0..n {
                for j in 0..n {
                    assert!(out.at(i, j) >= 0.0);
                    assert!((out.at(i, j) - out.at(j, i)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn gcn_normalize_matches_brute_force() {
        // Element-wise oracle: (A+I)_ij / sqrt(d_i * d_j), double loop.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 2..=10 {
            let mut a = random_adjacency(n, &mut rng);
            // Force an isolated node.
            for j in 0..n {
                a.set(0, j, 0.0);
                a.set(j, 0, 0.0);
            }
            let out = gcn_normalize(&a);
            let deg: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| a.at(i, j)).sum::<f64>() + 1.0)
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let with_loop = a.at(i, j) + if i == j { 1.0 } else { 0.0 };
                    let expect = with_loop / (deg[i] * deg[j]).sqrt();
                    assert!(
                        (out.at(i, j) - expect).abs() < 1e-12,
                        "mismatch at ({i},{j}): {} vs {expect}",
                        out.at(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn scale_weights_divides_by_training_max() {
        let net = net_from_weights(&[0.0, 1000.0, 2000.0]);
        let scaled = scale_weights(&net, 3).unwrap();
        assert_eq!(scaled.w_max, 2000.0);
        let seen: Vec<f64> = scaled.net.snapshots().iter().map(|s| s.adj.at(0, 1)).collect();
        assert_eq!(seen, vec![0.0, 0.5, 1.0]);
        assert_eq!(scaled.clamped, 0);
    }

    #[test]
    fn scale_weights_is_idempotent_at_unit_max() {
        let net = net_from_weights(&[0.5, 1.0]);
        let scaled = scale_weights(&net, 2).unwrap();
        for (s, orig) in scaled.net.snapshots().iter().zip(net.snapshots()) {
            assert_eq!(s.adj, orig.adj);
        }
    }

    #[test]
    fn scale_weights_clamps_test_overshoot() {
        let net = net_from_weights(&[10.0, 25.0]);
        let scaled = scale_weights(&net, 1).unwrap();
        assert_eq!(scaled.w_max, 10.0);
        assert_eq!(scaled.net.snapshot(1).adj.at(0, 1), 1.0);
        assert_eq!(scaled.clamped, 1);
    }

    #[test]
    fn scale_weights_rejects_empty_training_portion() {
        let net = net_from_weights(&[0.0, 5.0]);
        assert!(matches!(scale_weights(&net, 1), Err(HqtlpError::Config(_))));
    }

    #[test]
    fn scale_then_unscale_roundtrips_training_portion() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let snaps: Vec<Snapshot> = (0..4)
            .map(|t| Snapshot::new(random_adjacency(6, &mut rng).scale(500.0), t))
            .collect();
        let net = DynamicNetwork::new(snaps).unwrap();
        let scaled = scale_weights(&net, 4).unwrap();
        for t in 0..4 {
            let back = unscale(&scaled.net.snapshot(t).adj, scaled.w_max);
            let diff: f64 = back
                .data()
                .iter()
                .zip(net.snapshot(t).adj.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12 * scaled.w_max);
        }
    }

    #[test]
    fn window_counts() {
        let net = net_from_weights(&[1.0; 12]);
        assert_eq!(make_windows(&net, 10).unwrap().len(), 2);
        let net = net_from_weights(&[1.0; 11]);
        let ws = make_windows(&net, 10).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].target.t, 10);
        let net = net_from_weights(&[1.0; 10]);
        assert!(matches!(make_windows(&net, 10), Err(HqtlpError::Config(_))));
    }

    #[test]
    fn windows_cover_every_target_once() {
        let net = net_from_weights(&[1.0; 23]);
        let ws = make_windows(&net, 7).unwrap();
        let targets: Vec<usize> = ws.iter().map(|w| w.target.t).collect();
        assert_eq!(targets, (7..23).collect::<Vec<_>>());
        for w in &ws {
            assert_eq!(w.inputs.len(), 7);
            assert_eq!(w.inputs.last().unwrap().t + 1, w.target.t);
        }
    }

    #[test]
    fn symmetrize_and_clean_hand_example() {
        let raw = Tensor::from_rows(&[vec![5.0, 1.0], vec![3.0, 7.0]]);
        let out = symmetrize_and_clean(&raw);
        assert_eq!(out.data(), &[0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn symmetrize_and_clean_fixed_point_and_clamp() {
        let valid = Tensor::from_rows(&[vec![0.0, 2.5], vec![2.5, 0.0]]);
        assert_eq!(symmetrize_and_clean(&valid), valid);
        let negative = Tensor::from_rows(&[vec![-1.0, -2.0], vec![-3.0, -4.0]]);
        assert_eq!(symmetrize_and_clean(&negative), Tensor::zeros(&[2, 2]));
    }

    #[test]
    fn upper_triangle_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let adj = random_adjacency(7, &mut rng);
        let vec = upper_triangle(&adj);
        assert_eq!(vec.numel(), 21);
        assert_eq!(from_upper_triangle(&vec, 7), adj);
    }
}
