//! Prediction-quality metrics for weighted snapshots: RMSE over node
//! pairs, edge-wise KL-divergence over pairs where both matrices have an
//! edge, and the mismatch rate counting pairs where exactly one does.
//!
//! All three take matrices in original units plus an absolute edge
//! threshold `tau_abs`: a weight counts as an edge only if it exceeds
//! `tau_abs`. EW-KL normalizes both weight sets over the matched pairs and
//! uses natural log, with the ground truth as the reference distribution.

use serde::Deserialize;

use crate::error::{HqtlpError, Result};
use crate::tensor::Tensor;

/// Denominator used by the mismatch rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MrBase {
    /// Pairs with an edge in either matrix. MR = 1 means disjoint
    /// topologies.
    #[default]
    Union,
    /// All `n(n-1)/2` pairs.
    AllPairs,
    /// Pairs with an edge in the ground truth.
    TruthEdges,
}

/// Per-snapshot metric values plus the edge counts behind them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub ew_kl: f64,
    pub mr: f64,
    pub matched_edges: usize,
    pub mismatched_edges: usize,
    pub true_edges: usize,
    pub pred_edges: usize,
}

fn assert_same_square(pred: &Tensor, truth: &Tensor) -> usize {
    assert_eq!(
        pred.shape(),
        truth.shape(),
        "metric shape mismatch: {:?} vs {:?}",
        pred.shape(),
        truth.shape()
    );
    let n = pred.rows();
    assert_eq!(n, pred.cols(), "metrics need square matrices, got {:?}", pred.shape());
    n
}

/// Root mean squared error over the `n(n-1)/2` unordered off-diagonal
/// pairs.
pub fn rmse(pred: &Tensor, truth: &Tensor) -> f64 {
    let n = assert_same_square(pred, truth);
    let pairs = (n * (n - 1) / 2) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pred.at(i, j) - truth.at(i, j);
            acc += d * d;
        }
    }
    (acc / pairs).sqrt()
}

/// KL-divergence between the truth and prediction weight distributions over
/// matched pairs (both weights above `tau_abs`), truth as reference.
/// Returns 0 when no pair is matched.
pub fn ew_kl(pred: &Tensor, truth: &Tensor, tau_abs: f64) -> f64 {
    let n = assert_same_square(pred, truth);
    let mut p_raw = Vec::new();
    let mut q_raw = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (pw, tw) = (pred.at(i, j), truth.at(i, j));
            if pw > tau_abs && tw > tau_abs {
                q_raw.push(pw);
                p_raw.push(tw);
            }
        }
    }
    if p_raw.is_empty() {
        return 0.0;
    }
    let p_sum: f64 = p_raw.iter().sum();
    let q_sum: f64 = q_raw.iter().sum();
    p_raw
        .iter()
        .zip(&q_raw)
        .map(|(&pw, &qw)| {
            let p = pw / p_sum;
            let q = qw / q_sum;
            p * (p / q).ln()
        })
        .sum()
}

/// Mismatch rate with the default union denominator.
pub fn mismatch_rate(pred: &Tensor, truth: &Tensor, tau_abs: f64) -> f64 {
    mismatch_rate_with_base(pred, truth, tau_abs, MrBase::Union)
}

/// Fraction of node pairs where exactly one of prediction and truth has an
/// edge, over the chosen denominator. Returns 0 when the denominator is 0.
pub fn mismatch_rate_with_base(
    pred: &Tensor,
    truth: &Tensor,
    tau_abs: f64,
    base: MrBase,
) -> f64 {
    let n = assert_same_square(pred, truth);
    let mut mismatched = 0usize;
    let mut union = 0usize;
    let mut truth_edges = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let pe = pred.at(i, j) > tau_abs;
            let te = truth.at(i, j) > tau_abs;
            if pe != te {
                mismatched += 1;
            }
            if pe || te {
                union += 1;
            }
            if te {
                truth_edges += 1;
            }
        }
    }
    let denom = match base {
        MrBase::Union => union,
        MrBase::AllPairs => n * (n - 1) / 2,
        MrBase::TruthEdges => truth_edges,
    };
    if denom == 0 {
        0.0
    } else {
        mismatched as f64 / denom as f64
    }
}

/// All three metrics plus edge counts in one pass.
pub fn report(pred: &Tensor, truth: &Tensor, tau_abs: f64, mr_base: MrBase) -> MetricReport {
    let n = assert_same_square(pred, truth);
    let mut matched = 0usize;
    let mut mismatched = 0usize;
    let mut true_edges = 0usize;
    let mut pred_edges = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let pe = pred.at(i, j) > tau_abs;
            let te = truth.at(i, j) > tau_abs;
            matched += (pe && te) as usize;
            mismatched += (pe != te) as usize;
            true_edges += te as usize;
            pred_edges += pe as usize;
        }
    }
    MetricReport {
        rmse: rmse(pred, truth),
        ew_kl: ew_kl(pred, truth, tau_abs),
        mr: mismatch_rate_with_base(pred, truth, tau_abs, mr_base),
        matched_edges: matched,
        mismatched_edges: mismatched,
        true_edges,
        pred_edges,
    }
}

/// Test-set averages: (ARMSE, AEW-KL, AMR).
pub fn aggregate(reports: &[MetricReport]) -> Result<(f64, f64, f64)> {
    if reports.is_empty() {
        return Err(HqtlpError::config("cannot aggregate zero records"));
    }
    let k = reports.len() as f64;
    Ok((
        reports.iter().map(|r| r.rmse).sum::<f64>() / k,
        reports.iter().map(|r| r.ew_kl).sum::<f64>() / k,
        reports.iter().map(|r| r.mr).sum::<f64>() / k,
    ))
}
