//! Weighted temporal link prediction for dynamic networks.
//!
//! Given a sequence of weighted graph snapshots, predict the next one —
//! both which edges exist and how heavy they are. The centerpiece is an
//! adversarially trained predictor (GCN feature extraction per snapshot, a
//! GRU over the window, and a discriminator pushing predictions to commit
//! to exact zeros and small weights) alongside reconstruction-only LSTM/GRU
//! regressors and matrix-factorization baselines, all evaluated through one
//! shared RMSE / edge-wise-KL / mismatch-rate pipeline.
//!
//! Start with the runnable examples (`cargo run --release --example ...`)
//! or the `hqtlp` binary (`generate`, `train`, `predict`, `bench`,
//! `heatmap`).

pub mod baselines;
pub mod bench;
pub mod checkpoint;
pub mod datagen;
pub mod dyngraph;
pub mod error;
pub mod heatmap;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod tape;
pub mod tensor;
pub mod train;

pub use dyngraph::{DynamicNetwork, Snapshot, Window};
pub use error::{HqtlpError, Result};
pub use tensor::Tensor;
