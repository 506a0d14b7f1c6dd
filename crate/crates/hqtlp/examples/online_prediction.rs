//! The full pipeline: pretrain, then step through the test period
//! fine-tuning on each newly observed snapshot and predicting the next.
//!
//! ```bash
//! cargo run --release --example online_prediction
//! ```

use hqtlp::bench::pretrain_hqtlp;
use hqtlp::datagen::{gen_synthetic, SynthConfig};
use hqtlp::metrics;
use hqtlp::model::ModelConfig;
use hqtlp::train::{predict_online, TrainConfig};

fn main() -> hqtlp::Result<()> {
    let net = gen_synthetic(&SynthConfig { n: 16, t_steps: 60, seed: 9, ..SynthConfig::dcn_like() })?;
    let split_t = net.len() - 10; // last 10 snapshots are the test set

    let model_cfg = ModelConfig { d_z: 8, d_1: 16, d_2: 8, d_h: 32, h_1: 64, h_2: 16 };
    let train_cfg = TrainConfig {
        window: 8,
        epochs_pretrain: 10,
        epochs_online: 3,
        lambda_adv: 0.05,
        seed: 2,
        ..TrainConfig::default()
    };

    let (mut g, mut d, _log) = pretrain_hqtlp(&net, split_t, &train_cfg, &model_cfg)?;
    let records = predict_online(&net, split_t, &mut g, &mut d, &train_cfg)?;

    println!("   t      rmse     ew_kl        mr");
    for r in &records {
        println!(
            "{:>4}  {:>8.2}  {:>8.4}  {:>8.4}",
            r.t, r.report.rmse, r.report.ew_kl, r.report.mr
        );
    }
    let reports: Vec<_> = records.iter().map(|r| r.report).collect();
    let (armse, aew_kl, amr) = metrics::aggregate(&reports)?;
    println!("avg   {armse:>8.2}  {aew_kl:>8.4}  {amr:>8.4}");
    Ok(())
}
