//! Adversarial training on a small synthetic network, with the loss trace.
//!
//! ```bash
//! cargo run --release --example train_adversarial
//! ```

use hqtlp::datagen::{gen_synthetic, SynthConfig};
use hqtlp::dyngraph::{scale_weights, make_windows};
use hqtlp::model::{DiscriminatorParams, GeneratorParams, ModelConfig};
use hqtlp::train::{train_adversarial, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hqtlp::Result<()> {
    let net = gen_synthetic(&SynthConfig { n: 12, t_steps: 40, seed: 5, ..SynthConfig::mesh_like() })?;
    let scaled = scale_weights(&net, net.len())?;
    let windows = make_windows(&scaled.net, 6)?;

    let model_cfg = ModelConfig { d_z: 8, d_1: 16, d_2: 8, d_h: 32, h_1: 32, h_2: 16 };
    let train_cfg = TrainConfig {
        window: 6,
        epochs_pretrain: 5,
        lambda_adv: 0.05,
        seed: 1,
        ..TrainConfig::default()
    };

    let mut init = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut g = GeneratorParams::init(net.n(), &model_cfg, &mut init);
    let mut d = DiscriminatorParams::init(net.n(), &model_cfg, &mut init);
    println!("generator has {} parameters", g.param_count());

    let log = train_adversarial(&windows, &mut g, &mut d, &train_cfg)?;
    for row in log.iter().step_by(windows.len()) {
        println!(
            "epoch {:>2}  loss_g {:.5}  loss_d {:.5}",
            row.epoch, row.loss_g, row.loss_d
        );
    }
    let last = log.last().unwrap();
    println!("final     loss_g {:.5}  loss_d {:.5}", last.loss_g, last.loss_d);
    Ok(())
}
