//! End-to-end benchmark over every method on one shared split, writing
//! per-step and summary CSVs. Scaled down to run in under a minute; the
//! `hqtlp bench` binary exposes the same harness with full configuration.
//!
//! ```bash
//! cargo run --release --example benchmark_all_methods
//! ```

use hqtlp::bench::{run_bench, BenchOptions, Method};
use hqtlp::datagen::{gen_synthetic, SynthConfig};
use hqtlp::model::ModelConfig;
use hqtlp::train::TrainConfig;

fn main() -> hqtlp::Result<()> {
    let net = gen_synthetic(&SynthConfig { n: 12, t_steps: 50, seed: 7, ..SynthConfig::dcn_like() })?;

    let opts = BenchOptions {
        methods: Method::ALL.to_vec(),
        test_steps: 8,
        train: TrainConfig {
            window: 6,
            epochs_pretrain: 5,
            epochs_online: 2,
            lambda_adv: 0.05,
            seed: 1,
            ..TrainConfig::default()
        },
        model: ModelConfig { d_z: 8, d_1: 16, d_2: 8, d_h: 32, h_1: 64, h_2: 16 },
        ..BenchOptions::default()
    };

    let out = std::env::temp_dir().join("hqtlp_example_bench");
    let report = run_bench(&net, &opts, &out)?;
    println!("method    armse      aew_kl    amr      seconds");
    for row in &report.summary {
        println!(
            "{:8} {:>9.2} {:>9.4} {:>8.4} {:>8.2}",
            row.method.name(),
            row.armse,
            row.aew_kl,
            row.amr,
            row.wall_seconds
        );
    }
    println!("CSV files in {}", out.display());
    Ok(())
}
