//! Synthetic dynamic networks: presets, custom configs, and edge-list IO.
//!
//! ```bash
//! cargo run --release --example generate_dataset
//! ```

use hqtlp::datagen::{gen_synthetic, load_edgelist, save_edgelist, summarize, SynthConfig};

fn main() -> hqtlp::Result<()> {
    // The three named presets mirror the benchmark scenarios.
    for name in ["mesh-like", "adhoc-like", "dcn-like"] {
        let cfg = SynthConfig::preset(name).unwrap();
        println!(
            "{name:11} n={:<3} T={:<4} weights [0, {}]",
            cfg.n, cfg.t_steps, cfg.w_hi
        );
    }

    // A small custom network, written and read back.
    let cfg = SynthConfig { n: 16, t_steps: 40, seed: 42, ..SynthConfig::dcn_like() };
    let net = gen_synthetic(&cfg)?;
    let s = summarize(&net);
    println!(
        "generated n={} T={} sparsity={:.3} weights [{:.2}, {:.2}]",
        s.n, s.t_steps, s.sparsity, s.w_min_positive, s.w_max
    );

    let path = std::env::temp_dir().join("hqtlp_example_dataset.tsv");
    save_edgelist(&net, &path)?;
    let reloaded = load_edgelist(&path)?;
    assert_eq!(reloaded.snapshot(7).adj, net.snapshot(7).adj);
    println!("round-tripped through {}", path.display());
    Ok(())
}
