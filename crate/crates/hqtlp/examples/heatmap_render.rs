//! Render snapshots as PPM heatmaps: black = no edge, dark red = small
//! weight, white = the maximum weight.
//!
//! ```bash
//! cargo run --release --example heatmap_render
//! ```

use hqtlp::datagen::{gen_synthetic, SynthConfig};
use hqtlp::heatmap::{save_ppm, weight_color};

fn main() -> hqtlp::Result<()> {
    let net = gen_synthetic(&SynthConfig { n: 38, t_steps: 20, seed: 8, ..SynthConfig::mesh_like() })?;
    let w_max = net.max_weight(net.len());

    println!("color ramp at w_max = {w_max}:");
    for w in [0.0, 1.0, 10.0, 100.0, 1000.0, w_max] {
        println!("  w={w:>8.1} -> {:?}", weight_color(w, w_max));
    }

    let out = std::env::temp_dir().join("hqtlp_example_snapshot.ppm");
    save_ppm(&out, &net.snapshot(10).adj, w_max)?;
    println!("wrote {} ({}x{} pixels)", out.display(), net.n(), net.n());
    Ok(())
}
