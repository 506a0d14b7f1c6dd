//! Save and reload the model pair; the round-trip is bit-exact.
//!
//! ```bash
//! cargo run --release --example checkpoint_roundtrip
//! ```

use hqtlp::checkpoint::{load_checkpoint, save_checkpoint};
use hqtlp::model::{DiscriminatorParams, GeneratorParams, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hqtlp::Result<()> {
    let cfg = ModelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = GeneratorParams::init(16, &cfg, &mut rng);
    let d = DiscriminatorParams::init(16, &cfg, &mut rng);

    let path = std::env::temp_dir().join("hqtlp_example_checkpoint.bin");
    save_checkpoint(&path, &g, &d)?;
    let (g2, d2) = load_checkpoint(&path)?;
    assert_eq!(g, g2);
    assert_eq!(d, d2);
    println!(
        "checkpoint round-trip exact: {} generator parameters, file {}",
        g.param_count(),
        path.display()
    );
    Ok(())
}
