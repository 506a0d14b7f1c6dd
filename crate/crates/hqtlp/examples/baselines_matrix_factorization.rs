//! The training-free baselines: collapse a window into one static matrix,
//! factorize, reconstruct, predict.
//!
//! ```bash
//! cargo run --release --example baselines_matrix_factorization
//! ```

use hqtlp::baselines::{cn_nmf_predict, cn_svd_predict, collapse, dw_nmf_predict, nmf_factorize};
use hqtlp::datagen::{gen_synthetic, SynthConfig};
use hqtlp::metrics;

fn main() -> hqtlp::Result<()> {
    let net = gen_synthetic(&SynthConfig { n: 20, t_steps: 30, seed: 3, ..SynthConfig::mesh_like() })?;
    let window = 10;
    let target_t = 25;
    let inputs = &net.snapshots()[target_t - window..target_t];
    let truth = &net.snapshot(target_t).adj;
    let tau_abs = 0.001 * net.max_weight(target_t);

    let cn = collapse(inputs, 0.5);
    println!("collapsed {} snapshots into one static matrix", window);

    let rank = 8;
    for (name, pred) in [
        ("cn-svd", cn_svd_predict(&cn, rank)),
        ("cn-nmf", cn_nmf_predict(&cn, rank, 300)),
        ("dw-nmf", dw_nmf_predict(inputs, 0.5, rank, 300)),
    ] {
        let rep = metrics::report(&pred, truth, tau_abs, metrics::MrBase::Union);
        println!(
            "{name}: rmse={:.2} ew_kl={:.4} mr={:.4}",
            rep.rmse, rep.ew_kl, rep.mr
        );
    }

    // The NMF objective never increases across multiplicative updates.
    let res = nmf_factorize(&cn, rank, 50);
    println!(
        "nmf objective: {:.4} -> {:.4} over {} iterations",
        res.objective.first().unwrap(),
        res.objective.last().unwrap(),
        res.objective.len() - 1
    );
    Ok(())
}
