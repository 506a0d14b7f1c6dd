//! Tensors, the gradient tape, and the finite-difference checker.
//!
//! ```bash
//! cargo run --release --example autodiff_basics
//! ```

use hqtlp::tape::{grad_check, Tape};
use hqtlp::tensor::Tensor;

fn main() {
    // Record a tiny computation: loss = mean((X * W)^2).
    let x = Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]);
    let w = Tensor::from_rows(&[vec![0.3, -0.1], vec![0.7, 0.2]]);

    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let wv = tape.param(&w);
    let prod = tape.matmul(xv, wv);
    let sq = tape.mul(prod, prod);
    let loss = tape.mean(sq);

    println!("loss = {}", tape.value(loss).scalar_value());
    let grads = tape.backward(loss);
    println!("dloss/dW = {:?}", grads.wrt(wv, w.shape()).data());

    // The analytic gradient agrees with central finite differences.
    let err = grad_check(
        move |tape, vars| {
            let xv = tape.constant(x.clone());
            let prod = tape.matmul(xv, vars[0]);
            let sq = tape.mul(prod, prod);
            tape.mean(sq)
        },
        &[w],
        1e-5,
    );
    println!("max relative error vs finite differences: {err:.2e}");
    assert!(err < 1e-6);
}
