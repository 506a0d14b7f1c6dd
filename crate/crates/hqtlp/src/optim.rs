//! Adam optimizer over flat lists of parameter tensors.

use crate::tensor::Tensor;

/// Adam hyperparameters. Defaults: lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..AdamConfig::default() }
    }
}

/// First/second-moment accumulators, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    /// Zero state shaped after the given parameter list.
    pub fn new(params: &[&Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
///
/// Panics if the parameter, gradient, and state lists disagree in length or
/// shape.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[Tensor],
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    assert_eq!(params.len(), grads.len(), "params/grads length mismatch");
    assert_eq!(params.len(), state.m.len(), "params/state length mismatch");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for i in 0..params.len() {
        let p = &mut *params[i];
        let g = &grads[i];
        assert_eq!(
            p.shape(),
            g.shape(),
            "param/grad shape mismatch: {:?} vs {:?}",
            p.shape(),
            g.shape()
        );
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for ((pe, ge), (me, ve)) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
        {
            *me = cfg.beta1 * *me + (1.0 - cfg.beta1) * ge;
            *ve = cfg.beta2 * *ve + (1.0 - cfg.beta2) * ge * ge;
            let m_hat = *me / bc1;
            let v_hat = *ve / bc2;
            *pe -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = Tensor::from_rows(&[vec![1.0, -2.0]]);
        let before = p.clone();
        let mut state = AdamState::new(&[&p]);
        let g = Tensor::zeros(p.shape());
        adam_step(&mut [&mut p], &[g], &mut state, &AdamConfig::default());
        assert_eq!(p, before);
    }

    #[test]
    fn zero_lr_leaves_params_unchanged() {
        let mut p = Tensor::from_rows(&[vec![1.0, -2.0]]);
        let before = p.clone();
        let mut state = AdamState::new(&[&p]);
        let g = Tensor::from_rows(&[vec![0.3, -0.7]]);
        let cfg = AdamConfig { lr: 0.0, ..AdamConfig::default() };
        adam_step(&mut [&mut p], &[g], &mut state, &cfg);
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_matches_bias_corrected_form() {
        // At t=1: m_hat = g, v_hat = g^2, so delta = -lr * g / (|g| + eps).
        let g0 = 0.25;
        let mut p = Tensor::scalar(1.0);
        let mut state = AdamState::new(&[&p]);
        let cfg = AdamConfig::default();
        adam_step(&mut [&mut p], &[Tensor::scalar(g0)], &mut state, &cfg);
        let expected = 1.0 - cfg.lr * g0 / (g0.abs() + cfg.eps);
        assert!((p.scalar_value() - expected).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "param/grad shape mismatch")]
    fn shape_mismatch_panics() {
        let mut p = Tensor::zeros(&[2, 2]);
        let mut state = AdamState::new(&[&p]);
        let g = Tensor::zeros(&[2, 3]);
        adam_step(&mut [&mut p], &[g], &mut state, &AdamConfig::default());
    }
}
