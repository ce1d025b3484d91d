//! Stochastic gradient descent with classical (heavy-ball) momentum.

use super::model::{EpuModel, ModelGrads};
use super::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { learning_rate: 1e-3, momentum: 0.9 }
    }
}

/// One update over a parameter tensor:
/// `v <- momentum * v - lr * g`, then `p <- p + v`.
pub fn sgd_momentum_step<F: Real>(params: &mut [F], grads: &[F], velocity: &mut [F], cfg: SgdConfig) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), velocity.len());
    let lr = F::from_f64(cfg.learning_rate);
    let mu = F::from_f64(cfg.momentum);
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = mu * *v - lr * g;
        *p += *v;
    }
}

/// Applies the momentum update across every tensor of a model, bias
/// included. `velocity` must be model-shaped (see `EpuModel::zero_grads`).
pub fn apply_model_step<F: Real>(
    model: &mut EpuModel<F>,
    grads: &ModelGrads<F>,
    velocity: &mut ModelGrads<F>,
    cfg: SgdConfig,
) {
    for ((net, gnet), vnet) in model.subnets.iter_mut().zip(&grads.subnets).zip(&mut velocity.subnets) {
        for ((p, g), v) in net
            .param_slices_mut()
            .into_iter()
            .zip(gnet.param_slices())
            .zip(vnet.param_slices_mut())
        {
            sgd_momentum_step(p, g, v, cfg);
        }
    }
    let mut p = [model.bias];
    let mut v = [velocity.bias];
    sgd_momentum_step(&mut p, &[grads.bias], &mut v, cfg);
    model.bias = p[0];
    velocity.bias = v[0];
}
