//! Verification of the analytic gradients against central finite
//! differences, evaluated on an f64 twin of the model so the comparison is
//! not drowned by f32 forward-pass quantization.

use super::loss::binary_cross_entropy;
use super::model::{epu_forward, EpuModel, ModelGrads};
use super::NeuralError;
use crate::pfm::PfmSet;

/// Magnitudes below this count as zero; a pair of such values compares
/// equal instead of dividing 0 by 0.
const ZERO_GUARD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GradCheckGroup {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GradCheckGroup>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    /// Groups at or above tolerance.
    pub fn flagged(&self) -> Vec<&GradCheckGroup> {
        self.groups.iter().filter(|g| g.max_rel_error >= self.tolerance).collect()
    }
}

fn rel_error(a: f64, b: f64) -> f64 {
    if a.abs() < ZERO_GUARD && b.abs() < ZERO_GUARD {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn loss_at(model: &EpuModel<f64>, pfms: &PfmSet, y: u8) -> Result<f64, NeuralError> {
    binary_cross_entropy(y, epu_forward(model, pfms)?.probability)
}

/// Central finite differences of the loss over every parameter:
/// `(L(p + step) - L(p - step)) / (2 step)`, all in f64.
pub fn finite_difference_grads(
    model: &EpuModel<f64>,
    pfms: &PfmSet,
    y: u8,
    step: f64,
) -> Result<ModelGrads<f64>, NeuralError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(NeuralError::InvalidConfig("finite-difference step must be positive".into()));
    }
    let mut scratch = model.clone();
    let mut grads = model.zero_grads();
    for s in 0..scratch.subnets.len() {
        let tensor_count = scratch.subnets[s].param_slices().len();
        for t in 0..tensor_count {
            let len = scratch.subnets[s].param_slices()[t].len();
            for e in 0..len {
                let orig = scratch.subnets[s].param_slices()[t][e];
                scratch.subnets[s].param_slices_mut()[t][e] = orig + step;
                let plus = loss_at(&scratch, pfms, y)?;
                scratch.subnets[s].param_slices_mut()[t][e] = orig - step;
                let minus = loss_at(&scratch, pfms, y)?;
                scratch.subnets[s].param_slices_mut()[t][e] = orig;
                grads.subnets[s].param_slices_mut()[t][e] = (plus - minus) / (2.0 * step);
            }
        }
    }
    let orig = scratch.bias;
    scratch.bias = orig + step;
    let plus = loss_at(&scratch, pfms, y)?;
    scratch.bias = orig - step;
    let minus = loss_at(&scratch, pfms, y)?;
    grads.bias = (plus - minus) / (2.0 * step);
    Ok(grads)
}

fn tensor_names(grads: &ModelGrads<f64>) -> Vec<String> {
    let mut names = Vec::new();
    for (i, net) in grads.subnets.iter().enumerate() {
        for j in 0..net.convs.len() {
            names.push(format!("subnet{i}.conv{j}.kernel"));
            names.push(format!("subnet{i}.conv{j}.bias"));
        }
        names.push(format!("subnet{i}.fc.weight"));
        names.push(format!("subnet{i}.fc.bias"));
        names.push(format!("subnet{i}.head.weight"));
        names.push(format!("subnet{i}.head.bias"));
    }
    names
}

/// Element-wise relative comparison of two gradient sets, grouped by
/// parameter tensor.
pub fn compare_grads(
    analytic: &ModelGrads<f64>,
    numeric: &ModelGrads<f64>,
    tolerance: f64,
) -> GradCheckReport {
    let names = tensor_names(analytic);
    let mut groups = Vec::with_capacity(names.len() + 1);
    let mut name_iter = names.into_iter();
    for (anet, nnet) in analytic.subnets.iter().zip(&numeric.subnets) {
        for (a, n) in anet.param_slices().into_iter().zip(nnet.param_slices()) {
            let name = name_iter.next().unwrap();
            let mut worst = (0.0f64, 0usize);
            for (idx, (&av, &nv)) in a.iter().zip(n).enumerate() {
                let e = rel_error(av, nv);
                if e > worst.0 {
                    worst = (e, idx);
                }
            }
            groups.push(GradCheckGroup { name, max_rel_error: worst.0, worst_index: worst.1 });
        }
    }
    groups.push(GradCheckGroup {
        name: "bias".into(),
        max_rel_error: rel_error(analytic.bias, numeric.bias),
        worst_index: 0,
    });
    GradCheckReport { groups, tolerance }
}

/// Checks backpropagation on one sample: lifts the model to f64, compares
/// analytic gradients against central differences with the given step, and
/// reports the worst relative error per tensor.
pub fn gradient_check(
    model: &EpuModel<f32>,
    pfms: &PfmSet,
    y: u8,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NeuralError> {
    let twin = model.cast::<f64>();
    let (analytic, _) = twin.backprop(pfms, y)?;
    let numeric = finite_difference_grads(&twin, pfms, y, step)?;
    Ok(compare_grads(&analytic, &numeric, tolerance))
}

/// Every ReLU pre-activation in the model on one input, in a fixed order.
/// The loss is only differentiable away from the corners those values
/// define (relu-clamped regions can put pre-activations at exactly zero,
/// where the conventional subgradient is not a two-sided derivative), so
/// finite differences and first-order descent statements are valid only
/// when the probing step neither starts near nor crosses a corner.
pub(crate) fn relu_pre_activations(model: &EpuModel<f64>, pfms: &PfmSet) -> Vec<f64> {
    use super::layers::{conv_forward, dense_forward, gap_forward, maxpool_forward, relu_forward};
    let mut pres = Vec::new();
    for (s, net) in model.subnets.iter().enumerate() {
        let mut cur: Vec<f64> = pfms.maps[s].plane.data().iter().map(|&v| v as f64 - 0.5).collect();
        let (mut h, mut w) = (pfms.h(), pfms.w());
        for conv in &net.convs {
            let pre = conv_forward(conv, &cur, h, w);
            pres.extend_from_slice(&pre);
            let mut act = pre;
            relu_forward(&mut act);
            let (pooled, _, oh, ow) = maxpool_forward(&act, conv.out_c, h, w);
            cur = pooled;
            h = oh;
            w = ow;
        }
        let gap = gap_forward(&cur, net.convs.last().unwrap().out_c, h, w);
        pres.extend_from_slice(&dense_forward(&net.fc, &gap));
    }
    pres
}

/// Smallest distance of any ReLU pre-activation from its corner on one
/// input. Gradient verification is only meaningful when this margin
/// comfortably exceeds the finite-difference step; callers drawing random
/// cases reject those that sit too close.
pub fn min_kink_distance(model: &EpuModel<f64>, pfms: &PfmSet) -> f64 {
    relu_pre_activations(model, pfms).iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
}
