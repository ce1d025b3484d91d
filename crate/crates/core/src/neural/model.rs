//! The additive model: four sub-networks (one per feature map) plus a
//! global bias feeding a logistic link.

use super::loss::logistic;
use super::subnet::{ArchConfig, HeadActivation, Subnet, SubnetTrace};
use super::{NeuralError, Real};
use crate::ius::ContributionProfile;
use crate::pfm::{PfmConfig, PfmSet};
use rand_chacha::ChaCha8Rng;

pub const SUBNET_COUNT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EpuModel<F: Real = f32> {
    pub pfm_config: PfmConfig,
    pub input_h: usize,
    pub input_w: usize,
    pub arch: ArchConfig,
    /// Exactly `SUBNET_COUNT` nets, one per feature map, in map order.
    pub subnets: Vec<Subnet<F>>,
    pub bias: F,
}

/// Gradient (or velocity) container mirroring a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads<F: Real> {
    pub subnets: Vec<Subnet<F>>,
    pub bias: F,
}

/// Output of a forward pass: the class probability and the per-map bounded
/// responses it decomposes into.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub profile: ContributionProfile,
}

impl<F: Real> EpuModel<F> {
    /// Seeded initialization; draws sub-network parameters in map order so
    /// one rng state fixes the whole model. The bias starts at zero.
    pub fn init(
        pfm_config: PfmConfig,
        input_size: (usize, usize),
        arch: &ArchConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, NeuralError> {
        arch.pooled_shape(input_size.0, input_size.1)?;
        let subnets = (0..SUBNET_COUNT)
            .map(|_| Subnet::init(arch, 1, HeadActivation::Tanh, rng))
            .collect();
        Ok(EpuModel {
            pfm_config,
            input_h: input_size.0,
            input_w: input_size.1,
            arch: arch.clone(),
            subnets,
            bias: F::zero(),
        })
    }

    pub fn zero_grads(&self) -> ModelGrads<F> {
        ModelGrads { subnets: self.subnets.iter().map(Subnet::zeros_like).collect(), bias: F::zero() }
    }

    pub fn cast<G: Real>(&self) -> EpuModel<G> {
        EpuModel {
            pfm_config: self.pfm_config,
            input_h: self.input_h,
            input_w: self.input_w,
            arch: self.arch.clone(),
            subnets: self.subnets.iter().map(Subnet::cast).collect(),
            bias: G::from_f64(self.bias.into_f64()),
        }
    }

    /// Named parameter tensors in fixed order (excludes the scalar bias,
    /// which serializes as its own field). Names follow
    /// `subnet{i}.{conv{j}|fc|head}.{kernel|weight|bias}`.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[F])> {
        let mut out = Vec::new();
        for (i, net) in self.subnets.iter().enumerate() {
            for (j, c) in net.convs.iter().enumerate() {
                out.push((format!("subnet{i}.conv{j}.kernel"), vec![c.out_c, c.in_c, 3, 3], c.kernel.as_slice()));
                out.push((format!("subnet{i}.conv{j}.bias"), vec![c.out_c], c.bias.as_slice()));
            }
            out.push((format!("subnet{i}.fc.weight"), vec![net.fc.out_d, net.fc.in_d], net.fc.weight.as_slice()));
            out.push((format!("subnet{i}.fc.bias"), vec![net.fc.out_d], net.fc.bias.as_slice()));
            out.push((format!("subnet{i}.head.weight"), vec![net.head.out_d, net.head.in_d], net.head.weight.as_slice()));
            out.push((format!("subnet{i}.head.bias"), vec![net.head.out_d], net.head.bias.as_slice()));
        }
        out
    }

    fn check_pfms(&self, pfms: &PfmSet) -> Result<(), NeuralError> {
        if pfms.config != self.pfm_config {
            return Err(NeuralError::ConfigMismatch { expected: self.pfm_config, got: pfms.config });
        }
        if (pfms.h(), pfms.w()) != (self.input_h, self.input_w) {
            return Err(NeuralError::InputShape {
                want_h: self.input_h,
                want_w: self.input_w,
                got_h: pfms.h(),
                got_w: pfms.w(),
            });
        }
        Ok(())
    }

    /// Forward pass retaining traces; the probability combines responses
    /// and bias in f64.
    pub(crate) fn forward_traced(
        &self,
        pfms: &PfmSet,
    ) -> Result<(Prediction, Vec<SubnetTrace<F>>), NeuralError> {
        self.check_pfms(pfms)?;
        let mut responses = [0.0f64; SUBNET_COUNT];
        let mut traces = Vec::with_capacity(SUBNET_COUNT);
        for (i, net) in self.subnets.iter().enumerate() {
            let map = &pfms.maps[i].plane;
            let input: Vec<F> = map.data().iter().map(|&v| F::from_f64(v as f64)).collect();
            let (r, trace) = net.forward(&input, map.h(), map.w())?;
            responses[i] = r.into_f64();
            traces.push(trace);
        }
        let z = self.bias.into_f64() + responses.iter().sum::<f64>();
        let probability = logistic(z);
        if !probability.is_finite() {
            return Err(NeuralError::NonFinite("probability"));
        }
        let profile = ContributionProfile::from_responses(self.pfm_config, responses);
        Ok((Prediction { probability, profile }, traces))
    }

    /// Gradients of the binary cross-entropy at (`pfms`, `y`) for every
    /// parameter including the bias, whose gradient is `p - y`.
    pub fn backprop(&self, pfms: &PfmSet, y: u8) -> Result<(ModelGrads<F>, Prediction), NeuralError> {
        if y > 1 {
            return Err(NeuralError::InvalidLabel(y));
        }
        let (pred, traces) = self.forward_traced(pfms)?;
        // d(loss)/d(z) for the logistic + cross-entropy composition; each
        // response and the bias enter z with unit weight.
        let dz = pred.probability - y as f64;
        let dz_f = F::from_f64(dz);
        let subnets = self
            .subnets
            .iter()
            .zip(&traces)
            .map(|(net, trace)| net.backward(trace, dz_f))
            .collect();
        Ok((ModelGrads { subnets, bias: dz_f }, pred))
    }
}

/// Runs the model on one decomposed image.
pub fn epu_forward<F: Real>(model: &EpuModel<F>, pfms: &PfmSet) -> Result<Prediction, NeuralError> {
    model.forward_traced(pfms).map(|(pred, _)| pred)
}
