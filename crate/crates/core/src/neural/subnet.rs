//! One sub-network: conv blocks (3x3 conv, ReLU, 2x2 max pool) feeding
//! global average pooling, a ReLU dense layer, and a scalar head.

use super::layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, gap_backward, gap_forward,
    maxpool_backward, maxpool_forward, relu_backward, relu_forward, Conv2d, Dense,
};
use super::{NeuralError, Real};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Structural hyper-parameters of a sub-network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Output channels of each conv block, in order.
    pub conv_filters: Vec<usize>,
    /// Width of the dense layer between pooling and the head.
    pub dense_units: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig { conv_filters: vec![32, 64], dense_units: 32 }
    }
}

impl ArchConfig {
    /// Spatial shape after all conv blocks, or an error when pooling would
    /// collapse an axis to zero.
    pub fn pooled_shape(&self, h: usize, w: usize) -> Result<(usize, usize), NeuralError> {
        if self.conv_filters.is_empty() {
            return Err(NeuralError::Architecture("at least one conv block required".into()));
        }
        if self.dense_units == 0 {
            return Err(NeuralError::Architecture("dense layer must have at least one unit".into()));
        }
        let (mut ch, mut cw) = (h, w);
        for (i, _) in self.conv_filters.iter().enumerate() {
            if ch < 2 || cw < 2 {
                return Err(NeuralError::Architecture(format!(
                    "input {h}x{w} collapses at pool stage {i}"
                )));
            }
            ch /= 2;
            cw /= 2;
        }
        Ok((ch, cw))
    }
}

/// Activation applied to the head's scalar pre-activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadActivation {
    /// Bounded response in [-1, 1]; used by the additive classifier.
    Tanh,
    /// Raw pre-activation; used when a logistic sits on top externally.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subnet<F> {
    pub arch: ArchConfig,
    pub in_channels: usize,
    pub head_activation: HeadActivation,
    pub convs: Vec<Conv2d<F>>,
    pub fc: Dense<F>,
    pub head: Dense<F>,
}

/// Intermediate activations retained for the backward pass.
#[derive(Debug)]
pub struct SubnetTrace<F> {
    /// Input to each conv block with its spatial shape.
    block_inputs: Vec<(Vec<F>, usize, usize)>,
    /// Pre-ReLU conv outputs per block.
    conv_pre: Vec<Vec<F>>,
    /// Max-pool winner indices per block, with pooled shape.
    pool_args: Vec<(Vec<u32>, usize, usize)>,
    gap_out: Vec<F>,
    fc_pre: Vec<F>,
    head_in: Vec<F>,
    pub response: F,
}

fn uniform<F: Real>(rng: &mut ChaCha8Rng, limit: f64) -> F {
    F::from_f64(rng.random_range(-limit..=limit))
}

impl<F: Real> Subnet<F> {
    /// Seeded initialization: He-uniform for the ReLU conv and dense layers,
    /// Xavier-uniform for the head, zero biases. Draw order is fixed
    /// (kernels in storage order, block by block, then fc, then head), so a
    /// given rng state fully determines the parameters.
    pub fn init(
        arch: &ArchConfig,
        in_channels: usize,
        head_activation: HeadActivation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut convs = Vec::with_capacity(arch.conv_filters.len());
        let mut prev = in_channels;
        for &f in &arch.conv_filters {
            let mut layer = Conv2d::zeros(prev, f);
            let fan_in = (prev * 9) as f64;
            let limit = (6.0 / fan_in).sqrt();
            for wv in &mut layer.kernel {
                *wv = uniform(rng, limit);
            }
            convs.push(layer);
            prev = f;
        }
        let mut fc = Dense::zeros(prev, arch.dense_units);
        let limit = (6.0 / prev as f64).sqrt();
        for wv in &mut fc.weight {
            *wv = uniform(rng, limit);
        }
        let mut head = Dense::zeros(arch.dense_units, 1);
        let limit = (6.0 / (arch.dense_units + 1) as f64).sqrt();
        for wv in &mut head.weight {
            *wv = uniform(rng, limit);
        }
        Subnet { arch: arch.clone(), in_channels, head_activation, convs, fc, head }
    }

    pub fn zeros_like(&self) -> Self {
        Subnet {
            arch: self.arch.clone(),
            in_channels: self.in_channels,
            head_activation: self.head_activation,
            convs: self.convs.iter().map(|c| Conv2d::zeros(c.in_c, c.out_c)).collect(),
            fc: Dense::zeros(self.fc.in_d, self.fc.out_d),
            head: Dense::zeros(self.head.in_d, self.head.out_d),
        }
    }

    pub fn cast<G: Real>(&self) -> Subnet<G> {
        Subnet {
            arch: self.arch.clone(),
            in_channels: self.in_channels,
            head_activation: self.head_activation,
            convs: self.convs.iter().map(Conv2d::cast).collect(),
            fc: self.fc.cast(),
            head: self.head.cast(),
        }
    }

    /// Parameter tensors in fixed order: per block kernel then bias, then
    /// fc weight/bias, then head weight/bias.
    pub fn param_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(c.kernel.as_slice());
            out.push(c.bias.as_slice());
        }
        out.push(self.fc.weight.as_slice());
        out.push(self.fc.bias.as_slice());
        out.push(self.head.weight.as_slice());
        out.push(self.head.bias.as_slice());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = Vec::new();
        for c in &mut self.convs {
            out.push(c.kernel.as_mut_slice());
            out.push(c.bias.as_mut_slice());
        }
        out.push(self.fc.weight.as_mut_slice());
        out.push(self.fc.bias.as_mut_slice());
        out.push(self.head.weight.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        out
    }

    /// Forward pass over a channel-major buffer of shape
    /// `in_channels x h x w`, holding unit-interval map values. Returns the
    /// scalar response and the trace needed by `backward`.
    pub fn forward(&self, input: &[F], h: usize, w: usize) -> Result<(F, SubnetTrace<F>), NeuralError> {
        self.arch.pooled_shape(h, w)?;
        if input.len() != self.in_channels * h * w {
            return Err(NeuralError::Architecture(format!(
                "input buffer holds {} values, expected {}",
                input.len(),
                self.in_channels * h * w
            )));
        }
        let mut block_inputs = Vec::with_capacity(self.convs.len());
        let mut conv_pre = Vec::with_capacity(self.convs.len());
        let mut pool_args = Vec::with_capacity(self.convs.len());
        // Centering puts a neutral map (all 0.5) at exactly zero, so with
        // zero-initialized biases it excites nothing, and small deviations
        // in either direction reach the ReLU gates with opposite signs.
        let half = F::from_f64(0.5);
        let mut cur: Vec<F> = input.iter().map(|&v| v - half).collect();
        let (mut ch, mut cw) = (h, w);
        for conv in &self.convs {
            block_inputs.push((cur.clone(), ch, cw));
            let pre = conv_forward(conv, &cur, ch, cw);
            let mut act = pre.clone();
            relu_forward(&mut act);
            conv_pre.push(pre);
            let (pooled, args, oh, ow) = maxpool_forward(&act, conv.out_c, ch, cw);
            pool_args.push((args, oh, ow));
            cur = pooled;
            ch = oh;
            cw = ow;
        }
        let gap_out = gap_forward(&cur, self.convs.last().unwrap().out_c, ch, cw);
        let fc_pre = dense_forward(&self.fc, &gap_out);
        let mut head_in = fc_pre.clone();
        relu_forward(&mut head_in);
        let z = dense_forward(&self.head, &head_in)[0];
        let response = match self.head_activation {
            HeadActivation::Tanh => z.tanh(),
            HeadActivation::Linear => z,
        };
        if !response.is_finite() {
            return Err(NeuralError::NonFinite("sub-network forward pass"));
        }
        Ok((response, SubnetTrace { block_inputs, conv_pre, pool_args, gap_out, fc_pre, head_in, response }))
    }

    /// Backward pass given d(loss)/d(response); returns parameter gradients
    /// in a subnet-shaped container.
    pub fn backward(&self, trace: &SubnetTrace<F>, d_response: F) -> Subnet<F> {
        let mut grads = self.zeros_like();
        let dz = match self.head_activation {
            HeadActivation::Tanh => {
                let r = trace.response;
                d_response * (F::one() - r * r)
            }
            HeadActivation::Linear => d_response,
        };
        let (head_grad, mut d_head_in) = dense_backward(&self.head, &trace.head_in, &[dz]);
        grads.head = head_grad;
        relu_backward(&trace.fc_pre, &mut d_head_in);
        let (fc_grad, d_gap) = dense_backward(&self.fc, &trace.gap_out, &d_head_in);
        grads.fc = fc_grad;

        let last = self.convs.len() - 1;
        let (_, ph, pw) = trace.pool_args[last];
        let mut d_cur = gap_backward(&d_gap, self.convs[last].out_c, ph, pw);
        for b in (0..self.convs.len()).rev() {
            let (ref args, _, _) = trace.pool_args[b];
            let (_, bh, bw) = trace.block_inputs[b];
            let pre = &trace.conv_pre[b];
            let mut d_act = maxpool_backward(&d_cur, args, pre.len());
            relu_backward(pre, &mut d_act);
            let (conv_grad, d_input) =
                conv_backward(&self.convs[b], &trace.block_inputs[b].0, bh, bw, &d_act);
            grads.convs[b] = conv_grad;
            d_cur = d_input;
        }
        grads
    }
}
