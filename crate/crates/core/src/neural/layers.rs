//! Layer primitives: zero-padded 3x3 convolution, 2x2 max pooling, global
//! average pooling, and dense layers, each with explicit backward passes.
//!
//! Feature buffers are channel-major: `buf[c * h * w + y * w + x]`.

use super::Real;

pub const KERNEL: usize = 3;

/// 3x3 stride-1 convolution with zero 'same' padding; output shape equals
/// input shape. Kernel storage is `[out_c][in_c][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<F> {
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> Conv2d<F> {
    pub fn zeros(in_c: usize, out_c: usize) -> Self {
        Conv2d {
            in_c,
            out_c,
            kernel: vec![F::zero(); out_c * in_c * KERNEL * KERNEL],
            bias: vec![F::zero(); out_c],
        }
    }

    pub fn cast<G: Real>(&self) -> Conv2d<G> {
        Conv2d {
            in_c: self.in_c,
            out_c: self.out_c,
            kernel: self.kernel.iter().map(|v| G::from_f64(v.into_f64())).collect(),
            bias: self.bias.iter().map(|v| G::from_f64(v.into_f64())).collect(),
        }
    }
}

/// Fully connected layer; weight storage is `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub in_d: usize,
    pub out_d: usize,
    pub weight: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> Dense<F> {
    pub fn zeros(in_d: usize, out_d: usize) -> Self {
        Dense { in_d, out_d, weight: vec![F::zero(); out_d * in_d], bias: vec![F::zero(); out_d] }
    }

    pub fn cast<G: Real>(&self) -> Dense<G> {
        Dense {
            in_d: self.in_d,
            out_d: self.out_d,
            weight: self.weight.iter().map(|v| G::from_f64(v.into_f64())).collect(),
            bias: self.bias.iter().map(|v| G::from_f64(v.into_f64())).collect(),
        }
    }
}

/// Clipped shift ranges for a kernel offset `(dy, dx)`: output positions
/// `(y, x)` in these ranges read input `(y + dy, x + dx)` in bounds; the
/// zero pad contributes nothing elsewhere.
#[inline]
fn shift_ranges(h: usize, w: usize, dy: isize, dx: isize) -> (usize, usize, usize, usize) {
    let y0 = (-dy).max(0) as usize;
    let y1 = ((h as isize - dy).min(h as isize)).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = ((w as isize - dx).min(w as isize)).max(0) as usize;
    (y0, y1, x0, x1)
}

pub fn conv_forward<F: Real>(layer: &Conv2d<F>, input: &[F], h: usize, w: usize) -> Vec<F> {
    debug_assert_eq!(input.len(), layer.in_c * h * w);
    let hw = h * w;
    let mut out = vec![F::zero(); layer.out_c * hw];
    for o in 0..layer.out_c {
        let out_plane = &mut out[o * hw..(o + 1) * hw];
        out_plane.fill(layer.bias[o]);
        for i in 0..layer.in_c {
            let in_plane = &input[i * hw..(i + 1) * hw];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let wgt = layer.kernel[((o * layer.in_c + i) * KERNEL + ky) * KERNEL + kx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let (y0, y1, x0, x1) = shift_ranges(h, w, dy, dx);
                    if x1 <= x0 {
                        continue;
                    }
                    let n = x1 - x0;
                    for y in y0..y1 {
                        let src = ((y as isize + dy) as usize) * w + (x0 as isize + dx) as usize;
                        let dst = y * w + x0;
                        let src_row = &in_plane[src..src + n];
                        let dst_row = &mut out_plane[dst..dst + n];
                        for (d, &s) in dst_row.iter_mut().zip(src_row) {
                            *d += wgt * s;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of a convolution: returns `(grad_layer, grad_input)` given the
/// forward input and the gradient at the output.
pub fn conv_backward<F: Real>(
    layer: &Conv2d<F>,
    input: &[F],
    h: usize,
    w: usize,
    grad_out: &[F],
) -> (Conv2d<F>, Vec<F>) {
    let hw = h * w;
    debug_assert_eq!(grad_out.len(), layer.out_c * hw);
    let mut grad = Conv2d::zeros(layer.in_c, layer.out_c);
    let mut grad_input = vec![F::zero(); layer.in_c * hw];
    for o in 0..layer.out_c {
        let go = &grad_out[o * hw..(o + 1) * hw];
        grad.bias[o] = go.iter().copied().sum();
        for i in 0..layer.in_c {
            let in_plane = &input[i * hw..(i + 1) * hw];
            let gi = &mut grad_input[i * hw..(i + 1) * hw];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let kidx = ((o * layer.in_c + i) * KERNEL + ky) * KERNEL + kx;
                    let wgt = layer.kernel[kidx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let (y0, y1, x0, x1) = shift_ranges(h, w, dy, dx);
                    if x1 <= x0 {
                        continue;
                    }
                    let n = x1 - x0;
                    let mut acc = F::zero();
                    for y in y0..y1 {
                        let src = ((y as isize + dy) as usize) * w + (x0 as isize + dx) as usize;
                        let dst = y * w + x0;
                        let go_row = &go[dst..dst + n];
                        for (&g, &s) in go_row.iter().zip(&in_plane[src..src + n]) {
                            acc += g * s;
                        }
                        for (gv, &g) in gi[src..src + n].iter_mut().zip(go_row) {
                            *gv += wgt * g;
                        }
                    }
                    grad.kernel[kidx] = acc;
                }
            }
        }
    }
    (grad, grad_input)
}

pub fn relu_forward<F: Real>(buf: &mut [F]) {
    for v in buf {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// Masks `grad` by the sign of the pre-activation values (gradient is zero
/// at exactly zero).
pub fn relu_backward<F: Real>(pre: &[F], grad: &mut [F]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= F::zero() {
            *g = F::zero();
        }
    }
}

/// 2x2 stride-2 max pooling with floor rounding; odd trailing rows/columns
/// are dropped. Returns the pooled buffer and the winning input index per
/// output cell (first maximum in scan order wins ties).
pub fn maxpool_forward<F: Real>(input: &[F], c: usize, h: usize, w: usize) -> (Vec<F>, Vec<u32>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![F::zero(); c * oh * ow];
    let mut arg = vec![0u32; c * oh * ow];
    for ch in 0..c {
        let base = ch * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let mut best_idx = base + (2 * y) * w + 2 * x;
                let mut best = input[best_idx];
                for (py, px) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + py) * w + 2 * x + px;
                    if input[idx] > best {
                        best = input[idx];
                        best_idx = idx;
                    }
                }
                let o = ch * oh * ow + y * ow + x;
                out[o] = best;
                arg[o] = best_idx as u32;
            }
        }
    }
    (out, arg, oh, ow)
}

pub fn maxpool_backward<F: Real>(grad_out: &[F], arg: &[u32], input_len: usize) -> Vec<F> {
    let mut grad = vec![F::zero(); input_len];
    for (g, &idx) in grad_out.iter().zip(arg) {
        grad[idx as usize] += *g;
    }
    grad
}

/// Mean over each channel plane.
pub fn gap_forward<F: Real>(input: &[F], c: usize, h: usize, w: usize) -> Vec<F> {
    let hw = h * w;
    let scale = F::from_f64(1.0 / hw as f64);
    (0..c).map(|ch| input[ch * hw..(ch + 1) * hw].iter().copied().sum::<F>() * scale).collect()
}

pub fn gap_backward<F: Real>(grad_out: &[F], c: usize, h: usize, w: usize) -> Vec<F> {
    let hw = h * w;
    let scale = F::from_f64(1.0 / hw as f64);
    let mut grad = vec![F::zero(); c * hw];
    for ch in 0..c {
        let g = grad_out[ch] * scale;
        grad[ch * hw..(ch + 1) * hw].fill(g);
    }
    grad
}

pub fn dense_forward<F: Real>(layer: &Dense<F>, input: &[F]) -> Vec<F> {
    debug_assert_eq!(input.len(), layer.in_d);
    (0..layer.out_d)
        .map(|o| {
            let row = &layer.weight[o * layer.in_d..(o + 1) * layer.in_d];
            row.iter().zip(input).map(|(&w, &x)| w * x).sum::<F>() + layer.bias[o]
        })
        .collect()
}

pub fn dense_backward<F: Real>(layer: &Dense<F>, input: &[F], grad_out: &[F]) -> (Dense<F>, Vec<F>) {
    let mut grad = Dense::zeros(layer.in_d, layer.out_d);
    let mut grad_input = vec![F::zero(); layer.in_d];
    for o in 0..layer.out_d {
        let g = grad_out[o];
        grad.bias[o] = g;
        let wrow = &layer.weight[o * layer.in_d..(o + 1) * layer.in_d];
        let grow = &mut grad.weight[o * layer.in_d..(o + 1) * layer.in_d];
        for i in 0..layer.in_d {
            grow[i] = g * input[i];
            grad_input[i] += g * wrow[i];
        }
    }
    (grad, grad_input)
}
