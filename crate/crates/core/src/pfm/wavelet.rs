//! Multilevel 2-D orthonormal Haar transform.
//!
//! Analysis filters are (1/sqrt2, 1/sqrt2) and (1/sqrt2, -1/sqrt2) applied
//! separably, rows first. Odd extents are extended by repeating the last
//! sample before each dyadic step; synthesis crops back, so round trips are
//! exact for any shape. On shapes that stay even through every level no
//! padding occurs and the transform preserves energy.

use super::PfmError;
use crate::plane::Plane;

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Detail subbands of one level. `lh` holds horizontal detail (high-pass
/// along rows), `hl` vertical detail (high-pass along columns), `hh`
/// diagonal detail.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    pub lh: Plane<f64>,
    pub hl: Plane<f64>,
    pub hh: Plane<f64>,
}

/// Output of `dwt2`: detail bands from finest to coarsest, plus the final
/// approximation. Subband shapes follow the ceiling-halved chain of the
/// input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    input_h: usize,
    input_w: usize,
    details: Vec<DetailBands>,
    approx: Plane<f64>,
}

impl WaveletPyramid {
    pub fn input_shape(&self) -> (usize, usize) {
        (self.input_h, self.input_w)
    }

    pub fn level_count(&self) -> usize {
        self.details.len()
    }

    pub fn details(&self) -> &[DetailBands] {
        &self.details
    }

    pub fn approx(&self) -> &Plane<f64> {
        &self.approx
    }

    /// Assembles a pyramid from parts; `idwt2` re-validates shapes, so a
    /// mismatched assembly is caught at synthesis time.
    pub fn from_parts(
        input_shape: (usize, usize),
        details: Vec<DetailBands>,
        approx: Plane<f64>,
    ) -> Self {
        WaveletPyramid { input_h: input_shape.0, input_w: input_shape.1, details, approx }
    }

    /// Copy with every detail coefficient zeroed (approximation kept).
    pub fn approx_only(&self) -> Self {
        let mut out = self.clone();
        for band in &mut out.details {
            band.lh.data_mut().fill(0.0);
            band.hl.data_mut().fill(0.0);
            band.hh.data_mut().fill(0.0);
        }
        out
    }

    /// Copy with the approximation zeroed (details kept).
    pub fn details_only(&self) -> Self {
        let mut out = self.clone();
        out.approx.data_mut().fill(0.0);
        out
    }

    /// Total squared magnitude over every stored coefficient.
    pub fn energy(&self) -> f64 {
        let band = |p: &Plane<f64>| p.data().iter().map(|v| v * v).sum::<f64>();
        self.details.iter().map(|d| band(&d.lh) + band(&d.hl) + band(&d.hh)).sum::<f64>()
            + band(&self.approx)
    }

    /// Input shape seen by each analysis level: index 0 is the original
    /// shape, index `k` the approximation shape after `k` levels.
    fn shape_chain(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![(self.input_h, self.input_w)];
        for _ in 0..self.details.len() {
            let (h, w) = *shapes.last().unwrap();
            shapes.push((h.div_ceil(2), w.div_ceil(2)));
        }
        shapes
    }
}

/// Padded sample with the last row/column repeated on odd extents.
fn padded_at(p: &Plane<f64>, y: usize, x: usize) -> f64 {
    p.at(y.min(p.h() - 1), x.min(p.w() - 1))
}

/// One separable analysis step: rows, then columns.
fn analyze(p: &Plane<f64>) -> (Plane<f64>, DetailBands) {
    let (h, w) = (p.h(), p.w());
    let (ph, pw) = (h + (h & 1), w + (w & 1));
    let (oh, ow) = (ph / 2, pw / 2);

    // Row pass over the padded plane: a = row low-pass, d = row high-pass.
    let mut a = Plane::filled(ph, ow, 0.0);
    let mut d = Plane::filled(ph, ow, 0.0);
    for y in 0..ph {
        for x in 0..ow {
            let l = padded_at(p, y, 2 * x);
            let r = padded_at(p, y, 2 * x + 1);
            a.set(y, x, (l + r) * INV_SQRT2);
            d.set(y, x, (l - r) * INV_SQRT2);
        }
    }

    // Column pass.
    let mut ll = Plane::filled(oh, ow, 0.0);
    let mut hl = Plane::filled(oh, ow, 0.0);
    let mut lh = Plane::filled(oh, ow, 0.0);
    let mut hh = Plane::filled(oh, ow, 0.0);
    for y in 0..oh {
        for x in 0..ow {
            let (at, ab) = (a.at(2 * y, x), a.at(2 * y + 1, x));
            ll.set(y, x, (at + ab) * INV_SQRT2);
            hl.set(y, x, (at - ab) * INV_SQRT2);
            let (dt, db) = (d.at(2 * y, x), d.at(2 * y + 1, x));
            lh.set(y, x, (dt + db) * INV_SQRT2);
            hh.set(y, x, (dt - db) * INV_SQRT2);
        }
    }
    (ll, DetailBands { lh, hl, hh })
}

/// One synthesis step, cropped to the pre-analysis shape `(th, tw)`.
fn synthesize(ll: &Plane<f64>, bands: &DetailBands, th: usize, tw: usize) -> Plane<f64> {
    let (sh, sw) = (ll.h(), ll.w());
    let ph = 2 * sh;

    // Invert the column pass.
    let mut a = Plane::filled(ph, sw, 0.0);
    let mut d = Plane::filled(ph, sw, 0.0);
    for y in 0..sh {
        for x in 0..sw {
            a.set(2 * y, x, (ll.at(y, x) + bands.hl.at(y, x)) * INV_SQRT2);
            a.set(2 * y + 1, x, (ll.at(y, x) - bands.hl.at(y, x)) * INV_SQRT2);
            d.set(2 * y, x, (bands.lh.at(y, x) + bands.hh.at(y, x)) * INV_SQRT2);
            d.set(2 * y + 1, x, (bands.lh.at(y, x) - bands.hh.at(y, x)) * INV_SQRT2);
        }
    }

    // Invert the row pass, writing only the cropped extent.
    let mut out = Plane::filled(th, tw, 0.0);
    for y in 0..th.min(ph) {
        for x in 0..sw {
            let lo = (a.at(y, x) + d.at(y, x)) * INV_SQRT2;
            let hi = (a.at(y, x) - d.at(y, x)) * INV_SQRT2;
            if 2 * x < tw {
                out.set(y, 2 * x, lo);
            }
            if 2 * x + 1 < tw {
                out.set(y, 2 * x + 1, hi);
            }
        }
    }
    out
}

/// Full multilevel analysis. Requires `levels >= 1` and both extents at
/// least `2^levels` so every level keeps at least one coefficient per axis.
pub fn dwt2(plane: &Plane<f64>, levels: usize) -> Result<WaveletPyramid, PfmError> {
    if levels == 0 {
        return Err(PfmError::ZeroLevels);
    }
    let min = 1usize << levels;
    if plane.h() < min || plane.w() < min {
        return Err(PfmError::TooSmall { h: plane.h(), w: plane.w(), min });
    }
    let mut details = Vec::with_capacity(levels);
    let mut cur = plane.clone();
    for _ in 0..levels {
        let (ll, bands) = analyze(&cur);
        details.push(bands);
        cur = ll;
    }
    Ok(WaveletPyramid { input_h: plane.h(), input_w: plane.w(), details, approx: cur })
}

/// Full multilevel synthesis back to the original shape. Every subband must
/// sit on the ceiling-halved shape chain of the recorded input shape.
pub fn idwt2(pyr: &WaveletPyramid) -> Result<Plane<f64>, PfmError> {
    let shapes = pyr.shape_chain();
    for (k, bands) in pyr.details.iter().enumerate() {
        let (want_h, want_w) = shapes[k + 1];
        for band in [&bands.lh, &bands.hl, &bands.hh] {
            if (band.h(), band.w()) != (want_h, want_w) {
                return Err(PfmError::PyramidShape {
                    level: k + 1,
                    want_h,
                    want_w,
                    got_h: band.h(),
                    got_w: band.w(),
                });
            }
        }
    }
    let (last_h, last_w) = shapes[pyr.details.len()];
    if (pyr.approx.h(), pyr.approx.w()) != (last_h, last_w) {
        return Err(PfmError::PyramidShape {
            level: pyr.details.len(),
            want_h: last_h,
            want_w: last_w,
            got_h: pyr.approx.h(),
            got_w: pyr.approx.w(),
        });
    }
    let mut cur = pyr.approx.clone();
    for k in (0..pyr.details.len()).rev() {
        let (th, tw) = shapes[k];
        cur = synthesize(&cur, &pyr.details[k], th, tw);
    }
    Ok(cur)
}
