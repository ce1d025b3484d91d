//! Assembly of the four perceptual feature maps from a decoded image.

use super::wavelet::{dwt2, idwt2};
use super::{srgb_to_lab, ColorSpace, Image, Pfm, PfmConfig, PfmError, PfmSet, MIN_IMAGE_SIDE};
use crate::plane::Plane;

const WAVELET_LEVELS: usize = 3;

/// Splits a lightness-scaled plane (values nominally in [0, 100]) into its
/// low-frequency and high-frequency reconstructions: a three-level Haar
/// synthesis from the approximation alone, and one from the details alone.
/// The two parts sum back to the input by linearity of the transform.
pub fn luminance_parts(plane: &Plane<f64>) -> Result<(Plane<f64>, Plane<f64>), PfmError> {
    let pyr = dwt2(plane, WAVELET_LEVELS)?;
    let low = idwt2(&pyr.approx_only())?;
    let high = idwt2(&pyr.details_only())?;
    Ok((low, high))
}

fn unit(v: f64) -> f32 {
    v.clamp(0.0, 1.0) as f32
}

/// Lightness map: low-frequency part rescaled from [0, 100].
fn lightness_map(low: &Plane<f64>) -> Plane<f32> {
    low.map(|v| unit(v / 100.0))
}

/// Surface map: signed high-frequency part folded around 0.5.
fn surface_map(high: &Plane<f64>) -> Plane<f32> {
    high.map(|v| unit(0.5 + v / 200.0))
}

fn decompose_color(img: &Image) -> Result<PfmSet, PfmError> {
    let (l, a, b) = srgb_to_lab(img)?;
    let opponent = |p: &Plane<f64>| p.map(|v| unit((v + 128.0) / 256.0));
    let (low, high) = luminance_parts(&l)?;
    let names = PfmConfig::Color.map_names();
    Ok(PfmSet {
        config: PfmConfig::Color,
        maps: [
            Pfm { name: names[0], plane: opponent(&a) },
            Pfm { name: names[1], plane: opponent(&b) },
            Pfm { name: names[2], plane: lightness_map(&low) },
            Pfm { name: names[3], plane: surface_map(&high) },
        ],
    })
}

fn decompose_gray(img: &Image) -> Result<PfmSet, PfmError> {
    let v = img.plane(0);
    // Intensity split at 0.5; the boundary sample belongs to the upper band.
    let band1 = v.map(|x| if x < 0.5 { x } else { 0.0 });
    let band2 = v.map(|x| if x >= 0.5 { x } else { 0.0 });
    let scaled = v.map(|x| x as f64 * 100.0);
    let (low, high) = luminance_parts(&scaled)?;
    let names = PfmConfig::Gray.map_names();
    Ok(PfmSet {
        config: PfmConfig::Gray,
        maps: [
            Pfm { name: names[0], plane: band1 },
            Pfm { name: names[1], plane: band2 },
            Pfm { name: names[2], plane: lightness_map(&low) },
            Pfm { name: names[3], plane: surface_map(&high) },
        ],
    })
}

/// Computes the four feature maps for an image. The map family follows the
/// image's color space; every map has the image's shape and unit-interval
/// values. Each side must be at least `MIN_IMAGE_SIDE`.
pub fn decompose(img: &Image) -> Result<PfmSet, PfmError> {
    if img.h() < MIN_IMAGE_SIDE || img.w() < MIN_IMAGE_SIDE {
        return Err(PfmError::TooSmall { h: img.h(), w: img.w(), min: MIN_IMAGE_SIDE });
    }
    match img.color_space() {
        ColorSpace::Srgb => decompose_color(img),
        ColorSpace::Gray => decompose_gray(img),
    }
}
