//! Perceptual decomposition of images into the four feature maps the
//! classifier consumes: opponent-color pairs (or intensity bands for
//! grayscale input) plus wavelet-derived lightness and surface maps.

mod color;
mod decompose;
mod wavelet;

pub use color::srgb_to_lab;
pub(crate) use color::lab_to_srgb;
pub use decompose::{decompose, luminance_parts};
pub use wavelet::{dwt2, idwt2, DetailBands, WaveletPyramid};

use crate::plane::Plane;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest side length the decomposition accepts; three dyadic halvings
/// must leave at least one approximation coefficient.
pub const MIN_IMAGE_SIDE: usize = 8;

#[derive(Debug, Error)]
pub enum PfmError {
    #[error("expected {expected} image plane(s), got {got}")]
    PlaneCount { expected: usize, got: usize },
    #[error("image planes have differing shapes")]
    PlaneShapeMismatch,
    #[error("pixel value {value} outside [0,1] in plane {plane}")]
    PixelRange { plane: usize, value: f32 },
    #[error("image is {h}x{w}; each side must be at least {min}")]
    TooSmall { h: usize, w: usize, min: usize },
    #[error("operation requires an {expected:?} image, got {got:?}")]
    ColorSpaceMismatch { expected: ColorSpace, got: ColorSpace },
    #[error("wavelet level count must be at least 1")]
    ZeroLevels,
    #[error("pyramid subband at level {level} is {got_h}x{got_w}, expected {want_h}x{want_w}")]
    PyramidShape { level: usize, want_h: usize, want_w: usize, got_h: usize, got_w: usize },
}

/// Interpretation of an image's sample planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    /// Three gamma-encoded planes in R, G, B order.
    Srgb,
    /// One intensity plane.
    Gray,
}

/// Decoded raster: unit-interval samples, one plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    color: ColorSpace,
    planes: Vec<Plane<f32>>,
}

impl Image {
    /// Validates plane count against `color`, equal shapes, and that every
    /// sample is finite and inside `[0,1]`.
    pub fn new(color: ColorSpace, planes: Vec<Plane<f32>>) -> Result<Self, PfmError> {
        let expected = match color {
            ColorSpace::Srgb => 3,
            ColorSpace::Gray => 1,
        };
        if planes.len() != expected {
            return Err(PfmError::PlaneCount { expected, got: planes.len() });
        }
        let (h, w) = (planes[0].h(), planes[0].w());
        for (i, p) in planes.iter().enumerate() {
            if (p.h(), p.w()) != (h, w) {
                return Err(PfmError::PlaneShapeMismatch);
            }
            for &v in p.data() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(PfmError::PixelRange { plane: i, value: v });
                }
            }
        }
        Ok(Image { color, planes })
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color
    }

    pub fn h(&self) -> usize {
        self.planes[0].h()
    }

    pub fn w(&self) -> usize {
        self.planes[0].w()
    }

    pub fn planes(&self) -> &[Plane<f32>] {
        &self.planes
    }

    pub fn plane(&self, i: usize) -> &Plane<f32> {
        &self.planes[i]
    }
}

/// Which four-map family a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PfmConfig {
    /// Green-red, blue-yellow, lightness, surface.
    Color,
    /// Low band, high band, lightness, surface.
    Gray,
}

impl PfmConfig {
    /// Map names in fixed order; also the component order of every profile
    /// and report column derived from this configuration.
    pub fn map_names(self) -> [&'static str; 4] {
        match self {
            PfmConfig::Color => ["gr", "by", "ld", "cf"],
            PfmConfig::Gray => ["band1", "band2", "ld", "cf"],
        }
    }

    pub fn for_color_space(space: ColorSpace) -> Self {
        match space {
            ColorSpace::Srgb => PfmConfig::Color,
            ColorSpace::Gray => PfmConfig::Gray,
        }
    }

    pub fn color_space(self) -> ColorSpace {
        match self {
            PfmConfig::Color => ColorSpace::Srgb,
            PfmConfig::Gray => ColorSpace::Gray,
        }
    }
}

/// One perceptual feature map: unit-interval plane plus its name.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub name: &'static str,
    pub plane: Plane<f32>,
}

/// The four maps for one image, in the order fixed by `PfmConfig`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmSet {
    pub config: PfmConfig,
    pub maps: [Pfm; 4],
}

impl PfmSet {
    pub fn h(&self) -> usize {
        self.maps[0].plane.h()
    }

    pub fn w(&self) -> usize {
        self.maps[0].plane.w()
    }
}
