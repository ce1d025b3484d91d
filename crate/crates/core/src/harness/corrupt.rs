//! Graded image corruption: separable Gaussian blur plus additive noise.

use super::HarnessError;
use crate::pfm::Image;
use crate::plane::Plane;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// One rung of the corruption ladder. Zero in both fields means identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionLevel {
    pub blur_sigma: f64,
    /// Standard deviation of the additive pixel noise, in unit-interval
    /// sample units.
    pub noise_sigma: f64,
}

impl CorruptionLevel {
    pub fn identity() -> Self {
        CorruptionLevel { blur_sigma: 0.0, noise_sigma: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.blur_sigma == 0.0 && self.noise_sigma == 0.0
    }
}

/// Five rungs from untouched to visibly degraded.
pub fn default_ladder() -> Vec<CorruptionLevel> {
    vec![
        CorruptionLevel::identity(),
        CorruptionLevel { blur_sigma: 0.8, noise_sigma: 0.02 },
        CorruptionLevel { blur_sigma: 1.6, noise_sigma: 0.05 },
        CorruptionLevel { blur_sigma: 2.4, noise_sigma: 0.08 },
        CorruptionLevel { blur_sigma: 3.2, noise_sigma: 0.12 },
    ]
}

/// Discrete Gaussian taps out to three sigma, adjusted at the center so the
/// weights sum to exactly one; a constant plane then blurs to itself.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> =
        (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    let residual: f64 = 1.0 - taps.iter().sum::<f64>();
    taps[radius as usize] += residual;
    taps
}

fn convolve_rows(src: &Plane<f64>, taps: &[f64]) -> Plane<f64> {
    let (h, w) = (src.h(), src.w());
    let radius = (taps.len() / 2) as i64;
    let mut out = Plane::filled(h, w, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sx = (x as i64 + k as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += t * src.at(y, sx);
            }
            out.set(y, x, acc);
        }
    }
    out
}

fn transpose(src: &Plane<f64>) -> Plane<f64> {
    let mut out = Plane::filled(src.w(), src.h(), 0.0);
    for y in 0..src.h() {
        for x in 0..src.w() {
            out.set(x, y, src.at(y, x));
        }
    }
    out
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma == 0` returns
/// the image unchanged.
pub fn gaussian_blur(image: &Image, sigma: f64) -> Image {
    assert!(sigma.is_finite() && sigma >= 0.0, "blur sigma must be finite and >= 0");
    if sigma == 0.0 {
        return image.clone();
    }
    let taps = gaussian_kernel(sigma);
    let planes = image
        .planes()
        .iter()
        .map(|p| {
            let wide = p.map(|v| v as f64);
            let blurred = transpose(&convolve_rows(&transpose(&convolve_rows(&wide, &taps)), &taps));
            blurred.map(|v| v.clamp(0.0, 1.0) as f32)
        })
        .collect();
    Image::new(image.color_space(), planes).expect("blur preserves shape and range")
}

fn add_noise(image: &Image, sigma: f64, rng: &mut ChaCha8Rng) -> Image {
    let normal = Normal::new(0.0, sigma).expect("sigma checked by caller");
    let planes = image
        .planes()
        .iter()
        .map(|p| {
            let data = p
                .data()
                .iter()
                .map(|&v| (f64::from(v) + normal.sample(rng)).clamp(0.0, 1.0) as f32)
                .collect();
            Plane::from_vec(p.h(), p.w(), data)
        })
        .collect();
    Image::new(image.color_space(), planes).expect("noise is clamped to range")
}

/// Applies every ladder level to every image. Entry `[l][i]` is image `i`
/// under level `l`; level 0 must be the identity and reproduces the inputs
/// bit for bit. Noise is seeded per (level, image), so any sub-slice of a
/// run equals the full run on those images.
pub fn corruption_ladder(
    images: &[Image],
    levels: &[CorruptionLevel],
    seed: u64,
) -> Result<Vec<Vec<Image>>, HarnessError> {
    if levels.is_empty() {
        return Err(HarnessError::InvalidConfig("corruption ladder has no levels".into()));
    }
    if !levels[0].is_identity() {
        return Err(HarnessError::InvalidConfig(
            "ladder level 0 must be the identity (zero blur, zero noise)".into(),
        ));
    }
    for (i, level) in levels.iter().enumerate() {
        for (name, v) in [("blur_sigma", level.blur_sigma), ("noise_sigma", level.noise_sigma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(HarnessError::InvalidConfig(format!(
                    "level {i}: {name} must be finite and >= 0, got {v}"
                )));
            }
        }
    }
    let mut out = Vec::with_capacity(levels.len());
    for (li, level) in levels.iter().enumerate() {
        let mut row = Vec::with_capacity(images.len());
        for (ii, image) in images.iter().enumerate() {
            let corrupted = if level.is_identity() {
                image.clone()
            } else {
                let blurred = gaussian_blur(image, level.blur_sigma);
                if level.noise_sigma > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((li as u64) << 32) | ii as u64);
                    add_noise(&blurred, level.noise_sigma, &mut rng)
                } else {
                    blurred
                }
            };
            row.push(corrupted);
        }
        out.push(row);
    }
    Ok(out)
}
