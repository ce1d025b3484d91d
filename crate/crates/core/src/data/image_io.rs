//! PNG decoding into unit-interval planes, bilinear resizing, and encoding.

use super::DataError;
use crate::pfm::{ColorSpace, Image, PfmError, MIN_IMAGE_SIDE};
use crate::plane::Plane;
use image::{DynamicImage, ImageFormat, ImageReader};
use std::path::Path;

fn image_err(path: &Path, e: image::ImageError) -> DataError {
    match e {
        image::ImageError::IoError(io) => DataError::io(path, io),
        other => DataError::format(path, other.to_string()),
    }
}

/// Decodes an 8-bit PNG into `want`'s plane layout, dropping any alpha
/// channel, and resizes to `target` (height, width) when given.
///
/// Only PNG is accepted, and only 8-bit grayscale, grayscale+alpha, RGB, and
/// RGBA layouts. A grayscale file cannot satisfy an RGB run or vice versa;
/// channel-count conversion is never performed silently.
pub fn load_image(
    path: &Path,
    want: ColorSpace,
    target: Option<(usize, usize)>,
) -> Result<Image, DataError> {
    let reader = ImageReader::open(path)
        .map_err(|e| DataError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| DataError::io(path, e))?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(DataError::UnsupportedImage {
            path: path.display().to_string(),
            msg: "only PNG files are supported".into(),
        });
    }
    let decoded = reader.decode().map_err(|e| image_err(path, e))?;
    let mismatch = |got: ColorSpace| DataError::ModalityMismatch {
        path: path.display().to_string(),
        want,
        got,
    };
    let (h, w) = (decoded.height() as usize, decoded.width() as usize);
    let mut planes: Vec<Plane<f32>> = match (&decoded, want) {
        (DynamicImage::ImageRgb8(img), ColorSpace::Srgb) => {
            let mut chans = vec![Vec::with_capacity(h * w); 3];
            for px in img.pixels() {
                for c in 0..3 {
                    chans[c].push(px.0[c] as f32 / 255.0);
                }
            }
            chans.into_iter().map(|d| Plane::from_vec(h, w, d)).collect()
        }
        (DynamicImage::ImageRgba8(img), ColorSpace::Srgb) => {
            let mut chans = vec![Vec::with_capacity(h * w); 3];
            for px in img.pixels() {
                for c in 0..3 {
                    chans[c].push(px.0[c] as f32 / 255.0);
                }
            }
            chans.into_iter().map(|d| Plane::from_vec(h, w, d)).collect()
        }
        (DynamicImage::ImageLuma8(img), ColorSpace::Gray) => {
            let data = img.pixels().map(|px| px.0[0] as f32 / 255.0).collect();
            vec![Plane::from_vec(h, w, data)]
        }
        (DynamicImage::ImageLumaA8(img), ColorSpace::Gray) => {
            let data = img.pixels().map(|px| px.0[0] as f32 / 255.0).collect();
            vec![Plane::from_vec(h, w, data)]
        }
        (DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_), ColorSpace::Gray) => {
            return Err(mismatch(ColorSpace::Srgb));
        }
        (DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_), ColorSpace::Srgb) => {
            return Err(mismatch(ColorSpace::Gray));
        }
        _ => {
            return Err(DataError::UnsupportedImage {
                path: path.display().to_string(),
                msg: format!(
                    "unsupported sample layout {:?}, expected 8-bit gray, gray+alpha, RGB, or RGBA",
                    decoded.color()
                ),
            });
        }
    };
    if let Some((th, tw)) = target {
        if (th, tw) != (h, w) {
            planes = planes.iter().map(|p| resize_bilinear(p, th, tw)).collect();
        }
    }
    // Everything downstream decomposes the image, which needs this margin,
    // so an undersized load fails here instead of deep in a pipeline.
    let (fh, fw) = (planes[0].h(), planes[0].w());
    if fh < MIN_IMAGE_SIDE || fw < MIN_IMAGE_SIDE {
        return Err(DataError::UnsupportedImage {
            path: path.display().to_string(),
            msg: PfmError::TooSmall { h: fh, w: fw, min: MIN_IMAGE_SIDE }.to_string(),
        });
    }
    Image::new(want, planes).map_err(|e| DataError::UnsupportedImage {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Bilinear resampling with half-pixel-aligned centers and clamp-to-edge
/// borders. Output samples are convex combinations of input samples, so a
/// unit-interval plane stays in the unit interval.
pub fn resize_bilinear(src: &Plane<f32>, oh: usize, ow: usize) -> Plane<f32> {
    assert!(oh > 0 && ow > 0, "target size must be positive");
    let (sh, sw) = (src.h(), src.w());
    if (sh, sw) == (oh, ow) {
        return src.clone();
    }
    // Source coordinate of an output center, in f64 so the lerp weights do
    // not accumulate f32 grid error.
    let coord = |i: usize, scale: f64| (i as f64 + 0.5) * scale - 0.5;
    let (sy, sx) = (sh as f64 / oh as f64, sw as f64 / ow as f64);
    let mut out = Plane::filled(oh, ow, 0.0f32);
    for y in 0..oh {
        let fy = coord(y, sy);
        let y0 = fy.floor();
        let ty = fy - y0;
        let y0c = (y0.max(0.0) as usize).min(sh - 1);
        let y1c = ((y0 + 1.0).max(0.0) as usize).min(sh - 1);
        for x in 0..ow {
            let fx = coord(x, sx);
            let x0 = fx.floor();
            let tx = fx - x0;
            let x0c = (x0.max(0.0) as usize).min(sw - 1);
            let x1c = ((x0 + 1.0).max(0.0) as usize).min(sw - 1);
            let top = src.at(y0c, x0c) as f64 * (1.0 - tx) + src.at(y0c, x1c) as f64 * tx;
            let bot = src.at(y1c, x0c) as f64 * (1.0 - tx) + src.at(y1c, x1c) as f64 * tx;
            out.set(y, x, (top * (1.0 - ty) + bot * ty) as f32);
        }
    }
    out
}

/// Encodes an image as an 8-bit PNG, rounding each unit-interval sample to
/// the nearest of 256 levels.
pub fn save_png(image: &Image, path: &Path) -> Result<(), DataError> {
    let quant = |v: f32| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let (h, w) = (image.h() as u32, image.w() as u32);
    match image.color_space() {
        ColorSpace::Srgb => {
            let mut buf = image::RgbImage::new(w, h);
            for y in 0..image.h() {
                for x in 0..image.w() {
                    let px = [
                        quant(image.plane(0).at(y, x)),
                        quant(image.plane(1).at(y, x)),
                        quant(image.plane(2).at(y, x)),
                    ];
                    buf.put_pixel(x as u32, y as u32, image::Rgb(px));
                }
            }
            buf.save_with_format(path, ImageFormat::Png)
        }
        ColorSpace::Gray => {
            let mut buf = image::GrayImage::new(w, h);
            for y in 0..image.h() {
                for x in 0..image.w() {
                    buf.put_pixel(x as u32, y as u32, image::Luma([quant(image.plane(0).at(y, x))]));
                }
            }
            buf.save_with_format(path, ImageFormat::Png)
        }
    }
    .map_err(|e| image_err(path, e))
}
