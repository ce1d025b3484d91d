//! sRGB to CIELAB conversion (D65 reference white).

use super::{ColorSpace, Image, PfmError};
use crate::plane::Plane;

/// Linear-light RGB to XYZ under D65. The reference white is taken as the
/// row sums of this matrix, so neutral inputs (R = G = B) land on a = b = 0
/// exactly rather than within rounding distance of it.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

fn white_point() -> [f64; 3] {
    [
        RGB_TO_XYZ[0].iter().sum(),
        RGB_TO_XYZ[1].iter().sum(),
        RGB_TO_XYZ[2].iter().sum(),
    ]
}

fn linearize(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn delinearize(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Forward component function of the L*a*b* encoding.
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(ft: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if ft > DELTA {
        ft * ft * ft
    } else {
        3.0 * DELTA * DELTA * (ft - 4.0 / 29.0)
    }
}

fn pixel_to_lab(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let (rl, gl, bl) = (linearize(r), linearize(g), linearize(b));
    let wp = white_point();
    let x = RGB_TO_XYZ[0][0] * rl + RGB_TO_XYZ[0][1] * gl + RGB_TO_XYZ[0][2] * bl;
    let y = RGB_TO_XYZ[1][0] * rl + RGB_TO_XYZ[1][1] * gl + RGB_TO_XYZ[1][2] * bl;
    let z = RGB_TO_XYZ[2][0] * rl + RGB_TO_XYZ[2][1] * gl + RGB_TO_XYZ[2][2] * bl;
    let (fx, fy, fz) = (lab_f(x / wp[0]), lab_f(y / wp[1]), lab_f(z / wp[2]));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Converts an sRGB image to its L*, a*, b* planes.
///
/// L* spans [0, 100]; a* and b* are signed opponent axes. Neutral pixels map
/// to a* = b* = 0 exactly.
pub fn srgb_to_lab(img: &Image) -> Result<(Plane<f64>, Plane<f64>, Plane<f64>), PfmError> {
    if img.color_space() != ColorSpace::Srgb {
        return Err(PfmError::ColorSpaceMismatch {
            expected: ColorSpace::Srgb,
            got: img.color_space(),
        });
    }
    let (h, w) = (img.h(), img.w());
    let mut l = Plane::filled(h, w, 0.0);
    let mut a = Plane::filled(h, w, 0.0);
    let mut b = Plane::filled(h, w, 0.0);
    let (rp, gp, bp) = (img.plane(0), img.plane(1), img.plane(2));
    for y in 0..h {
        for x in 0..w {
            let (lv, av, bv) =
                pixel_to_lab(rp.at(y, x) as f64, gp.at(y, x) as f64, bp.at(y, x) as f64);
            l.set(y, x, lv);
            a.set(y, x, av);
            b.set(y, x, bv);
        }
    }
    Ok((l, a, b))
}

/// Inverse conversion for one pixel, clamped to the sRGB gamut. Uses the
/// numeric inverse of `RGB_TO_XYZ` so round trips agree to machine precision.
pub(crate) fn lab_to_srgb(l: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let wp = white_point();
    let (x, y, z) = (wp[0] * lab_f_inv(fx), wp[1] * lab_f_inv(fy), wp[2] * lab_f_inv(fz));
    let inv = invert3(RGB_TO_XYZ);
    let rl = inv[0][0] * x + inv[0][1] * y + inv[0][2] * z;
    let gl = inv[1][0] * x + inv[1][1] * y + inv[1][2] * z;
    let bl = inv[2][0] * x + inv[2][1] * y + inv[2][2] * z;
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    (clamp(delinearize(rl.max(0.0))), clamp(delinearize(gl.max(0.0))), clamp(delinearize(bl.max(0.0))))
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 1, 2, 2) / det, c(0, 2, 2, 1) / det, c(0, 1, 1, 2) / det],
        [c(1, 2, 2, 0) / det, c(0, 0, 2, 2) / det, c(0, 2, 1, 0) / det],
        [c(1, 0, 2, 1) / det, c(0, 1, 2, 0) / det, c(0, 0, 1, 1) / det],
    ]
}
