//! Bicubic resampling and in-plane rotation.

use super::{to_u8, GrayImage};
use crate::error::{Error, Result};

/// Catmull-Rom cubic weight (a = -0.5).
#[inline]
fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// One separable pass: samples `src` along x with the given scale ratio.
fn cubic_pass(
    src_w: usize,
    src_h: usize,
    fetch: impl Fn(isize, usize) -> f64,
    out_w: usize,
    ratio: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; out_w * src_h];
    for ox in 0..out_w {
        let sx = (ox as f64 + 0.5) * ratio - 0.5;
        let ix = sx.floor() as isize;
        let t = sx - ix as f64;
        let weights = [cubic(t + 1.0), cubic(t), cubic(t - 1.0), cubic(t - 2.0)];
        for y in 0..src_h {
            let mut acc = 0.0;
            for (m, w) in weights.iter().enumerate() {
                let px = (ix + m as isize - 1).clamp(0, src_w as isize - 1);
                acc += w * fetch(px, y);
            }
            out[y * out_w + ox] = acc;
        }
    }
    out
}

/// Bicubic resize to explicit output dimensions, with edge-clamped borders.
/// Handles both shrinking and stretching, independently per axis.
pub fn resize_bicubic(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Geometry("resize target must be >= 1x1".into()));
    }
    let (w, h) = (img.width(), img.height());
    let rx = w as f64 / out_w as f64;
    let ry = h as f64 / out_h as f64;

    // Horizontal pass into a real-valued buffer, then vertical.
    let horiz = cubic_pass(w, h, |x, y| img.get(x as usize, y) as f64, out_w, rx);
    let vert = cubic_pass(
        h,
        out_w,
        |y, x| horiz[y.clamp(0, h as isize - 1) as usize * out_w + x],
        out_h,
        ry,
    );

    // `vert` is indexed [x * out_h + y] after the transposed pass.
    GrayImage::from_fn(out_w, out_h, |x, y| to_u8(vert[x * out_h + y]))
}

/// Uniform bicubic down-sampling by scale factor `sf >= 1`. Output dimensions
/// are `floor(width / sf) x floor(height / sf)` and must each be at least 8.
pub fn resample_bicubic(img: &GrayImage, sf: f64) -> Result<GrayImage> {
    if !(sf >= 1.0) || !sf.is_finite() {
        return Err(Error::Parameter(format!("scale factor must be >= 1, got {sf}")));
    }
    let out_w = (img.width() as f64 / sf).floor() as usize;
    let out_h = (img.height() as f64 / sf).floor() as usize;
    if out_w < 8 || out_h < 8 {
        return Err(Error::Parameter(format!(
            "down-sampled size {out_w}x{out_h} below 8x8"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let horiz = cubic_pass(w, h, |x, y| img.get(x as usize, y) as f64, out_w, sf);
    let vert = cubic_pass(
        h,
        out_w,
        |y, x| horiz[y.clamp(0, h as isize - 1) as usize * out_w + x],
        out_h,
        sf,
    );
    GrayImage::from_fn(out_w, out_h, |x, y| to_u8(vert[x * out_h + y]))
}

/// Rotates the image by `theta` degrees about its center, keeping the output
/// dimensions. Destination pixels are mapped back through the inverse
/// rotation and sampled bilinearly; pixels whose source falls outside the
/// image are 0.
///
/// A point at `(cx + d, cy)` lands at `(cx + d cos t, cy + d sin t)` in the
/// y-down pixel convention.
pub fn affine_rotate(img: &GrayImage, theta_deg: f64) -> Result<GrayImage> {
    if !theta_deg.is_finite() {
        return Err(Error::Parameter("rotation angle must be finite".into()));
    }
    let (w, h) = (img.width(), img.height());
    let (sin_t, cos_t) = theta_deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;

    GrayImage::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        // Inverse map: rotate the destination offset by -theta.
        let sx = cx + cos_t * dx + sin_t * dy;
        let sy = cy - sin_t * dx + cos_t * dy;
        if sx < 0.0 || sy < 0.0 || sx > (w - 1) as f64 || sy > (h - 1) as f64 {
            return 0;
        }
        let x0 = sx.floor() as usize;
        let y0 = sy.floor() as usize;
        let fx = sx - x0 as f64;
        let fy = sy - y0 as f64;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let v00 = img.get(x0, y0) as f64;
        let v10 = img.get(x1, y0) as f64;
        let v01 = img.get(x0, y1) as f64;
        let v11 = img.get(x1, y1) as f64;
        let top = v00 * (1.0 - fx) + v10 * fx;
        let bot = v01 * (1.0 - fx) + v11 * fx;
        to_u8(top * (1.0 - fy) + bot * fy)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn resample_identity_at_unit_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let img = GrayImage::from_fn(17, 12, |_, _| rng.random_range(0..=255)).unwrap();
        let out = resample_bicubic(&img, 1.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn resample_dimensions() {
        let img = GrayImage::filled(640, 480, 50).unwrap();
        let out = resample_bicubic(&img, 5.0).unwrap();
        assert_eq!((out.width(), out.height()), (128, 96));
    }

    #[test]
    fn resample_constant_stays_constant() {
        let img = GrayImage::filled(64, 48, 100).unwrap();
        for sf in [1.0, 1.5, 2.0, 3.7, 5.0] {
            let out = resample_bicubic(&img, sf).unwrap();
            assert!(out.data().iter().all(|&v| v == 100), "sf={sf}");
        }
    }

    #[test]
    fn resample_rejects_tiny_output() {
        let img = GrayImage::filled(64, 48, 0).unwrap();
        assert!(resample_bicubic(&img, 10.0).is_err());
        assert!(resample_bicubic(&img, 0.5).is_err());
    }

    #[test]
    fn resize_constant_and_roundtrip_dims() {
        let img = GrayImage::filled(30, 20, 77).unwrap();
        let out = resize_bicubic(&img, 50, 40).unwrap();
        assert_eq!((out.width(), out.height()), (50, 40));
        assert!(out.data().iter().all(|&v| v == 77));
    }

    #[test]
    fn rotate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let img = GrayImage::from_fn(23, 19, |_, _| rng.random_range(0..=255)).unwrap();
        let out = affine_rotate(&img, 0.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn rotate_back_and_forth_preserves_interior() {
        // Smooth image so bilinear resampling error stays small. Interior
        // pixels are those at least 5 px from the border that also stay in
        // frame under the rotation (the inscribed disk).
        let img = GrayImage::from_fn(41, 41, |x, y| {
            (100.0 + 60.0 * ((x as f64) / 9.0).sin() + 50.0 * ((y as f64) / 7.0).cos()) as u8
        })
        .unwrap();
        let there = affine_rotate(&img, 30.0).unwrap();
        let back = affine_rotate(&there, -30.0).unwrap();
        let mut checked = 0;
        for y in 5..36usize {
            for x in 5..36usize {
                let r2 = (x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2);
                if r2 > 14.0 * 14.0 {
                    continue;
                }
                let a = img.get(x, y) as i32;
                let b = back.get(x, y) as i32;
                assert!((a - b).abs() <= 3, "({x},{y}): {a} vs {b}");
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn rotate_point_by_ninety_degrees() {
        // Point feature right of center must land directly below center.
        let mut img = GrayImage::filled(41, 41, 0).unwrap();
        let (cx, cy) = (20usize, 20usize);
        img.set(cx + 10, cy, 255);
        let out = affine_rotate(&img, 90.0).unwrap();
        let mut best = (0, 0, 0u8);
        for y in 0..41 {
            for x in 0..41 {
                if out.get(x, y) > best.2 {
                    best = (x, y, out.get(x, y));
                }
            }
        }
        assert!(
            (best.0 as i64 - cx as i64).abs() <= 1 && (best.1 as i64 - (cy + 10) as i64).abs() <= 1,
            "feature landed at ({}, {})",
            best.0,
            best.1
        );
    }
}
