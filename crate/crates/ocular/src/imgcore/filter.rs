//! Convolution, grayscale morphology, local statistics, and gamma mapping.

use super::{round_half_up, to_u8, GrayImage, Kernel};
use crate::error::{Error, Result};

/// Signed 16-bit response raster produced by [`convolve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    width: usize,
    height: usize,
    data: Vec<i16>,
}

impl Response {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[i16] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i16 {
        self.data[y * self.width + x]
    }

    /// Clamps responses into the 8-bit range.
    pub fn to_gray_saturating(&self) -> GrayImage {
        let data = self.data.iter().map(|&v| v.clamp(0, 255) as u8).collect();
        GrayImage::new(self.width, self.height, data).expect("same shape")
    }
}

/// Convolves the image with `k`, clamping at the border:
/// `response(x,y) = sum k(u,v) * i(x-u, y-v)`.
///
/// Raw responses are rounded half away from zero and saturated to i16. With
/// `normalize` set, the real-valued response is instead mapped linearly onto
/// `[0, 255]` (a constant response maps to all zeros).
pub fn convolve(img: &GrayImage, k: &Kernel, normalize: bool) -> Result<Response> {
    let (w, h) = (img.width(), img.height());
    if k.size() > w || k.size() > h {
        return Err(Error::Geometry(format!(
            "kernel {0}x{0} larger than image {w}x{h}",
            k.size()
        )));
    }
    let r = (k.size() / 2) as isize;
    let (coeffs, divisor) = k.raw();
    let n = k.size() as isize;

    let mut real = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for v in -r..=r {
                for u in -r..=r {
                    let c = coeffs[((v + r) * n + (u + r)) as usize];
                    acc += c * img.get_clamped(x - u, y - v) as f64;
                }
            }
            real[y as usize * w + x as usize] = acc / divisor;
        }
    }

    let data: Vec<i16> = if normalize {
        let lo = real.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            vec![0; w * h]
        } else {
            real.iter()
                .map(|&v| round_half_up((v - lo) / (hi - lo) * 255.0) as i16)
                .collect()
        }
    } else {
        real.iter()
            .map(|&v| {
                let r = if v >= 0.0 {
                    (v + 0.5).floor()
                } else {
                    (v - 0.5).ceil()
                };
                r.clamp(i16::MIN as f64, i16::MAX as f64) as i16
            })
            .collect()
    };
    Ok(Response {
        width: w,
        height: h,
        data,
    })
}

/// Flat-disk grayscale morphology operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    /// Neighborhood minimum.
    Erode,
    /// Neighborhood maximum.
    Dilate,
    /// Erosion followed by dilation with the same element.
    Open,
}

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn morph_pass(img: &GrayImage, offsets: &[(isize, isize)], take_max: bool) -> GrayImage {
    let (w, h) = (img.width() as isize, img.height() as isize);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut best = if take_max { u8::MIN } else { u8::MAX };
        for &(dx, dy) in offsets {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let v = img.get(nx as usize, ny as usize);
            best = if take_max { best.max(v) } else { best.min(v) };
        }
        best
    })
    .expect("same shape")
}

/// Grayscale morphology with a flat disk `{(dx,dy): dx^2+dy^2 <= r^2}`.
/// Pixels outside the image are ignored by the min/max.
pub fn morph(img: &GrayImage, op: MorphOp, radius: usize) -> Result<GrayImage> {
    if radius == 0 {
        return Err(Error::Parameter("structuring radius must be >= 1".into()));
    }
    let offsets = disk_offsets(radius);
    Ok(match op {
        MorphOp::Erode => morph_pass(img, &offsets, false),
        MorphOp::Dilate => morph_pass(img, &offsets, true),
        MorphOp::Open => {
            let eroded = morph_pass(img, &offsets, false);
            morph_pass(&eroded, &offsets, true)
        }
    })
}

/// Per-pixel population standard deviation of the 3x3 neighborhood
/// (edge-clamped), normalized by the global maximum onto `[0, 255]`.
/// An all-constant image maps to all zeros.
pub fn local_stddev(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut sigma = vec![0.0f64; w * h];
    let mut max_sigma = 0.0f64;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut vals = [0.0f64; 9];
            let mut i = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    vals[i] = img.get_clamped(x + dx, y + dy) as f64;
                    i += 1;
                }
            }
            let mean = vals.iter().sum::<f64>() / 9.0;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0;
            let s = var.sqrt();
            sigma[y as usize * w + x as usize] = s;
            max_sigma = max_sigma.max(s);
        }
    }
    if max_sigma == 0.0 {
        return GrayImage::filled(w, h, 0).expect("valid shape");
    }
    GrayImage::from_fn(w, h, |x, y| to_u8(255.0 * sigma[y * w + x] / max_sigma))
        .expect("same shape")
}

/// Power-law intensity mapping `out = round(255 * (in/255)^gamma)`.
/// Gamma must lie in `[0.1, 10]`; gamma = 1 is the identity.
pub fn gamma_correct(img: &GrayImage, gamma: f64) -> Result<GrayImage> {
    if !(0.1..=10.0).contains(&gamma) {
        return Err(Error::Parameter(format!(
            "gamma must be in [0.1, 10], got {gamma}"
        )));
    }
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = to_u8(255.0 * (v as f64 / 255.0).powf(gamma));
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| lut[img.get(x, y) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let img = GrayImage::from_fn(9, 9, |_, _| rng.random_range(0..=255)).unwrap();
        let out = convolve(&img, &Kernel::identity(), false).unwrap();
        for y in 0..9 {
            for x in 0..9 {
                assert_eq!(out.get(x, y), img.get(x, y) as i16);
            }
        }
    }

    #[test]
    fn zero_sum_masks_vanish_on_constant() {
        let img = GrayImage::filled(12, 12, 137).unwrap();
        for k in [Kernel::laplacian_5x5(), Kernel::sobel_x(), Kernel::sobel_y()] {
            let out = convolve(&img, &k, false).unwrap();
            assert!(out.data().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn gaussian_preserves_constant() {
        for c in [0u8, 1, 100, 200, 255] {
            let img = GrayImage::filled(10, 10, c).unwrap();
            let out = convolve(&img, &Kernel::gaussian_5x5(), false).unwrap();
            assert!(out.data().iter().all(|&v| v == c as i16), "c={c}");
        }
    }

    #[test]
    fn kernel_larger_than_image_is_an_error() {
        let img = GrayImage::filled(3, 3, 0).unwrap();
        assert!(convolve(&img, &Kernel::gaussian_5x5(), false).is_err());
    }

    #[test]
    fn open_leaves_constant_unchanged() {
        let img = GrayImage::filled(16, 16, 42).unwrap();
        let out = morph(&img, MorphOp::Open, 3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn open_removes_small_bright_speck() {
        let mut img = GrayImage::filled(40, 40, 30).unwrap();
        for dy in 0..3 {
            for dx in 0..3 {
                img.set(18 + dx, 18 + dy, 250);
            }
        }
        let out = morph(&img, MorphOp::Open, 10).unwrap();
        assert!(out.data().iter().all(|&v| v <= 31));
    }

    proptest! {
        #[test]
        fn open_is_idempotent_and_bounded(seed in 0u64..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::from_fn(14, 14, |_, _| rng.random_range(0..=255)).unwrap();
            let once = morph(&img, MorphOp::Open, 2).unwrap();
            let twice = morph(&once, MorphOp::Open, 2).unwrap();
            prop_assert_eq!(&once, &twice);

            let er = morph(&img, MorphOp::Erode, 2).unwrap();
            let di = morph(&img, MorphOp::Dilate, 2).unwrap();
            for i in 0..img.data().len() {
                prop_assert!(er.data()[i] <= img.data()[i]);
                prop_assert!(img.data()[i] <= di.data()[i]);
                // Opening is anti-extensive.
                prop_assert!(once.data()[i] <= img.data()[i]);
            }
        }
    }

    #[test]
    fn local_stddev_constant_is_zero() {
        let img = GrayImage::filled(8, 8, 99).unwrap();
        let out = local_stddev(&img);
        assert!(out.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn local_stddev_peaks_on_step_boundary() {
        let img = GrayImage::from_fn(16, 8, |x, _| if x < 8 { 0 } else { 255 }).unwrap();
        let out = local_stddev(&img);
        // Strongest response right at the step columns.
        let best_col = (0..16)
            .max_by_key(|&x| (0..8).map(|y| out.get(x, y) as u32).sum::<u32>())
            .unwrap();
        assert!(best_col == 7 || best_col == 8, "best column {best_col}");
        assert_eq!(out.get(7, 4), 255);
    }

    #[test]
    fn local_stddev_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let img = GrayImage::from_fn(8, 8, |_, _| rng.random_range(0..=255)).unwrap();
        let out = local_stddev(&img);
        // Direct recomputation of the neighborhood statistics.
        let mut sig = vec![0.0; 64];
        for y in 0..8isize {
            for x in 0..8isize {
                let mut vs = Vec::new();
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        vs.push(img.get_clamped(x + dx, y + dy) as f64);
                    }
                }
                let m = vs.iter().sum::<f64>() / 9.0;
                sig[(y * 8 + x) as usize] =
                    (vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0).sqrt();
            }
        }
        let mx = sig.iter().cloned().fold(0.0, f64::max);
        for i in 0..64 {
            let expect = (255.0 * sig[i] / mx + 0.5).floor() as u8;
            assert_eq!(out.data()[i], expect);
        }
    }

    #[test]
    fn gamma_identity_and_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let img = GrayImage::from_fn(6, 6, |_, _| rng.random_range(0..=255)).unwrap();
        assert_eq!(gamma_correct(&img, 1.0).unwrap(), img);
        for gamma in [0.1, 0.5, 2.0, 10.0] {
            let ends = GrayImage::new(2, 1, vec![0, 255]).unwrap();
            let out = gamma_correct(&ends, gamma).unwrap();
            assert_eq!(out.data(), &[0, 255]);
        }
        assert!(gamma_correct(&img, 0.05).is_err());
    }

    #[test]
    fn gamma_half_on_sixty_four() {
        let img = GrayImage::new(1, 1, vec![64]).unwrap();
        let out = gamma_correct(&img, 0.5).unwrap();
        assert_eq!(out.data()[0], 128);
    }
}
