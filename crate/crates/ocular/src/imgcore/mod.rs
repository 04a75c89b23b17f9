//! Raster primitives and pixel-level algorithms shared by every detector in
//! the crate: integral images, resampling, rotation, convolution, morphology,
//! connected components, distance transforms.
//!
//! Coordinates follow the scan convention: `x` grows rightward, `y` grows
//! downward, origin at the top-left pixel. All types are immutable values
//! after construction and every operation here is a pure function.

mod filter;
mod pgm;
mod regions;
mod resample;

pub use filter::{convolve, gamma_correct, local_stddev, morph, MorphOp, Response};
pub use pgm::{load_pgm, read_pgm, save_pgm, write_pgm};
pub use regions::{
    connected_components, dilate3x3, distance_transform, Component, DistanceMap, DistanceMetric,
};
pub use resample::{affine_rotate, resample_bicubic, resize_bicubic};

use crate::error::{Error, Result};

/// 8-bit single-channel raster, the universal pixel container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    /// Wraps row-major intensities. The buffer length must be exactly
    /// `width * height` and both dimensions must be at least 1.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Geometry(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Constant-intensity image.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Intensity at `(x, y)`. Panics if out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    /// Intensity with coordinates clamped to the image border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// Copies out the sub-image covered by `rect`.
    pub fn crop(&self, rect: Rect) -> Result<Self> {
        if !rect.fits(self.width, self.height) {
            return Err(Error::Bounds(format!(
                "crop {rect:?} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(rect.w * rect.h);
        for y in rect.y..rect.y + rect.h {
            let row = &self.data[y * self.width + rect.x..y * self.width + rect.x + rect.w];
            data.extend_from_slice(row);
        }
        GrayImage::new(rect.w, rect.h, data)
    }

    /// Mean intensity as a real number.
    pub fn mean(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| v as u64).sum();
        sum as f64 / self.data.len() as f64
    }

    pub fn min_max(&self) -> (u8, u8) {
        let mut lo = u8::MAX;
        let mut hi = u8::MIN;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// 0/1 raster with the same shape rules as [`GrayImage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    /// Wraps a row-major 0/1 buffer.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Geometry(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::Geometry("binary image holds values > 1".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn blank(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y) as u8);
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b == 1).count()
    }
}

/// Axis-aligned rectangle: top-left corner plus size, both in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    /// Both sides must be at least 1 pixel.
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Geometry(format!(
                "rect sides must be >= 1, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    /// One past the rightmost column.
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    /// One past the bottom row.
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// True when the rect lies fully inside a `width x height` image.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    /// Intersection-over-union with another rect.
    pub fn iou(&self, other: &Rect) -> f64 {
        let ix0 = self.x.max(other.x);
        let iy0 = self.y.max(other.y);
        let ix1 = self.right().min(other.right());
        let iy1 = self.bottom().min(other.bottom());
        if ix1 <= ix0 || iy1 <= iy0 {
            return 0.0;
        }
        let inter = ((ix1 - ix0) * (iy1 - iy0)) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        inter / union
    }
}

/// Summed-area table over a [`GrayImage`] with 64-bit accumulation.
///
/// Entry `(x, y)` holds the sum of all intensities in the inclusive rectangle
/// from the origin to `(x, y)`, so values are non-decreasing along every row
/// and column.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    data: Vec<u64>,
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Cumulative sum at `(x, y)`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }
}

/// Builds the summed-area table in a single pass using the recurrence
/// `I(x,y) = i(x,y) + I(x-1,y) + I(x,y-1) - I(x-1,y-1)` with out-of-range
/// terms taken as zero. Arithmetic is exact for any 8-bit image up to
/// 65535x65535.
pub fn integral_image(img: &GrayImage) -> IntegralImage {
    integral_of(img, |v| v as u64)
}

/// Summed-area table of squared intensities, used to normalize window
/// statistics in the detector.
pub fn integral_image_squared(img: &GrayImage) -> IntegralImage {
    integral_of(img, |v| (v as u64) * (v as u64))
}

fn integral_of(img: &GrayImage, f: impl Fn(u8) -> u64) -> IntegralImage {
    let (w, h) = (img.width(), img.height());
    let mut data = vec![0u64; w * h];
    for y in 0..h {
        let mut row_sum = 0u64;
        for x in 0..w {
            row_sum += f(img.get(x, y));
            let above = if y > 0 { data[(y - 1) * w + x] } else { 0 };
            data[y * w + x] = row_sum + above;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        data,
    }
}

/// Sum of the original intensities inside `r`, looked up with four table
/// accesses. Returns a bounds error when the rect does not fit in the image.
pub fn rect_sum(ii: &IntegralImage, r: Rect) -> Result<u64> {
    if !r.fits(ii.width, ii.height) {
        return Err(Error::Bounds(format!(
            "rect {r:?} outside {}x{}",
            ii.width, ii.height
        )));
    }
    let br = ii.at(r.x + r.w - 1, r.y + r.h - 1);
    let tr = if r.y > 0 {
        ii.at(r.x + r.w - 1, r.y - 1)
    } else {
        0
    };
    let bl = if r.x > 0 {
        ii.at(r.x - 1, r.y + r.h - 1)
    } else {
        0
    };
    let tl = if r.x > 0 && r.y > 0 {
        ii.at(r.x - 1, r.y - 1)
    } else {
        0
    };
    Ok(br + tl - tr - bl)
}

/// Square convolution kernel with real coefficients.
///
/// Coefficients are stored as `coeffs[i] / divisor` so that kernels defined
/// as integer matrices over a common denominator keep exact coefficient
/// sums: a zero-sum integer mask sums to exactly 0 and the smoothing mask
/// below sums to exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    coeffs: Vec<f64>,
    divisor: f64,
}

impl Kernel {
    /// Row-major coefficients with divisor 1. Side length must be odd and
    /// match the buffer.
    pub fn new(size: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_divisor(size, coeffs, 1.0)
    }

    pub fn with_divisor(size: usize, coeffs: Vec<f64>, divisor: f64) -> Result<Self> {
        if size % 2 == 0 || size == 0 {
            return Err(Error::Parameter(format!(
                "kernel side must be odd, got {size}"
            )));
        }
        if coeffs.len() != size * size {
            return Err(Error::Geometry(format!(
                "kernel buffer length {} does not match {size}x{size}",
                coeffs.len()
            )));
        }
        if divisor == 0.0 || !divisor.is_finite() {
            return Err(Error::Parameter("kernel divisor must be finite non-zero".into()));
        }
        Ok(Self {
            size,
            coeffs,
            divisor,
        })
    }

    /// 5x5 Gaussian smoothing mask over denominator 159; sums to exactly 1.
    pub fn gaussian_5x5() -> Self {
        #[rustfmt::skip]
        let m = [
            2.0, 4.0, 5.0, 4.0, 2.0,
            4.0, 9.0, 12.0, 9.0, 4.0,
            5.0, 12.0, 15.0, 12.0, 5.0,
            4.0, 9.0, 12.0, 9.0, 4.0,
            2.0, 4.0, 5.0, 4.0, 2.0,
        ];
        Self::with_divisor(5, m.to_vec(), 159.0).expect("static kernel")
    }

    /// 5x5 sharpening Laplacian: 24 at the center, -1 elsewhere; sums to 0.
    pub fn laplacian_5x5() -> Self {
        let mut m = vec![-1.0; 25];
        m[12] = 24.0;
        Self::new(5, m).expect("static kernel")
    }

    /// Horizontal first-derivative mask.
    pub fn sobel_x() -> Self {
        #[rustfmt::skip]
        let m = [
            1.0, 0.0, -1.0,
            2.0, 0.0, -2.0,
            1.0, 0.0, -1.0,
        ];
        Self::new(3, m.to_vec()).expect("static kernel")
    }

    /// Vertical first-derivative mask.
    pub fn sobel_y() -> Self {
        #[rustfmt::skip]
        let m = [
            1.0, 2.0, 1.0,
            0.0, 0.0, 0.0,
            -1.0, -2.0, -1.0,
        ];
        Self::new(3, m.to_vec()).expect("static kernel")
    }

    /// Single-coefficient identity kernel.
    pub fn identity() -> Self {
        Self::new(1, vec![1.0]).expect("static kernel")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Effective coefficient at row-major index, i.e. `coeffs[i] / divisor`.
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.coeffs[row * self.size + col] / self.divisor
    }

    /// Exact sum of the effective coefficients.
    pub fn coefficient_sum(&self) -> f64 {
        let raw: f64 = self.coeffs.iter().sum();
        raw / self.divisor
    }

    pub(crate) fn raw(&self) -> (&[f64], f64) {
        (&self.coeffs, self.divisor)
    }
}

/// Rounds half away from zero; inputs here are always non-negative.
#[inline]
pub(crate) fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Clamps to the 8-bit range after half-up rounding.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    round_half_up(v.clamp(0.0, 255.0)) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force double summation, the oracle for the summed-area table.
    fn brute_sum(img: &GrayImage, x1: usize, y1: usize) -> u64 {
        let mut s = 0u64;
        for y in 0..=y1 {
            for x in 0..=x1 {
                s += img.get(x, y) as u64;
            }
        }
        s
    }

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.random_range(0..=255)).unwrap()
    }

    #[test]
    fn integral_all_ones() {
        let img = GrayImage::filled(3, 3, 1).unwrap();
        let ii = integral_image(&img);
        assert_eq!(ii.at(2, 2), 9);
        assert_eq!(ii.at(0, 0), 1);
        assert_eq!(ii.at(2, 0), 3);
    }

    #[test]
    fn integral_single_pixel() {
        let mut img = GrayImage::filled(4, 4, 0).unwrap();
        img.set(0, 0, 5);
        let ii = integral_image(&img);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(ii.at(x, y), 5);
            }
        }
    }

    #[test]
    fn integral_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let img = random_image(&mut rng, 16, 16);
            let ii = integral_image(&img);
            for y in 0..16 {
                for x in 0..16 {
                    assert_eq!(ii.at(x, y), brute_sum(&img, x, y));
                }
            }
        }
    }

    #[test]
    fn integral_monotone_along_rows_and_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let img = random_image(&mut rng, 20, 14);
        let ii = integral_image(&img);
        for y in 0..14 {
            for x in 1..20 {
                assert!(ii.at(x, y) >= ii.at(x - 1, y));
            }
        }
        for x in 0..20 {
            for y in 1..14 {
                assert!(ii.at(x, y) >= ii.at(x, y - 1));
            }
        }
    }

    #[test]
    fn rect_sum_full_and_single() {
        let img = GrayImage::filled(4, 4, 1).unwrap();
        let ii = integral_image(&img);
        assert_eq!(rect_sum(&ii, Rect::new(0, 0, 4, 4).unwrap()).unwrap(), 16);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let img = random_image(&mut rng, 9, 7);
        let ii = integral_image(&img);
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(
                    rect_sum(&ii, Rect::new(x, y, 1, 1).unwrap()).unwrap(),
                    img.get(x, y) as u64
                );
            }
        }
    }

    #[test]
    fn rect_sum_out_of_bounds() {
        let img = GrayImage::filled(4, 4, 1).unwrap();
        let ii = integral_image(&img);
        assert!(rect_sum(&ii, Rect::new(2, 2, 3, 1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn rect_sum_matches_pixel_loop(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = rng.random_range(2..20usize);
            let h = rng.random_range(2..20usize);
            let img = random_image(&mut rng, w, h);
            let ii = integral_image(&img);
            let rx = rng.random_range(0..w);
            let ry = rng.random_range(0..h);
            let rw = rng.random_range(1..=w - rx);
            let rh = rng.random_range(1..=h - ry);
            let r = Rect::new(rx, ry, rw, rh).unwrap();
            let mut expect = 0u64;
            for y in ry..ry + rh {
                for x in rx..rx + rw {
                    expect += img.get(x, y) as u64;
                }
            }
            prop_assert_eq!(rect_sum(&ii, r).unwrap(), expect);
        }
    }

    #[test]
    fn kernel_sums_are_exact() {
        assert_eq!(Kernel::gaussian_5x5().coefficient_sum(), 1.0);
        assert_eq!(Kernel::laplacian_5x5().coefficient_sum(), 0.0);
        assert_eq!(Kernel::sobel_x().coefficient_sum(), 0.0);
        assert_eq!(Kernel::sobel_y().coefficient_sum(), 0.0);
    }

    #[test]
    fn rect_iou() {
        let a = Rect::new(0, 0, 10, 10).unwrap();
        let b = Rect::new(5, 0, 10, 10).unwrap();
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
        let c = Rect::new(20, 20, 5, 5).unwrap();
        assert_eq!(a.iou(&c), 0.0);
    }

    #[test]
    fn gray_image_validation() {
        assert!(GrayImage::new(0, 4, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(BinaryImage::new(2, 2, vec![0, 1, 2, 0]).is_err());
    }
}
