//! Illumination compensation and thresholding: plain and bi-histogram
//! equalization, contrast-limited adaptive equalization, and Otsu's method.

use crate::error::{Error, Result};
use crate::imgcore::{BinaryImage, GrayImage};

/// Intensity histogram with one bin per 8-bit level.
#[derive(Debug, Clone)]
pub struct Histogram256 {
    counts: [u64; 256],
}

impl Histogram256 {
    pub fn from_image(img: &GrayImage) -> Self {
        let mut counts = [0u64; 256];
        for &v in img.data() {
            counts[v as usize] += 1;
        }
        Self { counts }
    }

    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of levels with nonzero count.
    pub fn occupied_levels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Builds the CDF remapping of the histogram onto `[lo, hi]`:
/// `out(v) = lo + floor((hi - lo) * cdf(v))`. A single-level histogram maps
/// that level to `lo`.
fn equalize_lut(hist: &Histogram256, lo: u8, hi: u8) -> [u8; 256] {
    let total = hist.total();
    let mut lut = [0u8; 256];
    if total == 0 {
        return lut;
    }
    if hist.occupied_levels() == 1 {
        // Degenerate CDF jumps at one level; map it to the range start.
        for v in 0..256 {
            lut[v] = lo;
        }
        return lut;
    }
    let width = (hi - lo) as f64;
    let mut cum = 0u64;
    for v in 0..256 {
        cum += hist.counts[v];
        let cdf = cum as f64 / total as f64;
        lut[v] = lo + (width * cdf).floor() as u8;
    }
    lut
}

/// Histogram equalization of the whole image onto `[range_lo, range_hi]`.
pub fn hist_equalize(img: &GrayImage, range_lo: u8, range_hi: u8) -> Result<GrayImage> {
    if range_lo >= range_hi {
        return Err(Error::Parameter(format!(
            "equalization range [{range_lo}, {range_hi}] is empty"
        )));
    }
    let lut = equalize_lut(&Histogram256::from_image(img), range_lo, range_hi);
    GrayImage::from_fn(img.width(), img.height(), |x, y| lut[img.get(x, y) as usize])
}

/// Bi-histogram equalization. The image is split at its mean intensity; the
/// lower subset (values at or below the mean) is equalized onto
/// `[min_level, floor(mean)]`, the upper subset onto
/// `[floor(mean)+1, max_level]`, and the two are recombined in place. The
/// output brightness stays close to the input mean by construction.
pub fn bhe(img: &GrayImage) -> GrayImage {
    let mean = img.mean();
    let (min_level, max_level) = img.min_max();
    let m_floor = mean.floor().clamp(0.0, 255.0) as u8;

    let mut low_hist = [0u64; 256];
    let mut high_hist = [0u64; 256];
    for &v in img.data() {
        if (v as f64) <= mean {
            low_hist[v as usize] += 1;
        } else {
            high_hist[v as usize] += 1;
        }
    }
    let low = Histogram256::from_counts(low_hist);
    let high = Histogram256::from_counts(high_hist);

    let low_lut = equalize_lut(&low, min_level, m_floor.max(min_level));
    let high_lut = if high.total() > 0 {
        let hi_lo = m_floor.saturating_add(1).min(max_level);
        equalize_lut(&high, hi_lo, max_level.max(hi_lo))
    } else {
        [0u8; 256]
    };

    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        if (v as f64) <= mean {
            low_lut[v as usize]
        } else {
            high_lut[v as usize]
        }
    })
    .expect("same shape")
}

/// Contrast-limited adaptive histogram equalization.
///
/// The image is tiled with `tile`-pixel squares (edge tiles sample clamped
/// coordinates so the grid always covers the image). Each tile's histogram
/// is clipped at `clip` times the uniform bin height, the excess is spread
/// evenly over all bins, and the clipped CDF defines the tile mapping.
/// Pixels blend the mappings of the four nearest tile centers bilinearly.
/// Tiles with a single occupied level keep the identity mapping.
pub fn clahe(img: &GrayImage, tile: usize, clip: f64) -> Result<GrayImage> {
    if tile < 8 {
        return Err(Error::Parameter(format!("tile must be >= 8, got {tile}")));
    }
    if !(clip >= 1.0) {
        return Err(Error::Parameter(format!("clip must be >= 1, got {clip}")));
    }
    let (w, h) = (img.width(), img.height());
    let tiles_x = w.div_ceil(tile);
    let tiles_y = h.div_ceil(tile);
    let tile_area = (tile * tile) as f64;
    let clip_limit = clip * tile_area / 256.0;

    // Per-tile LUTs. Tile (tx, ty) samples the padded image, i.e. clamped
    // source coordinates, so partial border tiles still hold `tile^2` pixels.
    let mut luts = vec![[0u8; 256]; tiles_x * tiles_y];
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let mut hist = [0f64; 256];
            let mut occupied = [false; 256];
            for dy in 0..tile {
                for dx in 0..tile {
                    let sx = (tx * tile + dx).min(w - 1);
                    let sy = (ty * tile + dy).min(h - 1);
                    let v = img.get(sx, sy) as usize;
                    hist[v] += 1.0;
                    occupied[v] = true;
                }
            }
            let lut = &mut luts[ty * tiles_x + tx];
            if occupied.iter().filter(|&&o| o).count() <= 1 {
                for (v, slot) in lut.iter_mut().enumerate() {
                    *slot = v as u8;
                }
                continue;
            }
            let mut excess = 0.0;
            for b in hist.iter_mut() {
                if *b > clip_limit {
                    excess += *b - clip_limit;
                    *b = clip_limit;
                }
            }
            let share = excess / 256.0;
            for b in hist.iter_mut() {
                *b += share;
            }
            let mut cum = 0.0;
            for v in 0..256 {
                cum += hist[v];
                lut[v] = (255.0 * cum / tile_area).floor().min(255.0) as u8;
            }
        }
    }

    // Bilinear blend between the four surrounding tile mappings.
    GrayImage::from_fn(w, h, |x, y| {
        let gx = (x as f64 + 0.5) / tile as f64 - 0.5;
        let gy = (y as f64 + 0.5) / tile as f64 - 0.5;
        let tx0 = gx.floor().clamp(0.0, (tiles_x - 1) as f64) as usize;
        let ty0 = gy.floor().clamp(0.0, (tiles_y - 1) as f64) as usize;
        let tx1 = (tx0 + 1).min(tiles_x - 1);
        let ty1 = (ty0 + 1).min(tiles_y - 1);
        let fx = (gx - tx0 as f64).clamp(0.0, 1.0);
        let fy = (gy - ty0 as f64).clamp(0.0, 1.0);
        let v = img.get(x, y) as usize;
        let v00 = luts[ty0 * tiles_x + tx0][v] as f64;
        let v10 = luts[ty0 * tiles_x + tx1][v] as f64;
        let v01 = luts[ty1 * tiles_x + tx0][v] as f64;
        let v11 = luts[ty1 * tiles_x + tx1][v] as f64;
        let top = v00 * (1.0 - fx) + v10 * fx;
        let bot = v01 * (1.0 - fx) + v11 * fx;
        crate::imgcore::to_u8(top * (1.0 - fy) + bot * fy)
    })
}

/// Otsu threshold plus the thresholded raster (`1` where `value >= T`).
#[derive(Debug, Clone)]
pub struct OtsuResult {
    pub threshold: u8,
    pub binary: BinaryImage,
}

/// Picks the threshold `T` maximizing the between-class variance of the
/// split `{v < T} | {v >= T}` — equivalently minimizing the intra-class
/// variance. Ties resolve to the smallest `T`; a single-level image yields
/// `T` equal to that level (binary all ones).
///
/// The sweep compares the exact integer criterion `s0^2/n0 + s1^2/n1` by
/// cross multiplication in `u128`, so no floating-point rounding is
/// involved for images up to ~4 million pixels (beyond that it falls back
/// to `f64`).
pub fn otsu(img: &GrayImage) -> OtsuResult {
    let hist = Histogram256::from_image(img);
    let threshold = otsu_threshold(&hist);
    let binary = BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        img.get(x, y) >= threshold
    })
    .expect("same shape");
    OtsuResult { threshold, binary }
}

/// Threshold selection on a raw histogram; see [`otsu`].
pub fn otsu_threshold(hist: &Histogram256) -> u8 {
    if hist.occupied_levels() <= 1 {
        // Degenerate histogram: T is the single occupied level.
        return hist
            .counts()
            .iter()
            .position(|&c| c > 0)
            .unwrap_or(0) as u8;
    }
    let n = hist.total();
    let exact = n <= 4_000_000;
    let total_sum: u64 = hist
        .counts()
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u64 * c)
        .sum();

    let mut best_t = 0u8;
    let mut best_num = 0u128;
    let mut best_den = 0u128; // zero denominator marks "no candidate yet"
    let mut best_f = f64::NEG_INFINITY;
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for t in 1..=255u16 {
        let level = (t - 1) as usize;
        n0 += hist.counts()[level];
        s0 += level as u64 * hist.counts()[level];
        let n1 = n - n0;
        let s1 = total_sum - s0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        if exact {
            // criterion = s0^2/n0 + s1^2/n1 = (s0^2 n1 + s1^2 n0) / (n0 n1)
            let num = (s0 as u128) * (s0 as u128) * (n1 as u128)
                + (s1 as u128) * (s1 as u128) * (n0 as u128);
            let den = (n0 as u128) * (n1 as u128);
            let better = if best_den == 0 {
                true
            } else {
                num * best_den > best_num * den
            };
            if better {
                best_num = num;
                best_den = den;
                best_t = t as u8;
            }
        } else {
            let f = (s0 as f64) * (s0 as f64) / (n0 as f64)
                + (s1 as f64) * (s1 as f64) / (n1 as f64);
            if f > best_f {
                best_f = f;
                best_t = t as u8;
            }
        }
    }
    best_t
}
