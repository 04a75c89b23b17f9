//! Connected components and distance transforms on binary rasters.

use super::{BinaryImage, Rect};
use crate::error::{Error, Result};

/// One 8-connected foreground component.
#[derive(Debug, Clone)]
pub struct Component {
    /// 1-based label in scan order of the component seeds.
    pub label: usize,
    pub pixel_count: usize,
    pub bbox: Rect,
    /// Foreground pixels as `(x, y)`, in discovery order.
    pub pixels: Vec<(usize, usize)>,
    /// Topmost-leftmost pixel `(y, x)`-lexicographic, used as tie breaker.
    pub top_left: (usize, usize),
}

/// Labels 8-connected components, drops those smaller than `min_size`, and
/// sorts by pixel count descending; ties broken by the smaller `(y, x)` of
/// the component's top-left pixel. A blank image yields an empty list.
pub fn connected_components(bin: &BinaryImage, min_size: usize) -> Vec<Component> {
    let (w, h) = (bin.width(), bin.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut label = 0;

    for sy in 0..h {
        for sx in 0..w {
            if !bin.get(sx, sy) || seen[sy * w + sx] {
                continue;
            }
            label += 1;
            let mut pixels = Vec::new();
            let mut stack = vec![(sx, sy)];
            seen[sy * w + sx] = true;
            let (mut x0, mut y0, mut x1, mut y1) = (sx, sy, sx, sy);
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as isize + dx;
                        let ny = y as isize + dy;
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if bin.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if pixels.len() >= min_size.max(1) {
                out.push(Component {
                    label,
                    pixel_count: pixels.len(),
                    bbox: Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1).expect("non-empty"),
                    pixels,
                    // The scan seed is the (y, x)-minimal pixel of the component.
                    top_left: (sy, sx),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.pixel_count
            .cmp(&a.pixel_count)
            .then(a.top_left.cmp(&b.top_left))
    });
    out
}

/// Binary dilation with a 3x3 square element.
pub fn dilate3x3(bin: &BinaryImage) -> BinaryImage {
    let (w, h) = (bin.width() as isize, bin.height() as isize);
    BinaryImage::from_fn(bin.width(), bin.height(), |x, y| {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && nx < w && ny < h && bin.get(nx as usize, ny as usize) {
                    return true;
                }
            }
        }
        false
    })
    .expect("same shape")
}

/// Pixel distance metric between two grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    /// `max(|dx|, |dy|)`
    Chessboard,
    /// `|dx| + |dy|`
    CityBlock,
    /// `sqrt(dx^2 + dy^2)`
    Euclidean,
    /// `|dx| + (sqrt(2)-1)|dy|` when `|dx| > |dy|`, else `(sqrt(2)-1)|dx| + |dy|`
    QuasiEuclidean,
}

impl DistanceMetric {
    /// Direct evaluation of the metric between two points.
    pub fn between(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let dx = (a.0 as f64 - b.0 as f64).abs();
        let dy = (a.1 as f64 - b.1 as f64).abs();
        match self {
            DistanceMetric::Chessboard => dx.max(dy),
            DistanceMetric::CityBlock => dx + dy,
            DistanceMetric::Euclidean => (dx * dx + dy * dy).sqrt(),
            DistanceMetric::QuasiEuclidean => {
                if dx > dy {
                    dx + (std::f64::consts::SQRT_2 - 1.0) * dy
                } else {
                    (std::f64::consts::SQRT_2 - 1.0) * dx + dy
                }
            }
        }
    }
}

/// Real-valued distance map.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Distance from every pixel to the nearest nonzero pixel under the chosen
/// metric; nonzero pixels map to 0. Errors on an all-zero image.
///
/// Chessboard, city-block and quasi-euclidean are path metrics on the pixel
/// grid, computed exactly by a two-pass chamfer sweep; euclidean uses the
/// exact two-pass squared-distance transform.
pub fn distance_transform(bin: &BinaryImage, metric: DistanceMetric) -> Result<DistanceMap> {
    if bin.count_ones() == 0 {
        return Err(Error::Domain(
            "distance transform of an all-zero image".into(),
        ));
    }
    let (w, h) = (bin.width(), bin.height());
    let data = match metric {
        DistanceMetric::Euclidean => exact_euclidean(bin),
        DistanceMetric::Chessboard => chamfer(bin, 1.0, 1.0),
        DistanceMetric::CityBlock => chamfer(bin, 1.0, 2.0),
        DistanceMetric::QuasiEuclidean => chamfer(bin, 1.0, std::f64::consts::SQRT_2),
    };
    Ok(DistanceMap {
        width: w,
        height: h,
        data,
    })
}

/// Two-pass chamfer sweep with axis step `a` and diagonal step `b`.
fn chamfer(bin: &BinaryImage, a: f64, b: f64) -> Vec<f64> {
    let (w, h) = (bin.width(), bin.height());
    let mut d = vec![f64::INFINITY; w * h];
    for y in 0..h {
        for x in 0..w {
            if bin.get(x, y) {
                d[y * w + x] = 0.0;
            }
        }
    }
    // Forward: west, north, north-west, north-east.
    for y in 0..h {
        for x in 0..w {
            let mut best = d[y * w + x];
            if x > 0 {
                best = best.min(d[y * w + x - 1] + a);
            }
            if y > 0 {
                best = best.min(d[(y - 1) * w + x] + a);
                if x > 0 {
                    best = best.min(d[(y - 1) * w + x - 1] + b);
                }
                if x + 1 < w {
                    best = best.min(d[(y - 1) * w + x + 1] + b);
                }
            }
            d[y * w + x] = best;
        }
    }
    // Backward: east, south, south-east, south-west.
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut best = d[y * w + x];
            if x + 1 < w {
                best = best.min(d[y * w + x + 1] + a);
            }
            if y + 1 < h {
                best = best.min(d[(y + 1) * w + x] + a);
                if x + 1 < w {
                    best = best.min(d[(y + 1) * w + x + 1] + b);
                }
                if x > 0 {
                    best = best.min(d[(y + 1) * w + x - 1] + b);
                }
            }
            d[y * w + x] = best;
        }
    }
    d
}

/// One-dimensional squared-distance transform by lower envelope of parabolas.
fn dt_1d(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, 0.0);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if !f[q].is_finite() && f[q] > 0.0 {
            // Parabola at +inf never contributes.
            continue;
        }
        loop {
            let p = v[k];
            if !f[p].is_finite() {
                // Replace an infinite parabola outright.
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
                continue;
            }
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        out[q] = if f[p].is_finite() {
            let d = q as f64 - p as f64;
            d * d + f[p]
        } else {
            f64::INFINITY
        };
    }
}

fn exact_euclidean(bin: &BinaryImage) -> Vec<f64> {
    let (w, h) = (bin.width(), bin.height());
    let mut sq = vec![f64::INFINITY; w * h];
    for y in 0..h {
        for x in 0..w {
            if bin.get(x, y) {
                sq[y * w + x] = 0.0;
            }
        }
    }
    // Columns, then rows.
    let mut col = vec![0.0; h];
    let mut buf = Vec::new();
    for x in 0..w {
        for y in 0..h {
            col[y] = sq[y * w + x];
        }
        dt_1d(&col, &mut buf);
        for y in 0..h {
            sq[y * w + x] = buf[y];
        }
    }
    let mut row = vec![0.0; w];
    for y in 0..h {
        row.copy_from_slice(&sq[y * w..(y + 1) * w]);
        dt_1d(&row, &mut buf);
        for x in 0..w {
            sq[y * w + x] = buf[x].sqrt();
        }
    }
    sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blank_image_has_no_components() {
        let bin = BinaryImage::blank(10, 8).unwrap();
        assert!(connected_components(&bin, 1).is_empty());
    }

    #[test]
    fn min_size_filters_small_blob() {
        let mut bin = BinaryImage::blank(12, 12).unwrap();
        // 5-pixel horizontal run and a separate 3-pixel run.
        for x in 1..6 {
            bin.set(x, 2, true);
        }
        for x in 8..11 {
            bin.set(x, 9, true);
        }
        let comps = connected_components(&bin, 4);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].pixel_count, 5);
        assert_eq!(comps[0].bbox, Rect::new(1, 2, 5, 1).unwrap());
    }

    #[test]
    fn full_image_is_one_component() {
        let bin = BinaryImage::from_fn(7, 5, |_, _| true).unwrap();
        let comps = connected_components(&bin, 1);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].pixel_count, 35);
    }

    #[test]
    fn components_match_flood_fill_oracle_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let bin = BinaryImage::from_fn(12, 12, |_, _| rng.random_bool(0.35)).unwrap();
            let comps = connected_components(&bin, 1);
            // Oracle: naive repeated flood fill counting totals.
            let total: usize = comps.iter().map(|c| c.pixel_count).sum();
            assert_eq!(total, bin.count_ones());
            // Sorted by size descending.
            for pair in comps.windows(2) {
                assert!(pair[0].pixel_count >= pair[1].pixel_count);
            }
        }
    }

    #[test]
    fn distance_formulas_from_origin() {
        let mut bin = BinaryImage::blank(8, 8).unwrap();
        bin.set(0, 0, true);
        let point = (3usize, 4usize);
        let cases = [
            (DistanceMetric::Chessboard, 4.0),
            (DistanceMetric::CityBlock, 7.0),
            (DistanceMetric::Euclidean, 5.0),
            (
                DistanceMetric::QuasiEuclidean,
                (std::f64::consts::SQRT_2 - 1.0) * 3.0 + 4.0,
            ),
        ];
        for (metric, expect) in cases {
            let map = distance_transform(&bin, metric).unwrap();
            assert!(
                (map.get(point.0, point.1) - expect).abs() < 1e-9,
                "{metric:?}: {} vs {expect}",
                map.get(point.0, point.1)
            );
        }
    }

    #[test]
    fn all_zero_mask_is_a_domain_error() {
        let bin = BinaryImage::blank(4, 4).unwrap();
        assert!(distance_transform(&bin, DistanceMetric::Euclidean).is_err());
    }

    #[test]
    fn distance_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let bin = BinaryImage::from_fn(12, 12, |_, _| rng.random_bool(0.15)).unwrap();
            if bin.count_ones() == 0 {
                continue;
            }
            let ones: Vec<(usize, usize)> = (0..12)
                .flat_map(|y| (0..12).map(move |x| (x, y)))
                .filter(|&(x, y)| bin.get(x, y))
                .collect();
            for metric in [
                DistanceMetric::Chessboard,
                DistanceMetric::CityBlock,
                DistanceMetric::Euclidean,
                DistanceMetric::QuasiEuclidean,
            ] {
                let map = distance_transform(&bin, metric).unwrap();
                for y in 0..12 {
                    for x in 0..12 {
                        let expect = ones
                            .iter()
                            .map(|&p| metric.between((x, y), p))
                            .fold(f64::INFINITY, f64::min);
                        let got = map.get(x, y);
                        let tol = match metric {
                            DistanceMetric::Chessboard | DistanceMetric::CityBlock => 0.0,
                            _ => 1e-9,
                        };
                        assert!(
                            (got - expect).abs() <= tol,
                            "{metric:?} at ({x},{y}): {got} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_exactly_on_foreground() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let bin = BinaryImage::from_fn(10, 10, |_, _| rng.random_bool(0.3)).unwrap();
        let map = distance_transform(&bin, DistanceMetric::QuasiEuclidean).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(map.get(x, y) == 0.0, bin.get(x, y));
            }
        }
    }

    #[test]
    fn dilate_square_grows_single_pixel() {
        let mut bin = BinaryImage::blank(5, 5).unwrap();
        bin.set(2, 2, true);
        let out = dilate3x3(&bin);
        assert_eq!(out.count_ones(), 9);
        assert!(out.get(1, 1) && out.get(3, 3) && !out.get(0, 0));
    }
}
