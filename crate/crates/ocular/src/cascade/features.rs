//! Haar-like rectangle features evaluated on integral images.

use crate::error::{Error, Result};
use crate::imgcore::{rect_sum, IntegralImage, Rect};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rectangle-feature layout. Sub-rectangles tile the base rect exactly and
/// their polarity weights balance to zero over a constant image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarKind {
    /// Two horizontally adjacent halves, left positive.
    TwoH,
    /// Two vertically adjacent halves, top positive.
    TwoV,
    /// Three horizontal thirds, outer positive and center doubly negative.
    ThreeH,
    /// Three vertical thirds.
    ThreeV,
    /// Four quadrants with diagonal pairing.
    Four,
}

impl HaarKind {
    /// Width/height divisibility units for the base rect.
    pub fn units(&self) -> (usize, usize) {
        match self {
            HaarKind::TwoH => (2, 1),
            HaarKind::TwoV => (1, 2),
            HaarKind::ThreeH => (3, 1),
            HaarKind::ThreeV => (1, 3),
            HaarKind::Four => (2, 2),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HaarKind::TwoH => "two_h",
            HaarKind::TwoV => "two_v",
            HaarKind::ThreeH => "three_h",
            HaarKind::ThreeV => "three_v",
            HaarKind::Four => "four",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "two_h" => HaarKind::TwoH,
            "two_v" => HaarKind::TwoV,
            "three_h" => HaarKind::ThreeH,
            "three_v" => HaarKind::ThreeV,
            "four" => HaarKind::Four,
            other => return Err(Error::Parse(format!("unknown feature kind `{other}`"))),
        })
    }

    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoH,
        HaarKind::TwoV,
        HaarKind::ThreeH,
        HaarKind::ThreeV,
        HaarKind::Four,
    ];
}

/// A rectangle feature anchored inside the base detection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarFeature {
    pub kind: HaarKind,
    /// Base rect in window coordinates.
    pub rect: Rect,
}

impl HaarFeature {
    pub fn new(kind: HaarKind, rect: Rect, window: usize) -> Result<Self> {
        let (ux, uy) = kind.units();
        if rect.w % ux != 0 || rect.h % uy != 0 {
            return Err(Error::Geometry(format!(
                "{} rect {}x{} not divisible by {ux}x{uy}",
                kind.name(),
                rect.w,
                rect.h
            )));
        }
        if !rect.fits(window, window) {
            return Err(Error::Bounds(format!(
                "feature rect {rect:?} outside {window}x{window} window"
            )));
        }
        Ok(Self { kind, rect })
    }

    /// Polarity-weighted sub-rects in base-window coordinates.
    pub fn sub_rects(&self) -> Vec<(Rect, f64)> {
        subdivide(self.kind, self.rect)
    }

    /// Sub-rects placed at `scale` inside a concrete image window. The base
    /// rect is scaled once (rounded, then snapped down to the divisibility
    /// unit) and subdivided in integer space, so the tiling stays exact and
    /// a constant image always evaluates to zero.
    fn placed(&self, window: Rect, scale: f64) -> Result<Vec<(Rect, f64)>> {
        let (ux, uy) = self.kind.units();
        let sx = window.x + (self.rect.x as f64 * scale).round() as usize;
        let sy = window.y + (self.rect.y as f64 * scale).round() as usize;
        let mut sw = (self.rect.w as f64 * scale).round() as usize;
        let mut sh = (self.rect.h as f64 * scale).round() as usize;
        sw -= sw % ux;
        sh -= sh % uy;
        if sw == 0 || sh == 0 {
            return Err(Error::Geometry("feature vanishes at this scale".into()));
        }
        let scaled = Rect::new(sx, sy, sw, sh)?;
        if scaled.right() > window.right() || scaled.bottom() > window.bottom() {
            return Err(Error::Bounds(format!(
                "scaled feature {scaled:?} escapes window {window:?}"
            )));
        }
        Ok(subdivide(self.kind, scaled))
    }
}

fn subdivide(kind: HaarKind, r: Rect) -> Vec<(Rect, f64)> {
    let rect = |x, y, w, h| Rect { x, y, w, h };
    match kind {
        HaarKind::TwoH => {
            let half = r.w / 2;
            vec![
                (rect(r.x, r.y, half, r.h), 1.0),
                (rect(r.x + half, r.y, half, r.h), -1.0),
            ]
        }
        HaarKind::TwoV => {
            let half = r.h / 2;
            vec![
                (rect(r.x, r.y, r.w, half), 1.0),
                (rect(r.x, r.y + half, r.w, half), -1.0),
            ]
        }
        HaarKind::ThreeH => {
            let third = r.w / 3;
            vec![
                (rect(r.x, r.y, third, r.h), 1.0),
                (rect(r.x + third, r.y, third, r.h), -2.0),
                (rect(r.x + 2 * third, r.y, third, r.h), 1.0),
            ]
        }
        HaarKind::ThreeV => {
            let third = r.h / 3;
            vec![
                (rect(r.x, r.y, r.w, third), 1.0),
                (rect(r.x, r.y + third, r.w, third), -2.0),
                (rect(r.x, r.y + 2 * third, r.w, third), 1.0),
            ]
        }
        HaarKind::Four => {
            let hw = r.w / 2;
            let hh = r.h / 2;
            vec![
                (rect(r.x, r.y, hw, hh), 1.0),
                (rect(r.x + hw, r.y, hw, hh), -1.0),
                (rect(r.x, r.y + hh, hw, hh), -1.0),
                (rect(r.x + hw, r.y + hh, hw, hh), 1.0),
            ]
        }
    }
}

/// Unnormalized feature value: the polarity-weighted sum of the sub-rect
/// pixel sums, evaluated at `scale` inside `window`.
pub fn haar_eval_raw(
    ii: &IntegralImage,
    feature: &HaarFeature,
    window: Rect,
    scale: f64,
) -> Result<f64> {
    let mut value = 0.0;
    for (r, weight) in feature.placed(window, scale)? {
        value += weight * rect_sum(ii, r)? as f64;
    }
    Ok(value)
}

/// Feature value normalized by the window area and the window intensity
/// standard deviation (from the companion squared integral image), making
/// stump thresholds transfer across scales and lighting.
pub fn haar_eval(
    ii: &IntegralImage,
    sq: &IntegralImage,
    feature: &HaarFeature,
    window: Rect,
    scale: f64,
) -> Result<f64> {
    let raw = haar_eval_raw(ii, feature, window, scale)?;
    let area = window.area() as f64;
    let sum = rect_sum(ii, window)? as f64;
    let sum_sq = rect_sum(sq, window)? as f64;
    let mean = sum / area;
    let var = (sum_sq / area - mean * mean).max(0.0);
    let sigma = var.sqrt().max(1.0);
    Ok(raw / (area * sigma))
}

/// Every feature of every kind inside a `window x window` base window, at
/// all positions and all unit-aligned sizes.
pub fn feature_pool(window: usize) -> Vec<HaarFeature> {
    let mut pool = Vec::new();
    for kind in HaarKind::ALL {
        let (ux, uy) = kind.units();
        let mut w = ux;
        while w <= window {
            let mut h = uy;
            while h <= window {
                for y in 0..=window - h {
                    for x in 0..=window - w {
                        pool.push(HaarFeature {
                            kind,
                            rect: Rect { x, y, w, h },
                        });
                    }
                }
                h += uy;
            }
            w += ux;
        }
    }
    pool
}

/// Seeded subsample of the full pool, used to keep desk-scale training
/// tractable. Returns the whole pool when it is already small enough.
pub fn sampled_feature_pool(window: usize, max_count: usize, seed: u64) -> Vec<HaarFeature> {
    let mut pool = feature_pool(window);
    if pool.len() <= max_count {
        return pool;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(max_count);
    pool
}
