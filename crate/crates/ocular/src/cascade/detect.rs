//! Multi-scale window scanning, the down-sample/remap framework, and
//! rotated face search.

use super::CascadeModel;
use crate::error::{Error, Result};
use crate::imgcore::{
    affine_rotate, integral_image, integral_image_squared, resample_bicubic, GrayImage, Rect,
};

/// One accepted window in original-image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub rect: Rect,
    pub score: f64,
}

const MERGE_IOU: f64 = 0.3;

/// Scans the image at the model's scale ladder (base window times
/// `scale_step^s`, skipping scales that exceed the image) with stride
/// `max(1, round(scale * step))`. Windows passing every stage become
/// detections; overlapping detections (IoU above 0.3) merge by corner
/// averaging. Scan order is scale ascending, then y, then x, so the output
/// is deterministic.
pub fn detect_multiscale(img: &GrayImage, model: &CascadeModel, step: f64) -> Vec<Detection> {
    let (w, h) = (img.width(), img.height());
    if w < model.window || h < model.window {
        return Vec::new();
    }
    let ii = integral_image(img);
    let sq = integral_image_squared(img);

    let mut raw = Vec::new();
    for s in 0..model.scale_count {
        let scale = model.scale_step.powi(s as i32);
        let side = (model.window as f64 * scale).round() as usize;
        if side > w || side > h {
            continue;
        }
        let actual_scale = side as f64 / model.window as f64;
        let stride = (scale * step).round().max(1.0) as usize;
        let mut y = 0;
        while y + side <= h {
            let mut x = 0;
            while x + side <= w {
                let window = Rect { x, y, w: side, h: side };
                if let Ok(Some(score)) =
                    model.classify_window(&ii, &sq, window, actual_scale)
                {
                    raw.push(Detection {
                        rect: window,
                        score,
                    });
                }
                x += stride;
            }
            y += stride;
        }
    }
    merge_detections(raw)
}

/// Greedy grouping seeded from the best-scoring detection: each seed
/// absorbs every unmerged detection overlapping it by more than the IoU
/// threshold; the group is replaced by its corner average with the seed's
/// score. Ties between equal scores keep scan order, so the result is
/// deterministic.
fn merge_detections(detections: Vec<Detection>) -> Vec<Detection> {
    let n = detections.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .partial_cmp(&detections[a].score)
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![i];
        for &j in &order {
            if !used[j] && detections[i].rect.iou(&detections[j].rect) > MERGE_IOU {
                used[j] = true;
                members.push(j);
            }
        }
        // Score-weighted corner average: confident members dominate, so the
        // merged box centers on the strongest response.
        let total_w: f64 = members
            .iter()
            .map(|&m| detections[m].score.max(1e-9))
            .sum();
        let mean = |f: &dyn Fn(&Rect) -> usize| -> f64 {
            members
                .iter()
                .map(|&m| detections[m].score.max(1e-9) * f(&detections[m].rect) as f64)
                .sum::<f64>()
                / total_w
        };
        let x0 = mean(&|r| r.x).round() as usize;
        let y0 = mean(&|r| r.y).round() as usize;
        let x1 = mean(&|r| r.right()).round() as usize;
        let y1 = mean(&|r| r.bottom()).round() as usize;
        let score = members
            .iter()
            .map(|&m| detections[m].score)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(Detection {
            rect: Rect {
                x: x0,
                y: y0,
                w: (x1 - x0).max(1),
                h: (y1 - y0).max(1),
            },
            score,
        });
    }
    out
}

/// Face detection plus the eye search region, both remapped to the original
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRoi {
    pub face: Detection,
    /// Upper half of the face box: the eye search region.
    pub roi: Rect,
}

/// Detects on a bicubically down-sampled copy (scale factor `sf >= 1`),
/// takes the highest-score face, forms the eye region as the upper half of
/// the face box, and remaps both boxes to original coordinates by
/// multiplying the corners by `sf`.
pub fn detect_downsampled(img: &GrayImage, model: &CascadeModel, sf: f64) -> Result<FaceRoi> {
    if !(sf >= 1.0) {
        return Err(Error::Parameter(format!("scale factor {sf} below 1")));
    }
    let small = resample_bicubic(img, sf)?;
    let detections = detect_multiscale(&small, model, model.scan_step);
    let best = detections
        .into_iter()
        .max_by(|a, b| a.score.partial_cmp(&b.score).expect("finite scores"))
        .ok_or(Error::NoFace)?;

    let face_small = best.rect;
    let roi_small = Rect {
        x: face_small.x,
        y: face_small.y,
        w: face_small.w,
        h: (face_small.h / 2).max(1),
    };
    Ok(FaceRoi {
        face: Detection {
            rect: remap(face_small, sf, img.width(), img.height()),
            score: best.score,
        },
        roi: remap(roi_small, sf, img.width(), img.height()),
    })
}

/// Scales a rect's corners by `k` and clamps it into a `w x h` frame.
fn remap(r: Rect, k: f64, w: usize, h: usize) -> Rect {
    let x = ((r.x as f64 * k).round() as usize).min(w - 1);
    let y = ((r.y as f64 * k).round() as usize).min(h - 1);
    let rw = ((r.w as f64 * k).round() as usize).clamp(1, w - x);
    let rh = ((r.h as f64 * k).round() as usize).clamp(1, h - y);
    Rect { x, y, w: rw, h: rh }
}

/// A detection made after the in-plane rotation search.
#[derive(Debug, Clone)]
pub struct RotatedFace {
    pub face: Detection,
    pub roi: Rect,
    /// Rotation applied to the frame in which the face was found, degrees.
    pub theta: f64,
    /// The de-rotated frame the boxes refer to (the input itself for 0).
    pub frame: GrayImage,
}

const ROTATION_LADDER: [f64; 5] = [0.0, 30.0, -30.0, 45.0, -45.0];

/// Tries the frontal detector first, then rotated copies at +-30 and +-45
/// degrees; the first success wins. Returned boxes live in the rotated
/// (face-upright) frame, which is also returned.
pub fn detect_with_rotation(
    img: &GrayImage,
    model: &CascadeModel,
    sf: f64,
) -> Result<RotatedFace> {
    for theta in ROTATION_LADDER {
        let frame = if theta == 0.0 {
            img.clone()
        } else {
            affine_rotate(img, theta)?
        };
        match detect_downsampled(&frame, model, sf) {
            Ok(found) => {
                return Ok(RotatedFace {
                    face: found.face,
                    roi: found.roi,
                    theta,
                    frame,
                })
            }
            Err(Error::NoFace) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoFace)
}
