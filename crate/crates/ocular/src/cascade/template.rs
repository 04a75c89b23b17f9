//! Normalized-correlation template matching.

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, Rect};

/// Window whose normalized correlation against the template clears the
/// acceptance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMatch {
    pub rect: Rect,
    pub gamma: f64,
}

/// Acceptance threshold on the correlation coefficient.
pub const GAMMA_THRESHOLD: f64 = 0.8;

/// Normalized correlation coefficient between the template and the window
/// anchored at `(x, y)`. Defined as 0 when either side has zero variance.
pub fn correlation_at(img: &GrayImage, tmpl: &GrayImage, x: usize, y: usize) -> f64 {
    let (tw, th) = (tmpl.width(), tmpl.height());
    let n = (tw * th) as f64;
    let mut sum_f = 0.0;
    let mut sum_w = 0.0;
    for ty in 0..th {
        for tx in 0..tw {
            sum_f += img.get(x + tx, y + ty) as f64;
            sum_w += tmpl.get(tx, ty) as f64;
        }
    }
    let mf = sum_f / n;
    let mw = sum_w / n;
    let mut cov = 0.0;
    let mut var_f = 0.0;
    let mut var_w = 0.0;
    for ty in 0..th {
        for tx in 0..tw {
            let df = img.get(x + tx, y + ty) as f64 - mf;
            let dw = tmpl.get(tx, ty) as f64 - mw;
            cov += df * dw;
            var_f += df * df;
            var_w += dw * dw;
        }
    }
    if var_f == 0.0 || var_w == 0.0 {
        return 0.0;
    }
    cov / (var_f * var_w).sqrt()
}

/// Scans the image with windows overlapping by `overlap` in both directions
/// and returns every window whose correlation with the template reaches the
/// 0.8 acceptance threshold, in scan order.
pub fn template_match(
    img: &GrayImage,
    tmpl: &GrayImage,
    overlap: f64,
) -> Result<Vec<TemplateMatch>> {
    if tmpl.width() > img.width() || tmpl.height() > img.height() {
        return Err(Error::Geometry(format!(
            "template {}x{} larger than image {}x{}",
            tmpl.width(),
            tmpl.height(),
            img.width(),
            img.height()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Parameter(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    let positions = |total: usize, len: usize| -> Vec<usize> {
        let stride = ((len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
        let mut out = Vec::new();
        let mut p = 0;
        while p + len <= total {
            out.push(p);
            p += stride;
        }
        let flush = total - len;
        if out.last() != Some(&flush) {
            out.push(flush);
        }
        out
    };
    let xs = positions(img.width(), tmpl.width());
    let ys = positions(img.height(), tmpl.height());

    let mut matches = Vec::new();
    for &y in &ys {
        for &x in &xs {
            let gamma = correlation_at(img, tmpl, x, y);
            if gamma >= GAMMA_THRESHOLD {
                matches.push(TemplateMatch {
                    rect: Rect {
                        x,
                        y,
                        w: tmpl.width(),
                        h: tmpl.height(),
                    },
                    gamma,
                });
            }
        }
    }
    Ok(matches)
}
