//! Rectangle-feature cascade detection: Haar-like features over integral
//! images, boosted threshold stumps, attentional cascade evaluation,
//! multi-scale scanning, the down-sample/ROI-remap speed framework, rotated
//! face search, and normalized-correlation template matching.

mod boost;
mod detect;
mod features;
mod template;

pub use boost::{
    adaboost_train, train_cascade, train_cascade_with_source, CascadeTrainOptions,
    StrongClassifier, Stump,
};
pub use detect::{
    detect_downsampled, detect_multiscale, detect_with_rotation, Detection, FaceRoi, RotatedFace,
};
pub use features::{
    feature_pool, haar_eval, haar_eval_raw, sampled_feature_pool, HaarFeature, HaarKind,
};
pub use template::{correlation_at, template_match, TemplateMatch};

use crate::error::{Error, Result};
use crate::imgcore::{IntegralImage, Rect};
use std::fmt::Write as _;
use std::path::Path;

/// Base window side length for detection models.
pub const BASE_WINDOW: usize = 24;

/// One threshold stump over a Haar-like feature: votes 1 when
/// `parity * value < parity * threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    pub parity: i8,
    /// Vote weight `ln(1 / beta)`; non-negative for useful stumps.
    pub alpha: f64,
}

impl WeakClassifier {
    pub fn classify(
        &self,
        ii: &IntegralImage,
        sq: &IntegralImage,
        window: Rect,
        scale: f64,
    ) -> Result<bool> {
        let value = haar_eval(ii, sq, &self.feature, window, scale)?;
        Ok(self.parity as f64 * value < self.parity as f64 * self.threshold)
    }
}

/// One attentional stage: a weighted stump vote against a stage threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStage {
    pub classifiers: Vec<WeakClassifier>,
    /// Pass when the weighted vote reaches this; defaults to half the total
    /// vote weight and may be lowered to hit a target detection rate.
    pub threshold: f64,
}

impl CascadeStage {
    /// Weighted vote of the stage's stumps on one window.
    pub fn vote(
        &self,
        ii: &IntegralImage,
        sq: &IntegralImage,
        window: Rect,
        scale: f64,
    ) -> Result<f64> {
        let mut v = 0.0;
        for weak in &self.classifiers {
            if weak.classify(ii, sq, window, scale)? {
                v += weak.alpha;
            }
        }
        Ok(v)
    }
}

/// Ordered cascade of stages scanned at a geometric ladder of scales.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub window: usize,
    pub stages: Vec<CascadeStage>,
    pub scale_step: f64,
    pub scale_count: usize,
    /// Scan stride in pixels per unit scale.
    pub scan_step: f64,
}

impl CascadeModel {
    pub fn new(stages: Vec<CascadeStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Input("cascade needs at least one stage".into()));
        }
        Ok(Self {
            window: BASE_WINDOW,
            stages,
            scale_step: 1.25,
            scale_count: 11,
            scan_step: 1.0,
        })
    }

    /// Runs every stage on one window; `None` when a stage rejects it,
    /// otherwise the accumulated margin above the stage thresholds.
    pub fn classify_window(
        &self,
        ii: &IntegralImage,
        sq: &IntegralImage,
        window: Rect,
        scale: f64,
    ) -> Result<Option<f64>> {
        let mut score = 0.0;
        for stage in &self.stages {
            let v = stage.vote(ii, sq, window, scale)?;
            if v < stage.threshold {
                return Ok(None);
            }
            score += v - stage.threshold;
        }
        Ok(Some(score))
    }

    /// Versioned plain-text serialization with exact decimal round-trip.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cascade v1");
        let _ = writeln!(s, "window {}", self.window);
        let _ = writeln!(s, "scale_step {}", self.scale_step);
        let _ = writeln!(s, "scale_count {}", self.scale_count);
        let _ = writeln!(s, "scan_step {}", self.scan_step);
        let _ = writeln!(s, "stages {}", self.stages.len());
        for stage in &self.stages {
            let _ = writeln!(s, "stage {} {}", stage.threshold, stage.classifiers.len());
            for weak in &stage.classifiers {
                let r = weak.feature.rect;
                let _ = writeln!(
                    s,
                    "weak {} {} {} {} {} {} {} {}",
                    weak.feature.kind.name(),
                    r.x,
                    r.y,
                    r.w,
                    r.h,
                    weak.threshold,
                    weak.parity,
                    weak.alpha
                );
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("cascade v1") => {}
            other => return Err(Error::Parse(format!("bad cascade header: {other:?}"))),
        }
        let window: usize = keyed(lines.next(), "window")?;
        let scale_step: f64 = keyed(lines.next(), "scale_step")?;
        let scale_count: usize = keyed(lines.next(), "scale_count")?;
        let scan_step: f64 = keyed(lines.next(), "scan_step")?;
        let n_stages: usize = keyed(lines.next(), "stages")?;
        let mut stages = Vec::with_capacity(n_stages);
        for _ in 0..n_stages {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing stage line".into()))?;
            let mut tok = line.split_whitespace();
            if tok.next() != Some("stage") {
                return Err(Error::Parse(format!("expected stage line, got `{line}`")));
            }
            let threshold: f64 = parse_tok(tok.next(), "stage threshold")?;
            let count: usize = parse_tok(tok.next(), "stage classifier count")?;
            let mut classifiers = Vec::with_capacity(count);
            for _ in 0..count {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse("missing weak line".into()))?;
                let mut tok = line.split_whitespace();
                if tok.next() != Some("weak") {
                    return Err(Error::Parse(format!("expected weak line, got `{line}`")));
                }
                let kind = HaarKind::parse(tok.next().unwrap_or(""))?;
                let x: usize = parse_tok(tok.next(), "weak x")?;
                let y: usize = parse_tok(tok.next(), "weak y")?;
                let w: usize = parse_tok(tok.next(), "weak w")?;
                let h: usize = parse_tok(tok.next(), "weak h")?;
                let threshold: f64 = parse_tok(tok.next(), "weak threshold")?;
                let parity: i8 = parse_tok(tok.next(), "weak parity")?;
                let alpha: f64 = parse_tok(tok.next(), "weak alpha")?;
                classifiers.push(WeakClassifier {
                    feature: HaarFeature::new(kind, Rect::new(x, y, w, h)?, window)?,
                    threshold,
                    parity,
                    alpha,
                });
            }
            stages.push(CascadeStage {
                classifiers,
                threshold,
            });
        }
        Ok(Self {
            window,
            stages,
            scale_step,
            scale_count,
            scan_step,
        })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn keyed<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad `{key}` value")))
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// Per-stage operating rates measured on a training set.
#[derive(Debug, Clone, Copy)]
pub struct StageRates {
    pub false_positive_rate: f64,
    pub detection_rate: f64,
    /// Features evaluated by this stage.
    pub feature_count: f64,
    /// Fraction of windows this stage passes on to the next.
    pub positive_rate: f64,
}

/// Aggregate cascade operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeRates {
    /// Product of the per-stage false positive rates.
    pub false_positive_rate: f64,
    /// Product of the per-stage detection rates.
    pub detection_rate: f64,
    /// Expected features evaluated per window: the first stage always runs,
    /// each later stage costs its feature count weighted by the positive
    /// rates of the stages between it and the first.
    pub expected_features: f64,
}

pub fn cascade_rates(stages: &[StageRates]) -> Result<CascadeRates> {
    if stages.is_empty() {
        return Err(Error::Input("no stages".into()));
    }
    for (i, s) in stages.iter().enumerate() {
        for (name, v) in [
            ("false positive rate", s.false_positive_rate),
            ("detection rate", s.detection_rate),
            ("positive rate", s.positive_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("stage {i} {name} {v} outside [0,1]")));
            }
        }
    }
    let false_positive_rate = stages.iter().map(|s| s.false_positive_rate).product();
    let detection_rate = stages.iter().map(|s| s.detection_rate).product();
    let mut expected_features = stages[0].feature_count;
    let mut reach = 1.0;
    for i in 1..stages.len() {
        expected_features += stages[i].feature_count * reach;
        reach *= stages[i].positive_rate;
    }
    Ok(CascadeRates {
        false_positive_rate,
        detection_rate,
        expected_features,
    })
}
