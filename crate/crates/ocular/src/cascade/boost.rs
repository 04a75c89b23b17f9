//! Boosted threshold-stump training and the stage-wise cascade builder.

use super::features::{haar_eval, sampled_feature_pool, HaarFeature};
use super::{CascadeModel, CascadeStage, WeakClassifier, BASE_WINDOW};
use crate::error::{Error, Result};
use crate::imgcore::{integral_image, integral_image_squared, GrayImage, Rect};

/// One trained stump over a feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Stump {
    pub feature_index: usize,
    pub threshold: f64,
    /// +1 votes for values below the threshold, -1 above.
    pub parity: i8,
    /// Vote weight `ln(1 / beta)`.
    pub alpha: f64,
    /// Weighted training error of this round.
    pub error: f64,
}

impl Stump {
    pub fn classify(&self, features: &[f64]) -> bool {
        let p = self.parity as f64;
        p * features[self.feature_index] < p * self.threshold
    }
}

/// Weighted stump vote with the standard half-total-weight threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongClassifier {
    pub stumps: Vec<Stump>,
}

impl StrongClassifier {
    /// Weighted vote minus half the total vote weight; positive passes.
    pub fn margin(&self, features: &[f64]) -> f64 {
        let vote: f64 = self
            .stumps
            .iter()
            .filter(|s| s.classify(features))
            .map(|s| s.alpha)
            .sum();
        let half: f64 = self.stumps.iter().map(|s| s.alpha).sum::<f64>() / 2.0;
        vote - half
    }

    pub fn classify(&self, features: &[f64]) -> bool {
        self.margin(features) >= 0.0
    }
}

// Weighted errors of exactly zero make the vote weight blow up; clamp.
const MIN_ERROR: f64 = 1e-10;

/// Boosted training of threshold stumps on precomputed feature vectors.
///
/// Weights start at `1/(2m)` for negatives and `1/(2l)` for positives. Each
/// round normalizes the weights into a distribution, picks the
/// `(feature, threshold, parity)` stump with the lowest weighted error over
/// candidate thresholds (midpoints of consecutive sorted feature values),
/// then multiplies the weights of correctly classified samples by
/// `beta = err/(1-err)`. Training stops early if no stump beats error 0.5.
pub fn adaboost_train(
    samples: &[Vec<f64>],
    labels: &[bool],
    rounds: usize,
) -> Result<Vec<Stump>> {
    let n = samples.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Input("samples and labels must match".into()));
    }
    if rounds == 0 {
        return Err(Error::Parameter("need at least one round".into()));
    }
    let n_features = samples[0].len();
    if n_features == 0 || samples.iter().any(|s| s.len() != n_features) {
        return Err(Error::Input("feature vectors must share a length".into()));
    }
    let l = labels.iter().filter(|&&y| y).count();
    let m = n - l;
    if l == 0 || m == 0 {
        return Err(Error::Input("both classes must be present".into()));
    }

    // Sorted sample order per feature, computed once.
    let mut order: Vec<Vec<u32>> = Vec::with_capacity(n_features);
    for j in 0..n_features {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| {
            samples[a as usize][j]
                .partial_cmp(&samples[b as usize][j])
                .expect("finite feature values")
        });
        order.push(idx);
    }

    let mut weights: Vec<f64> = labels
        .iter()
        .map(|&y| if y { 1.0 / (2.0 * l as f64) } else { 1.0 / (2.0 * m as f64) })
        .collect();

    let mut stumps = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let pos_total: f64 = weights
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y)
            .map(|(w, _)| w)
            .sum();
        let neg_total = 1.0 - pos_total;

        // Best stump across all features and midpoint thresholds.
        let mut best: Option<(f64, usize, f64, i8)> = None;
        for (j, idx) in order.iter().enumerate() {
            let mut pos_below = 0.0;
            let mut neg_below = 0.0;
            for k in 0..n - 1 {
                let i = idx[k] as usize;
                if labels[i] {
                    pos_below += weights[i];
                } else {
                    neg_below += weights[i];
                }
                let v0 = samples[i][j];
                let v1 = samples[idx[k + 1] as usize][j];
                if v0 == v1 {
                    continue;
                }
                let theta = 0.5 * (v0 + v1);
                // parity +1 votes positive below theta.
                let err_pos = neg_below + (pos_total - pos_below);
                let err_neg = pos_below + (neg_total - neg_below);
                for (err, parity) in [(err_pos, 1i8), (err_neg, -1i8)] {
                    if best.as_ref().is_none_or(|(be, ..)| err < *be) {
                        best = Some((err, j, theta, parity));
                    }
                }
            }
        }
        let Some((err, feature_index, threshold, parity)) = best else {
            break; // every feature is constant
        };
        if err >= 0.5 {
            break; // no weak learner left
        }
        let clamped = err.max(MIN_ERROR);
        let beta = clamped / (1.0 - clamped);
        let alpha = (1.0 / beta).ln();
        let stump = Stump {
            feature_index,
            threshold,
            parity,
            alpha,
            error: err,
        };
        for (i, w) in weights.iter_mut().enumerate() {
            let correct = stump.classify(&samples[i]) == labels[i];
            if correct {
                *w *= beta;
            }
        }
        stumps.push(stump);
    }
    if stumps.is_empty() {
        return Err(Error::Input(
            "no stump with weighted error below 0.5".into(),
        ));
    }
    Ok(stumps)
}

/// Desk-scale cascade training options.
#[derive(Debug, Clone)]
pub struct CascadeTrainOptions {
    /// Stage sizes in boosting rounds; the last entry repeats.
    pub rounds_schedule: Vec<usize>,
    pub max_stages: usize,
    /// Minimum per-stage detection rate; the stage threshold is lowered from
    /// the half-vote default until this holds on the positives.
    pub min_stage_tpr: f64,
    /// Stop once the estimated cumulative false positive rate drops this low.
    pub target_fpr: f64,
    /// Negative windows kept active per stage; each stage replenishes the
    /// set with fresh windows that defeat the cascade built so far.
    pub stage_negatives: usize,
    /// Feature pool subsample size.
    pub feature_count: usize,
    pub seed: u64,
}

impl Default for CascadeTrainOptions {
    fn default() -> Self {
        Self {
            rounds_schedule: vec![4, 8, 15, 25, 35],
            max_stages: 6,
            min_stage_tpr: 0.995,
            target_fpr: 1e-3,
            stage_negatives: 350,
            feature_count: 2000,
            seed: 1,
        }
    }
}

fn feature_row(img: &GrayImage, pool: &[HaarFeature], window: usize) -> Result<Vec<f64>> {
    if img.width() != window || img.height() != window {
        return Err(Error::Geometry(format!(
            "training window {}x{} must be {window}x{window}",
            img.width(),
            img.height()
        )));
    }
    let rect = Rect::new(0, 0, window, window)?;
    let ii = integral_image(img);
    let sq = integral_image_squared(img);
    pool.iter().map(|f| haar_eval(&ii, &sq, f, rect, 1.0)).collect()
}

/// Stage in feature-row space: stumps plus the tuned threshold.
struct TrainedStage {
    stumps: Vec<Stump>,
    threshold: f64,
}

impl TrainedStage {
    fn passes(&self, row: &[f64]) -> bool {
        let vote: f64 = self
            .stumps
            .iter()
            .filter(|s| s.classify(row))
            .map(|s| s.alpha)
            .sum();
        vote >= self.threshold
    }
}

/// Trains an attentional cascade on fixed-size windows, drawing negatives
/// from `neg_source` until it runs dry. Each stage trains against negatives
/// that defeat the cascade built so far, found by rejection sampling from
/// the source, so later stages concentrate on the hard cases.
pub fn train_cascade_with_source(
    positives: &[GrayImage],
    neg_source: &mut dyn FnMut() -> Option<GrayImage>,
    opts: &CascadeTrainOptions,
) -> Result<CascadeModel> {
    if positives.is_empty() {
        return Err(Error::Input("positives must be non-empty".into()));
    }
    let pool = sampled_feature_pool(BASE_WINDOW, opts.feature_count, opts.seed);
    let pos_rows: Result<Vec<Vec<f64>>> = positives
        .iter()
        .map(|img| feature_row(img, &pool, BASE_WINDOW))
        .collect();
    let pos_rows = pos_rows?;

    let mut stages: Vec<TrainedStage> = Vec::new();
    let mut active_negs: Vec<Vec<f64>> = Vec::new();
    let mut cumulative_fpr = 1.0;
    let mut source_dry = false;

    for stage_idx in 0..opts.max_stages {
        if cumulative_fpr <= opts.target_fpr {
            break;
        }
        // Replenish the active negatives with windows that pass all stages
        // built so far.
        let mut drawn = 0usize;
        let mut passed = 0usize;
        let draw_budget = opts.stage_negatives.saturating_mul(60);
        while active_negs.len() < opts.stage_negatives && drawn < draw_budget {
            let Some(img) = neg_source() else {
                source_dry = true;
                break;
            };
            drawn += 1;
            let row = feature_row(&img, &pool, BASE_WINDOW)?;
            if stages.iter().all(|s| s.passes(&row)) {
                passed += 1;
                active_negs.push(row);
            }
        }
        if drawn > 0 {
            // Rejection rate during refill estimates the cascade's current
            // false positive rate on the source distribution.
            cumulative_fpr = (passed as f64 / drawn as f64).max(1e-12);
        }
        if active_negs.is_empty() || cumulative_fpr <= opts.target_fpr {
            break;
        }

        let rounds = *opts
            .rounds_schedule
            .get(stage_idx)
            .or(opts.rounds_schedule.last())
            .expect("non-empty schedule");
        let mut samples = Vec::with_capacity(pos_rows.len() + active_negs.len());
        let mut labels = Vec::with_capacity(samples.capacity());
        samples.extend(pos_rows.iter().cloned());
        labels.extend(std::iter::repeat_n(true, pos_rows.len()));
        samples.extend(active_negs.iter().cloned());
        labels.extend(std::iter::repeat_n(false, active_negs.len()));

        let stumps = adaboost_train(&samples, &labels, rounds)?;
        let half: f64 = stumps.iter().map(|s| s.alpha).sum::<f64>() / 2.0;
        let vote = |row: &[f64]| -> f64 {
            stumps
                .iter()
                .filter(|s| s.classify(row))
                .map(|s| s.alpha)
                .sum()
        };

        // Lower the stage threshold until the positive pass rate holds.
        let mut pos_votes: Vec<f64> = pos_rows.iter().map(|r| vote(r)).collect();
        pos_votes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let miss_budget =
            ((1.0 - opts.min_stage_tpr) * pos_votes.len() as f64).floor() as usize;
        let threshold = half.min(pos_votes[miss_budget] - 1e-9);

        let stage = TrainedStage { stumps, threshold };
        active_negs.retain(|r| stage.passes(r));
        stages.push(stage);
        if source_dry && active_negs.is_empty() {
            break;
        }
    }

    let model_stages = stages
        .into_iter()
        .map(|s| CascadeStage {
            classifiers: s
                .stumps
                .into_iter()
                .map(|st| WeakClassifier {
                    feature: pool[st.feature_index],
                    threshold: st.threshold,
                    parity: st.parity,
                    alpha: st.alpha,
                })
                .collect(),
            threshold: s.threshold,
        })
        .collect();
    CascadeModel::new(model_stages)
}

/// [`train_cascade_with_source`] over a fixed list of negative windows,
/// each drawn at most once.
pub fn train_cascade(
    positives: &[GrayImage],
    negatives: &[GrayImage],
    opts: &CascadeTrainOptions,
) -> Result<CascadeModel> {
    if negatives.is_empty() {
        return Err(Error::Input("negatives must be non-empty".into()));
    }
    let mut iter = negatives.iter().cloned();
    train_cascade_with_source(positives, &mut || iter.next(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_1d_set_needs_one_stump() {
        let samples: Vec<Vec<f64>> = (1..=10)
            .map(|i| vec![if i <= 5 { -(i as f64) } else { i as f64 - 5.0 }])
            .collect();
        let labels: Vec<bool> = (1..=10).map(|i| i > 5).collect();
        let stumps = adaboost_train(&samples, &labels, 1).unwrap();
        assert_eq!(stumps.len(), 1);
        let strong = StrongClassifier { stumps };
        for (s, &y) in samples.iter().zip(&labels) {
            assert_eq!(strong.classify(s), y);
        }
    }

    #[test]
    fn weights_stay_normalized_each_round() {
        // Re-implementation of the weight recurrence, tracking the sums the
        // trainer produces after each normalization step.
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        let samples: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let labels: Vec<bool> = samples.iter().map(|s| s[0] + s[1] > 0.1).collect();
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            panic!("degenerate fixture");
        }
        let stumps = adaboost_train(&samples, &labels, 6).unwrap();

        let l = labels.iter().filter(|&&y| y).count() as f64;
        let m = labels.len() as f64 - l;
        let mut w: Vec<f64> = labels
            .iter()
            .map(|&y| if y { 1.0 / (2.0 * l) } else { 1.0 / (2.0 * m) })
            .collect();
        for stump in &stumps {
            let total: f64 = w.iter().sum();
            for wi in w.iter_mut() {
                *wi /= total;
            }
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let beta = stump.error.max(1e-10) / (1.0 - stump.error.max(1e-10));
            for (i, wi) in w.iter_mut().enumerate() {
                if stump.classify(&samples[i]) == labels[i] {
                    *wi *= beta;
                }
            }
        }
    }

    #[test]
    fn xor_like_set_needs_more_rounds() {
        // Quadrant pattern with jittered coordinates: one stump cannot
        // separate it, a deeper vote can.
        let pts = [
            (0.9, 1.1, false),
            (1.2, 0.8, false),
            (-1.0, -0.9, false),
            (-0.8, -1.2, false),
            (1.1, -1.0, true),
            (0.8, -0.85, true),
            (-1.05, 0.95, true),
            (-1.15, 1.05, true),
        ];
        let samples: Vec<Vec<f64>> = pts.iter().map(|&(x, y, _)| vec![x, y]).collect();
        let labels: Vec<bool> = pts.iter().map(|&(.., y)| y).collect();

        let one = StrongClassifier {
            stumps: adaboost_train(&samples, &labels, 1).unwrap(),
        };
        let errors_one = samples
            .iter()
            .zip(&labels)
            .filter(|(s, &y)| one.classify(s) != y)
            .count();
        assert!(errors_one > 0);

        let eight = StrongClassifier {
            stumps: adaboost_train(&samples, &labels, 8).unwrap(),
        };
        // Hand-run the boosted vote as an independent check.
        for (s, &y) in samples.iter().zip(&labels) {
            let mut vote = 0.0;
            let mut half = 0.0;
            for st in &eight.stumps {
                half += st.alpha / 2.0;
                let p = st.parity as f64;
                if p * s[st.feature_index] < p * st.threshold {
                    vote += st.alpha;
                }
            }
            assert_eq!(vote >= half, y, "sample {s:?}");
            assert_eq!(eight.classify(s), y);
        }
    }

    #[test]
    fn training_error_non_increasing_in_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(112);
        let samples: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                vec![
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ]
            })
            .collect();
        let labels: Vec<bool> = samples
            .iter()
            .map(|s| s[0] - 0.5 * s[1] + 0.25 * s[2] > 0.2)
            .collect();
        let mut prev = usize::MAX;
        for rounds in [1, 2, 4, 8, 16] {
            let strong = StrongClassifier {
                stumps: adaboost_train(&samples, &labels, rounds).unwrap(),
            };
            let errors = samples
                .iter()
                .zip(&labels)
                .filter(|(s, &y)| strong.classify(s) != y)
                .count();
            assert!(errors <= prev, "rounds {rounds}: {errors} > {prev}");
            prev = errors;
        }
    }

    #[test]
    fn rejects_single_class_and_empty() {
        let samples = vec![vec![1.0], vec![2.0]];
        assert!(adaboost_train(&samples, &[true, true], 3).is_err());
        assert!(adaboost_train(&[], &[], 3).is_err());
    }

    #[test]
    fn desk_scale_cascade_separates_synthetic_faces() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let pos: Vec<GrayImage> = (0..80)
            .map(|_| crate::synth::face_window(BASE_WINDOW, &mut rng))
            .collect();
        let neg: Vec<GrayImage> = (0..120)
            .map(|_| crate::synth::negative_window(BASE_WINDOW, &mut rng))
            .collect();
        let opts = CascadeTrainOptions {
            feature_count: 600,
            max_stages: 4,
            ..CascadeTrainOptions::default()
        };
        let model = train_cascade(&pos, &neg, &opts).unwrap();
        assert!(!model.stages.is_empty());

        // Held-out windows.
        let rect = Rect::new(0, 0, BASE_WINDOW, BASE_WINDOW).unwrap();
        let mut hits = 0;
        let mut false_alarms = 0;
        for _ in 0..50 {
            let p = crate::synth::face_window(BASE_WINDOW, &mut rng);
            let ii = integral_image(&p);
            let sq = integral_image_squared(&p);
            if model.classify_window(&ii, &sq, rect, 1.0).unwrap().is_some() {
                hits += 1;
            }
            let n = crate::synth::negative_window(BASE_WINDOW, &mut rng);
            let ii = integral_image(&n);
            let sq = integral_image_squared(&n);
            if model.classify_window(&ii, &sq, rect, 1.0).unwrap().is_some() {
                false_alarms += 1;
            }
        }
        assert!(hits >= 45, "held-out hits {hits}/50");
        assert!(false_alarms <= 5, "held-out false alarms {false_alarms}/50");
    }

    #[test]
    fn model_text_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(114);
        let pos: Vec<GrayImage> = (0..30)
            .map(|_| crate::synth::face_window(BASE_WINDOW, &mut rng))
            .collect();
        let neg: Vec<GrayImage> = (0..30)
            .map(|_| crate::synth::negative_window(BASE_WINDOW, &mut rng))
            .collect();
        let opts = CascadeTrainOptions {
            feature_count: 200,
            max_stages: 2,
            ..CascadeTrainOptions::default()
        };
        let model = train_cascade(&pos, &neg, &opts).unwrap();
        let text = model.to_text();
        let back = CascadeModel::from_text(&text).unwrap();
        assert_eq!(model, back);
        assert_eq!(text, back.to_text());
    }
}
