//! Rhythm classifiers: a one-vs-rest linear hinge-loss model and a DTW
//! nearest-neighbour baseline.
//!
//! Every sample goes through the same front end: warp onto the first
//! enrollment sample, detect taps on the warped series, and take the
//! inter-tap gaps.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::detect::{detect_taps, DetectConfig};
use super::dtw::{dtw, dtw_align, DtwConfig};
use super::features::{fit_length, gaps};
use crate::channel::MIN_RHYTHM_TAPS;
use crate::dsp::ProcessedSeries;
use crate::error::{invalid, Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    LinearOvr,
    Dtw1nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub detect: DetectConfig,
    pub align: DtwConfig,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Multiplier on the widest leave-one-out template distance.
    pub nn_margin: f64,
    /// Candidate extractions per verification session.
    pub retries: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Dtw1nn,
            detect: DetectConfig::default(),
            align: DtwConfig {
                window: Some(3),
                decimation: 10,
            },
            learning_rate: 0.01,
            epochs: 500,
            l2: 1e-3,
            nn_margin: 1.0,
            retries: 3,
            seed: 0,
        }
    }
}

/// Balanced training accuracy below which a linear model is flagged.
const DEGENERATE_ACCURACY: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Model {
    Linear {
        weights: Vec<f64>,
        bias: f64,
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    Templates {
        templates: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmClassifier {
    pub kind: ClassifierKind,
    pub model: Model,
    /// Accept when the score is at least this.
    pub threshold: f64,
    pub template_length: usize,
    pub dtw_reference: ProcessedSeries,
    pub detect: DetectConfig,
    pub align: DtwConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub usable_positives: usize,
    pub usable_negatives: usize,
    pub skipped: usize,
    /// Balanced accuracy on the training set.
    pub train_accuracy: f64,
    pub degenerate: bool,
    /// Epoch whose weights were kept (linear only).
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    Accepted,
    BelowThreshold,
    NoRhythmDetected,
    TooFewTaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub score: f64,
    pub reason: Reason,
}

/// Raw gap features of `sample` after warping it onto `reference`.
pub fn sample_features(
    sample: &ProcessedSeries,
    reference: &ProcessedSeries,
    detect: &DetectConfig,
    align: &DtwConfig,
) -> Result<Vec<f64>> {
    let warped = dtw_align(sample, reference, align)?.warped;
    let events = detect_taps(&warped, detect)?;
    gaps(&events)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

fn balanced_accuracy(scores_pos: &[f64], scores_neg: &[f64], threshold: f64) -> f64 {
    let tpr = scores_pos.iter().filter(|s| **s >= threshold).count() as f64 / scores_pos.len().max(1) as f64;
    let tnr = scores_neg.iter().filter(|s| **s < threshold).count() as f64 / scores_neg.len().max(1) as f64;
    if scores_neg.is_empty() {
        tpr
    } else {
        0.5 * (tpr + tnr)
    }
}

struct Fit {
    weights: Vec<f64>,
    bias: f64,
    accuracy: f64,
    epoch: usize,
}

/// Class-weighted hinge loss with L2, plain SGD, best epoch kept.
fn fit_linear(pos: &[Vec<f64>], neg: &[Vec<f64>], cfg: &ClassifierConfig) -> Fit {
    let dim = pos[0].len();
    let data: Vec<(&[f64], f64)> = pos
        .iter()
        .map(|x| (x.as_slice(), 1.0))
        .chain(neg.iter().map(|x| (x.as_slice(), -1.0)))
        .collect();
    let total = data.len() as f64;
    let w_pos = total / (2.0 * pos.len() as f64);
    let w_neg = total / (2.0 * neg.len() as f64);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seeded(cfg.seed);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = Fit {
        weights: w.clone(),
        bias: b,
        accuracy: f64::NEG_INFINITY,
        epoch: 0,
    };
    let mut best_loss = f64::INFINITY;
    let lr = cfg.learning_rate;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (x, y) = data[k];
            let cw = if y > 0.0 { w_pos } else { w_neg };
            let margin = y * (dot(&w, x) + b);
            for (wi, xi) in w.iter_mut().zip(x) {
                let mut g = cfg.l2 * *wi;
                if margin < 1.0 {
                    g -= cw * y * xi;
                }
                *wi -= lr * g;
            }
            if margin < 1.0 {
                b += lr * cw * y;
            }
        }
        let sp: Vec<f64> = pos.iter().map(|x| dot(&w, x) + b).collect();
        let sn: Vec<f64> = neg.iter().map(|x| dot(&w, x) + b).collect();
        let acc = balanced_accuracy(&sp, &sn, 0.0);
        let loss = sp.iter().map(|s| w_pos * (1.0 - s).max(0.0)).sum::<f64>()
            + sn.iter().map(|s| w_neg * (1.0 + s).max(0.0)).sum::<f64>()
            + 0.5 * cfg.l2 * total * dot(&w, &w);
        if acc > best.accuracy || (acc == best.accuracy && loss < best_loss) {
            best = Fit {
                weights: w.clone(),
                bias: b,
                accuracy: acc,
                epoch,
            };
            best_loss = loss;
        }
    }
    best
}

fn template_distance(a: &[f64], b: &[f64]) -> f64 {
    dtw(a, b, None).map_or(f64::INFINITY, |r| r.cost)
}

fn nearest(x: &[f64], templates: &[Vec<f64>], skip: Option<usize>) -> f64 {
    templates
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, t)| template_distance(x, t))
        .fold(f64::INFINITY, f64::min)
}

/// Trains a classifier for one user.
///
/// `positives[0]` becomes the alignment reference. Samples whose features
/// cannot be extracted are skipped; fewer than four usable positives fail
/// enrollment.
pub fn train_classifier(
    positives: &[ProcessedSeries],
    negatives: &[ProcessedSeries],
    cfg: &ClassifierConfig,
) -> Result<(RhythmClassifier, TrainReport)> {
    if positives.len() < MIN_RHYTHM_TAPS {
        return Err(Error::EnrollmentFailed {
            usable: positives.len(),
            needed: MIN_RHYTHM_TAPS,
        });
    }
    let reference = &positives[0];
    let mut skipped = 0;
    let mut extract = |s: &ProcessedSeries| match sample_features(s, reference, &cfg.detect, &cfg.align) {
        Ok(f) => Some(f),
        Err(_) => {
            skipped += 1;
            None
        }
    };
    let pos_raw: Vec<Vec<f64>> = positives.iter().filter_map(&mut extract).collect();
    if pos_raw.len() < MIN_RHYTHM_TAPS {
        return Err(Error::EnrollmentFailed {
            usable: pos_raw.len(),
            needed: MIN_RHYTHM_TAPS,
        });
    }
    let neg_raw: Vec<Vec<f64>> = negatives.iter().filter_map(&mut extract).collect();
    let len = pos_raw.iter().map(Vec::len).max().unwrap_or(1);
    let pos: Vec<Vec<f64>> = pos_raw.iter().map(|f| fit_length(f, len)).collect();
    let neg: Vec<Vec<f64>> = neg_raw.iter().map(|f| fit_length(f, len)).collect();

    let (model, threshold, accuracy, best_epoch) = match cfg.kind {
        ClassifierKind::LinearOvr => {
            if neg.is_empty() {
                return Err(invalid("linear classifier needs usable negatives"));
            }
            let all = pos.iter().chain(&neg);
            let n = (pos.len() + neg.len()) as f64;
            let mut mean = vec![0.0; len];
            for x in all.clone() {
                mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
            }
            let mut var = vec![0.0; len];
            for x in all {
                var.iter_mut()
                    .zip(x)
                    .zip(&mean)
                    .for_each(|((s, v), m)| *s += (v - m).powi(2) / n);
            }
            let scale: Vec<f64> = var.iter().map(|v| if *v > 1e-12 { v.sqrt() } else { 1.0 }).collect();
            let zp: Vec<Vec<f64>> = pos.iter().map(|x| standardize(x, &mean, &scale)).collect();
            let zn: Vec<Vec<f64>> = neg.iter().map(|x| standardize(x, &mean, &scale)).collect();
            let fit = fit_linear(&zp, &zn, cfg);
            (
                Model::Linear {
                    weights: fit.weights,
                    bias: fit.bias,
                    mean,
                    scale,
                },
                0.0,
                fit.accuracy,
                fit.epoch,
            )
        }
        ClassifierKind::Dtw1nn => {
            let widest = (0..pos.len())
                .map(|i| nearest(&pos[i], &pos, Some(i)))
                .fold(0.0, f64::max);
            let threshold = -widest * cfg.nn_margin;
            let sp: Vec<f64> = (0..pos.len()).map(|i| -nearest(&pos[i], &pos, Some(i))).collect();
            let sn: Vec<f64> = neg.iter().map(|x| -nearest(x, &pos, None)).collect();
            let acc = balanced_accuracy(&sp, &sn, threshold);
            (Model::Templates { templates: pos.clone() }, threshold, acc, 0)
        }
    };
    let clf = RhythmClassifier {
        kind: cfg.kind,
        model,
        threshold,
        template_length: len,
        dtw_reference: reference.clone(),
        detect: cfg.detect,
        align: cfg.align,
    };
    let report = TrainReport {
        usable_positives: pos.len(),
        usable_negatives: neg.len(),
        skipped,
        train_accuracy: accuracy,
        degenerate: cfg.kind == ClassifierKind::LinearOvr && accuracy < DEGENERATE_ACCURACY,
        best_epoch,
    };
    Ok((clf, report))
}

impl RhythmClassifier {
    /// Score of an already-extracted raw gap vector.
    pub fn score_features(&self, raw: &[f64]) -> f64 {
        let x = fit_length(raw, self.template_length);
        match &self.model {
            Model::Linear {
                weights,
                bias,
                mean,
                scale,
            } => dot(weights, &standardize(&x, mean, scale)) + bias,
            Model::Templates { templates } => -nearest(&x, templates, None),
        }
    }

    pub fn features(&self, candidate: &ProcessedSeries) -> Result<Vec<f64>> {
        sample_features(candidate, &self.dtw_reference, &self.detect, &self.align)
    }

    pub fn decide(&self, raw: &[f64]) -> Verdict {
        let score = self.score_features(raw);
        let accept = score >= self.threshold;
        Verdict {
            accept,
            score,
            reason: if accept {
                Reason::Accepted
            } else {
                Reason::BelowThreshold
            },
        }
    }
}

pub fn verify(clf: &RhythmClassifier, candidate: &ProcessedSeries) -> Verdict {
    match clf.features(candidate) {
        Ok(raw) => clf.decide(&raw),
        Err(e) => Verdict {
            accept: false,
            score: f64::NEG_INFINITY,
            reason: if e == Error::NoRhythmDetected {
                Reason::NoRhythmDetected
            } else {
                Reason::TooFewTaps
            },
        },
    }
}

/// Tries up to `retries` candidates and accepts on the first accept.
pub fn verify_session(clf: &RhythmClassifier, candidates: &[ProcessedSeries], retries: usize) -> Verdict {
    let mut last = Verdict {
        accept: false,
        score: f64::NEG_INFINITY,
        reason: Reason::NoRhythmDetected,
    };
    for c in candidates.iter().take(retries.max(1)) {
        last = verify(clf, c);
        if last.accept {
            break;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    /// Clean Phi made of a dip at every press and a bump at every release.
    fn phi(presses: &[f64], hold: f64, duration: f64) -> ProcessedSeries {
        let dt = 0.001;
        let n = (duration / dt) as usize;
        let mut v = vec![0.0; n];
        for &p in presses {
            for (off, sign) in [(p, -1.0), (p + hold, 1.0)] {
                for i in 0..60 {
                    let k = ((off - 0.06 * (sign + 1.0) / 2.0) / dt) as usize + i;
                    if k < n {
                        v[k] += sign * 8.0 * (core::f64::consts::PI * i as f64 / 60.0).sin();
                    }
                }
            }
        }
        ProcessedSeries::from_values(0.0, dt, v)
    }

    fn user_trials(base: &[f64], n: usize, rng: &mut impl Rng) -> Vec<ProcessedSeries> {
        (0..n)
            .map(|_| {
                let p: Vec<f64> = base.iter().map(|x| x + rng.random_range(-0.02..0.02)).collect();
                phi(&p, 0.2, 6.0)
            })
            .collect()
    }

    fn random_base(rng: &mut impl Rng) -> Vec<f64> {
        let mut t = 0.5;
        (0..8)
            .map(|_| {
                let p = t;
                t += 0.2 + rng.random_range(0.2..0.45);
                p
            })
            .collect()
    }

    #[test]
    fn separates_users_both_kinds() {
        let mut rng = seeded(10);
        let me = random_base(&mut rng);
        let pos = user_trials(&me, 10, &mut rng);
        let neg: Vec<ProcessedSeries> = (0..6)
            .flat_map(|_| {
                let b = random_base(&mut rng);
                user_trials(&b, 5, &mut rng)
            })
            .collect();
        for kind in [ClassifierKind::LinearOvr, ClassifierKind::Dtw1nn] {
            let cfg = ClassifierConfig {
                kind,
                ..ClassifierConfig::default()
            };
            let (clf, rep) = train_classifier(&pos, &neg, &cfg).unwrap();
            assert_eq!(rep.usable_positives, 10);
            assert!(rep.train_accuracy > 0.95, "{kind:?} {rep:?}");
            let fresh = user_trials(&me, 10, &mut rng);
            let ok = fresh.iter().filter(|c| verify(&clf, c).accept).count();
            assert!(ok >= 8, "{kind:?} {ok}");
            let flat = ProcessedSeries::from_values(0.0, 0.001, vec![0.0; 6000]);
            let v = verify(&clf, &flat);
            assert!(!v.accept);
            assert_eq!(v.reason, Reason::NoRhythmDetected);
        }
    }

    #[test]
    fn retrain_is_deterministic() {
        let mut rng = seeded(3);
        let me = random_base(&mut rng);
        let pos = user_trials(&me, 5, &mut rng);
        let other = random_base(&mut rng);
        let neg = user_trials(&other, 5, &mut rng);
        let cfg = ClassifierConfig {
            epochs: 50,
            ..ClassifierConfig::default()
        };
        let a = train_classifier(&pos, &neg, &cfg).unwrap();
        let b = train_classifier(&pos, &neg, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_classes_flagged() {
        let mut rng = seeded(4);
        let me = random_base(&mut rng);
        let pos = user_trials(&me, 10, &mut rng);
        let neg = user_trials(&me, 10, &mut rng);
        let (_, rep) = train_classifier(
            &pos,
            &neg,
            &ClassifierConfig {
                kind: ClassifierKind::LinearOvr,
                epochs: 100,
                ..ClassifierConfig::default()
            },
        )
        .unwrap();
        assert!(rep.degenerate, "{rep:?}");
    }

    #[test]
    fn too_few_positives() {
        let mut rng = seeded(5);
        let me = random_base(&mut rng);
        let pos = user_trials(&me, 3, &mut rng);
        assert!(matches!(
            train_classifier(&pos, &pos, &ClassifierConfig::default()),
            Err(Error::EnrollmentFailed { usable: 3, needed: 4 })
        ));
    }

    #[test]
    fn trailing_padding_does_not_change_decision() {
        let mut rng = seeded(6);
        let me = random_base(&mut rng);
        let pos = user_trials(&me, 6, &mut rng);
        let neg = user_trials(&random_base(&mut rng), 6, &mut rng);
        let (clf, _) = train_classifier(
            &pos,
            &neg,
            &ClassifierConfig {
                epochs: 100,
                ..ClassifierConfig::default()
            },
        )
        .unwrap();
        let raw = clf.features(&pos[1]).unwrap();
        let mut padded = raw.clone();
        padded.extend([0.0; 9]);
        assert_eq!(clf.decide(&raw), clf.decide(&padded));
    }
}
