//! Trainable selector over symmetry-bank entries.
//!
//! The oracle selector needs the ground-truth rotation, so it only exists at
//! training time. This linear scorer learns to imitate it from input
//! features alone: one logit per bank entry, softmax cross-entropy against
//! the oracle's choice, plain full-batch gradient descent (the problem is
//! tiny and convex). At evaluation time the argmax entry stands in for the
//! oracle, and the agreement rate with the oracle is the quality metric.

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::symmetry::SymmetryBank;

/// Linear map from a feature vector to one logit per bank entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    /// Row-major `n_classes × in_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    in_dim: usize,
    n_classes: usize,
}

/// One supervised example: features plus the oracle-selected entry index.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerSample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LinearScorer {
    /// All-zero scorer: every entry ties, so selection falls back to index 0.
    pub fn new(in_dim: usize, n_classes: usize) -> Result<Self, FitError> {
        if in_dim == 0 || n_classes == 0 {
            return Err(FitError::InvalidConfig(format!(
                "scorer needs positive dimensions, got {in_dim}×{n_classes}"
            )));
        }
        Ok(LinearScorer {
            weights: vec![0.0; n_classes * in_dim],
            bias: vec![0.0; n_classes],
            in_dim,
            n_classes,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Raw scores, one per class.
    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>, FitError> {
        if features.len() != self.in_dim {
            return Err(FitError::DimensionMismatch(format!(
                "scorer expects {} features, got {}",
                self.in_dim,
                features.len()
            )));
        }
        let mut out = self.bias.clone();
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.weights[c * self.in_dim..(c + 1) * self.in_dim];
            *o += row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>();
        }
        Ok(out)
    }
}

/// Index of the highest-scoring class; ties resolve to the lowest index, so
/// an untrained all-zero scorer deterministically picks entry 0.
fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate().skip(1) {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

/// Softmax with max subtraction; returns the probability vector.
fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Bank-entry choice of the learned scorer (the deployable stand-in for the
/// ground-truth oracle).
pub fn select_trainable(
    bank: &SymmetryBank,
    scorer: &LinearScorer,
    features: &[f64],
) -> Result<usize, FitError> {
    if scorer.n_classes != bank.len() {
        return Err(FitError::DimensionMismatch(format!(
            "scorer has {} classes for a bank of {} entries",
            scorer.n_classes,
            bank.len()
        )));
    }
    Ok(argmax(&scorer.logits(features)?))
}

/// Mean softmax cross-entropy of the scorer on the labeled set.
pub fn scorer_loss(scorer: &LinearScorer, data: &[ScorerSample]) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::InvalidData("empty scorer dataset".into()));
    }
    let mut total = 0.0;
    for s in data {
        if s.label >= scorer.n_classes {
            return Err(FitError::InvalidData(format!(
                "label {} out of range for {} classes",
                s.label, scorer.n_classes
            )));
        }
        let p = softmax(&scorer.logits(&s.features)?);
        total -= (p[s.label].max(f64::MIN_POSITIVE)).ln();
    }
    Ok(total / data.len() as f64)
}

/// Fraction of samples where the scorer's argmax matches the oracle label.
pub fn agreement(scorer: &LinearScorer, data: &[ScorerSample]) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::InvalidData("empty scorer dataset".into()));
    }
    let mut hits = 0usize;
    for s in data {
        if argmax(&scorer.logits(&s.features)?) == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Full-batch gradient descent on the softmax cross-entropy for `epochs`
/// passes; returns the final mean cross-entropy.
///
/// The gradient is the textbook closed form `(p − onehot(label)) ⊗ x`; a
/// unit test cross-checks it against central differences.
pub fn train_scorer(
    scorer: &mut LinearScorer,
    data: &[ScorerSample],
    epochs: usize,
    lr: f64,
) -> Result<f64, FitError> {
    if data.is_empty() {
        return Err(FitError::InvalidData("empty scorer dataset".into()));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(FitError::InvalidConfig(format!(
            "scorer learning rate {lr} must be finite and positive"
        )));
    }
    let (d, c) = (scorer.in_dim, scorer.n_classes);
    let inv_n = 1.0 / data.len() as f64;
    for _ in 0..epochs {
        let mut gw = vec![0.0; c * d];
        let mut gb = vec![0.0; c];
        for s in data {
            if s.label >= c {
                return Err(FitError::InvalidData(format!(
                    "label {} out of range for {c} classes",
                    s.label
                )));
            }
            let p = softmax(&scorer.logits(&s.features)?);
            for k in 0..c {
                let err = p[k] - if k == s.label { 1.0 } else { 0.0 };
                gb[k] += err * inv_n;
                for (j, &f) in s.features.iter().enumerate() {
                    gw[k * d + j] += err * f * inv_n;
                }
            }
        }
        for (w, g) in scorer.weights.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        for (b, g) in scorer.bias.iter_mut().zip(&gb) {
            *b -= lr * g;
        }
    }
    scorer_loss(scorer, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::finite_diff;
    use rand::Rng;

    /// Three well-separated clusters in 2-D, one per class.
    fn clustered_data(n_per: usize, seed: u64) -> Vec<ScorerSample> {
        let centers = [[4.0, 0.0], [-4.0, 3.0], [0.0, -5.0]];
        let mut rng = crate::rng::seeded(seed, 0);
        let mut out = Vec::new();
        for (label, c) in centers.iter().enumerate() {
            for _ in 0..n_per {
                out.push(ScorerSample {
                    features: vec![
                        c[0] + rng.gen_range(-0.5..0.5),
                        c[1] + rng.gen_range(-0.5..0.5),
                    ],
                    label,
                });
            }
        }
        out
    }

    #[test]
    fn zero_scorer_always_picks_the_first_entry() {
        let bank = SymmetryBank::clustered(4, [false, false, true], 3).unwrap();
        let scorer = LinearScorer::new(2, 4).unwrap();
        assert_eq!(
            select_trainable(&bank, &scorer, &[1.0, -2.0]).unwrap(),
            0
        );
    }

    #[test]
    fn class_count_must_match_the_bank() {
        let bank = SymmetryBank::clustered(4, [false, false, true], 3).unwrap();
        let scorer = LinearScorer::new(2, 5).unwrap();
        assert!(select_trainable(&bank, &scorer, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn training_separates_clustered_labels() {
        let data = clustered_data(60, 9);
        let mut scorer = LinearScorer::new(2, 3).unwrap();
        let before = scorer_loss(&scorer, &data).unwrap();
        let after = train_scorer(&mut scorer, &data, 400, 0.5).unwrap();
        assert!(after < before, "{after} !< {before}");
        assert!(agreement(&scorer, &data).unwrap() > 0.99);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let data = clustered_data(5, 3);
        // Pack (weights, bias) into one vector and express the loss over it.
        let loss_at = |theta: &[f64]| {
            let mut s = LinearScorer::new(2, 3).unwrap();
            s.weights.copy_from_slice(&theta[..6]);
            s.bias.copy_from_slice(&theta[6..]);
            scorer_loss(&s, &data).unwrap()
        };
        let theta: Vec<f64> = (0..9).map(|i| 0.1 * i as f64 - 0.4).collect();
        let fd = finite_diff(loss_at, &theta, 1e-6);

        // One zero-lr-free GD step from θ recovers the analytic gradient.
        let mut scorer = LinearScorer::new(2, 3).unwrap();
        scorer.weights.copy_from_slice(&theta[..6]);
        scorer.bias.copy_from_slice(&theta[6..]);
        let lr = 1.0;
        let before_w = scorer.weights.clone();
        let before_b = scorer.bias.clone();
        train_scorer(&mut scorer, &data, 1, lr).unwrap();
        for (i, fd_i) in fd.iter().enumerate() {
            let analytic = if i < 6 {
                (before_w[i] - scorer.weights[i]) / lr
            } else {
                (before_b[i - 6] - scorer.bias[i - 6]) / lr
            };
            assert!(
                (analytic - fd_i).abs() < 1e-6,
                "coord {i}: {analytic} vs {fd_i}"
            );
        }
    }

    #[test]
    fn degenerate_dimensions_are_rejected() {
        assert!(LinearScorer::new(0, 3).is_err());
        assert!(LinearScorer::new(2, 0).is_err());
    }
}
