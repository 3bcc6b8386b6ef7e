//! Toy differentiable pose regressor and its full training protocol.
//!
//! The regressor is deliberately small — an affine map from hand-built
//! image statistics to the 9-dim pose-delta encoding, with a tanh squashing
//! the translation channels into the encoding's natural box — because its
//! job is to exercise the training machinery end to end at desk scale, not
//! to be a good tracker:
//!
//! - LogCosh warm-up on the raw encoding, then the weighted multi-task
//!   objective with learnable balance terms;
//! - Adam with decoupled weight decay and cosine warm restarts;
//! - optional symmetry-bank training via oracle selection plus the
//!   uniformity penalty;
//! - a linear scorer that learns to imitate the oracle selector for
//!   deployment, where the ground truth is unavailable.
//!
//! Every gradient flows through the same forward-mode dual kernels the
//! gradient checker validates against finite differences.

mod features;
mod optim;
mod scorer;
mod train;

pub use features::{extract_features, extract_features_frames, FEATURE_DIM};
pub use optim::{cosine_restart_lr, AdamState, OptimConfig, LR_MIN};
pub use scorer::{
    agreement, scorer_loss, select_trainable, train_scorer, LinearScorer, ScorerSample,
};
pub use train::{
    train, Checkpoint, EpochStats, TrainHistory, TrainSample, TrainSession,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ad::Scalar;
use crate::geom::GeomError;
use crate::losses::PoseDelta9;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error("checkpoint is inconsistent: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Affine 9-channel head over the feature vector, shared by the value and
/// gradient paths: `out[k] = bias[k] + Σ_f w[k·F + f]·x[f]`, with the three
/// translation channels squashed through tanh so predictions live in the
/// encoding's `[−1, 1]` box by construction.
pub(crate) fn forward_kernel<S: Scalar>(params: &[S], f_dim: usize, features: &[f64]) -> [S; 9] {
    debug_assert_eq!(params.len(), 9 * f_dim + 9);
    debug_assert_eq!(features.len(), f_dim);
    let mut out = [S::from_f64(0.0); 9];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = params[9 * f_dim + k];
        for (w, &x) in params[k * f_dim..(k + 1) * f_dim].iter().zip(features) {
            acc = acc + *w * S::from_f64(x);
        }
        *o = if k < 3 { acc.tanh() } else { acc };
    }
    out
}

/// Tiny affine pose-delta regressor: 9 output channels, `f_dim` inputs.
///
/// Parameters are stored flat — `9·f_dim` weights (output-major rows) then
/// 9 biases. A fresh model predicts the identity delta for any input with
/// zero feature weights: zero translation and the identity 6-parameter
/// rotation encoding in the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRegressor {
    params: Vec<f64>,
    f_dim: usize,
}

impl ToyRegressor {
    pub fn new(f_dim: usize) -> Result<Self, FitError> {
        if f_dim == 0 {
            return Err(FitError::InvalidConfig(
                "regressor needs at least one input feature".into(),
            ));
        }
        let mut params = vec![0.0; 9 * f_dim + 9];
        // Identity rotation encoding: rows (1,0,0) and (0,1,0).
        params[9 * f_dim + 3] = 1.0;
        params[9 * f_dim + 7] = 1.0;
        Ok(ToyRegressor { params, f_dim })
    }

    pub fn f_dim(&self) -> usize {
        self.f_dim
    }

    pub fn param_len(&self) -> usize {
        self.params.len()
    }

    /// Flat parameters: weights then bias.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// The `9·f_dim` feature weights.
    pub fn weights(&self) -> &[f64] {
        &self.params[..9 * self.f_dim]
    }

    /// The 9 output biases.
    pub fn bias(&self) -> &[f64] {
        &self.params[9 * self.f_dim..]
    }

    /// Predict the encoded pose delta for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<PoseDelta9, FitError> {
        if features.len() != self.f_dim {
            return Err(FitError::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.f_dim,
                features.len()
            )));
        }
        let out = forward_kernel::<f64>(&self.params, self.f_dim, features);
        Ok(PoseDelta9::from_array(out))
    }
}
