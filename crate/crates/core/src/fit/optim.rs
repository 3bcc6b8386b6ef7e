//! Optimizer for the toy trainer: Adam with decoupled weight decay and a
//! cosine learning-rate schedule with warm restarts.
//!
//! The decay is *decoupled*: it multiplies the regressor weights by
//! `1 − weight_decay` after every step, independent of the learning rate,
//! so regularization strength does not breathe with the cosine schedule.
//! Task weights and the symmetry bank are never decayed — shrinking them
//! toward zero has no regularizing meaning.

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::losses::DEFAULT_DELTA_SCALE_M;

/// Floor the cosine schedule anneals to (or the configured peak, if that is
/// lower).
pub const LR_MIN: f64 = 1e-5;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Hyper-parameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    /// Peak learning rate, restored at the start of every cosine period.
    pub lr: f64,
    /// Decoupled multiplicative weight decay per optimizer step; applies to
    /// the regressor weights only.
    pub weight_decay: f64,
    /// Cosine period in epochs. The rate decays from `lr` to [`LR_MIN`]
    /// across one period and snaps back when the next one starts.
    pub restart_period: usize,
    /// Epochs of LogCosh warm-up on the raw 9-dim encoding before the full
    /// weighted objective takes over. Task weights and the symmetry bank
    /// stay frozen during warm-up.
    pub warmup_epochs: usize,
    /// Samples per optimizer step.
    pub batch_size: usize,
    /// Epochs to run in one `train` call.
    pub epochs: usize,
    /// Number of symmetry-bank entries when the caller asks for one.
    pub b2: usize,
    /// Metric half-range of the normalized translation encoding, in meters.
    pub delta_scale_m: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lr: 1e-3,
            weight_decay: 1e-5,
            restart_period: 10,
            warmup_epochs: 25,
            batch_size: 32,
            epochs: 50,
            b2: 64,
            delta_scale_m: DEFAULT_DELTA_SCALE_M,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(FitError::InvalidConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        if !self.weight_decay.is_finite() || !(0.0..1.0).contains(&self.weight_decay) {
            return Err(FitError::InvalidConfig(format!(
                "weight decay {} must lie in [0, 1)",
                self.weight_decay
            )));
        }
        if self.restart_period == 0 {
            return Err(FitError::InvalidConfig(
                "restart period must be at least one epoch".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(FitError::InvalidConfig(
                "batch size must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(FitError::InvalidConfig(
                "epoch count must be at least 1".into(),
            ));
        }
        if self.b2 < 2 {
            return Err(FitError::InvalidConfig(format!(
                "bank size {} needs at least 2 entries for a pairwise spread",
                self.b2
            )));
        }
        if !self.delta_scale_m.is_finite() || self.delta_scale_m <= 0.0 {
            return Err(FitError::InvalidConfig(format!(
                "delta scale {} m must be finite and positive",
                self.delta_scale_m
            )));
        }
        Ok(())
    }
}

/// Learning rate for `epoch` under cosine annealing with warm restarts.
///
/// Within each period of `restart_period` epochs the rate follows half a
/// cosine from the peak down to the floor, hitting the floor exactly on the
/// period's last epoch; the next period snaps back to the peak. A period of
/// one degenerates to a constant peak rate.
pub fn cosine_restart_lr(epoch: usize, cfg: &OptimConfig) -> f64 {
    let period = cfg.restart_period.max(1);
    let floor = LR_MIN.min(cfg.lr);
    if period == 1 {
        return cfg.lr;
    }
    let phase = (epoch % period) as f64 / (period - 1) as f64;
    floor + 0.5 * (cfg.lr - floor) * (1.0 + (std::f64::consts::PI * phase).cos())
}

/// Adam accumulators (β₁ = 0.9, β₂ = 0.999, ε = 1e-8) with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update `θ ← θ − lr·m̂ / (√v̂ + ε)` over the whole vector.
    ///
    /// Panics if the slice lengths disagree with the state: parameter
    /// layouts are fixed at construction, so a mismatch is a programming
    /// error, not a runtime condition.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter/state length");
        assert_eq!(grads.len(), self.m.len(), "gradient/state length");
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}
