//! Loss functions for pose tracking: weighted translation + rotation
//! tracking loss, learnable multi-task weighting, symmetry-bank uniformity
//! penalty, attention-map supervision, LogCosh warm-up loss, and the
//! gradient machinery ([`grad`] / [`finite_diff`]) plus streaming
//! standardization.
//!
//! The scalar formulas live in [`kernels`], written once over
//! [`crate::ad::Scalar`]; everything here is the `f64` front end with
//! validation. [`families`] packages each loss as a parameterized function
//! with samplers for gradient checking.

pub mod families;
pub mod kernels;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::ad::{finite_diff, grad, Dual};
use crate::geom::{
    matrix_from_rot6d, rot6d_from_matrix, GeomError, Pose, Rot6D, RotationMatrix,
};
use crate::symmetry::SymmetryBank;

/// Default scale (meters) mapping one unit of normalized translation delta
/// to metric space: deltas are encoded as `t / DEFAULT_DELTA_SCALE_M`,
/// clamped to `[−1, 1]`.
pub const DEFAULT_DELTA_SCALE_M: f64 = 0.02;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-differentiable point: {0}")]
    NonDifferentiablePoint(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// The 9-parameter frame-to-frame pose delta a regressor outputs:
/// normalized translation (each component in `[−1, 1]`) plus a raw
/// 6-parameter rotation encoding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDelta9 {
    pub translation: Vector3<f64>,
    pub rotation: Rot6D,
}

impl PoseDelta9 {
    /// Construct, clamping translation components into `[−1, 1]`.
    pub fn new(translation: Vector3<f64>, rotation: Rot6D) -> Self {
        PoseDelta9 {
            translation: translation.map(|v| v.clamp(-1.0, 1.0)),
            rotation,
        }
    }

    pub fn identity() -> Self {
        PoseDelta9 {
            translation: Vector3::zeros(),
            rotation: Rot6D::identity(),
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        let t = self.translation;
        let r = self.rotation.to_array();
        [t.x, t.y, t.z, r[0], r[1], r[2], r[3], r[4], r[5]]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        PoseDelta9::new(
            Vector3::new(a[0], a[1], a[2]),
            Rot6D::from_array([a[3], a[4], a[5], a[6], a[7], a[8]]),
        )
    }
}

/// Encode a rigid delta as a [`PoseDelta9`]: translation divided by
/// `scale_m` and clamped into `[−1, 1]`; rotation as its 6-parameter form.
pub fn encode_pose_delta(delta: &Pose, scale_m: f64) -> PoseDelta9 {
    PoseDelta9::new(
        delta.translation / scale_m,
        rot6d_from_matrix(&delta.rotation),
    )
}

/// Decode a [`PoseDelta9`] back to a rigid delta (translation in meters).
/// Fails if the rotation encoding is degenerate.
pub fn decode_pose_delta(d: &PoseDelta9, scale_m: f64) -> Result<Pose, GeomError> {
    Ok(Pose::new(
        matrix_from_rot6d(&d.rotation)?,
        d.translation * scale_m,
    ))
}

/// Learnable task-weight parameters. `v1`/`v2` balance translation against
/// rotation inside the tracking loss; `s1..s3` weight the three task losses;
/// `s4` weights the symmetry-bank uniformity penalty. All start at 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskWeights {
    pub v1: f64,
    pub v2: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl Default for TaskWeights {
    fn default() -> Self {
        TaskWeights {
            v1: 0.0,
            v2: 0.0,
            s1: 0.0,
            s2: 0.0,
            s3: 0.0,
            s4: 0.0,
        }
    }
}

/// Non-negative attention weights over a grid, summing to 1 (the output of
/// [`spatial_softmax`]).
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl AttentionMap {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Grid of 0/1 cells (foreground / unoccluded masks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl BinaryMask {
    /// Construct from 0/1 cell values (row-major). Any nonzero byte counts
    /// as 1 and is normalized to 1.
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self, LossError> {
        if values.len() != width * height {
            return Err(LossError::DimensionMismatch(format!(
                "mask has {} cells for a {width}×{height} grid",
                values.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            values: values.into_iter().map(|v| u8::from(v != 0)).collect(),
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            values: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.values[y * self.width + x] = u8::from(on);
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    /// True when every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| *a == 0 || *b != 0)
    }

    /// Centroid of set cells (cell-center coordinates), or `None` if empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                    n += 1;
                }
            }
        }
        if n == 0 {
            None
        } else {
            Some((sx / n as f64, sy / n as f64))
        }
    }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Symmetry-aware, inertia-weighted rotational error in radians:
/// geodesic distance between `ΔR̂·Ĝ*·Λgs` and `ΔR·Λgs`.
pub fn loss_rot(
    dr_hat: &RotationMatrix,
    dr_gt: &RotationMatrix,
    lambda_gs: &RotationMatrix,
    g_star: &RotationMatrix,
) -> f64 {
    kernels::loss_rot(
        &dr_hat.to_rows(),
        &dr_gt.to_rows(),
        &lambda_gs.to_rows(),
        &g_star.to_rows(),
    )
}

/// Tracking loss `e^{−v₁}·MSE + v₁ + v₂ + e^{−v₂}·loss_rot` over a
/// predicted delta against ground truth (translation in the normalized
/// delta units, rotation as a matrix). Fails if the predicted rotation
/// encoding is degenerate.
pub fn loss_track(
    pred: &PoseDelta9,
    gt_trans: &Vector3<f64>,
    gt_rot: &RotationMatrix,
    w: &TaskWeights,
    lambda_gs: &RotationMatrix,
    g_star: &RotationMatrix,
) -> Result<f64, LossError> {
    // Validate the encoding once; the kernel then re-derives the matrix so
    // the value matches what the gradient path computes.
    matrix_from_rot6d(&pred.rotation)?;
    let rx = pred.rotation.rx;
    let ry = pred.rotation.ry;
    Ok(kernels::loss_track(
        &[pred.translation.x, pred.translation.y, pred.translation.z],
        &[rx.x, rx.y, rx.z],
        &[ry.x, ry.y, ry.z],
        &[gt_trans.x, gt_trans.y, gt_trans.z],
        &gt_rot.to_rows(),
        w.v1,
        w.v2,
        &lambda_gs.to_rows(),
        &g_star.to_rows(),
    ))
}

/// Learnable weighting of the three task losses (tracking, unoccluded
/// attention, foreground attention).
pub fn loss_multitask(l_track: f64, l_unoccl: f64, l_foregr: f64, w: &TaskWeights) -> f64 {
    kernels::loss_multitask(l_track, l_unoccl, l_foregr, w.s1, w.s2, w.s3)
}

/// Mean pairwise geodesic spread ξ of the decoded bank rotations.
pub fn bank_spread(bank: &SymmetryBank) -> f64 {
    let mats: Vec<_> = (0..bank.len())
        .map(|i| bank.decoded_rows(i))
        .collect();
    kernels::bank_spread_xi(&mats)
}

/// Uniformity penalty `1/max(ξ, 1e-6)`: punishes a collapsed bank.
pub fn uniformity_penalty(bank: &SymmetryBank) -> f64 {
    kernels::penalty_from_xi(bank_spread(bank))
}

/// Add the weighted uniformity penalty for a single bank:
/// `loss + e^{−s₄}·penalty + s₄`.
pub fn loss_symmetric(loss: f64, bank: &SymmetryBank, s4: f64) -> f64 {
    loss_symmetric_batch(loss, &[uniformity_penalty(bank)], s4)
}

/// Batch form: the penalty term is the mean of per-element penalties,
/// `loss + e^{−s₄}·mean(penalties) + s₄`.
pub fn loss_symmetric_batch(loss: f64, penalties: &[f64], s4: f64) -> f64 {
    let mean = penalties.iter().sum::<f64>() / penalties.len() as f64;
    loss + (-s4).exp() * mean + s4
}

/// Softmax over a raw score grid (max-subtracted, numerically stable).
pub fn spatial_softmax(
    width: usize,
    height: usize,
    raw: &[f64],
) -> Result<AttentionMap, LossError> {
    if raw.is_empty() || raw.len() != width * height {
        return Err(LossError::DimensionMismatch(format!(
            "raw grid has {} cells for a {width}×{height} map",
            raw.len()
        )));
    }
    Ok(AttentionMap {
        width,
        height,
        values: kernels::spatial_softmax(raw),
    })
}

/// Normalize a mask to sum 1 for use as a BCE target. An all-zero mask
/// (fully occluded object) yields an all-zero target.
pub fn normalized_mask_target(mask: &BinaryMask) -> Vec<f64> {
    let total = mask.count_ones();
    if total == 0 {
        return vec![0.0; mask.values().len()];
    }
    let w = 1.0 / total as f64;
    mask.values()
        .iter()
        .map(|&v| if v != 0 { w } else { 0.0 })
        .collect()
}

/// Binary cross-entropy between an attention map and a mask normalized to
/// sum 1 (mean over cells, ε = 1e-12 under the logarithms).
pub fn bce_attention(map: &AttentionMap, mask: &BinaryMask) -> Result<f64, LossError> {
    if map.width != mask.width() || map.height != mask.height() {
        return Err(LossError::DimensionMismatch(format!(
            "attention map {}×{} vs mask {}×{}",
            map.width,
            map.height,
            mask.width(),
            mask.height()
        )));
    }
    let target = normalized_mask_target(mask);
    Ok(kernels::bce_mean(&map.values, &target))
}

/// LogCosh loss over the 9 raw delta parameters (sum of `ln cosh` of the
/// residuals).
pub fn logcosh(pred: &PoseDelta9, gt: &PoseDelta9) -> f64 {
    kernels::logcosh_sum(&pred.to_array(), &gt.to_array())
}

// ---------------------------------------------------------------------------
// Streaming standardization
// ---------------------------------------------------------------------------

/// Streaming mean/variance accumulator (Welford's update).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WelfordState {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl WelfordState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold one observation into the running statistics.
    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance (`m2 / (count − 1)`); `None` below 2 samples.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            None
        } else {
            Some(self.m2 / (self.count - 1) as f64)
        }
    }
}

/// Standardize `x` by the accumulated statistics: `(x − mean)/√variance`.
/// Fails with fewer than 2 samples or near-zero variance (≤ 1e-12).
pub fn standardize(x: f64, state: &WelfordState) -> Result<f64, LossError> {
    let var = state.variance().ok_or_else(|| {
        LossError::InsufficientSamples(format!(
            "standardize needs at least 2 samples, have {}",
            state.count
        ))
    })?;
    if var <= 1e-12 {
        return Err(LossError::InsufficientSamples(format!(
            "variance {var:.3e} too small to standardize"
        )));
    }
    Ok((x - state.mean) / var.sqrt())
}
