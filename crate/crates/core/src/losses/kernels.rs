//! Scalar-generic loss formulas, instantiated at `f64` for evaluation and
//! at [`crate::ad::Dual`] for forward-mode gradients.

use crate::ad::Scalar;
use crate::geom::kernels::{self, Mat3, Vec3};

/// Numerical floor under the softmax/BCE logarithms.
pub const BCE_EPS: f64 = 1e-12;

/// Floor on the bank spread ξ before inversion, capping the uniformity
/// penalty at 1e6.
pub const XI_FLOOR: f64 = 1e-6;

/// Saturation bound for tanh-decoded symmetry angles: keeps `tanh(p)·π`
/// strictly inside (−π, π) even where f64 tanh rounds to ±1.
pub const TANH_SAT: f64 = 1.0 - 1e-12;

/// Mean squared difference over the three components.
pub fn mse3<S: Scalar>(a: &Vec3<S>, b: &Vec3<S>) -> S {
    let third = S::from_f64(1.0 / 3.0);
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2) * third
}

/// Symmetry-aware, inertia-weighted rotational error:
/// geodesic distance between `ΔR̂ · Ĝ* · Λgs` and `ΔR · Λgs`.
pub fn loss_rot<S: Scalar>(
    dr_hat: &Mat3<S>,
    dr_gt: &Mat3<S>,
    lambda_gs: &Mat3<S>,
    g_star: &Mat3<S>,
) -> S {
    let lhs = kernels::mat_mul(&kernels::mat_mul(dr_hat, g_star), lambda_gs);
    let rhs = kernels::mat_mul(dr_gt, lambda_gs);
    kernels::geodesic(&lhs, &rhs)
}

/// Tracking loss with learnable balance between translation and rotation:
/// `e^{−v₁}·MSE(t̂, t) + v₁ + v₂ + e^{−v₂}·loss_rot`.
///
/// The predicted rotation enters as raw 6-parameter values and is
/// orthonormalized here, so gradients flow through the encoding.
#[allow(clippy::too_many_arguments)]
pub fn loss_track<S: Scalar>(
    pred_trans: &Vec3<S>,
    pred_rx: &Vec3<S>,
    pred_ry: &Vec3<S>,
    gt_trans: &Vec3<S>,
    gt_rot: &Mat3<S>,
    v1: S,
    v2: S,
    lambda_gs: &Mat3<S>,
    g_star: &Mat3<S>,
) -> S {
    let dr_hat = kernels::rot6d_to_matrix(pred_rx, pred_ry);
    let trans_term = (-v1).exp() * mse3(pred_trans, gt_trans);
    let rot_term = (-v2).exp() * loss_rot(&dr_hat, gt_rot, lambda_gs, g_star);
    trans_term + v1 + v2 + rot_term
}

/// Learnable weighting of the three task losses:
/// `e^{−s₁}·L_track + e^{−s₂}·L_unoccl + e^{−s₃}·L_foregr + s₁ + s₂ + s₃`.
pub fn loss_multitask<S: Scalar>(
    l_track: S,
    l_unoccl: S,
    l_foregr: S,
    s1: S,
    s2: S,
    s3: S,
) -> S {
    (-s1).exp() * l_track + (-s2).exp() * l_unoccl + (-s3).exp() * l_foregr + s1 + s2 + s3
}

/// `ln cosh d`, overflow-safe: `|d| + ln(1 + e^{−2|d|}) − ln 2`.
pub fn ln_cosh<S: Scalar>(d: S) -> S {
    let a = d.abs();
    a + (-(a + a)).exp().ln_1p() - S::from_f64(std::f64::consts::LN_2)
}

/// Sum of `ln cosh` over paired residuals.
pub fn logcosh_sum<S: Scalar>(pred: &[S], gt: &[S]) -> S {
    debug_assert_eq!(pred.len(), gt.len());
    let mut acc = S::from_f64(0.0);
    for (p, g) in pred.iter().zip(gt.iter()) {
        acc = acc + ln_cosh(*p - *g);
    }
    acc
}

/// Softmax over a flattened grid with max subtraction for stability.
/// Output is non-negative and sums to 1.
pub fn spatial_softmax<S: Scalar>(raw: &[S]) -> Vec<S> {
    let mut max = raw[0];
    for &v in &raw[1..] {
        max = max.max(v);
    }
    let exps: Vec<S> = raw.iter().map(|&v| (v - max).exp()).collect();
    let mut total = S::from_f64(0.0);
    for &e in &exps {
        total = total + e;
    }
    let inv = S::from_f64(1.0) / total;
    exps.into_iter().map(|e| e * inv).collect()
}

/// Binary cross-entropy of an attention map against a normalized target,
/// mean over cells: `−[t·ln(p + ε) + (1 − t)·ln(1 − p + ε)]`.
pub fn bce_mean<S: Scalar>(map: &[S], target: &[f64]) -> S {
    debug_assert_eq!(map.len(), target.len());
    let eps = S::from_f64(BCE_EPS);
    let one = S::from_f64(1.0);
    let mut acc = S::from_f64(0.0);
    for (&p, &t) in map.iter().zip(target.iter()) {
        let t_s = S::from_f64(t);
        let term = t_s * (p + eps).ln() + (one - t_s) * (one - p + eps).ln();
        acc = acc - term;
    }
    acc * S::from_f64(1.0 / map.len() as f64)
}

/// Decode one bank triplet: masked components become `tanh(param)·π`
/// radians of intrinsic x-y-z Euler rotation; unmasked components are 0.
/// The tanh output is clamped to `±TANH_SAT` because f64 tanh saturates to
/// exactly ±1 for |param| ≳ 19, and decoded angles must stay strictly
/// inside (−π, π).
pub fn decode_symmetry_triplet<S: Scalar>(params: &[S; 3], axis_mask: [bool; 3]) -> Mat3<S> {
    let pi = S::from_f64(std::f64::consts::PI);
    let zero = S::from_f64(0.0);
    let angle = |i: usize| {
        if axis_mask[i] {
            params[i].tanh().clamp_to(-TANH_SAT, TANH_SAT) * pi
        } else {
            zero
        }
    };
    kernels::euler_xyz_to_matrix(angle(0), angle(1), angle(2))
}

/// Mean pairwise geodesic spread of decoded bank rotations:
/// `ξ = 1/(B₂(B₂−1)) · Σⱼ Σ_{k≠j} d(Ĝ_k, Ĝ_j)`.
pub fn bank_spread_xi<S: Scalar>(mats: &[Mat3<S>]) -> S {
    let b = mats.len();
    debug_assert!(b >= 2);
    let mut acc = S::from_f64(0.0);
    for j in 0..b {
        for k in (j + 1)..b {
            acc = acc + kernels::geodesic(&mats[j], &mats[k]);
        }
    }
    // Unordered pairs counted once; the double sum counts each twice.
    acc * S::from_f64(2.0 / (b as f64 * (b as f64 - 1.0)))
}

/// `1 / max(ξ, XI_FLOOR)`: small when the bank is spread out, capped at 1e6
/// when it collapses.
pub fn penalty_from_xi<S: Scalar>(xi: S) -> S {
    S::from_f64(1.0) / xi.max(S::from_f64(XI_FLOOR))
}
