//! Training loop of the toy pose regressor.
//!
//! One flat parameter vector holds, in order, the regressor weights, the
//! six task weights (v₁, v₂, s₁…s₄), and the raw symmetry-bank triplets
//! when a bank is attached. Gradients come from forward-mode duals — the
//! same kernels the gradient checker validates — swept per group:
//!
//! - regressor: every coordinate, through the affine head into the loss;
//! - task weights: five coordinates (v₁, v₂, s₁…s₃) through the weighted
//!   objective, plus the closed penalty coupling for s₄;
//! - bank: the three raw parameters of the oracle-selected entry per
//!   sample, plus a per-step sweep of the uniformity penalty in which only
//!   pairs touching the perturbed entry are re-evaluated.
//!
//! The first `warmup_epochs` epochs minimize LogCosh on the raw 9-dim
//! encoding and leave task weights and bank untouched; the weighted
//! objective takes over afterwards. A sample whose predicted rotation
//! encoding is degenerate at the current parameters has no defined
//! gradient there; it is skipped and counted rather than sent through a
//! numerically meaningless update.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{cosine_restart_lr, AdamState, OptimConfig};
use super::{forward_kernel, FitError, ToyRegressor};
use crate::ad::{self, Dual, Scalar};
use crate::geom::kernels::{geodesic, Mat3, Vec3};
use crate::geom::{matrix_from_rot6d, RotationMatrix};
use crate::losses::kernels as lk;
use crate::losses::{PoseDelta9, TaskWeights};
use crate::symmetry::{select_oracle, symmetry_matrix, SymmetryBank};
use crate::synth::Sample;

/// One supervised example: input features plus the encoded ground-truth
/// pose delta.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub features: Vec<f64>,
    pub gt: PoseDelta9,
}

impl TrainSample {
    /// Feature extraction plus the stored ground-truth delta of one
    /// generated sample.
    pub fn from_sample(sample: &Sample) -> Self {
        TrainSample {
            features: super::extract_features(sample),
            gt: sample.meta.gt_delta,
        }
    }

    pub fn batch_from(samples: &[Sample]) -> Vec<Self> {
        samples.iter().map(Self::from_sample).collect()
    }
}

/// Post-update summary of one epoch over the full training set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Learning rate the epoch was trained with.
    pub lr: f64,
    /// Mean objective of the phase that trained this epoch (LogCosh during
    /// warm-up, the weighted multi-task objective afterwards).
    pub loss: f64,
    /// Mean translation error in millimeters (decoded through the metric
    /// scale).
    pub trans_err_mm: f64,
    /// Mean rotational geodesic error in degrees, after re-posing by the
    /// selected symmetry entry when a bank is attached.
    pub rot_err_deg: f64,
    pub v1: f64,
    pub v2: f64,
    pub s: [f64; 4],
}

/// Record of a whole training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Samples skipped across all epochs because their predicted rotation
    /// encoding was degenerate at the parameters of the moment.
    pub skipped_samples: usize,
}

impl TrainHistory {
    /// CSV rendering, one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,loss,trans_err_mm,rot_err_deg,v1,v2,s1,s2,s3,s4\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                e.epoch,
                e.lr,
                e.loss,
                e.trans_err_mm,
                e.rot_err_deg,
                e.v1,
                e.v2,
                e.s[0],
                e.s[1],
                e.s[2],
                e.s[3]
            ));
        }
        out
    }
}

/// Everything the trainer mutates, resumable from a [`Checkpoint`].
#[derive(Clone, Debug)]
pub struct TrainSession {
    pub model: ToyRegressor,
    pub weights: TaskWeights,
    /// Optional trainable symmetry bank; its oracle-selected entry re-poses
    /// the label inside the rotational loss.
    pub bank: Option<SymmetryBank>,
    /// Inertia weighting of the rotational loss. Identity unless the caller
    /// supplies the orthonormalized tensor of a concrete mesh.
    pub lambda_gs: RotationMatrix,
    adam: AdamState,
    epoch: usize,
}

/// Serialized form of a [`TrainSession`]; plain JSON via serde.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub f_dim: usize,
    /// Flat regressor parameters, weights then bias.
    pub model_params: Vec<f64>,
    pub task_weights: TaskWeights,
    pub bank: Option<SymmetryBank>,
    pub lambda_gs: RotationMatrix,
    pub adam: AdamState,
    pub epoch: usize,
}

impl TrainSession {
    /// Fresh session: identity-initialized regressor, zero task weights,
    /// optional bank, identity inertia weighting.
    pub fn new(f_dim: usize, bank: Option<SymmetryBank>) -> Result<Self, FitError> {
        let model = ToyRegressor::new(f_dim)?;
        let n_params = model.param_len() + 6 + 3 * bank.as_ref().map_or(0, |b| b.len());
        Ok(TrainSession {
            model,
            weights: TaskWeights::default(),
            bank,
            lambda_gs: RotationMatrix::identity(),
            adam: AdamState::new(n_params),
            epoch: 0,
        })
    }

    /// Epochs completed so far (drives the cosine schedule across resumes).
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            f_dim: self.model.f_dim(),
            model_params: self.model.params().to_vec(),
            task_weights: self.weights,
            bank: self.bank.clone(),
            lambda_gs: self.lambda_gs,
            adam: self.adam.clone(),
            epoch: self.epoch,
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, FitError> {
        let mut model = ToyRegressor::new(ck.f_dim)?;
        if ck.model_params.len() != model.param_len() {
            return Err(FitError::BadCheckpoint(format!(
                "model has {} parameters, checkpoint stores {}",
                model.param_len(),
                ck.model_params.len()
            )));
        }
        model.params_mut().copy_from_slice(&ck.model_params);
        let expected = model.param_len() + 6 + 3 * ck.bank.as_ref().map_or(0, |b| b.len());
        if ck.adam.len() != expected {
            return Err(FitError::BadCheckpoint(format!(
                "optimizer state covers {} parameters, layout needs {expected}",
                ck.adam.len()
            )));
        }
        Ok(TrainSession {
            model,
            weights: ck.task_weights,
            bank: ck.bank,
            lambda_gs: ck.lambda_gs,
            adam: ck.adam,
            epoch: ck.epoch,
        })
    }
}

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

/// Offsets into the flat parameter vector:
/// `[model | v₁ v₂ s₁ s₂ s₃ s₄ | bank triplets]`.
#[derive(Clone, Copy)]
struct Layout {
    model_len: usize,
    v_off: usize,
    s_off: usize,
    bank_off: usize,
    total: usize,
    f_dim: usize,
    bank_len: usize,
}

impl Layout {
    fn of(session: &TrainSession) -> Layout {
        let model_len = session.model.param_len();
        let bank_len = session.bank.as_ref().map_or(0, |b| b.len());
        Layout {
            model_len,
            v_off: model_len,
            s_off: model_len + 2,
            bank_off: model_len + 6,
            total: model_len + 6 + 3 * bank_len,
            f_dim: session.model.f_dim(),
            bank_len,
        }
    }
}

fn flatten(session: &TrainSession, layout: &Layout) -> Vec<f64> {
    let mut p = vec![0.0; layout.total];
    p[..layout.model_len].copy_from_slice(session.model.params());
    let w = &session.weights;
    p[layout.v_off] = w.v1;
    p[layout.v_off + 1] = w.v2;
    p[layout.s_off..layout.s_off + 4].copy_from_slice(&[w.s1, w.s2, w.s3, w.s4]);
    if let Some(bank) = &session.bank {
        for (j, triplet) in bank.params().iter().enumerate() {
            p[layout.bank_off + 3 * j..layout.bank_off + 3 * j + 3].copy_from_slice(triplet);
        }
    }
    p
}

fn unflatten(p: &[f64], layout: &Layout, session: &mut TrainSession) {
    session.model.params_mut().copy_from_slice(&p[..layout.model_len]);
    session.weights.v1 = p[layout.v_off];
    session.weights.v2 = p[layout.v_off + 1];
    session.weights.s1 = p[layout.s_off];
    session.weights.s2 = p[layout.s_off + 1];
    session.weights.s3 = p[layout.s_off + 2];
    session.weights.s4 = p[layout.s_off + 3];
    if let Some(bank) = &mut session.bank {
        for (j, triplet) in bank.params_mut().iter_mut().enumerate() {
            triplet.copy_from_slice(&p[layout.bank_off + 3 * j..layout.bank_off + 3 * j + 3]);
        }
    }
}

// ---------------------------------------------------------------------------
// Objectives (generic over the scalar, shared by value and gradient paths)
// ---------------------------------------------------------------------------

fn lift_mat(m: &Mat3<f64>) -> Mat3<Dual> {
    m.map(|row| row.map(Dual::constant))
}

fn lift_vec(v: &[f64; 3]) -> Vec3<Dual> {
    v.map(Dual::constant)
}

/// LogCosh between the 9 head outputs and the encoded ground truth.
fn warmup_objective<S: Scalar>(out: &[S; 9], gt9: &[f64; 9]) -> S {
    let gt = gt9.map(S::from_f64);
    lk::logcosh_sum(out, &gt)
}

/// Post-warm-up per-sample objective: the weighted tracking loss wrapped in
/// the multi-task weighting. The two attention losses have no source in
/// this toy setting and enter as exact zeros, so their terms reduce to the
/// bare offsets s₂ + s₃.
#[allow(clippy::too_many_arguments)]
fn sample_objective<S: Scalar>(
    out: &[S; 9],
    v1: S,
    v2: S,
    s1: S,
    s2: S,
    s3: S,
    gt_t: &Vec3<S>,
    gt_rot: &Mat3<S>,
    lambda: &Mat3<S>,
    g_star: &Mat3<S>,
) -> S {
    let t = [out[0], out[1], out[2]];
    let rx = [out[3], out[4], out[5]];
    let ry = [out[6], out[7], out[8]];
    let l_track = lk::loss_track(&t, &rx, &ry, gt_t, gt_rot, v1, v2, lambda, g_star);
    let zero = S::from_f64(0.0);
    lk::loss_multitask(l_track, zero, zero, s1, s2, s3)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Ground-truth pieces precomputed once per run.
struct Prepared {
    gt9: Vec<[f64; 9]>,
    gt_t: Vec<[f64; 3]>,
    gt_rot: Vec<RotationMatrix>,
}

fn prepare(data: &[TrainSample], f_dim: usize) -> Result<Prepared, FitError> {
    if data.is_empty() {
        return Err(FitError::InvalidData("empty training set".into()));
    }
    let mut gt9 = Vec::with_capacity(data.len());
    let mut gt_t = Vec::with_capacity(data.len());
    let mut gt_rot = Vec::with_capacity(data.len());
    for (i, s) in data.iter().enumerate() {
        if s.features.len() != f_dim {
            return Err(FitError::DimensionMismatch(format!(
                "sample {i} has {} features, model expects {f_dim}",
                s.features.len()
            )));
        }
        let a = s.gt.to_array();
        gt9.push(a);
        gt_t.push([a[0], a[1], a[2]]);
        gt_rot.push(matrix_from_rot6d(&s.gt.rotation).map_err(|e| {
            FitError::InvalidData(format!("sample {i} ground-truth rotation: {e}"))
        })?);
    }
    Ok(Prepared { gt9, gt_t, gt_rot })
}

/// Run `cfg.epochs` epochs on `data`, mutating the session in place.
///
/// Deterministic for a fixed `(session, data, cfg, seed)`: shuffling is the
/// only randomness and draws from a per-epoch generator derived from
/// `seed`, so resumed runs shuffle exactly as uninterrupted ones do.
pub fn train(
    session: &mut TrainSession,
    data: &[TrainSample],
    cfg: &OptimConfig,
    seed: u64,
) -> Result<TrainHistory, FitError> {
    cfg.validate()?;
    let layout = Layout::of(session);
    if session.adam.len() != layout.total {
        return Err(FitError::BadCheckpoint(format!(
            "optimizer state covers {} parameters, layout needs {}",
            session.adam.len(),
            layout.total
        )));
    }
    let pre = prepare(data, layout.f_dim)?;
    let mut params = flatten(session, &layout);
    let mut history = TrainHistory::default();

    for _ in 0..cfg.epochs {
        let epoch = session.epoch;
        let warmup = epoch < cfg.warmup_epochs;
        let lr = cosine_restart_lr(epoch, cfg);

        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut crate::rng::seeded(seed, epoch as u64));

        for batch in order.chunks(cfg.batch_size) {
            step_batch(
                &mut params,
                &layout,
                session,
                data,
                &pre,
                batch,
                warmup,
                lr,
                cfg,
                &mut history.skipped_samples,
            );
        }

        unflatten(&params, &layout, session);
        history
            .epochs
            .push(epoch_stats(session, data, &pre, cfg, warmup, epoch, lr));
        session.epoch += 1;
    }
    Ok(history)
}

/// Accumulate the batch gradient, take one Adam step, apply decay.
#[allow(clippy::too_many_arguments)]
fn step_batch(
    params: &mut [f64],
    layout: &Layout,
    session: &mut TrainSession,
    data: &[TrainSample],
    pre: &Prepared,
    batch: &[usize],
    warmup: bool,
    lr: f64,
    cfg: &OptimConfig,
    skipped: &mut usize,
) {
    let mut grads = vec![0.0; layout.total];
    let mut live = 0usize;
    let lambda_rows = session.lambda_gs.to_rows();
    let identity_rows = RotationMatrix::identity().to_rows();
    let (v1, v2) = (params[layout.v_off], params[layout.v_off + 1]);
    let (s1, s2, s3) = (
        params[layout.s_off],
        params[layout.s_off + 1],
        params[layout.s_off + 2],
    );
    // Decode the bank once per step at the current parameters.
    let bank_view = current_bank(params, layout, session);

    for &i in batch {
        let sample = &data[i];
        let out = forward_kernel::<f64>(&params[..layout.model_len], layout.f_dim, &sample.features);
        let pred = PoseDelta9::from_array(out);
        let pred_rot = match matrix_from_rot6d(&pred.rotation) {
            Ok(r) => r,
            Err(_) => {
                // No defined gradient at a degenerate encoding; skip.
                *skipped += 1;
                continue;
            }
        };
        live += 1;

        if warmup {
            let g = ad::grad(
                |p| {
                    let o = forward_kernel(p, layout.f_dim, &sample.features);
                    warmup_objective(&o, &pre.gt9[i])
                },
                &params[..layout.model_len],
            );
            for (acc, gi) in grads[..layout.model_len].iter_mut().zip(&g) {
                *acc += gi;
            }
            continue;
        }

        let j_star = bank_view
            .as_ref()
            .map(|b| select_oracle(b, &pred_rot, &pre.gt_rot[i], &session.lambda_gs));
        let g_rows = match (&bank_view, j_star) {
            (Some(b), Some(j)) => b.decoded_rows(j),
            _ => identity_rows,
        };
        let gt_rot_rows = pre.gt_rot[i].to_rows();

        // Regressor sweep: head outputs vary, everything else constant.
        let g_model = ad::grad(
            |p| {
                let o = forward_kernel(p, layout.f_dim, &sample.features);
                sample_objective(
                    &o,
                    Dual::constant(v1),
                    Dual::constant(v2),
                    Dual::constant(s1),
                    Dual::constant(s2),
                    Dual::constant(s3),
                    &lift_vec(&pre.gt_t[i]),
                    &lift_mat(&gt_rot_rows),
                    &lift_mat(&lambda_rows),
                    &lift_mat(&g_rows),
                )
            },
            &params[..layout.model_len],
        );
        for (acc, gi) in grads[..layout.model_len].iter_mut().zip(&g_model) {
            *acc += gi;
        }

        // Task-weight sweep over the contiguous block [v₁, v₂, s₁, s₂, s₃];
        // the head outputs are constants here.
        let out_const = out.map(Dual::constant);
        let g_vs = ad::grad(
            |p| {
                sample_objective(
                    &out_const,
                    p[0],
                    p[1],
                    p[2],
                    p[3],
                    p[4],
                    &lift_vec(&pre.gt_t[i]),
                    &lift_mat(&gt_rot_rows),
                    &lift_mat(&lambda_rows),
                    &lift_mat(&g_rows),
                )
            },
            &params[layout.v_off..layout.v_off + 5],
        );
        for (k, gi) in g_vs.iter().enumerate() {
            grads[layout.v_off + k] += gi;
        }

        // Bank sweep: only the oracle-selected entry carries gradient for
        // this sample (the argmin index is locally constant).
        if let (Some(bank), Some(j)) = (&bank_view, j_star) {
            let off = layout.bank_off + 3 * j;
            let mask = bank.axis_mask();
            let g_bank = ad::grad(
                |p| {
                    let g = lk::decode_symmetry_triplet(&[p[0], p[1], p[2]], mask);
                    sample_objective(
                        &out_const,
                        Dual::constant(v1),
                        Dual::constant(v2),
                        Dual::constant(s1),
                        Dual::constant(s2),
                        Dual::constant(s3),
                        &lift_vec(&pre.gt_t[i]),
                        &lift_mat(&gt_rot_rows),
                        &lift_mat(&lambda_rows),
                        &g,
                    )
                },
                &params[off..off + 3],
            );
            for (k, gi) in g_bank.iter().enumerate() {
                grads[off + k] += gi;
            }
        }
    }

    if live == 0 {
        return; // every sample in this batch was skipped
    }
    let inv = 1.0 / live as f64;
    for g in &mut grads {
        *g *= inv;
    }

    // Uniformity penalty: one term per step, not per sample. Only pairs
    // touching the perturbed entry are re-evaluated in the dual sweep; the
    // remaining pair sum enters as a constant.
    if !warmup && layout.bank_len >= 2 {
        let bank = bank_view.as_ref().expect("bank_len >= 2 implies a bank");
        let s4 = params[layout.s_off + 3];
        let mask = bank.axis_mask();
        let mats: Vec<Mat3<f64>> = (0..layout.bank_len).map(|j| bank.decoded_rows(j)).collect();
        let mut pair_sum = 0.0;
        for j in 0..layout.bank_len {
            for k in (j + 1)..layout.bank_len {
                pair_sum += geodesic(&mats[j], &mats[k]);
            }
        }
        let n_pairs = (layout.bank_len * (layout.bank_len - 1) / 2) as f64;
        let xi = pair_sum / n_pairs;
        let pen = lk::penalty_from_xi(xi);
        grads[layout.s_off + 3] += 1.0 - (-s4).exp() * pen;

        let weight = (-s4).exp();
        for j in 0..layout.bank_len {
            let off = layout.bank_off + 3 * j;
            let sum_j: f64 = (0..layout.bank_len)
                .filter(|&k| k != j)
                .map(|k| geodesic(&mats[j], &mats[k]))
                .sum();
            let rest = pair_sum - sum_j;
            let g_pen = ad::grad(
                |p| {
                    let gj = lk::decode_symmetry_triplet(&[p[0], p[1], p[2]], mask);
                    let mut sum = Dual::constant(rest);
                    for (k, other) in mats.iter().enumerate() {
                        if k != j {
                            sum = sum + geodesic(&gj, &lift_mat(other));
                        }
                    }
                    let xi_d = sum * Dual::constant(1.0 / n_pairs);
                    Dual::constant(weight) * lk::penalty_from_xi(xi_d)
                },
                &params[off..off + 3],
            );
            for (k, gi) in g_pen.iter().enumerate() {
                grads[off + k] += gi;
            }
        }
    }

    if warmup {
        // Warm-up freezes task weights and bank: only the regressor block
        // may move, whatever rounding noise the sweeps above produced.
        for g in &mut grads[layout.model_len..] {
            *g = 0.0;
        }
    }

    session.adam.step(params, &grads, lr);
    // Decay the regressor weights only: shrinking the bias would pull the
    // rotation head toward the degenerate all-zero encoding, and the task
    // weights and bank are offsets, not magnitudes.
    let keep = 1.0 - cfg.weight_decay;
    for p in &mut params[..layout.model_len - 9] {
        *p *= keep;
    }
}

/// Bank reconstructed from the current flat parameters (the session copy
/// lags until the epoch-end unflatten).
fn current_bank(params: &[f64], layout: &Layout, session: &TrainSession) -> Option<SymmetryBank> {
    session.bank.as_ref().map(|b| {
        let mut bank = b.clone();
        for (j, triplet) in bank.params_mut().iter_mut().enumerate() {
            triplet.copy_from_slice(&params[layout.bank_off + 3 * j..layout.bank_off + 3 * j + 3]);
        }
        bank
    })
}

/// Full-data summary at the current (post-update) session state.
fn epoch_stats(
    session: &TrainSession,
    data: &[TrainSample],
    pre: &Prepared,
    cfg: &OptimConfig,
    warmup: bool,
    epoch: usize,
    lr: f64,
) -> EpochStats {
    let w = &session.weights;
    let lambda_rows = session.lambda_gs.to_rows();
    let identity = RotationMatrix::identity();
    let mut loss_sum = 0.0;
    let mut t_mm = 0.0;
    let mut r_deg = 0.0;
    let mut n = 0usize;

    for (i, sample) in data.iter().enumerate() {
        let out = forward_kernel::<f64>(session.model.params(), session.model.f_dim(), &sample.features);
        let pred = PoseDelta9::from_array(out);
        let Ok(pred_rot) = matrix_from_rot6d(&pred.rotation) else {
            continue;
        };
        n += 1;

        let j_star = session
            .bank
            .as_ref()
            .map(|b| select_oracle(b, &pred_rot, &pre.gt_rot[i], &session.lambda_gs));
        let g_star = match (&session.bank, j_star) {
            (Some(b), Some(j)) => symmetry_matrix(b, j).expect("selected index is in range"),
            _ => identity,
        };

        if warmup {
            loss_sum += warmup_objective(&out, &pre.gt9[i]);
        } else {
            loss_sum += sample_objective(
                &out,
                w.v1,
                w.v2,
                w.s1,
                w.s2,
                w.s3,
                &pre.gt_t[i],
                &pre.gt_rot[i].to_rows(),
                &lambda_rows,
                &g_star.to_rows(),
            );
        }

        let dt = pred.translation - sample.gt.translation;
        t_mm += dt.norm() * cfg.delta_scale_m * 1000.0;
        r_deg += crate::geom::geodesic_distance(&(pred_rot * g_star), &pre.gt_rot[i]).to_degrees();
    }

    let denom = n.max(1) as f64;
    let mut loss = loss_sum / denom;
    if !warmup && session.bank.as_ref().is_some_and(|b| b.len() >= 2) {
        let bank = session.bank.as_ref().unwrap();
        loss = crate::losses::loss_symmetric(loss, bank, w.s4);
    }

    EpochStats {
        epoch,
        lr,
        loss,
        trans_err_mm: t_mm / denom,
        rot_err_deg: r_deg / denom,
        v1: w.v1,
        v2: w.v2,
        s: [w.s1, w.s2, w.s3, w.s4],
    }
}
