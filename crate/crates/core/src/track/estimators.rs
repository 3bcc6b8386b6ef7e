//! Delta estimators the tracking harness can drive.
//!
//! Two families live here. The scripted probes ([`OracleEstimator`],
//! [`BiasedOracle`], [`NoisyOracle`], [`FlipInjector`]) read the ground
//! truth in [`FrameContext`] to manufacture controlled error patterns —
//! exact correction, a constant drift, random jitter, or a 180° z-flip on
//! chosen frames — so harness behavior (resets, failure flags, the
//! reflective filter) can be verified in closed form. [`ModelEstimator`] is
//! the deployable shape: it only looks at the observation and its own pose
//! estimate, rendering the mesh at the prior and regressing the delta from
//! image-space features.

use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;

use crate::fit::{extract_features_frames, ToyRegressor};
use crate::geom::{rot_from_euler, EulerXYZ, Pose, TriMesh};
use crate::losses::{decode_pose_delta, encode_pose_delta, PoseDelta9};
use crate::rng;
use crate::synth::{render, uniform_albedo, Camera, RgbdFrame};

use super::{Estimator, FrameContext, TrackError};

/// True frame-to-frame motion `gt_prevᵢₙᵥ ∘ gt`, independent of the prior.
/// Estimators built on this do not self-correct, so any error they add
/// accumulates until the next reset.
fn true_motion(ctx: &FrameContext<'_>) -> Pose {
    ctx.gt_prev.invert().compose(ctx.gt)
}

/// Perfect corrector: returns exactly the delta from the prior to the
/// current ground-truth pose, so tracking error stays at zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleEstimator;

impl Estimator for OracleEstimator {
    fn estimate(&mut self, ctx: &FrameContext<'_>) -> Result<PoseDelta9, TrackError> {
        let delta = ctx.prior.invert().compose(ctx.gt);
        Ok(encode_pose_delta(&delta, ctx.delta_scale_m))
    }

    fn name(&self) -> String {
        "oracle".into()
    }
}

/// True motion plus a constant translation offset (meters, in the delta
/// frame). Because it ignores the prior, the offset accumulates linearly
/// between resets — a sawtooth error profile with a known slope.
#[derive(Clone, Copy, Debug)]
pub struct BiasedOracle {
    pub bias_m: Vector3<f64>,
}

impl BiasedOracle {
    pub fn new(bias_m: Vector3<f64>) -> Self {
        BiasedOracle { bias_m }
    }
}

impl Estimator for BiasedOracle {
    fn estimate(&mut self, ctx: &FrameContext<'_>) -> Result<PoseDelta9, TrackError> {
        let mut delta = true_motion(ctx);
        delta.translation += self.bias_m;
        Ok(encode_pose_delta(&delta, ctx.delta_scale_m))
    }

    fn name(&self) -> String {
        "bias-oracle".into()
    }
}

/// True motion plus zero-mean Gaussian jitter on translation (per-axis
/// meters) and rotation (per-axis Euler degrees). Each call draws fresh
/// noise, including re-queries from the reflective filter.
#[derive(Clone, Debug)]
pub struct NoisyOracle {
    pub sigma_t_m: f64,
    pub sigma_r_deg: f64,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn new(sigma_t_m: f64, sigma_r_deg: f64, seed: u64) -> Self {
        NoisyOracle {
            sigma_t_m,
            sigma_r_deg,
            rng: rng::seeded(seed, 0xE5),
        }
    }
}

impl Estimator for NoisyOracle {
    fn estimate(&mut self, ctx: &FrameContext<'_>) -> Result<PoseDelta9, TrackError> {
        let mut delta = true_motion(ctx);
        for i in 0..3 {
            delta.translation[i] += rng::normal(&mut self.rng, 0.0, self.sigma_t_m);
        }
        let jitter = rot_from_euler(&EulerXYZ::new(
            rng::normal(&mut self.rng, 0.0, self.sigma_r_deg),
            rng::normal(&mut self.rng, 0.0, self.sigma_r_deg),
            rng::normal(&mut self.rng, 0.0, self.sigma_r_deg),
        ));
        delta.rotation = delta.rotation * jitter;
        Ok(encode_pose_delta(&delta, ctx.delta_scale_m))
    }

    fn name(&self) -> String {
        "noisy-oracle".into()
    }
}

/// Wraps another estimator and, on the chosen frames, turns the estimated
/// orientation 180° about the world x axis. The delta is adjusted so the
/// candidate pose the tracker forms becomes `Rx(180°) · (unflipped
/// candidate)`; pre-multiplying shifts exactly the x component of the
/// candidate's intrinsic-XYZ Euler decomposition by 180°, leaving y and z
/// untouched — the signature the reflective filter is built to catch.
pub struct FlipInjector {
    inner: Box<dyn Estimator>,
    flip_frames: Vec<usize>,
}

impl FlipInjector {
    pub fn new(inner: Box<dyn Estimator>, flip_frames: Vec<usize>) -> Self {
        FlipInjector { inner, flip_frames }
    }
}

impl Estimator for FlipInjector {
    fn estimate(&mut self, ctx: &FrameContext<'_>) -> Result<PoseDelta9, TrackError> {
        let encoded = self.inner.estimate(ctx)?;
        if !self.flip_frames.contains(&ctx.index) {
            return Ok(encoded);
        }
        let delta = decode_pose_delta(&encoded, ctx.delta_scale_m)?;
        // candidate = prior · delta, so the delta rotation that turns the
        // candidate into Rx(π) · candidate is priorᵀ · Rx(π) · prior · δR.
        let x_flip = rot_from_euler(&EulerXYZ::new(180.0, 0.0, 0.0));
        let prior_rot = ctx.prior.rotation;
        let flipped = Pose::new(
            prior_rot.transpose() * x_flip * prior_rot * delta.rotation,
            delta.translation,
        );
        Ok(encode_pose_delta(&flipped, ctx.delta_scale_m))
    }

    fn name(&self) -> String {
        format!("flip({})", self.inner.name())
    }
}

/// The deployable estimator shape: render the mesh at the prior pose,
/// extract image-space features against the observation, and regress the
/// pose delta with a trained model. Never touches the ground truth.
pub struct ModelEstimator {
    model: ToyRegressor,
    mesh: TriMesh,
    camera: Camera,
    albedo: Vec<[u8; 3]>,
}

impl ModelEstimator {
    pub fn new(model: ToyRegressor, mesh: TriMesh, camera: Camera, color: [u8; 3]) -> Self {
        let albedo = uniform_albedo(&mesh, color);
        ModelEstimator {
            model,
            mesh,
            camera,
            albedo,
        }
    }

    fn render_at(&self, prior: &Pose) -> Result<RgbdFrame, TrackError> {
        Ok(render(&self.mesh, prior, &self.camera, &self.albedo)?)
    }
}

impl Estimator for ModelEstimator {
    fn estimate(&mut self, ctx: &FrameContext<'_>) -> Result<PoseDelta9, TrackError> {
        let rendered = self.render_at(ctx.prior)?;
        let features = extract_features_frames(ctx.observed, &rendered);
        Ok(self.model.forward(&features)?)
    }

    fn name(&self) -> String {
        "model".into()
    }
}
