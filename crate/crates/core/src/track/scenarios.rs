//! Scripted synthetic trajectories for exercising the tracking harness.
//!
//! Each scenario renders one object following a smooth, seeded motion path
//! and corrupts the observations to a declared degree. The paths are
//! analytic (sums of sinusoids with seeded phases and amplitude jitter), so
//! tests can reason about them in closed form:
//!
//! - [`ScenarioKind::Translation`] — lateral/axial sway, rotation held
//!   fixed at identity, clean observations.
//! - [`ScenarioKind::Rotation`] — fixed translation, smooth Euler wobble
//!   kept well clear of gimbal lock, clean observations.
//! - [`ScenarioKind::Occlusion`] — translation sway while an occluding bar
//!   ramps from 0% to 75% silhouette coverage over the trajectory.
//! - [`ScenarioKind::Hard`] — combined translation and rotation motion,
//!   occlusion ramping to 50%, depth sensor noise, and photometric
//!   augmentation.

use rand::Rng;

use crate::geom::{ellipsoid, rot_from_euler, EulerXYZ, Pose, RotationMatrix, TriMesh};
use crate::rng;
use crate::synth::{
    augment_photometric, kinect_noise, occlude_fraction, render, uniform_albedo, AugmentConfig,
    Camera, NoiseParams, RgbdFrame,
};

use super::TrackError;

/// Square image size used by every scenario.
pub const SCENARIO_IMAGE_SIZE: usize = 64;

/// Motion runs on a fixed timebase — sinusoid cycles are "per 100 frames"
/// regardless of trajectory length — so the frame-to-frame motion never
/// outgrows the encodable delta range (±1 encoded unit per translation
/// axis, i.e. ±20 mm at the default scale) on short trajectories.
const MOTION_TIMEBASE_FRAMES: f64 = 100.0;

/// Object standoff along the optical axis in meters.
pub const SCENARIO_STANDOFF_M: f64 = 0.95;

/// Flat albedo used for the scenario object.
pub const SCENARIO_COLOR: [u8; 3] = [200, 80, 60];

/// The object every scenario tracks: a smooth triaxial ellipsoid large
/// enough to cover a few hundred pixels at the standoff distance.
pub fn scenario_mesh() -> TriMesh {
    ellipsoid(0.12, 0.09, 0.10, 1)
}

/// The camera every scenario renders with.
pub fn scenario_camera() -> Camera {
    Camera::centered(SCENARIO_IMAGE_SIZE)
}

/// Which scripted trajectory to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Translation,
    Rotation,
    Occlusion,
    Hard,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Translation,
        ScenarioKind::Rotation,
        ScenarioKind::Occlusion,
        ScenarioKind::Hard,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Translation => "translation",
            ScenarioKind::Rotation => "rotation",
            ScenarioKind::Occlusion => "occlusion",
            ScenarioKind::Hard => "hard",
        }
    }

    pub fn from_name(name: &str) -> Option<ScenarioKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

/// One frame of a scripted trajectory: the true pose and what the sensor saw.
#[derive(Clone, Debug)]
pub struct TrajectoryFrame {
    pub gt: Pose,
    pub observed: RgbdFrame,
}

/// A full scripted trajectory plus the camera it was rendered with.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub name: String,
    pub camera: Camera,
    pub frames: Vec<TrajectoryFrame>,
}

/// Seeded sinusoid: `amp · j · sin(2π · cycles · u + φ)` where `j ∈ [0.8, 1.2)`
/// and `φ ∈ [0, 2π)` are drawn once per axis when the scenario is built.
struct Sinusoid {
    amp: f64,
    cycles: f64,
    phase: f64,
}

impl Sinusoid {
    fn seeded<R: Rng>(amp: f64, cycles: f64, rng: &mut R) -> Self {
        Sinusoid {
            amp: amp * rng.gen_range(0.8..1.2),
            cycles,
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn at(&self, u: f64) -> f64 {
        self.amp * (std::f64::consts::TAU * self.cycles * u + self.phase).sin()
    }
}

/// Lateral/axial sway used by the translation-driven scenarios, in meters.
struct TranslationPath {
    x: Sinusoid,
    y: Sinusoid,
    z: Sinusoid,
}

impl TranslationPath {
    fn seeded<R: Rng>(rng: &mut R) -> Self {
        TranslationPath {
            x: Sinusoid::seeded(0.050, 2.0, rng),
            y: Sinusoid::seeded(0.040, 3.0, rng),
            z: Sinusoid::seeded(0.030, 1.0, rng),
        }
    }

    fn at(&self, u: f64) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(
            self.x.at(u),
            self.y.at(u),
            SCENARIO_STANDOFF_M + self.z.at(u),
        )
    }
}

/// Euler wobble used by the rotation-driven scenarios, in degrees. The y
/// amplitude stays far below 90° so Euler extraction never approaches
/// gimbal lock.
struct RotationPath {
    x: Sinusoid,
    y: Sinusoid,
    z: Sinusoid,
}

impl RotationPath {
    fn seeded<R: Rng>(rng: &mut R) -> Self {
        RotationPath {
            x: Sinusoid::seeded(8.0, 2.0, rng),
            y: Sinusoid::seeded(10.0, 1.0, rng),
            z: Sinusoid::seeded(28.0, 3.0, rng),
        }
    }

    fn at(&self, u: f64) -> RotationMatrix {
        rot_from_euler(&EulerXYZ::new(self.x.at(u), self.y.at(u), self.z.at(u)))
    }
}

/// Mild photometric corruption for the hard scenario. Modality dropout is
/// left off so every frame keeps usable depth and color.
fn hard_photometric_config() -> AugmentConfig {
    let mut cfg = AugmentConfig::disabled();
    cfg.rgb_noise_sigma = 2.0 / 255.0;
    cfg.hsv_noise_sigma = [0.01, 0.02, 0.02];
    cfg.blur_kernel = 3;
    cfg.p_contrast = 0.5;
    cfg.alpha_range = (0.9, 1.1);
    cfg.beta_range = (-10.0, 10.0);
    cfg.p_gamma = 0.5;
    cfg.gamma_range = (0.9, 1.1);
    cfg.depth_downsample_factor = 2;
    cfg
}

/// Build a scripted trajectory of `n_frames` frames. The same `(kind,
/// n_frames, seed)` triple always produces the same trajectory.
pub fn build_scenario(
    kind: ScenarioKind,
    n_frames: usize,
    seed: u64,
) -> Result<Trajectory, TrackError> {
    if n_frames == 0 {
        return Err(TrackError::InvalidConfig(
            "a trajectory needs at least one frame".into(),
        ));
    }
    let mesh = scenario_mesh();
    let camera = scenario_camera();
    let albedo = uniform_albedo(&mesh, SCENARIO_COLOR);

    // Phase/amplitude jitter is drawn once, before any frames, so the path
    // shape depends only on the seed, not on the frame count.
    let mut path_rng = rng::seeded(seed, 0xC0);
    let translation = TranslationPath::seeded(&mut path_rng);
    let rotation = RotationPath::seeded(&mut path_rng);
    let noise = NoiseParams::default();
    let photometric = hard_photometric_config();

    let denom = (n_frames - 1).max(1) as f64;
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let u = k as f64 / MOTION_TIMEBASE_FRAMES;
        let ramp = k as f64 / denom;

        let (rot, trans) = match kind {
            ScenarioKind::Translation | ScenarioKind::Occlusion => {
                (RotationMatrix::identity(), translation.at(u))
            }
            ScenarioKind::Rotation => (
                rotation.at(u),
                nalgebra::Vector3::new(0.0, 0.0, SCENARIO_STANDOFF_M),
            ),
            ScenarioKind::Hard => (rotation.at(u), translation.at(u)),
        };
        let gt = Pose::new(rot, trans);

        let clean = render(&mesh, &gt, &camera, &albedo)?;
        let observed = match kind {
            ScenarioKind::Translation | ScenarioKind::Rotation => clean,
            ScenarioKind::Occlusion => occlude_fraction(&clean, 0.75 * ramp),
            ScenarioKind::Hard => {
                // One stream per frame keeps frames independent of each
                // other and of the path rng.
                let mut frame_rng = rng::seeded(seed, 1000 + k as u64);
                let occluded = occlude_fraction(&clean, 0.50 * ramp);
                let noisy = kinect_noise(&occluded, &gt, &noise, &mut frame_rng)?;
                augment_photometric(&noisy, &photometric, &mut frame_rng)?
            }
        };

        frames.push(TrajectoryFrame { gt, observed });
    }

    Ok(Trajectory {
        name: kind.name().to_string(),
        camera,
        frames,
    })
}
