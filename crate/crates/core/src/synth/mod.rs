//! Synthetic RGB-D frame-pair generation.
//!
//! A minimal flat-shaded z-buffer rasterizer renders a mesh into an
//! [`RgbdFrame`]; frames are composited over procedural backgrounds with an
//! optional occluder, degraded with a configurable depth-sensor noise model
//! and photometric augmentations, and streamed to disk as PPM/PGM images
//! plus JSON metadata. Every randomized stage draws from a per-sample seeded
//! generator, so datasets are reproducible regardless of thread count.

mod augment;
mod dataset;
pub mod pnm;
mod raster;

pub use augment::{
    augment_photometric, background, composite, kinect_noise, occlude_fraction, CompositeOutcome,
};
pub use dataset::{
    generate_sample, generate_to_dir, load_manifest, load_sample, sample_pose_pair,
    DatasetManifest, DeltaRanges, GenConfig, Sample, SampleMeta,
};
pub use raster::{render, uniform_albedo};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::GeomError;
use crate::losses::BinaryMask;

#[derive(Debug, Error)]
pub enum SynthError {
    /// No pixel of the mesh landed inside the image.
    #[error("mesh projects entirely outside the frame")]
    OutOfFrustum,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} per-face albedo entries, got {got}")]
    AlbedoCount { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed image file: {0}")]
    ImageParse(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One RGB-D frame with its ground-truth masks.
///
/// Depth is stored in millimeters; 0 marks an invalid (no-return) pixel.
/// `unoccl_mask` is always a subset of `fg_mask`: the former marks object
/// pixels that remain visible after occluder compositing, the latter the
/// full object silhouette.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbdFrame {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
    depth: Vec<u16>,
    fg_mask: BinaryMask,
    unoccl_mask: BinaryMask,
}

impl RgbdFrame {
    /// All-background frame: black, invalid depth, empty masks.
    pub fn empty(width: usize, height: usize) -> Self {
        RgbdFrame {
            width,
            height,
            rgb: vec![0; width * height * 3],
            depth: vec![0; width * height],
            fg_mask: BinaryMask::zeros(width, height),
            unoccl_mask: BinaryMask::zeros(width, height),
        }
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        rgb: Vec<u8>,
        depth: Vec<u16>,
        fg_mask: BinaryMask,
        unoccl_mask: BinaryMask,
    ) -> Result<Self, SynthError> {
        if rgb.len() != width * height * 3 || depth.len() != width * height {
            return Err(SynthError::DimensionMismatch(format!(
                "buffers for {width}x{height}: rgb {} depth {}",
                rgb.len(),
                depth.len()
            )));
        }
        if fg_mask.width() != width
            || fg_mask.height() != height
            || unoccl_mask.width() != width
            || unoccl_mask.height() != height
        {
            return Err(SynthError::DimensionMismatch(
                "mask dimensions differ from frame".into(),
            ));
        }
        if !unoccl_mask.is_subset_of(&fg_mask) {
            return Err(SynthError::DimensionMismatch(
                "unoccluded mask exceeds foreground mask".into(),
            ));
        }
        Ok(RgbdFrame {
            width,
            height,
            rgb,
            depth,
            fg_mask,
            unoccl_mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major interleaved RGB, 3 bytes per pixel.
    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    /// Row-major depth in millimeters; 0 = invalid.
    pub fn depth(&self) -> &[u16] {
        &self.depth
    }

    pub fn fg_mask(&self) -> &BinaryMask {
        &self.fg_mask
    }

    pub fn unoccl_mask(&self) -> &BinaryMask {
        &self.unoccl_mask
    }

    pub fn rgb_at(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn depth_at(&self, x: usize, y: usize) -> u16 {
        self.depth[y * self.width + x]
    }

    pub(crate) fn rgb_mut(&mut self) -> &mut [u8] {
        &mut self.rgb
    }

    pub(crate) fn depth_mut(&mut self) -> &mut [u16] {
        &mut self.depth
    }

    pub(crate) fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3], depth: u16) {
        let i = y * self.width + x;
        self.rgb[3 * i..3 * i + 3].copy_from_slice(&rgb);
        self.depth[i] = depth;
    }

    pub(crate) fn fg_mask_mut(&mut self) -> &mut BinaryMask {
        &mut self.fg_mask
    }

    pub(crate) fn unoccl_mask_mut(&mut self) -> &mut BinaryMask {
        &mut self.unoccl_mask
    }
}

/// Pinhole camera intrinsics plus the rendered image size.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Clip range in meters.
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(
        width: usize,
        height: usize,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        near: f64,
        far: f64,
    ) -> Result<Self, SynthError> {
        if width == 0 || height == 0 {
            return Err(SynthError::InvalidConfig("zero image size".into()));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(SynthError::InvalidConfig(format!(
                "focal lengths must be positive, got ({fx}, {fy})"
            )));
        }
        if !(0.0 < near && near < far) {
            return Err(SynthError::InvalidConfig(format!(
                "clip range must satisfy 0 < near < far, got ({near}, {far})"
            )));
        }
        Ok(Camera {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            near,
            far,
        })
    }

    /// A ~46° field-of-view camera centered on a `size`×`size` image.
    pub fn centered(size: usize) -> Self {
        let f = size as f64 * 175.0 / 150.0;
        Camera {
            width: size,
            height: size,
            fx: f,
            fy: f,
            cx: (size as f64 - 1.0) / 2.0,
            cy: (size as f64 - 1.0) / 2.0,
            near: 0.1,
            far: 5.0,
        }
    }
}

impl Default for Camera {
    fn default() -> Self {
        Camera::centered(150)
    }
}

/// Depth-sensor noise model parameters.
///
/// The axial term is σ_A(z, θ_y) = a0 + a1·(z − a2)² + axial_theta·θ_y²
/// in meters (z in meters, θ_y the rotation angle about the camera y-axis
/// in radians); the lateral terms are σ_L(z) = b0 + b1·z in pixels. The
/// default constants approximate a structured-light sensor and are declared
/// configuration, not ground truth.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseParams {
    pub axial_a0: f64,
    pub axial_a1: f64,
    pub axial_a2: f64,
    /// Weight of the θ_y² contribution; 0 disables the angular term.
    pub axial_theta: f64,
    pub lateral_x_b0: f64,
    pub lateral_x_b1: f64,
    pub lateral_y_b0: f64,
    pub lateral_y_b1: f64,
}

impl NoiseParams {
    /// σ evaluations must be nonnegative over the whole depth range, which
    /// these sign constraints guarantee for any z and θ_y.
    pub fn validate(&self) -> Result<(), SynthError> {
        let nonneg = [
            self.axial_a0,
            self.axial_a1,
            self.axial_theta,
            self.lateral_x_b0,
            self.lateral_x_b1,
            self.lateral_y_b0,
            self.lateral_y_b1,
        ];
        if nonneg.iter().any(|&v| v < 0.0) {
            return Err(SynthError::InvalidConfig(
                "noise coefficients must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// All σ functions identically zero: noise stage becomes the identity.
    pub fn zero() -> Self {
        NoiseParams {
            axial_a0: 0.0,
            axial_a1: 0.0,
            axial_a2: 0.0,
            axial_theta: 0.0,
            lateral_x_b0: 0.0,
            lateral_x_b1: 0.0,
            lateral_y_b0: 0.0,
            lateral_y_b1: 0.0,
        }
    }

    /// Axial standard deviation in meters at depth `z_m` and yaw `theta_y`.
    pub fn sigma_axial(&self, z_m: f64, theta_y: f64) -> f64 {
        self.axial_a0
            + self.axial_a1 * (z_m - self.axial_a2).powi(2)
            + self.axial_theta * theta_y * theta_y
    }

    /// Lateral standard deviations in pixels at depth `z_m`.
    pub fn sigma_lateral(&self, z_m: f64) -> (f64, f64) {
        (
            self.lateral_x_b0 + self.lateral_x_b1 * z_m,
            self.lateral_y_b0 + self.lateral_y_b1 * z_m,
        )
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            axial_a0: 0.0012,
            axial_a1: 0.0019,
            axial_a2: 0.4,
            axial_theta: 0.0,
            lateral_x_b0: 0.8,
            lateral_x_b1: 0.035,
            lateral_y_b0: 0.8,
            lateral_y_b1: 0.035,
        }
    }
}

/// Compositing and photometric augmentation configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Probability that an occluder is composited at all.
    pub p_occluder: f64,
    /// Probability, within occluded samples, that the occluder is scaled to
    /// cover the object silhouette completely.
    pub p_full_occlusion: f64,
    /// Gaussian RGB noise standard deviation in normalized [0,1] units.
    pub rgb_noise_sigma: f64,
    /// Per-frame HSV shift standard deviations (hue, saturation, value).
    pub hsv_noise_sigma: [f64; 3],
    /// Box blur kernel width (odd; 1 disables).
    pub blur_kernel: usize,
    /// Probability of the contrast stage v′ = clamp(α·v + β).
    pub p_contrast: f64,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Probability of the gamma stage v′ = 255·(v/255)^γ.
    pub p_gamma: f64,
    pub gamma_range: (f64, f64),
    /// Depth decimation factor (1 disables).
    pub depth_downsample_factor: usize,
    /// Probability of zeroing one modality (RGB or depth, coin flip).
    pub p_modality_dropout: f64,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let probs = [
            self.p_occluder,
            self.p_full_occlusion,
            self.p_contrast,
            self.p_gamma,
            self.p_modality_dropout,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(SynthError::InvalidConfig(
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        for (lo, hi) in [self.alpha_range, self.beta_range, self.gamma_range] {
            if lo > hi {
                return Err(SynthError::InvalidConfig(format!(
                    "range ({lo}, {hi}) is not ordered"
                )));
            }
        }
        if self.blur_kernel == 0 || self.blur_kernel % 2 == 0 {
            return Err(SynthError::InvalidConfig(
                "blur kernel must be odd and ≥ 1".into(),
            ));
        }
        if self.depth_downsample_factor == 0 {
            return Err(SynthError::InvalidConfig(
                "depth downsample factor must be ≥ 1".into(),
            ));
        }
        if self.rgb_noise_sigma < 0.0 || self.hsv_noise_sigma.iter().any(|&s| s < 0.0) {
            return Err(SynthError::InvalidConfig(
                "noise sigmas must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Every stage disabled: the augmentation pipeline becomes the identity
    /// and compositing never draws an occluder.
    pub fn disabled() -> Self {
        AugmentConfig {
            p_occluder: 0.0,
            p_full_occlusion: 0.0,
            rgb_noise_sigma: 0.0,
            hsv_noise_sigma: [0.0; 3],
            blur_kernel: 1,
            p_contrast: 0.0,
            alpha_range: (0.0, 3.0),
            beta_range: (-50.0, 50.0),
            p_gamma: 0.0,
            gamma_range: (0.0, 2.0),
            depth_downsample_factor: 1,
            p_modality_dropout: 0.0,
        }
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p_occluder: 0.60,
            p_full_occlusion: 0.15,
            rgb_noise_sigma: 2.0 / 255.0,
            hsv_noise_sigma: [0.02, 0.05, 0.05],
            blur_kernel: 3,
            p_contrast: 0.5,
            alpha_range: (0.0, 3.0),
            beta_range: (-50.0, 50.0),
            p_gamma: 0.5,
            gamma_range: (0.0, 2.0),
            depth_downsample_factor: 2,
            p_modality_dropout: 0.1,
        }
    }
}
