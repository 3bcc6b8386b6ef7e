//! Frame-pair dataset generation and on-disk layout.
//!
//! Each sample pairs a clean render at the previous pose (what a tracker
//! would synthesize from its last estimate) with an augmented observation
//! at the current pose, plus the encoded ground-truth pose delta. Samples
//! are independent: sample `i` draws every random quantity from a generator
//! seeded with `(master_seed, i)`, so generation parallelizes without
//! affecting output.
//!
//! On-disk layout per sample `i`: `rgb_<i>.ppm` / `depth_<i>.pgm` /
//! `fg_<i>.pgm` / `unoccl_<i>.pgm` for the observed frame,
//! `pred_rgb_<i>.ppm` / `pred_depth_<i>.pgm` / `pred_fg_<i>.pgm` for the
//! predicted frame, and `meta_<i>.json`; `manifest.json` records the count,
//! seed, and configuration echo.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{golden_spiral, gram_schmidt, rot_from_euler, EulerXYZ, Pose, TriMesh};
use crate::losses::{encode_pose_delta, BinaryMask, PoseDelta9, DEFAULT_DELTA_SCALE_M};
use crate::synth::{
    augment_photometric, background, composite, kinect_noise, pnm, render, uniform_albedo,
    AugmentConfig, Camera, NoiseParams, RgbdFrame, SynthError,
};

/// Pose-pair sampling ranges: the base placement of the object and the
/// frame-to-frame delta drawn on top of it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeltaRanges {
    /// Per-axis translation delta bound in meters (uniform in ±bound).
    pub trans_m: [f64; 3],
    /// Per-axis rotation delta bound in degrees (uniform in ±bound).
    pub rot_deg: [f64; 3],
    /// Object distance along the camera axis in meters.
    pub base_distance_m: f64,
    /// Uniform ±jitter of the base position in x/y, meters.
    pub lateral_jitter_m: f64,
}

impl Default for DeltaRanges {
    fn default() -> Self {
        DeltaRanges {
            trans_m: [0.02; 3],
            rot_deg: [10.0; 3],
            base_distance_m: 1.0,
            lateral_jitter_m: 0.1,
        }
    }
}

/// Full generation configuration, echoed into the dataset manifest.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub camera: Camera,
    /// Viewpoints on the golden spiral; sample `i` uses `i % n_viewpoints`.
    pub n_viewpoints: usize,
    pub ranges: DeltaRanges,
    pub augment: AugmentConfig,
    pub noise: NoiseParams,
    /// Normalization scale for the encoded translation delta, meters.
    pub delta_scale_m: f64,
    pub object_color: [u8; 3],
    pub occluder_color: [u8; 3],
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_viewpoints == 0 {
            return Err(SynthError::InvalidConfig("n_viewpoints must be ≥ 1".into()));
        }
        if self.delta_scale_m <= 0.0 {
            return Err(SynthError::InvalidConfig(
                "delta_scale_m must be positive".into(),
            ));
        }
        self.augment.validate()?;
        self.noise.validate()
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            camera: Camera::default(),
            n_viewpoints: 20,
            ranges: DeltaRanges::default(),
            augment: AugmentConfig::default(),
            noise: NoiseParams::default(),
            delta_scale_m: DEFAULT_DELTA_SCALE_M,
            object_color: [230, 120, 40],
            occluder_color: [185, 150, 120],
        }
    }
}

/// Per-sample metadata persisted as `meta_<i>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub index: usize,
    /// The derived per-sample seed actually used.
    pub seed: u64,
    pub viewpoint_index: usize,
    pub pose_prev: Pose,
    pub pose_cur: Pose,
    pub gt_delta: PoseDelta9,
    /// The occluder branch fired for this sample.
    pub occluded: bool,
    /// The occluder covered the object silhouette completely.
    pub fully_occluded: bool,
}

/// One generated frame pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Augmented observation at the current pose.
    pub observed: RgbdFrame,
    /// Clean render at the previous pose.
    pub predicted: RgbdFrame,
    pub meta: SampleMeta,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n_samples: usize,
    pub master_seed: u64,
    pub config: GenConfig,
}

fn uniform_pm<R: Rng>(rng: &mut R, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.gen_range(-bound..bound)
    } else {
        0.0
    }
}

/// Right-handed orthonormal frame whose third column is `dir`.
fn facing_rotation(dir: Vector3<f64>) -> Result<crate::geom::RotationMatrix, SynthError> {
    let up = if dir.y.abs() < 0.9 {
        Vector3::new(0.0, 1.0, 0.0)
    } else {
        Vector3::new(1.0, 0.0, 0.0)
    };
    let x = up.cross(&dir).normalize();
    let y = dir.cross(&x).normalize();
    let m = Matrix3::from_columns(&[x, y, dir]);
    Ok(gram_schmidt(&m)?)
}

/// Draws a (previous, current) pose pair: the object sits at the base
/// distance facing the camera from the selected golden-spiral viewpoint,
/// and the current pose composes a uniform random delta onto the previous
/// one. Zero ranges give `pose_cur == pose_prev` exactly.
pub fn sample_pose_pair<R: Rng>(
    rng: &mut R,
    viewpoint_index: usize,
    n_viewpoints: usize,
    ranges: &DeltaRanges,
) -> Result<(Pose, Pose), SynthError> {
    if viewpoint_index >= n_viewpoints {
        return Err(SynthError::InvalidConfig(format!(
            "viewpoint {viewpoint_index} out of {n_viewpoints}"
        )));
    }
    let dirs = golden_spiral(n_viewpoints)?;
    let rotation = facing_rotation(dirs[viewpoint_index])?;
    let translation = Vector3::new(
        uniform_pm(rng, ranges.lateral_jitter_m),
        uniform_pm(rng, ranges.lateral_jitter_m),
        ranges.base_distance_m,
    );
    let pose_prev = Pose::new(rotation, translation);

    let dt = Vector3::new(
        uniform_pm(rng, ranges.trans_m[0]),
        uniform_pm(rng, ranges.trans_m[1]),
        uniform_pm(rng, ranges.trans_m[2]),
    );
    let dr = rot_from_euler(&EulerXYZ::new(
        uniform_pm(rng, ranges.rot_deg[0]),
        uniform_pm(rng, ranges.rot_deg[1]),
        uniform_pm(rng, ranges.rot_deg[2]),
    ));
    let pose_cur = pose_prev.compose(&Pose::new(dr, dt));
    Ok((pose_prev, pose_cur))
}

/// Renders the occluder near the current object position, slightly in
/// front of it. Placement that happens to fall outside the frustum simply
/// yields no occluder for this sample.
fn render_occluder(
    occluder: &TriMesh,
    pose_cur: &Pose,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<RgbdFrame>, SynthError> {
    let offset = Vector3::new(
        rng.gen_range(-0.12..0.12),
        rng.gen_range(-0.12..0.12),
        rng.gen_range(-0.25..-0.05),
    );
    let pose = Pose::new(pose_cur.rotation, pose_cur.translation + offset);
    let albedo = uniform_albedo(occluder, cfg.occluder_color);
    match render(occluder, &pose, &cfg.camera, &albedo) {
        Ok(frame) => Ok(Some(frame)),
        Err(SynthError::OutOfFrustum) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Generates sample `index` of a dataset. Pure in `(meshes, cfg,
/// master_seed, index)`: repeated calls return identical samples and
/// callers may fan indices out across threads freely.
pub fn generate_sample(
    object: &TriMesh,
    occluder: &TriMesh,
    cfg: &GenConfig,
    master_seed: u64,
    index: usize,
) -> Result<Sample, SynthError> {
    cfg.validate()?;
    let mut rng = crate::rng::seeded(master_seed, index as u64);
    let seed = crate::rng::derive_seed(master_seed, index as u64);
    let viewpoint_index = index % cfg.n_viewpoints;

    let (pose_prev, pose_cur) =
        sample_pose_pair(&mut rng, viewpoint_index, cfg.n_viewpoints, &cfg.ranges)?;

    let albedo = uniform_albedo(object, cfg.object_color);
    let predicted = render(object, &pose_prev, &cfg.camera, &albedo)?;
    let current = render(object, &pose_cur, &cfg.camera, &albedo)?;

    let bg = background(cfg.camera.width, cfg.camera.height, &mut rng);
    let occ_frame = render_occluder(occluder, &pose_cur, cfg, &mut rng)?;
    let outcome = composite(&current, &bg, occ_frame.as_ref(), &cfg.augment, &mut rng)?;
    let noised = kinect_noise(&outcome.frame, &pose_cur, &cfg.noise, &mut rng)?;
    let observed = augment_photometric(&noised, &cfg.augment, &mut rng)?;

    let delta = pose_prev.invert().compose(&pose_cur);
    let gt_delta = encode_pose_delta(&delta, cfg.delta_scale_m);

    Ok(Sample {
        observed,
        predicted,
        meta: SampleMeta {
            index,
            seed,
            viewpoint_index,
            pose_prev,
            pose_cur,
            gt_delta,
            occluded: outcome.occluder_drawn,
            fully_occluded: outcome.fully_occluded,
        },
    })
}

fn mask_bytes(mask: &BinaryMask) -> Vec<u8> {
    mask.values().iter().map(|&v| if v != 0 { 255 } else { 0 }).collect()
}

fn write_sample(dir: &Path, sample: &Sample) -> Result<(), SynthError> {
    let i = sample.meta.index;
    let obs = &sample.observed;
    let (w, h) = (obs.width(), obs.height());
    pnm::write_ppm(&dir.join(format!("rgb_{i}.ppm")), w, h, obs.rgb())?;
    pnm::write_pgm16(&dir.join(format!("depth_{i}.pgm")), w, h, obs.depth())?;
    pnm::write_pgm8(&dir.join(format!("fg_{i}.pgm")), w, h, &mask_bytes(obs.fg_mask()))?;
    pnm::write_pgm8(
        &dir.join(format!("unoccl_{i}.pgm")),
        w,
        h,
        &mask_bytes(obs.unoccl_mask()),
    )?;
    let pred = &sample.predicted;
    pnm::write_ppm(&dir.join(format!("pred_rgb_{i}.ppm")), w, h, pred.rgb())?;
    pnm::write_pgm16(&dir.join(format!("pred_depth_{i}.pgm")), w, h, pred.depth())?;
    pnm::write_pgm8(
        &dir.join(format!("pred_fg_{i}.pgm")),
        w,
        h,
        &mask_bytes(pred.fg_mask()),
    )?;
    let meta = serde_json::to_string_pretty(&sample.meta)?;
    std::fs::write(dir.join(format!("meta_{i}.json")), meta)?;
    Ok(())
}

fn read_mask(path: &Path) -> Result<BinaryMask, SynthError> {
    let (w, h, bytes) = pnm::read_pgm8(path)?;
    BinaryMask::new(w, h, bytes)
        .map_err(|e| SynthError::ImageParse(format!("{}: {e}", path.display())))
}

/// Loads one sample previously written by [`generate_to_dir`].
pub fn load_sample(dir: &Path, index: usize) -> Result<Sample, SynthError> {
    let meta: SampleMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("meta_{index}.json")))?)?;
    let (w, h, rgb) = pnm::read_ppm(&dir.join(format!("rgb_{index}.ppm")))?;
    let (_, _, depth) = pnm::read_pgm16(&dir.join(format!("depth_{index}.pgm")))?;
    let fg = read_mask(&dir.join(format!("fg_{index}.pgm")))?;
    let unoccl = read_mask(&dir.join(format!("unoccl_{index}.pgm")))?;
    let observed = RgbdFrame::from_parts(w, h, rgb, depth, fg, unoccl)?;

    let (_, _, prgb) = pnm::read_ppm(&dir.join(format!("pred_rgb_{index}.ppm")))?;
    let (_, _, pdepth) = pnm::read_pgm16(&dir.join(format!("pred_depth_{index}.pgm")))?;
    let pfg = read_mask(&dir.join(format!("pred_fg_{index}.pgm")))?;
    let predicted = RgbdFrame::from_parts(w, h, prgb, pdepth, pfg.clone(), pfg)?;

    Ok(Sample {
        observed,
        predicted,
        meta,
    })
}

pub fn load_manifest(dir: &Path) -> Result<DatasetManifest, SynthError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(
        dir.join("manifest.json"),
    )?)?)
}

/// Generates `n` samples into `dir` (created if missing) and writes the
/// manifest. Samples are generated in parallel; the per-sample seeding
/// makes the result identical for any thread count.
pub fn generate_to_dir(
    object: &TriMesh,
    occluder: &TriMesh,
    cfg: &GenConfig,
    n: usize,
    master_seed: u64,
    dir: &Path,
) -> Result<DatasetManifest, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidConfig("sample count must be ≥ 1".into()));
    }
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    (0..n).into_par_iter().try_for_each(|i| {
        let sample = generate_sample(object, occluder, cfg, master_seed, i)?;
        write_sample(dir, &sample)
    })?;
    let manifest = DatasetManifest {
        n_samples: n,
        master_seed,
        config: *cfg,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::geodesic_distance;
    use crate::geom::ellipsoid;

    fn meshes() -> (TriMesh, TriMesh) {
        (
            ellipsoid(0.09, 0.06, 0.04, 1),
            ellipsoid(0.05, 0.08, 0.03, 1),
        )
    }

    fn small_config() -> GenConfig {
        GenConfig {
            camera: Camera::centered(48),
            ..GenConfig::default()
        }
    }

    #[test]
    fn zero_ranges_collapse_the_pair() {
        let ranges = DeltaRanges {
            trans_m: [0.0; 3],
            rot_deg: [0.0; 3],
            lateral_jitter_m: 0.0,
            ..DeltaRanges::default()
        };
        let mut rng = crate::rng::seeded(0, 0);
        let (prev, cur) = sample_pose_pair(&mut rng, 0, 5, &ranges).unwrap();
        assert_eq!(prev, cur);
    }

    #[test]
    fn pose_pair_is_seed_deterministic() {
        let ranges = DeltaRanges::default();
        let mut a = crate::rng::seeded(3, 9);
        let mut b = crate::rng::seeded(3, 9);
        let pa = sample_pose_pair(&mut a, 2, 7, &ranges).unwrap();
        let pb = sample_pose_pair(&mut b, 2, 7, &ranges).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn viewpoint_bound_is_enforced() {
        let mut rng = crate::rng::seeded(0, 0);
        let err = sample_pose_pair(&mut rng, 5, 5, &DeltaRanges::default());
        assert!(matches!(err, Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn generated_sample_is_reproducible() {
        let (object, occluder) = meshes();
        let cfg = small_config();
        let a = generate_sample(&object, &occluder, &cfg, 42, 3).unwrap();
        let b = generate_sample(&object, &occluder, &cfg, 42, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.meta.viewpoint_index, 3 % cfg.n_viewpoints);
    }

    #[test]
    fn gt_delta_recomposes_the_current_pose() {
        let (object, occluder) = meshes();
        let cfg = small_config();
        for i in 0..6 {
            let s = generate_sample(&object, &occluder, &cfg, 7, i).unwrap();
            let delta = crate::losses::decode_pose_delta(&s.meta.gt_delta, cfg.delta_scale_m)
                .expect("generated deltas decode");
            let recomposed = s.meta.pose_prev.compose(&delta);
            let dt = (recomposed.translation - s.meta.pose_cur.translation).norm();
            let dr = geodesic_distance(&recomposed.rotation, &s.meta.pose_cur.rotation);
            assert!(dt < 1e-7, "translation residual {dt}");
            assert!(dr < 1e-5, "rotation residual {dr}");
        }
    }

    #[test]
    fn clean_static_pair_matches_on_the_object() {
        let (object, occluder) = meshes();
        let mut cfg = small_config();
        cfg.augment = AugmentConfig::disabled();
        cfg.noise = NoiseParams::zero();
        cfg.ranges = DeltaRanges {
            trans_m: [0.0; 3],
            rot_deg: [0.0; 3],
            lateral_jitter_m: 0.0,
            ..DeltaRanges::default()
        };
        let s = generate_sample(&object, &occluder, &cfg, 11, 0).unwrap();
        for y in 0..s.observed.height() {
            for x in 0..s.observed.width() {
                if s.observed.fg_mask().get(x, y) && s.predicted.fg_mask().get(x, y) {
                    assert_eq!(s.observed.rgb_at(x, y), s.predicted.rgb_at(x, y));
                    assert_eq!(s.observed.depth_at(x, y), s.predicted.depth_at(x, y));
                }
            }
        }
    }

    #[test]
    fn round_trip_through_directory() {
        let (object, occluder) = meshes();
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_to_dir(&object, &occluder, &cfg, 3, 5, dir.path()).unwrap();
        assert_eq!(manifest.n_samples, 3);

        let loaded = load_manifest(dir.path()).unwrap();
        assert_eq!(loaded.n_samples, 3);
        assert_eq!(loaded.master_seed, 5);

        for i in 0..3 {
            let from_disk = load_sample(dir.path(), i).unwrap();
            let regenerated = generate_sample(&object, &occluder, &cfg, 5, i).unwrap();
            assert_eq!(from_disk.meta, regenerated.meta);
            assert_eq!(from_disk.observed, regenerated.observed);
            assert_eq!(from_disk.predicted.rgb(), regenerated.predicted.rgb());
            assert_eq!(from_disk.predicted.depth(), regenerated.predicted.depth());
        }
    }
}
