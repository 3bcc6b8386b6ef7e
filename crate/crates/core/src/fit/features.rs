//! Hand-built input features for the toy pose regressor.
//!
//! Eleven coarse image-space statistics compare the observed frame against
//! the clean render at the previous pose:
//!
//! | index | meaning |
//! |-------|---------|
//! | 0     | mean depth residual (m) over the render's silhouette |
//! | 1–2   | silhouette centroid displacement, normalized by image size |
//! | 3–4   | observed silhouette: mean offset from the image center |
//! | 5–7   | observed silhouette: second moments about the image center |
//! | 8–10  | mean RGB residual per channel over the render's silhouette |
//!
//! Everything is normalized to order-one ranges so a linear model on top is
//! well conditioned. Pixels with no depth return are excluded from the depth
//! residual; empty silhouettes contribute zeros rather than NaNs so a fully
//! occluded sample stays usable.

use crate::synth::{RgbdFrame, Sample};

/// Length of the vector produced by [`extract_features`].
pub const FEATURE_DIM: usize = 11;

/// Mean per-channel RGB residual (observed − rendered, in [−1, 1]) over the
/// render's silhouette.
fn rgb_residual(observed: &RgbdFrame, rendered: &RgbdFrame) -> [f64; 3] {
    let mut acc = [0.0_f64; 3];
    let mut n = 0usize;
    for y in 0..rendered.height() {
        for x in 0..rendered.width() {
            if !rendered.fg_mask().get(x, y) {
                continue;
            }
            let o = observed.rgb_at(x, y);
            let r = rendered.rgb_at(x, y);
            for c in 0..3 {
                acc[c] += (o[c] as f64 - r[c] as f64) / 255.0;
            }
            n += 1;
        }
    }
    if n > 0 {
        for a in &mut acc {
            *a /= n as f64;
        }
    }
    acc
}

/// Mean depth residual in meters (observed − rendered) over the render's
/// silhouette, counting only pixels where both depths are valid.
fn depth_residual_m(observed: &RgbdFrame, rendered: &RgbdFrame) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for y in 0..rendered.height() {
        for x in 0..rendered.width() {
            if !rendered.fg_mask().get(x, y) {
                continue;
            }
            let (o, r) = (observed.depth_at(x, y), rendered.depth_at(x, y));
            if o == 0 || r == 0 {
                continue;
            }
            acc += (o as f64 - r as f64) / 1000.0;
            n += 1;
        }
    }
    if n > 0 {
        acc / n as f64
    } else {
        0.0
    }
}

/// First and second moments of the observed silhouette about the image
/// center, with coordinates normalized to [−1/2, 1/2].
fn center_moments(frame: &RgbdFrame) -> [f64; 5] {
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    let mut acc = [0.0_f64; 5];
    let mut n = 0usize;
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if !frame.fg_mask().get(x, y) {
                continue;
            }
            let dx = (x as f64 + 0.5) / w - 0.5;
            let dy = (y as f64 + 0.5) / h - 0.5;
            acc[0] += dx;
            acc[1] += dy;
            acc[2] += dx * dx;
            acc[3] += dx * dy;
            acc[4] += dy * dy;
            n += 1;
        }
    }
    if n > 0 {
        for a in &mut acc {
            *a /= n as f64;
        }
    }
    acc
}

/// Extract the 11-dim feature vector for one generated sample.
pub fn extract_features(sample: &Sample) -> Vec<f64> {
    extract_features_frames(&sample.observed, &sample.predicted)
}

/// Extract the 11-dim feature vector from an explicit (observed, rendered)
/// frame pair. The tracker uses this directly: it renders the mesh at its
/// current pose estimate and compares that render against the live frame.
pub fn extract_features_frames(obs: &RgbdFrame, ren: &RgbdFrame) -> Vec<f64> {
    let mut f = Vec::with_capacity(FEATURE_DIM);

    f.push(depth_residual_m(obs, ren));

    match (obs.fg_mask().centroid(), ren.fg_mask().centroid()) {
        (Some((ox, oy)), Some((rx, ry))) => {
            f.push((ox - rx) / obs.width() as f64);
            f.push((oy - ry) / obs.height() as f64);
        }
        _ => {
            f.push(0.0);
            f.push(0.0);
        }
    }

    f.extend_from_slice(&center_moments(obs));
    f.extend_from_slice(&rgb_residual(obs, ren));
    debug_assert_eq!(f.len(), FEATURE_DIM);
    f
}
