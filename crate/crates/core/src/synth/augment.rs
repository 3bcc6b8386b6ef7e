//! Compositing, depth-sensor noise, and photometric augmentation.
//!
//! Stage order inside [`augment_photometric`] is fixed: Gaussian RGB noise,
//! HSV jitter, box blur, probabilistic contrast, probabilistic gamma, depth
//! decimation with nearest-neighbor upsampling, and modality dropout.
//! Stages whose parameters disable them are skipped outright so a disabled
//! pipeline is a bit-exact identity. Depth validity is one-way: a valid
//! pixel may become invalid, an invalid pixel never becomes valid.

use rand::Rng;

use crate::geom::{euler_from_rot, Pose};
use crate::rng::normal;
use crate::synth::{AugmentConfig, NoiseParams, RgbdFrame, SynthError};

/// Result of compositing one observed frame, with the branch decisions the
/// sampler needs to record.
#[derive(Clone, Debug)]
pub struct CompositeOutcome {
    pub frame: RgbdFrame,
    /// An occluder layer was composited (the p_occluder branch fired).
    pub occluder_drawn: bool,
    /// The occluder was stamped over the whole object silhouette.
    pub fully_occluded: bool,
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn depth_mm(v: f64) -> u16 {
    v.round().clamp(1.0, 65535.0) as u16
}

/// Uniform draw that tolerates a degenerate (point) range.
fn uniform_in<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.gen_range(range.0..range.1)
    } else {
        range.0
    }
}

// ---------------------------------------------------------------------------
// Procedural background
// ---------------------------------------------------------------------------

const LATTICE: usize = 8;

fn fade(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Smooth value-noise RGB over a slanted constant-gradient depth plane.
/// Every pixel is valid; both masks are empty.
pub fn background<R: Rng>(width: usize, height: usize, rng: &mut R) -> RgbdFrame {
    let grid = LATTICE + 1;
    let lattice: Vec<[u8; 3]> = (0..grid * grid)
        .map(|_| [rng.gen(), rng.gen(), rng.gen()])
        .collect();
    let z0 = rng.gen_range(1.2..3.0);
    let gx = rng.gen_range(-0.2..0.2);
    let gy = rng.gen_range(-0.2..0.2);

    let mut frame = RgbdFrame::empty(width, height);
    let (nx, ny) = ((width.max(2) - 1) as f64, (height.max(2) - 1) as f64);
    for y in 0..height {
        for x in 0..width {
            let u = x as f64 / nx * LATTICE as f64;
            let v = y as f64 / ny * LATTICE as f64;
            let (i0, j0) = ((u as usize).min(LATTICE - 1), (v as usize).min(LATTICE - 1));
            let (tu, tv) = (fade(u - i0 as f64), fade(v - j0 as f64));
            let corner = |i: usize, j: usize| lattice[j * grid + i];
            let mut rgb = [0u8; 3];
            for (c, out) in rgb.iter_mut().enumerate() {
                let top = f64::from(corner(i0, j0)[c]) * (1.0 - tu)
                    + f64::from(corner(i0 + 1, j0)[c]) * tu;
                let bottom = f64::from(corner(i0, j0 + 1)[c]) * (1.0 - tu)
                    + f64::from(corner(i0 + 1, j0 + 1)[c]) * tu;
                *out = to_u8(top * (1.0 - tv) + bottom * tv);
            }
            let z = z0 + gx * (x as f64 / nx - 0.5) + gy * (y as f64 / ny - 0.5);
            frame.set_pixel(x, y, rgb, depth_mm(z.max(0.2) * 1000.0));
        }
    }
    frame
}

// ---------------------------------------------------------------------------
// Compositing
// ---------------------------------------------------------------------------

fn check_dims(a: &RgbdFrame, b: &RgbdFrame) -> Result<(), SynthError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(SynthError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn fg_bounds(frame: &RgbdFrame) -> Option<(usize, usize, usize, usize)> {
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    let mut any = false;
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if frame.fg_mask().get(x, y) {
                any = true;
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    any.then_some((x0, x1, y0, y1))
}

fn valid_bounds(frame: &RgbdFrame) -> Option<(usize, usize, usize, usize)> {
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    let mut any = false;
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if frame.depth_at(x, y) > 0 {
                any = true;
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    any.then_some((x0, x1, y0, y1))
}

fn mean_valid_color(frame: &RgbdFrame) -> [u8; 3] {
    let (mut sum, mut n) = ([0u64; 3], 0u64);
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if frame.depth_at(x, y) > 0 {
                let c = frame.rgb_at(x, y);
                for i in 0..3 {
                    sum[i] += u64::from(c[i]);
                }
                n += 1;
            }
        }
    }
    if n == 0 {
        [120, 110, 100]
    } else {
        [
            (sum[0] / n) as u8,
            (sum[1] / n) as u8,
            (sum[2] / n) as u8,
        ]
    }
}

/// Fills background where the object is absent, then composites an occluder
/// layer with probability `p_occluder` (depth test: strictly nearer pixels
/// win). Within occluded draws, with probability `p_full_occlusion` the
/// occluder is translated and scaled to cover the entire object silhouette.
/// The foreground mask is left untouched; the unoccluded mask drops the
/// pixels the occluder covers.
pub fn composite<R: Rng>(
    object: &RgbdFrame,
    background: &RgbdFrame,
    occluder: Option<&RgbdFrame>,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<CompositeOutcome, SynthError> {
    check_dims(object, background)?;
    if let Some(occ) = occluder {
        check_dims(object, occ)?;
    }

    let mut out = object.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            if !out.fg_mask().get(x, y) {
                out.set_pixel(x, y, background.rgb_at(x, y), background.depth_at(x, y));
            }
        }
    }

    let occluder_drawn = match occluder {
        Some(_) => rng.gen::<f64>() < cfg.p_occluder,
        None => false,
    };
    if !occluder_drawn {
        return Ok(CompositeOutcome {
            frame: out,
            occluder_drawn: false,
            fully_occluded: false,
        });
    }
    let occ = occluder.expect("occluder_drawn implies an occluder frame");
    let fully_occluded = rng.gen::<f64>() < cfg.p_full_occlusion;

    if fully_occluded {
        // Stamp the occluder's appearance over the padded object bounding
        // box so coverage of the silhouette is total by construction.
        if let Some((fx0, fx1, fy0, fy1)) = fg_bounds(&out) {
            let pad = 2usize;
            let x0 = fx0.saturating_sub(pad);
            let y0 = fy0.saturating_sub(pad);
            let x1 = (fx1 + pad).min(out.width() - 1);
            let y1 = (fy1 + pad).min(out.height() - 1);

            let mut front = u16::MAX;
            for y in 0..out.height() {
                for x in 0..out.width() {
                    if out.fg_mask().get(x, y) && out.depth_at(x, y) > 0 {
                        front = front.min(out.depth_at(x, y));
                    }
                }
            }
            let slab = front.saturating_sub(30).max(1);
            let fallback = mean_valid_color(occ);
            let src = valid_bounds(occ);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let rgb = match src {
                        Some((sx0, sx1, sy0, sy1)) => {
                            let u = (x - x0) as f64 / (x1 - x0).max(1) as f64;
                            let v = (y - y0) as f64 / (y1 - y0).max(1) as f64;
                            let sx = sx0 + (u * (sx1 - sx0) as f64).round() as usize;
                            let sy = sy0 + (v * (sy1 - sy0) as f64).round() as usize;
                            if occ.depth_at(sx, sy) > 0 {
                                occ.rgb_at(sx, sy)
                            } else {
                                fallback
                            }
                        }
                        None => fallback,
                    };
                    out.set_pixel(x, y, rgb, slab);
                    if out.fg_mask().get(x, y) {
                        out.unoccl_mask_mut().set(x, y, false);
                    }
                }
            }
        }
    } else {
        for y in 0..out.height() {
            for x in 0..out.width() {
                let oz = occ.depth_at(x, y);
                if oz == 0 {
                    continue;
                }
                let cz = out.depth_at(x, y);
                if cz == 0 || oz < cz {
                    out.set_pixel(x, y, occ.rgb_at(x, y), oz);
                    if out.fg_mask().get(x, y) {
                        out.unoccl_mask_mut().set(x, y, false);
                    }
                }
            }
        }
    }

    Ok(CompositeOutcome {
        frame: out,
        occluder_drawn: true,
        fully_occluded,
    })
}

/// Covers `fraction` of the object's silhouette with a flat occluder bar
/// sweeping in from the left of its bounding box. Used by scripted
/// occlusion scenarios where coverage must ramp deterministically.
pub fn occlude_fraction(frame: &RgbdFrame, fraction: f64) -> RgbdFrame {
    let fraction = fraction.clamp(0.0, 1.0);
    let mut out = frame.clone();
    let total = out.fg_mask().count_ones();
    if fraction <= 0.0 || total == 0 {
        return out;
    }
    let Some((x0, x1, y0, y1)) = fg_bounds(&out) else {
        return out;
    };
    let mut front = u16::MAX;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if out.fg_mask().get(x, y) && out.depth_at(x, y) > 0 {
                front = front.min(out.depth_at(x, y));
            }
        }
    }
    let slab = front.saturating_sub(30).max(1);
    let target = (fraction * total as f64).ceil() as usize;
    let mut covered = 0usize;
    for x in x0..=x1 {
        if covered >= target {
            break;
        }
        for y in y0..=y1 {
            if out.fg_mask().get(x, y) {
                covered += 1;
                out.unoccl_mask_mut().set(x, y, false);
            }
            out.set_pixel(x, y, [105, 95, 90], slab);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Depth-sensor noise
// ---------------------------------------------------------------------------

/// Applies the axial depth noise (per-pixel Gaussian with σ_A(z, θ_y)) and
/// the lateral jitter (each pixel resamples the depth map bilinearly at a
/// Gaussian-offset location, weighting out invalid taps). θ_y is the
/// pose's rotation angle about the camera y-axis. With all σ ≡ 0 the frame
/// is returned bit-exactly unchanged.
pub fn kinect_noise<R: Rng>(
    frame: &RgbdFrame,
    pose: &Pose,
    np: &NoiseParams,
    rng: &mut R,
) -> Result<RgbdFrame, SynthError> {
    np.validate()?;
    let theta_y = euler_from_rot(&pose.rotation).y.to_radians();
    let (w, h) = (frame.width(), frame.height());
    let mut out = frame.clone();

    // Axial pass.
    for i in 0..w * h {
        let d = out.depth()[i];
        if d == 0 {
            continue;
        }
        let z = f64::from(d) / 1000.0;
        let sigma = np.sigma_axial(z, theta_y);
        let noised = f64::from(d) + normal(rng, 0.0, sigma) * 1000.0;
        out.depth_mut()[i] = depth_mm(noised);
    }

    // Lateral pass over the axially-noised map.
    let src: Vec<u16> = out.depth().to_vec();
    let tap = |x: isize, y: isize| -> u16 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        src[y * w + x]
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if src[i] == 0 {
                continue; // invalid pixels stay invalid and draw no noise
            }
            let z = f64::from(src[i]) / 1000.0;
            let (sx, sy) = np.sigma_lateral(z);
            let px = x as f64 + normal(rng, 0.0, sx);
            let py = y as f64 + normal(rng, 0.0, sy);
            let (x0, y0) = (px.floor(), py.floor());
            let (fx, fy) = (px - x0, py - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let taps = [
                (tap(x0, y0), (1.0 - fx) * (1.0 - fy)),
                (tap(x0 + 1, y0), fx * (1.0 - fy)),
                (tap(x0, y0 + 1), (1.0 - fx) * fy),
                (tap(x0 + 1, y0 + 1), fx * fy),
            ];
            let mut wsum = 0.0;
            let mut dsum = 0.0;
            for (d, wt) in taps {
                if d > 0 {
                    wsum += wt;
                    dsum += wt * f64::from(d);
                }
            }
            out.depth_mut()[i] = if wsum > 1e-12 {
                depth_mm(dsum / wsum)
            } else {
                0
            };
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Photometric augmentation
// ---------------------------------------------------------------------------

/// RGB in [0,1] → (hue, saturation, value) all in [0,1].
fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        (((g - b) / delta).rem_euclid(6.0)) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h6.rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    (r + m, g + m, b + m)
}

fn box_blur(rgb: &[u8], width: usize, height: usize, k: usize) -> Vec<u8> {
    let r = (k / 2) as isize;
    let mut out = vec![0u8; rgb.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut sum = [0u32; 3];
            let mut n = 0u32;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (sx, sy) = (x + dx, y + dy);
                    if sx < 0 || sy < 0 || sx >= width as isize || sy >= height as isize {
                        continue;
                    }
                    let i = 3 * (sy as usize * width + sx as usize);
                    for c in 0..3 {
                        sum[c] += u32::from(rgb[i + c]);
                    }
                    n += 1;
                }
            }
            let o = 3 * (y as usize * width + x as usize);
            for c in 0..3 {
                out[o + c] = ((f64::from(sum[c]) / f64::from(n)).round()) as u8;
            }
        }
    }
    out
}

/// Applies the photometric stage chain in its fixed order. Masks are never
/// touched; depth is only affected by decimation and modality dropout.
pub fn augment_photometric<R: Rng>(
    frame: &RgbdFrame,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<RgbdFrame, SynthError> {
    cfg.validate()?;
    let mut out = frame.clone();
    let (w, h) = (out.width(), out.height());

    // 1. Gaussian RGB noise.
    if cfg.rgb_noise_sigma > 0.0 {
        let sigma = cfg.rgb_noise_sigma * 255.0;
        for v in out.rgb_mut() {
            *v = to_u8(f64::from(*v) + normal(rng, 0.0, sigma));
        }
    }

    // 2. Per-frame HSV shift.
    if cfg.hsv_noise_sigma.iter().any(|&s| s > 0.0) {
        let dh = normal(rng, 0.0, cfg.hsv_noise_sigma[0]);
        let ds = normal(rng, 0.0, cfg.hsv_noise_sigma[1]);
        let dv = normal(rng, 0.0, cfg.hsv_noise_sigma[2]);
        let rgb = out.rgb_mut();
        for p in rgb.chunks_exact_mut(3) {
            let (hh, ss, vv) = rgb_to_hsv(
                f64::from(p[0]) / 255.0,
                f64::from(p[1]) / 255.0,
                f64::from(p[2]) / 255.0,
            );
            let (r, g, b) = hsv_to_rgb(
                (hh + dh).rem_euclid(1.0),
                (ss + ds).clamp(0.0, 1.0),
                (vv + dv).clamp(0.0, 1.0),
            );
            p[0] = to_u8(r * 255.0);
            p[1] = to_u8(g * 255.0);
            p[2] = to_u8(b * 255.0);
        }
    }

    // 3. Box blur.
    if cfg.blur_kernel > 1 {
        let blurred = box_blur(out.rgb(), w, h, cfg.blur_kernel);
        out.rgb_mut().copy_from_slice(&blurred);
    }

    // 4. Contrast: v′ = clamp(α·v + β).
    if cfg.p_contrast > 0.0 && rng.gen::<f64>() < cfg.p_contrast {
        let alpha = uniform_in(rng, cfg.alpha_range);
        let beta = uniform_in(rng, cfg.beta_range);
        for v in out.rgb_mut() {
            *v = to_u8(alpha * f64::from(*v) + beta);
        }
    }

    // 5. Gamma: v′ = 255·(v/255)^γ.
    if cfg.p_gamma > 0.0 && rng.gen::<f64>() < cfg.p_gamma {
        let gamma = uniform_in(rng, cfg.gamma_range);
        for v in out.rgb_mut() {
            *v = to_u8(255.0 * (f64::from(*v) / 255.0).powf(gamma));
        }
    }

    // 6. Depth decimation + nearest-neighbor upsampling, preserving the
    // original invalid set.
    let d = cfg.depth_downsample_factor;
    if d > 1 {
        let orig: Vec<u16> = out.depth().to_vec();
        let depth = out.depth_mut();
        for by in (0..h).step_by(d) {
            for bx in (0..w).step_by(d) {
                let v = orig[by * w + bx];
                for y in by..(by + d).min(h) {
                    for x in bx..(bx + d).min(w) {
                        let i = y * w + x;
                        depth[i] = if orig[i] == 0 { 0 } else { v };
                    }
                }
            }
        }
    }

    // 7. Modality dropout.
    if cfg.p_modality_dropout > 0.0 && rng.gen::<f64>() < cfg.p_modality_dropout {
        if rng.gen::<bool>() {
            out.rgb_mut().fill(0);
        } else {
            out.depth_mut().fill(0);
        }
    }

    Ok(out)
}
