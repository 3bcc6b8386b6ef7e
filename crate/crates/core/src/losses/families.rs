//! Loss families packaged for gradient checking.
//!
//! Each family pairs a scalar-generic evaluation (instantiated with dual
//! numbers for the analytic gradient and with `f64` for the
//! central-difference oracle) with a seeded sampler that draws random
//! parameter points away from the declared non-differentiable
//! neighborhoods: arccos arguments near ±1 (relative rotation angles near
//! 0 or 180°), degenerate 6-parameter encodings, zero LogCosh residuals,
//! and the uniformity-penalty floor.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ad::{finite_diff, grad, relative_error, Dual, Scalar};
use crate::geom::kernels::{self as gk, Mat3};
use crate::geom::{random_rotation, RotationMatrix};
use crate::losses::kernels as lk;

/// Half-step used by the central-difference oracle.
pub const FD_STEP: f64 = 1e-5;
/// Absolute floor in the relative-error denominator.
pub const REL_ERR_FLOOR: f64 = 1e-8;
/// Maximum relative error accepted between analytic and finite-difference
/// gradients.
pub const GRAD_TOL: f64 = 1e-4;

/// Components where both gradients are this small are counted as matching
/// zeros instead of entering the relative-error formula. Central
/// differences with step 1e-5 on losses of magnitude up to ~60 carry
/// ~3·10⁻¹⁰ of cancellation noise, so they cannot certify anything below
/// this band — most visibly at the exactly-flat points of the uniformity
/// penalty, where an interior angle of a single-axis bank cancels out of
/// the pairwise sum and the true derivative is identically zero.
pub const ZERO_GRAD_BAND: f64 = 1e-5;

/// Relative rotation angles are kept in `[ANGLE_MARGIN, π − ANGLE_MARGIN]`
/// radians: the third derivative of arccos grows as 3/(1−x²)^{5/2}, and
/// with chain slopes up to ~5 through the encodings this margin keeps the
/// finite-difference truncation error below ~10⁻⁵ relative.
const ANGLE_MARGIN: f64 = 0.1;
/// Minimum norm / orthogonal residual for sampled 6-parameter encodings.
const VEC_MARGIN: f64 = 0.3;
/// Minimum |residual| per component for LogCosh samples (kink at 0).
const RESIDUAL_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossFamily {
    /// Geodesic rotation distance through the 6-parameter encoding.
    Geodesic,
    /// Weighted translation + rotation tracking loss (pose and v-weights).
    TrackWeighted,
    /// Learnable three-task weighting composed with the tracking loss.
    MultitaskWeighted,
    /// Symmetry-bank uniformity penalty with its weight.
    SymmetricUniformity,
    /// LogCosh over the 9 delta parameters.
    LogCosh,
    /// Spatial softmax composed with attention BCE.
    SoftmaxBce,
}

impl LossFamily {
    pub const ALL: [LossFamily; 6] = [
        LossFamily::Geodesic,
        LossFamily::TrackWeighted,
        LossFamily::MultitaskWeighted,
        LossFamily::SymmetricUniformity,
        LossFamily::LogCosh,
        LossFamily::SoftmaxBce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Geodesic => "geodesic-rot6d",
            LossFamily::TrackWeighted => "track-weighted",
            LossFamily::MultitaskWeighted => "multitask-weighted",
            LossFamily::SymmetricUniformity => "symmetric-uniformity",
            LossFamily::LogCosh => "logcosh",
            LossFamily::SoftmaxBce => "softmax-bce",
        }
    }
}

/// Outcome of a gradient check over one family.
#[derive(Clone, Copy, Debug)]
pub struct FamilyReport {
    pub family: LossFamily,
    pub trials: usize,
    pub max_rel_err: f64,
    /// Trial index that produced the maximum error (reproduce with the
    /// same seed).
    pub worst_trial: u64,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRAD_TOL
    }
}

/// Lift a constant matrix into the generic scalar type.
fn lift<S: Scalar>(m: &Mat3<f64>) -> Mat3<S> {
    let c = S::from_f64;
    [
        [c(m[0][0]), c(m[0][1]), c(m[0][2])],
        [c(m[1][0]), c(m[1][1]), c(m[1][2])],
        [c(m[2][0]), c(m[2][1]), c(m[2][2])],
    ]
}

fn lift_slice<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::from_f64(x)).collect()
}

fn vec3<S: Scalar>(p: &[S]) -> [S; 3] {
    [p[0], p[1], p[2]]
}

// ---------------------------------------------------------------------------
// Fixtures (the constants each trial holds fixed)
// ---------------------------------------------------------------------------

struct GeodesicFixture {
    r2: Mat3<f64>,
}

struct TrackFixture {
    gt_trans: [f64; 3],
    gt_rot: Mat3<f64>,
    lambda: Mat3<f64>,
    g_star: Mat3<f64>,
    /// Extra constant task losses; present only for the multitask form.
    aux: Option<(f64, f64)>,
}

struct BankFixture {
    b2: usize,
    axis_mask: [bool; 3],
    base_loss: f64,
}

struct LogCoshFixture {
    gt: [f64; 9],
}

struct BceFixture {
    target: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Generic evaluations
// ---------------------------------------------------------------------------

fn eval_geodesic<S: Scalar>(p: &[S], fx: &GeodesicFixture) -> S {
    let m = gk::rot6d_to_matrix(&vec3(&p[0..3]), &vec3(&p[3..6]));
    gk::geodesic(&m, &lift(&fx.r2))
}

/// Params: 9 pose (trans + rot6d) then v1, v2 — and with `aux` constants,
/// additionally s1, s2, s3.
fn eval_track<S: Scalar>(p: &[S], fx: &TrackFixture) -> S {
    let track = lk::loss_track(
        &vec3(&p[0..3]),
        &vec3(&p[3..6]),
        &vec3(&p[6..9]),
        &vec3(&lift_slice::<S>(&fx.gt_trans)),
        &lift(&fx.gt_rot),
        p[9],
        p[10],
        &lift(&fx.lambda),
        &lift(&fx.g_star),
    );
    match fx.aux {
        None => track,
        Some((lu, lf)) => lk::loss_multitask(
            track,
            S::from_f64(lu),
            S::from_f64(lf),
            p[11],
            p[12],
            p[13],
        ),
    }
}

/// Params: B₂·3 raw bank parameters then s4.
fn eval_bank<S: Scalar>(p: &[S], fx: &BankFixture) -> S {
    let mats: Vec<Mat3<S>> = (0..fx.b2)
        .map(|i| {
            lk::decode_symmetry_triplet(
                &[p[3 * i], p[3 * i + 1], p[3 * i + 2]],
                fx.axis_mask,
            )
        })
        .collect();
    let xi = lk::bank_spread_xi(&mats);
    let penalty = lk::penalty_from_xi(xi);
    let s4 = p[3 * fx.b2];
    S::from_f64(fx.base_loss) + (-s4).exp() * penalty + s4
}

fn eval_logcosh<S: Scalar>(p: &[S], fx: &LogCoshFixture) -> S {
    lk::logcosh_sum(p, &lift_slice::<S>(&fx.gt))
}

fn eval_bce<S: Scalar>(p: &[S], fx: &BceFixture) -> S {
    let map = lk::spatial_softmax(p);
    lk::bce_mean(&map, &fx.target)
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Raw 6-parameter encoding away from the degeneracy margin.
fn sample_rot6d_params(rng: &mut ChaCha8Rng) -> [f64; 6] {
    loop {
        let mut p = [0.0; 6];
        for v in &mut p {
            *v = rng.gen_range(-1.5..1.5);
        }
        let rx = [p[0], p[1], p[2]];
        let ry = [p[3], p[4], p[5]];
        let (nx, ny) = (gk::norm(&rx), gk::norm(&ry));
        if nx < VEC_MARGIN || ny < VEC_MARGIN {
            continue;
        }
        let ux = gk::normalize(&rx);
        let uy = gk::normalize(&ry);
        let res = gk::sub(&uy, &gk::scale(&ux, gk::dot(&ux, &uy)));
        if gk::norm(&res) < VEC_MARGIN {
            continue;
        }
        return p;
    }
}

fn angle_in_margin(d: f64) -> bool {
    (ANGLE_MARGIN..=std::f64::consts::PI - ANGLE_MARGIN).contains(&d)
}

fn rows(r: &RotationMatrix) -> Mat3<f64> {
    r.to_rows()
}

fn sample_geodesic(rng: &mut ChaCha8Rng) -> (Vec<f64>, GeodesicFixture) {
    loop {
        let p = sample_rot6d_params(rng);
        let r2 = rows(&random_rotation(rng));
        let fx = GeodesicFixture { r2 };
        if angle_in_margin(eval_geodesic(&p, &fx)) {
            return (p.to_vec(), fx);
        }
    }
}

fn sample_track(rng: &mut ChaCha8Rng, with_aux: bool) -> (Vec<f64>, TrackFixture) {
    loop {
        let mut params = Vec::new();
        for _ in 0..3 {
            params.push(rng.gen_range(-0.8..0.8));
        }
        params.extend_from_slice(&sample_rot6d_params(rng));
        params.push(rng.gen_range(-1.0..1.0)); // v1
        params.push(rng.gen_range(-1.0..1.0)); // v2
        if with_aux {
            for _ in 0..3 {
                params.push(rng.gen_range(-1.0..1.0)); // s1..s3
            }
        }
        let fx = TrackFixture {
            gt_trans: [
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            ],
            gt_rot: rows(&random_rotation(rng)),
            lambda: rows(&random_rotation(rng)),
            g_star: rows(&random_rotation(rng)),
            aux: if with_aux {
                Some((rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0)))
            } else {
                None
            },
        };
        // Keep the weighted rotation pair away from the acos kinks.
        let hat = gk::rot6d_to_matrix(&vec3(&params[3..6]), &vec3(&params[6..9]));
        let d = lk::loss_rot(&hat, &fx.gt_rot, &fx.lambda, &fx.g_star);
        if angle_in_margin(d) {
            return (params, fx);
        }
    }
}

fn sample_bank(rng: &mut ChaCha8Rng) -> (Vec<f64>, BankFixture) {
    'outer: loop {
        let b2 = rng.gen_range(2..=8);
        let mut axis_mask = [rng.gen(), rng.gen(), rng.gen()];
        if axis_mask == [false, false, false] {
            axis_mask[rng.gen_range(0..3)] = true;
        }
        let mut params: Vec<f64> = (0..3 * b2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        params.push(rng.gen_range(-1.0..1.0)); // s4
        let fx = BankFixture {
            b2,
            axis_mask,
            base_loss: rng.gen_range(0.0..2.0),
        };
        // All pairwise decoded distances must sit inside the acos margin.
        let mats: Vec<Mat3<f64>> = (0..b2)
            .map(|i| {
                lk::decode_symmetry_triplet(
                    &[params[3 * i], params[3 * i + 1], params[3 * i + 2]],
                    axis_mask,
                )
            })
            .collect();
        for j in 0..b2 {
            for k in (j + 1)..b2 {
                if !angle_in_margin(gk::geodesic(&mats[j], &mats[k])) {
                    continue 'outer;
                }
            }
        }
        return (params, fx);
    }
}

fn sample_logcosh(rng: &mut ChaCha8Rng) -> (Vec<f64>, LogCoshFixture) {
    let gt: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let mut params = Vec::with_capacity(9);
    for &g in &gt {
        loop {
            let p = rng.gen_range(-1.5..1.5);
            if (p - g).abs() >= RESIDUAL_MARGIN {
                params.push(p);
                break;
            }
        }
    }
    (params, LogCoshFixture { gt })
}

fn sample_bce(rng: &mut ChaCha8Rng) -> (Vec<f64>, BceFixture) {
    let w = rng.gen_range(2..=4);
    let h = rng.gen_range(2..=4);
    let n = w * h;
    let params: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut bits: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.3)).collect();
    if bits.iter().all(|&b| b == 0) {
        bits[rng.gen_range(0..n)] = 1;
    }
    let ones = bits.iter().filter(|&&b| b != 0).count() as f64;
    let target = bits
        .iter()
        .map(|&b| if b != 0 { 1.0 / ones } else { 0.0 })
        .collect();
    (params, BceFixture { target })
}

// ---------------------------------------------------------------------------
// The check itself
// ---------------------------------------------------------------------------

fn worst_component_error<FD, FF>(dual_fn: FD, f64_fn: FF, params: &[f64]) -> f64
where
    FD: Fn(&[Dual]) -> Dual,
    FF: Fn(&[f64]) -> f64,
{
    let analytic = grad(dual_fn, params);
    let numeric = finite_diff(f64_fn, params, FD_STEP);
    analytic
        .iter()
        .zip(numeric.iter())
        .filter(|(&a, &b)| a.abs().max(b.abs()) >= ZERO_GRAD_BAND)
        .map(|(&a, &b)| relative_error(a, b, REL_ERR_FLOOR))
        .fold(0.0, f64::max)
}

/// Gradient-check one family over `trials` seeded random points; returns
/// the maximum per-component relative error observed.
pub fn check_family(family: LossFamily, trials: usize, seed: u64) -> FamilyReport {
    let mut max_rel_err: f64 = 0.0;
    let mut worst_trial = 0u64;
    for t in 0..trials {
        let mut rng = crate::rng::seeded(seed, t as u64);
        let err = match family {
            LossFamily::Geodesic => {
                let (p, fx) = sample_geodesic(&mut rng);
                worst_component_error(|d| eval_geodesic(d, &fx), |f| eval_geodesic(f, &fx), &p)
            }
            LossFamily::TrackWeighted => {
                let (p, fx) = sample_track(&mut rng, false);
                worst_component_error(|d| eval_track(d, &fx), |f| eval_track(f, &fx), &p)
            }
            LossFamily::MultitaskWeighted => {
                let (p, fx) = sample_track(&mut rng, true);
                worst_component_error(|d| eval_track(d, &fx), |f| eval_track(f, &fx), &p)
            }
            LossFamily::SymmetricUniformity => {
                let (p, fx) = sample_bank(&mut rng);
                worst_component_error(|d| eval_bank(d, &fx), |f| eval_bank(f, &fx), &p)
            }
            LossFamily::LogCosh => {
                let (p, fx) = sample_logcosh(&mut rng);
                worst_component_error(|d| eval_logcosh(d, &fx), |f| eval_logcosh(f, &fx), &p)
            }
            LossFamily::SoftmaxBce => {
                let (p, fx) = sample_bce(&mut rng);
                worst_component_error(|d| eval_bce(d, &fx), |f| eval_bce(f, &fx), &p)
            }
        };
        if err > max_rel_err {
            max_rel_err = err;
            worst_trial = t as u64;
        }
    }
    FamilyReport {
        family,
        trials,
        max_rel_err,
        worst_trial,
    }
}

/// Gradient-check every family with the same trial count and seed.
pub fn check_all(trials: usize, seed: u64) -> Vec<FamilyReport> {
    LossFamily::ALL
        .iter()
        .map(|&f| check_family(f, trials, seed))
        .collect()
}
