//! Trainable bank of candidate symmetry rotations and the
//! reflective-ambiguity filter.
//!
//! Objects with rotational symmetry make the ground-truth rotation label
//! ambiguous: many rotations produce the same appearance. The bank holds
//! `B₂` raw parameter triplets; each decodes through `tanh(·)·π` to Euler
//! angles (intrinsic x-y-z, radians) on the axes enabled by `axis_mask`.
//! During training the best-matching entry re-poses the label before the
//! rotational loss is measured; the uniformity penalty (see
//! [`crate::losses::uniformity_penalty`]) keeps the entries from collapsing
//! onto each other.
//!
//! The reflective filter handles near-symmetric flips at tracking time: a
//! per-axis Euler jump larger than a threshold (default 100°) between
//! consecutive frames is treated as an ambiguity artifact and replaced by
//! the previous frame's value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::kernels::Mat3;
use crate::geom::{EulerXYZ, RotationMatrix};
use crate::losses::kernels::decode_symmetry_triplet;

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("bank index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("symmetry bank must hold at least one triplet")]
    EmptyBank,
    #[error("angle {0} rad is outside the decodable open interval (-π, π)")]
    UndecodableAngle(f64),
    #[error("flat parameter array length {0} is not a positive multiple of 3")]
    MalformedFlatParams(usize),
}

/// Bank of `B₂` candidate symmetry rotations stored as raw, unconstrained
/// parameter triplets plus a per-axis enable mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BankOnDisk", into = "BankOnDisk")]
pub struct SymmetryBank {
    params: Vec<[f64; 3]>,
    axis_mask: [bool; 3],
}

/// Flat serialized form: `B₂×3` raw parameters row-major plus the mask.
#[derive(Serialize, Deserialize)]
struct BankOnDisk {
    params: Vec<f64>,
    axis_mask: [bool; 3],
}

impl From<SymmetryBank> for BankOnDisk {
    fn from(bank: SymmetryBank) -> Self {
        BankOnDisk {
            params: bank.params.iter().flatten().copied().collect(),
            axis_mask: bank.axis_mask,
        }
    }
}

impl TryFrom<BankOnDisk> for SymmetryBank {
    type Error = SymmetryError;

    fn try_from(disk: BankOnDisk) -> Result<Self, Self::Error> {
        if disk.params.is_empty() || disk.params.len() % 3 != 0 {
            return Err(SymmetryError::MalformedFlatParams(disk.params.len()));
        }
        let params = disk
            .params
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Ok(SymmetryBank {
            params,
            axis_mask: disk.axis_mask,
        })
    }
}

impl SymmetryBank {
    pub fn new(params: Vec<[f64; 3]>, axis_mask: [bool; 3]) -> Result<Self, SymmetryError> {
        if params.is_empty() {
            return Err(SymmetryError::EmptyBank);
        }
        Ok(SymmetryBank { params, axis_mask })
    }

    /// Clustered initialization: all triplets drawn near zero
    /// (decoded angles near 0°), the state training is expected to spread.
    pub fn clustered(b2: usize, axis_mask: [bool; 3], seed: u64) -> Result<Self, SymmetryError> {
        use rand::Rng;
        let mut rng = crate::rng::seeded(seed, 0x5b);
        let params = (0..b2)
            .map(|_| {
                [
                    rng.gen_range(-0.01..0.01),
                    rng.gen_range(-0.01..0.01),
                    rng.gen_range(-0.01..0.01),
                ]
            })
            .collect();
        Self::new(params, axis_mask)
    }

    /// Build a bank whose decoded angles equal the given triplets
    /// (radians, each in the open interval `(−π, π)`); raw parameters are
    /// recovered through `atanh(angle/π)`. Angles on masked-off axes must
    /// be 0.
    pub fn from_decoded_angles(
        angles: &[[f64; 3]],
        axis_mask: [bool; 3],
    ) -> Result<Self, SymmetryError> {
        let mut params = Vec::with_capacity(angles.len());
        for triplet in angles {
            let mut raw = [0.0; 3];
            for i in 0..3 {
                if !axis_mask[i] {
                    if triplet[i] != 0.0 {
                        return Err(SymmetryError::UndecodableAngle(triplet[i]));
                    }
                    continue;
                }
                let ratio = triplet[i] / std::f64::consts::PI;
                if ratio.abs() >= 1.0 {
                    return Err(SymmetryError::UndecodableAngle(triplet[i]));
                }
                raw[i] = ratio.atanh();
            }
            params.push(raw);
        }
        Self::new(params, axis_mask)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn axis_mask(&self) -> [bool; 3] {
        self.axis_mask
    }

    pub fn params(&self) -> &[[f64; 3]] {
        &self.params
    }

    /// Mutable access for optimizers.
    pub fn params_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.params
    }

    /// Decoded Euler angles of entry `i` in radians (masked axes are 0),
    /// strictly inside (−π, π) even for saturated parameters.
    pub fn decoded_angles(&self, i: usize) -> [f64; 3] {
        let pi = std::f64::consts::PI;
        let sat = crate::losses::kernels::TANH_SAT;
        let mut out = [0.0; 3];
        for k in 0..3 {
            if self.axis_mask[k] {
                out[k] = self.params[i][k].tanh().clamp(-sat, sat) * pi;
            }
        }
        out
    }

    /// Decoded rotation of entry `i` as row-major rows (kernel form).
    pub fn decoded_rows(&self, i: usize) -> Mat3<f64> {
        decode_symmetry_triplet(&self.params[i], self.axis_mask)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bank serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Decoded rotation matrix of bank entry `index`.
pub fn symmetry_matrix(bank: &SymmetryBank, index: usize) -> Result<RotationMatrix, SymmetryError> {
    if index >= bank.len() {
        return Err(SymmetryError::IndexOutOfRange {
            index,
            len: bank.len(),
        });
    }
    let rows = bank.decoded_rows(index);
    Ok(RotationMatrix::from_rows(rows))
}

/// Index of the bank entry minimizing the weighted rotational error
/// against the ground-truth delta; ties resolve to the lowest index.
pub fn select_oracle(
    bank: &SymmetryBank,
    dr_hat: &RotationMatrix,
    dr_gt: &RotationMatrix,
    lambda_gs: &RotationMatrix,
) -> usize {
    let hat = dr_hat.to_rows();
    let gt = dr_gt.to_rows();
    let lam = lambda_gs.to_rows();
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for i in 0..bank.len() {
        let g = bank.decoded_rows(i);
        let l = crate::losses::kernels::loss_rot(&hat, &gt, &lam, &g);
        if l < best_loss {
            best_loss = l;
            best = i;
        }
    }
    best
}

/// Model-free aggregate of the bank: per-axis arithmetic mean of the
/// decoded angles, re-encoded as a rotation.
pub fn select_mean(bank: &SymmetryBank) -> RotationMatrix {
    let n = bank.len() as f64;
    let mut mean = [0.0; 3];
    for i in 0..bank.len() {
        let a = bank.decoded_angles(i);
        for k in 0..3 {
            mean[k] += a[k] / n;
        }
    }
    let rows = crate::geom::kernels::euler_xyz_to_matrix(mean[0], mean[1], mean[2]);
    RotationMatrix::from_rows(rows)
}

/// Configuration of the reflective-ambiguity filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectiveConfig {
    /// Per-axis angular jump (degrees, wrap-aware) above which a component
    /// is treated as a reflective flip.
    pub threshold_deg: f64,
    /// How many times the tracker may re-query its estimator when a flip
    /// is flagged before accepting the filtered value.
    pub max_repasses: u32,
}

impl Default for ReflectiveConfig {
    fn default() -> Self {
        ReflectiveConfig {
            threshold_deg: 100.0,
            max_repasses: 1,
        }
    }
}

/// Compare consecutive Euler estimates component-wise using wrap-aware
/// angular distance `min(|Δ|, 360 − |Δ|)`. Components jumping by more than
/// the threshold are replaced by the previous value and flagged.
pub fn reflective_filter(
    prev: &EulerXYZ,
    cur: &EulerXYZ,
    cfg: &ReflectiveConfig,
) -> (EulerXYZ, [bool; 3]) {
    let p = prev.to_array();
    let c = cur.to_array();
    let mut out = c;
    let mut flags = [false; 3];
    for i in 0..3 {
        let diff = (c[i] - p[i]).abs();
        let dist = diff.min(360.0 - diff);
        if dist > cfg.threshold_deg {
            out[i] = p[i];
            flags[i] = true;
        }
    }
    (EulerXYZ::new(out[0], out[1], out[2]), flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{geodesic_distance, rot_from_euler};
    use nalgebra::Vector3;

    fn z_bank(angles_deg: &[f64]) -> SymmetryBank {
        let rad: Vec<[f64; 3]> = angles_deg
            .iter()
            .map(|d| [0.0, 0.0, d.to_radians()])
            .collect();
        SymmetryBank::from_decoded_angles(&rad, [false, false, true]).unwrap()
    }

    #[test]
    fn atanh_half_decodes_to_quarter_turn() {
        let bank = SymmetryBank::new(vec![[0.0, 0.0, 0.5_f64.atanh()]], [false, false, true])
            .unwrap();
        let g = symmetry_matrix(&bank, 0).unwrap();
        let expected =
            RotationMatrix::from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(geodesic_distance(&g, &expected) < 2e-6);
    }

    #[test]
    fn masked_axes_stay_identity() {
        let bank =
            SymmetryBank::new(vec![[5.0, -3.0, 0.7]], [false, false, true]).unwrap();
        let a = bank.decoded_angles(0);
        assert_eq!(a[0], 0.0);
        assert_eq!(a[1], 0.0);
        assert!(a[2] > 0.0);
    }

    #[test]
    fn symmetry_matrix_checks_bounds() {
        let bank = z_bank(&[0.0]);
        assert!(matches!(
            symmetry_matrix(&bank, 1),
            Err(SymmetryError::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn empty_bank_is_rejected() {
        assert!(matches!(
            SymmetryBank::new(vec![], [true, true, true]),
            Err(SymmetryError::EmptyBank)
        ));
    }

    #[test]
    fn select_oracle_finds_the_compensating_entry() {
        // loss_rot measures d(ΔR̂·G·Λ, ΔR·Λ). With ΔR̂ = base and
        // ΔR = base·Rz(40°), the entry G = Rz(40°) cancels the ambiguity.
        let base = rot_from_euler(&EulerXYZ::new(10.0, 5.0, 0.0));
        let amb = rot_from_euler(&EulerXYZ::new(0.0, 0.0, 40.0));
        let gt = base * amb;
        let bank = z_bank(&[-120.0, -40.0, 0.0, 40.0, 120.0]);
        let id = RotationMatrix::identity();
        let chosen = select_oracle(&bank, &base, &gt, &id);
        assert_eq!(chosen, 3);
    }

    #[test]
    fn select_oracle_breaks_ties_low() {
        let bank = z_bank(&[30.0, 30.0, 30.0]);
        let r = rot_from_euler(&EulerXYZ::new(0.0, 0.0, 10.0));
        let id = RotationMatrix::identity();
        assert_eq!(select_oracle(&bank, &r, &r, &id), 0);
    }

    #[test]
    fn select_mean_of_symmetric_pair_is_identity() {
        let bank = z_bank(&[-75.0, 75.0]);
        let m = select_mean(&bank);
        assert!(geodesic_distance(&m, &RotationMatrix::identity()) < 2e-6);
    }

    #[test]
    fn reflective_filter_replaces_large_jump() {
        let cfg = ReflectiveConfig::default();
        let prev = EulerXYZ::new(10.0, 0.0, 0.0);
        let cur = EulerXYZ::new(175.0, 0.0, 0.0);
        let (out, flags) = reflective_filter(&prev, &cur, &cfg);
        assert_eq!(out.x, 10.0);
        assert_eq!(flags, [true, false, false]);
    }

    #[test]
    fn reflective_filter_respects_wraparound() {
        let cfg = ReflectiveConfig::default();
        // 170° → −170° is a 20° move across the wrap, not 340°.
        let prev = EulerXYZ::new(170.0, 0.0, 0.0);
        let cur = EulerXYZ::new(-170.0, 0.0, 0.0);
        let (out, flags) = reflective_filter(&prev, &cur, &cfg);
        assert_eq!(out.x, -170.0);
        assert_eq!(flags, [false, false, false]);
    }

    #[test]
    fn reflective_filter_is_idempotent() {
        let cfg = ReflectiveConfig::default();
        let prev = EulerXYZ::new(10.0, -20.0, 30.0);
        let cur = EulerXYZ::new(160.0, -25.0, 29.0);
        let (once, _) = reflective_filter(&prev, &cur, &cfg);
        let (twice, flags) = reflective_filter(&prev, &once, &cfg);
        assert_eq!(once, twice);
        assert_eq!(flags, [false, false, false]);
    }

    #[test]
    fn reflective_filter_threshold_360_never_fires() {
        let cfg = ReflectiveConfig {
            threshold_deg: 360.0,
            max_repasses: 1,
        };
        let prev = EulerXYZ::new(0.0, 0.0, 0.0);
        let cur = EulerXYZ::new(180.0, 180.0, 180.0);
        let (out, flags) = reflective_filter(&prev, &cur, &cfg);
        assert_eq!(out, cur);
        assert_eq!(flags, [false, false, false]);
    }

    #[test]
    fn bank_json_round_trip() {
        let bank = z_bank(&[-120.0, 0.0, 120.0]);
        let json = bank.to_json();
        let back = SymmetryBank::from_json(&json).unwrap();
        assert_eq!(bank, back);
        // Flat layout: parameter array is B₂·3 numbers.
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["params"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn from_decoded_angles_rejects_pi() {
        let err = SymmetryBank::from_decoded_angles(
            &[[0.0, 0.0, std::f64::consts::PI]],
            [false, false, true],
        );
        assert!(matches!(err, Err(SymmetryError::UndecodableAngle(_))));
    }
}
