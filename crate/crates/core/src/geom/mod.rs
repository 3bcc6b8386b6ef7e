//! Rotations, rigid poses, Euler angles, triangle meshes, and the
//! surface-inertia tensor.
//!
//! Rotations are stored as validated orthonormal matrices
//! ([`RotationMatrix`]). The continuous 6-parameter encoding ([`Rot6D`])
//! is the representation regressed by models; it maps onto SO(3) without
//! the discontinuities of Euler angles or quaternion double cover. Euler
//! angles ([`EulerXYZ`]) appear only where per-axis semantics are needed
//! (symmetry decoding and the reflective-ambiguity filter) and follow one
//! fixed convention: intrinsic x-then-y-then-z, degrees, each component in
//! `(−180, 180]`.

pub mod kernels;
mod mesh;
mod primitives;

pub use mesh::{inertia_tensor, InertiaTensor, TriMesh, MIN_FACE_AREA};
pub use primitives::{ellipsoid, icosphere, unit_cube};

use nalgebra::{Matrix3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation from exact orthonormality (`‖RᵀR − I‖∞`) and from
/// `det R = +1` for a valid rotation matrix.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Norm below which a vector is considered zero when orthonormalizing.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Residual norm below which the second 6D vector counts as parallel to the
/// first (after both are normalized).
pub const PARALLEL_EPS: f64 = 1e-10;

/// Smallest singular value required of a matrix being orthonormalized.
pub const RANK_EPS: f64 = 1e-10;

/// `1 − |sin y|` threshold below which Euler extraction switches to the
/// gimbal-lock path (x folded into z, x reported as 0).
const GIMBAL_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Wrap an angle in degrees into `(−180, 180]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let mut r = a % 360.0;
    if r <= -180.0 {
        r += 360.0;
    } else if r > 180.0 {
        r -= 360.0;
    }
    r
}

// ---------------------------------------------------------------------------
// RotationMatrix
// ---------------------------------------------------------------------------

/// An element of SO(3): orthonormal 3×3 matrix with determinant +1, both
/// within [`ORTHONORMALITY_TOL`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Validate and wrap a matrix. Fails if `‖MᵀM − I‖∞` or `|det M − 1|`
    /// exceeds [`ORTHONORMALITY_TOL`].
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeomError> {
        let gram = m.transpose() * m;
        let mut max_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((gram[(i, j)] - expected).abs());
            }
        }
        if max_dev > ORTHONORMALITY_TOL {
            return Err(GeomError::DegenerateInput(format!(
                "matrix is not orthonormal (max |R\u{1d40}R - I| = {max_dev:.3e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(GeomError::DegenerateInput(format!(
                "matrix determinant {det} is not +1"
            )));
        }
        Ok(RotationMatrix(m))
    }

    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Rodrigues construction from an axis (need not be unit length) and an
    /// angle in radians. Fails on a near-zero axis.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle_rad: f64) -> Result<Self, GeomError> {
        let n = axis.norm();
        if n <= DEGENERACY_EPS {
            return Err(GeomError::DegenerateInput(
                "axis-angle axis has near-zero norm".to_string(),
            ));
        }
        let unit = Unit::new_unchecked(axis / n);
        Ok(RotationMatrix(
            nalgebra::Rotation3::from_axis_angle(&unit, angle_rad).into_inner(),
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// Row-major array form for the scalar-generic kernels.
    pub fn to_rows(&self) -> kernels::Mat3<f64> {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub(crate) fn from_rows(rows: kernels::Mat3<f64>) -> Self {
        RotationMatrix(Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], //
            rows[1][0], rows[1][1], rows[1][2], //
            rows[2][0], rows[2][1], rows[2][2],
        ))
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Geodesic distance on SO(3) in radians, `arccos((Tr(R₁ᵀR₂) − 1)/2)`,
/// in `[0, π]`. The arccos argument is clamped away from ±1 by
/// [`kernels::ACOS_GUARD`], so identical rotations measure ≈ 1.4e-6 rather
/// than exactly 0.
pub fn geodesic_distance(r1: &RotationMatrix, r2: &RotationMatrix) -> f64 {
    kernels::geodesic(&r1.to_rows(), &r2.to_rows())
}

// ---------------------------------------------------------------------------
// Rot6D
// ---------------------------------------------------------------------------

/// Continuous 6-parameter rotation encoding: two unconstrained 3-vectors
/// that orthonormalize into the first two rows of a rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rot6D {
    pub rx: Vector3<f64>,
    pub ry: Vector3<f64>,
}

impl Rot6D {
    pub fn new(rx: Vector3<f64>, ry: Vector3<f64>) -> Self {
        Rot6D { rx, ry }
    }

    /// The encoding of the identity rotation: `(1,0,0)` and `(0,1,0)`.
    pub fn identity() -> Self {
        Rot6D {
            rx: Vector3::new(1.0, 0.0, 0.0),
            ry: Vector3::new(0.0, 1.0, 0.0),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.rx.x, self.rx.y, self.rx.z, //
            self.ry.x, self.ry.y, self.ry.z,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Rot6D {
            rx: Vector3::new(a[0], a[1], a[2]),
            ry: Vector3::new(a[3], a[4], a[5]),
        }
    }
}

/// Orthonormalize a [`Rot6D`] into a rotation matrix (the two vectors become
/// the first two rows; the third row is their cross product).
///
/// Fails when `‖rx‖ ≤ 1e-12` or when `ry` is parallel to `rx` within
/// `1e-10` after normalization.
pub fn matrix_from_rot6d(r: &Rot6D) -> Result<RotationMatrix, GeomError> {
    let rx = [r.rx.x, r.rx.y, r.rx.z];
    let ry = [r.ry.x, r.ry.y, r.ry.z];
    let nx = kernels::norm(&rx);
    if nx <= DEGENERACY_EPS {
        return Err(GeomError::DegenerateInput(format!(
            "rot6d first vector norm {nx:.3e} is below {DEGENERACY_EPS:.0e}"
        )));
    }
    let ny = kernels::norm(&ry);
    if ny <= DEGENERACY_EPS {
        return Err(GeomError::DegenerateInput(format!(
            "rot6d second vector norm {ny:.3e} is below {DEGENERACY_EPS:.0e}"
        )));
    }
    let ux = kernels::normalize(&rx);
    let uy = kernels::normalize(&ry);
    let residual = kernels::sub(&uy, &kernels::scale(&ux, kernels::dot(&ux, &uy)));
    if kernels::norm(&residual) <= PARALLEL_EPS {
        return Err(GeomError::DegenerateInput(
            "rot6d vectors are parallel within 1e-10 after normalization".to_string(),
        ));
    }
    Ok(RotationMatrix::from_rows(kernels::rot6d_to_matrix(&rx, &ry)))
}

/// Inverse of [`matrix_from_rot6d`]: the first two rows of the matrix.
pub fn rot6d_from_matrix(r: &RotationMatrix) -> Rot6D {
    let m = r.matrix();
    Rot6D {
        rx: Vector3::new(m[(0, 0)], m[(0, 1)], m[(0, 2)]),
        ry: Vector3::new(m[(1, 0)], m[(1, 1)], m[(1, 2)]),
    }
}

// ---------------------------------------------------------------------------
// Pose
// ---------------------------------------------------------------------------

/// Rigid transform: rotation plus translation in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Pose {
            rotation: RotationMatrix::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// `self ∘ other`: apply `other` first in the local frame, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Apply to a point.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * *p + self.translation
    }
}

// ---------------------------------------------------------------------------
// Euler angles
// ---------------------------------------------------------------------------

/// Euler angles in degrees, intrinsic x-then-y-then-z convention
/// (`R = Rx · Ry · Rz`), each component wrapped into `(−180, 180]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerXYZ {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EulerXYZ {
    /// Construct with each component wrapped into `(−180, 180]`.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        EulerXYZ {
            x: wrap_degrees(x),
            y: wrap_degrees(y),
            z: wrap_degrees(z),
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Rotation matrix from Euler angles (intrinsic x-y-z, degrees).
pub fn rot_from_euler(e: &EulerXYZ) -> RotationMatrix {
    let rad = std::f64::consts::PI / 180.0;
    RotationMatrix::from_rows(kernels::euler_xyz_to_matrix(
        e.x * rad,
        e.y * rad,
        e.z * rad,
    ))
}

/// Euler angles (intrinsic x-y-z, degrees, components in `(−180, 180]`)
/// from a rotation matrix.
///
/// Near gimbal lock (`|sin y| → 1`) x and z are not separable; the x
/// rotation is folded into z and x is reported as 0.
pub fn euler_from_rot(r: &RotationMatrix) -> EulerXYZ {
    let m = r.matrix();
    let sy = m[(0, 2)].clamp(-1.0, 1.0);
    let deg = 180.0 / std::f64::consts::PI;
    if 1.0 - sy.abs() < GIMBAL_EPS {
        let y = if sy > 0.0 { 90.0 } else { -90.0 };
        let z = m[(1, 0)].atan2(m[(1, 1)]) * deg;
        EulerXYZ::new(0.0, y, z)
    } else {
        let y = sy.asin() * deg;
        let x = (-m[(1, 2)]).atan2(m[(2, 2)]) * deg;
        let z = (-m[(0, 1)]).atan2(m[(0, 0)]) * deg;
        EulerXYZ::new(x, y, z)
    }
}

// ---------------------------------------------------------------------------
// Orthonormalization and the spiral
// ---------------------------------------------------------------------------

/// Column-wise Gram-Schmidt orthonormalization of an arbitrary matrix into
/// a rotation. A reflection result (determinant −1) is fixed by negating
/// the third column.
///
/// Fails when the columns are not linearly independent: the smallest
/// singular value must exceed [`RANK_EPS`].
pub fn gram_schmidt(m: &Matrix3<f64>) -> Result<RotationMatrix, GeomError> {
    let min_sv = m
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_sv <= RANK_EPS {
        return Err(GeomError::DegenerateInput(format!(
            "matrix is rank-deficient (smallest singular value {min_sv:.3e})"
        )));
    }
    let c0 = m.column(0).into_owned();
    let c0 = c0 / c0.norm();
    let mut c1 = m.column(1).into_owned();
    c1 -= c0 * c0.dot(&c1);
    let c1 = c1 / c1.norm();
    let mut c2 = m.column(2).into_owned();
    c2 -= c0 * c0.dot(&c2) + c1 * c1.dot(&c2);
    let mut c2 = c2 / c2.norm();
    let det = Matrix3::from_columns(&[c0, c1, c2]).determinant();
    if det < 0.0 {
        c2 = -c2;
    }
    Ok(RotationMatrix(Matrix3::from_columns(&[c0, c1, c2])))
}

/// Random rotation: rejection-sampled unit axis, angle uniform in `[0, π)`.
/// Not Haar-uniform, but unbiased in axis direction and adequate for
/// fixtures and property sweeps.
pub fn random_rotation<R: rand::Rng>(rng: &mut R) -> RotationMatrix {
    let axis = random_unit_vector(rng);
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    RotationMatrix::from_axis_angle(&axis, angle).expect("sampled axis is unit length")
}

/// Uniform random direction by rejection sampling the unit ball.
pub fn random_unit_vector<R: rand::Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// `n` near-uniform directions on the unit sphere along a golden-ratio
/// spiral: `z_i = 1 − 2(i + 0.5)/n`, azimuth `2π·i·(1 − 1/φ)`.
pub fn golden_spiral(n: usize) -> Result<Vec<Vector3<f64>>, GeomError> {
    if n == 0 {
        return Err(GeomError::DegenerateInput(
            "golden_spiral needs at least one direction".to_string(),
        ));
    }
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let step = 2.0 * std::f64::consts::PI * (1.0 - 1.0 / phi);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let az = step * i as f64;
        out.push(Vector3::new(r * az.cos(), r * az.sin(), z));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;

    fn rz_deg(d: f64) -> RotationMatrix {
        RotationMatrix::from_axis_angle(&Vector3::z(), d.to_radians()).unwrap()
    }

    #[test]
    fn rotation_matrix_rejects_scaled_matrix() {
        let m = Matrix3::identity() * 2.0;
        assert!(RotationMatrix::new(m).is_err());
    }

    #[test]
    fn rotation_matrix_rejects_reflection() {
        let mut m = Matrix3::identity();
        m[(2, 2)] = -1.0;
        assert!(RotationMatrix::new(m).is_err());
    }

    #[test]
    fn identity_rot6d_maps_to_identity_matrix() {
        let r = matrix_from_rot6d(&Rot6D::identity()).unwrap();
        assert_relative_eq!(*r.matrix(), Matrix3::identity(), epsilon = TOL);
    }

    #[test]
    fn rot6d_rejects_near_zero_first_vector() {
        let r = Rot6D::new(Vector3::new(1e-13, 0.0, 0.0), Vector3::y());
        assert!(matches!(
            matrix_from_rot6d(&r),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn rot6d_rejects_parallel_vectors() {
        let r = Rot6D::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(2.0, 4.0, 6.0));
        assert!(matches!(
            matrix_from_rot6d(&r),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn rot6d_round_trip_from_matrix_side() {
        let r = rot_from_euler(&EulerXYZ::new(31.0, -54.0, 112.0));
        let back = matrix_from_rot6d(&rot6d_from_matrix(&r)).unwrap();
        assert_relative_eq!(*back.matrix(), *r.matrix(), epsilon = 1e-12);
    }

    #[test]
    fn geodesic_quarter_turn_is_half_pi() {
        let d = geodesic_distance(&RotationMatrix::identity(), &rz_deg(90.0));
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < TOL);
    }

    #[test]
    fn geodesic_is_symmetric() {
        let a = rot_from_euler(&EulerXYZ::new(10.0, 20.0, 30.0));
        let b = rot_from_euler(&EulerXYZ::new(-75.0, 40.0, 5.0));
        assert!((geodesic_distance(&a, &b) - geodesic_distance(&b, &a)).abs() < TOL);
    }

    #[test]
    fn geodesic_self_distance_under_guard() {
        let a = rot_from_euler(&EulerXYZ::new(10.0, 20.0, 30.0));
        let d = geodesic_distance(&a, &a);
        assert!(d < 2e-6, "self distance {d}");
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose::new(
            rot_from_euler(&EulerXYZ::new(12.0, 34.0, 56.0)),
            Vector3::new(0.3, -0.2, 1.5),
        );
        let id = p.invert().compose(&p);
        assert_relative_eq!(*id.rotation.matrix(), Matrix3::identity(), epsilon = TOL);
        assert_relative_eq!(id.translation, Vector3::zeros(), epsilon = TOL);
    }

    #[test]
    fn euler_90_x_matches_reference_rows() {
        let r = rot_from_euler(&EulerXYZ::new(90.0, 0.0, 0.0));
        let expected = Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, //
            0.0, 1.0, 0.0,
        );
        assert_relative_eq!(*r.matrix(), expected, epsilon = TOL);
    }

    #[test]
    fn euler_round_trip_away_from_lock() {
        for &(x, y, z) in &[
            (0.0, 0.0, 0.0),
            (10.0, -20.0, 30.0),
            (-179.0, 84.9, 179.0),
            (45.0, -84.9, -45.0),
            (180.0, 0.0, -90.0),
        ] {
            let e = EulerXYZ::new(x, y, z);
            let back = euler_from_rot(&rot_from_euler(&e));
            // Compare the rotations, not the raw angles: (180, 0, -90)-style
            // inputs can round-trip through an equivalent triplet.
            let d = geodesic_distance(&rot_from_euler(&e), &rot_from_euler(&back));
            assert!(d < 2e-6, "round trip for ({x},{y},{z}) drifted {d}");
            assert!((back.x - x).abs() < 1e-7 || (back.x - x).abs() > 359.0);
        }
    }

    #[test]
    fn euler_component_round_trip_is_tight() {
        let e = EulerXYZ::new(10.0, -20.0, 30.0);
        let back = euler_from_rot(&rot_from_euler(&e));
        assert!((back.x - e.x).abs() < 1e-7);
        assert!((back.y - e.y).abs() < 1e-7);
        assert!((back.z - e.z).abs() < 1e-7);
    }

    #[test]
    fn euler_gimbal_lock_folds_x_into_z() {
        let e = EulerXYZ::new(25.0, 90.0, 10.0);
        let locked = euler_from_rot(&rot_from_euler(&e));
        assert_eq!(locked.x, 0.0);
        assert!((locked.y - 90.0).abs() < 1e-9);
        // The same rotation must be reproduced by the folded angles.
        let d = geodesic_distance(&rot_from_euler(&e), &rot_from_euler(&locked));
        assert!(d < 2e-6, "gimbal fold drifted {d}");
    }

    #[test]
    fn wrap_degrees_lands_in_half_open_interval() {
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
        assert_eq!(wrap_degrees(0.0), 0.0);
    }

    #[test]
    fn gram_schmidt_of_rotation_is_that_rotation() {
        let r = rot_from_euler(&EulerXYZ::new(33.0, 21.0, -77.0));
        let gs = gram_schmidt(r.matrix()).unwrap();
        assert_relative_eq!(*gs.matrix(), *r.matrix(), epsilon = 1e-12);
    }

    #[test]
    fn gram_schmidt_fixes_reflection_sign() {
        // Columns of a reflection: orthonormal but det −1.
        let mut m = Matrix3::identity();
        m[(2, 2)] = -1.0;
        let gs = gram_schmidt(&m).unwrap();
        assert!((gs.matrix().determinant() - 1.0).abs() < TOL);
    }

    #[test]
    fn gram_schmidt_rejects_rank_deficiency() {
        let m = Matrix3::new(
            1.0, 2.0, 3.0, //
            2.0, 4.0, 6.0, //
            0.5, 1.0, 1.5,
        );
        assert!(matches!(
            gram_schmidt(&m),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn golden_spiral_endpoints_for_n_100() {
        let pts = golden_spiral(100).unwrap();
        assert!((pts[0].z - 0.99).abs() < TOL);
        assert!((pts[99].z + 0.99).abs() < TOL);
    }

    #[test]
    fn golden_spiral_points_are_unit() {
        for p in golden_spiral(57).unwrap() {
            assert!((p.norm() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn golden_spiral_rejects_zero() {
        assert!(golden_spiral(0).is_err());
    }

    #[test]
    fn axis_angle_quarter_turn_about_z() {
        let r = RotationMatrix::from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2)
            .unwrap();
        let expected = Matrix3::new(
            0.0, -1.0, 0.0, //
            1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0,
        );
        assert_relative_eq!(*r.matrix(), expected, epsilon = TOL);
    }

    #[test]
    fn axis_angle_rejects_zero_axis() {
        assert!(RotationMatrix::from_axis_angle(&Vector3::zeros(), 1.0).is_err());
    }
}
