//! Scalar-generic kernels for the rotation math.
//!
//! These are the single source of truth for the formulas that must be both
//! evaluated (`f64`) and differentiated ([`crate::ad::Dual`]). The public
//! `geom` API wraps the `f64` instantiation in nalgebra types; the loss
//! gradients instantiate the same code with dual numbers.

use crate::ad::Scalar;

pub type Vec3<S> = [S; 3];
/// Row-major 3×3 matrix.
pub type Mat3<S> = [[S; 3]; 3];

/// Half-width of the interval excluded around ±1 before `acos` in the
/// geodesic distance, guarding the infinite slope at the boundary.
pub const ACOS_GUARD: f64 = 1e-12;

#[inline]
pub fn dot<S: Scalar>(a: &Vec3<S>, b: &Vec3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<S: Scalar>(a: &Vec3<S>, b: &Vec3<S>) -> Vec3<S> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<S: Scalar>(a: &Vec3<S>) -> S {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale<S: Scalar>(a: &Vec3<S>, k: S) -> Vec3<S> {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
pub fn sub<S: Scalar>(a: &Vec3<S>, b: &Vec3<S>) -> Vec3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn normalize<S: Scalar>(a: &Vec3<S>) -> Vec3<S> {
    let inv = S::from_f64(1.0) / norm(a);
    scale(a, inv)
}

pub fn mat_mul<S: Scalar>(a: &Mat3<S>, b: &Mat3<S>) -> Mat3<S> {
    let z = S::from_f64(0.0);
    let mut out = [[z; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// `Tr(AᵀB)`, the Frobenius inner product `Σᵢⱼ AᵢⱼBᵢⱼ`.
pub fn trace_of_transpose_product<S: Scalar>(a: &Mat3<S>, b: &Mat3<S>) -> S {
    let mut acc = S::from_f64(0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc = acc + a[i][j] * b[i][j];
        }
    }
    acc
}

/// Geodesic distance on SO(3): `arccos((Tr(R₁ᵀR₂) − 1) / 2)`, radians in
/// `[0, π]`. The arccos argument is clamped to `[−1 + ACOS_GUARD,
/// 1 − ACOS_GUARD]`, so the result at identical inputs is ≈ 1.4e-6 rather
/// than exactly 0.
pub fn geodesic<S: Scalar>(r1: &Mat3<S>, r2: &Mat3<S>) -> S {
    let half = S::from_f64(0.5);
    let one = S::from_f64(1.0);
    let arg = (trace_of_transpose_product(r1, r2) - one) * half;
    arg.clamp_to(-1.0 + ACOS_GUARD, 1.0 - ACOS_GUARD).acos()
}

/// Rotation matrix from the continuous 6-parameter encoding.
///
/// The two input vectors are orthonormalized (first normalized, second made
/// orthogonal to it and normalized, third their cross product) and become
/// the *rows* of the result. No validity checks: callers guard degeneracy.
pub fn rot6d_to_matrix<S: Scalar>(rx: &Vec3<S>, ry: &Vec3<S>) -> Mat3<S> {
    let row_x = normalize(rx);
    let proj = dot(&row_x, ry);
    let row_y = normalize(&sub(ry, &scale(&row_x, proj)));
    let row_z = cross(&row_x, &row_y);
    [row_x, row_y, row_z]
}

/// Rotation about the x axis by `a` radians.
pub fn rot_x<S: Scalar>(a: S) -> Mat3<S> {
    let (z, o) = (S::from_f64(0.0), S::from_f64(1.0));
    let (s, c) = (a.sin(), a.cos());
    [[o, z, z], [z, c, -s], [z, s, c]]
}

/// Rotation about the y axis by `a` radians.
pub fn rot_y<S: Scalar>(a: S) -> Mat3<S> {
    let (z, o) = (S::from_f64(0.0), S::from_f64(1.0));
    let (s, c) = (a.sin(), a.cos());
    [[c, z, s], [z, o, z], [-s, z, c]]
}

/// Rotation about the z axis by `a` radians.
pub fn rot_z<S: Scalar>(a: S) -> Mat3<S> {
    let (z, o) = (S::from_f64(0.0), S::from_f64(1.0));
    let (s, c) = (a.sin(), a.cos());
    [[c, -s, z], [s, c, z], [z, z, o]]
}

/// Intrinsic x-then-y-then-z Euler rotation, angles in radians:
/// `R = Rx(x) · Ry(y) · Rz(z)`.
pub fn euler_xyz_to_matrix<S: Scalar>(x: S, y: S, z: S) -> Mat3<S> {
    mat_mul(&rot_x(x), &mat_mul(&rot_y(y), &rot_z(z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOLERANCE: f64 = 1e-12;

    #[test]
    fn cross_of_basis_vectors() {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert_eq!(cross(&x, &y), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn trace_of_transpose_product_is_frobenius_inner() {
        let a = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
        let b = [[9.0, 8.0, 7.0], [6.0, 5.0, 4.0], [3.0, 2.0, 1.0]];
        // Direct Tr(AᵀB) by explicit transpose and product.
        let mut expected = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                expected += a[k][i] * b[k][i];
            }
        }
        assert!((trace_of_transpose_product(&a, &b) - expected).abs() < TOLERANCE);
    }

    #[test]
    fn geodesic_of_identical_rotations_is_tiny_not_zero() {
        let r = rot_z(0.83_f64);
        let d = geodesic(&r, &r);
        assert!(d > 0.0 && d < 2e-6, "clamped self-distance {d}");
    }

    #[test]
    fn geodesic_between_z_rotations_is_angle_difference() {
        let a = rot_z(0.2_f64);
        let b = rot_z(1.4_f64);
        assert!((geodesic(&a, &b) - 1.2).abs() < 1e-9);
    }

    #[test]
    fn rot6d_rows_are_orthonormal_even_for_skewed_input() {
        let m = rot6d_to_matrix(&[2.0, 0.1, -0.3], &[0.5, 1.5, 0.2]);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&m[i], &m[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-12);
            }
        }
    }
}
