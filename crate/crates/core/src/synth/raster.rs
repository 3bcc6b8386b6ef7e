//! Minimal flat-shaded z-buffer rasterizer.
//!
//! Perspective projection through a pinhole camera, hidden surfaces removed
//! with a per-pixel depth buffer, and one fixed directional light. Depth is
//! interpolated perspective-correctly (linear in 1/z across the projected
//! triangle). This deliberately trades realism for a self-contained,
//! testable pipeline at small frame sizes.

use nalgebra::Vector3;

use crate::geom::{Pose, TriMesh};
use crate::synth::{Camera, RgbdFrame, SynthError};

/// Direction from surfaces toward the light (camera-space, y down, z
/// forward): up and to the left, behind the camera.
const TO_LIGHT: [f64; 3] = [-0.3, -0.5, -0.81];
const AMBIENT: f64 = 0.3;

/// One albedo entry per face, all the same color.
pub fn uniform_albedo(mesh: &TriMesh, color: [u8; 3]) -> Vec<[u8; 3]> {
    vec![color; mesh.faces().len()]
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Renders `mesh` posed in camera coordinates into a fresh frame.
///
/// Triangles with any vertex nearer than `cam.near` are skipped; pixels
/// beyond `cam.far` are not written. The foreground mask marks every pixel
/// the mesh covers, and the unoccluded mask starts out equal to it (no
/// occluder has been composited yet).
pub fn render(
    mesh: &TriMesh,
    pose: &Pose,
    cam: &Camera,
    albedo: &[[u8; 3]],
) -> Result<RgbdFrame, SynthError> {
    if albedo.len() != mesh.faces().len() {
        return Err(SynthError::AlbedoCount {
            expected: mesh.faces().len(),
            got: albedo.len(),
        });
    }

    let cam_verts: Vec<Vector3<f64>> = mesh
        .vertices()
        .iter()
        .map(|v| pose.transform_point(v))
        .collect();

    let light = {
        let n = (TO_LIGHT[0] * TO_LIGHT[0] + TO_LIGHT[1] * TO_LIGHT[1]
            + TO_LIGHT[2] * TO_LIGHT[2])
            .sqrt();
        Vector3::new(TO_LIGHT[0] / n, TO_LIGHT[1] / n, TO_LIGHT[2] / n)
    };

    let (w, h) = (cam.width, cam.height);
    let mut frame = RgbdFrame::empty(w, h);
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut any_written = false;

    for (f, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = [cam_verts[face[0]], cam_verts[face[1]], cam_verts[face[2]]];
        if a.z < cam.near || b.z < cam.near || c.z < cam.near {
            continue;
        }

        let project = |v: &Vector3<f64>| (cam.fx * v.x / v.z + cam.cx, cam.fy * v.y / v.z + cam.cy);
        let (pa, pb, pc) = (project(&a), project(&b), project(&c));

        let area = edge(pa, pb, pc);
        if area.abs() < 1e-12 {
            continue;
        }

        // Flat shading: flip the normal toward the camera so winding does
        // not matter, then one intensity for the whole face.
        let mut normal = (b - a).cross(&(c - a));
        if normal.z > 0.0 {
            normal = -normal;
        }
        let normal = normal.normalize();
        let intensity = AMBIENT + (1.0 - AMBIENT) * normal.dot(&light).max(0.0);
        let shade = |v: u8| ((f64::from(v) * intensity).round()).clamp(0.0, 255.0) as u8;
        let color = [shade(albedo[f][0]), shade(albedo[f][1]), shade(albedo[f][2])];

        let min_x = pa.0.min(pb.0).min(pc.0).floor().max(0.0) as usize;
        let max_x = (pa.0.max(pb.0).max(pc.0).ceil() as isize).min(w as isize - 1);
        let min_y = pa.1.min(pb.1).min(pc.1).floor().max(0.0) as usize;
        let max_y = (pa.1.max(pb.1).max(pc.1).ceil() as isize).min(h as isize - 1);
        if max_x < min_x as isize || max_y < min_y as isize {
            continue;
        }
        let (max_x, max_y) = (max_x as usize, max_y as usize);

        let sign = if area < 0.0 { -1.0 } else { 1.0 };
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let p = (x as f64, y as f64);
                let w0 = edge(pb, pc, p) * sign;
                let w1 = edge(pc, pa, p) * sign;
                let w2 = edge(pa, pb, p) * sign;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let inv_area = 1.0 / (area * sign);
                let (l0, l1, l2) = (w0 * inv_area, w1 * inv_area, w2 * inv_area);
                let inv_z = l0 / a.z + l1 / b.z + l2 / c.z;
                let z = 1.0 / inv_z;
                if z > cam.far {
                    continue;
                }
                let i = y * w + x;
                if z < zbuf[i] {
                    zbuf[i] = z;
                    let mm = (z * 1000.0).round().clamp(1.0, 65535.0) as u16;
                    frame.set_pixel(x, y, color, mm);
                    frame.fg_mask_mut().set(x, y, true);
                    any_written = true;
                }
            }
        }
    }

    if !any_written {
        return Err(SynthError::OutOfFrustum);
    }
    *frame.unoccl_mask_mut() = frame.fg_mask().clone();
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ellipsoid;
    use crate::geom::RotationMatrix;
    use nalgebra::Vector3;

    fn facing_triangle() -> TriMesh {
        TriMesh::new(
            vec![
                Vector3::new(-0.2, -0.2, 0.0),
                Vector3::new(0.2, -0.2, 0.0),
                Vector3::new(0.0, 0.3, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn at_z(z: f64) -> Pose {
        Pose::new(RotationMatrix::identity(), Vector3::new(0.0, 0.0, z))
    }

    fn mask_bounds(frame: &RgbdFrame) -> (usize, usize, usize, usize) {
        let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                if frame.fg_mask().get(x, y) {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        (x0, x1, y0, y1)
    }

    #[test]
    fn centered_triangle_depth_is_exact() {
        let mesh = facing_triangle();
        let cam = Camera::centered(51);
        let frame = render(&mesh, &at_z(1.0), &cam, &uniform_albedo(&mesh, [200, 80, 40])).unwrap();
        assert_eq!(frame.depth_at(25, 25), 1000);
        assert!(frame.fg_mask().get(25, 25));
    }

    #[test]
    fn empty_region_has_invalid_depth_and_clear_masks() {
        let mesh = facing_triangle();
        let cam = Camera::centered(51);
        let frame = render(&mesh, &at_z(1.0), &cam, &uniform_albedo(&mesh, [200, 80, 40])).unwrap();
        assert_eq!(frame.depth_at(0, 0), 0);
        assert!(!frame.fg_mask().get(0, 0));
        assert_eq!(frame.rgb_at(0, 0), [0, 0, 0]);
    }

    #[test]
    fn mesh_behind_camera_is_out_of_frustum() {
        let mesh = facing_triangle();
        let cam = Camera::centered(51);
        let err = render(&mesh, &at_z(-1.0), &cam, &uniform_albedo(&mesh, [200, 80, 40]));
        assert!(matches!(err, Err(SynthError::OutOfFrustum)));
    }

    #[test]
    fn translation_shifts_centroid_per_pinhole_model() {
        let mesh = ellipsoid(0.08, 0.08, 0.08, 1);
        let cam = Camera::centered(150);
        let albedo = uniform_albedo(&mesh, [230, 120, 30]);
        let f0 = render(&mesh, &at_z(1.0), &cam, &albedo).unwrap();
        let pose = Pose::new(RotationMatrix::identity(), Vector3::new(0.1, 0.0, 1.0));
        let f1 = render(&mesh, &pose, &cam, &albedo).unwrap();
        let (c0, _) = f0.fg_mask().centroid().unwrap();
        let (c1, _) = f1.fg_mask().centroid().unwrap();
        let expected = cam.fx * 0.1 / 1.0;
        assert!(
            (c1 - c0 - expected).abs() < 1.0,
            "shift {} vs expected {expected}",
            c1 - c0
        );
    }

    #[test]
    fn doubling_distance_halves_mask_diameter() {
        let mesh = ellipsoid(0.08, 0.08, 0.08, 2);
        let cam = Camera::centered(150);
        let albedo = uniform_albedo(&mesh, [230, 120, 30]);
        let near = render(&mesh, &at_z(1.0), &cam, &albedo).unwrap();
        let far = render(&mesh, &at_z(2.0), &cam, &albedo).unwrap();
        let (x0, x1, _, _) = mask_bounds(&near);
        let (x2, x3, _, _) = mask_bounds(&far);
        let d_near = (x1 - x0 + 1) as f64;
        let d_far = (x3 - x2 + 1) as f64;
        assert!(
            (d_far - d_near / 2.0).abs() <= 2.0,
            "diameters {d_near} vs {d_far}"
        );
    }

    #[test]
    fn fresh_render_has_equal_masks() {
        let mesh = ellipsoid(0.08, 0.08, 0.08, 1);
        let cam = Camera::centered(80);
        let frame = render(&mesh, &at_z(1.0), &cam, &uniform_albedo(&mesh, [230, 120, 30])).unwrap();
        assert_eq!(frame.fg_mask(), frame.unoccl_mask());
        assert!(frame.fg_mask().count_ones() > 0);
    }

    #[test]
    fn albedo_length_is_checked() {
        let mesh = facing_triangle();
        let cam = Camera::centered(51);
        let err = render(&mesh, &at_z(1.0), &cam, &[[1, 2, 3], [4, 5, 6]]);
        assert!(matches!(err, Err(SynthError::AlbedoCount { expected: 1, got: 2 })));
    }

    #[test]
    fn nearer_surface_wins_depth_test() {
        // Two stacked triangles: the nearer one must own the overlap pixels.
        let mesh = TriMesh::new(
            vec![
                Vector3::new(-0.2, -0.2, 0.1),
                Vector3::new(0.2, -0.2, 0.1),
                Vector3::new(0.0, 0.3, 0.1),
                Vector3::new(-0.2, -0.2, 0.0),
                Vector3::new(0.2, -0.2, 0.0),
                Vector3::new(0.0, 0.3, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let cam = Camera::centered(51);
        let frame = render(&mesh, &at_z(1.0), &cam, &uniform_albedo(&mesh, [200, 80, 40])).unwrap();
        assert_eq!(frame.depth_at(25, 25), 1000, "front triangle at z=1.0");
    }
}
