//! Procedural test meshes: cube, icosphere, ellipsoid.
//!
//! All primitives have outward-facing counter-clockwise winding. The cube is
//! triangulated by fanning each square face from its center (4 triangles per
//! face), which keeps the triangulation symmetric under the cube's symmetry
//! group — centroid-lumped quantities stay exactly axis-aligned.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::TriMesh;

/// Axis-aligned cube with side 1 centered at the origin, 24 faces.
pub fn unit_cube() -> TriMesh {
    let s = 0.5;
    let quads: [[Vector3<f64>; 4]; 6] = [
        // +x
        [
            Vector3::new(s, -s, -s),
            Vector3::new(s, s, -s),
            Vector3::new(s, s, s),
            Vector3::new(s, -s, s),
        ],
        // -x
        [
            Vector3::new(-s, -s, -s),
            Vector3::new(-s, -s, s),
            Vector3::new(-s, s, s),
            Vector3::new(-s, s, -s),
        ],
        // +y
        [
            Vector3::new(-s, s, -s),
            Vector3::new(-s, s, s),
            Vector3::new(s, s, s),
            Vector3::new(s, s, -s),
        ],
        // -y
        [
            Vector3::new(-s, -s, -s),
            Vector3::new(s, -s, -s),
            Vector3::new(s, -s, s),
            Vector3::new(-s, -s, s),
        ],
        // +z
        [
            Vector3::new(-s, -s, s),
            Vector3::new(s, -s, s),
            Vector3::new(s, s, s),
            Vector3::new(-s, s, s),
        ],
        // -z
        [
            Vector3::new(-s, -s, -s),
            Vector3::new(-s, s, -s),
            Vector3::new(s, s, -s),
            Vector3::new(s, -s, -s),
        ],
    ];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for quad in &quads {
        let center = (quad[0] + quad[1] + quad[2] + quad[3]) / 4.0;
        let base = vertices.len();
        vertices.push(center);
        vertices.extend_from_slice(quad);
        for k in 0..4 {
            faces.push([base, base + 1 + k, base + 1 + (k + 1) % 4]);
        }
    }
    TriMesh::new(vertices, faces).expect("cube construction is valid")
}

/// Unit-radius sphere approximated by subdividing an icosahedron
/// `subdivisions` times (20·4ⁿ faces) and projecting onto the sphere.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint_cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut midpoint = |i: usize, j: usize, verts: &mut Vec<Vector3<f64>>| {
                let key = (i.min(j), i.max(j));
                *midpoint_cache.entry(key).or_insert_with(|| {
                    let m = ((verts[i] + verts[j]) / 2.0).normalize();
                    verts.push(m);
                    verts.len() - 1
                })
            };
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriMesh::new(vertices, faces).expect("icosphere construction is valid")
}

/// Axis-aligned ellipsoid with semi-axes `(rx, ry, rz)` in meters.
pub fn ellipsoid(rx: f64, ry: f64, rz: f64, subdivisions: u32) -> TriMesh {
    let sphere = icosphere(subdivisions);
    TriMesh::new(
        sphere
            .vertices()
            .iter()
            .map(|v| Vector3::new(v.x * rx, v.y * ry, v.z * rz))
            .collect(),
        sphere.faces().to_vec(),
    )
    .expect("ellipsoid construction is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn winding_is_outward(mesh: &TriMesh) -> bool {
        (0..mesh.faces().len()).all(|f| {
            let [a, b, c] = mesh.face_vertices(f);
            let normal = (b - a).cross(&(c - a));
            normal.dot(&mesh.face_centroid(f)) > 0.0
        })
    }

    #[test]
    fn cube_has_expected_area_and_winding() {
        let cube = unit_cube();
        assert_eq!(cube.faces().len(), 24);
        assert!((cube.total_area() - 6.0).abs() < 1e-12);
        assert!(winding_is_outward(&cube));
    }

    #[test]
    fn icosphere_face_count_and_radius() {
        assert_eq!(icosphere(0).faces().len(), 20);
        let sphere = icosphere(2);
        assert_eq!(sphere.faces().len(), 320);
        for v in sphere.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(winding_is_outward(&sphere));
    }

    #[test]
    fn icosphere_area_approaches_sphere_area() {
        let area = icosphere(3).total_area();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((area - exact).abs() / exact < 0.01, "area {area} vs {exact}");
    }

    #[test]
    fn ellipsoid_respects_semi_axes() {
        let e = ellipsoid(0.08, 0.05, 0.03, 1);
        let max_x = e.vertices().iter().map(|v| v.x.abs()).fold(0.0, f64::max);
        let max_y = e.vertices().iter().map(|v| v.y.abs()).fold(0.0, f64::max);
        let max_z = e.vertices().iter().map(|v| v.z.abs()).fold(0.0, f64::max);
        assert!((max_x - 0.08).abs() < 1e-12);
        assert!((max_y - 0.05).abs() < 1e-12);
        assert!((max_z - 0.03).abs() < 1e-12);
    }
}
