//! Triangle meshes, a minimal Wavefront OBJ subset, and the surface-inertia
//! tensor used to weight rotational error toward hard-to-track shapes.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{gram_schmidt, GeomError, RotationMatrix};

/// Faces with area at or below this (in m²) are rejected as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Indexed triangle mesh. Invariants enforced at construction: at least one
/// face, all indices in range, every face area above [`MIN_FACE_AREA`].
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, GeomError> {
        if faces.is_empty() {
            return Err(GeomError::DegenerateMesh("mesh has no faces".to_string()));
        }
        for (fi, face) in faces.iter().enumerate() {
            for &vi in face {
                if vi >= vertices.len() {
                    return Err(GeomError::DegenerateMesh(format!(
                        "face {fi} references vertex {vi}, but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            let [a, b, c] = *face;
            let area = 0.5
                * (vertices[b] - vertices[a])
                    .cross(&(vertices[c] - vertices[a]))
                    .norm();
            if area <= MIN_FACE_AREA {
                return Err(GeomError::DegenerateMesh(format!(
                    "face {fi} is degenerate (area {area:.3e} m²)"
                )));
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_vertices(&self, face: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_centroid(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted mean of face centroids: the surface center of mass
    /// under the lumped-face approximation.
    pub fn surface_center_of_mass(&self) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        let mut area = 0.0;
        for f in 0..self.faces.len() {
            let a = self.face_area(f);
            acc += self.face_centroid(f) * a;
            area += a;
        }
        acc / area
    }

    /// Parse the OBJ subset: `v x y z` vertex lines and `f i j k` triangle
    /// lines (1-based indices). Blank lines and `#` comments are skipped;
    /// anything else is an error naming its line number. Faces with more
    /// than three vertices are rejected — triangulate before loading.
    pub fn from_obj_str(text: &str) -> Result<Self, GeomError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let keyword = tokens.next().expect("non-empty line has a token");
            let rest: Vec<&str> = tokens.collect();
            match keyword {
                "v" => {
                    if rest.len() != 3 {
                        return Err(GeomError::MeshParse {
                            line,
                            message: format!(
                                "vertex line has {} coordinates, expected 3",
                                rest.len()
                            ),
                        });
                    }
                    let mut coords = [0.0; 3];
                    for (k, tok) in rest.iter().enumerate() {
                        coords[k] = tok.parse::<f64>().map_err(|_| GeomError::MeshParse {
                            line,
                            message: format!("invalid coordinate '{tok}'"),
                        })?;
                    }
                    vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
                }
                "f" => {
                    if rest.len() != 3 {
                        return Err(GeomError::MeshParse {
                            line,
                            message: format!(
                                "face with {} vertices: only triangles are supported",
                                rest.len()
                            ),
                        });
                    }
                    let mut idxs = [0usize; 3];
                    for (k, tok) in rest.iter().enumerate() {
                        let one_based: usize =
                            tok.parse().map_err(|_| GeomError::MeshParse {
                                line,
                                message: format!("invalid vertex index '{tok}'"),
                            })?;
                        if one_based == 0 || one_based > vertices.len() {
                            return Err(GeomError::MeshParse {
                                line,
                                message: format!(
                                    "vertex index {one_based} out of range (have {} vertices)",
                                    vertices.len()
                                ),
                            });
                        }
                        idxs[k] = one_based - 1;
                    }
                    faces.push(idxs);
                }
                other => {
                    return Err(GeomError::MeshParse {
                        line,
                        message: format!("unsupported element '{other}'"),
                    });
                }
            }
        }
        TriMesh::new(vertices, faces)
    }

    pub fn load_obj(path: &Path) -> Result<Self, GeomError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_obj_str(&text)
    }

    /// Serialize back to the same OBJ subset.
    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        out
    }
}

/// Surface-inertia tensor of a mesh and its orthonormalized form.
///
/// `lambda` concentrates each face's area at its centroid `c` (taken
/// relative to the area-weighted surface center of mass) and accumulates
/// `area · (‖c‖²·I − c·cᵀ)`. `lambda_gs` is the column-wise Gram-Schmidt
/// orthonormalization of `lambda`, a proper rotation used to re-weight
/// rotational error along the object's principal spread.
#[derive(Clone, Copy, Debug)]
pub struct InertiaTensor {
    pub lambda: Matrix3<f64>,
    pub lambda_gs: RotationMatrix,
}

/// Compute the surface-inertia tensor. Fails if total surface area is at or
/// below `1e-12` m², or if `lambda` is rank-deficient (e.g. a mesh whose
/// centroids collapse to a point).
pub fn inertia_tensor(mesh: &TriMesh) -> Result<InertiaTensor, GeomError> {
    let total_area = mesh.total_area();
    if total_area <= 1e-12 {
        return Err(GeomError::DegenerateMesh(format!(
            "total surface area {total_area:.3e} m² too small for inertia"
        )));
    }
    let com = mesh.surface_center_of_mass();
    let mut lambda = Matrix3::zeros();
    for f in 0..mesh.faces().len() {
        let area = mesh.face_area(f);
        let c = mesh.face_centroid(f) - com;
        lambda += (Matrix3::identity() * c.norm_squared() - c * c.transpose()) * area;
    }
    let lambda_gs = gram_schmidt(&lambda)?;
    Ok(InertiaTensor { lambda, lambda_gs })
}

#[cfg(test)]
mod tests {
    use super::super::{ellipsoid, icosphere, unit_cube};
    use super::*;

    #[test]
    fn rejects_empty_mesh() {
        assert!(TriMesh::new(vec![Vector3::zeros()], vec![]).is_err());
    }

    #[test]
    fn rejects_out_of_range_index() {
        let verts = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(TriMesh::new(verts, vec![[0, 1, 3]]).is_err());
    }

    #[test]
    fn rejects_zero_area_face() {
        let verts = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        assert!(TriMesh::new(verts, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn obj_round_trip() {
        let cube = unit_cube();
        let back = TriMesh::from_obj_str(&cube.to_obj_string()).unwrap();
        assert_eq!(back.faces().len(), cube.faces().len());
        assert!((back.total_area() - cube.total_area()).abs() < 1e-12);
    }

    #[test]
    fn obj_parses_simple_triangle() {
        let mesh = TriMesh::from_obj_str("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
            .unwrap();
        assert_eq!(mesh.vertices().len(), 3);
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_rejects_quad_naming_line() {
        let err = TriMesh::from_obj_str(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n",
        )
        .unwrap_err();
        match err {
            GeomError::MeshParse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("triangles"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn obj_rejects_unknown_keyword_naming_line() {
        let err = TriMesh::from_obj_str("v 0 0 0\nvn 1 0 0\n").unwrap_err();
        match err {
            GeomError::MeshParse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn obj_rejects_index_out_of_range() {
        let err =
            TriMesh::from_obj_str("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap_err();
        match err {
            GeomError::MeshParse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("out of range"), "{message}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn cube_inertia_is_diagonal_and_isotropic() {
        let t = inertia_tensor(&unit_cube()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(
                        t.lambda[(i, j)].abs() < 1e-9,
                        "off-diagonal ({i},{j}) = {}",
                        t.lambda[(i, j)]
                    );
                }
            }
        }
        // Cubic symmetry: all diagonal entries equal.
        assert!((t.lambda[(0, 0)] - t.lambda[(1, 1)]).abs() < 1e-9);
        assert!((t.lambda[(1, 1)] - t.lambda[(2, 2)]).abs() < 1e-9);
    }

    #[test]
    fn inertia_is_translation_invariant() {
        let cube = unit_cube();
        let shifted = TriMesh::new(
            cube.vertices()
                .iter()
                .map(|v| v + Vector3::new(3.0, -2.0, 7.0))
                .collect(),
            cube.faces().to_vec(),
        )
        .unwrap();
        let a = inertia_tensor(&cube).unwrap().lambda;
        let b = inertia_tensor(&shifted).unwrap().lambda;
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a[(i, j)] - b[(i, j)]).abs() < 1e-9,
                    "entry ({i},{j}) moved under translation"
                );
            }
        }
    }

    #[test]
    fn icosphere_inertia_is_near_isotropic() {
        let t = inertia_tensor(&icosphere(3)).unwrap();
        let s = t.lambda[(0, 0)];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(t.lambda[(i, j)].abs() < 1e-3 * s);
                } else {
                    assert!((t.lambda[(i, j)] - s).abs() < 1e-3 * s);
                }
            }
        }
        // Orthonormalized tensor of an isotropic body is near identity.
        let d = (t.lambda_gs.matrix() - Matrix3::identity()).abs().max();
        assert!(d < 1e-6, "lambda_gs deviates from identity by {d}");
    }

    #[test]
    fn ellipsoid_inertia_orders_axes() {
        // Longest spread along x → smallest inertia about x.
        let t = inertia_tensor(&ellipsoid(0.09, 0.05, 0.03, 2)).unwrap();
        assert!(t.lambda[(0, 0)] < t.lambda[(1, 1)]);
        assert!(t.lambda[(1, 1)] < t.lambda[(2, 2)]);
    }
}
