use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Angle-weighted vertex normals.
///
/// Each face contributes its unit normal weighted by the interior angle at
/// the vertex. Zero-area faces contribute nothing.
pub fn compute_vertex_normals(mesh: &TriMesh) -> Result<Vec<Vec3>> {
    if mesh.is_empty() {
        return Err(Error::InvalidMesh("normals need at least one face".into()));
    }
    let verts = mesh.vertices();
    let mut acc = vec![Vec3::zeros(); verts.len()];
    for (fi, face) in mesh.faces().iter().enumerate() {
        let n = mesh.face_cross(fi);
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        for k in 0..3 {
            let p = verts[face[k]];
            let e1 = verts[face[(k + 1) % 3]] - p;
            let e2 = verts[face[(k + 2) % 3]] - p;
            let (l1, l2) = (e1.norm(), e2.norm());
            if l1 == 0.0 || l2 == 0.0 {
                continue;
            }
            let angle = (e1.dot(&e2) / (l1 * l2)).clamp(-1.0, 1.0).acos();
            acc[face[k]] += n * angle;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, n)| {
            let len = n.norm();
            if len > 0.0 && len.is_finite() {
                Ok(n / len)
            } else {
                Err(Error::ZeroNormal(i))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives;

    #[test]
    fn cube_corners_point_diagonally() {
        let cube = primitives::cube(Vec3::repeat(-0.5), Vec3::repeat(0.5));
        let normals = compute_vertex_normals(&cube).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for (v, n) in cube.vertices().iter().zip(&normals) {
            let expected = v.map(|c| c.signum() * s);
            assert!((n - expected).norm() < 1e-12, "{n:?} vs {expected:?}");
        }
    }

    #[test]
    fn planar_triangle() {
        let m = TriMesh::new(
            vec![Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        for n in compute_vertex_normals(&m).unwrap() {
            assert_eq!(n, Vec3::new(0., 0., 1.));
        }
    }

    #[test]
    fn icosphere_normals_are_radial() {
        let sphere = primitives::icosphere(3, 1.0);
        let normals = compute_vertex_normals(&sphere).unwrap();
        let max_angle = sphere
            .vertices()
            .iter()
            .zip(&normals)
            .map(|(v, n)| n.dot(&v.normalize()).clamp(-1.0, 1.0).acos().to_degrees())
            .fold(0.0, f64::max);
        assert!(max_angle < 2.0, "max angle {max_angle}");
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let m = TriMesh::new(
            vec![Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(0., 1., 0.), Vec3::new(5., 5., 5.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(compute_vertex_normals(&m), Err(Error::ZeroNormal(3))));
    }
}
