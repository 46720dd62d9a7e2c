//! Closed reference shapes used by fixtures and tests.

use std::collections::HashMap;

use super::{TriMesh, Vec3};

/// Axis-aligned box with 8 vertices and 12 outward-facing triangles.
pub fn cube(min: Vec3, max: Vec3) -> TriMesh {
    let v = |x: usize, y: usize, z: usize| {
        Vec3::new(
            if x == 0 { min.x } else { max.x },
            if y == 0 { min.y } else { max.y },
            if z == 0 { min.z } else { max.z },
        )
    };
    let vertices = vec![
        v(0, 0, 0),
        v(1, 0, 0),
        v(1, 1, 0),
        v(0, 1, 0),
        v(0, 0, 1),
        v(1, 0, 1),
        v(1, 1, 1),
        v(0, 1, 1),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
    ];
    TriMesh::new(vertices, faces).expect("cube is valid")
}

/// Unit cube `[0, 1]^3`.
pub fn unit_cube() -> TriMesh {
    cube(Vec3::zeros(), Vec3::repeat(1.0))
}

/// Regular tetrahedron inscribed in the sphere of given radius, centered at
/// the origin, outward oriented.
pub fn tetrahedron(radius: f64) -> TriMesh {
    let s = radius / 3f64.sqrt();
    let vertices = vec![
        Vec3::new(1., 1., 1.) * s,
        Vec3::new(1., -1., -1.) * s,
        Vec3::new(-1., 1., -1.) * s,
        Vec3::new(-1., -1., 1.) * s,
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(vertices, faces).expect("tetrahedron is valid")
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1., t, 0.),
        (1., t, 0.),
        (-1., -t, 0.),
        (1., -t, 0.),
        (0., -1., t),
        (0., 1., t),
        (0., -1., -t),
        (0., 1., -t),
        (t, 0., -1.),
        (t, 0., 1.),
        (-t, 0., -1.),
        (-t, 0., 1.),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
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
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    TriMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Flat square `[-h, h]^2` in the plane through `center` spanned by `u`, `v`,
/// split into `2 n^2` triangles. Open surface; normal is `u x v`.
pub fn plane_patch(center: Vec3, u: Vec3, v: Vec3, half: f64, n: usize) -> TriMesh {
    let n = n.max(1);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let s = -half + 2.0 * half * i as f64 / n as f64;
            let t = -half + 2.0 * half * j as f64 / n as f64;
            vertices.push(center + u * s + v * t);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("patch is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::is_watertight;

    #[test]
    fn closed_shapes_have_positive_volume() {
        assert!((unit_cube().signed_volume() - 1.0).abs() < 1e-12);
        assert!(tetrahedron(1.0).signed_volume() > 0.0);
        let s = icosphere(3, 1.0);
        let v = s.signed_volume();
        assert!(v > 0.95 * 4.0 / 3.0 * std::f64::consts::PI && v < 4.0 / 3.0 * std::f64::consts::PI);
        for m in [unit_cube(), tetrahedron(1.0), s] {
            assert!(is_watertight(&m));
        }
    }
}
