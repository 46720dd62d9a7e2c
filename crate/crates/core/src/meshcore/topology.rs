use std::collections::HashMap;

use super::TriMesh;

/// Number of faces using each undirected edge.
pub fn edge_valences(mesh: &TriMesh) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::with_capacity(mesh.face_count() * 3 / 2);
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    counts
}

/// True iff the mesh has faces and every edge is used by exactly two faces
/// that traverse it in opposite directions.
pub fn is_watertight(mesh: &TriMesh) -> bool {
    if mesh.is_empty() {
        return false;
    }
    // +1 for a -> b with a < b, -1 for the reverse; paired edges sum to 0.
    let mut edges: HashMap<(usize, usize), (u32, i32)> = HashMap::with_capacity(mesh.face_count() * 3 / 2);
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let e = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
            e.0 += 1;
            e.1 += if a < b { 1 } else { -1 };
        }
    }
    edges.values().all(|&(count, dir)| count == 2 && dir == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives;

    #[test]
    fn closed_cube_is_watertight() {
        assert!(is_watertight(&primitives::unit_cube()));
    }

    #[test]
    fn cube_missing_face_is_not() {
        let cube = primitives::unit_cube();
        let faces = cube.faces()[..11].to_vec();
        let open = TriMesh::new(cube.vertices().to_vec(), faces).unwrap();
        assert!(!is_watertight(&open));
    }

    #[test]
    fn inconsistent_orientation_is_not() {
        let cube = primitives::unit_cube();
        let mut faces = cube.faces().to_vec();
        faces[0] = [faces[0][0], faces[0][2], faces[0][1]];
        assert!(!is_watertight(&TriMesh::new(cube.vertices().to_vec(), faces).unwrap()));
    }
}
