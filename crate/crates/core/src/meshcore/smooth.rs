use super::{TriMesh, Vec3};

/// Strength of uniform Laplacian smoothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingParams {
    pub iterations: usize,
    /// Step toward the neighbor centroid, in `(0, 1]`.
    pub lambda: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { iterations: 30, lambda: 0.5 }
    }
}

/// Vertex one-ring in compressed rows, neighbors sorted ascending.
pub(crate) fn vertex_neighbors(mesh: &TriMesh) -> (Vec<usize>, Vec<usize>) {
    let n = mesh.vertex_count();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(mesh.face_count() * 6);
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            pairs.push((a, b));
            pairs.push((b, a));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut offsets = vec![0usize; n + 1];
    for &(a, _) in &pairs {
        offsets[a + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, pairs.into_iter().map(|(_, b)| b).collect())
}

/// Umbrella-operator smoothing: each iteration moves every vertex by
/// `lambda * (centroid(neighbors) - v)` using positions from the previous
/// iteration. Connectivity is untouched; vertices without neighbors stay put.
pub fn laplacian_smooth(mesh: &TriMesh, params: SmoothingParams) -> TriMesh {
    let mut out = mesh.clone();
    if params.iterations == 0 {
        return out;
    }
    let (offsets, adjacency) = vertex_neighbors(mesh);
    let mut current: Vec<Vec3> = mesh.vertices().to_vec();
    let mut next = current.clone();
    for _ in 0..params.iterations {
        for (i, slot) in next.iter_mut().enumerate() {
            let ring = &adjacency[offsets[i]..offsets[i + 1]];
            if ring.is_empty() {
                *slot = current[i];
                continue;
            }
            let centroid = ring.iter().map(|&j| current[j]).sum::<Vec3>() / ring.len() as f64;
            *slot = current[i] + (centroid - current[i]) * params.lambda;
        }
        std::mem::swap(&mut current, &mut next);
    }
    out.vertices_mut().copy_from_slice(&current);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn zero_iterations_is_identity() {
        let m = primitives::icosphere(2, 1.0);
        let s = laplacian_smooth(&m, SmoothingParams { iterations: 0, lambda: 0.5 });
        assert_eq!(s, m);
    }

    #[test]
    fn tetrahedron_vertices_go_to_opposite_centroids() {
        let m = primitives::tetrahedron(1.0);
        let s = laplacian_smooth(&m, SmoothingParams { iterations: 1, lambda: 1.0 });
        let v = m.vertices();
        for i in 0..4 {
            let others: Vec3 = (0..4).filter(|&j| j != i).map(|j| v[j]).sum::<Vec3>() / 3.0;
            assert!((s.vertices()[i] - others).norm() < 1e-12);
        }
        assert!(s.barycenter().norm() < 1e-12);
        assert!(s.vertices()[0].norm() < m.vertices()[0].norm());
    }

    #[test]
    fn noisy_sphere_deviation_drops() {
        let mut m = primitives::icosphere(3, 1.0);
        let mut r = rng::seeded(7);
        let noise = Normal::new(0.0, 0.05).unwrap();
        for v in m.vertices_mut() {
            let n = noise.sample(&mut r);
            *v *= 1.0 + n;
        }
        let rms = |mesh: &TriMesh| {
            let radii: Vec<f64> = mesh.vertices().iter().map(|v| v.norm()).collect();
            let mean = radii.iter().sum::<f64>() / radii.len() as f64;
            (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / radii.len() as f64).sqrt()
        };
        let before = rms(&m);
        let after = rms(&laplacian_smooth(&m, SmoothingParams { iterations: 20, lambda: 0.5 }));
        assert!(after < before, "{after} !< {before}");
    }
}
