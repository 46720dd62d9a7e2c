use super::{Bvh, TriMesh, Vec3};

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub point: Vec3,
    pub distance: f64,
    pub face: usize,
}

/// A line/triangle crossing at parameter `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineHit {
    pub t: f64,
    pub face: usize,
}

/// A mesh paired with its hierarchy. Immutable once built, so queries may
/// run from many threads at once.
#[derive(Clone, Debug)]
pub struct MeshQuery {
    mesh: TriMesh,
    bvh: Bvh,
    surface_tol: f64,
}

impl MeshQuery {
    pub fn new(mesh: TriMesh) -> Self {
        let bvh = Bvh::build(&mesh);
        let scale = mesh.bounds().map(|b| b.diagonal()).unwrap_or(1.0).max(1e-300);
        Self { mesh, bvh, surface_tol: 1e-12 * scale }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn into_mesh(self) -> TriMesh {
        self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn winding_number(&self, p: &Vec3) -> f64 {
        self.bvh.winding_number(&self.mesh, p, self.surface_tol).0
    }

    /// Inside test by generalized winding number. Points on the surface
    /// count as inside.
    pub fn contains(&self, p: &Vec3) -> bool {
        let (w, on_surface) = self.bvh.winding_number(&self.mesh, p, self.surface_tol);
        on_surface || w >= 0.5
    }

    pub fn nearest(&self, p: &Vec3) -> Option<Nearest> {
        self.bvh.nearest(&self.mesh, p).map(|(point, distance, face)| Nearest { point, distance, face })
    }

    /// Unsigned distance to the surface (`inf` for an empty mesh).
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |n| n.distance)
    }

    /// All crossings of the line `origin + t dir`, `t` in `[tmin, tmax]`,
    /// sorted by `t` then face.
    pub fn line_hits(&self, origin: &Vec3, dir: &Vec3, tmin: f64, tmax: f64) -> Vec<LineHit> {
        let mut hits = Vec::new();
        self.bvh.for_each_line_hit(&self.mesh, origin, dir, tmin, tmax, |t, face| hits.push(LineHit { t, face }));
        hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.face.cmp(&b.face)));
        hits
    }

    /// Whether the line crosses the surface anywhere in `[tmin, tmax]`.
    pub fn line_crosses(&self, origin: &Vec3, dir: &Vec3, tmin: f64, tmax: f64) -> bool {
        let mut any = false;
        self.bvh.for_each_line_hit(&self.mesh, origin, dir, tmin, tmax, |_, _| any = true);
        any
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::geometry::closest_point_on_triangle;
    use crate::meshcore::primitives;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn cube_center_inside_far_point_outside() {
        let q = MeshQuery::new(primitives::cube(Vec3::repeat(-0.5), Vec3::repeat(0.5)));
        assert!(q.contains(&Vec3::zeros()));
        assert!((q.winding_number(&Vec3::zeros()) - 1.0).abs() < 1e-12);
        assert!(!q.contains(&Vec3::new(2.0, 0.1, -3.0)));
    }

    #[test]
    fn surface_points_count_as_inside() {
        let q = MeshQuery::new(primitives::unit_cube());
        assert!(q.contains(&Vec3::new(0.3, 0.4, 0.0)));
        assert!(q.contains(&Vec3::new(1.0, 1.0, 1.0)));
    }

    #[test]
    fn vertex_query_has_zero_distance() {
        let m = primitives::icosphere(2, 1.0);
        let q = MeshQuery::new(m.clone());
        let n = q.nearest(&m.vertices()[17]).unwrap();
        assert_eq!(n.distance, 0.0);
    }

    #[test]
    fn point_above_sphere_is_one_away() {
        let q = MeshQuery::new(primitives::icosphere(4, 1.0));
        let d = q.distance(&Vec3::new(0.0, 0.0, 2.0));
        // Faceting keeps the mesh inside the sphere by at most ~1e-2 at this level.
        assert!((d - 1.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn nearest_matches_exhaustive_scan() {
        let m = primitives::icosphere(3, 1.0);
        let q = MeshQuery::new(m.clone());
        let mut r = rng::seeded(11);
        for _ in 0..200 {
            let p = Vec3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let brute = (0..m.face_count())
                .map(|f| {
                    let [a, b, c] = m.triangle(f);
                    (closest_point_on_triangle(&p, &a, &b, &c) - p).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(q.nearest(&p).unwrap().distance.to_bits(), brute.to_bits());
        }
    }

    #[test]
    fn line_hits_through_cube() {
        let q = MeshQuery::new(primitives::unit_cube());
        let hits = q.line_hits(&Vec3::new(0.3, 0.6, -1.0), &Vec3::new(0.0, 0.0, 1.0), -10.0, 10.0);
        let ts: Vec<f64> = hits.iter().map(|h| h.t).collect();
        assert_eq!(ts.len(), 2);
        assert!((ts[0] - 1.0).abs() < 1e-12 && (ts[1] - 2.0).abs() < 1e-12);
        assert!(!q.line_crosses(&Vec3::new(3.0, 3.0, 0.0), &Vec3::new(0.0, 0.0, 1.0), -10.0, 10.0));
    }
}
