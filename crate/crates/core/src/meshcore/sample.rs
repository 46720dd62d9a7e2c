use rand::Rng;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};
use crate::rng;

/// A point drawn on the surface with its face and barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub point: Vec3,
    pub face: usize,
    pub bary: [f64; 3],
}

/// Draws `n` points uniformly by area. Deterministic in `seed`.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<SurfaceSample>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut cdf = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("surface sampling needs positive area".into()));
    }
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let target = r.random::<f64>() * total;
        let mut face = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
        // Skip zero-area faces that share a cdf value with the next face.
        while mesh.face_area(face) == 0.0 && face + 1 < cdf.len() {
            face += 1;
        }
        let (r1, r2): (f64, f64) = (r.random(), r.random());
        let s = r1.sqrt();
        let bary = [1.0 - s, s * (1.0 - r2), s * r2];
        let [a, b, c] = mesh.triangle(face);
        out.push(SurfaceSample { point: a * bary[0] + b * bary[1] + c * bary[2], face, bary });
    }
    Ok(out)
}
