#![allow(dead_code)]

use recon_core::{TriMesh, Vec3};

/// Parity of crossings along a fixed skew ray, written independently of the
/// library's geometry kernels.
pub fn ray_parity_inside(mesh: &TriMesh, p: &Vec3) -> bool {
    let dir = Vec3::new(0.5377, 0.8361, 0.1093).normalize();
    let mut crossings = 0;
    for f in mesh.faces() {
        let (a, b, c) = (mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
        let e1 = b - a;
        let e2 = c - a;
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = p - a;
        let u = s.dot(&h) / det;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&q) / det > 0.0 {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

/// Exhaustive closest distance from `p` to any triangle, by projecting onto
/// the plane and falling back to the three edges.
pub fn brute_distance(mesh: &TriMesh, p: &Vec3) -> f64 {
    let seg = |a: Vec3, b: Vec3| {
        let ab = b - a;
        let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        (a + ab * t - p).norm()
    };
    let mut best = f64::INFINITY;
    for f in mesh.faces() {
        let (a, b, c) = (mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]);
        let n = (b - a).cross(&(c - a)).normalize();
        let proj = p - n * (p - a).dot(&n);
        let inside = [(a, b), (b, c), (c, a)].iter().all(|(x, y)| (y - x).cross(&(proj - x)).dot(&n) >= 0.0);
        let d = if inside { (p - proj).norm() } else { seg(a, b).min(seg(b, c)).min(seg(c, a)) };
        best = best.min(d);
    }
    best
}
