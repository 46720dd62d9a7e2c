use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Joint, JointSet};
use crate::error::{Error, Result};
use crate::meshcore::{is_watertight, sample_surface, Aabb, MeshQuery, Vec3};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Strategy {
    Uniform = 0,
    DenseSurface = 1,
    JointSphere = 2,
}

impl Strategy {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Strategy::Uniform),
            1 => Ok(Strategy::DenseSurface),
            2 => Ok(Strategy::JointSphere),
            _ => Err(Error::Format(format!("unknown sampling strategy tag {v}"))),
        }
    }
}

/// A labeled query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupancySample {
    pub point: Vec3,
    pub inside: bool,
    pub strategy: Strategy,
}

/// Number of points drawn by each strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrategyCounts {
    pub uniform: usize,
    pub near_surface: usize,
    pub joint_sphere: usize,
}

impl StrategyCounts {
    /// 25% uniform, 50% near the surface, the rest around hands and face.
    pub fn split(total: usize) -> Self {
        let uniform = total / 4;
        let near_surface = total / 2;
        Self { uniform, near_surface, joint_sphere: total - uniform - near_surface }
    }

    /// Rounded shares for uniform and near-surface points; joint balls take
    /// the remainder.
    pub fn from_fractions(total: usize, uniform: f64, near_surface: f64) -> Self {
        let uniform = ((total as f64 * uniform).round() as usize).min(total);
        let near_surface = ((total as f64 * near_surface).round() as usize).min(total - uniform);
        Self { uniform, near_surface, joint_sphere: total - uniform - near_surface }
    }

    pub fn total(&self) -> usize {
        self.uniform + self.near_surface + self.joint_sphere
    }
}

const UNIFORM_TAG: u64 = 1;
const SURFACE_TAG: u64 = 2;
const NOISE_TAG: u64 = 3;
const JOINT_TAG: u64 = 4;

/// `k` independent uniform points in `bbox`.
pub fn sample_uniform(bbox: &Aabb, k: usize, seed: u64) -> Vec<Vec3> {
    let mut r = rng::seeded(seed);
    let e = bbox.extent();
    (0..k)
        .map(|_| {
            let u: [f64; 3] = r.random();
            bbox.min + Vec3::new(u[0] * e.x, u[1] * e.y, u[2] * e.z)
        })
        .collect()
}

/// Area-weighted surface points moved by isotropic Gaussian noise of
/// standard deviation `sigma`.
pub fn sample_near_surface(query: &MeshQuery, k: usize, sigma: f64, seed: u64) -> Result<Vec<Vec3>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("near-surface sigma must be >= 0, got {sigma}")));
    }
    let surface = sample_surface(query.mesh(), k, rng::derive_seed(seed, SURFACE_TAG))?;
    let mut r = rng::substream(seed, NOISE_TAG);
    Ok(surface
        .into_iter()
        .map(|s| {
            let n: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut r));
            s.point + Vec3::new(n[0], n[1], n[2]) * sigma
        })
        .collect())
}

/// The joints whose neighborhoods get extra samples: face and hands.
pub const DETAIL_JOINTS: [Joint; 4] = [Joint::Head, Joint::Nose, Joint::LeftWrist, Joint::RightWrist];

/// `k` points uniform over the union of balls of `radius` around the head,
/// nose and both wrists.
pub fn sample_joint_spheres(joints: &JointSet, radius: f64, k: usize, seed: u64) -> Result<Vec<Vec3>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("joint sphere radius must be > 0, got {radius}")));
    }
    let centers: Vec<Vec3> = DETAIL_JOINTS.iter().map(|&j| joints.get(j)).collect();
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let c = centers[r.random_range(0..centers.len())];
        let p = loop {
            let u = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            if u.norm_squared() <= 1.0 {
                break c + u * radius;
            }
        };
        // Accept with probability 1/coverage so overlaps are not favored.
        let coverage = centers.iter().filter(|q| (p - *q).norm() <= radius).count().max(1);
        if coverage == 1 || r.random_range(0..coverage) == 0 {
            out.push(p);
        }
    }
    Ok(out)
}

/// Rounds to the nearest `f32`, the precision points are stored in.
pub fn round_f32(p: &Vec3) -> Vec3 {
    p.map(|x| x as f32 as f64)
}

/// Draws the three point sets, rounds them to `f32` and labels each by
/// the inside test on `query`. Output order is uniform, near-surface,
/// joint-sphere.
pub fn make_training_points(
    query: &MeshQuery,
    joints: &JointSet,
    bbox: &Aabb,
    counts: StrategyCounts,
    sigma: f64,
    radius: f64,
    seed: u64,
) -> Result<Vec<OccupancySample>> {
    if !is_watertight(query.mesh()) {
        return Err(Error::InvalidMesh("occupancy labels need a watertight mesh".into()));
    }
    let mut tagged: Vec<(Vec3, Strategy)> = Vec::with_capacity(counts.total());
    tagged.extend(sample_uniform(bbox, counts.uniform, rng::derive_seed(seed, UNIFORM_TAG)).into_iter().map(|p| (p, Strategy::Uniform)));
    tagged.extend(
        sample_near_surface(query, counts.near_surface, sigma, rng::derive_seed(seed, SURFACE_TAG))?
            .into_iter()
            .map(|p| (p, Strategy::DenseSurface)),
    );
    if counts.joint_sphere > 0 {
        tagged.extend(
            sample_joint_spheres(joints, radius, counts.joint_sphere, rng::derive_seed(seed, JOINT_TAG))?
                .into_iter()
                .map(|p| (p, Strategy::JointSphere)),
        );
    }
    Ok(tagged
        .par_iter()
        .map(|&(p, strategy)| {
            let point = round_f32(&p);
            OccupancySample { point, inside: query.contains(&point), strategy }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::primitives;

    #[test]
    fn degenerate_box_gives_its_corner() {
        let b = Aabb::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0)).unwrap();
        assert!(sample_uniform(&b, 50, 1).iter().all(|p| *p == b.min));
    }

    #[test]
    fn uniform_means() {
        let b = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        let pts = sample_uniform(&b, 100_000, 9);
        let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
        for k in 0..3 {
            assert!((mean[k] - 0.5).abs() < 0.01);
        }
        assert_eq!(pts, sample_uniform(&b, 100_000, 9));
    }

    #[test]
    fn split_sums_to_total() {
        let c = StrategyCounts::split(2048);
        assert_eq!((c.uniform, c.near_surface, c.joint_sphere), (512, 1024, 512));
        assert_eq!(StrategyCounts::split(7).total(), 7);
    }

    #[test]
    fn zero_sigma_stays_on_surface() {
        let q = MeshQuery::new(primitives::icosphere(2, 1.0));
        for p in sample_near_surface(&q, 500, 0.0, 4).unwrap() {
            assert!(q.distance(&p) < 1e-9);
        }
    }

    #[test]
    fn joint_balls_reject_bad_radius() {
        let js = JointSet::from_3d([Vec3::zeros(); 17]);
        assert!(sample_joint_spheres(&js, 0.0, 10, 1).is_err());
        assert!(sample_joint_spheres(&js, 0.1, 0, 1).unwrap().is_empty());
    }
}
