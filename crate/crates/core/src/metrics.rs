//! Mesh comparison metrics: volumetric IoU, Chamfer distance, normal
//! consistency and point-to-surface distance.
//!
//! Every estimator draws its samples from seeds that mix the caller's seed
//! with a hash of the mesh contents, so a mesh gets the same samples no
//! matter which argument position it is passed in.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::meshcore::{sample_surface, MeshQuery, TriMesh, Vec3};
use crate::rng;
use crate::sampling::sample_uniform;

/// 64-bit digest of vertex coordinates and faces.
pub fn content_hash(mesh: &TriMesh) -> u64 {
    let mut h = Sha256::new();
    h.update((mesh.vertex_count() as u64).to_le_bytes());
    for v in mesh.vertices() {
        for k in 0..3 {
            h.update(v[k].to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for &i in f {
            h.update((i as u64).to_le_bytes());
        }
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn mesh_seed(mesh: &TriMesh, seed: u64) -> u64 {
    rng::derive_seed(seed, content_hash(mesh))
}

fn require_nonempty(mesh: &TriMesh, what: &str) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::InvalidMesh(format!("{what} mesh is empty")));
    }
    Ok(())
}

/// Monte Carlo intersection over union from `n` uniform points in the union
/// of both bounding boxes.
pub fn volumetric_iou(a: &TriMesh, b: &TriMesh, n: usize, seed: u64) -> Result<f64> {
    require_nonempty(a, "first")?;
    require_nonempty(b, "second")?;
    let bbox = a.bounds().unwrap().union(&b.bounds().unwrap());
    // Order-independent combination of the two content hashes.
    let (ha, hb) = (content_hash(a), content_hash(b));
    let s = rng::derive_seed(seed, ha.min(hb) ^ hb.max(ha).rotate_left(17));
    let (qa, qb) = (MeshQuery::new(a.clone()), MeshQuery::new(b.clone()));
    let points = sample_uniform(&bbox, n, s);
    let (inter, union) = points
        .par_iter()
        .map(|p| {
            let (x, y) = (qa.contains(p), qb.contains(p));
            ((x && y) as usize, (x || y) as usize)
        })
        .reduce(|| (0, 0), |l, r| (l.0 + r.0, l.1 + r.1));
    if union == 0 {
        return Err(Error::InvalidArgument("meshes are disjoint from the sample space".into()));
    }
    Ok(inter as f64 / union as f64)
}

fn surface_points(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    Ok(sample_surface(mesh, n, mesh_seed(mesh, seed))?.into_iter().map(|s| s.point).collect())
}

/// Mean Euclidean distance from each of `from` to its nearest point in `to`.
fn mean_nearest(from: &[Vec3], to: &[Vec3]) -> f64 {
    let entries: Vec<[f64; 3]> = to.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree = ImmutableKdTree::new_from_slice(&entries).expect("nonempty point set");
    let d: Vec<f64> = from
        .par_iter()
        .map(|p| tree.query(&[p.x, p.y, p.z]).nearest_one::<SquaredEuclidean<f64>>().execute().distance.sqrt())
        .collect();
    d.iter().sum::<f64>() / d.len() as f64
}

/// Symmetric Chamfer distance between `n` surface samples of each mesh:
/// the average of both directed mean nearest-neighbor distances.
pub fn chamfer(a: &TriMesh, b: &TriMesh, n: usize, seed: u64) -> Result<f64> {
    require_nonempty(a, "first")?;
    require_nonempty(b, "second")?;
    if n == 0 {
        return Err(Error::InvalidArgument("chamfer needs at least one sample".into()));
    }
    let pa = surface_points(a, n, seed)?;
    let pb = surface_points(b, n, seed)?;
    Ok(0.5 * (mean_nearest(&pa, &pb) + mean_nearest(&pb, &pa)))
}

/// `|n_a . n_b|` for `n` points sampled on `a`, against the normal of the
/// closest face of `b`.
pub fn normal_agreement(a: &TriMesh, b: &TriMesh, n: usize, seed: u64) -> Result<Vec<f64>> {
    require_nonempty(a, "first")?;
    require_nonempty(b, "second")?;
    let qb = MeshQuery::new(b.clone());
    let samples = sample_surface(a, n, mesh_seed(a, seed))?;
    Ok(samples
        .par_iter()
        .map(|s| {
            let near = qb.nearest(&s.point).expect("nonempty mesh");
            a.face_normal(s.face).dot(&b.face_normal(near.face)).abs()
        })
        .collect())
}

/// Mean absolute normal agreement, averaged over both directions.
pub fn normal_consistency(a: &TriMesh, b: &TriMesh, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("normal consistency needs at least one sample".into()));
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(0.5 * (mean(normal_agreement(a, b, n, seed)?) + mean(normal_agreement(b, a, n, seed)?)))
}

/// Mean distance from the vertices of `pred` to the surface of `gt`. When
/// `pred` has more than `n` vertices a seeded subset of `n` is used.
pub fn point_to_surface(pred: &TriMesh, gt: &TriMesh, n: usize, seed: u64) -> Result<f64> {
    require_nonempty(pred, "predicted")?;
    require_nonempty(gt, "ground-truth")?;
    let q = MeshQuery::new(gt.clone());
    let verts = pred.vertices();
    let chosen: Vec<&Vec3> = if verts.len() > n {
        let mut r = rng::seeded(mesh_seed(pred, seed));
        let mut idx = index::sample(&mut r, verts.len(), n).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &verts[i]).collect()
    } else {
        verts.iter().collect()
    };
    if chosen.is_empty() {
        return Err(Error::InvalidArgument("point-to-surface needs at least one vertex".into()));
    }
    let d: Vec<f64> = chosen.par_iter().map(|p| q.distance(p)).collect();
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// All four metrics for one predicted/ground-truth pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou: f64,
    pub chamfer: f64,
    pub normal_consistency: f64,
    pub p2s: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MetricsReport {
    pub const KEYS: [&'static str; 6] = ["iou", "chamfer", "normal_consistency", "p2s", "n_samples", "seed"];

    pub fn evaluate(pred: &TriMesh, gt: &TriMesh, n: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            iou: volumetric_iou(pred, gt, n, seed)?,
            chamfer: chamfer(pred, gt, n, seed)?,
            normal_consistency: normal_consistency(pred, gt, n, seed)?,
            p2s: point_to_surface(pred, gt, n, seed)?,
            n_samples: n,
            seed,
        })
    }

    /// `key = value` lines in [`Self::KEYS`] order.
    pub fn to_key_value(&self) -> String {
        format!(
            "iou = {}\nchamfer = {}\nnormal_consistency = {}\np2s = {}\nn_samples = {}\nseed = {}\n",
            self.iou, self.chamfer, self.normal_consistency, self.p2s, self.n_samples, self.seed
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("metrics report: {e}")))
    }
}
