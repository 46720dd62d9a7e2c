use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meshcore::{MeshQuery, TriMesh};

/// Signed offset of each smooth-mesh vertex along its normal to the ground
/// truth surface, positive outward.
///
/// The normal line through the vertex is intersected with `gt` within
/// `[-clamp, clamp]` and the crossing closest to the vertex wins. Without a
/// crossing in range, the offset to the nearest ground-truth point is
/// projected onto the normal and clamped.
pub fn displacement_ground_truth(smooth: &TriMesh, gt: &MeshQuery, clamp: f64) -> Result<Vec<f64>> {
    if !(clamp > 0.0) {
        return Err(Error::InvalidArgument(format!("displacement clamp must be > 0, got {clamp}")));
    }
    let normals = smooth
        .normals()
        .ok_or_else(|| Error::InvalidArgument("smooth mesh has no vertex normals".into()))?;
    if gt.mesh().is_empty() {
        return Err(Error::InvalidMesh("ground-truth mesh is empty".into()));
    }
    Ok(smooth
        .vertices()
        .par_iter()
        .zip(normals.par_iter())
        .map(|(v, n)| {
            let hits = gt.line_hits(v, n, -clamp, clamp);
            match hits.iter().min_by(|a, b| a.t.abs().total_cmp(&b.t.abs()).then(a.t.total_cmp(&b.t))) {
                Some(h) => h.t.clamp(-clamp, clamp),
                None => {
                    let near = gt.nearest(v).expect("nonempty mesh");
                    (near.point - v).dot(n).clamp(-clamp, clamp)
                }
            }
        })
        .collect())
}
