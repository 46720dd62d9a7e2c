//! Inference: observation to smooth mesh, and smooth mesh to detailed mesh.

use super::{apply_displacements, marching_cubes, mise_extract, Field, MiseStats};
use crate::datagen::canonical_bbox;
use crate::error::{Error, Result};
use crate::meshcore::{Aabb, TriMesh, Vec3};
use crate::neural::{CoarseModel, DispModel, Observation};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionParams {
    /// Occupancy threshold; nodes with probability `>= tau` are inside.
    pub tau: f64,
    pub initial_res: usize,
    pub final_res: usize,
    pub bbox: Aabb,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self { tau: 0.96, initial_res: 32, final_res: 128, bbox: canonical_bbox() }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }
}

/// Coarse model occupancy for one observation feature and latent code.
pub struct CoarseField<'a> {
    pub model: &'a CoarseModel,
    pub feature: Vec<f64>,
    pub z: Vec<f64>,
}

impl Field for CoarseField<'_> {
    fn eval(&self, points: &[Vec3]) -> Vec<f64> {
        self.model.occupancy(&self.feature, &self.z, points).expect("feature and latent sizes checked on construction")
    }
}

impl<'a> CoarseField<'a> {
    /// Field at the prior mean `z = 0`.
    pub fn new(model: &'a CoarseModel, obs: &Observation) -> Result<Self> {
        let feature = model.encode(obs)?;
        Ok(Self { model, feature, z: vec![0.0; model.dims().latent] })
    }
}

/// Smooth mesh with vertex normals, extracted at `z = 0`.
pub fn reconstruct_smooth(model: &CoarseModel, obs: &Observation, params: &ExtractionParams) -> Result<TriMesh> {
    Ok(reconstruct_smooth_with_stats(model, obs, params)?.0)
}

pub fn reconstruct_smooth_with_stats(
    model: &CoarseModel,
    obs: &Observation,
    params: &ExtractionParams,
) -> Result<(TriMesh, MiseStats)> {
    params.validate()?;
    let field = CoarseField::new(model, obs)?;
    let (grid, stats) = mise_extract(&field, params.bbox, params.initial_res, params.final_res, params.tau)?;
    let mesh = marching_cubes(&grid, params.tau)?.with_normals()?;
    Ok((mesh, stats))
}

/// Predicted displacement for every vertex of `smooth`, applied along its
/// normals. Faces are unchanged.
pub fn displace_mesh(model: &DispModel, obs: &Observation, smooth: &TriMesh) -> Result<TriMesh> {
    let normals = smooth.normals().ok_or_else(|| Error::InvalidArgument("smooth mesh has no vertex normals".into()))?;
    let feature = model.encode(obs)?;
    let d = model.displacement(&feature, smooth.vertices(), normals)?;
    apply_displacements(smooth, &d)
}

pub fn reconstruct_detailed(
    coarse: &CoarseModel,
    disp: &DispModel,
    obs: &Observation,
    params: &ExtractionParams,
) -> Result<TriMesh> {
    let smooth = reconstruct_smooth(coarse, obs, params)?;
    displace_mesh(disp, obs, &smooth)
}
