//! Glue between on-disk datasets and the networks: training examples,
//! displacement targets and per-item evaluation.

use rayon::prelude::*;

use crate::datagen::{Dataset, DatasetItem, Split};
use crate::error::{Error, Result};
use crate::extraction::{reconstruct_smooth, ExtractionParams};
use crate::meshcore::{MeshQuery, TriMesh};
use crate::neural::{CoarseExample, CoarseModel, DispExample, Observation};
use crate::sampling::displacement_ground_truth;

/// Displacement targets are clamped to this fraction of the smooth mesh's
/// bounding-box diagonal.
pub const CLAMP_FRACTION: f64 = 0.1;

pub fn observation(item: &DatasetItem) -> Result<Observation> {
    Observation::new(item.silhouette.clone(), item.heatmaps.clone(), Some(item.joints.joints2d))
}

fn load_all(ds: &Dataset, split: Split) -> Result<Vec<(usize, DatasetItem)>> {
    ds.indices(split).into_par_iter().map(|i| Ok((i, ds.load(i)?))).collect()
}

pub fn coarse_examples(ds: &Dataset, split: Split) -> Result<Vec<CoarseExample>> {
    load_all(ds, split)?
        .into_iter()
        .map(|(_, item)| Ok(CoarseExample { obs: observation(&item)?, samples: item.samples }))
        .collect()
}

/// Where the meshes the displacement network learns to correct come from.
#[derive(Clone, Copy, Debug)]
pub enum DispSource<'a> {
    /// The stored Laplacian-smoothed ground truth.
    PseudoGroundTruth,
    /// Coarse reconstructions, matching what the network sees at inference.
    Reconstruction(&'a CoarseModel, &'a ExtractionParams),
}

/// Per-vertex targets from `smooth` (with normals) to the detailed mesh.
pub fn disp_example(obs: Observation, smooth: &TriMesh, detailed: &TriMesh) -> Result<DispExample> {
    let clamp = CLAMP_FRACTION * smooth.bounds().ok_or_else(|| Error::InvalidMesh("empty smooth mesh".into()))?.diagonal();
    let targets = displacement_ground_truth(smooth, &MeshQuery::new(detailed.clone()), clamp)?;
    let normals = smooth.normals().ok_or_else(|| Error::InvalidArgument("smooth mesh has no normals".into()))?.to_vec();
    Ok(DispExample { obs, points: smooth.vertices().to_vec(), normals, targets })
}

pub fn disp_examples(ds: &Dataset, split: Split, source: DispSource) -> Result<Vec<DispExample>> {
    let items = load_all(ds, split)?;
    let build = |(index, item): &(usize, DatasetItem)| -> Result<DispExample> {
        let obs = observation(item)?;
        let smooth = match source {
            DispSource::PseudoGroundTruth => item.smooth.clone().with_normals()?,
            DispSource::Reconstruction(model, params) => reconstruct_smooth(model, &obs, params)?,
        };
        disp_example(obs, &smooth, &item.mesh).map_err(|e| Error::Item { index: *index, source: Box::new(e) })
    };
    match source {
        // Reconstruction already parallelizes inside each item.
        DispSource::Reconstruction(..) => items.iter().map(build).collect(),
        DispSource::PseudoGroundTruth => items.par_iter().map(build).collect(),
    }
}
