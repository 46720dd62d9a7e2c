//! Coarse-to-fine single-view reconstruction of clothed human bodies.
//!
//! The pipeline has two learned stages. A conditional occupancy network
//! predicts a deliberately smooth body shape which is extracted with an
//! octree-refined marching cubes pass. A displacement network then moves
//! every vertex of that smooth mesh along its normal to recover detail.
//!
//! Modules:
//!
//! - [`meshcore`]: triangle meshes, normals, smoothing, inside/outside and
//!   nearest-surface queries backed by a bounding-volume hierarchy.
//! - [`sampling`]: training query generation, occupancy labels, joint
//!   heatmaps and displacement targets.
//! - [`neural`]: observation encoder, conditional decoders, losses, Adam and
//!   the training loops.
//! - [`extraction`]: octree isosurface extraction, marching cubes and
//!   displacement application.
//! - [`metrics`]: volumetric IoU, Chamfer, normal consistency, P2S.
//! - [`datagen`]: procedural capsule bodies, cameras, pose normalization
//!   and on-disk datasets.
//! - [`pipeline`]: dataset-to-model glue used by the command line.

pub mod datagen;
pub mod error;
pub mod extraction;
pub mod meshcore;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use meshcore::{Aabb, TriMesh, Vec3};
