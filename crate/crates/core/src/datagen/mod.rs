//! Procedural capsule bodies standing in for scanned people: posed
//! skeletons, clothed meshes, orthographic views, pose normalization and
//! on-disk datasets.

mod body;
mod camera;
mod dataset;
mod normalize;
mod poses;

pub use body::{
    body_field, generate_body, generate_body_with_cell, pose_skeleton, ArmPose, BodySpec, Capsule, FoldNoise, LegPose,
    Lengths, Pose, Radii, Skeleton, BODY_CELL, SEPARATION_TOLERANCE,
};
pub use camera::{project_joints, Camera};
pub use dataset::{
    build_dataset, canonical_bbox, generate_item, item_name, read_item, write_item, Dataset, DatasetConfig,
    DatasetItem, ManifestEntry, Split, MANIFEST,
};
pub use normalize::{canonical_frame, normalize_pose, Similarity};
pub use poses::{sample_body, sample_pose, PoseFamily};
