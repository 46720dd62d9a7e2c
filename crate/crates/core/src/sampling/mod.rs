//! Training queries, occupancy labels, joint heatmaps and displacement
//! targets, plus the on-disk formats of a dataset item.

mod displacement;
mod heatmap;
pub mod io;
mod joints;
mod points;

pub use displacement::displacement_ground_truth;
pub use heatmap::{render_heatmaps, Heatmaps};
pub use joints::{Joint, JointSet, JOINT_COUNT, JOINT_NAMES};
pub use points::{
    make_training_points, sample_joint_spheres, sample_near_surface, sample_uniform, OccupancySample,
    Strategy, StrategyCounts,
};
