//! From implicit fields to meshes.

mod displace;
mod grid;
mod mc;
#[rustfmt::skip]
pub mod mc_tables;
mod mise;
mod reconstruct;

pub use displace::apply_displacements;
pub use grid::OccupancyGrid;
pub use mc::marching_cubes;
pub use mise::{dense_grid, mise_extract, Field, FnField, MiseStats};
pub use reconstruct::{
    displace_mesh, reconstruct_detailed, reconstruct_smooth, reconstruct_smooth_with_stats, CoarseField, ExtractionParams,
};
