//! Triangle meshes and the geometry kernels built on them.

mod bvh;
pub mod geometry;
mod mesh;
mod normals;
pub mod obj;
pub mod primitives;
mod query;
mod sample;
mod smooth;
mod topology;

pub use bvh::Bvh;
pub use mesh::{Aabb, TriMesh, Vec3};
pub use normals::compute_vertex_normals;
pub use query::{LineHit, MeshQuery, Nearest};
pub use sample::{sample_surface, SurfaceSample};
pub use smooth::{laplacian_smooth, SmoothingParams};
pub use topology::{edge_valences, is_watertight};
