use std::io::Write;

use crate::error::{Error, Result};
use crate::meshcore::{Aabb, Vec3};

/// Scalar samples on the nodes of a regular grid over `bbox`.
///
/// `res` counts cells per axis; there are `res + 1` nodes per axis and node
/// `(i, j, k)` lives at `values[(k * (ny) + j) * nx + i]` with `n* = res + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    res: [usize; 3],
    bbox: Aabb,
    values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(res: [usize; 3], bbox: Aabb, values: Vec<f64>) -> Result<Self> {
        if res.contains(&0) {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let expected = res.iter().map(|r| r + 1).product::<usize>();
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!("{} grid values, expected {expected}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at node {i}")));
        }
        Ok(Self { res, bbox, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(res: [usize; 3], bbox: Aabb, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let dims = res.map(|r| r + 1);
        let mut values = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(&node_position(&bbox, res, [i, j, k])));
                }
            }
        }
        Self::new(res, bbox, values)
    }

    pub fn res(&self) -> [usize; 3] {
        self.res
    }

    pub fn dims(&self) -> [usize; 3] {
        self.res.map(|r| r + 1)
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dims();
        (k * d[1] + j) * d[0] + i
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        node_position(&self.bbox, self.res, [i, j, k])
    }

    pub fn cell_size(&self) -> Vec3 {
        let e = self.bbox.extent();
        Vec3::new(e.x / self.res[0] as f64, e.y / self.res[1] as f64, e.z / self.res[2] as f64)
    }

    /// Debug dump: three little-endian `u32` node counts, six `f32` bbox
    /// bounds (min then max), then one `f32` per node in storage order.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        for d in self.dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for c in self.bbox.min.iter().chain(self.bbox.max.iter()) {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

pub(crate) fn node_position(bbox: &Aabb, res: [usize; 3], idx: [usize; 3]) -> Vec3 {
    let e = bbox.extent();
    Vec3::new(
        bbox.min.x + e.x * idx[0] as f64 / res[0] as f64,
        bbox.min.y + e.y * idx[1] as f64 / res[1] as f64,
        bbox.min.z + e.z * idx[2] as f64 / res[2] as f64,
    )
}
