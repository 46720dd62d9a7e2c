//! Octree-style multi-resolution evaluation of an occupancy field.
//!
//! The field is sampled on a coarse lattice first. Cells whose corners
//! disagree about occupancy, together with their immediate neighbors, are
//! split in half along every axis and the new nodes evaluated. This repeats
//! until the final resolution. Nodes never evaluated are filled from the
//! surrounding coarser nodes by midpoint averaging, which cannot change their
//! side of the threshold.

use rayon::prelude::*;

use super::grid::node_position;
use super::OccupancyGrid;
use crate::error::{Error, Result};
use crate::meshcore::{Aabb, Vec3};

/// Batched occupancy field: one probability per query point, independent of
/// batch composition and order.
pub trait Field: Sync {
    fn eval(&self, points: &[Vec3]) -> Vec<f64>;
}

/// Wraps a per-point closure as a [`Field`].
pub struct FnField<F>(pub F);

impl<F: Fn(&Vec3) -> f64 + Sync> Field for FnField<F> {
    fn eval(&self, points: &[Vec3]) -> Vec<f64> {
        points.iter().map(&self.0).collect()
    }
}

const CHUNK: usize = 4096;

fn eval_checked(field: &dyn Field, points: &[Vec3]) -> Result<Vec<f64>> {
    let values: Vec<f64> = points.par_chunks(CHUNK).flat_map_iter(|c| field.eval(c)).collect();
    if values.len() != points.len() {
        return Err(Error::DimensionMismatch(format!(
            "field returned {} values for {} points",
            values.len(),
            points.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("field value at {:?}", points[i])));
    }
    Ok(values)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MiseStats {
    /// Field evaluations performed.
    pub evaluations: usize,
    /// Refinement levels below the initial lattice.
    pub levels: usize,
}

/// Evaluates `field` at every node of a `res^3` grid.
pub fn dense_grid(field: &dyn Field, bbox: Aabb, res: usize) -> Result<OccupancyGrid> {
    let n = res + 1;
    let mut points = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                points.push(node_position(&bbox, [res; 3], [i, j, k]));
            }
        }
    }
    OccupancyGrid::new([res; 3], bbox, eval_checked(field, &points)?)
}

/// Multi-resolution extraction from `initial_res` to `final_res` (powers of
/// two, `initial_res <= final_res`), classifying nodes against `tau`.
pub fn mise_extract(
    field: &dyn Field,
    bbox: Aabb,
    initial_res: usize,
    final_res: usize,
    tau: f64,
) -> Result<(OccupancyGrid, MiseStats)> {
    if !initial_res.is_power_of_two() || !final_res.is_power_of_two() || initial_res > final_res {
        return Err(Error::InvalidArgument(format!(
            "resolutions must be powers of two with initial <= final (got {initial_res}, {final_res})"
        )));
    }
    let n = final_res + 1;
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    let mut values = vec![f64::NAN; n * n * n];
    let mut known = vec![false; n * n * n];
    let mut stats = MiseStats::default();

    let mut evaluate = |nodes: &[[usize; 3]], values: &mut [f64], known: &mut [bool]| -> Result<()> {
        let points: Vec<Vec3> = nodes.iter().map(|&c| node_position(&bbox, [final_res; 3], c)).collect();
        let vals = eval_checked(field, &points)?;
        for (c, v) in nodes.iter().zip(vals) {
            let id = idx(c[0], c[1], c[2]);
            values[id] = v;
            known[id] = true;
        }
        stats.evaluations += nodes.len();
        Ok(())
    };

    let step0 = final_res / initial_res;
    let mut nodes = Vec::new();
    for k in (0..n).step_by(step0) {
        for j in (0..n).step_by(step0) {
            for i in (0..n).step_by(step0) {
                nodes.push([i, j, k]);
            }
        }
    }
    evaluate(&nodes, &mut values, &mut known)?;

    // Candidate cells at the current step, by their minimum corner.
    let mut candidates: Vec<[usize; 3]> = Vec::new();
    for k in (0..final_res).step_by(step0) {
        for j in (0..final_res).step_by(step0) {
            for i in (0..final_res).step_by(step0) {
                candidates.push([i, j, k]);
            }
        }
    }
    let mut step = step0;
    while step > 1 {
        stats.levels += 1;
        let cells_per_axis = final_res / step;
        let cell_id = |c: [usize; 3]| ((c[2] / step) * cells_per_axis + c[1] / step) * cells_per_axis + c[0] / step;
        let mut split = vec![false; cells_per_axis.pow(3)];
        for &c in &candidates {
            let mut any_in = false;
            let mut any_out = false;
            for dk in [0, step] {
                for dj in [0, step] {
                    for di in [0, step] {
                        if values[idx(c[0] + di, c[1] + dj, c[2] + dk)] >= tau {
                            any_in = true;
                        } else {
                            any_out = true;
                        }
                    }
                }
            }
            if any_in && any_out {
                // Mark the cell and its 26 neighbors.
                for dk in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            let nb = [c[0] as i64 + di * step as i64, c[1] as i64 + dj * step as i64, c[2] as i64 + dk * step as i64];
                            if nb.iter().all(|&x| x >= 0 && (x as usize) < final_res) {
                                split[cell_id(nb.map(|x| x as usize))] = true;
                            }
                        }
                    }
                }
            }
        }
        let half = step / 2;
        let mut to_eval = Vec::new();
        let mut next = Vec::new();
        for cz in 0..cells_per_axis {
            for cy in 0..cells_per_axis {
                for cx in 0..cells_per_axis {
                    if !split[(cz * cells_per_axis + cy) * cells_per_axis + cx] {
                        continue;
                    }
                    let base = [cx * step, cy * step, cz * step];
                    for dk in [0, half, step] {
                        for dj in [0, half, step] {
                            for di in [0, half, step] {
                                let c = [base[0] + di, base[1] + dj, base[2] + dk];
                                let id = idx(c[0], c[1], c[2]);
                                if !known[id] {
                                    // Claim now so shared nodes are queued once.
                                    known[id] = true;
                                    to_eval.push(c);
                                }
                            }
                        }
                    }
                    for dk in [0, half] {
                        for dj in [0, half] {
                            for di in [0, half] {
                                next.push([base[0] + di, base[1] + dj, base[2] + dk]);
                            }
                        }
                    }
                }
            }
        }
        evaluate(&to_eval, &mut values, &mut known)?;
        candidates = next;
        step = half;
    }

    // Fill the rest coarse to fine by averaging the enclosing coarser nodes.
    let mut s = step0;
    while s > 1 {
        let h = s / 2;
        for k in (0..n).step_by(h) {
            for j in (0..n).step_by(h) {
                for i in (0..n).step_by(h) {
                    let id = idx(i, j, k);
                    if known[id] {
                        continue;
                    }
                    let opts = |x: usize| if x.is_multiple_of(s) { [x, x] } else { [x - h, x + h] };
                    let (oi, oj, ok) = (opts(i), opts(j), opts(k));
                    let mut sum = 0.0;
                    for &kk in &ok {
                        for &jj in &oj {
                            for &ii in &oi {
                                sum += values[idx(ii, jj, kk)];
                            }
                        }
                    }
                    values[id] = sum / 8.0;
                    known[id] = true;
                }
            }
        }
        s = h;
    }
    debug_assert!(known.iter().all(|&k| k));
    Ok((OccupancyGrid::new([final_res; 3], bbox, values)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(r: f64) -> impl Fn(&Vec3) -> f64 + Sync {
        move |p: &Vec3| if (p - Vec3::repeat(0.5)).norm() <= r { 1.0 } else { 0.0 }
    }

    #[test]
    fn constant_field_needs_only_the_initial_lattice() {
        let bbox = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        let (grid, stats) = mise_extract(&FnField(|_: &Vec3| 1.0), bbox, 8, 64, 0.5).unwrap();
        assert_eq!(stats.evaluations, 9 * 9 * 9);
        assert!(grid.values().iter().all(|&v| v >= 0.5));
    }

    #[test]
    fn matches_dense_classification_on_sphere() {
        let bbox = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        let field = FnField(sphere(0.3));
        let (grid, stats) = mise_extract(&field, bbox, 8, 32, 0.5).unwrap();
        let dense = dense_grid(&field, bbox, 32).unwrap();
        for (a, b) in grid.values().iter().zip(dense.values()) {
            assert_eq!(*a >= 0.5, *b >= 0.5);
        }
        assert!(stats.evaluations < 33 * 33 * 33);
    }

    #[test]
    fn rejects_bad_resolutions() {
        let bbox = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        let f = FnField(|_: &Vec3| 0.0);
        assert!(mise_extract(&f, bbox, 12, 64, 0.5).is_err());
        assert!(mise_extract(&f, bbox, 64, 32, 0.5).is_err());
    }

    #[test]
    fn non_finite_field_aborts() {
        let bbox = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).unwrap();
        let f = FnField(|p: &Vec3| if p.x > 0.5 { f64::NAN } else { 0.0 });
        assert!(matches!(mise_extract(&f, bbox, 4, 8, 0.5), Err(Error::NonFinite(_))));
    }
}
