use std::collections::HashMap;

use super::mc_tables::{CORNERS, EDGES, EDGE_TABLE, TRI_TABLE};
use super::OccupancyGrid;
use crate::error::{Error, Result};
use crate::meshcore::{TriMesh, Vec3};

/// Marching cubes over `grid` at threshold `tau`; nodes with value `>= tau`
/// are inside.
///
/// The grid is surrounded by a virtual layer of empty nodes (value 0, or
/// `tau - 1` when `tau <= 0`), so a surface touching the bounding box is
/// closed one cell outside it. Crossing
/// positions are interpolated linearly in value along each grid edge and
/// shared between neighboring cells, which makes the output watertight.
///
/// A grid whose nodes all fall on one side of `tau` has no isosurface.
pub fn marching_cubes(grid: &OccupancyGrid, tau: f64) -> Result<TriMesh> {
    let any_in = grid.values().iter().any(|&v| v >= tau);
    let any_out = grid.values().iter().any(|&v| v < tau);
    if !(any_in && any_out) {
        return Err(Error::NoIsosurface(tau));
    }
    let [rx, ry, rz] = grid.res();
    let [nx, ny, nz] = grid.dims();
    let cell = grid.cell_size();
    let origin = grid.bbox().min;
    let empty = if tau > 0.0 { 0.0 } else { tau - 1.0 };
    // Node coordinates are shifted by one so the padding layer sits at 0.
    let value = |i: usize, j: usize, k: usize| -> f64 {
        if i == 0 || j == 0 || k == 0 || i > nx || j > ny || k > nz {
            empty
        } else {
            grid.value(i - 1, j - 1, k - 1)
        }
    };
    let position = |i: usize, j: usize, k: usize| -> Vec3 {
        Vec3::new(
            origin.x + (i as f64 - 1.0) * cell.x,
            origin.y + (j as f64 - 1.0) * cell.y,
            origin.z + (k as f64 - 1.0) * cell.z,
        )
    };

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();

    let (px, py, pz) = (rx + 2, ry + 2, rz + 2);
    for k in 0..pz {
        for j in 0..py {
            for i in 0..px {
                let mut corner_val = [0.0; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    let v = value(i + off[0], j + off[1], k + off[2]);
                    corner_val[c] = v;
                    if v >= tau {
                        case |= 1 << c;
                    }
                }
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for (e, [a, b]) in EDGES.iter().enumerate() {
                    if EDGE_TABLE[case] & (1 << e) == 0 {
                        continue;
                    }
                    let (oa, ob) = (CORNERS[*a], CORNERS[*b]);
                    // Canonical direction: from the lower node to the upper one.
                    let (lo, hi, vlo, vhi) = if oa <= ob {
                        (oa, ob, corner_val[*a], corner_val[*b])
                    } else {
                        (ob, oa, corner_val[*b], corner_val[*a])
                    };
                    let axis = (0..3).find(|&d| lo[d] != hi[d]).expect("edge spans one axis");
                    let key = (i + lo[0], j + lo[1], k + lo[2], axis);
                    local[e] = *edge_vertex.entry(key).or_insert_with(|| {
                        let t = (tau - vlo) / (vhi - vlo);
                        let p0 = position(key.0, key.1, key.2);
                        let mut p1 = p0;
                        p1[axis] += cell[axis];
                        vertices.push(p0 + (p1 - p0) * t);
                        vertices.len() - 1
                    });
                }
                for tri in TRI_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    faces.push([local[tri[0] as usize], local[tri[1] as usize], local[tri[2] as usize]]);
                }
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::NoIsosurface(tau));
    }
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::{is_watertight, Aabb};

    fn sphere_grid(res: usize, r: f64) -> OccupancyGrid {
        let bbox = Aabb::cube(Vec3::zeros(), 0.5);
        OccupancyGrid::from_fn([res; 3], bbox, |p| 1.0 / (1.0 + (-40.0 * (r - p.norm())).exp())).unwrap()
    }

    #[test]
    fn sphere_is_closed_and_round() {
        let grid = sphere_grid(32, 0.3);
        let m = marching_cubes(&grid, 0.5).unwrap();
        assert!(is_watertight(&m));
        let cell = grid.cell_size().x;
        let err = m.vertices().iter().map(|v| (v.norm() - 0.3).abs()).fold(0.0, f64::max);
        assert!(err < 1.5 * cell, "{err}");
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn every_single_corner_case_closes() {
        // Random binary grids exercise the ambiguous cases.
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let vals: Vec<f64> = (0..9 * 9 * 9).map(|_| next()).collect();
        let grid = OccupancyGrid::new([8; 3], Aabb::cube(Vec3::zeros(), 1.0), vals).unwrap();
        let m = marching_cubes(&grid, 0.5).unwrap();
        assert!(is_watertight(&m));
    }

    #[test]
    fn half_space_touching_boundary_is_closed() {
        let grid = OccupancyGrid::from_fn([6; 3], Aabb::cube(Vec3::zeros(), 1.0), |p| if p.x < 0.1 { 1.0 } else { 0.0 }).unwrap();
        let m = marching_cubes(&grid, 0.5).unwrap();
        assert!(is_watertight(&m));
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn one_sided_grids_have_no_surface() {
        for v in [0.2, 1.0] {
            let grid = OccupancyGrid::from_fn([4; 3], Aabb::cube(Vec3::zeros(), 1.0), |_| v).unwrap();
            assert!(matches!(marching_cubes(&grid, 0.5), Err(Error::NoIsosurface(_))));
        }
    }

    #[test]
    fn signed_distance_at_zero_threshold_is_not_boxed() {
        // Negated distance to a sphere: positive inside, threshold 0.
        let grid = OccupancyGrid::from_fn([24; 3], Aabb::cube(Vec3::zeros(), 1.0), |p| 0.6 - p.norm()).unwrap();
        let m = marching_cubes(&grid, 0.0).unwrap();
        assert!(is_watertight(&m));
        let area = m.surface_area();
        let expected = 4.0 * std::f64::consts::PI * 0.36;
        assert!((area - expected).abs() / expected < 0.05, "{area}");
    }
}
