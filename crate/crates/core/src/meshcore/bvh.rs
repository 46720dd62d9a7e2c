//! Bounding-volume hierarchy over mesh triangles.
//!
//! Besides the usual boxes, every node keeps the open boundary of the
//! triangles below it. For a query point outside a node's box the winding
//! number of that patch equals the winding number of the fan that closes its
//! boundary from the box center, which is exact and usually much cheaper
//! than visiting the triangles.

use std::collections::HashSet;

use super::geometry::solid_angle;
use super::{Aabb, TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    bbox: Aabb,
    /// Leaf: range into `order`. Inner: `count == 0`, children in `left`, `right`.
    start: usize,
    count: usize,
    left: usize,
    right: usize,
    /// Triangles below this node.
    size: usize,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

/// Boundary fan used by the far-field winding evaluation.
#[derive(Clone, Debug, Default)]
struct Cap {
    center: Vec3,
    edges: Vec<(usize, usize)>,
    usable: bool,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    caps: Vec<Cap>,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Self {
        let nf = mesh.face_count();
        let mut order: Vec<usize> = (0..nf).collect();
        let centroids: Vec<Vec3> = (0..nf)
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                (a + b + c) / 3.0
            })
            .collect();
        let boxes: Vec<Aabb> = (0..nf)
            .map(|f| Aabb::from_points(mesh.triangle(f).iter()).expect("three points"))
            .collect();
        let mut nodes = Vec::with_capacity(2 * nf / LEAF_SIZE + 1);
        if nf > 0 {
            build_node(&mut nodes, &mut order, &centroids, &boxes, 0, nf);
        }
        let caps = build_caps(mesh, &nodes, &order);
        Self { nodes, order, caps }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.bbox)
    }

    /// Generalized winding number of `p`. The second value reports whether
    /// `p` lies on a triangle within `on_surface_tol`.
    pub fn winding_number(&self, mesh: &TriMesh, p: &Vec3, on_surface_tol: f64) -> (f64, bool) {
        if self.nodes.is_empty() {
            return (0.0, false);
        }
        let verts = mesh.vertices();
        let tol2 = on_surface_tol * on_surface_tol;
        let mut total = 0.0;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let inside_box = node.bbox.distance_squared(p) <= tol2;
            let cap = &self.caps[ni];
            if !inside_box && cap.usable {
                for &(a, b) in &cap.edges {
                    total += solid_angle(p, &cap.center, &verts[a], &verts[b]);
                }
                continue;
            }
            if node.is_leaf() {
                for &f in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = mesh.faces()[f];
                    let (va, vb, vc) = (&verts[a], &verts[b], &verts[c]);
                    if inside_box {
                        let q = super::geometry::closest_point_on_triangle(p, va, vb, vc);
                        if (q - p).norm_squared() <= tol2 {
                            return (0.5, true);
                        }
                    }
                    total += solid_angle(p, va, vb, vc);
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
        (total / (4.0 * std::f64::consts::PI), false)
    }

    /// Exact closest point over all triangles: `(point, distance, face)`.
    pub fn nearest(&self, mesh: &TriMesh, p: &Vec3) -> Option<(Vec3, f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let verts = mesh.vertices();
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(Vec3, usize)> = None;
        let mut stack = vec![(0usize, self.nodes[0].bbox.distance_squared(p))];
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            let node = &self.nodes[ni];
            if node.is_leaf() {
                for &f in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = mesh.faces()[f];
                    let q = super::geometry::closest_point_on_triangle(p, &verts[a], &verts[b], &verts[c]);
                    let dq = (q - p).norm_squared();
                    // Ties resolve to the lowest face index so the answer does
                    // not depend on traversal order.
                    if dq < best_d2 || (dq == best_d2 && best.is_some_and(|(_, bf)| f < bf)) {
                        best_d2 = dq;
                        best = Some((q, f));
                    }
                }
            } else {
                let dl = self.nodes[node.left].bbox.distance_squared(p);
                let dr = self.nodes[node.right].bbox.distance_squared(p);
                // Push the farther child first so the nearer one is popped next.
                if dl <= dr {
                    stack.push((node.right, dr));
                    stack.push((node.left, dl));
                } else {
                    stack.push((node.left, dl));
                    stack.push((node.right, dr));
                }
            }
        }
        best.map(|(q, f)| {
            let d = (q - p).norm();
            (q, d, f)
        })
    }

    /// Visits every triangle crossed by the line `origin + t dir` with
    /// `t` in `[tmin, tmax]`.
    pub fn for_each_line_hit(
        &self,
        mesh: &TriMesh,
        origin: &Vec3,
        dir: &Vec3,
        tmin: f64,
        tmax: f64,
        mut visit: impl FnMut(f64, usize),
    ) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = dir.map(|d| 1.0 / d);
        let verts = mesh.vertices();
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox.padded(1e-12 * (1.0 + node.bbox.diagonal())).clip_line(origin, &inv, tmin, tmax).is_none() {
                continue;
            }
            if node.is_leaf() {
                for &f in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = mesh.faces()[f];
                    if let Some(t) = super::geometry::intersect_line_triangle(origin, dir, &verts[a], &verts[b], &verts[c]) {
                        if t >= tmin && t <= tmax {
                            visit(t, f);
                        }
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
    }

}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    centroids: &[Vec3],
    boxes: &[Aabb],
    start: usize,
    end: usize,
) -> usize {
    let slice = &mut order[start..end];
    let mut bbox = boxes[slice[0]];
    for &f in slice.iter() {
        bbox = bbox.union(&boxes[f]);
    }
    let idx = nodes.len();
    let count = end - start;
    nodes.push(Node { bbox, start, count, left: 0, right: 0, size: count });
    if count <= LEAF_SIZE {
        return idx;
    }
    let cb = Aabb::from_points(slice.iter().map(|&f| &centroids[f])).expect("nonempty");
    let axis = cb.longest_axis();
    if cb.extent()[axis] == 0.0 {
        return idx;
    }
    let mid = count / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    let left = build_node(nodes, order, centroids, boxes, start, start + mid);
    let right = build_node(nodes, order, centroids, boxes, start + mid, end);
    let node = &mut nodes[idx];
    node.count = 0;
    node.left = left;
    node.right = right;
    idx
}

fn build_caps(mesh: &TriMesh, nodes: &[Node], order: &[usize]) -> Vec<Cap> {
    let mut caps = vec![Cap::default(); nodes.len()];
    // Children always follow their parent, so a reverse sweep is bottom-up.
    for ni in (0..nodes.len()).rev() {
        let node = &nodes[ni];
        let mut open: HashSet<(usize, usize)> = HashSet::new();
        let toggle = |a: usize, b: usize, open: &mut HashSet<(usize, usize)>| {
            if !open.remove(&(b, a)) {
                open.insert((a, b));
            }
        };
        if node.is_leaf() {
            for &f in &order[node.start..node.start + node.count] {
                let face = mesh.faces()[f];
                for k in 0..3 {
                    toggle(face[k], face[(k + 1) % 3], &mut open);
                }
            }
        } else {
            for child in [node.left, node.right] {
                for &(a, b) in &caps[child].edges {
                    toggle(a, b, &mut open);
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = open.into_iter().collect();
        edges.sort_unstable();
        let usable = edges.len() < node.size;
        caps[ni] = Cap { center: node.bbox.center(), edges, usable };
    }
    // Children's edge lists are only needed while building their parents.
    for cap in &mut caps {
        if !cap.usable {
            cap.edges = Vec::new();
        }
    }
    caps
}
