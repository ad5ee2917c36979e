//! AABB tree over mesh triangles for point-to-mesh distance queries.
//!
//! Construction is a deterministic median split on the longest axis of the
//! triangle-centroid bounding box. Queries are branch-and-bound: the nearer
//! child is visited first and subtrees whose boxes lie farther than the
//! current best are pruned, which never changes the result.

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::mesh::TriMesh;

/// Default leaf capacity.
pub const DEFAULT_LEAF_CAPACITY: usize = 8;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, len: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    kind: NodeKind,
}

/// Bounding-volume hierarchy over the triangles of one mesh.
#[derive(Debug, Clone)]
pub struct AabbTree {
    nodes: Vec<Node>,
    /// Triangle indices, permuted so each leaf owns a contiguous range.
    order: Vec<u32>,
    leaf_capacity: usize,
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy)]
pub struct ClosestHit {
    pub distance: f64,
    pub point: Vec3,
    pub triangle: usize,
}

impl AabbTree {
    /// Build a tree over `mesh` with the given leaf capacity.
    pub fn build(mesh: &TriMesh, leaf_capacity: usize) -> Result<AabbTree> {
        if mesh.is_empty() {
            return Err(Error::InvalidMesh("cannot build a tree over an empty mesh".into()));
        }
        let leaf_capacity = leaf_capacity.max(1);
        let count = mesh.triangle_count();

        let mut centroids = Vec::with_capacity(count);
        let mut boxes = Vec::with_capacity(count);
        for i in 0..count {
            let [a, b, c] = mesh.triangle_vertices(i);
            centroids.push((a + b + c) / 3.0);
            let mut bb = Aabb::EMPTY;
            bb.extend(a);
            bb.extend(b);
            bb.extend(c);
            boxes.push(bb);
        }

        let mut tree = AabbTree {
            nodes: Vec::with_capacity(2 * count / leaf_capacity + 1),
            order: (0..count as u32).collect(),
            leaf_capacity,
        };
        tree.build_range(0, count, &centroids, &boxes);
        Ok(tree)
    }

    fn build_range(
        &mut self,
        start: usize,
        len: usize,
        centroids: &[Vec3],
        boxes: &[Aabb],
    ) -> usize {
        let mut bbox = Aabb::EMPTY;
        for &t in &self.order[start..start + len] {
            bbox.union(&boxes[t as usize]);
        }

        let node_index = self.nodes.len();
        if len <= self.leaf_capacity {
            self.nodes.push(Node {
                bbox,
                kind: NodeKind::Leaf { start, len },
            });
            return node_index;
        }

        let mut centroid_box = Aabb::EMPTY;
        for &t in &self.order[start..start + len] {
            centroid_box.extend(centroids[t as usize]);
        }
        let axis = centroid_box.longest_axis();
        // total order (centroid, index) keeps the split deterministic
        self.order[start..start + len].sort_unstable_by(|&a, &b| {
            let ca = centroids[a as usize].component(axis);
            let cb = centroids[b as usize].component(axis);
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        });
        let half = len / 2;

        self.nodes.push(Node {
            bbox,
            kind: NodeKind::Inner { left: 0, right: 0 },
        });
        let left = self.build_range(start, half, centroids, boxes);
        let right = self.build_range(start + half, len - half, centroids, boxes);
        self.nodes[node_index].kind = NodeKind::Inner { left, right };
        node_index
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// Root bounding box.
    pub fn bounding_box(&self) -> Aabb {
        self.nodes[0].bbox
    }

    /// Iterate (leaf bounding box, triangle indices) pairs, for invariant checks.
    pub fn leaves(&self) -> impl Iterator<Item = (Aabb, &[u32])> {
        self.nodes.iter().filter_map(move |n| match n.kind {
            NodeKind::Leaf { start, len } => Some((n.bbox, &self.order[start..start + len])),
            NodeKind::Inner { .. } => None,
        })
    }

    /// Closest point on the mesh to `p`.
    pub fn closest_point(&self, mesh: &TriMesh, p: Vec3) -> ClosestHit {
        let mut best = ClosestHit {
            distance: f64::INFINITY,
            point: Vec3::ZERO,
            triangle: usize::MAX,
        };
        let mut best_sq = f64::INFINITY;
        self.search(0, mesh, p, &mut best, &mut best_sq);
        best.distance = best_sq.sqrt();
        best
    }

    fn search(&self, node: usize, mesh: &TriMesh, p: Vec3, best: &mut ClosestHit, best_sq: &mut f64) {
        match self.nodes[node].kind {
            NodeKind::Leaf { start, len } => {
                for &t in &self.order[start..start + len] {
                    let [a, b, c] = mesh.triangle_vertices(t as usize);
                    let q = closest_point_on_triangle(p, a, b, c);
                    let d2 = (p - q).norm_squared();
                    if d2 < *best_sq {
                        *best_sq = d2;
                        best.point = q;
                        best.triangle = t as usize;
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                let dl = self.nodes[left].bbox.distance_squared(p);
                let dr = self.nodes[right].bbox.distance_squared(p);
                let (first, first_d, second, second_d) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                if first_d < *best_sq {
                    self.search(first, mesh, p, best, best_sq);
                }
                if second_d < *best_sq {
                    self.search(second, mesh, p, best, best_sq);
                }
            }
        }
    }
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Distance and closest point from `p` to one triangle.
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> (f64, Vec3) {
    let q = closest_point_on_triangle(p, a, b, c);
    ((p - q).norm(), q)
}

/// Unsigned distance from `p` to the mesh surface through the tree.
pub fn unsigned_distance(tree: &AabbTree, mesh: &TriMesh, p: Vec3) -> f64 {
    tree.closest_point(mesh, p).distance
}
