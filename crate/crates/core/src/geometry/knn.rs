//! Exact k-nearest-neighbor graphs over a static kd-tree.
//!
//! Neighbors are ordered by `(distance, index)`, so equidistant candidates
//! resolve to the lower point index and the graph is fully deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

/// Per-point k nearest neighbors, nearest first, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Neighbor positions of point `i`, gathered from `cloud`.
    pub fn neighbor_points(&self, cloud: &PointCloud, i: usize) -> Vec<Vec3> {
        self.neighbors(i).iter().map(|&j| cloud.point(j)).collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        self.d2.total_cmp(&o.d2).then(self.index.cmp(&o.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

/// A kd-tree over a borrowed point slice.
pub struct KdTree<'a> {
    points: &'a [Vec3],
    order: Vec<usize>,
    root: Node,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let n = order.len();
        let root = build(points, &mut order, 0, n);
        KdTree { points, order, root }
    }

    /// The `k` nearest points to `query`, skipping index `skip` if given.
    pub fn nearest(&self, query: Vec3, k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 {
            self.search(&self.root, query, k, skip, &mut heap);
        }
        let mut found = heap.into_sorted_vec();
        found.truncate(k);
        found
            .into_iter()
            .map(|c| (c.index, self.points[c.index].distance(query)))
            .collect()
    }

    fn search(
        &self,
        node: &Node,
        q: Vec3,
        k: usize,
        skip: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    if Some(idx) == skip {
                        continue;
                    }
                    let cand = Candidate { d2: self.points[idx].distance_squared(q), index: idx };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = q[*axis] - value;
                let (near, far) = if delta <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, skip, heap);
                // Equal distances must still be visited so index tie-breaks hold.
                if heap.len() < k || delta * delta <= heap.peek().unwrap().d2 {
                    self.search(far, q, k, skip, heap);
                }
            }
        }
    }
}

fn build(points: &[Vec3], order: &mut [usize], start: usize, end: usize) -> Node {
    if end - start <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let slice = &mut order[start..end];
    let (mut lo, mut hi) = (Vec3::new(f64::MAX, f64::MAX, f64::MAX), Vec3::new(f64::MIN, f64::MIN, f64::MIN));
    for &i in slice.iter() {
        let p = points[i];
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] == 0.0 {
        return Node::Leaf { start, end };
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
    });
    let value = points[slice[mid]][axis];
    // Left subtree holds coordinates <= value, right subtree >= value.
    let split = start + mid;
    Node::Split {
        axis,
        value,
        left: Box::new(build(points, order, start, split)),
        right: Box::new(build(points, order, split, end)),
    }
}

/// Exact k-nearest-neighbor graph of `cloud`.
pub fn knn(cloud: &PointCloud, k: usize) -> Result<NeighborGraph> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!(
            "neighborhood size k={k} must satisfy 1 <= k <= N-1 (N={n})"
        )));
    }
    let tree = KdTree::new(cloud.points());
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| tree.nearest(cloud.point(i), k, Some(i)))
        .collect();
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for row in rows {
        for (j, d) in row {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(NeighborGraph { k, indices, distances })
}
