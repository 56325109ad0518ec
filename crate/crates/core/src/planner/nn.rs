//! Exact nearest-neighbor queries over the roadmap vertices.
//!
//! Small vertex sets are scanned linearly; at [`TREE_THRESHOLD`] vertices and
//! above an incrementally built k-d tree answers the same queries. Both paths
//! return identical, index-sorted results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cspace::distance2;

/// Vertex count from which [`NeighborIndex`] switches to the tree.
pub const TREE_THRESHOLD: usize = 2_000;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct KdNode {
    point: u32,
    axis: u8,
    left: u32,
    right: u32,
}

/// Insert-only k-d tree over points stored in a flat coordinate buffer owned
/// by the caller.
#[derive(Debug, Clone, Default)]
pub struct KdTree {
    dim: usize,
    nodes: Vec<KdNode>,
}

#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    idx: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap on (distance, index): the worst kept candidate sits on top
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.idx.cmp(&other.idx))
    }
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        KdTree { dim, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point<'a>(&self, coords: &'a [f64], idx: u32) -> &'a [f64] {
        let i = idx as usize * self.dim;
        &coords[i..i + self.dim]
    }

    /// Inserts point `idx` (whose coordinates must already be in `coords`).
    pub fn insert(&mut self, coords: &[f64], idx: usize) {
        let idx = idx as u32;
        let new_node = self.nodes.len() as u32;
        if self.nodes.is_empty() {
            self.nodes.push(KdNode { point: idx, axis: 0, left: NIL, right: NIL });
            return;
        }
        let p = self.point(coords, idx).to_vec();
        let mut cur = 0u32;
        loop {
            let node = &self.nodes[cur as usize];
            let axis = node.axis as usize;
            let split = self.point(coords, node.point)[axis];
            let go_left = p[axis] < split;
            let next = if go_left { node.left } else { node.right };
            if next == NIL {
                let axis = ((axis + 1) % self.dim) as u8;
                self.nodes.push(KdNode { point: idx, axis, left: NIL, right: NIL });
                let node = &mut self.nodes[cur as usize];
                if go_left {
                    node.left = new_node;
                } else {
                    node.right = new_node;
                }
                return;
            }
            cur = next;
        }
    }

    /// All points with squared distance `<= r2` from `q`, sorted by index.
    pub fn within(&self, coords: &[f64], q: &[f64], r2: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            let p = self.point(coords, node.point);
            if distance2(p, q) <= r2 {
                out.push(node.point as usize);
            }
            let axis = node.axis as usize;
            let diff = q[axis] - p[axis];
            let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            if far != NIL && diff * diff <= r2 {
                stack.push(far);
            }
            if near != NIL {
                stack.push(near);
            }
        }
        out.sort_unstable();
    }

    /// The `k` nearest points ordered by (distance, index).
    pub fn nearest(&self, coords: &[f64], q: &[f64], k: usize, out: &mut Vec<usize>) {
        out.clear();
        if k == 0 || self.nodes.is_empty() {
            return;
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.nearest_rec(coords, 0, q, k, &mut heap);
        let mut v = heap.into_vec();
        v.sort();
        out.extend(v.into_iter().map(|c| c.idx as usize));
    }

    fn nearest_rec(&self, coords: &[f64], n: u32, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        let node = &self.nodes[n as usize];
        let p = self.point(coords, node.point);
        let cand = Candidate { d2: distance2(p, q), idx: node.point };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(cand);
        }
        let axis = node.axis as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        if near != NIL {
            self.nearest_rec(coords, near, q, k, heap);
        }
        // `<=` keeps equal-distance, lower-index candidates reachable
        if far != NIL && (heap.len() < k || diff * diff <= heap.peek().expect("non-empty").d2) {
            self.nearest_rec(coords, far, q, k, heap);
        }
    }
}

/// Linear-scan radius query; reference implementation for the tree.
pub fn brute_within(coords: &[f64], dim: usize, count: usize, q: &[f64], r2: f64, out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..count).filter(|&i| distance2(&coords[i * dim..(i + 1) * dim], q) <= r2));
}

/// Linear-scan k-nearest query ordered by (distance, index).
pub fn brute_nearest(coords: &[f64], dim: usize, count: usize, q: &[f64], k: usize, out: &mut Vec<usize>) {
    let mut all: Vec<(f64, usize)> = (0..count).map(|i| (distance2(&coords[i * dim..(i + 1) * dim], q), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out.clear();
    out.extend(all.into_iter().take(k).map(|(_, i)| i));
}

/// Brute force below the threshold, k-d tree from it on.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    tree: KdTree,
    threshold: usize,
}

impl NeighborIndex {
    pub fn new(dim: usize) -> Self {
        Self::with_threshold(dim, TREE_THRESHOLD)
    }

    pub fn with_threshold(dim: usize, threshold: usize) -> Self {
        NeighborIndex { dim, tree: KdTree::new(dim), threshold }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn insert(&mut self, coords: &[f64], idx: usize) {
        debug_assert_eq!(idx, self.tree.len());
        self.tree.insert(coords, idx);
    }

    pub fn within(&self, coords: &[f64], q: &[f64], r: f64, out: &mut Vec<usize>) {
        if self.len() < self.threshold {
            brute_within(coords, self.dim, self.len(), q, r * r, out);
        } else {
            self.tree.within(coords, q, r * r, out);
        }
    }

    pub fn nearest(&self, coords: &[f64], q: &[f64], k: usize, out: &mut Vec<usize>) {
        if self.len() < self.threshold {
            brute_nearest(coords, self.dim, self.len(), q, k, out);
        } else {
            self.tree.nearest(coords, q, k, out);
        }
    }
}
