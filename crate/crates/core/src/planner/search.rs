//! Dijkstra over non-negative weights with deterministic tie-breaking: among
//! equal-cost predecessors the lowest vertex index wins, and equal-cost heap
//! entries pop in index order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub const NO_PRED: usize = usize::MAX;

/// Shortest-path tree from `source`.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<usize>,
}

impl ShortestPaths {
    /// Vertex sequence from the source to `target`, or `None` if unreachable.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// Runs Dijkstra on `count` vertices; `neighbors(u, f)` must call `f(v, w)`
/// for every edge out of `u`. Settling stops at `target` (if given) or once
/// the frontier exceeds `limit`.
pub fn dijkstra<F>(count: usize, source: usize, target: Option<usize>, limit: f64, mut neighbors: F) -> ShortestPaths
where
    F: FnMut(usize, &mut dyn FnMut(usize, f64)),
{
    let mut dist = vec![f64::INFINITY; count];
    let mut pred = vec![NO_PRED; count];
    let mut done = vec![false; count];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { cost: 0.0, node: source });
    while let Some(Entry { cost, node }) = heap.pop() {
        if done[node] || cost > dist[node] {
            continue;
        }
        if cost > limit {
            break;
        }
        done[node] = true;
        if Some(node) == target {
            break;
        }
        neighbors(node, &mut |v, w| {
            if done[v] {
                return;
            }
            let nd = cost + w;
            if nd < dist[v] || (nd == dist[v] && node < pred[v]) {
                let improved = nd < dist[v];
                dist[v] = nd;
                pred[v] = node;
                if improved {
                    heap.push(Entry { cost: nd, node: v });
                }
            }
        });
    }
    ShortestPaths { dist, pred }
}

/// Convenience wrapper over an adjacency list.
pub fn dijkstra_adj(adj: &[Vec<(u32, f64)>], source: usize, target: Option<usize>, limit: f64) -> ShortestPaths {
    dijkstra(adj.len(), source, target, limit, |u, f| {
        for &(v, w) in &adj[u] {
            f(v as usize, w);
        }
    })
}
