//! Sequential greedy spanner over a roadmap, plus an all-pairs stretch audit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::search::dijkstra_adj;
use super::Roadmap;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable bounded Dijkstra that resets only the vertices it touched.
struct BoundedSearch {
    dist: Vec<f64>,
    touched: Vec<u32>,
    heap: BinaryHeap<Entry>,
}

impl BoundedSearch {
    fn new(n: usize) -> Self {
        BoundedSearch { dist: vec![f64::INFINITY; n], touched: Vec::new(), heap: BinaryHeap::new() }
    }

    /// Whether `adj` holds a `u`-`v` path strictly shorter than `limit`.
    fn shorter_than(&mut self, adj: &[Vec<(u32, f64)>], u: usize, v: usize, limit: f64) -> bool {
        for &i in &self.touched {
            self.dist[i as usize] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[u] = 0.0;
        self.touched.push(u as u32);
        self.heap.push(Entry(0.0, u as u32));
        while let Some(Entry(c, x)) = self.heap.pop() {
            let x = x as usize;
            if c > self.dist[x] {
                continue;
            }
            if x == v {
                return c < limit;
            }
            for &(y, w) in &adj[x] {
                let nd = c + w;
                if nd < limit && nd < self.dist[y as usize] {
                    if self.dist[y as usize].is_infinite() {
                        self.touched.push(y);
                    }
                    self.dist[y as usize] = nd;
                    self.heap.push(Entry(nd, y));
                }
            }
        }
        false
    }
}

/// Greedy `t`-spanner: edges in `(weight, lower, higher)` order, kept unless
/// the spanner built so far already joins the endpoints by a path strictly
/// shorter than `t * weight`. Ties keep the edge, so `t = 1` returns the
/// input graph unchanged.
pub fn spanner_filter(roadmap: &Roadmap, t: f64) -> Result<Roadmap> {
    if !(t >= 1.0) {
        return invalid(format!("stretch must be at least 1, got {t}"));
    }
    let mut edges = roadmap.edges();
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let n = roadmap.len();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut search = BoundedSearch::new(n);
    for (u, v, w) in edges {
        if !search.shorter_than(&adj, u, v, t * w) {
            adj[u].push((v as u32, w));
            adj[v].push((u as u32, w));
        }
    }
    for list in &mut adj {
        list.sort_by_key(|&(v, _)| v);
    }
    Ok(roadmap.with_adjacency(adj))
}

/// All-pairs comparison of a subgraph against its source graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchAudit {
    /// Largest `d_sub(u, v) / d_full(u, v)` over connected pairs with
    /// `d_full > 0`; infinite if the subgraph disconnects some pair.
    pub max_stretch: f64,
    pub pairs: u64,
    pub full_edges: usize,
    pub sub_edges: usize,
}

impl StretchAudit {
    pub fn size_reduction(&self) -> f64 {
        if self.full_edges == 0 {
            0.0
        } else {
            1.0 - self.sub_edges as f64 / self.full_edges as f64
        }
    }
}

/// Dijkstra from every vertex in both graphs; intended for a few hundred vertices.
pub fn audit_stretch(full: &Roadmap, sub: &Roadmap) -> Result<StretchAudit> {
    if full.len() != sub.len() {
        return invalid(format!("vertex counts differ: {} vs {}", full.len(), sub.len()));
    }
    let mut max_stretch: f64 = 1.0;
    let mut pairs = 0u64;
    for s in 0..full.len() {
        let a = dijkstra_adj(full.adjacency(), s, None, f64::INFINITY);
        let b = dijkstra_adj(sub.adjacency(), s, None, f64::INFINITY);
        for v in s + 1..full.len() {
            if a.dist[v].is_finite() && a.dist[v] > 0.0 {
                pairs += 1;
                max_stretch = max_stretch.max(b.dist[v] / a.dist[v]);
            }
        }
    }
    Ok(StretchAudit { max_stretch, pairs, full_edges: full.edge_count(), sub_edges: sub.edge_count() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cspace::Scene;
    use crate::planner::{build_roadmap, ConnectionMode, PlannerParams};

    fn triangle(w: [f64; 3]) -> Roadmap {
        let mut rm = Roadmap::new(2, 0);
        rm.coords = vec![0.0; 6];
        rm.adj = vec![Vec::new(); 3];
        rm.add_edge(0, 1, w[0]);
        rm.add_edge(1, 2, w[1]);
        rm.add_edge(0, 2, w[2]);
        rm
    }

    #[test]
    fn triangle_drops_long_edge() {
        let rm = triangle([1.0, 1.0, 1.9]);
        let sp = spanner_filter(&rm, 1.5).unwrap();
        assert_eq!(sp.edges().len(), 2);
        assert!(sp.edges().iter().all(|e| e.2 == 1.0));
        // brute force over the three pairs
        let audit = audit_stretch(&rm, &sp).unwrap();
        assert!((audit.max_stretch - 2.0 / 1.9).abs() < 1e-15);
        let keep = spanner_filter(&rm, 1.05).unwrap();
        assert_eq!(keep.edges().len(), 3);
    }

    #[test]
    fn ties_keep_edge() {
        let rm = triangle([1.0, 1.0, 2.0]);
        assert_eq!(spanner_filter(&rm, 1.0).unwrap().edges().len(), 3);
        assert!(spanner_filter(&rm, 0.5).is_err());
    }

    #[test]
    fn unit_stretch_is_identity() {
        let s = Scene::unit_cube(2).unwrap();
        let p = PlannerParams::for_scene(&s, ConnectionMode::RDisc, 0.01, 11).unwrap();
        let rm = build_roadmap(&s, &p, 150).unwrap();
        let sp = spanner_filter(&rm, 1.0).unwrap();
        assert_eq!(sp.edges(), rm.edges());
    }

    #[test]
    fn stretch_holds_on_roadmap() {
        let s = Scene::unit_cube(2).unwrap();
        let p = PlannerParams::for_scene(&s, ConnectionMode::RDisc, 0.01, 12).unwrap();
        let rm = build_roadmap(&s, &p, 200).unwrap();
        for t in [1.1, 1.5, 3.0] {
            let sp = spanner_filter(&rm, t).unwrap();
            let audit = audit_stretch(&rm, &sp).unwrap();
            assert!(audit.max_stretch <= t * (1.0 + 1e-12), "t = {t}: {}", audit.max_stretch);
            assert!(audit.sub_edges < audit.full_edges);
        }
    }
}
