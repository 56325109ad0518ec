//! PRM* and k-PRM* with the enlarged connection constant that makes the
//! finite-time bounds in [`crate::analysis`] apply.
//!
//! The roadmap grows incrementally: sample `n` is connected to every earlier
//! vertex within `r_n = gamma (ln n / n)^(1/d)` (r-disc mode) or to its `k(n)`
//! nearest earlier vertices (k-nearest mode), subject to a sampled collision
//! check of the straight local path. Queries attach start and goal with the
//! same rule and run Dijkstra.

pub mod export;
pub mod nn;
pub mod search;
pub mod spanner;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::cspace::{distance, distance2, Configuration, Scene};
use crate::error::{invalid, PnoError, Result};
use crate::geometry::unit_ball_volume;
use crate::rng::{substream, Stream};

use nn::NeighborIndex;
use search::dijkstra;

/// Multiplier applied to the connection-constant lower bound so that the
/// strict inequality holds.
pub const GAMMA_SAFETY: f64 = 1.001;

/// Lower bound on the connection constant and the value actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPno {
    pub bound: f64,
    pub gamma: f64,
}

/// `gamma > 4 ((1 + 1/d) |C_free| / V_d)^(1/d)`; returns the bound and the
/// bound times [`GAMMA_SAFETY`].
pub fn gamma_pno(d: usize, free_vol: f64) -> Result<GammaPno> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(free_vol > 0.0) {
        return invalid(format!("free volume must be positive, got {free_vol}"));
    }
    let df = d as f64;
    let bound = 4.0 * ((1.0 + 1.0 / df) * free_vol / unit_ball_volume(d)).powf(1.0 / df);
    Ok(GammaPno { bound, gamma: bound * GAMMA_SAFETY })
}

/// `gamma (ln n / n)^(1/d)` for a real sample count.
pub fn connection_radius_at(gamma: f64, n: f64, d: usize) -> f64 {
    gamma * (n.ln() / n).powf(1.0 / d as f64)
}

/// `ceil(k_constant * e * (1 + 1/d) * ln n)` for a real sample count, unclamped.
///
/// The `ln n` factor is what keeps the neighbor count above `e E[N]` for the
/// expected occupancy `E[N] = 2^d (1 + 1/d) ln n` of an `eps_n`-ball.
pub fn k_neighbors_at(k_constant: f64, n: f64, d: usize) -> usize {
    (k_constant * E * (1.0 + 1.0 / d as f64) * n.ln()).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionMode {
    RDisc,
    KNearest,
}

impl std::str::FromStr for ConnectionMode {
    type Err = PnoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r-disc" | "rdisc" | "radius" => Ok(ConnectionMode::RDisc),
            "k-nearest" | "knn" | "k" => Ok(ConnectionMode::KNearest),
            other => invalid(format!("unknown connection mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub gamma: f64,
    pub mode: ConnectionMode,
    /// `k_PNO`; the k-nearest rule needs at least `2^d`.
    pub k_constant: f64,
    /// Upper bound on the sampling step of local-path collision checks.
    pub collision_step: f64,
    pub seed: u64,
}

impl PlannerParams {
    /// Parameters for `scene` with `gamma` just above its lower bound and
    /// `k_constant = 2^d`.
    pub fn for_scene(scene: &Scene, mode: ConnectionMode, collision_step: f64, seed: u64) -> Result<Self> {
        let d = scene.dim();
        let g = gamma_pno(d, scene.free_volume())?;
        let params = PlannerParams { gamma: g.gamma, mode, k_constant: 2f64.powi(d as i32), collision_step, seed };
        params.validate(scene)?;
        Ok(params)
    }

    pub fn validate(&self, scene: &Scene) -> Result<()> {
        let d = scene.dim();
        let g = gamma_pno(d, scene.free_volume())?;
        if !(self.gamma > g.bound) {
            return invalid(format!("gamma {} must exceed the lower bound {}", self.gamma, g.bound));
        }
        if self.mode == ConnectionMode::KNearest && self.k_constant < 2f64.powi(d as i32) {
            return invalid(format!("k_constant {} must be at least 2^d = {}", self.k_constant, 2f64.powi(d as i32)));
        }
        if !(self.collision_step > 0.0) {
            return invalid(format!("collision step must be positive, got {}", self.collision_step));
        }
        Ok(())
    }

    /// Step used for local-path checks at sample count `n`:
    /// `min(beta_n / 4, collision_step)` with `beta_n = r_n / 4`.
    pub fn step_at(&self, n: usize, d: usize) -> f64 {
        let r = connection_radius_at(self.gamma, n.max(2) as f64, d);
        (r / 16.0).min(self.collision_step)
    }
}

/// `r_n = gamma (ln n / n)^(1/d)`; natural logarithm, `n >= 2`.
pub fn connection_radius(params: &PlannerParams, n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return invalid(format!("connection radius needs n >= 2, got {n}"));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    Ok(connection_radius_at(params.gamma, n as f64, d))
}

/// Neighbor count for k-nearest mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KNeighbors {
    pub k: usize,
    /// Set when the raw count exceeded `n - 1`.
    pub clamped: bool,
}

/// `ceil(k_constant e (1 + 1/d) ln n)`, clamped to `n - 1`.
pub fn k_neighbors(params: &PlannerParams, n: usize, d: usize) -> Result<KNeighbors> {
    if n < 2 {
        return invalid(format!("neighbor count needs n >= 2, got {n}"));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let raw = k_neighbors_at(params.k_constant, n as f64, d);
    Ok(if raw > n - 1 { KNeighbors { k: n - 1, clamped: true } } else { KNeighbors { k: raw, clamped: false } })
}

/// Undirected roadmap of free configurations with Euclidean edge weights.
///
/// Owns its sample stream, so growing in several steps yields the same graph
/// as growing once.
#[derive(Debug, Clone)]
pub struct Roadmap {
    dim: usize,
    coords: Vec<f64>,
    adj: Vec<Vec<(u32, f64)>>,
    index: NeighborIndex,
    rng: Stream,
    rejections: u64,
    knn_clamped: bool,
}

impl Roadmap {
    pub fn new(dim: usize, seed: u64) -> Self {
        Roadmap {
            dim,
            coords: Vec::new(),
            adj: Vec::new(),
            index: NeighborIndex::new(dim),
            rng: substream(seed, 0),
            rejections: 0,
            knn_clamped: false,
        }
    }

    /// Empty roadmap seeded from `params.seed`.
    pub fn for_params(dim: usize, params: &PlannerParams) -> Self {
        Roadmap::new(dim, params.seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free samples drawn so far (= vertex count).
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn adjacency(&self) -> &[Vec<(u32, f64)>] {
        &self.adj
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v, weight)` with `u < v`, sorted by `(u, v)`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |(v, _)| (*v as usize) > u).map(move |&(v, w)| (u, v as usize, w)))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    pub fn rejections(&self) -> u64 {
        self.rejections
    }

    /// Whether any k-nearest step had to clamp `k(n)` to `n - 1`.
    pub fn knn_clamped(&self) -> bool {
        self.knn_clamped
    }

    pub(crate) fn with_adjacency(&self, adj: Vec<Vec<(u32, f64)>>) -> Roadmap {
        Roadmap { adj, ..self.clone() }
    }

    fn add_edge(&mut self, u: usize, v: usize, w: f64) {
        self.adj[u].push((v as u32, w));
        self.adj[v].push((u as u32, w));
    }

    /// Adds free samples until the roadmap holds `target_n` of them.
    pub fn grow(&mut self, scene: &Scene, params: &PlannerParams, target_n: usize) -> Result<()> {
        if scene.dim() != self.dim {
            return Err(PnoError::DimensionMismatch { expected: self.dim, got: scene.dim() });
        }
        if target_n < self.len() {
            return invalid(format!("target {target_n} is below the current sample count {}", self.len()));
        }
        params.validate(scene)?;
        let d = self.dim;
        let mut q = vec![0.0; d];
        let mut candidates = Vec::new();
        while self.len() < target_n {
            self.rejections += scene.fill_free(&mut self.rng, &mut q)?;
            let i = self.len();
            let n = i + 1;
            match params.mode {
                ConnectionMode::RDisc if n >= 2 => {
                    let r = connection_radius_at(params.gamma, n as f64, d);
                    self.index.within(&self.coords, &q, r, &mut candidates);
                }
                ConnectionMode::KNearest if n >= 2 => {
                    let k = k_neighbors(params, n, d)?;
                    self.knn_clamped |= k.clamped;
                    self.index.nearest(&self.coords, &q, k.k, &mut candidates);
                    candidates.sort_unstable();
                }
                _ => candidates.clear(),
            }
            let step = params.step_at(n, d);
            self.coords.extend_from_slice(&q);
            self.adj.push(Vec::new());
            self.index.insert(&self.coords, i);
            for &j in &candidates {
                let other = &self.coords[j * d..(j + 1) * d];
                if scene.segment_free_unchecked(&q, other, step) {
                    let w = distance(&q, other);
                    self.add_edge(i, j, w);
                }
            }
            candidates.clear();
        }
        Ok(())
    }

    /// Roadmap vertices that a query endpoint at `p` would connect to.
    fn attach(&self, scene: &Scene, params: &PlannerParams, p: &[f64]) -> Vec<(usize, f64)> {
        let n = self.len().max(2);
        let d = self.dim;
        let mut candidates = Vec::new();
        match params.mode {
            ConnectionMode::RDisc => {
                let r = connection_radius_at(params.gamma, n as f64, d);
                self.index.within(&self.coords, p, r, &mut candidates);
            }
            ConnectionMode::KNearest => {
                let k = k_neighbors_at(params.k_constant, n as f64, d).min(self.len());
                self.index.nearest(&self.coords, p, k, &mut candidates);
                candidates.sort_unstable();
            }
        }
        let step = params.step_at(n, d);
        candidates
            .into_iter()
            .filter(|&j| scene.segment_free_unchecked(p, self.vertex(j), step))
            .map(|j| (j, distance(p, self.vertex(j))))
            .collect()
    }

    fn direct_link(&self, scene: &Scene, params: &PlannerParams, a: &[f64], b: &[f64]) -> bool {
        let n = self.len().max(2);
        let d = self.dim;
        let in_range = match params.mode {
            ConnectionMode::RDisc => distance(a, b) <= connection_radius_at(params.gamma, n as f64, d),
            ConnectionMode::KNearest => {
                let k = k_neighbors_at(params.k_constant, n as f64, d);
                let d2 = distance2(a, b);
                (0..self.len()).filter(|&j| distance2(a, self.vertex(j)) < d2).count() < k
            }
        };
        in_range && scene.segment_free_unchecked(a, b, params.step_at(n, d))
    }

    /// Attaches `start` and `goal` with the roadmap's connection rule and
    /// returns the shortest path between them.
    pub fn query(&self, scene: &Scene, params: &PlannerParams, start: &[f64], goal: &[f64]) -> Result<QueryResult> {
        for (name, p) in [("start", start), ("goal", goal)] {
            if p.len() != self.dim {
                return Err(PnoError::DimensionMismatch { expected: self.dim, got: p.len() });
            }
            if !scene.is_free(p)? {
                return Err(PnoError::InvalidQuery(format!("{name} configuration is in collision")));
            }
        }
        if start == goal {
            return Ok(QueryResult {
                path: vec![Configuration(start.to_vec())],
                vertices: vec![PathVertex::Start],
                length: 0.0,
                solved: true,
            });
        }
        let n = self.len();
        let (s, g) = (n, n + 1);
        let start_links = self.attach(scene, params, start);
        let goal_links = self.attach(scene, params, goal);
        let direct = self.direct_link(scene, params, start, goal).then(|| distance(start, goal));
        let mut to_goal = vec![f64::NAN; n];
        for &(j, w) in &goal_links {
            to_goal[j] = w;
        }
        let sp = dijkstra(n + 2, s, Some(g), f64::INFINITY, |u, f| {
            if u == s {
                for &(j, w) in &start_links {
                    f(j, w);
                }
                if let Some(w) = direct {
                    f(g, w);
                }
            } else if u < n {
                for &(v, w) in &self.adj[u] {
                    f(v as usize, w);
                }
                if !to_goal[u].is_nan() {
                    f(g, to_goal[u]);
                }
            }
        });
        let Some(ids) = sp.path_to(g) else {
            return Ok(QueryResult { path: Vec::new(), vertices: Vec::new(), length: f64::INFINITY, solved: false });
        };
        let vertices: Vec<PathVertex> = ids
            .iter()
            .map(|&i| {
                if i == s {
                    PathVertex::Start
                } else if i == g {
                    PathVertex::Goal
                } else {
                    PathVertex::Roadmap(i)
                }
            })
            .collect();
        let path: Vec<Configuration> = vertices
            .iter()
            .map(|v| match v {
                PathVertex::Start => Configuration(start.to_vec()),
                PathVertex::Goal => Configuration(goal.to_vec()),
                PathVertex::Roadmap(i) => Configuration(self.vertex(*i).to_vec()),
            })
            .collect();
        let length = path.windows(2).map(|w| distance(&w[0], &w[1])).sum();
        Ok(QueryResult { path, vertices, length, solved: true })
    }

    /// Shortest roadmap distance between two vertices (infinite if disconnected).
    pub fn vertex_distance(&self, u: usize, v: usize) -> f64 {
        search::dijkstra_adj(&self.adj, u, Some(v), f64::INFINITY).dist[v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathVertex {
    Start,
    Goal,
    Roadmap(usize),
}

/// Answer to a start/goal query; `length` is infinite when unsolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub path: Vec<Configuration>,
    pub vertices: Vec<PathVertex>,
    pub length: f64,
    pub solved: bool,
}

/// Builds a roadmap of `n` samples for `params` in one call.
pub fn build_roadmap(scene: &Scene, params: &PlannerParams, n: usize) -> Result<Roadmap> {
    let mut rm = Roadmap::for_params(scene.dim(), params);
    rm.grow(scene, params, n)?;
    Ok(rm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cspace::{Bounds, Obstacle};
    use std::f64::consts::PI;

    fn params(scene: &Scene, mode: ConnectionMode, seed: u64) -> PlannerParams {
        PlannerParams::for_scene(scene, mode, 0.01, seed).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_pno(2, PI).unwrap();
        assert!((g.gamma - 4.0 * 1.5f64.sqrt() * 1.001).abs() < 1e-12);
        assert!((g.gamma - 4.9039).abs() < 1e-4);
        let g1 = gamma_pno(1, 2.0).unwrap();
        assert!((g1.gamma - 8.008).abs() < 1e-12);
        for d in [1, 2, 3, 6] {
            let a = gamma_pno(d, 0.7).unwrap().gamma;
            let b = gamma_pno(d, 1.4).unwrap().gamma;
            assert!((b / a - 2f64.powf(1.0 / d as f64)).abs() < 1e-12);
        }
        assert!(gamma_pno(2, 0.0).is_err());
    }

    #[test]
    fn radius_examples() {
        assert!((connection_radius_at(1.0, E * E, 1) - 2.0 / (E * E)).abs() < 1e-15);
        // independent evaluation: 4.9039 * sqrt(ln(1000) / 1000)
        let expected = 4.9039 * (6.907755278982137f64 / 1000.0).sqrt();
        assert!((connection_radius_at(4.9039, 1000.0, 2) - expected).abs() < 1e-12);
        assert!((expected - 0.40755).abs() < 1e-4);
        let p = PlannerParams { gamma: 1.0, mode: ConnectionMode::RDisc, k_constant: 4.0, collision_step: 0.1, seed: 0 };
        assert!(connection_radius(&p, 1, 2).is_err());
        let mut prev = f64::INFINITY;
        for n in 3..2000 {
            let r = connection_radius(&p, n, 2).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(k_neighbors_at(2.0, E, 1), 11);
        assert_eq!(k_neighbors_at(4.0, 100.0, 2), 76);
        let p = PlannerParams { gamma: 1.0, mode: ConnectionMode::KNearest, k_constant: 4.0, collision_step: 0.1, seed: 0 };
        assert_eq!(k_neighbors(&p, 100, 2).unwrap(), KNeighbors { k: 76, clamped: false });
        assert_eq!(k_neighbors(&p, 10, 2).unwrap(), KNeighbors { k: 9, clamped: true });
        let mut prev = 0;
        for n in 2..5000 {
            let k = k_neighbors_at(4.0, n as f64, 2);
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn params_validation() {
        let s = Scene::unit_cube(2).unwrap();
        let mut p = params(&s, ConnectionMode::RDisc, 1);
        assert!(p.validate(&s).is_ok());
        p.gamma = gamma_pno(2, 1.0).unwrap().bound;
        assert!(p.validate(&s).is_err());
        let mut k = params(&s, ConnectionMode::KNearest, 1);
        k.k_constant = 3.0;
        assert!(k.validate(&s).is_err());
    }

    #[test]
    fn grow_is_deterministic_and_incremental() {
        let s = Scene::unit_cube(2).unwrap();
        let p = params(&s, ConnectionMode::RDisc, 42);
        let a = build_roadmap(&s, &p, 300).unwrap();
        let b = build_roadmap(&s, &p, 300).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_eq!(a.edges(), b.edges());
        let mut c = build_roadmap(&s, &p, 120).unwrap();
        c.grow(&s, &p, 300).unwrap();
        assert_eq!(a.coords(), c.coords());
        assert_eq!(a.edges(), c.edges());
        c.grow(&s, &p, 300).unwrap();
        assert_eq!(a.edges(), c.edges());
        assert!(c.grow(&s, &p, 10).is_err());
    }

    #[test]
    fn empty_scene_rdisc_connects_every_close_pair() {
        let s = Scene::unit_cube(2).unwrap();
        let p = params(&s, ConnectionMode::RDisc, 3);
        let rm = build_roadmap(&s, &p, 50).unwrap();
        let edges: std::collections::HashSet<(usize, usize)> = rm.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
        for j in 0..50 {
            for i in 0..j {
                let r = connection_radius_at(p.gamma, (j + 1) as f64, 2);
                let close = distance(rm.vertex(i), rm.vertex(j)) <= r;
                assert_eq!(close, edges.contains(&(i, j)), "pair ({i}, {j})");
            }
        }
    }

    #[test]
    fn query_edge_cases() {
        let s = Scene::new(
            Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            vec![Obstacle::Box { lo: vec![0.45, 0.0], hi: vec![0.55, 1.0] }],
        )
        .unwrap();
        let p = params(&s, ConnectionMode::RDisc, 5);
        let rm = build_roadmap(&s, &p, 400).unwrap();
        let same = rm.query(&s, &p, &[0.2, 0.2], &[0.2, 0.2]).unwrap();
        assert!(same.solved);
        assert_eq!(same.length, 0.0);
        let split = rm.query(&s, &p, &[0.2, 0.5], &[0.8, 0.5]).unwrap();
        assert!(!split.solved);
        assert!(split.path.is_empty());
        assert!(matches!(rm.query(&s, &p, &[0.5, 0.5], &[0.8, 0.5]), Err(PnoError::InvalidQuery(_))));
    }

    #[test]
    fn query_path_is_consistent() {
        let s = Scene::unit_cube(2).unwrap();
        for mode in [ConnectionMode::RDisc, ConnectionMode::KNearest] {
            let p = params(&s, mode, 8);
            let rm = build_roadmap(&s, &p, 500).unwrap();
            let res = rm.query(&s, &p, &[0.1, 0.1], &[0.9, 0.8]).unwrap();
            assert!(res.solved);
            assert_eq!(res.vertices.first(), Some(&PathVertex::Start));
            assert_eq!(res.vertices.last(), Some(&PathVertex::Goal));
            let straight = distance(&[0.1, 0.1], &[0.9, 0.8]);
            assert!(res.length >= straight - 1e-12);
            assert!(res.length < 1.2 * straight);
            for w in res.vertices.windows(2) {
                if let (PathVertex::Roadmap(a), PathVertex::Roadmap(b)) = (w[0], w[1]) {
                    assert!(rm.neighbors(a).iter().any(|&(v, _)| v as usize == b));
                }
            }
        }
    }
}
