//! Brute-force Monte Carlo and grid estimators used to check the closed forms.
//!
//! Trials are split into fixed-size chunks, each drawn from its own
//! substream of the run seed, and merged in chunk order, so every estimate is
//! bit-for-bit reproducible from `(seed, inputs)` regardless of thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::{distance, Scene};
use crate::error::{invalid, PnoError, Result};
use crate::geometry::fill_in_ball;
use crate::planner::search::dijkstra;
use crate::rng::{substream, Stream};

/// Default trial count matching the published simulation tables.
pub const DEFAULT_TRIALS: u64 = 120_000;

const CHUNK: u64 = 4_096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// `100 |closed - mc| / mc`.
pub fn rel_error_pct(closed: f64, mc: f64) -> f64 {
    100.0 * ((closed - mc) / mc).abs()
}

/// Power sums of `x - shift` up to the fourth order.
#[derive(Debug, Clone, Copy, Default)]
struct PowerSums {
    n: f64,
    s: [f64; 4],
}

impl PowerSums {
    fn push(&mut self, y: f64) {
        let y2 = y * y;
        self.n += 1.0;
        self.s[0] += y;
        self.s[1] += y2;
        self.s[2] += y2 * y;
        self.s[3] += y2 * y2;
    }

    fn merge(&mut self, o: &PowerSums) {
        self.n += o.n;
        for k in 0..4 {
            self.s[k] += o.s[k];
        }
    }

    fn central(&self) -> (f64, f64, f64) {
        let n = self.n;
        let mu = self.s[0] / n;
        let m2 = (self.s[1] / n - mu * mu).max(0.0);
        let m4 = (self.s[3] / n - 4.0 * mu * self.s[2] / n + 6.0 * mu * mu * self.s[1] / n - 3.0 * mu.powi(4)).max(0.0);
        (mu, m2, m4)
    }

    fn mean(&self, shift: f64, trials: u64, seed: u64) -> McEstimate {
        let (mu, m2, _) = self.central();
        let n = self.n;
        let var = if n > 1.0 { m2 * n / (n - 1.0) } else { 0.0 };
        McEstimate { value: shift + mu, std_error: (var / n).sqrt(), trials, seed }
    }

    fn variance(&self, trials: u64, seed: u64) -> McEstimate {
        let (_, m2, m4) = self.central();
        let n = self.n;
        if n < 2.0 {
            return McEstimate { value: 0.0, std_error: 0.0, trials, seed };
        }
        let var = m2 * n / (n - 1.0);
        let se2 = if n > 3.0 { (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n } else { 0.0 };
        McEstimate { value: var, std_error: se2.max(0.0).sqrt(), trials, seed }
    }
}

/// Runs `trials` trials in chunks and merges per-chunk accumulators in order.
fn chunked<A, F>(trials: u64, seed: u64, init: A, body: F) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut Stream, u64, &mut A) + Sync,
    A: Merge,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut acc = init.clone();
            body(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    let mut total = init;
    for p in &parts {
        total.merge_from(p);
    }
    total
}

trait Merge {
    fn merge_from(&mut self, other: &Self);
}

impl Merge for PowerSums {
    fn merge_from(&mut self, other: &Self) {
        self.merge(other);
    }
}

impl<const K: usize> Merge for [PowerSums; K] {
    fn merge_from(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

impl Merge for u64 {
    fn merge_from(&mut self, other: &Self) {
        *self += other;
    }
}

fn axis_point(d: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; d];
    p[0] = x;
    p
}

fn check_chain(d: usize, eps: f64, beta: f64, trials: u64) -> Result<()> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if !(beta >= 0.0 && beta <= eps / 2.0) {
        return invalid(format!("beta must lie in [0, eps/2], got {beta}"));
    }
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    Ok(())
}

/// Monte Carlo estimates of `E[I1]`, `E[I1^2]` and `E[I1 I2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentMoments {
    pub mean: McEstimate,
    pub second: McEstimate,
    pub cross: McEstimate,
}

/// Draws one point in each of three balls of radius `beta` centred at
/// `-eps`, `0`, `+eps` on the first axis; `I1` joins the first two points
/// and `I2` the last two.
pub fn mc_segment_moments(d: usize, eps: f64, beta: f64, trials: u64, seed: u64) -> Result<SegmentMoments> {
    segment_moments(d, eps, beta, trials, seed, false)
}

/// Same estimator with the outer balls exchanged: the point for the ball at
/// `+eps` is drawn first and takes the role of `I1`.
pub fn mc_segment_moments_reversed(d: usize, eps: f64, beta: f64, trials: u64, seed: u64) -> Result<SegmentMoments> {
    segment_moments(d, eps, beta, trials, seed, true)
}

fn segment_moments(d: usize, eps: f64, beta: f64, trials: u64, seed: u64, reversed: bool) -> Result<SegmentMoments> {
    check_chain(d, eps, beta, trials)?;
    let first = axis_point(d, if reversed { eps } else { -eps });
    let mid = axis_point(d, 0.0);
    let last = axis_point(d, if reversed { -eps } else { eps });
    let shifts = [eps, eps * eps, eps * eps];
    let acc = chunked(trials, seed, [PowerSums::default(); 3], |rng, count, acc| {
        let (mut x1, mut x2, mut x3) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        for _ in 0..count {
            fill_in_ball(rng, &first, beta, &mut x1);
            fill_in_ball(rng, &mid, beta, &mut x2);
            fill_in_ball(rng, &last, beta, &mut x3);
            let i1 = distance(&x1, &x2);
            let i2 = distance(&x2, &x3);
            acc[0].push(i1 - shifts[0]);
            acc[1].push(i1 * i1 - shifts[1]);
            acc[2].push(i1 * i2 - shifts[2]);
        }
    });
    Ok(SegmentMoments {
        mean: acc[0].mean(shifts[0], trials, seed),
        second: acc[1].mean(shifts[1], trials, seed),
        cross: acc[2].mean(shifts[2], trials, seed),
    })
}

/// Sample mean and sample variance of a chained path length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub mean: McEstimate,
    pub variance: McEstimate,
}

/// Per trial, one point in each of `m + 1` balls centred `eps` apart on the
/// first axis; the path length is the sum of the `m` consecutive distances.
pub fn mc_path_stats(d: usize, eps: f64, beta: f64, m: usize, trials: u64, seed: u64) -> Result<PathStats> {
    check_chain(d, eps, beta, trials)?;
    if m == 0 {
        return invalid("a path needs at least one segment");
    }
    let shift = m as f64 * eps;
    let acc = chunked(trials, seed, PowerSums::default(), |rng, count, acc| {
        let (mut prev, mut cur) = (vec![0.0; d], vec![0.0; d]);
        let mut center = vec![0.0; d];
        for _ in 0..count {
            center[0] = 0.0;
            fill_in_ball(rng, &center, beta, &mut prev);
            let mut len = 0.0;
            for j in 1..=m {
                center[0] = j as f64 * eps;
                fill_in_ball(rng, &center, beta, &mut cur);
                len += distance(&prev, &cur);
                std::mem::swap(&mut prev, &mut cur);
            }
            acc.push(len - shift);
        }
    });
    Ok(PathStats { mean: acc.mean(shift, trials, seed), variance: acc.variance(trials, seed) })
}

/// Fraction of trials in which `n` uniform free samples put at least one
/// point in every ball `B(center, beta)`.
pub fn mc_coverage(scene: &Scene, centers: &[Vec<f64>], beta: f64, n: u64, trials: u64, seed: u64) -> Result<McEstimate> {
    if centers.is_empty() {
        return Err(PnoError::InvalidTiling("no balls given".into()));
    }
    if !(beta > 0.0) {
        return Err(PnoError::InvalidTiling(format!("ball radius must be positive, got {beta}")));
    }
    if n == 0 || trials == 0 {
        return invalid("need at least one sample and one trial");
    }
    for (i, c) in centers.iter().enumerate() {
        if c.len() != scene.dim() {
            return Err(PnoError::DimensionMismatch { expected: scene.dim(), got: c.len() });
        }
        if !scene.ball_is_free(c, beta) {
            return Err(PnoError::InvalidTiling(format!("ball {i} leaves the free space")));
        }
        // closed balls may touch; only overlap of positive measure is rejected,
        // with slack for centers placed by floating-point arithmetic
        if let Some(j) = (0..i).find(|&j| distance(c, &centers[j]) < 2.0 * beta * (1.0 - 1e-9)) {
            return Err(PnoError::InvalidTiling(format!("balls {j} and {i} overlap")));
        }
    }
    // sampling errors cannot be returned from inside the workers, so probe the
    // rejection cap up front and surface it as an error
    scene.sample_free(&mut substream(seed, u64::MAX))?;
    let d = scene.dim();
    let b2 = beta * beta;
    let starved = std::sync::atomic::AtomicBool::new(false);
    let hits = chunked(trials, seed, 0u64, |rng, count, acc| {
        let mut q = vec![0.0; d];
        let mut covered = vec![false; centers.len()];
        for _ in 0..count {
            covered.iter_mut().for_each(|c| *c = false);
            let mut remaining = centers.len();
            for _ in 0..n {
                if scene.fill_free(rng, &mut q).is_err() {
                    starved.store(true, std::sync::atomic::Ordering::Relaxed);
                    return;
                }
                if let Some(k) = centers.iter().position(|c| crate::cspace::distance2(c, &q) <= b2) {
                    if !covered[k] {
                        covered[k] = true;
                        remaining -= 1;
                        if remaining == 0 {
                            break;
                        }
                    }
                }
            }
            if remaining == 0 {
                *acc += 1;
            }
        }
    });
    if starved.into_inner() {
        return Err(PnoError::SamplingStarved { rejections: scene.rejection_cap() });
    }
    let p = hits as f64 / trials as f64;
    Ok(McEstimate { value: p, std_error: (p * (1.0 - p) / trials as f64).sqrt(), trials, seed })
}

/// Worst-case ratio of the grid metric to the Euclidean metric for a
/// Moore-neighbourhood grid in free space: exact for `d <= 2`
/// (`sqrt(4 - 2 sqrt 2)` for the 8-connected plane), `sqrt(d)` as an upper
/// bound above.
pub fn grid_distortion(d: usize) -> f64 {
    match d {
        0 | 1 => 1.0,
        2 => (4.0 - 2.0 * std::f64::consts::SQRT_2).sqrt(),
        _ => (d as f64).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub length: f64,
    pub distortion: f64,
    pub nodes: usize,
}

/// Largest grid the oracle will enumerate.
pub const MAX_GRID_NODES: usize = 20_000_000;

/// Shortest path on a start-anchored grid of spacing `resolution` where each
/// free node links to its `3^d - 1` Moore neighbours through free segments.
/// The goal links to every free grid node within one spacing per axis.
pub fn grid_path_oracle(scene: &Scene, start: &[f64], goal: &[f64], resolution: f64) -> Result<GridPath> {
    let d = scene.dim();
    if !(resolution > 0.0) {
        return invalid(format!("resolution must be positive, got {resolution}"));
    }
    for (name, p) in [("start", start), ("goal", goal)] {
        if !scene.is_free(p)? {
            return Err(PnoError::InvalidQuery(format!("{name} configuration is in collision")));
        }
    }
    let distortion = grid_distortion(d);
    if start == goal {
        return Ok(GridPath { length: 0.0, distortion, nodes: 1 });
    }
    let b = scene.bounds();
    let kmin: Vec<i64> = (0..d).map(|i| ((b.lo[i] - start[i]) / resolution).ceil() as i64).collect();
    let kmax: Vec<i64> = (0..d).map(|i| ((b.hi[i] - start[i]) / resolution).floor() as i64).collect();
    let dims: Vec<usize> = (0..d).map(|i| (kmax[i] - kmin[i] + 1) as usize).collect();
    let total = dims.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x)).filter(|&t| t <= MAX_GRID_NODES);
    let Some(total) = total else {
        return invalid(format!("grid at resolution {resolution} exceeds {MAX_GRID_NODES} nodes"));
    };
    let encode = |k: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for i in (0..d).rev() {
            if k[i] < kmin[i] || k[i] > kmax[i] {
                return None;
            }
            idx = idx * dims[i] + (k[i] - kmin[i]) as usize;
        }
        Some(idx)
    };
    let decode = |mut idx: usize, k: &mut [i64]| {
        for i in 0..d {
            k[i] = kmin[i] + (idx % dims[i]) as i64;
            idx /= dims[i];
        }
    };
    let coords = |k: &[i64], out: &mut [f64]| {
        for i in 0..d {
            out[i] = start[i] + k[i] as f64 * resolution;
        }
    };
    let step = resolution / 8.0;
    // goal links: grid nodes in the cell box around the goal
    let mut goal_links: HashMap<usize, f64> = HashMap::new();
    let base: Vec<i64> = (0..d).map(|i| ((goal[i] - start[i]) / resolution).floor() as i64).collect();
    let mut k = vec![0i64; d];
    let mut p = vec![0.0; d];
    for combo in 0..3usize.pow(d as u32) {
        let mut c = combo;
        for i in 0..d {
            k[i] = base[i] + (c % 3) as i64 - 1;
            c /= 3;
        }
        coords(&k, &mut p);
        let near = (0..d).all(|i| (p[i] - goal[i]).abs() <= resolution);
        if let Some(idx) = encode(&k) {
            if near && scene.is_free_unchecked(&p) && scene.segment_free_unchecked(&p, goal, step) {
                goal_links.insert(idx, distance(&p, goal));
            }
        }
    }
    let source = encode(&vec![0; d]).expect("start lies inside the bounds");
    let target = total;
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|combo| {
            let mut c = combo;
            (0..d)
                .map(|_| {
                    let v = (c % 3) as i64 - 1;
                    c /= 3;
                    v
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&v| v != 0))
        .collect();
    let weights: Vec<f64> = offsets.iter().map(|o| resolution * (o.iter().filter(|&&v| v != 0).count() as f64).sqrt()).collect();
    // 0 unknown, 1 free, 2 blocked
    let mut state = vec![0u8; total];
    let (mut ku, mut kv) = (vec![0i64; d], vec![0i64; d]);
    let (mut pu, mut pv) = (vec![0.0; d], vec![0.0; d]);
    let sp = dijkstra(total + 1, source, Some(target), f64::INFINITY, |u, f| {
        if u == target {
            return;
        }
        decode(u, &mut ku);
        coords(&ku, &mut pu);
        if let Some(&w) = goal_links.get(&u) {
            f(target, w);
        }
        for (o, &w) in offsets.iter().zip(&weights) {
            for i in 0..d {
                kv[i] = ku[i] + o[i];
            }
            let Some(v) = encode(&kv) else { continue };
            coords(&kv, &mut pv);
            if state[v] == 0 {
                state[v] = if scene.is_free_unchecked(&pv) { 1 } else { 2 };
            }
            if state[v] == 1 && scene.segment_free_unchecked(&pu, &pv, step) {
                f(v, w);
            }
        }
    });
    let length = sp.dist[target];
    if !length.is_finite() {
        return Err(PnoError::Unreachable(format!("no grid path at resolution {resolution}")));
    }
    Ok(GridPath { length, distortion, nodes: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cspace::{Bounds, Obstacle};
    use crate::geometry::{path_mean, segment_cross_moment, segment_mean, segment_second_moment, MomentInputs};

    #[test]
    fn degenerate_balls_are_exact() {
        let s = mc_segment_moments(3, 0.7, 0.0, 1000, 1).unwrap();
        assert_eq!(s.mean.value, 0.7);
        assert!((s.second.value - 0.49).abs() < 1e-15);
        assert!((s.cross.value - 0.49).abs() < 1e-15);
        let p = mc_path_stats(2, 0.5, 0.0, 4, 1000, 1).unwrap();
        assert_eq!(p.mean.value, 2.0);
        assert_eq!(p.variance.value, 0.0);
    }

    #[test]
    fn reproducible() {
        let a = mc_segment_moments(2, 1.0, 0.3, 10_000, 5).unwrap();
        let b = mc_segment_moments(2, 1.0, 0.3, 10_000, 5).unwrap();
        assert_eq!(a, b);
        let c = mc_segment_moments(2, 1.0, 0.3, 10_000, 6).unwrap();
        assert_ne!(a.mean.value, c.mean.value);
    }

    #[test]
    fn moments_track_closed_forms() {
        let mi = MomentInputs::new(2, 1.0, 0.25, 1).unwrap();
        let s = mc_segment_moments(2, 1.0, 0.25, 60_000, 2).unwrap();
        for (est, closed) in [(s.mean, segment_mean(&mi)), (s.second, segment_second_moment(&mi)), (s.cross, segment_cross_moment(&mi))] {
            assert!(rel_error_pct(closed, est.value) < 1.0, "{closed} vs {}", est.value);
        }
        // the second moment is exact, so only MC noise separates them
        assert!((s.second.value - segment_second_moment(&mi)).abs() < 4.0 * s.second.std_error);
        let p = mc_path_stats(2, 1.0, 0.125, 3, 40_000, 3).unwrap();
        let mi = MomentInputs::new(2, 1.0, 0.125, 3).unwrap();
        assert!(rel_error_pct(path_mean(&mi), p.mean.value) < 0.2);
    }

    #[test]
    fn reversed_order_agrees() {
        let a = mc_segment_moments(3, 1.0, 0.5, 40_000, 7).unwrap();
        let b = mc_segment_moments_reversed(3, 1.0, 0.5, 40_000, 7).unwrap();
        for (x, y) in [(a.mean, b.mean), (a.cross, b.cross)] {
            let se = x.std_error.hypot(y.std_error);
            assert!((x.value - y.value).abs() < 3.0 * se);
        }
    }

    #[test]
    fn std_error_scales_with_trials() {
        let a = mc_path_stats(2, 1.0, 0.5, 2, 20_000, 8).unwrap();
        let b = mc_path_stats(2, 1.0, 0.5, 2, 80_000, 9).unwrap();
        let ratio = a.mean.std_error / b.mean.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.15, "{ratio}");
        let ratio = a.variance.std_error / b.variance.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn coverage_examples() {
        let s = Scene::unit_cube(2).unwrap();
        // ball of area 1/2 in the unit square
        let r = (0.5 / std::f64::consts::PI).sqrt();
        let e = mc_coverage(&s, &[vec![0.5, 0.5]], r, 1, 100_000, 4).unwrap();
        assert!((e.value - 0.5).abs() < 0.005);
        // in one dimension a ball can fill the whole space
        let line = Scene::empty(vec![0.0], vec![1.0]).unwrap();
        let full = mc_coverage(&line, &[vec![0.5]], 0.5, 1, 1000, 4).unwrap();
        assert_eq!(full.value, 1.0);
        assert!(matches!(
            mc_coverage(&s, &[vec![0.5, 0.5], vec![0.6, 0.5]], 0.1, 10, 10, 1),
            Err(PnoError::InvalidTiling(_))
        ));
        assert!(mc_coverage(&s, &[vec![0.4, 0.5], vec![0.6, 0.5]], 0.1, 10, 10, 1).is_ok());
        let blocked = Scene::new(
            Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            vec![Obstacle::Ball { center: vec![0.5, 0.5], radius: 0.1 }],
        )
        .unwrap();
        assert!(matches!(mc_coverage(&blocked, &[vec![0.5, 0.65]], 0.1, 10, 10, 1), Err(PnoError::InvalidTiling(_))));
    }

    #[test]
    fn grid_examples() {
        let s = Scene::unit_cube(2).unwrap();
        let g = grid_path_oracle(&s, &[0.2, 0.3], &[0.8, 0.3], 0.05).unwrap();
        assert!((g.length - 0.6).abs() < 1e-9);
        let diag = grid_path_oracle(&s, &[0.1, 0.1], &[0.9, 0.6], 0.01).unwrap();
        let truth = distance(&[0.1, 0.1], &[0.9, 0.6]);
        assert!(diag.length >= truth - 1e-12);
        assert!(diag.length <= truth * 1.083);
        assert!(diag.length <= truth * diag.distortion + 1e-12);
        // two-corner detour around [0.405, 0.595] x [0, 0.395]
        let scene = Scene::new(
            Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            vec![Obstacle::Box { lo: vec![0.405, 0.0], hi: vec![0.595, 0.395] }],
        )
        .unwrap();
        let corner = 0.195f64.hypot(0.205);
        let taut = 2.0 * corner + 0.19;
        let g = grid_path_oracle(&scene, &[0.2, 0.2], &[0.8, 0.2], 0.01).unwrap();
        assert!(g.length >= taut - 1e-12);
        assert!(g.length - taut < 0.01, "{} vs {taut}", g.length);
        let wall = Scene::new(
            Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            vec![Obstacle::Box { lo: vec![0.45, 0.0], hi: vec![0.55, 1.0] }],
        )
        .unwrap();
        assert!(matches!(grid_path_oracle(&wall, &[0.2, 0.2], &[0.8, 0.2], 0.05), Err(PnoError::Unreachable(_))));
    }
}
