//! Analytic configuration spaces: an axis-aligned box minus disjoint box and
//! ball obstacles. Obstacles are closed, so touching one counts as collision.

use std::ops::Deref;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PnoError, Result};
use crate::geometry::unit_ball_volume;

/// Default cap on consecutive rejections in [`Scene::sample_free`].
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Self {
        Configuration(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        distance(&self.0, other)
    }
}

impl Deref for Configuration {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance2(a, b).sqrt()
}

#[inline]
pub fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= *l && *x <= *h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Obstacle {
    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Box { lo, .. } => lo.len(),
            Obstacle::Ball { center, .. } => center.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Obstacle::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Obstacle::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, q: &[f64]) -> bool {
        match self {
            Obstacle::Box { lo, hi } => q.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| *x >= *l && *x <= *h),
            Obstacle::Ball { center, radius } => distance2(q, center) <= radius * radius,
        }
    }

    /// Euclidean distance from `q` to the obstacle (0 inside).
    pub fn distance_to(&self, q: &[f64]) -> f64 {
        match self {
            Obstacle::Box { lo, hi } => q
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| {
                    let e = (l - x).max(0.0).max(x - h);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            Obstacle::Ball { center, radius } => (distance(q, center) - radius).max(0.0),
        }
    }

    /// True only when the segment provably misses the obstacle.
    fn clear_of_segment(&self, a: &[f64], b: &[f64]) -> bool {
        match self {
            Obstacle::Ball { center, radius } => segment_point_distance(a, b, center) > *radius,
            Obstacle::Box { lo, hi } => {
                // separated along some axis
                (0..lo.len()).any(|k| a[k].max(b[k]) < lo[k] || a[k].min(b[k]) > hi[k])
            }
        }
    }

    fn inside_bounds(&self, bounds: &Bounds) -> bool {
        match self {
            Obstacle::Box { lo, hi } => (0..lo.len()).all(|k| lo[k] >= bounds.lo[k] && hi[k] <= bounds.hi[k]),
            Obstacle::Ball { center, radius } => {
                (0..center.len()).all(|k| center[k] - radius >= bounds.lo[k] && center[k] + radius <= bounds.hi[k])
            }
        }
    }

    /// Whether the two obstacles share positive volume.
    fn overlaps(&self, other: &Obstacle) -> bool {
        match (self, other) {
            (Obstacle::Box { lo: l1, hi: h1 }, Obstacle::Box { lo: l2, hi: h2 }) => {
                (0..l1.len()).all(|k| l1[k] < h2[k] && l2[k] < h1[k])
            }
            (Obstacle::Ball { center: c1, radius: r1 }, Obstacle::Ball { center: c2, radius: r2 }) => {
                distance(c1, c2) < r1 + r2
            }
            (b @ Obstacle::Box { .. }, Obstacle::Ball { center, radius })
            | (Obstacle::Ball { center, radius }, b @ Obstacle::Box { .. }) => b.distance_to(center) < *radius,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Obstacle::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err("box lo/hi lengths differ".into());
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err("box must have lo < hi on every axis".into());
                }
            }
            Obstacle::Ball { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(format!("ball radius must be positive, got {radius}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err("ball center must be finite".into());
                }
            }
        }
        Ok(())
    }
}

/// Distance from point `p` to segment `[a, b]`.
pub fn segment_point_distance(a: &[f64], b: &[f64], p: &[f64]) -> f64 {
    let ab2 = distance2(a, b);
    if ab2 == 0.0 {
        return distance(a, p);
    }
    let t = a
        .iter()
        .zip(b)
        .zip(p)
        .map(|((a, b), p)| (p - a) * (b - a))
        .sum::<f64>()
        / ab2;
    let t = t.clamp(0.0, 1.0);
    a.iter()
        .zip(b)
        .zip(p)
        .map(|((a, b), p)| {
            let x = a + t * (b - a) - p;
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneFile {
    dimension: usize,
    bounds: Bounds,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
}

/// Bounding box minus pairwise-disjoint obstacles. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    dim: usize,
    bounds: Bounds,
    obstacles: Vec<Obstacle>,
    rejection_cap: u64,
}

impl Scene {
    /// Validates every invariant; failures name the offending obstacle.
    pub fn new(bounds: Bounds, obstacles: Vec<Obstacle>) -> Result<Self> {
        let dim = bounds.lo.len();
        if dim == 0 {
            return invalid("scene dimension must be at least 1");
        }
        if bounds.hi.len() != dim {
            return invalid("bounds lo/hi lengths differ");
        }
        if bounds.lo.iter().zip(&bounds.hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return invalid("bounds must have finite lo < hi on every axis");
        }
        for (index, ob) in obstacles.iter().enumerate() {
            if ob.dim() != dim {
                return Err(PnoError::InvalidScene {
                    index,
                    reason: format!("dimension {} does not match scene dimension {dim}", ob.dim()),
                });
            }
            ob.validate().map_err(|reason| PnoError::InvalidScene { index, reason })?;
            if !ob.inside_bounds(&bounds) {
                return Err(PnoError::InvalidScene { index, reason: "obstacle extends outside the bounds".into() });
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                if obstacles[i].overlaps(&obstacles[j]) {
                    return Err(PnoError::UnsupportedScene { first: i, second: j });
                }
            }
        }
        Ok(Scene { dim, bounds, obstacles, rejection_cap: DEFAULT_REJECTION_CAP })
    }

    /// Obstacle-free axis-aligned box.
    pub fn empty(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Scene::new(Bounds { lo, hi }, Vec::new())
    }

    /// `[0, 1]^d` without obstacles.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Scene::empty(vec![0.0; d], vec![1.0; d])
    }

    pub fn with_rejection_cap(mut self, cap: u64) -> Self {
        self.rejection_cap = cap.max(1);
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        if file.bounds.lo.len() != file.dimension {
            return invalid(format!(
                "declared dimension {} but bounds have {} axes",
                file.dimension,
                file.bounds.lo.len()
            ));
        }
        Scene::new(file.bounds, file.obstacles)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Scene::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = SceneFile { dimension: self.dim, bounds: self.bounds.clone(), obstacles: self.obstacles.clone() };
        serde_json::to_string_pretty(&file).expect("scene serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn rejection_cap(&self) -> u64 {
        self.rejection_cap
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(PnoError::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn is_free_unchecked(&self, q: &[f64]) -> bool {
        self.bounds.contains(q) && !self.obstacles.iter().any(|o| o.contains(q))
    }

    /// Inside the bounds and outside every (closed) obstacle.
    pub fn is_free(&self, q: &[f64]) -> Result<bool> {
        self.check_dim(q)?;
        Ok(self.is_free_unchecked(q))
    }

    /// Samples `[a, b]` at spacing at most `step`, endpoints included, and
    /// reports whether every sample is free. Resolution-complete only.
    pub fn segment_free(&self, a: &[f64], b: &[f64], step: f64) -> Result<bool> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        if !(step > 0.0) {
            return invalid(format!("collision step must be positive, got {step}"));
        }
        Ok(self.segment_free_unchecked(a, b, step))
    }

    pub(crate) fn segment_free_unchecked(&self, a: &[f64], b: &[f64], step: f64) -> bool {
        // canonical endpoint order keeps the sample set symmetric in (a, b)
        let (a, b) = if a.partial_cmp(b) == Some(std::cmp::Ordering::Greater) { (b, a) } else { (a, b) };
        // the box is convex, so sampled points lie inside iff both endpoints do
        if !self.bounds.contains(a) || !self.bounds.contains(b) {
            return false;
        }
        let suspects: Vec<&Obstacle> = self.obstacles.iter().filter(|o| !o.clear_of_segment(a, b)).collect();
        if suspects.is_empty() {
            return true;
        }
        let len = distance(a, b);
        let k = ((len / step).ceil() as usize).max(1);
        let mut p = vec![0.0; self.dim];
        for i in 0..=k {
            let t = i as f64 / k as f64;
            for (j, x) in p.iter_mut().enumerate() {
                *x = a[j] + t * (b[j] - a[j]);
            }
            if suspects.iter().any(|o| o.contains(&p)) {
                return false;
            }
        }
        true
    }

    /// `|bounds| - sum |obstacle|`, clamped at zero.
    pub fn free_volume(&self) -> f64 {
        (self.bounds.volume() - self.obstacles.iter().map(Obstacle::volume).sum::<f64>()).max(0.0)
    }

    /// Uniform draw from the free space by rejection; returns the sample and
    /// the number of rejected candidates.
    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Configuration, u64)> {
        let mut q = vec![0.0; self.dim];
        let rejected = self.fill_free(rng, &mut q)?;
        Ok((Configuration(q), rejected))
    }

    pub(crate) fn fill_free<R: Rng + ?Sized>(&self, rng: &mut R, q: &mut [f64]) -> Result<u64> {
        let mut rejected = 0u64;
        loop {
            for (k, x) in q.iter_mut().enumerate() {
                let u: f64 = rng.random();
                *x = self.bounds.lo[k] + u * (self.bounds.hi[k] - self.bounds.lo[k]);
            }
            if !self.obstacles.iter().any(|o| o.contains(q)) {
                return Ok(rejected);
            }
            rejected += 1;
            if rejected >= self.rejection_cap {
                return Err(PnoError::SamplingStarved { rejections: rejected });
            }
        }
    }

    /// Whether the closed ball `B(center, radius)` lies in the free space.
    pub fn ball_is_free(&self, center: &[f64], radius: f64) -> bool {
        center.len() == self.dim
            && (0..self.dim).all(|k| center[k] - radius >= self.bounds.lo[k] && center[k] + radius <= self.bounds.hi[k])
            && self.obstacles.iter().all(|o| o.distance_to(center) >= radius)
    }
}
