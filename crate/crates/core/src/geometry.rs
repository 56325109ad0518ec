//! Hyperball constants, sine-power integrals, uniform ball sampling and the
//! closed-form moments of random segments between consecutive tiling balls.
//!
//! All moment routines take a [`MomentInputs`]: `m + 1` balls of radius
//! `beta` whose centers sit `eps` apart on a line.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `V_d = pi^(d/2) / Gamma(d/2 + 1)`, the volume of the unit `d`-ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    (half * PI.ln() - libm::lgamma(half + 1.0)).exp()
}

/// Volume of a `d`-ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> Result<f64> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(r >= 0.0) {
        return invalid(format!("radius must be non-negative, got {r}"));
    }
    Ok(unit_ball_volume(d) * r.powi(d as i32))
}

/// `S_d = int_0^pi sin^d(theta) dtheta` via `S_d = (d-1)/d * S_(d-2)`.
pub fn sine_power_integral(d: usize) -> f64 {
    let mut s = if d % 2 == 0 { PI } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        s *= (k - 1) as f64 / k as f64;
        k += 2;
    }
    s
}

/// `S_(d-2)` expressed through ball volumes: `d V_d / ((d-1) V_(d-1))`.
///
/// Requires `d >= 2`.
pub fn sine_power_integral_from_volumes(d: usize) -> Result<f64> {
    if d < 2 {
        return invalid("volume-ratio form needs d >= 2");
    }
    let log_ratio = unit_ball_volume(d).ln() - unit_ball_volume(d - 1).ln();
    Ok(d as f64 / (d - 1) as f64 * log_ratio.exp())
}

/// Uniform point in the closed ball `B(center, radius)`.
///
/// Isotropic Gaussian direction scaled by `radius * U^(1/d)`.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return invalid(format!("ball radius must be positive, got {radius}"));
    }
    if center.is_empty() {
        return invalid("ball center must have at least one coordinate");
    }
    let mut out = vec![0.0; center.len()];
    fill_in_ball(rng, center, radius, &mut out);
    Ok(out)
}

/// Allocation-free form of [`sample_in_ball`]; `radius` may be zero.
pub(crate) fn fill_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = center.len();
    let mut norm2 = 0.0;
    loop {
        for x in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = g;
            norm2 += g * g;
        }
        if norm2 > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / d as f64) / norm2.sqrt();
    for (x, c) in out.iter_mut().zip(center) {
        *x = c + *x * scale;
    }
}

/// Parameters of a collinear ball chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentInputs {
    pub d: usize,
    pub eps: f64,
    pub beta: f64,
    pub m: usize,
}

impl MomentInputs {
    /// Validates `d >= 1`, `eps > 0`, `0 <= beta <= eps/2`, `m >= 1`.
    ///
    /// `beta = 0` is accepted as the degenerate chain of points.
    pub fn new(d: usize, eps: f64, beta: f64, m: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return invalid(format!("ball separation must be positive, got {eps}"));
        }
        if !(beta >= 0.0) || beta > eps / 2.0 {
            return invalid(format!("ball radius {beta} must lie in [0, eps/2 = {}]", eps / 2.0));
        }
        if m == 0 {
            return invalid("segment count must be at least 1");
        }
        Ok(MomentInputs { d, eps, beta, m })
    }

    /// From the radius ratio `lambda = beta / eps`.
    pub fn from_lambda(d: usize, eps: f64, lambda: f64, m: usize) -> Result<Self> {
        Self::new(d, eps, lambda * eps, m)
    }

    pub fn lambda(&self) -> f64 {
        self.beta / self.eps
    }

    fn dim(&self) -> f64 {
        self.d as f64
    }
}

/// Second-order approximation of `E[I_1] = eps + (d-1) beta^2 / ((d+2) eps)`.
pub fn segment_mean(mi: &MomentInputs) -> f64 {
    let d = mi.dim();
    mi.eps + (d - 1.0) * mi.beta * mi.beta / ((d + 2.0) * mi.eps)
}

/// `E[I_1^2] = eps^2 + 2 d beta^2 / (d+2)`; exact.
pub fn segment_second_moment(mi: &MomentInputs) -> f64 {
    let d = mi.dim();
    mi.eps * mi.eps + 2.0 * d * mi.beta * mi.beta / (d + 2.0)
}

/// `E[I_1 I_2] ~ eps^2 + (2d-3) beta^2 / (d+2)` for two segments sharing a
/// middle ball, centers collinear.
pub fn segment_cross_moment(mi: &MomentInputs) -> f64 {
    let d = mi.dim();
    mi.eps * mi.eps + (2.0 * d - 3.0) * mi.beta * mi.beta / (d + 2.0)
}

/// `M * E[I_1]`.
pub fn path_mean(mi: &MomentInputs) -> f64 {
    mi.m as f64 * segment_mean(mi)
}

/// `M E[I_1^2] + (2M-2) E[I_1 I_2] + (2-3M) E[I_1]^2`.
///
/// Keeps the fourth-order residue that [`path_variance_simple`] drops, so it
/// can go negative for long chains with fat balls. The `eps^2` parts of the
/// three moments cancel exactly and are removed before combining.
pub fn path_variance_full(mi: &MomentInputs) -> f64 {
    let m = mi.m as f64;
    let d = mi.dim();
    let b2 = mi.beta * mi.beta;
    let c = (d - 1.0) / (d + 2.0);
    let second = 2.0 * d * b2 / (d + 2.0);
    let cross = (2.0 * d - 3.0) * b2 / (d + 2.0);
    let mean_sq = 2.0 * c * b2 + c * c * b2 * b2 / (mi.eps * mi.eps);
    m * second + (2.0 * m - 2.0) * cross + (2.0 - 3.0 * m) * mean_sq
}

/// `2 beta^2 / (d+2)`. Independent of the segment count and of the path length.
pub fn path_variance_simple(mi: &MomentInputs) -> f64 {
    2.0 * mi.beta * mi.beta / (mi.dim() + 2.0)
}
