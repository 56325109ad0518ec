//! Closed-form finite-time quantities for the PNO roadmap: the ball tiling
//! along an optimal path, coverage probabilities, the Chebyshev factor, the
//! near-optimality bound, the runtime `delta_n`, and the stopping iteration.
//!
//! Logarithms are natural throughout.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PnoError, Result};
use crate::geometry::{ball_volume, unit_ball_volume};
use crate::planner::connection_radius_at;

/// `(d - 1) / (d + 2)`, the coefficient of `lambda^2` in the mean bias.
pub fn bias_coefficient(d: usize) -> f64 {
    (d as f64 - 1.0) / (d as f64 + 2.0)
}

/// `M + 1` balls of radius `beta` spaced `eps` apart along a path of length
/// `i_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallTiling {
    pub m: usize,
    pub beta: f64,
    pub eps: f64,
    pub lambda: f64,
    pub i_star: f64,
    /// Set when `eps > i_star`, so a single segment overshoots the path.
    pub short_path: bool,
}

impl BallTiling {
    pub fn new(eps: f64, lambda: f64, i_star: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("eps must be positive, got {eps}"));
        }
        if !(lambda > 0.0 && lambda <= 0.5) {
            return invalid(format!("lambda must lie in (0, 1/2], got {lambda}"));
        }
        if !(i_star > 0.0 && i_star.is_finite()) {
            return invalid(format!("optimal length must be positive, got {i_star}"));
        }
        let m = ((i_star / eps).ceil() as usize).max(1);
        Ok(BallTiling { m, beta: lambda * eps, eps, lambda, i_star, short_path: eps > i_star })
    }

    pub fn ball_count(&self) -> usize {
        self.m + 1
    }

    pub fn ball_volume(&self, d: usize) -> f64 {
        unit_ball_volume(d) * self.beta.powi(d as i32)
    }

    /// Centers `start + j eps u` for `j = 0..=m`, `u` the unit direction to `toward`.
    pub fn centers(&self, start: &[f64], toward: &[f64]) -> Result<Vec<Vec<f64>>> {
        if start.len() != toward.len() {
            return Err(PnoError::DimensionMismatch { expected: start.len(), got: toward.len() });
        }
        let len = crate::cspace::distance(start, toward);
        if len == 0.0 {
            return invalid("tiling direction is degenerate");
        }
        Ok((0..=self.m)
            .map(|j| {
                let s = j as f64 * self.eps / len;
                start.iter().zip(toward).map(|(a, b)| a + s * (b - a)).collect()
            })
            .collect())
    }
}

/// Tiling induced by the planner at sample count `n`: `eps = r_n / 2`,
/// `beta = lambda eps`, `m = ceil(i_star / eps)`.
pub fn tiling_from_planner(n: usize, d: usize, free_vol: f64, gamma: f64, i_star: f64, lambda: f64) -> Result<BallTiling> {
    if n < 2 {
        return invalid(format!("tiling needs n >= 2, got {n}"));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(free_vol > 0.0) {
        return invalid(format!("free volume must be positive, got {free_vol}"));
    }
    if !(gamma > 0.0) {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    BallTiling::new(connection_radius_at(gamma, n as f64, d) / 2.0, lambda, i_star)
}

/// `(1 - (1 - p)^n)^balls` via `log1p`/`expm1`.
fn coverage_from_ratio(n: f64, balls: f64, p: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    let miss = (n * (-p).ln_1p()).exp();
    let hit = -(n * (-p).ln_1p()).exp_m1();
    if hit <= 0.0 {
        return if miss >= 1.0 { 0.0 } else { (1.0 - miss).powf(balls) };
    }
    (balls * hit.ln()).exp().clamp(0.0, 1.0)
}

fn ball_ratio(ball_vol: f64, free_vol: f64) -> Result<f64> {
    if !(free_vol > 0.0) {
        return invalid(format!("free volume must be positive, got {free_vol}"));
    }
    if !(ball_vol > 0.0) {
        return invalid(format!("ball volume must be positive, got {ball_vol}"));
    }
    if ball_vol > free_vol {
        return invalid(format!("ball volume {ball_vol} exceeds free volume {free_vol}"));
    }
    Ok(ball_vol / free_vol)
}

/// Probability that each of `m + 1` disjoint balls of volume `ball_vol`
/// receives at least one of `n` uniform samples from a free space of volume
/// `free_vol`: `(1 - (1 - |B| / |C_free|)^n)^(m + 1)`.
pub fn coverage_probability(n: u64, m: usize, ball_vol: f64, free_vol: f64) -> Result<f64> {
    if n == 0 {
        return invalid("coverage needs at least one sample");
    }
    let p = ball_ratio(ball_vol, free_vol)?;
    Ok(coverage_from_ratio(n as f64, m as f64 + 1.0, p))
}

/// Coverage with a real-valued ball count, for comparing against the
/// continuous closed form in [`coverage_probability_prmstar`].
pub fn coverage_probability_real(n: f64, balls: f64, ball_vol: f64, free_vol: f64) -> Result<f64> {
    if !(n >= 1.0) || !(balls >= 0.0) {
        return invalid(format!("need n >= 1 and balls >= 0, got n = {n}, balls = {balls}"));
    }
    let p = ball_ratio(ball_vol, free_vol)?;
    Ok(coverage_from_ratio(n, balls, p))
}

/// Coverage of the PRM* tiling at the exact connection-constant bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrmStarCoverage {
    pub probability: f64,
    /// Per-ball hit fraction `(1 + 1/d) ln n / n`.
    pub a: f64,
    /// Real-valued ball count `(i_star / 2) b^(-1/d) + 1`.
    pub exponent: f64,
    /// Set when `a >= 1`; the probability is then reported as 0.
    pub degenerate: bool,
}

/// `(1 - (1 - a)^n)^((i_star / 2) b^(-1/d) + 1)` with `a = (1 + 1/d) ln n / n`
/// and `b = (1 + 1/d) |C_free| ln n / (V_d n)`.
pub fn coverage_probability_prmstar(n: u64, d: usize, i_star: f64, free_vol: f64) -> Result<PrmStarCoverage> {
    if n < 2 {
        return invalid(format!("coverage needs n >= 2, got {n}"));
    }
    if d == 0 || !(i_star > 0.0) || !(free_vol > 0.0) {
        return invalid("need d >= 1, positive optimal length and positive free volume");
    }
    let (nf, df) = (n as f64, d as f64);
    let a = (1.0 + 1.0 / df) * nf.ln() / nf;
    let b = (1.0 + 1.0 / df) * free_vol * nf.ln() / (unit_ball_volume(d) * nf);
    let exponent = i_star / 2.0 * b.powf(-1.0 / df) + 1.0;
    if a >= 1.0 {
        return Ok(PrmStarCoverage { probability: 0.0, a, exponent, degenerate: true });
    }
    Ok(PrmStarCoverage { probability: coverage_from_ratio(nf, exponent, a), a, exponent, degenerate: false })
}

/// Smallest `delta` for which the Chebyshev factor is defined.
pub fn min_delta(tiling: &BallTiling, d: usize) -> f64 {
    bias_coefficient(d) * tiling.lambda * tiling.lambda
}

/// `chi = (4 lambda^2 eps^2 / (d + 2)) / (I*^2 (delta - ((d-1)/(d+2)) lambda^2)^2)`.
pub fn chebyshev_chi(delta: f64, tiling: &BallTiling, d: usize) -> Result<f64> {
    let min = min_delta(tiling, d);
    if !(delta > min) {
        return Err(PnoError::DegenerateDelta { delta, min_delta: min });
    }
    let (l, e, i) = (tiling.lambda, tiling.eps, tiling.i_star);
    let gap = delta - min;
    Ok((4.0 * l * l * e * e / (d as f64 + 2.0)) / (i * i * gap * gap))
}

/// Near-optimality bound `P(|I_n - I*| >= delta I*) <= 1 + P(cover) (chi - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnoBound {
    pub coverage: f64,
    pub chi: f64,
    /// Unclamped `1 + coverage (chi - 1)`.
    pub raw: f64,
    pub bound: f64,
    pub clamped: bool,
    /// Set when the bound is 1 and therefore says nothing.
    pub vacuous: bool,
}

impl PnoBound {
    pub fn from_parts(coverage: f64, chi: f64) -> Self {
        let raw = 1.0 + coverage * (chi - 1.0);
        let bound = raw.clamp(0.0, 1.0);
        PnoBound { coverage, chi, raw, bound, clamped: bound != raw, vacuous: bound >= 1.0 }
    }
}

fn tiling_coverage(n: u64, tiling: &BallTiling, d: usize, free_vol: f64) -> Result<f64> {
    coverage_probability(n, tiling.m, tiling.ball_volume(d), free_vol)
}

pub fn pno_bound(n: u64, tiling: &BallTiling, delta: f64, d: usize, free_vol: f64) -> Result<PnoBound> {
    let chi = chebyshev_chi(delta, tiling, d)?;
    let coverage = tiling_coverage(n, tiling, d, free_vol)?;
    Ok(PnoBound::from_parts(coverage, chi))
}

/// `delta_n` for a given coverage probability.
pub fn delta_bound_from_coverage(tiling: &BallTiling, d: usize, p_success: f64, coverage: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_success) {
        return invalid(format!("success probability must lie in [0, 1), got {p_success}"));
    }
    if !(p_success < coverage) {
        return Err(PnoError::UnattainableConfidence { p_success, coverage });
    }
    let (l, e, i) = (tiling.lambda, tiling.eps, tiling.i_star);
    let root = (1.0 / ((d as f64 + 2.0) * (1.0 - p_success / coverage))).sqrt();
    Ok(2.0 * l * e / i * root + min_delta(tiling, d))
}

/// Runtime multiplicative bound `delta_n` holding with probability `p_success`:
/// `(2 lambda eps / I*) sqrt(1 / ((d + 2)(1 - P_success / P(cover)))) + ((d-1)/(d+2)) lambda^2`.
pub fn delta_bound(n: u64, tiling: &BallTiling, d: usize, p_success: f64, free_vol: f64) -> Result<f64> {
    let coverage = tiling_coverage(n, tiling, d, free_vol)?;
    delta_bound_from_coverage(tiling, d, p_success, coverage)
}

/// `I_n / (1 + delta)`: pessimistic optimal-length estimate from a solution,
/// meaningful once the clearance iteration has been reached.
pub fn optimal_length_estimate(i_n: f64, delta: f64) -> Result<f64> {
    if !(delta > -1.0) {
        return invalid(format!("delta must exceed -1, got {delta}"));
    }
    Ok(i_n / (1.0 + delta))
}

/// Inputs of the stopping rule at clearance `eps0` with `lambda = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingSpec {
    pub eps0: f64,
    pub delta_des: f64,
    pub p_des: f64,
    pub m0: usize,
    pub beta0: f64,
    pub i_star0: f64,
}

impl StoppingSpec {
    /// `m0 = ceil(i_star0 / eps0)`, `beta0 = eps0 / 2`.
    pub fn new(eps0: f64, delta_des: f64, p_des: f64, i_star0: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return invalid(format!("eps0 must be positive, got {eps0}"));
        }
        if !(i_star0 > 0.0 && i_star0.is_finite()) {
            return invalid(format!("optimal length must be positive, got {i_star0}"));
        }
        if !(p_des > 0.0 && p_des < 1.0) {
            return invalid(format!("P_DES must lie in (0, 1), got {p_des}"));
        }
        let floor = stopping_delta_floor(d);
        if !(delta_des > floor) {
            return Err(PnoError::InfeasibleSpec {
                reason: format!("delta_des must exceed (d-1)/(4(d+2)) = {floor}"),
                min_delta_des: floor,
            });
        }
        let m0 = ((i_star0 / eps0).ceil() as usize).max(1);
        Ok(StoppingSpec { eps0, delta_des, p_des, m0, beta0: eps0 / 2.0, i_star0 })
    }

    pub fn tiling(&self) -> BallTiling {
        BallTiling { m: self.m0, beta: self.beta0, eps: self.eps0, lambda: 0.5, i_star: self.i_star0, short_path: self.eps0 > self.i_star0 }
    }
}

/// `(d - 1) / (4 (d + 2))`.
pub fn stopping_delta_floor(d: usize) -> f64 {
    bias_coefficient(d) / 4.0
}

/// Smallest `delta_des` making `psi < 1` for the given `m0` and `p_des`.
pub fn feasible_delta_des(d: usize, m0: usize, p_des: f64) -> f64 {
    stopping_delta_floor(d) + 1.0 / (m0 as f64 * ((d as f64 + 2.0) * (1.0 - p_des)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingResult {
    pub n0: u64,
    pub psi: f64,
    /// `|B_beta0| / |C_free|`.
    pub hit_probability: f64,
    pub m0: usize,
    pub min_delta_des: f64,
}

/// Iteration `n0` after which the roadmap is `delta_des`-bounded with
/// probability `p_des`:
/// `ceil(ln(1 - psi^(1/M0)) / ln(1 - |B_beta0| / |C_free|))` with
/// `psi = P_DES / (1 - 1 / (M0^2 (d + 2) (delta_des - (d-1)/(4(d+2)))^2))`.
///
/// The exponent is `M0`, so `n0` guarantees `(1 - (1 - p)^n0)^M0 >= psi`.
pub fn stopping_iteration(spec: &StoppingSpec, d: usize, free_vol: f64) -> Result<StoppingResult> {
    let min_delta_des = feasible_delta_des(d, spec.m0, spec.p_des);
    let gap = spec.delta_des - stopping_delta_floor(d);
    let inner = 1.0 - 1.0 / ((spec.m0 as f64).powi(2) * (d as f64 + 2.0) * gap * gap);
    if !(inner > 0.0) {
        return Err(PnoError::InfeasibleSpec {
            reason: format!("M0^2 (d+2)(delta_des - (d-1)/(4(d+2)))^2 must exceed 1 (factor {inner})"),
            min_delta_des,
        });
    }
    let psi = spec.p_des / inner;
    if !(psi < 1.0) {
        return Err(PnoError::InfeasibleSpec { reason: format!("psi = {psi} must be below 1"), min_delta_des });
    }
    let hit_probability = ball_ratio(ball_volume(d, spec.beta0)?, free_vol)?;
    let m0 = spec.m0 as f64;
    // 1 - psi^(1/M0), kept accurate when psi^(1/M0) is close to 1
    let tail = -(psi.ln() / m0).exp_m1();
    let n0 = if hit_probability >= 1.0 { 1.0 } else { (tail.ln() / (-hit_probability).ln_1p()).ceil().max(1.0) };
    Ok(StoppingResult { n0: n0 as u64, psi, hit_probability, m0: spec.m0, min_delta_des })
}

/// Smallest `n` with `r_m <= 2 eps0` for every `m >= n`, i.e. from which the
/// tiling clearance `eps_n = r_n / 2` stays within `eps0`.
pub fn clearance_iteration(eps0: f64, gamma: f64, d: usize) -> Result<u64> {
    if !(eps0 > 0.0) || !(gamma > 0.0) || d == 0 {
        return invalid("need positive eps0, positive gamma and d >= 1");
    }
    let target = 2.0 * eps0;
    let ok = |n: u64| connection_radius_at(gamma, n as f64, d) <= target;
    // r_n peaks at n = 3 among integers and decreases afterwards
    if ok(3) {
        return Ok(2);
    }
    let mut lo = 3u64;
    let mut hi = 6u64;
    while !ok(hi) {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| PnoError::InvalidArgument("clearance iteration overflows".into()))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Where the optimal length fed into the bounds came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IStarSource {
    Explicit,
    /// `I_n / (1 + delta)` from the current solution.
    SolutionEstimate,
    /// Straight-line start-goal distance; optimistic whenever obstacles intervene.
    StraightLine,
}

/// Priority: explicit value, then solution estimate, then straight line.
pub fn resolve_i_star(explicit: Option<f64>, solution: Option<f64>, delta: f64, straight_line: f64) -> Result<(f64, IStarSource)> {
    if let Some(v) = explicit {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("optimal length must be positive, got {v}"));
        }
        return Ok((v, IStarSource::Explicit));
    }
    if let Some(i_n) = solution.filter(|v| v.is_finite() && *v > 0.0) {
        return Ok((optimal_length_estimate(i_n, delta)?, IStarSource::SolutionEstimate));
    }
    if !(straight_line > 0.0) {
        return invalid("start and goal coincide; no optimal length to analyse");
    }
    Ok((straight_line, IStarSource::StraightLine))
}

/// Every bound evaluated at one planner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnoReport {
    pub n: u64,
    pub d: usize,
    pub free_volume: f64,
    pub gamma: f64,
    pub delta: f64,
    pub p_success: f64,
    pub tiling: BallTiling,
    pub i_star: f64,
    pub i_star_source: IStarSource,
    pub coverage: f64,
    pub chi: f64,
    pub thm1_raw: f64,
    pub thm1_bound: f64,
    pub thm1_clamped: bool,
    pub thm1_vacuous: bool,
    /// `None` when `p_success` is not below the coverage probability.
    pub delta_n: Option<f64>,
    pub delta_n_error: Option<String>,
    /// Solution length and `I_n / (1 + delta)` when a path was found.
    pub i_n: Option<f64>,
    pub i_star_estimate: Option<f64>,
}

/// Inputs to [`PnoReport::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportInputs {
    pub n: u64,
    pub d: usize,
    pub free_volume: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub p_success: f64,
    pub i_star: f64,
    pub i_star_source: IStarSource,
    pub i_n: Option<f64>,
}

impl PnoReport {
    /// Fails on a degenerate `delta`; an unattainable `p_success` is recorded
    /// in `delta_n_error` instead.
    pub fn evaluate(inp: &ReportInputs) -> Result<Self> {
        if !(0.0..1.0).contains(&inp.p_success) {
            return invalid(format!("success probability must lie in [0, 1), got {}", inp.p_success));
        }
        let tiling = tiling_from_planner(inp.n as usize, inp.d, inp.free_volume, inp.gamma, inp.i_star, inp.lambda)?;
        let b = pno_bound(inp.n, &tiling, inp.delta, inp.d, inp.free_volume)?;
        let (delta_n, delta_n_error) = match delta_bound_from_coverage(&tiling, inp.d, inp.p_success, b.coverage) {
            Ok(v) => (Some(v), None),
            Err(e @ PnoError::UnattainableConfidence { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let i_star_estimate = match inp.i_n {
            Some(v) if v.is_finite() => Some(optimal_length_estimate(v, inp.delta)?),
            _ => None,
        };
        Ok(PnoReport {
            n: inp.n,
            d: inp.d,
            free_volume: inp.free_volume,
            gamma: inp.gamma,
            delta: inp.delta,
            p_success: inp.p_success,
            tiling,
            i_star: inp.i_star,
            i_star_source: inp.i_star_source,
            coverage: b.coverage,
            chi: b.chi,
            thm1_raw: b.raw,
            thm1_bound: b.bound,
            thm1_clamped: b.clamped,
            thm1_vacuous: b.vacuous,
            delta_n,
            delta_n_error,
            i_n: inp.i_n.filter(|v| v.is_finite()),
            i_star_estimate,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    const CSV_HEADER: [&'static str; 17] = [
        "n", "d", "m", "eps", "beta", "lambda", "i_star", "i_star_source", "delta", "p_success", "coverage", "chi",
        "thm1_bound", "thm1_vacuous", "delta_n", "i_n", "i_star_estimate",
    ];

    /// One header row plus one data row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.write_record([
            self.n.to_string(),
            self.d.to_string(),
            self.tiling.m.to_string(),
            self.tiling.eps.to_string(),
            self.tiling.beta.to_string(),
            self.tiling.lambda.to_string(),
            self.i_star.to_string(),
            serde_json::to_value(self.i_star_source).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            self.delta.to_string(),
            fmt_prob(self.p_success),
            fmt_prob(self.coverage),
            self.chi.to_string(),
            fmt_prob(self.thm1_bound),
            self.thm1_vacuous.to_string(),
            opt(self.delta_n),
            opt(self.i_n),
            opt(self.i_star_estimate),
        ])?;
        out.flush()?;
        Ok(())
    }
}

/// Formats with `digits` significant digits, positional when the exponent allows.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    // exponent after rounding, so 0.99999.. lands on 1.0
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = digits as i32 - 1 - exp;
    if (0..=17).contains(&decimals) {
        format!("{:.*}", decimals as usize, x)
    } else {
        sci
    }
}

/// Probability formatting used by every CSV/JSON artifact.
pub fn fmt_prob(p: f64) -> String {
    fmt_sig(p, 9)
}
