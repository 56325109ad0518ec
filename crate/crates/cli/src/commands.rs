use std::path::Path;

use serde_json::json;

use pno_core::analysis::{
    bias_coefficient, clearance_iteration, coverage_probability, fmt_prob, resolve_i_star, stopping_iteration,
    BallTiling, IStarSource, PnoReport, ReportInputs, StoppingSpec,
};
use pno_core::cspace::distance;
use pno_core::geometry::{
    ball_volume, path_mean, path_variance_full, path_variance_simple, segment_cross_moment, segment_second_moment, MomentInputs,
};
use pno_core::oracles::{mc_coverage, mc_path_stats, mc_segment_moments, rel_error_pct, McEstimate};
use pno_core::planner::export::{write_edges_csv, write_path_csv, write_vertices_csv};
use pno_core::planner::spanner::{audit_stretch, spanner_filter};
use pno_core::planner::{build_roadmap, gamma_pno, ConnectionMode, PlannerParams};
use pno_core::rng::derive_seed;
use pno_core::{PnoError, Result, Scene};

use crate::output::Artifacts;
use crate::{CoverageArgs, MomentsArgs, Outcome, PlanArgs, SpannerArgs, StoppingArgs};

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(PnoError::InvalidArgument(msg.into()))
}

fn load_scene(path: &Path) -> Result<Scene> {
    Scene::from_json_file(path).map_err(|e| match e {
        PnoError::Io(m) => PnoError::InvalidArgument(format!("cannot read scene {}: {m}", path.display())),
        other => other,
    })
}

fn free_point(name: &str, p: &[f64], scene: &Scene) -> Result<Vec<f64>> {
    if p.len() != scene.dim() {
        return bad(format!("--{name} needs {} coordinates, got {}", scene.dim(), p.len()));
    }
    if !scene.is_free(p)? {
        return Err(PnoError::InvalidQuery(format!("{name} configuration is in collision")));
    }
    Ok(p.to_vec())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return bad(format!("--lambda must lie in (0, 0.5], got {lambda}"));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return bad(format!("--{name} must lie in [0, 1), got {p}"));
    }
    Ok(())
}

fn csv_bytes<F>(header: &[&str], rows: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        rows(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

pub fn plan(a: &PlanArgs) -> Result<Outcome> {
    let scene = load_scene(&a.scene)?;
    let d = scene.dim();
    let start = free_point("start", &a.start, &scene)?;
    let goal = free_point("goal", &a.goal, &scene)?;
    let mode: ConnectionMode = a.mode.parse()?;
    if a.n < 2 {
        return bad(format!("--n must be at least 2, got {}", a.n));
    }
    check_lambda(a.lambda)?;
    check_probability("psuccess", a.psuccess)?;
    if let Some(v) = a.istar {
        if !(v > 0.0 && v.is_finite()) {
            return bad(format!("--istar must be positive, got {v}"));
        }
    } else if start == goal {
        return bad("start equals goal; pass --istar to evaluate the bounds");
    }
    let min_delta = bias_coefficient(d) * a.lambda * a.lambda;
    if !(a.delta > min_delta) {
        return Err(PnoError::DegenerateDelta { delta: a.delta, min_delta });
    }
    let params = PlannerParams::for_scene(&scene, mode, a.resolution, a.seed)?;

    let rm = build_roadmap(&scene, &params, a.n)?;
    let res = rm.query(&scene, &params, &start, &goal)?;
    let (i_star, source) =
        resolve_i_star(a.istar, res.solved.then_some(res.length), a.delta, distance(&start, &goal))?;
    let report = PnoReport::evaluate(&ReportInputs {
        n: a.n as u64,
        d,
        free_volume: scene.free_volume(),
        gamma: params.gamma,
        lambda: a.lambda,
        delta: a.delta,
        p_success: a.psuccess,
        i_star,
        i_star_source: source,
        i_n: res.solved.then_some(res.length),
    })?;

    let mut out = Artifacts::create(&a.out)?;
    out.write_with("vertices.csv", |b| write_vertices_csv(&rm, b))?;
    out.write_with("edges.csv", |b| write_edges_csv(&rm, b))?;
    out.write_with("path.csv", |b| write_path_csv(&res, d, b))?;
    out.write("report.json", (report.to_json() + "\n").as_bytes())?;
    out.write_with("report.csv", |b| report.write_csv(b))?;
    out.finish("plan", a.seed, a, Some(&scene))?;

    println!("solved={} length={} edges={}", res.solved, res.length, rm.edge_count());
    println!("i_star={} source={}", i_star, source_name(source));
    println!(
        "coverage={} chi={} thm1_bound={} delta_n={}",
        fmt_prob(report.coverage),
        report.chi,
        fmt_prob(report.thm1_bound),
        report.delta_n.map(|v| v.to_string()).unwrap_or_else(|| "unattainable".into())
    );
    if report.thm1_vacuous {
        println!("note: the near-optimality bound is vacuous at this n");
    }
    if source == IStarSource::StraightLine {
        println!("note: optimal length taken from the straight line (optimistic)");
    }
    Ok(if res.solved { Outcome::Done } else { Outcome::Unsolved })
}

fn source_name(s: IStarSource) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn stopping(a: &StoppingArgs) -> Result<Outcome> {
    let scene = load_scene(&a.scene)?;
    let d = scene.dim();
    let free = scene.free_volume();
    let query = if a.start.is_empty() && a.goal.is_empty() {
        None
    } else {
        Some((free_point("start", &a.start, &scene)?, free_point("goal", &a.goal, &scene)?))
    };
    let (i_star0, source) = match (a.istar, &query) {
        (Some(v), _) => (v, IStarSource::Explicit),
        (None, Some((s, g))) => (distance(s, g), IStarSource::StraightLine),
        (None, None) => return bad("pass --istar or --start/--goal"),
    };
    if a.validate && query.is_none() {
        return bad("--validate needs --start and --goal");
    }
    if a.validate && a.trials == 0 {
        return bad("--trials must be positive");
    }
    let mode: ConnectionMode = a.mode.parse()?;
    let spec = StoppingSpec::new(a.eps0, a.delta_des, a.p_des, i_star0, d)?;
    let res = stopping_iteration(&spec, d, free)?;
    let gamma = gamma_pno(d, free)?.gamma;
    let clearance_n = clearance_iteration(a.eps0, gamma, d)?;
    let run_n = res.n0.max(clearance_n);
    let base = PlannerParams::for_scene(&scene, mode, a.resolution, a.seed)?;

    let mut summary = json!({
        "n0": res.n0,
        "psi": fmt_prob(res.psi),
        "hit_probability": fmt_prob(res.hit_probability),
        "m0": res.m0,
        "beta0": spec.beta0,
        "i_star0": i_star0,
        "i_star_source": source_name(source),
        "min_delta_des": res.min_delta_des,
        "clearance_n": clearance_n,
        "run_n": run_n,
    });
    let mut rows = Vec::new();
    if let Some((s, g)) = query.as_ref().filter(|_| a.validate) {
        let mut successes = 0u64;
        for t in 0..a.trials {
            let seed = derive_seed(a.seed, t);
            let params = PlannerParams { seed, ..base };
            let rm = build_roadmap(&scene, &params, run_n as usize)?;
            let q = rm.query(&scene, &params, s, g)?;
            let rel = (q.length - i_star0).abs() / i_star0;
            let ok = q.solved && rel <= a.delta_des;
            successes += u64::from(ok);
            rows.push((t, seed, q.solved, q.length, rel, ok));
        }
        let freq = successes as f64 / a.trials as f64;
        summary["trials"] = json!(a.trials);
        summary["success_frequency"] = json!(fmt_prob(freq));
        summary["passed"] = json!(freq >= a.p_des);
    }

    let mut out = Artifacts::create(&a.out)?;
    out.write("stopping.json", &json_bytes(&summary)?)?;
    if a.validate {
        let bytes = csv_bytes(&["trial", "seed", "solved", "length", "rel_error", "success"], |w| {
            for (t, seed, solved, len, rel, ok) in &rows {
                w.write_record([
                    t.to_string(),
                    seed.to_string(),
                    solved.to_string(),
                    len.to_string(),
                    rel.to_string(),
                    ok.to_string(),
                ])?;
            }
            Ok(())
        })?;
        out.write("validate.csv", &bytes)?;
    }
    out.finish("stopping", a.seed, a, Some(&scene))?;

    println!("n0={} psi={} hit_probability={}", res.n0, fmt_prob(res.psi), fmt_prob(res.hit_probability));
    println!("m0={} clearance_n={} run_n={}", res.m0, clearance_n, run_n);
    if let Some(f) = summary.get("success_frequency") {
        println!("success_frequency={} passed={}", f.as_str().unwrap_or(""), summary["passed"]);
    }
    Ok(Outcome::Done)
}

const MC_HEADER: [&str; 9] =
    ["quantity", "d", "lambda", "m", "trials", "closed_form", "mc_value", "std_err", "rel_error_pct"];

fn mc_record(quantity: &str, d: usize, lambda: f64, m: usize, closed: f64, est: &McEstimate, prob: bool) -> Vec<String> {
    let f = |x: f64| if prob { fmt_prob(x) } else { x.to_string() };
    vec![
        quantity.to_string(),
        d.to_string(),
        lambda.to_string(),
        m.to_string(),
        est.trials.to_string(),
        f(closed),
        f(est.value),
        est.std_error.to_string(),
        rel_error_pct(closed, est.value).to_string(),
    ]
}

pub fn verify_moments(a: &MomentsArgs) -> Result<Outcome> {
    if a.dims.is_empty() || a.dims.contains(&0) {
        return bad("--dims needs positive dimensions");
    }
    if a.lambda.is_empty() {
        return bad("--lambda needs at least one value");
    }
    for &l in &a.lambda {
        check_lambda(l)?;
    }
    if a.m == 0 || a.trials == 0 || !(a.eps > 0.0) {
        return bad("need --m >= 1, --trials >= 1 and --eps > 0");
    }
    let mut records = Vec::new();
    let mut idx = 0u64;
    for &lambda in &a.lambda {
        for &d in &a.dims {
            let seed = derive_seed(a.seed, idx);
            idx += 1;
            let mi = MomentInputs::from_lambda(d, a.eps, lambda, a.m)?;
            let path = mc_path_stats(d, a.eps, mi.beta, a.m, a.trials, seed)?;
            let seg = mc_segment_moments(d, a.eps, mi.beta, a.trials, derive_seed(seed, 1))?;
            let seg_mi = MomentInputs::new(d, a.eps, mi.beta, 1)?;
            records.push(mc_record("mean", d, lambda, a.m, path_mean(&mi), &path.mean, false));
            records.push(mc_record("variance", d, lambda, a.m, path_variance_simple(&mi), &path.variance, false));
            records.push(mc_record("variance_full", d, lambda, a.m, path_variance_full(&mi), &path.variance, false));
            records.push(mc_record("second_moment", d, lambda, 1, segment_second_moment(&seg_mi), &seg.second, false));
            records.push(mc_record("cross_moment", d, lambda, 1, segment_cross_moment(&seg_mi), &seg.cross, false));
        }
    }
    let bytes = csv_bytes(&MC_HEADER, |w| {
        for r in &records {
            w.write_record(r)?;
        }
        Ok(())
    })?;
    let mut out = Artifacts::create(&a.out)?;
    out.write("moments.csv", &bytes)?;
    out.finish("verify-moments", a.seed, a, None)?;
    for r in &records {
        println!("{:<13} d={:<4} lambda={:<6} rel_error_pct={}", r[0], r[1], r[2], r[8]);
    }
    Ok(Outcome::Done)
}

pub fn verify_coverage(a: &CoverageArgs) -> Result<Outcome> {
    let scene = load_scene(&a.scene)?;
    let d = scene.dim();
    check_lambda(a.lambda)?;
    if a.n == 0 || a.trials == 0 || !(a.eps > 0.0) {
        return bad("need --n >= 1, --trials >= 1 and --eps > 0");
    }
    if a.start.len() != d {
        return bad(format!("--start needs {d} coordinates"));
    }
    let m = match (a.m, a.goal.is_empty()) {
        (Some(m), _) => m,
        (None, false) => {
            let len = distance(&a.start, &a.goal);
            BallTiling::new(a.eps, a.lambda, len.max(f64::MIN_POSITIVE))?.m
        }
        (None, true) => 0,
    };
    let beta = a.lambda * a.eps;
    let centers: Vec<Vec<f64>> = if m == 0 {
        vec![a.start.clone()]
    } else {
        if a.goal.len() != d {
            return bad(format!("--goal needs {d} coordinates to orient the tiling"));
        }
        let len = distance(&a.start, &a.goal);
        if len == 0.0 {
            return bad("--goal must differ from --start");
        }
        (0..=m)
            .map(|j| {
                let s = j as f64 * a.eps / len;
                a.start.iter().zip(&a.goal).map(|(x, y)| x + s * (y - x)).collect()
            })
            .collect()
    };
    let closed = coverage_probability(a.n, m, ball_volume(d, beta)?, scene.free_volume())?;
    let est = mc_coverage(&scene, &centers, beta, a.n, a.trials, a.seed)?;
    let record = mc_record("coverage", d, a.lambda, m, closed, &est, true);
    let bytes = csv_bytes(&MC_HEADER, |w| {
        w.write_record(&record)?;
        Ok(())
    })?;
    let mut out = Artifacts::create(&a.out)?;
    out.write("coverage.csv", &bytes)?;
    out.finish("verify-coverage", a.seed, a, Some(&scene))?;
    let z = if est.std_error > 0.0 { (est.value - closed) / est.std_error } else { 0.0 };
    println!("balls={} closed_form={} mc_value={} std_err={} z={z}", m + 1, fmt_prob(closed), fmt_prob(est.value), est.std_error);
    Ok(Outcome::Done)
}

pub fn spanner(a: &SpannerArgs) -> Result<Outcome> {
    let scene = load_scene(&a.scene)?;
    if a.n < 2 {
        return bad(format!("--n must be at least 2, got {}", a.n));
    }
    if a.t.is_empty() || a.t.iter().any(|t| !(*t >= 1.0)) {
        return bad("--t needs stretch factors >= 1");
    }
    let mode: ConnectionMode = a.mode.parse()?;
    let params = PlannerParams::for_scene(&scene, mode, a.resolution, a.seed)?;
    let rm = build_roadmap(&scene, &params, a.n)?;
    let mut rows = Vec::new();
    for &t in &a.t {
        let sp = spanner_filter(&rm, t)?;
        rows.push((t, audit_stretch(&rm, &sp)?));
    }
    let bytes = csv_bytes(
        &["t", "vertices", "full_edges", "spanner_edges", "size_reduction", "max_stretch", "pairs"],
        |w| {
            for (t, au) in &rows {
                w.write_record([
                    t.to_string(),
                    rm.len().to_string(),
                    au.full_edges.to_string(),
                    au.sub_edges.to_string(),
                    au.size_reduction().to_string(),
                    au.max_stretch.to_string(),
                    au.pairs.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    let mut out = Artifacts::create(&a.out)?;
    out.write("spanner.csv", &bytes)?;
    out.finish("spanner", a.seed, a, Some(&scene))?;
    for (t, au) in &rows {
        println!(
            "t={t} edges {} -> {} (reduction {:.4}) max_stretch={}",
            au.full_edges,
            au.sub_edges,
            au.size_reduction(),
            au.max_stretch
        );
    }
    Ok(Outcome::Done)
}
