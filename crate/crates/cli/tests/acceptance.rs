//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances are pinned in the constants below.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pno_core::analysis::{
    coverage_probability, coverage_probability_prmstar, coverage_probability_real, pno_bound, tiling_from_planner,
    BallTiling,
};
use pno_core::cspace::distance;
use pno_core::geometry::{
    ball_volume, path_mean, path_variance_full, path_variance_simple, sine_power_integral,
    sine_power_integral_from_volumes, MomentInputs,
};
use pno_core::oracles::{mc_coverage, mc_path_stats, rel_error_pct};
use pno_core::planner::spanner::{audit_stretch, spanner_filter};
use pno_core::planner::{
    build_roadmap, connection_radius_at, gamma_pno, k_neighbors, ConnectionMode, PlannerParams,
};
use pno_core::rng::{derive_seed, substream};
use pno_core::{Bounds, Obstacle, Scene};

const SINE_REL_TOL: f64 = 1e-10;
const SINE_MAX_D: usize = 200;

const TABLE_TRIALS: u64 = 120_000;
const TABLE_DIMS: [usize; 4] = [2, 3, 10, 100];
const MEAN_TOL_PCT_SMALL_LAMBDA: f64 = 0.2;
const MEAN_TOL_PCT_LOW_D: f64 = 1.0;
const MEAN_TOL_PCT_HIGH_D: f64 = 3.0;
const VAR_TOL_PCT_SMALL_LAMBDA: f64 = 5.0;
const VAR_RANGE_PCT_LARGE_LAMBDA: (f64, f64) = (3.0, 35.0);
// published table values, for side-by-side printing only
const PUBLISHED_MEAN_PCT: [[f64; 4]; 2] = [[0.0050, 0.0085, 0.0205, 0.0110], [0.1730, 0.0473, 0.9413, 1.9147]];
const PUBLISHED_VAR_PCT: [[f64; 4]; 2] = [[0.5739, 1.0655, 2.1429, 2.8191], [6.0245, 9.7691, 19.0989, 23.7279]];

const IDENTITY_REL_TOL: f64 = 1e-9;
const EQ_REL_TOL: f64 = 1e-9;
const COVERAGE_TRIALS: u64 = 10_000;
const COVERAGE_SIGMAS: f64 = 3.0;

const THM1_N: usize = 5_000;
const THM1_RUNS: u64 = 500;
const THM1_DELTAS: [f64; 3] = [0.2, 0.3, 0.5];

const STOP_MAX_N0: u64 = 50_000;
const STOP_TRIALS: u64 = 200;

const OCC_RUNS: u64 = 200;
const OCC_N: usize = 2_000;
const OCC_MAX_FRACTION: f64 = 0.05;

const SPAN_N: usize = 300;
const SPAN_TS: [f64; 3] = [1.1, 1.5, 2.0];
const SPAN_QUERIES: usize = 50;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn unit_square() -> Scene {
    Scene::unit_cube(2).unwrap()
}

fn ball_scene() -> Scene {
    Scene::new(
        Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
        vec![Obstacle::Ball { center: vec![0.5, 0.5], radius: 0.15 }],
    )
    .unwrap()
}

fn box_scene() -> Scene {
    Scene::new(
        Bounds { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
        vec![Obstacle::Box { lo: vec![0.3, 0.4], hi: vec![0.7, 1.0] }],
    )
    .unwrap()
}

fn c1_sine_integrals() -> Verdict {
    let mut worst: f64 = 0.0;
    for d in 2..=SINE_MAX_D {
        let a = sine_power_integral(d - 2);
        let b = sine_power_integral_from_volumes(d).unwrap();
        worst = worst.max(((a - b) / a).abs());
    }
    verdict(worst <= SINE_REL_TOL, format!("max rel diff {worst:.3e} over d <= {SINE_MAX_D} (tol {SINE_REL_TOL:e})"))
}

/// `(mean_err_pct, var_err_pct)` per (lambda, d) with single-segment chains.
fn table_errors() -> [[(f64, f64); 4]; 2] {
    let mut out = [[(0.0, 0.0); 4]; 2];
    for (li, lambda) in [0.125, 0.5].into_iter().enumerate() {
        for (di, &d) in TABLE_DIMS.iter().enumerate() {
            let mi = MomentInputs::from_lambda(d, 1.0, lambda, 1).unwrap();
            let mc = mc_path_stats(d, 1.0, mi.beta, 1, TABLE_TRIALS, derive_seed(SEED, (li * 4 + di) as u64)).unwrap();
            out[li][di] = (
                rel_error_pct(path_mean(&mi), mc.mean.value),
                rel_error_pct(path_variance_simple(&mi), mc.variance.value),
            );
        }
    }
    out
}

fn c2_mean_table(t: &[[(f64, f64); 4]; 2]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (li, lambda) in [0.125, 0.5].into_iter().enumerate() {
        for (di, &d) in TABLE_DIMS.iter().enumerate() {
            let tol = if li == 0 {
                MEAN_TOL_PCT_SMALL_LAMBDA
            } else if d <= 3 {
                MEAN_TOL_PCT_LOW_D
            } else {
                MEAN_TOL_PCT_HIGH_D
            };
            pass &= t[li][di].0 <= tol;
            parts.push(format!("l={lambda} d={d}: {:.4}% (published {:.4}%)", t[li][di].0, PUBLISHED_MEAN_PCT[li][di]));
        }
    }
    verdict(pass, parts.join("; "))
}

fn c3_variance_table(t: &[[(f64, f64); 4]; 2]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (di, &d) in TABLE_DIMS.iter().enumerate() {
        pass &= t[0][di].1 <= VAR_TOL_PCT_SMALL_LAMBDA;
        let e = t[1][di].1;
        pass &= e >= VAR_RANGE_PCT_LARGE_LAMBDA.0 && e <= VAR_RANGE_PCT_LARGE_LAMBDA.1;
        if di > 0 {
            pass &= e > t[1][di - 1].1;
        }
        parts.push(format!(
            "d={d}: l=0.125 {:.3}% (published {:.3}%), l=0.5 {:.3}% (published {:.3}%)",
            t[0][di].1, PUBLISHED_VAR_PCT[0][di], e, PUBLISHED_VAR_PCT[1][di]
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c4_variance_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in [1usize, 2, 3, 5, 10, 20, 50, 100] {
        for lambda in [0.05, 0.1, 0.125, 0.25, 0.375, 0.5] {
            for m in [1usize, 2, 5, 10, 20, 50, 100] {
                for eps in [0.1, 1.0, 3.0] {
                    let mi = MomentInputs::from_lambda(d, eps, lambda, m).unwrap();
                    let df = d as f64;
                    let residue =
                        (2.0 - 3.0 * m as f64) * (df - 1.0).powi(2) * lambda.powi(4) * eps * eps / (df + 2.0).powi(2);
                    let diff = path_variance_full(&mi) - path_variance_simple(&mi);
                    let err = if residue == 0.0 { diff.abs() / path_variance_simple(&mi) } else { ((diff - residue) / residue).abs() };
                    worst = worst.max(err);
                    cases += 1;
                }
            }
        }
    }
    verdict(worst <= IDENTITY_REL_TOL, format!("max rel err {worst:.3e} over {cases} (d, lambda, M, eps) cases"))
}

fn c5_coverage() -> Verdict {
    let mut pass = true;
    let mut worst_eq: f64 = 0.0;
    let mut worst_ceiled: f64 = 0.0;
    for d in [2usize, 3, 10] {
        let bound = gamma_pno(d, 1.0).unwrap().bound;
        for k in 2..=6 {
            let n = 10u64.pow(k);
            let c3 = coverage_probability_prmstar(n, d, 1.0, 1.0).unwrap().probability;
            let eps = connection_radius_at(bound, n as f64, d) / 2.0;
            let vol = ball_volume(d, eps / 2.0).unwrap();
            let c2 = coverage_probability_real(n as f64, 1.0 / eps + 1.0, vol, 1.0).unwrap();
            if c3 > 0.0 {
                worst_eq = worst_eq.max(((c3 - c2) / c2).abs());
            }
            let tiling = BallTiling::new(eps, 0.5, 1.0).unwrap();
            let ceiled = coverage_probability(n, tiling.m, vol, 1.0).unwrap();
            if c3 > 0.0 {
                worst_ceiled = worst_ceiled.max(((c3 - ceiled) / ceiled).abs());
            }
        }
    }
    pass &= worst_eq <= EQ_REL_TOL;
    let mut parts = vec![format!(
        "closed forms agree to {worst_eq:.2e} (integer ball count differs by up to {worst_ceiled:.2e})"
    )];
    let cases: [(&str, Scene, [f64; 2], [f64; 2], u64); 3] = [
        ("empty", unit_square(), [0.15, 0.5], [0.85, 0.5], 500),
        ("ball", ball_scene(), [0.15, 0.15], [0.85, 0.15], 450),
        ("box", box_scene(), [0.15, 0.2], [0.85, 0.2], 400),
    ];
    for (i, (name, scene, a, b, n)) in cases.into_iter().enumerate() {
        let tiling = BallTiling::new(0.1, 0.5, distance(&a, &b)).unwrap();
        let centers = tiling.centers(&a, &b).unwrap();
        let closed = coverage_probability(n, tiling.m, tiling.ball_volume(2), scene.free_volume()).unwrap();
        let mc = mc_coverage(&scene, &centers, tiling.beta, n, COVERAGE_TRIALS, derive_seed(SEED, 50 + i as u64)).unwrap();
        let z = (mc.value - closed) / mc.std_error;
        pass &= z.abs() <= COVERAGE_SIGMAS;
        parts.push(format!("{name}: closed {closed:.4} mc {:.4} z={z:+.2}", mc.value));
    }
    verdict(pass, parts.join("; "))
}

fn c6_bound_soundness() -> Verdict {
    let scene = unit_square();
    let (start, goal) = ([0.1, 0.5], [0.9, 0.5]);
    let i_star = distance(&start, &goal);
    let base = PlannerParams::for_scene(&scene, ConnectionMode::RDisc, 0.01, SEED).unwrap();
    let mut lengths = Vec::with_capacity(THM1_RUNS as usize);
    for r in 0..THM1_RUNS {
        let p = PlannerParams { seed: derive_seed(SEED, 1_000 + r), ..base };
        let rm = build_roadmap(&scene, &p, THM1_N).unwrap();
        lengths.push(rm.query(&scene, &p, &start, &goal).unwrap().length);
    }
    let tiling = tiling_from_planner(THM1_N, 2, 1.0, base.gamma, i_star, 0.5).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in THM1_DELTAS {
        let bound = pno_bound(THM1_N as u64, &tiling, delta, 2, 1.0).unwrap().bound;
        let failures = lengths.iter().filter(|&&l| !((l - i_star).abs() <= delta * i_star)).count();
        let freq = failures as f64 / THM1_RUNS as f64;
        pass &= freq <= bound;
        parts.push(format!("delta={delta}: failure freq {freq:.4} <= bound {bound:.4}"));
    }
    let worst = lengths.iter().map(|l| (l - i_star) / i_star).fold(0.0f64, f64::max);
    parts.push(format!("worst rel excess {worst:.2e}"));
    verdict(pass, parts.join("; "))
}

/// Length of the shortest path around a disc of radius `r` between two
/// points at distance `l` on opposite sides of its center.
fn detour_length(l: f64, r: f64) -> f64 {
    2.0 * (l * l - r * r).sqrt() + r * (std::f64::consts::PI - 2.0 * (r / l).acos())
}

fn pno() -> &'static str {
    env!("CARGO_BIN_EXE_pno")
}

fn write_scene(dir: &Path, name: &str, scene: &Scene) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, scene.to_json_string()).unwrap();
    p
}

fn run_pno(args: &[&str]) -> (i32, String) {
    let out = Command::new(pno()).args(args).output().expect("pno runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn c7_stopping(tmp: &Path) -> Verdict {
    let eps0 = 0.05;
    let (delta_des, p_des) = (0.2, 0.9);
    let scene = ball_scene();
    // optimal path at clearance eps0 wraps the inflated disc
    let i_star = detour_length(0.4, 0.15 + eps0);
    let scene_path = write_scene(tmp, "c7_scene.json", &scene);
    let out = tmp.join("c7");
    let istar = i_star.to_string();
    let (code, err) = run_pno(&[
        "stopping",
        "--scene",
        scene_path.to_str().unwrap(),
        "--eps0",
        "0.05",
        "--delta-des",
        "0.2",
        "--p-des",
        "0.9",
        "--istar",
        &istar,
        "--start",
        "0.1,0.5",
        "--goal",
        "0.9,0.5",
        "--validate",
        "--trials",
        &STOP_TRIALS.to_string(),
        "--seed",
        &SEED.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    if code != 0 {
        return verdict(false, format!("pno stopping exited {code}: {err}"));
    }
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stopping.json")).unwrap()).unwrap();
    let n0 = s["n0"].as_u64().unwrap();
    let run_n = s["run_n"].as_u64().unwrap();
    let freq: f64 = s["success_frequency"].as_str().unwrap().parse().unwrap();
    verdict(
        n0 <= STOP_MAX_N0 && freq >= p_des,
        format!(
            "eps0={eps0} delta_des={delta_des} P_DES={p_des} I*={i_star:.5}: n0={n0} (run at {run_n}), success {freq:.3} over {STOP_TRIALS} trials"
        ),
    )
}

fn c8_occupancy() -> Verdict {
    let scene = unit_square();
    let base = PlannerParams::for_scene(&scene, ConnectionMode::KNearest, 0.01, SEED).unwrap();
    let k = k_neighbors(&base, OCC_N, 2).unwrap().k;
    let (a, b) = ([0.1, 0.5], [0.9, 0.5]);
    let tiling = tiling_from_planner(OCC_N, 2, 1.0, base.gamma, distance(&a, &b), 0.5).unwrap();
    let centers = tiling.centers(&a, &b).unwrap();
    let eps2 = tiling.eps * tiling.eps;
    let mut exceeded = 0u64;
    let mut max_count = 0usize;
    for r in 0..OCC_RUNS {
        let p = PlannerParams { seed: derive_seed(SEED, 5_000 + r), ..base };
        let rm = build_roadmap(&scene, &p, OCC_N).unwrap();
        let worst = centers
            .iter()
            .map(|c| (0..rm.len()).filter(|&i| pno_core::cspace::distance2(rm.vertex(i), c) <= eps2).count())
            .max()
            .unwrap();
        max_count = max_count.max(worst);
        exceeded += u64::from(worst > k);
    }
    let frac = exceeded as f64 / OCC_RUNS as f64;
    verdict(
        frac <= OCC_MAX_FRACTION,
        format!("k(n)={k}, {} balls of radius {:.4}: max occupancy {max_count}, exceeded in {frac:.3} of runs", centers.len(), tiling.eps),
    )
}

fn c9_spanner() -> Verdict {
    let scene = ball_scene();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, t) in SPAN_TS.into_iter().enumerate() {
        let p = PlannerParams::for_scene(&scene, ConnectionMode::RDisc, 0.01, derive_seed(SEED, 9_000 + i as u64)).unwrap();
        let rm = build_roadmap(&scene, &p, SPAN_N).unwrap();
        let sp = spanner_filter(&rm, t).unwrap();
        let audit = audit_stretch(&rm, &sp).unwrap();
        pass &= audit.max_stretch <= t;
        let mut rng = substream(SEED, 100 + i as u64);
        let mut worst_ratio: f64 = 0.0;
        let mut solved = 0;
        for _ in 0..SPAN_QUERIES {
            let (s, _) = scene.sample_free(&mut rng).unwrap();
            let (g, _) = scene.sample_free(&mut rng).unwrap();
            let full = rm.query(&scene, &p, &s, &g).unwrap();
            let span = sp.query(&scene, &p, &s, &g).unwrap();
            pass &= full.solved == span.solved;
            if full.solved && full.length > 0.0 {
                solved += 1;
                worst_ratio = worst_ratio.max(span.length / full.length);
                pass &= span.length <= t * full.length;
            }
        }
        parts.push(format!(
            "t={t}: edges {} -> {}, audited stretch {:.4}, worst query ratio {worst_ratio:.4} over {solved} solved",
            audit.full_edges, audit.sub_edges, audit.max_stretch
        ));
    }
    verdict(pass, parts.join("; "))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn c10_determinism(tmp: &Path) -> Verdict {
    let sq = write_scene(tmp, "c10_square.json", &unit_square());
    let ball = write_scene(tmp, "c10_ball.json", &ball_scene());
    let (sq, ball) = (sq.to_str().unwrap().to_string(), ball.to_str().unwrap().to_string());
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("plan", vec!["plan", "--scene", &ball, "--n", "800", "--seed", "3", "--start", "0.1,0.5", "--goal", "0.9,0.5"]),
        (
            "plan-knn",
            vec!["plan", "--scene", &sq, "--n", "600", "--seed", "4", "--start", "0.1,0.1", "--goal", "0.8,0.9", "--mode", "k-nearest"],
        ),
        (
            "stopping",
            vec![
                "stopping", "--scene", &ball, "--eps0", "0.1", "--delta-des", "0.3", "--p-des", "0.9", "--start", "0.1,0.5",
                "--goal", "0.9,0.5", "--validate", "--trials", "3", "--seed", "5",
            ],
        ),
        ("verify-moments", vec!["verify-moments", "--dims", "2,3", "--trials", "5000", "--seed", "6"]),
        (
            "verify-coverage",
            vec!["verify-coverage", "--scene", &ball, "--n", "300", "--eps", "0.1", "--start", "0.15,0.15", "--goal", "0.85,0.15", "--trials", "2000", "--seed", "7"],
        ),
        ("spanner", vec!["spanner", "--scene", &sq, "--n", "150", "--seed", "8"]),
    ]
    .into_iter()
    .map(|(name, args)| (name, args.into_iter().map(String::from).collect()))
    .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.join(format!("c10_{name}_{rep}"));
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            let d = dir.to_str().unwrap().to_string();
            full.extend(["--out", &d]);
            let (code, err) = run_pno(&full);
            if code != 0 {
                pass = false;
                parts.push(format!("{name}: exit {code} {err}"));
            }
            outputs.push(read_dir_bytes(&dir));
        }
        let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
        pass &= same;
        parts.push(format!("{name}: {} files {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    verdict(pass, parts.join("; "))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        println!(
            "[{}] {id} {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.pass);
    };
    report("C1", "sine-integral consistency", &mut c1_sine_integrals);
    let table = table_errors();
    report("C2", "mean-approximation table", &mut || c2_mean_table(&table));
    report("C3", "variance-approximation table", &mut || c3_variance_table(&table));
    report("C4", "variance algebraic identity", &mut c4_variance_identity);
    report("C5", "coverage cross-check", &mut c5_coverage);
    report("C6", "near-optimality bound soundness", &mut c6_bound_soundness);
    report("C7", "stopping criterion", &mut || c7_stopping(tmp.path()));
    report("C8", "k-nearest occupancy", &mut c8_occupancy);
    report("C9", "spanner stretch", &mut c9_spanner);
    report("C10", "determinism", &mut || c10_determinism(tmp.path()));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
