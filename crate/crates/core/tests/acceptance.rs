//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! A FAIL on a correctness criterion exits nonzero. The wall-time criterion
//! depends on the host, so its FAIL is reported but only exits nonzero when
//! `PDISC_STRICT_ACCEPTANCE=1`.
//!
//! Run alone with `cargo test -p pdisc --test acceptance`. Criterion numbers
//! may be passed as arguments to run a subset, e.g. `-- 3 6`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use pdisc::analysis::{coverage_fraction, profile_similarity, voronoi_areas, VoronoiProfile};
use pdisc::bench::{bench, table_configs, TABLE_GAMMAS, TABLE_NUS};
use pdisc::rate::{acceleration_rate, rate_search, AccelerationSpec, SearchOptions, SeedPolicy};
use pdisc::sampler::{generate, is_valid_pattern, is_valid_pattern_brute, GenerateOptions, PatternMeta};
use pdisc::{Algorithm, Domain, ParametricField, PointSet, RngState, SamplePattern};

// criterion 1, 5, 8
const SEEDS: u64 = 20;
const BRUTE_AUDIT_GAMMA: f64 = 50.0;
// criterion 3
const TIMING_CRITERIA: [u32; 1] = [3];
const BENCH_REPS: usize = 11;
const BENCH_WARMUPS: usize = 3;
const BENCH_SEED: u64 = 1000;
const SPEEDUP_AT_150: f64 = 1.2;
const SPEEDUP_MEAN: f64 = 1.1;
// criterion 4
const VORONOI_SEEDS: u64 = 10;
const VORONOI_RES: usize = 1024;
const VORONOI_BINS: usize = 20;
const VORONOI_MEDIAN_TOL: f64 = 0.15;
const AREA_TOL: f64 = 0.005;
const TULLEKEN_SEED_OFFSET: u64 = 1000;
// criterion 5
const RATE_MATRIX: [usize; 2] = [256, 256];
// criterion 6
const TARGETS: [f64; 4] = [4.0, 6.0, 8.0, 10.0];
const RATE_TOL: f64 = 0.01;
const RATE_REL_ERR: f64 = 0.05;
const RATE_GAMMA_MAX: f64 = 150.0;
const RATE_SEED: u64 = 0;
// criterion 7
const COVERAGE_K: usize = 30;
const COVERAGE_GAMMA: f64 = 100.0;
const COVERAGE_PROBES: usize = 10_000;
const COVER_R: f64 = 0.95;
const COVER_2R: f64 = 0.999;

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn field(gamma: f64) -> ParametricField {
    ParametricField::new(gamma).expect("positive gamma")
}

fn opts(algo: Algorithm, nu: &[f64]) -> GenerateOptions {
    GenerateOptions::new(algo).with_nu(nu.to_vec())
}

/// Criteria 1, 5 and 8 share one sweep over γ × ν × seeds.
fn sweep() -> Vec<Line> {
    let mut violations = 0usize;
    let mut first_bad = None;
    let mut audited = 0usize;
    let mut brute_disagreements = 0usize;
    let mut counts = vec![0.0; TABLE_GAMMAS.len()];
    let mut rates = vec![0.0; TABLE_GAMMAS.len()];
    let mut aniso_bad = 0usize;
    let mut aniso_runs = 0usize;
    let shrunk = Domain::new(vec![-0.5, -1.0 / 6.0], vec![0.5, 1.0 / 6.0]).unwrap();

    for (gi, &gamma) in TABLE_GAMMAS.iter().enumerate() {
        let f = field(gamma);
        for nu in TABLE_NUS {
            for seed in 0..SEEDS {
                let p = generate(&f, &Domain::unit(2), &opts(Algorithm::Fast, &nu), seed).unwrap();
                let v = is_valid_pattern(&p, &f);
                audited += 1;
                if !v.valid {
                    violations += 1;
                    first_bad.get_or_insert((gamma, nu, seed, v.violation));
                }
                if gamma == BRUTE_AUDIT_GAMMA && is_valid_pattern_brute(&p, &f) != v {
                    brute_disagreements += 1;
                }
                if nu == [1.0, 1.0] {
                    counts[gi] += p.len() as f64 / SEEDS as f64;
                    rates[gi] += acceleration_rate(&p, &RATE_MATRIX).unwrap() / SEEDS as f64;
                }
                if nu == [1.0, 3.0] {
                    aniso_runs += 1;
                    if !unscaled_is_valid(&p, &f, &shrunk) {
                        aniso_bad += 1;
                    }
                }
            }
        }
    }

    let c1 = Line {
        id: 1,
        pass: violations == 0 && brute_disagreements == 0,
        detail: format!(
            "validity: {audited} patterns audited, {violations} with violations{}; O(N^2) audit agrees on all gamma={BRUTE_AUDIT_GAMMA} patterns: {}",
            first_bad.map(|b| format!(" (first {b:?})")).unwrap_or_default(),
            brute_disagreements == 0
        ),
    };
    let up = counts.windows(2).all(|w| w[1] > w[0]);
    let down = rates.windows(2).all(|w| w[1] < w[0]);
    let c5 = Line {
        id: 5,
        pass: up && down,
        detail: format!(
            "density monotonicity: mean points {:?}, mean rate on 256^2 {:?}",
            counts.iter().map(|c| c.round()).collect::<Vec<_>>(),
            rates.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    };
    let c8 = Line {
        id: 8,
        pass: aniso_bad == 0,
        detail: format!(
            "anisotropy nu=(1,3): {aniso_runs} patterns un-scaled into [-0.5,0.5]x[-1/6,1/6], {aniso_bad} outside or invalid"
        ),
    };
    vec![c1, c5, c8]
}

/// Divides by ν by hand, checks containment, then audits as a plain pattern
/// on the shrunken domain.
fn unscaled_is_valid(p: &SamplePattern, f: &ParametricField, shrunk: &Domain) -> bool {
    let nu = [1.0, 3.0];
    let coords: Vec<f64> = p.points().as_flat().iter().enumerate().map(|(i, x)| x / nu[i % 2]).collect();
    let pts = PointSet::from_flat(2, coords).unwrap();
    if !pts.iter().all(|x| shrunk.contains(x)) {
        return false;
    }
    let meta = PatternMeta {
        nu: vec![1.0, 1.0],
        domain: shrunk.clone(),
        generation_domain: shrunk.clone(),
        ..p.meta().clone()
    };
    is_valid_pattern(&SamplePattern::new(pts, meta).unwrap(), f).valid
}

fn grid_exactness() -> Line {
    let mut diverged = Vec::new();
    let mut configs = 0;
    for &gamma in &TABLE_GAMMAS {
        let f = field(gamma);
        for nu in TABLE_NUS {
            configs += 1;
            let seed = configs as u64;
            let a = generate(&f, &Domain::unit(2), &opts(Algorithm::Fast, &nu), seed).unwrap();
            let b = generate(&f, &Domain::unit(2), &opts(Algorithm::FastBruteForce, &nu), seed).unwrap();
            let bits = |p: &SamplePattern| p.points().as_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            if bits(&a) != bits(&b) {
                diverged.push((gamma, nu));
            }
        }
    }
    Line {
        id: 2,
        pass: diverged.is_empty(),
        detail: format!("grid exactness: {configs} configs, reach grid vs full scan bitwise identical; diverged: {diverged:?}"),
    }
}

fn speedup() -> Line {
    let report = bench(&table_configs(), &[Algorithm::Fast, Algorithm::Tulleken], BENCH_REPS, BENCH_WARMUPS, BENCH_SEED)
        .unwrap();
    let all = report.speedups();
    let at150 = all.iter().find(|s| s.gamma == 150.0 && s.nu == [1.0, 1.0]).unwrap();
    let mean = report.mean_speedup().unwrap();
    let table: Vec<String> = all
        .iter()
        .map(|s| format!("g{}/nu{}:{}={:.2}", s.gamma, s.nu[0], s.nu[1], s.ratio))
        .collect();
    Line {
        id: 3,
        pass: at150.ratio >= SPEEDUP_AT_150 && mean >= SPEEDUP_MEAN,
        detail: format!(
            "speedup tulleken/fast: {:.3} at gamma=150 nu=(1,1) (fast {:.1} ms, tulleken {:.1} ms; need >= {SPEEDUP_AT_150}), mean {:.3} (need >= {SPEEDUP_MEAN}); R={BENCH_REPS} W={BENCH_WARMUPS}; {}",
            at150.ratio,
            at150.fast_ms,
            at150.tulleken_ms,
            mean,
            table.join(" ")
        ),
    }
}

fn voronoi_profiles() -> Line {
    let f = field(150.0);
    let run = |algo: Algorithm, seed: u64| -> VoronoiProfile {
        let p = generate(&f, &Domain::unit(2), &opts(algo, &[1.0, 1.0]), seed).unwrap();
        voronoi_areas(&p, VORONOI_RES).unwrap()
    };
    let fast: Vec<VoronoiProfile> = (0..VORONOI_SEEDS).map(|s| run(Algorithm::Fast, s)).collect();
    // different seeds, otherwise both generators emit the same points
    let tull: Vec<VoronoiProfile> =
        (0..VORONOI_SEEDS).map(|s| run(Algorithm::Tulleken, s + TULLEKEN_SEED_OFFSET)).collect();
    let worst_area = fast.iter().chain(&tull).map(|v| v.conservation_error()).fold(0.0, f64::max);
    let a = VoronoiProfile::pooled(&fast).unwrap();
    let b = VoronoiProfile::pooled(&tull).unwrap();
    let cmp = profile_similarity(&a, &b, VORONOI_BINS).unwrap();
    let worst = cmp.max_relative_difference();
    Line {
        id: 4,
        pass: worst <= VORONOI_MEDIAN_TOL && worst_area <= AREA_TOL,
        detail: format!(
            "voronoi profile gamma=150: max per-bin median difference {:.4} (tol {VORONOI_MEDIAN_TOL}), {} empty bins skipped, worst area conservation error {:.2e} (tol {AREA_TOL}); {VORONOI_SEEDS} seeds pooled, D={VORONOI_RES}",
            worst,
            cmp.empty_bins.len(),
            worst_area
        ),
    }
}

fn rate_targets() -> Line {
    let f = field(1.0);
    let d = Domain::unit(2);
    let mut ok = true;
    let mut parts = Vec::new();
    for &alpha in &TARGETS {
        let spec = AccelerationSpec::new(alpha, RATE_TOL, 0.0, RATE_GAMMA_MAX, RATE_MATRIX.to_vec()).unwrap();
        let o = SearchOptions { seed: SeedPolicy::Frozen(RATE_SEED), ..SearchOptions::default() };
        match rate_search(&f, &d, &spec, &o) {
            Ok(out) => {
                let w0 = spec.gamma_max - spec.gamma_min;
                let halving = out
                    .iterations
                    .iter()
                    .enumerate()
                    .all(|(t, r)| r.gamma_max - r.gamma_min == w0 / 2f64.powi(t as i32));
                let closed = out.iterations.last().map_or(false, |r| r.epsilon <= RATE_TOL);
                let err = out.relative_error();
                ok &= halving && closed && err <= RATE_REL_ERR;
                parts.push(format!(
                    "alpha {alpha}: rate {:.4} (err {:.2}%) gamma {:.4} in {} steps, exact halving {halving}",
                    out.rate,
                    100.0 * err,
                    out.gamma,
                    out.iterations.len()
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("alpha {alpha}: {e}"));
            }
        }
    }
    Line {
        id: 6,
        pass: ok,
        detail: format!(
            "rate targeting on 256^2, tol {RATE_TOL}, frozen seed, gamma in (0, {RATE_GAMMA_MAX}]: {}",
            parts.join("; ")
        ),
    }
}

fn coverage() -> Line {
    let f = field(COVERAGE_GAMMA);
    let (mut min_r, mut min_2r) = (1.0f64, 1.0f64);
    for seed in 0..SEEDS {
        let p = generate(&f, &Domain::unit(2), &GenerateOptions::default().with_k(COVERAGE_K), seed).unwrap();
        let c = coverage_fraction(&p, &f, COVERAGE_PROBES, &mut RngState::new(10_000 + seed)).unwrap();
        min_r = min_r.min(c.within_r);
        min_2r = min_2r.min(c.within_2r);
    }
    Line {
        id: 7,
        pass: min_r >= COVER_R && min_2r >= COVER_2R,
        detail: format!(
            "coverage k={COVERAGE_K} gamma={COVERAGE_GAMMA}: worst seed {min_r:.5} within r (need {COVER_R}), {min_2r:.5} within 2r (need {COVER_2R}); {SEEDS} seeds x {COVERAGE_PROBES} probes"
        ),
    }
}

fn determinism() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_pdisc");
    let mut bad = Vec::new();
    for run in ["first", "second"] {
        for fmt in ["csv", "pbm", "json"] {
            let out = dir.path().join(run).join(format!("p.{fmt}"));
            let status = Command::new(bin)
                .args(["generate", "--gamma", "150", "--seed", "1", "--format", fmt, "--out"])
                .arg(&out)
                .output()
                .unwrap()
                .status;
            if !status.success() {
                bad.push(format!("{run} {fmt}: exit {status}"));
            }
        }
    }
    let mut compared = 0;
    for name in ["p.csv", "p.pbm", "p.json", "p.meta.json"] {
        let read = |run: &str| fs::read(Path::new(dir.path()).join(run).join(name)).unwrap_or_default();
        let (a, b) = (read("first"), read("second"));
        compared += 1;
        if a.is_empty() || a != b {
            bad.push(name.to_string());
        }
    }
    Line {
        id: 9,
        pass: bad.is_empty(),
        detail: format!("determinism: {compared} artifacts from two CLI runs, differing or missing: {bad:?}"),
    }
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |ids: &[u32]| wanted.is_empty() || ids.iter().any(|i| wanted.contains(i));
    let mut lines = Vec::new();
    let mut timed = |f: &dyn Fn() -> Vec<Line>| {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        for l in out {
            println!("{} criterion {}: {} [{secs:.1}s]", if l.pass { "PASS" } else { "FAIL" }, l.id, l.detail);
            lines.push(l);
        }
    };
    if want(&[1, 5, 8]) {
        timed(&sweep);
    }
    if want(&[2]) {
        timed(&|| vec![grid_exactness()]);
    }
    if want(&[3]) {
        timed(&|| vec![speedup()]);
    }
    if want(&[4]) {
        timed(&|| vec![voronoi_profiles()]);
    }
    if want(&[6]) {
        timed(&|| vec![rate_targets()]);
    }
    if want(&[7]) {
        timed(&|| vec![coverage()]);
    }
    if want(&[9]) {
        timed(&|| vec![determinism()]);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {} passed, {} failed {failed:?}", lines.len() - failed.len(), failed.len());
    let strict = std::env::var("PDISC_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    if failed.iter().any(|&id| strict || !TIMING_CRITERIA.contains(&id)) {
        std::process::exit(1);
    }
}
