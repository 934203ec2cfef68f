//! Timing harness for the fast generator against the `r_max` list grid.
//!
//! Each repetition runs every algorithm once on the same seed, in turn, so
//! drift in machine load hits all of them alike. Times are end-to-end
//! generation including grid construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::radius::ParametricField;
use crate::sampler::{generate, Algorithm, GenerateOptions};

pub const MIN_REPETITIONS: usize = 5;
pub const MIN_WARMUPS: usize = 2;
pub const TABLE_GAMMAS: [f64; 5] = [50.0, 75.0, 100.0, 125.0, 150.0];
pub const TABLE_NUS: [[f64; 2]; 3] = [[3.0, 1.0], [1.0, 1.0], [1.0, 3.0]];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub gamma: f64,
    pub nu: Vec<f64>,
    pub k: Option<usize>,
}

impl BenchConfig {
    pub fn new(gamma: f64, nu: Vec<f64>) -> Self {
        Self { gamma, nu, k: None }
    }
}

/// The 5 × 3 grid of γ and ν from the runtime table.
pub fn table_configs() -> Vec<BenchConfig> {
    TABLE_GAMMAS
        .iter()
        .flat_map(|&g| TABLE_NUS.iter().map(move |nu| BenchConfig::new(g, nu.to_vec())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub nu: Vec<f64>,
    pub median_ms: f64,
    pub min_ms: f64,
    pub points: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub warmups: usize,
    pub records: Vec<BenchRecord>,
}

/// Tulleken over fast median time for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Speedup {
    pub gamma: f64,
    pub nu: Vec<f64>,
    pub fast_ms: f64,
    pub tulleken_ms: f64,
    pub ratio: f64,
}

impl BenchReport {
    pub fn record(&self, algorithm: Algorithm, gamma: f64, nu: &[f64]) -> Option<&BenchRecord> {
        self.records
            .iter()
            .find(|r| r.algorithm == algorithm && r.gamma == gamma && r.nu == nu)
    }

    pub fn speedups(&self) -> Vec<Speedup> {
        self.records
            .iter()
            .filter(|r| r.algorithm == Algorithm::Fast)
            .filter_map(|f| {
                let t = self.record(Algorithm::Tulleken, f.gamma, &f.nu)?;
                Some(Speedup {
                    gamma: f.gamma,
                    nu: f.nu.clone(),
                    fast_ms: f.median_ms,
                    tulleken_ms: t.median_ms,
                    ratio: t.median_ms / f.median_ms,
                })
            })
            .collect()
    }

    pub fn mean_speedup(&self) -> Option<f64> {
        let s = self.speedups();
        if s.is_empty() {
            None
        } else {
            Some(s.iter().map(|x| x.ratio).sum::<f64>() / s.len() as f64)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,gamma,nu,median_ms,min_ms,points\n");
        for r in &self.records {
            let nu: Vec<String> = r.nu.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{:.3},{:.3},{}\n",
                r.algorithm,
                r.gamma,
                nu.join(":"),
                r.median_ms,
                r.min_ms,
                r.points
            ));
        }
        out
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs `warmups` untimed and `repetitions` timed generations per config and
/// algorithm on the unit square. Repetition `i` uses seed `base_seed + i`.
pub fn bench(
    configs: &[BenchConfig],
    algorithms: &[Algorithm],
    repetitions: usize,
    warmups: usize,
    base_seed: u64,
) -> Result<BenchReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_REPETITIONS} repetitions required, got {repetitions}"
        )));
    }
    if warmups < MIN_WARMUPS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_WARMUPS} warm-up runs required, got {warmups}"
        )));
    }
    let mut records = Vec::new();
    for cfg in configs {
        let field = ParametricField::new(cfg.gamma)?;
        let domain = Domain::unit(cfg.nu.len());
        let opts = |a: Algorithm| {
            let o = GenerateOptions::new(a).with_nu(cfg.nu.clone());
            match cfg.k {
                Some(k) => o.with_k(k),
                None => o,
            }
        };
        for w in 0..warmups {
            for &a in algorithms {
                generate(&field, &domain, &opts(a), base_seed.wrapping_sub(1 + w as u64))?;
            }
        }
        let mut times = vec![Vec::with_capacity(repetitions); algorithms.len()];
        let mut points = vec![0; algorithms.len()];
        let seeds: Vec<u64> = (0..repetitions as u64).map(|i| base_seed + i).collect();
        for &seed in &seeds {
            for (ai, &a) in algorithms.iter().enumerate() {
                let p = generate(&field, &domain, &opts(a), seed)?;
                times[ai].push(p.meta().wall_time.as_secs_f64() * 1e3);
                points[ai] = p.len();
            }
        }
        for (ai, &a) in algorithms.iter().enumerate() {
            let min_ms = times[ai].iter().cloned().fold(f64::INFINITY, f64::min);
            records.push(BenchRecord {
                algorithm: a,
                gamma: cfg.gamma,
                nu: cfg.nu.clone(),
                median_ms: median(&mut times[ai]),
                min_ms,
                points: points[ai],
                seeds: seeds.clone(),
            });
        }
    }
    Ok(BenchReport { repetitions, warmups, records })
}
