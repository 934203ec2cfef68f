//! Acceleration rate and the bisection search for a target rate.
//!
//! The rate is `required / acquired`: cells of the full matrix divided by the
//! distinct cells a pattern occupies after rasterization. Values above 1 mean
//! undersampling, and the rate falls as `γ` grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::mask::{rasterize_mask, Calibration};
use crate::radius::GammaFamily;
use crate::sampler::{generate, GenerateOptions, SamplePattern};

/// `∏ M_d / occupied cells`.
pub fn acceleration_rate(pattern: &SamplePattern, matrix: &[usize]) -> Result<f64> {
    if pattern.is_empty() {
        return Err(Error::InvalidParameter("acceleration rate of an empty pattern".into()));
    }
    let mask = rasterize_mask(pattern, matrix, None)?;
    Ok(mask.total_cells() as f64 / mask.occupied() as f64)
}

/// `∏ M_d / point count`, ignoring cell collisions.
pub fn raw_point_rate(pattern: &SamplePattern, matrix: &[usize]) -> Result<f64> {
    if pattern.is_empty() {
        return Err(Error::InvalidParameter("acceleration rate of an empty pattern".into()));
    }
    Ok(matrix.iter().product::<usize>() as f64 / pattern.len() as f64)
}

/// `(γ_min, γ_max)` for a `1/γ` family: `γ_min = 0` and `γ_max` makes the
/// field's minimum radius equal the finest matrix spacing `min_d extent_d / M_d`.
pub fn default_gamma_bounds<F: GammaFamily>(field: &F, domain: &Domain, matrix: &[usize]) -> Result<(f64, f64)> {
    if matrix.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: matrix.len() });
    }
    if matrix.contains(&0) {
        return Err(Error::InvalidParameter("matrix sizes must be >= 1".into()));
    }
    let spacing = (0..domain.dim())
        .map(|d| domain.extent(d) / matrix[d] as f64)
        .fold(f64::INFINITY, f64::min);
    let r_min = field.bounds(domain)?.r_min;
    Ok((0.0, field.gamma() * r_min / spacing))
}

/// Target rate, stopping tolerance and the initial `γ` bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelerationSpec {
    pub alpha: f64,
    pub tol: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub matrix: Vec<usize>,
}

impl AccelerationSpec {
    pub fn new(alpha: f64, tol: f64, gamma_min: f64, gamma_max: f64, matrix: Vec<usize>) -> Result<Self> {
        let spec = Self { alpha, tol, gamma_min, gamma_max, matrix };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("target rate must exceed 1, got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.gamma_min >= 0.0) || !(self.gamma_min < self.gamma_max) || !self.gamma_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= gamma_min < gamma_max, got [{}, {}]",
                self.gamma_min, self.gamma_max
            )));
        }
        if self.matrix.is_empty() || self.matrix.contains(&0) {
            return Err(Error::InvalidParameter("matrix sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seed used at each bisection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Same seed every step; the rate becomes a deterministic function of `γ`.
    Frozen(u64),
    /// Step `t` (from 0) uses `base + t`.
    Fresh(u64),
}

impl SeedPolicy {
    fn seed_for(&self, iteration: usize) -> u64 {
        match *self {
            SeedPolicy::Frozen(s) => s,
            SeedPolicy::Fresh(base) => base.wrapping_add(iteration as u64),
        }
    }
}

/// When the search stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once the half-width of the bracket used for a step is `<= tol`.
    #[default]
    GammaInterval,
    /// Stop once `|rate - alpha| <= tol`, or when the bracket collapses.
    RateError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub generator: GenerateOptions,
    pub seed: SeedPolicy,
    pub stop: StopRule,
    /// Continue with the closest attainable pattern instead of failing on a bad bracket.
    pub best_effort: bool,
    /// Generate at the bracket ends first and fail loudly if they do not straddle `alpha`.
    pub check_bracket: bool,
    pub calibration: Option<Calibration>,
    pub max_iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            generator: GenerateOptions::default(),
            seed: SeedPolicy::Frozen(0),
            stop: StopRule::GammaInterval,
            best_effort: false,
            check_bracket: true,
            calibration: None,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub epsilon: f64,
    pub gamma_mid: f64,
    pub seed: u64,
    pub rate: f64,
    pub raw_rate: f64,
    pub points: usize,
    pub occupied: usize,
}

#[derive(Debug, Clone)]
pub struct RateSearchOutcome {
    pub pattern: SamplePattern,
    pub gamma: f64,
    pub rate: f64,
    pub alpha: f64,
    pub iterations: Vec<IterationRecord>,
    /// Whether the initial bracket was checked and found not to straddle `alpha`.
    pub unbracketed: Option<String>,
}

impl RateSearchOutcome {
    pub fn rate_error(&self) -> f64 {
        self.rate - self.alpha
    }

    pub fn relative_error(&self) -> f64 {
        (self.rate - self.alpha).abs() / self.alpha
    }
}

fn rate_of(pattern: &SamplePattern, matrix: &[usize], calib: Option<&Calibration>) -> Result<(f64, usize)> {
    let mask = rasterize_mask(pattern, matrix, calib)?;
    Ok((mask.total_cells() as f64 / mask.occupied() as f64, mask.occupied()))
}

/// Bisection on `γ` for a pattern whose rate matches `spec.alpha`.
///
/// Each step sets `ε = (γ_max − γ_min)/2`, generates at `γ_mid = γ_min + ε`,
/// and keeps the half of the bracket that still straddles the target: a rate
/// above `alpha` means too few samples, so `γ_min` moves up; otherwise
/// `γ_max` moves down. The last generated pattern is returned.
pub fn rate_search<F: GammaFamily>(
    field: &F,
    domain: &Domain,
    spec: &AccelerationSpec,
    opts: &SearchOptions,
) -> Result<RateSearchOutcome> {
    spec.validate()?;
    if spec.matrix.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: spec.matrix.len() });
    }
    let calib = opts.calibration.as_ref();
    let gen = |gamma: f64, seed: u64| -> Result<(SamplePattern, f64, usize)> {
        let f = field.with_gamma(gamma)?;
        let p = generate(&f, domain, &opts.generator, seed)?;
        let (rate, occ) = rate_of(&p, &spec.matrix, calib)?;
        Ok((p, rate, occ))
    };

    let mut unbracketed = None;
    if opts.check_bracket {
        let seed = opts.seed.seed_for(0);
        let (_, dense_rate, _) = gen(spec.gamma_max, seed)?;
        if dense_rate > spec.alpha {
            unbracketed = Some(format!(
                "densest pattern (gamma_max = {}) already has rate {dense_rate:.4} > {}; raise gamma_max",
                spec.gamma_max, spec.alpha
            ));
        } else if spec.gamma_min > 0.0 {
            let (_, sparse_rate, _) = gen(spec.gamma_min, seed)?;
            if sparse_rate < spec.alpha {
                unbracketed = Some(format!(
                    "sparsest pattern (gamma_min = {}) already has rate {sparse_rate:.4} < {}; lower gamma_min",
                    spec.gamma_min, spec.alpha
                ));
            }
        }
        if let Some(diagnosis) = &unbracketed {
            if !opts.best_effort {
                return Err(Error::Unbracketed { alpha: spec.alpha, diagnosis: diagnosis.clone() });
            }
        }
    }

    let (mut lo, mut hi) = (spec.gamma_min, spec.gamma_max);
    let mut log = Vec::new();
    let mut last = None;
    for iteration in 0..opts.max_iterations.max(1) {
        let eps = (hi - lo) / 2.0;
        let mid = eps + lo;
        let seed = opts.seed.seed_for(iteration);
        let (pattern, rate, occupied) = gen(mid, seed)?;
        log.push(IterationRecord {
            iteration,
            gamma_min: lo,
            gamma_max: hi,
            epsilon: eps,
            gamma_mid: mid,
            seed,
            rate,
            raw_rate: spec.matrix.iter().product::<usize>() as f64 / pattern.len() as f64,
            points: pattern.len(),
            occupied,
        });
        if rate > spec.alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        last = Some((pattern, mid, rate));
        let done = match opts.stop {
            StopRule::GammaInterval => eps <= spec.tol,
            StopRule::RateError => (rate - spec.alpha).abs() <= spec.tol || eps <= f64::EPSILON * hi,
        };
        if done {
            break;
        }
    }
    let (pattern, gamma, rate) = last.expect("at least one iteration runs");
    Ok(RateSearchOutcome { pattern, gamma, rate, alpha: spec.alpha, iterations: log, unbracketed })
}

/// Mean and standard deviation of the rate at a fixed `γ` over several seeds.
pub fn rate_spread<F: GammaFamily>(
    field: &F,
    gamma: f64,
    domain: &Domain,
    generator: &GenerateOptions,
    matrix: &[usize],
    seeds: &[u64],
) -> Result<(f64, f64)> {
    let f = field.with_gamma(gamma)?;
    let rates = seeds
        .iter()
        .map(|&s| acceleration_rate(&generate(&f, domain, generator, s)?, matrix))
        .collect::<Result<Vec<_>>>()?;
    let n = rates.len().max(1) as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, var.sqrt()))
}
