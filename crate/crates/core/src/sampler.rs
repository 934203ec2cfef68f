//! Pattern generators.
//!
//! All growth-based generators share one loop: seed a uniform point, then
//! repeatedly pick a uniform index from the active list, draw `k` annulus
//! candidates around it at `[r, 2r]`, accept every in-domain candidate that is
//! conflict free, and retire the index when none of the `k` is accepted. They
//! differ only in the structure answering "does this candidate conflict?".
//!
//! RNG draw order per run: the initial point (`n` uniforms), then per loop
//! iteration one active-list index followed by `k` candidates, each `n`
//! normals plus one magnitude uniform. Out-of-domain candidates still consume
//! their draws and count toward `k`.
//!
//! Conflicts use the symmetric rule `|c - x| <= min(r(c), r(x))`. Under this
//! rule a reach-grid lookup finds every conflicting point, so the grid and
//! brute-force paths accept exactly the same candidates.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_sq, fill_annulus, fill_uniform, Domain, Point};
use crate::grid::{
    build_bridson_grid, build_reach_grid, build_tulleken_grid, BridsonGrid, GridLimits, ReachGrid,
    TullekenGrid, MAX_POINTS,
};
use crate::radius::{eval_radius, FieldSpec, RadiusField};
use crate::rng::RngState;

/// Default number of candidates per active point: 10 in two dimensions, 30 otherwise.
pub fn default_k(dim: usize) -> usize {
    if dim == 2 {
        10
    } else {
        30
    }
}

pub const DEFAULT_DART_FAILURES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Reach-list grid keyed on `r_min`.
    Fast,
    /// Same loop as `Fast` with an O(N) conflict scan.
    FastBruteForce,
    /// List grid keyed on `r_max`.
    Tulleken,
    /// Constant-radius one-point-per-cell grid.
    Bridson,
    /// Uniform rejection sampling with an O(N) scan.
    Dart,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Fast => "fast",
            Algorithm::FastBruteForce => "fast_brute_force",
            Algorithm::Tulleken => "tulleken",
            Algorithm::Bridson => "bridson",
            Algorithm::Dart => "dart",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Algorithm::Fast),
            "fast_brute_force" | "brute" => Ok(Algorithm::FastBruteForce),
            "tulleken" => Ok(Algorithm::Tulleken),
            "bridson" => Ok(Algorithm::Bridson),
            "dart" => Ok(Algorithm::Dart),
            other => Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Which threshold a candidate must clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictRule {
    /// `dist > min(r(candidate), r(existing))`.
    #[default]
    Min,
    /// `dist > r(candidate)`. With the reach grid only points whose own
    /// threshold reaches the candidate are examined, so the grid path may
    /// accept slightly more points than a full scan.
    CandidateOnly,
}

/// True when the pair violates the rule. Shared by generators and audits.
#[inline]
pub fn too_close(a: &[f64], r_a: f64, b: &[f64], r_b: f64, rule: ConflictRule) -> bool {
    let t = match rule {
        ConflictRule::Min => r_a.min(r_b),
        ConflictRule::CandidateOnly => r_a,
    };
    dist_sq(a, b) <= t * t
}

/// Points stored contiguously, `dim` coordinates each.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            let i = bad / dim;
            return Err(Error::NonFinite(coords[i * dim..(i + 1) * dim].to_vec()));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Everything needed to regenerate a pattern, plus timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMeta {
    pub seed: u64,
    pub gamma: f64,
    pub field: Option<FieldSpec>,
    pub k: usize,
    pub algorithm: Algorithm,
    pub rule: ConflictRule,
    /// Per-axis anisotropy factors; all ones for plain generation.
    pub nu: Vec<f64>,
    /// Domain the output points lie in.
    pub domain: Domain,
    /// Domain the generator actually ran in (`domain` shrunk by `nu`).
    pub generation_domain: Domain,
    pub wall_time: Duration,
    pub grid_build_time: Duration,
}

/// Ordered accepted points plus generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePattern {
    points: PointSet,
    meta: PatternMeta,
}

impl SamplePattern {
    pub fn new(points: PointSet, meta: PatternMeta) -> Result<Self> {
        if points.dim() != meta.domain.dim() {
            return Err(Error::DimensionMismatch { expected: meta.domain.dim(), got: points.dim() });
        }
        if meta.nu.len() != points.dim() {
            return Err(Error::DimensionMismatch { expected: points.dim(), got: meta.nu.len() });
        }
        Ok(Self { points, meta })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn meta(&self) -> &PatternMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut PatternMeta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.get(i)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.points
            .iter()
            .map(|p| Point::new(p.to_vec()).expect("stored points are finite"))
            .collect()
    }

    /// Points mapped back to the generation domain (divided by `nu`).
    pub fn generation_points(&self) -> PointSet {
        if self.meta.nu.iter().all(|&v| v == 1.0) {
            return self.points.clone();
        }
        let nu = &self.meta.nu;
        let coords = self
            .points
            .as_flat()
            .iter()
            .enumerate()
            .map(|(i, &x)| x / nu[i % nu.len()])
            .collect();
        PointSet { dim: self.points.dim, coords }
    }
}

/// True iff `candidate` clears every listed point under the min rule.
pub fn conflict_free<F: RadiusField + ?Sized>(
    candidate: &[f64],
    existing: &[u32],
    points: &PointSet,
    field: &F,
) -> bool {
    let r_c = field.radius(candidate);
    existing.iter().all(|&j| {
        let x = points.get(j as usize);
        !too_close(candidate, r_c, x, field.radius(x), ConflictRule::Min)
    })
}

/// Conflict lookup used by the growth loop.
trait ConflictIndex {
    fn insert(&mut self, idx: u32, p: &[f64], r: f64) -> Result<()>;
    fn has_conflict(&self, c: &[f64], r_c: f64, pts: &PointSet, radii: &[f64], rule: ConflictRule) -> bool;
}

impl ConflictIndex for ReachGrid {
    #[inline]
    fn insert(&mut self, idx: u32, p: &[f64], r: f64) -> Result<()> {
        self.register_unchecked(idx, p, r)
    }

    #[inline]
    fn has_conflict(&self, c: &[f64], r_c: f64, pts: &PointSet, radii: &[f64], rule: ConflictRule) -> bool {
        self.any_candidate(c, |j| {
            let j = j as usize;
            too_close(c, r_c, pts.get(j), radii[j], rule)
        })
    }
}

impl ConflictIndex for TullekenGrid {
    #[inline]
    fn insert(&mut self, idx: u32, p: &[f64], _r: f64) -> Result<()> {
        self.insert_unchecked(idx, p);
        Ok(())
    }

    #[inline]
    fn has_conflict(&self, c: &[f64], r_c: f64, pts: &PointSet, radii: &[f64], rule: ConflictRule) -> bool {
        self.visit_neighbors(c, r_c, |j| {
            let j = j as usize;
            too_close(c, r_c, pts.get(j), radii[j], rule)
        })
    }
}

impl ConflictIndex for BridsonGrid {
    fn insert(&mut self, idx: u32, p: &[f64], _r: f64) -> Result<()> {
        BridsonGrid::insert(self, idx as usize, p)
    }

    #[inline]
    fn has_conflict(&self, c: &[f64], r_c: f64, pts: &PointSet, radii: &[f64], rule: ConflictRule) -> bool {
        self.visit_neighbors(c, r_c, |j| {
            let j = j as usize;
            too_close(c, r_c, pts.get(j), radii[j], rule)
        })
    }
}

/// O(N) scan over every accepted point.
struct BruteForce;

impl ConflictIndex for BruteForce {
    fn insert(&mut self, _idx: u32, _p: &[f64], _r: f64) -> Result<()> {
        Ok(())
    }

    #[inline]
    fn has_conflict(&self, c: &[f64], r_c: f64, pts: &PointSet, radii: &[f64], rule: ConflictRule) -> bool {
        // newest first: a rejected candidate usually conflicts with a recent point
        (0..pts.len()).rev().any(|j| too_close(c, r_c, pts.get(j), radii[j], rule))
    }
}

/// Upper bound on accepted points: one per cell of edge `r_min/√n`.
fn packing_cap(domain: &Domain, r_min: f64) -> usize {
    let edge = r_min / (domain.dim() as f64).sqrt();
    (0..domain.dim())
        .map(|d| (domain.extent(d) / edge).ceil() + 1.0)
        .product::<f64>()
        .min(MAX_POINTS as f64) as usize
}

struct Grown {
    points: PointSet,
}

fn grow<F, I>(
    field: &F,
    domain: &Domain,
    k: usize,
    rng: &mut RngState,
    index: &mut I,
    rule: ConflictRule,
    cap: usize,
) -> Result<Grown>
where
    F: RadiusField + ?Sized,
    I: ConflictIndex,
{
    let n = domain.dim();
    let mut points = PointSet::new(n);
    let mut radii = Vec::new();
    let mut active: Vec<u32> = Vec::new();
    let mut cand = vec![0.0; n];

    fill_uniform(domain, rng, &mut cand);
    let r0 = eval_radius(field, &cand)?;
    points.push(&cand);
    radii.push(r0);
    index.insert(0, &cand, r0)?;
    active.push(0);

    let mut parent = vec![0.0; n];
    while !active.is_empty() {
        let slot = rng.index(active.len());
        let i = active[slot] as usize;
        parent.copy_from_slice(points.get(i));
        let r_i = radii[i];
        let mut accepted_any = false;
        for _ in 0..k {
            fill_annulus(&parent, r_i, rng, &mut cand);
            if !domain.contains(&cand) {
                continue;
            }
            let r_c = eval_radius(field, &cand)?;
            if index.has_conflict(&cand, r_c, &points, &radii, rule) {
                continue;
            }
            let j = points.len();
            if j >= cap {
                return Err(Error::PackingCapExceeded { accepted: j + 1, cap });
            }
            points.push(&cand);
            radii.push(r_c);
            index.insert(j as u32, &cand, r_c)?;
            active.push(j as u32);
            accepted_any = true;
        }
        if !accepted_any {
            active.swap_remove(slot);
        }
    }
    Ok(Grown { points })
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidParameter("k must be at least 1".into()))
    } else {
        Ok(())
    }
}

struct RunOutput {
    points: PointSet,
    grid_build_time: Duration,
}

fn run_fast<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
    rule: ConflictRule,
    limits: GridLimits,
) -> Result<RunOutput> {
    check_k(k)?;
    let t = Instant::now();
    let bounds = field.bounds(domain)?;
    let mut grid = build_reach_grid(domain, bounds.r_min, limits)?;
    let grid_build_time = t.elapsed();
    let cap = packing_cap(domain, bounds.r_min);
    let g = grow(field, domain, k, rng, &mut grid, rule, cap)?;
    Ok(RunOutput { points: g.points, grid_build_time })
}

fn run_fast_brute<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
    rule: ConflictRule,
) -> Result<RunOutput> {
    check_k(k)?;
    let bounds = field.bounds(domain)?;
    let cap = packing_cap(domain, bounds.r_min);
    let g = grow(field, domain, k, rng, &mut BruteForce, rule, cap)?;
    Ok(RunOutput { points: g.points, grid_build_time: Duration::ZERO })
}

fn run_tulleken<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
    rule: ConflictRule,
    limits: GridLimits,
) -> Result<RunOutput> {
    check_k(k)?;
    let t = Instant::now();
    let bounds = field.bounds(domain)?;
    let mut grid = build_tulleken_grid(domain, bounds.r_max, limits)?;
    let grid_build_time = t.elapsed();
    let cap = packing_cap(domain, bounds.r_min);
    let g = grow(field, domain, k, rng, &mut grid, rule, cap)?;
    Ok(RunOutput { points: g.points, grid_build_time })
}

fn run_bridson<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
    limits: GridLimits,
) -> Result<RunOutput> {
    check_k(k)?;
    let bounds = field.bounds(domain)?;
    if bounds.r_min != bounds.r_max {
        return Err(Error::InvalidParameter(
            "bridson generation needs a constant radius field".into(),
        ));
    }
    let r = bounds.r_min;
    let t = Instant::now();
    let mut grid = build_bridson_grid(domain, r, limits)?;
    let grid_build_time = t.elapsed();
    let cap = packing_cap(domain, r);
    let g = grow(field, domain, k, rng, &mut grid, ConflictRule::Min, cap)?;
    Ok(RunOutput { points: g.points, grid_build_time })
}

fn run_dart<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    rng: &mut RngState,
    max_consecutive_failures: usize,
    rule: ConflictRule,
) -> Result<RunOutput> {
    if max_consecutive_failures == 0 {
        return Err(Error::InvalidParameter("max_consecutive_failures must be at least 1".into()));
    }
    let bounds = field.bounds(domain)?;
    let cap = packing_cap(domain, bounds.r_min);
    let n = domain.dim();
    let mut points = PointSet::new(n);
    let mut radii = Vec::new();
    let mut cand = vec![0.0; n];
    let mut failures = 0;
    while failures < max_consecutive_failures {
        fill_uniform(domain, rng, &mut cand);
        let r_c = eval_radius(field, &cand)?;
        if BruteForce.has_conflict(&cand, r_c, &points, &radii, rule) {
            failures += 1;
            continue;
        }
        if points.len() >= cap {
            return Err(Error::PackingCapExceeded { accepted: points.len() + 1, cap });
        }
        points.push(&cand);
        radii.push(r_c);
        failures = 0;
    }
    Ok(RunOutput { points, grid_build_time: Duration::ZERO })
}

/// Generator settings shared by every entry point.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub algorithm: Algorithm,
    /// Candidates per active point; `None` picks [`default_k`].
    pub k: Option<usize>,
    /// Per-axis anisotropy factors (each ≥ 1); empty means isotropic.
    pub nu: Vec<f64>,
    pub rule: ConflictRule,
    pub limits: GridLimits,
    pub dart_max_failures: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Fast,
            k: None,
            nu: Vec::new(),
            rule: ConflictRule::Min,
            limits: GridLimits::default(),
            dart_max_failures: DEFAULT_DART_FAILURES,
        }
    }
}

impl GenerateOptions {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_nu(mut self, nu: Vec<f64>) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_rule(mut self, rule: ConflictRule) -> Self {
        self.rule = rule;
        self
    }
}

/// Generates on `domain` shrunk by `nu`, then stretches the result back by `nu`.
///
/// The field is evaluated in the shrunken domain. Output coordinates that round
/// onto the upper face are pulled back inside the half-open domain.
pub fn generate_anisotropic<F: RadiusField + ?Sized>(
    field: &F,
    nu: &[f64],
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
    algorithm: Algorithm,
) -> Result<SamplePattern> {
    let opts = GenerateOptions {
        algorithm,
        k: Some(k),
        nu: nu.to_vec(),
        ..GenerateOptions::default()
    };
    generate_with(field, domain, &opts, rng)
}

/// Runs the configured generator with a fresh stream for `seed`.
pub fn generate<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    opts: &GenerateOptions,
    seed: u64,
) -> Result<SamplePattern> {
    generate_with(field, domain, opts, &mut RngState::new(seed))
}

pub fn generate_with<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    opts: &GenerateOptions,
    rng: &mut RngState,
) -> Result<SamplePattern> {
    let n = domain.dim();
    let nu = if opts.nu.is_empty() { vec![1.0; n] } else { opts.nu.clone() };
    if nu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: nu.len() });
    }
    if let Some(bad) = nu.iter().find(|&&v| !(v >= 1.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("anisotropy factors must be >= 1, got {bad}")));
    }
    let k = opts.k.unwrap_or_else(|| default_k(n));
    let gen_domain = if nu.iter().all(|&v| v == 1.0) {
        domain.clone()
    } else {
        domain.shrink(&nu)?
    };

    let seed = rng.seed();
    let start = Instant::now();
    let out = match opts.algorithm {
        Algorithm::Fast => run_fast(field, k, &gen_domain, rng, opts.rule, opts.limits)?,
        Algorithm::FastBruteForce => run_fast_brute(field, k, &gen_domain, rng, opts.rule)?,
        Algorithm::Tulleken => run_tulleken(field, k, &gen_domain, rng, opts.rule, opts.limits)?,
        Algorithm::Bridson => run_bridson(field, k, &gen_domain, rng, opts.limits)?,
        Algorithm::Dart => run_dart(field, &gen_domain, rng, opts.dart_max_failures, opts.rule)?,
    };
    let wall_time = start.elapsed();

    let mut points = out.points;
    if nu.iter().any(|&v| v != 1.0) {
        for (i, x) in points.coords.iter_mut().enumerate() {
            let d = i % n;
            *x *= nu[d];
            if *x >= domain.hi()[d] {
                *x = domain.hi()[d].next_down();
            }
            if *x < domain.lo()[d] {
                *x = domain.lo()[d];
            }
        }
    }

    let meta = PatternMeta {
        seed,
        gamma: field.gamma(),
        field: field.spec(),
        k: if opts.algorithm == Algorithm::Dart { 0 } else { k },
        algorithm: opts.algorithm,
        rule: opts.rule,
        nu,
        domain: domain.clone(),
        generation_domain: gen_domain,
        wall_time,
        grid_build_time: out.grid_build_time,
    };
    SamplePattern::new(points, meta)
}

/// Variable-density generation over the reach-list grid.
pub fn fast_variable<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
) -> Result<SamplePattern> {
    generate_with(field, domain, &GenerateOptions::new(Algorithm::Fast).with_k(k), rng)
}

/// Same loop as [`fast_variable`] with a full scan in place of the grid.
pub fn fast_variable_brute_force<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
) -> Result<SamplePattern> {
    generate_with(field, domain, &GenerateOptions::new(Algorithm::FastBruteForce).with_k(k), rng)
}

/// Variable-density baseline over the `r_max` list grid.
pub fn tulleken_variable<F: RadiusField + ?Sized>(
    field: &F,
    k: usize,
    domain: &Domain,
    rng: &mut RngState,
) -> Result<SamplePattern> {
    generate_with(field, domain, &GenerateOptions::new(Algorithm::Tulleken).with_k(k), rng)
}

/// Constant-radius generation over the one-point-per-cell grid.
pub fn bridson_constant(r: f64, k: usize, domain: &Domain, rng: &mut RngState) -> Result<SamplePattern> {
    let field = crate::radius::ConstantField::new(r)?;
    generate_with(&field, domain, &GenerateOptions::new(Algorithm::Bridson).with_k(k), rng)
}

/// Uniform rejection sampling; stops after `max_consecutive_failures` rejections in a row.
pub fn dart_throwing<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    rng: &mut RngState,
    max_consecutive_failures: usize,
) -> Result<SamplePattern> {
    let opts = GenerateOptions {
        algorithm: Algorithm::Dart,
        dart_max_failures: max_consecutive_failures,
        ..GenerateOptions::default()
    };
    generate_with(field, domain, &opts, rng)
}

/// Parallel generation for many seeds; each run owns its stream and grid.
pub fn generate_many<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    opts: &GenerateOptions,
    seeds: &[u64],
) -> Vec<Result<SamplePattern>> {
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| generate(field, domain, opts, s)).collect()
}

/// First violating pair found by an audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl Validity {
    fn from(violation: Option<Violation>) -> Self {
        Self { valid: violation.is_none(), violation }
    }
}

fn violation(pts: &PointSet, radii: &[f64], i: usize, j: usize) -> Violation {
    Violation {
        first: i.min(j),
        second: i.max(j),
        distance: dist_sq(pts.get(i), pts.get(j)).sqrt(),
        threshold: radii[i].min(radii[j]),
    }
}

fn generation_radii<F: RadiusField + ?Sized>(pts: &PointSet, field: &F) -> Vec<f64> {
    pts.iter().map(|p| field.radius(p)).collect()
}

/// Checks the min rule over all pairs in the generation domain.
///
/// Pairs are bucketed on a uniform grid of edge `max r`, and only pairs in
/// neighboring buckets are compared. Any violating pair is closer than
/// `max r`, so it always lands in neighboring buckets and the audit is exact.
/// The lowest-indexed violating pair (by first, then second index) is reported.
pub fn is_valid_pattern<F: RadiusField + ?Sized>(pattern: &SamplePattern, field: &F) -> Validity {
    let pts = pattern.generation_points();
    let radii = generation_radii(&pts, field);
    Validity::from(bucket_audit(&pts, &radii))
}

/// Same verdict as [`is_valid_pattern`] by comparing every pair.
pub fn is_valid_pattern_brute<F: RadiusField + ?Sized>(pattern: &SamplePattern, field: &F) -> Validity {
    let pts = pattern.generation_points();
    let radii = generation_radii(&pts, field);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if too_close(pts.get(i), radii[i], pts.get(j), radii[j], ConflictRule::Min) {
                return Validity::from(Some(violation(&pts, &radii, i, j)));
            }
        }
    }
    Validity::from(None)
}

fn bucket_audit(pts: &PointSet, radii: &[f64]) -> Option<Violation> {
    let m = pts.len();
    if m < 2 {
        return None;
    }
    let n = pts.dim();
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        let i = radii.iter().position(|r| !(*r > 0.0) || !r.is_finite()).unwrap_or(0);
        return Some(Violation { first: i, second: i, distance: 0.0, threshold: radii[i] });
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in pts.iter() {
        for d in 0..n {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    // Bucket edge at least r_max, widened so the bucket count stays bounded.
    let max_buckets = (4 * m).max(64) as f64;
    let mut edge = r_max;
    loop {
        let count: f64 = (0..n).map(|d| ((hi[d] - lo[d]) / edge).floor() + 1.0).product();
        if count <= max_buckets {
            break;
        }
        edge *= 2.0;
    }
    let counts: Vec<usize> = (0..n).map(|d| ((hi[d] - lo[d]) / edge).floor() as usize + 1).collect();
    let bucket_of = |p: &[f64]| -> Vec<usize> {
        (0..n)
            .map(|d| (((p[d] - lo[d]) / edge).floor() as usize).min(counts[d] - 1))
            .collect()
    };
    let mut strides = vec![1usize; n];
    for d in 1..n {
        strides[d] = strides[d - 1] * counts[d - 1];
    }
    let total: usize = counts.iter().product();
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); total];
    let cells: Vec<Vec<usize>> = pts.iter().map(|p| bucket_of(p)).collect();
    for (i, c) in cells.iter().enumerate() {
        let flat: usize = c.iter().zip(&strides).map(|(a, s)| a * s).sum();
        buckets[flat].push(i as u32);
    }

    let mut best: Option<(usize, usize)> = None;
    let mut offset = vec![0usize; n];
    for (i, c) in cells.iter().enumerate() {
        // odometer over the 3^n neighborhood
        offset.iter_mut().for_each(|o| *o = 0);
        'outer: loop {
            let mut flat = 0;
            let mut ok = true;
            for d in 0..n {
                let v = c[d] as isize + offset[d] as isize - 1;
                if v < 0 || v >= counts[d] as isize {
                    ok = false;
                    break;
                }
                flat += v as usize * strides[d];
            }
            if ok {
                for &j in &buckets[flat] {
                    let j = j as usize;
                    if j > i && too_close(pts.get(i), radii[i], pts.get(j), radii[j], ConflictRule::Min) {
                        let cand = (i, j);
                        if best.map_or(true, |b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
            for d in 0..n {
                offset[d] += 1;
                if offset[d] < 3 {
                    continue 'outer;
                }
                offset[d] = 0;
            }
            break;
        }
        if best.is_some_and(|(bi, _)| bi == i) {
            break;
        }
    }
    best.map(|(i, j)| violation(pts, radii, i, j))
}
