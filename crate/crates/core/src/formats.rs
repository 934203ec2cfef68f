//! Point and metadata file formats.
//!
//! Points CSV, version 1:
//!
//! ```text
//! # pdisc v1, n=2, seed=1, gamma=150, nu=1:1, k=10, algo=fast, rule=min, field=parametric, offset=0.15, lo=-0.5:-0.5, hi=0.5:0.5
//! -1.2345678901234567e-1,4.0000000000000002e-1
//! ```
//!
//! `n`, `seed`, `gamma` and `nu` are required; the rest default to the unit
//! domain, `k` for the dimension, `fast`, `min` and no field record. Vectors
//! are `:`-separated. Coordinates carry 17 significant digits, so reading
//! back reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::mask::MaskRaster;
use crate::radius::FieldSpec;
use crate::sampler::{default_k, Algorithm, ConflictRule, PatternMeta, PointSet, SamplePattern};

pub const FORMAT_TAG: &str = "pdisc v1";
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
}

fn rule_name(rule: ConflictRule) -> &'static str {
    match rule {
        ConflictRule::Min => "min",
        ConflictRule::CandidateOnly => "candidate",
    }
}

pub fn csv_header(meta: &PatternMeta) -> String {
    let mut h = format!(
        "# {FORMAT_TAG}, n={}, seed={}, gamma={}, nu={}, k={}, algo={}, rule={}",
        meta.domain.dim(),
        meta.seed,
        meta.gamma,
        join(&meta.nu),
        meta.k,
        meta.algorithm,
        rule_name(meta.rule),
    );
    match meta.field {
        Some(FieldSpec::Parametric { offset, .. }) => {
            let _ = write!(h, ", field=parametric, offset={offset}");
        }
        Some(FieldSpec::Constant { radius }) => {
            let _ = write!(h, ", field=constant, radius={radius}");
        }
        None => {}
    }
    let _ = write!(h, ", lo={}, hi={}", join(meta.domain.lo()), join(meta.domain.hi()));
    h
}

pub fn points_to_csv(pattern: &SamplePattern) -> String {
    let mut out = csv_header(pattern.meta());
    out.push('\n');
    for p in pattern.points().iter() {
        for (d, x) in p.iter().enumerate() {
            if d > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_points_csv(pattern: &SamplePattern, path: &Path) -> Result<()> {
    fs::write(path, points_to_csv(pattern))?;
    Ok(())
}

pub fn read_points_csv(path: &Path) -> Result<SamplePattern> {
    let text = fs::read_to_string(path)?;
    parse_points_csv(&text, path)
}

struct HeaderFields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> HeaderFields<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

/// Parses the CSV text; `path` is only used in error messages.
pub fn parse_points_csv(text: &str, path: &Path) -> Result<SamplePattern> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let body = header
        .strip_prefix("# ")
        .and_then(|h| h.strip_prefix(FORMAT_TAG))
        .ok_or_else(|| err(1, format!("header must start with `# {FORMAT_TAG}`")))?;
    let mut pairs = Vec::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| err(1, format!("header field {item:?} is not key=value")))?;
        pairs.push((k.trim(), v.trim()));
    }
    let fields = HeaderFields { pairs };
    let need = |key: &str| fields.get(key).ok_or_else(|| err(1, format!("header lacks `{key}`")));
    let num = |key: &str, v: &str| -> Result<f64> {
        v.parse::<f64>().map_err(|_| err(1, format!("`{key}` is not a number: {v:?}")))
    };
    let vec_of = |key: &str, v: &str| -> Result<Vec<f64>> { v.split(':').map(|x| num(key, x)).collect() };

    let n: usize = need("n")?.parse().map_err(|_| err(1, "`n` is not a dimension".into()))?;
    if n == 0 {
        return Err(err(1, "`n` must be positive".into()));
    }
    let seed: u64 = need("seed")?.parse().map_err(|_| err(1, "`seed` is not an integer".into()))?;
    let gamma = num("gamma", need("gamma")?)?;
    let nu = vec_of("nu", need("nu")?)?;
    if nu.len() != n {
        return Err(err(1, format!("`nu` has {} entries for n={n}", nu.len())));
    }
    let k = match fields.get("k") {
        Some(v) => v.parse().map_err(|_| err(1, "`k` is not an integer".into()))?,
        None => default_k(n),
    };
    let algorithm = match fields.get("algo") {
        Some(v) => v.parse::<Algorithm>().map_err(|e| err(1, e.to_string()))?,
        None => Algorithm::Fast,
    };
    let rule = match fields.get("rule") {
        None | Some("min") => ConflictRule::Min,
        Some("candidate") => ConflictRule::CandidateOnly,
        Some(other) => return Err(err(1, format!("unknown rule {other:?}"))),
    };
    let field = match fields.get("field") {
        None => None,
        Some("parametric") => Some(FieldSpec::Parametric { gamma, offset: num("offset", need("offset")?)? }),
        Some("constant") => Some(FieldSpec::Constant { radius: num("radius", need("radius")?)? }),
        Some(other) => return Err(err(1, format!("unknown field family {other:?}"))),
    };
    let domain = match (fields.get("lo"), fields.get("hi")) {
        (Some(lo), Some(hi)) => {
            Domain::new(vec_of("lo", lo)?, vec_of("hi", hi)?).map_err(|e| err(1, e.to_string()))?
        }
        (None, None) => Domain::unit(n),
        _ => return Err(err(1, "`lo` and `hi` must appear together".into())),
    };
    if domain.dim() != n {
        return Err(err(1, format!("domain has {} axes for n={n}", domain.dim())));
    }
    let generation_domain = domain.shrink(&nu).map_err(|e| err(1, e.to_string()))?;

    let mut coords = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != n {
            return Err(err(line_no, format!("expected {n} columns, found {}", row.len())));
        }
        for cell in row {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("not a number: {cell:?}")))?;
            if !x.is_finite() {
                return Err(err(line_no, format!("non-finite coordinate {cell:?}")));
            }
            coords.push(x);
        }
    }
    let points = PointSet::from_flat(n, coords)?;
    let meta = PatternMeta {
        seed,
        gamma,
        field,
        k,
        algorithm,
        rule,
        nu,
        domain,
        generation_domain,
        wall_time: Duration::ZERO,
        grid_build_time: Duration::ZERO,
    };
    SamplePattern::new(points, meta)
}

/// Generation metadata without timings, so identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableMeta {
    pub seed: u64,
    pub gamma: f64,
    pub field: Option<FieldSpec>,
    pub k: usize,
    pub algorithm: Algorithm,
    pub rule: ConflictRule,
    pub nu: Vec<f64>,
    pub domain: Domain,
    pub generation_domain: Domain,
}

impl From<&PatternMeta> for StableMeta {
    fn from(m: &PatternMeta) -> Self {
        Self {
            seed: m.seed,
            gamma: m.gamma,
            field: m.field,
            k: m.k,
            algorithm: m.algorithm,
            rule: m.rule,
            nu: m.nu.clone(),
            domain: m.domain.clone(),
            generation_domain: m.generation_domain.clone(),
        }
    }
}

impl From<StableMeta> for PatternMeta {
    fn from(m: StableMeta) -> Self {
        Self {
            seed: m.seed,
            gamma: m.gamma,
            field: m.field,
            k: m.k,
            algorithm: m.algorithm,
            rule: m.rule,
            nu: m.nu,
            domain: m.domain,
            generation_domain: m.generation_domain,
            wall_time: Duration::ZERO,
            grid_build_time: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsJson {
    pub format: String,
    pub meta: StableMeta,
    pub points: Vec<Vec<f64>>,
}

pub fn points_to_json(pattern: &SamplePattern) -> Result<String> {
    let doc = PointsJson {
        format: FORMAT_TAG.to_string(),
        meta: pattern.meta().into(),
        points: pattern.points().iter().map(<[f64]>::to_vec).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_points_json(pattern: &SamplePattern, path: &Path) -> Result<()> {
    fs::write(path, points_to_json(pattern)?)?;
    Ok(())
}

pub fn read_points_json(path: &Path) -> Result<SamplePattern> {
    let doc: PointsJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    if doc.format != FORMAT_TAG {
        return Err(Error::Parse { path: path.to_path_buf(), line: 1, msg: format!("unknown format {:?}", doc.format) });
    }
    let n = doc.meta.domain.dim();
    let mut coords = Vec::with_capacity(doc.points.len() * n);
    for (i, p) in doc.points.iter().enumerate() {
        if p.len() != n {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("point {i} has {} coordinates, expected {n}", p.len()),
            });
        }
        coords.extend_from_slice(p);
    }
    SamplePattern::new(PointSet::from_flat(n, coords)?, doc.meta.into())
}

/// Reads points by extension: `.json` as JSON, anything else as CSV.
pub fn read_points(path: &Path) -> Result<SamplePattern> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_points_json(path),
        _ => read_points_csv(path),
    }
}

/// Metadata written next to every CLI artifact. Holds no timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub library_version: String,
    pub dims: usize,
    pub seed: u64,
    pub gamma: f64,
    pub field: Option<FieldSpec>,
    pub k: usize,
    pub nu: Vec<f64>,
    pub algorithm: Algorithm,
    pub rule: ConflictRule,
    pub domain: Domain,
    pub point_count: usize,
    pub matrix: Vec<usize>,
    /// Index of the k-space center along each axis.
    pub center_index: Vec<usize>,
    pub occupied_cells: usize,
    pub pattern_cells: usize,
    pub duplicates: usize,
    pub calibration_cells: usize,
    pub acceleration_rate: f64,
}

impl Sidecar {
    pub fn new(pattern: &SamplePattern, mask: &MaskRaster) -> Self {
        let m = pattern.meta();
        Self {
            format: FORMAT_TAG.to_string(),
            library_version: LIBRARY_VERSION.to_string(),
            dims: pattern.dim(),
            seed: m.seed,
            gamma: m.gamma,
            field: m.field,
            k: m.k,
            nu: m.nu.clone(),
            algorithm: m.algorithm,
            rule: m.rule,
            domain: m.domain.clone(),
            point_count: pattern.len(),
            matrix: mask.sizes().to_vec(),
            center_index: mask.sizes().iter().map(|m| m / 2).collect(),
            occupied_cells: mask.occupied(),
            pattern_cells: mask.pattern_cells(),
            duplicates: mask.duplicates(),
            calibration_cells: mask.calibration_cells(),
            acceleration_rate: mask.total_cells() as f64 / mask.occupied().max(1) as f64,
        }
    }
}

/// Wall-clock record kept apart from the sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_ms: f64,
    pub grid_build_time_ms: f64,
}

impl Timing {
    pub fn of(meta: &PatternMeta) -> Self {
        Self {
            wall_time_ms: meta.wall_time.as_secs_f64() * 1e3,
            grid_build_time_ms: meta.grid_build_time.as_secs_f64() * 1e3,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// `dir/stem.suffix`, e.g. the sidecar `out/pattern.meta.json` for `out/pattern.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("pattern");
    path.with_file_name(format!("{stem}.{suffix}"))
}
