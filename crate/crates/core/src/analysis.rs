//! Pattern-quality metrics.
//!
//! Voronoi areas are computed on a raster: every pixel center goes to its
//! nearest sample (lowest index on exact ties), and a cell's area is its
//! pixel count times the pixel area.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist_sq, norm, uniform_in_domain, Domain};
use crate::radius::RadiusField;
use crate::rng::RngState;
use crate::sampler::{PointSet, SamplePattern};

pub const DEFAULT_RESOLUTION: usize = 1024;
pub const MIN_RESOLUTION: usize = 256;
pub const DEFAULT_BINS: usize = 20;
pub const MIN_PROBES: usize = 10_000;

/// Uniform bucket index over a point set for nearest and ball queries.
#[derive(Debug, Clone)]
pub struct PointIndex<'a> {
    pts: &'a PointSet,
    lo: Vec<f64>,
    edge: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> PointIndex<'a> {
    /// Buckets sized for about two points each over `domain`.
    pub fn new(pts: &'a PointSet, domain: &Domain) -> Result<Self> {
        let n = domain.dim();
        if pts.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pts.dim() });
        }
        let target = (pts.len() / 2).max(1) as f64;
        let mut edge = (domain.volume() / target).powf(1.0 / n as f64);
        let cap = 4 * pts.len().max(16);
        let count_for = |edge: f64| -> Vec<usize> {
            (0..n).map(|d| ((domain.extent(d) / edge).ceil() as usize).max(1)).collect()
        };
        let mut counts = count_for(edge);
        while counts.iter().product::<usize>() > cap {
            edge *= 1.25;
            counts = count_for(edge);
        }
        let mut strides = vec![1usize; n];
        for d in 1..n {
            strides[d] = strides[d - 1] * counts[d - 1];
        }
        let total: usize = counts.iter().product();
        let mut index = Self {
            pts,
            lo: domain.lo().to_vec(),
            edge,
            counts,
            strides,
            start: vec![0; total + 1],
            items: vec![0; pts.len()],
        };
        let flats: Vec<usize> = pts.iter().map(|p| index.flat_of(p)).collect();
        for &f in &flats {
            index.start[f + 1] += 1;
        }
        for b in 0..total {
            index.start[b + 1] += index.start[b];
        }
        let mut fill = index.start.clone();
        for (i, &f) in flats.iter().enumerate() {
            index.items[fill[f] as usize] = i as u32;
            fill[f] += 1;
        }
        Ok(index)
    }

    fn axis_bucket(&self, d: usize, x: f64) -> usize {
        let i = ((x - self.lo[d]) / self.edge).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.counts[d] - 1)
        }
    }

    fn flat_of(&self, p: &[f64]) -> usize {
        (0..p.len()).map(|d| self.axis_bucket(d, p[d]) * self.strides[d]).sum()
    }

    fn bucket(&self, flat: usize) -> &[u32] {
        &self.items[self.start[flat] as usize..self.start[flat + 1] as usize]
    }

    /// Visits every bucket whose per-axis offset from `home` is at most `s`
    /// and exactly `s` on some axis.
    fn visit_shell(&self, home: &[usize], s: usize, f: &mut impl FnMut(usize)) {
        let n = home.len();
        let mut idx = vec![0isize; n];
        let lo: Vec<isize> = home.iter().map(|&h| h as isize - s as isize).collect();
        for d in 0..n {
            idx[d] = lo[d];
        }
        loop {
            let on_shell = (0..n).any(|d| (idx[d] - home[d] as isize).unsigned_abs() == s);
            let inside = (0..n).all(|d| idx[d] >= 0 && (idx[d] as usize) < self.counts[d]);
            if on_shell && inside {
                f((0..n).map(|d| idx[d] as usize * self.strides[d]).sum());
            }
            let mut d = 0;
            loop {
                if d == n {
                    return;
                }
                idx[d] += 1;
                if idx[d] <= home[d] as isize + s as isize {
                    break;
                }
                idx[d] = lo[d];
                d += 1;
            }
        }
    }

    /// Nearest point to `z` as `(index, squared distance)`; ties go to the
    /// lowest index.
    pub fn nearest(&self, z: &[f64]) -> Option<(usize, f64)> {
        if self.pts.is_empty() {
            return None;
        }
        let home: Vec<usize> = (0..z.len()).map(|d| self.axis_bucket(d, z[d])).collect();
        let max_shell = self.counts.iter().max().copied().unwrap_or(1);
        let mut best: Option<(usize, f64)> = None;
        for s in 0..=max_shell {
            if let Some((_, d2)) = best {
                // every bucket on shell s is at least (s - 1) edges away
                let gap = (s as f64 - 1.0) * self.edge;
                if gap > 0.0 && gap * gap > d2 * (1.0 + 1e-12) {
                    break;
                }
            }
            self.visit_shell(&home, s, &mut |flat| {
                for &j in self.bucket(flat) {
                    let j = j as usize;
                    let d2 = dist_sq(z, self.pts.get(j));
                    let better = match best {
                        None => true,
                        Some((bj, bd)) => d2 < bd || (d2 == bd && j < bj),
                    };
                    if better {
                        best = Some((j, d2));
                    }
                }
            });
        }
        best
    }

    /// Calls `f(j, squared distance)` for every point with `|z - p_j| <= r`.
    pub fn within(&self, z: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        let n = z.len();
        let r2 = r * r;
        let first: Vec<usize> = (0..n).map(|d| self.axis_bucket(d, z[d] - r)).collect();
        let last: Vec<usize> = (0..n).map(|d| self.axis_bucket(d, z[d] + r)).collect();
        let mut idx = first.clone();
        loop {
            let flat: usize = (0..n).map(|d| idx[d] * self.strides[d]).sum();
            for &j in self.bucket(flat) {
                let d2 = dist_sq(z, self.pts.get(j as usize));
                if d2 <= r2 {
                    f(j as usize, d2);
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    return;
                }
                if idx[d] < last[d] {
                    idx[d] += 1;
                    break;
                }
                idx[d] = first[d];
                d += 1;
            }
        }
    }
}

/// One Voronoi cell: owning point, its distance from the origin, its area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoronoiRecord {
    pub index: usize,
    pub distance: f64,
    pub area: f64,
    /// The cell owns at least one pixel on the domain edge.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoronoiProfile {
    pub resolution: usize,
    pub domain: Domain,
    pub records: Vec<VoronoiRecord>,
}

impl VoronoiProfile {
    pub fn total_area(&self) -> f64 {
        self.records.iter().map(|r| r.area).sum()
    }

    /// `|Σ areas - domain area| / domain area`.
    pub fn conservation_error(&self) -> f64 {
        let v = self.domain.volume();
        (self.total_area() - v).abs() / v
    }

    /// Concatenates the records of several profiles taken at one resolution.
    pub fn pooled(profiles: &[VoronoiProfile]) -> Result<VoronoiProfile> {
        let first = profiles
            .first()
            .ok_or_else(|| Error::InvalidParameter("nothing to pool".into()))?;
        if profiles.iter().any(|p| p.resolution != first.resolution || p.domain != first.domain) {
            return Err(Error::InvalidParameter("pooled profiles differ in domain or resolution".into()));
        }
        let records = profiles.iter().flat_map(|p| p.records.iter().copied()).collect();
        Ok(VoronoiProfile { resolution: first.resolution, domain: first.domain.clone(), records })
    }

    /// Drops cells that touch the domain edge.
    pub fn without_boundary(&self) -> VoronoiProfile {
        VoronoiProfile {
            resolution: self.resolution,
            domain: self.domain.clone(),
            records: self.records.iter().copied().filter(|r| !r.boundary).collect(),
        }
    }
}

/// Raster Voronoi areas of a 2D pattern at `resolution × resolution` pixels.
pub fn voronoi_areas(pattern: &SamplePattern, resolution: usize) -> Result<VoronoiProfile> {
    if pattern.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "voronoi areas are defined for 2D patterns only, got {}D",
            pattern.dim()
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if pattern.is_empty() {
        return Err(Error::InvalidParameter("voronoi areas need at least one point".into()));
    }
    let domain = &pattern.meta().domain;
    let index = PointIndex::new(pattern.points(), domain)?;
    let (dx, dy) = (domain.extent(0) / resolution as f64, domain.extent(1) / resolution as f64);
    let (x0, y0) = (domain.lo()[0], domain.lo()[1]);
    let d = resolution;

    let rows: Vec<Vec<u32>> = (0..d)
        .into_par_iter()
        .map(|row| {
            let y = y0 + (row as f64 + 0.5) * dy;
            (0..d)
                .map(|col| {
                    let x = x0 + (col as f64 + 0.5) * dx;
                    index.nearest(&[x, y]).map(|(j, _)| j as u32).unwrap_or(0)
                })
                .collect()
        })
        .collect();

    let mut pixels = vec![0usize; pattern.len()];
    let mut boundary = vec![false; pattern.len()];
    for (row, owners) in rows.iter().enumerate() {
        for (col, &j) in owners.iter().enumerate() {
            pixels[j as usize] += 1;
            if row == 0 || col == 0 || row == d - 1 || col == d - 1 {
                boundary[j as usize] = true;
            }
        }
    }
    let pixel_area = dx * dy;
    let records = (0..pattern.len())
        .map(|i| VoronoiRecord {
            index: i,
            distance: norm(pattern.point(i)),
            area: pixels[i] as f64 * pixel_area,
            boundary: boundary[i],
        })
        .collect();
    Ok(VoronoiProfile { resolution, domain: domain.clone(), records })
}

/// Per-bin comparison of two profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count_a: usize,
    pub count_b: usize,
    pub median_a: Option<f64>,
    pub median_b: Option<f64>,
    /// `|median_b - median_a| / median_a`; `None` when either side is empty.
    pub relative_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileComparison {
    pub bins: Vec<BinStat>,
    /// Bins skipped because one of the profiles had no records there.
    pub empty_bins: Vec<usize>,
}

impl ProfileComparison {
    /// Largest relative median difference over the bins both profiles fill.
    pub fn max_relative_difference(&self) -> f64 {
        self.bins
            .iter()
            .filter_map(|b| b.relative_difference)
            .fold(0.0, f64::max)
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Bins both profiles by distance from the origin, equal-width over
/// `[0, |farthest corner|]`, and compares per-bin median areas.
pub fn profile_similarity(a: &VoronoiProfile, b: &VoronoiProfile, bins: usize) -> Result<ProfileComparison> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    if a.domain != b.domain || a.resolution != b.resolution {
        return Err(Error::InvalidParameter("profiles differ in domain or resolution".into()));
    }
    let origin = vec![0.0; a.domain.dim()];
    let span = norm(&a.domain.farthest_corner(&origin));
    let width = span / bins as f64;
    let split = |p: &VoronoiProfile| -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); bins];
        for r in &p.records {
            let k = ((r.distance / width).floor() as usize).min(bins - 1);
            out[k].push(r.area);
        }
        out
    };
    let (mut sa, mut sb) = (split(a), split(b));
    let mut stats = Vec::with_capacity(bins);
    let mut empty = Vec::new();
    for k in 0..bins {
        let (count_a, count_b) = (sa[k].len(), sb[k].len());
        let (median_a, median_b) = (median(&mut sa[k]), median(&mut sb[k]));
        let relative_difference = match (median_a, median_b) {
            (Some(x), Some(y)) => Some((y - x).abs() / x),
            _ => {
                empty.push(k);
                None
            }
        };
        stats.push(BinStat {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count_a,
            count_b,
            median_a,
            median_b,
            relative_difference,
        });
    }
    Ok(ProfileComparison { bins: stats, empty_bins: empty })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport {
    pub probes: usize,
    /// Fraction of probes `z` with a sample within `r(z)`.
    pub within_r: f64,
    /// Fraction of probes `z` with a sample within `2 r(z)`.
    pub within_2r: f64,
}

impl CoverageReport {
    /// `(multiplier, fraction)` rows.
    pub fn rows(&self) -> [(f64, f64); 2] {
        [(1.0, self.within_r), (2.0, self.within_2r)]
    }
}

/// Monte-Carlo estimate of how close a pattern is to maximal.
///
/// Probes are uniform over the generation domain and distances are taken
/// there, where the field applies.
pub fn coverage_fraction<F: RadiusField + ?Sized>(
    pattern: &SamplePattern,
    field: &F,
    probes: usize,
    rng: &mut RngState,
) -> Result<CoverageReport> {
    if probes < MIN_PROBES {
        return Err(Error::InvalidParameter(format!(
            "coverage needs at least {MIN_PROBES} probes, got {probes}"
        )));
    }
    let domain = &pattern.meta().generation_domain;
    let pts = pattern.generation_points();
    if pts.is_empty() {
        return Ok(CoverageReport { probes, within_r: 0.0, within_2r: 0.0 });
    }
    let index = PointIndex::new(&pts, domain)?;
    let (mut one, mut two) = (0usize, 0usize);
    for _ in 0..probes {
        let z = uniform_in_domain(domain, rng);
        let r = field.radius(&z);
        if let Some((_, d2)) = index.nearest(&z) {
            if d2 <= r * r {
                one += 1;
            }
            if d2 <= 4.0 * r * r {
                two += 1;
            }
        }
    }
    Ok(CoverageReport {
        probes,
        within_r: one as f64 / probes as f64,
        within_2r: two as f64 / probes as f64,
    })
}

/// Nearest-neighbor margins against the min rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NnStats {
    /// `min_p min_q |p - q| / min(r(p), r(q))`.
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// Point attaining `min_ratio`.
    pub argmin: usize,
    /// True iff every ratio exceeds 1.
    pub valid: bool,
}

/// Per point, the smallest distance-to-threshold ratio over all other points.
pub fn nn_stats<F: RadiusField + ?Sized>(pattern: &SamplePattern, field: &F) -> Result<NnStats> {
    if pattern.len() < 2 {
        return Err(Error::InvalidParameter("nn_stats needs at least two points".into()));
    }
    let domain = &pattern.meta().generation_domain;
    let pts = pattern.generation_points();
    let radii: Vec<f64> = pts.iter().map(|p| field.radius(p)).collect();
    let index = PointIndex::new(&pts, domain)?;
    let ratios: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let p = pts.get(i);
            let ratio = |j: usize, d2: f64| d2.sqrt() / radii[i].min(radii[j]);
            let (nn, d2) = nearest_other(&index, p, i);
            let mut best = ratio(nn, d2);
            // min(r_p, r_q) <= r_p, so any q beating `best` lies within best * r_p
            index.within(p, best * radii[i], |j, d2| {
                if j != i {
                    best = best.min(ratio(j, d2));
                }
            });
            best
        })
        .collect();
    let (argmin, &min_ratio) = ratios
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least two points");
    Ok(NnStats {
        min_ratio,
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        max_ratio: ratios.iter().cloned().fold(0.0, f64::max),
        argmin,
        valid: min_ratio > 1.0,
    })
}

fn nearest_other(index: &PointIndex<'_>, p: &[f64], i: usize) -> (usize, f64) {
    let mut r = index.edge;
    loop {
        let mut best: Option<(usize, f64)> = None;
        index.within(p, r, |j, d2| {
            if j != i && best.map_or(true, |(_, b)| d2 < b) {
                best = Some((j, d2));
            }
        });
        if let Some(b) = best {
            return b;
        }
        r *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::tests_support::pattern_of;
    use crate::radius::{ConstantField, ParametricField};
    use crate::sampler::{bridson_constant, generate, GenerateOptions};

    fn brute_nearest(pts: &PointSet, z: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, p) in pts.iter().enumerate() {
            let d2 = dist_sq(z, p);
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        best
    }

    #[test]
    fn index_nearest_matches_scan() {
        let f = ParametricField::new(40.0).unwrap();
        let p = generate(&f, &Domain::unit(2), &GenerateOptions::default(), 4).unwrap();
        let index = PointIndex::new(p.points(), &Domain::unit(2)).unwrap();
        let mut rng = RngState::new(9);
        for _ in 0..2000 {
            let z = uniform_in_domain(&Domain::unit(2), &mut rng);
            assert_eq!(index.nearest(&z).unwrap(), brute_nearest(p.points(), &z));
        }
    }

    #[test]
    fn index_nearest_matches_scan_3d() {
        let f = ParametricField::new(8.0).unwrap();
        let p = generate(&f, &Domain::unit(3), &GenerateOptions::default(), 4).unwrap();
        let index = PointIndex::new(p.points(), &Domain::unit(3)).unwrap();
        let mut rng = RngState::new(10);
        for _ in 0..500 {
            let z = uniform_in_domain(&Domain::unit(3), &mut rng);
            assert_eq!(index.nearest(&z).unwrap(), brute_nearest(p.points(), &z));
        }
    }

    #[test]
    fn single_point_owns_everything() {
        let p = pattern_of(2, vec![0.1, -0.2]);
        let v = voronoi_areas(&p, 256).unwrap();
        assert_eq!(v.records.len(), 1);
        assert!((v.records[0].area - 1.0).abs() < 1e-12);
        assert!(v.records[0].boundary);
    }

    #[test]
    fn mirrored_pair_splits_evenly() {
        let p = pattern_of(2, vec![0.1, 0.2, 0.1, -0.2]);
        let v = voronoi_areas(&p, 256).unwrap();
        assert!((v.records[0].area - v.records[1].area).abs() < 1e-12);
    }

    #[test]
    fn regular_four_point_grid() {
        let p = pattern_of(2, vec![-0.25, -0.25, 0.25, -0.25, -0.25, 0.25, 0.25, 0.25]);
        let d = 300;
        let v = voronoi_areas(&p, d).unwrap();
        let slack = 2.0 / d as f64;
        for r in &v.records {
            assert!((r.area - 0.25).abs() <= slack, "{}", r.area);
        }
        assert!(v.conservation_error() < 1e-12);
    }

    #[test]
    fn rejects_3d_and_low_resolution() {
        let p3 = pattern_of(3, vec![0.0, 0.0, 0.0]);
        assert!(matches!(voronoi_areas(&p3, 256), Err(Error::Unsupported(_))));
        let p2 = pattern_of(2, vec![0.0, 0.0]);
        assert!(voronoi_areas(&p2, 255).is_err());
    }

    #[test]
    fn profile_against_itself_is_zero() {
        let f = ParametricField::new(30.0).unwrap();
        let p = generate(&f, &Domain::unit(2), &GenerateOptions::default(), 2).unwrap();
        let v = voronoi_areas(&p, 256).unwrap();
        let c = profile_similarity(&v, &v, DEFAULT_BINS).unwrap();
        assert_eq!(c.max_relative_difference(), 0.0);
        assert_eq!(c.bins.len(), 20);
    }

    #[test]
    fn sparser_pattern_has_larger_cells() {
        let d = Domain::unit(2);
        let lo = generate(&ParametricField::new(50.0).unwrap(), &d, &GenerateOptions::default(), 1).unwrap();
        let hi = generate(&ParametricField::new(150.0).unwrap(), &d, &GenerateOptions::default(), 1).unwrap();
        let a = voronoi_areas(&lo, 512).unwrap();
        let b = voronoi_areas(&hi, 512).unwrap();
        let c = profile_similarity(&a, &b, DEFAULT_BINS).unwrap();
        for bin in c.bins.iter().filter(|b| b.relative_difference.is_some()) {
            assert!(bin.median_a.unwrap() > bin.median_b.unwrap(), "{bin:?}");
        }
    }

    #[test]
    fn coverage_of_empty_pattern_is_zero() {
        let p = pattern_of(2, vec![0.0, 0.0]);
        let empty = SamplePattern::new(PointSet::new(2), p.meta().clone()).unwrap();
        let f = ConstantField::new(0.1).unwrap();
        let c = coverage_fraction(&empty, &f, MIN_PROBES, &mut RngState::new(0)).unwrap();
        assert_eq!(c.within_r, 0.0);
        assert!(coverage_fraction(&p, &f, 100, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn coverage_is_nested() {
        let f = ParametricField::new(60.0).unwrap();
        let p = generate(&f, &Domain::unit(2), &GenerateOptions::default(), 3).unwrap();
        let c = coverage_fraction(&p, &f, MIN_PROBES, &mut RngState::new(1)).unwrap();
        assert!(c.within_2r >= c.within_r);
        assert!(c.within_r > 0.9);
    }

    #[test]
    fn nn_ratio_bounds_for_constant_radius() {
        let d = Domain::unit(2);
        let p = bridson_constant(0.1, 30, &d, &mut RngState::new(5)).unwrap();
        let s = nn_stats(&p, &ConstantField::new(0.1).unwrap()).unwrap();
        assert!(s.valid && s.min_ratio > 1.0);
        assert!(s.mean_ratio > 1.0 && s.mean_ratio <= 2.0, "{s:?}");
    }

    #[test]
    fn lattice_at_spacing_r_is_flagged() {
        let p = pattern_of(2, vec![0.0, 0.0, 0.25, 0.0, 0.0, 0.25]);
        let s = nn_stats(&p, &ConstantField::new(0.25).unwrap()).unwrap();
        assert_eq!(s.min_ratio, 1.0);
        assert!(!s.valid);
    }

    #[test]
    fn nn_ratio_matches_pairwise_scan() {
        let f = ParametricField::new(30.0).unwrap();
        let p = generate(&f, &Domain::unit(2), &GenerateOptions::default(), 8).unwrap();
        let s = nn_stats(&p, &f).unwrap();
        let pts = p.points();
        let mut want = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    let t = f.radius(pts.get(i)).min(f.radius(pts.get(j)));
                    want = want.min(dist_sq(pts.get(i), pts.get(j)).sqrt() / t);
                }
            }
        }
        assert_eq!(s.min_ratio, want);
    }
}
