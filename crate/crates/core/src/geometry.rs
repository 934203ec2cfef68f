//! Points, rectangular domains and the candidate generators built on [`RngState`].

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// A finite coordinate in the n-dimensional sampling domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point must have at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(coords));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned box `[lo, hi)` with half-open membership on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidDomain("domain needs at least one axis".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        for (d, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::InvalidDomain(format!("axis {d}: need finite lo < hi, got [{l}, {h})")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The unit-centered cube `[-0.5, 0.5)^dim`.
    pub fn unit(dim: usize) -> Self {
        assert!(dim >= 1, "domain needs at least one axis");
        Self {
            lo: vec![-0.5; dim],
            hi: vec![0.5; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.extent(d)).product()
    }

    /// Length of the main diagonal.
    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|d| self.extent(d).powi(2)).sum::<f64>().sqrt()
    }

    /// Half-open membership without a dimension check.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&l, &h))| l <= x && x < h)
    }

    /// Divides each axis by the matching factor: `[lo/f, hi/f)`.
    pub fn shrink(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: factors.len() });
        }
        let lo = self.lo.iter().zip(factors).map(|(l, f)| l / f).collect();
        let hi = self.hi.iter().zip(factors).map(|(h, f)| h / f).collect();
        Self::new(lo, hi)
    }

    /// Point of the closed box nearest to `p`.
    pub fn nearest_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| x.clamp(l, h))
            .collect()
    }

    /// Corner of the closed box farthest from `p`.
    pub fn farthest_corner(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| if (x - l).abs() >= (h - x).abs() { l } else { h })
            .collect()
    }
}

/// Half-open membership test `lo[d] <= p[d] < hi[d]`.
pub fn in_domain(domain: &Domain, p: &[f64]) -> Result<bool> {
    if p.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: p.len() });
    }
    Ok(domain.contains(p))
}

/// Each coordinate drawn independently and uniformly on `[lo[d], hi[d])`.
pub fn uniform_in_domain(domain: &Domain, rng: &mut RngState) -> Point {
    let mut out = vec![0.0; domain.dim()];
    fill_uniform(domain, rng, &mut out);
    Point(out)
}

pub(crate) fn fill_uniform(domain: &Domain, rng: &mut RngState, out: &mut [f64]) {
    for (x, (&l, &h)) in out.iter_mut().zip(domain.lo.iter().zip(&domain.hi)) {
        *x = rng.uniform_range(l, h);
    }
}

/// Candidate around `center` at distance in `[r, 2r]`.
///
/// The direction is a normalized vector of independent standard normals and the
/// magnitude is uniform on `[r, 2r]`. This is uniform in direction and in radius,
/// not uniform in annulus volume.
pub fn sample_annulus(center: &[f64], r: f64, rng: &mut RngState) -> Result<Point> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("annulus radius must be positive, got {r}")));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(center.to_vec()));
    }
    let mut out = vec![0.0; center.len()];
    fill_annulus(center, r, rng, &mut out);
    Ok(Point(out))
}

/// Draw order: `n` normals (redrawn as a block if all are zero), then one uniform.
#[inline]
pub(crate) fn fill_annulus(center: &[f64], r: f64, rng: &mut RngState, out: &mut [f64]) {
    let norm = loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            *x = rng.standard_normal();
            sq += *x * *x;
        }
        if sq > 0.0 {
            break sq.sqrt();
        }
    };
    let magnitude = r + r * rng.uniform();
    let scale = magnitude / norm;
    for (x, &c) in out.iter_mut().zip(center) {
        *x = c + *x * scale;
    }
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
