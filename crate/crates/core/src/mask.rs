//! Cartesian k-space masks.
//!
//! A pattern on `[-0.5, 0.5)^n` maps to a matrix of `M_d` cells per axis with
//! `index = clamp(floor((x + 0.5) * M), 0, M - 1)`, which puts the k-space
//! center at index `floor(M/2)`. Occupancy is stored with axis 0 varying
//! fastest.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::SamplePattern;

/// Optional fully-sampled center region OR-ed into the mask after rasterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Calibration {
    /// Centered box of the given full widths in cells.
    Rect { widths: Vec<usize> },
    /// Centered ellipsoid with the given half-widths in cells.
    Ellipse { half_widths: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskRaster {
    sizes: Vec<usize>,
    occupancy: Vec<bool>,
    /// Distinct cells hit by pattern points.
    pattern_cells: usize,
    /// Points that fell into an already-occupied cell.
    duplicates: usize,
    /// Cells added by the calibration region that no point had hit.
    calibration_cells: usize,
}

impl MaskRaster {
    pub fn empty(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!("matrix sizes must be >= 1, got {sizes:?}")));
        }
        let total = sizes
            .iter()
            .try_fold(1usize, |a, &s| a.checked_mul(s))
            .filter(|&t| t <= 1 << 30)
            .ok_or_else(|| Error::InvalidParameter(format!("matrix {sizes:?} too large")))?;
        Ok(Self {
            sizes: sizes.to_vec(),
            occupancy: vec![false; total],
            pattern_cells: 0,
            duplicates: 0,
            calibration_cells: 0,
        })
    }

    /// Builds a mask from explicit occupancy, axis 0 fastest.
    pub fn from_occupancy(sizes: &[usize], occupancy: Vec<bool>) -> Result<Self> {
        let mut m = Self::empty(sizes)?;
        if occupancy.len() != m.occupancy.len() {
            return Err(Error::DimensionMismatch { expected: m.occupancy.len(), got: occupancy.len() });
        }
        m.pattern_cells = occupancy.iter().filter(|&&b| b).count();
        m.occupancy = occupancy;
        Ok(m)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_cells(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    /// Occupied cells including any calibration region.
    pub fn occupied(&self) -> usize {
        self.pattern_cells + self.calibration_cells
    }

    pub fn pattern_cells(&self) -> usize {
        self.pattern_cells
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn calibration_cells(&self) -> usize {
        self.calibration_cells
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for d in (0..self.dim()).rev() {
            flat = flat * self.sizes[d] + idx[d];
        }
        flat
    }

    fn unflat(&self, mut flat: usize, out: &mut [usize]) {
        for d in 0..self.dim() {
            out[d] = flat % self.sizes[d];
            flat /= self.sizes[d];
        }
    }

    pub fn get(&self, idx: &[usize]) -> bool {
        self.occupancy[self.flat(idx)]
    }

    /// Per-axis indices of every occupied cell, in storage order.
    pub fn occupied_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![0; self.dim()];
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(f, _)| {
                self.unflat(f, &mut idx);
                idx.clone()
            })
            .collect()
    }

    fn apply_calibration(&mut self, calib: &Calibration) -> Result<()> {
        let n = self.dim();
        let mut idx = vec![0; n];
        let mut added = 0;
        match calib {
            Calibration::Rect { widths } => {
                if widths.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: widths.len() });
                }
                // [c - floor(w/2), c - floor(w/2) + w) around the center c = floor(M/2)
                for f in 0..self.occupancy.len() {
                    self.unflat(f, &mut idx);
                    let inside = (0..n).all(|d| {
                        let start = (self.sizes[d] / 2) as isize - (widths[d] / 2) as isize;
                        let i = idx[d] as isize;
                        i >= start && i < start + widths[d] as isize
                    });
                    if inside && !self.occupancy[f] {
                        self.occupancy[f] = true;
                        added += 1;
                    }
                }
            }
            Calibration::Ellipse { half_widths } => {
                if half_widths.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: half_widths.len() });
                }
                if half_widths.iter().any(|&h| !(h > 0.0)) {
                    return Err(Error::InvalidParameter("ellipse half-widths must be positive".into()));
                }
                for f in 0..self.occupancy.len() {
                    self.unflat(f, &mut idx);
                    let s: f64 = (0..n)
                        .map(|d| {
                            let off = idx[d] as f64 - (self.sizes[d] / 2) as f64;
                            (off / half_widths[d]).powi(2)
                        })
                        .sum();
                    if s <= 1.0 && !self.occupancy[f] {
                        self.occupancy[f] = true;
                        added += 1;
                    }
                }
            }
        }
        self.calibration_cells += added;
        Ok(())
    }
}

/// Cell index of a coordinate on an axis of `m` cells.
#[inline]
pub fn cell_index(x: f64, m: usize) -> usize {
    let i = ((x + 0.5) * m as f64).floor();
    if i <= 0.0 {
        0
    } else {
        (i as usize).min(m - 1)
    }
}

/// Rasterizes a pattern on the unit-centered cube onto a matrix of `sizes`.
pub fn rasterize_mask(
    pattern: &SamplePattern,
    sizes: &[usize],
    calibration: Option<&Calibration>,
) -> Result<MaskRaster> {
    if sizes.len() != pattern.dim() {
        return Err(Error::DimensionMismatch { expected: pattern.dim(), got: sizes.len() });
    }
    let mut mask = MaskRaster::empty(sizes)?;
    let n = pattern.dim();
    let mut idx = vec![0; n];
    for p in pattern.points().iter() {
        if p.iter().any(|&x| !(-0.5..0.5).contains(&x)) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        for d in 0..n {
            idx[d] = cell_index(p[d], sizes[d]);
        }
        let f = mask.flat(&idx);
        if mask.occupancy[f] {
            mask.duplicates += 1;
        } else {
            mask.occupancy[f] = true;
            mask.pattern_cells += 1;
        }
    }
    if let Some(c) = calibration {
        mask.apply_calibration(c)?;
    }
    Ok(mask)
}

/// Plain PBM (`P1`): width = axis 0, height = axis 1, `1` = sampled.
/// The first written row is the highest axis-1 index.
pub fn write_mask_pbm(mask: &MaskRaster, path: &Path) -> Result<()> {
    fs::write(path, mask_to_pbm(mask)?)?;
    Ok(())
}

pub fn mask_to_pbm(mask: &MaskRaster) -> Result<String> {
    if mask.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "PBM needs a 2D mask, got {} dimensions; use the index CSV",
            mask.dim()
        )));
    }
    let (w, h) = (mask.sizes[0], mask.sizes[1]);
    let mut out = String::with_capacity(w * h * 2 + 32);
    let _ = writeln!(out, "P1\n{w} {h}");
    for y in (0..h).rev() {
        // lines of at most 70 characters
        for (i, x) in (0..w).enumerate() {
            out.push(if mask.get(&[x, y]) { '1' } else { '0' });
            let last = i + 1 == w;
            if last || (i + 1) % 35 == 0 {
                out.push('\n');
            } else {
                out.push(' ');
            }
        }
    }
    Ok(out)
}

/// Reads a plain PBM written by [`write_mask_pbm`] (or any `P1` file).
pub fn read_mask_pbm(path: &Path) -> Result<MaskRaster> {
    let text = fs::read_to_string(path)?;
    parse_pbm(&text).map_err(|(line, msg)| Error::Parse { path: path.to_path_buf(), line, msg })
}

fn parse_pbm(text: &str) -> std::result::Result<MaskRaster, (usize, String)> {
    // tokens with their 1-based line numbers, comments stripped
    let mut tokens = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            tokens.push((ln + 1, tok));
        }
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P1")) => {}
        Some((ln, t)) => return Err((ln, format!("expected magic P1, found {t:?}"))),
        None => return Err((1, "empty file".into())),
    }
    let mut dim = |what: &str| -> std::result::Result<usize, (usize, String)> {
        let (ln, t) = it.next().ok_or((0, format!("missing {what}")))?;
        t.parse::<usize>().map_err(|_| (ln, format!("bad {what} {t:?}")))
    };
    let w = dim("width")?;
    let h = dim("height")?;
    let mut bits = Vec::with_capacity(w * h);
    for (ln, tok) in it {
        for ch in tok.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err((ln, format!("unexpected character {ch:?}"))),
            }
        }
    }
    if bits.len() != w * h {
        return Err((0, format!("expected {} pixels, found {}", w * h, bits.len())));
    }
    let mut occ = vec![false; w * h];
    for (row, chunk) in bits.chunks(w).enumerate() {
        let y = h - 1 - row;
        for (x, &b) in chunk.iter().enumerate() {
            occ[x + w * y] = b;
        }
    }
    MaskRaster::from_occupancy(&[w, h], occ).map_err(|e| (0, e.to_string()))
}

/// Flat CSV of occupied index tuples for masks of any dimension.
pub fn write_mask_indices_csv(mask: &MaskRaster, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let sizes: Vec<String> = mask.sizes.iter().map(|s| s.to_string()).collect();
    writeln!(w, "# pdisc-mask v1, sizes={}", sizes.join("x"))?;
    for idx in mask.occupied_indices() {
        let row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
