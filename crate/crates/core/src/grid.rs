//! Background grids that restrict conflict checks to nearby points.
//!
//! Three layouts share one cubic cell partition ([`CellLayout`]):
//!
//! * [`ReachGrid`] with edge `r_min/√n`. Each cell lists every point whose
//!   closed threshold ball reaches the cell, so a candidate only reads its own
//!   cell.
//! * [`BridsonGrid`] with edge `r/√n` for constant `r`. A cell holds at most one
//!   point since its diagonal equals `r`.
//! * [`TullekenGrid`] with edge `r_max/√n`. A cell lists the points located in
//!   it and a query scans every cell its ball touches.
//!
//! Ball/box tests use the exact nearest-point distance with the radius widened
//! by [`REACH_SLACK`], so rounding can only add cells, never drop one.

use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Relative widening applied to every ball before a box intersection test.
pub const REACH_SLACK: f64 = 1e-9;

/// Largest number of points a grid accepts (indices are stored as `u32`).
pub const MAX_POINTS: usize = 1 << 31;

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLimits {
    pub max_cells_per_axis: usize,
    pub max_total_cells: usize,
}

impl Default for GridLimits {
    fn default() -> Self {
        Self {
            max_cells_per_axis: 1 << 20,
            max_total_cells: 1 << 26,
        }
    }
}

/// Cubic cells of a fixed edge covering a domain; the last cell per axis may be partial.
#[derive(Debug, Clone)]
pub struct CellLayout {
    lo: Vec<f64>,
    hi: Vec<f64>,
    edge: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

impl CellLayout {
    pub fn new(domain: &Domain, edge: f64, limits: GridLimits) -> Result<Self> {
        if !(edge > 0.0) || !edge.is_finite() {
            return Err(Error::InvalidParameter(format!("cell edge must be positive, got {edge}")));
        }
        let n = domain.dim();
        let mut counts = Vec::with_capacity(n);
        for d in 0..n {
            let c = (domain.extent(d) / edge).ceil();
            if !(c <= limits.max_cells_per_axis as f64) {
                let per_axis = (0..n)
                    .map(|a| (domain.extent(a) / edge).ceil().min(usize::MAX as f64) as usize)
                    .collect();
                return Err(Error::GridTooLarge {
                    cells_per_axis: per_axis,
                    reason: format!("axis {d} needs {c} cells, cap {}", limits.max_cells_per_axis),
                });
            }
            counts.push((c as usize).max(1));
        }
        let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
        match total {
            Some(t) if t <= limits.max_total_cells => {}
            _ => {
                return Err(Error::GridTooLarge {
                    cells_per_axis: counts,
                    reason: format!("total cell count exceeds {}", limits.max_total_cells),
                })
            }
        }
        let mut strides = vec![1; n];
        for d in 1..n {
            strides[d] = strides[d - 1] * counts[d - 1];
        }
        Ok(Self {
            lo: domain.lo().to_vec(),
            hi: domain.hi().to_vec(),
            edge,
            counts,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total_cells(&self) -> usize {
        self.counts.iter().product()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| l <= x && x < h)
    }

    #[inline]
    fn axis_cell(&self, d: usize, x: f64) -> usize {
        let i = ((x - self.lo[d]) / self.edge).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.counts[d] - 1)
        }
    }

    /// Per-axis cell coordinates of an in-domain point.
    pub fn cell_of(&self, p: &[f64]) -> Result<Vec<usize>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        if !self.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        Ok(p.iter().enumerate().map(|(d, &x)| self.axis_cell(d, x)).collect())
    }

    #[inline]
    pub(crate) fn flat_index(&self, p: &[f64]) -> usize {
        p.iter()
            .enumerate()
            .map(|(d, &x)| self.axis_cell(d, x) * self.strides[d])
            .sum()
    }

    /// Flat index from per-axis coordinates.
    pub fn flatten(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Calls `f` with the flat index of every cell whose closed box meets the
    /// closed ball `B(p, r)` (radius widened by [`REACH_SLACK`]). Candidate
    /// cells are limited to `±ceil(r/edge)` around the cell of `p`.
    #[inline]
    pub(crate) fn for_each_cell_in_ball(&self, p: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let r = r * (1.0 + REACH_SLACK);
        let reach = (r / self.edge).ceil() as usize;
        self.visit_axis(self.dim() - 1, p, r * r, reach, 0.0, 0, &mut f);
    }

    fn visit_axis(
        &self,
        axis: usize,
        p: &[f64],
        r2: f64,
        reach: usize,
        partial: f64,
        base: usize,
        f: &mut impl FnMut(usize),
    ) {
        let x = p[axis];
        let lo = self.lo[axis];
        if axis == 0 {
            // innermost axis: the admissible cells form one contiguous run
            let w = (r2 - partial).max(0.0).sqrt();
            let last_cell = self.counts[0] - 1;
            let first = self.axis_cell(0, (x - w).max(lo));
            let last = (self.axis_cell(0, x + w)).min(last_cell);
            for i in first..=last {
                f(base + i);
            }
            return;
        }
        let center = self.axis_cell(axis, x);
        let first = center.saturating_sub(reach);
        let last = (center + reach).min(self.counts[axis] - 1);
        for i in first..=last {
            let box_lo = lo + i as f64 * self.edge;
            let box_hi = box_lo + self.edge;
            let gap = if x < box_lo {
                box_lo - x
            } else if x > box_hi {
                x - box_hi
            } else {
                0.0
            };
            let sq = partial + gap * gap;
            if sq > r2 {
                continue;
            }
            self.visit_axis(axis - 1, p, r2, reach, sq, base + i * self.strides[axis], f);
        }
    }
}

fn check_index(index: usize) -> Result<u32> {
    if index >= MAX_POINTS {
        Err(Error::IndexOverflow(MAX_POINTS))
    } else {
        Ok(index as u32)
    }
}

const INLINE: usize = 6;

/// Reach-list grid with edge `r_min/√n`.
///
/// Each cell is a fixed 32-byte slot `[len, spill, idx0..idx5]`; entries past
/// the sixth go to a side list named by `spill` (stored plus one). An all-zero
/// slot is an empty cell.
#[derive(Debug, Clone)]
pub struct ReachGrid {
    layout: CellLayout,
    r_min: f64,
    slots: Vec<[u32; 2 + INLINE]>,
    spill: Vec<Vec<u32>>,
    stored: usize,
}

pub fn build_reach_grid(domain: &Domain, r_min: f64, limits: GridLimits) -> Result<ReachGrid> {
    if !(r_min > 0.0) || !r_min.is_finite() {
        return Err(Error::InvalidParameter(format!("r_min must be positive, got {r_min}")));
    }
    let edge = r_min / (domain.dim() as f64).sqrt();
    let layout = CellLayout::new(domain, edge, limits)?;
    let slots = vec![[0u32; 2 + INLINE]; layout.total_cells()];
    advise_huge_pages(&slots);
    Ok(ReachGrid { layout, r_min, slots, spill: Vec::new(), stored: 0 })
}

/// Asks the kernel to back a large, still untouched allocation with huge pages.
/// Large reach grids are written sparsely over their whole extent, and 4 KiB
/// faults otherwise dominate their first pass.
#[cfg(target_os = "linux")]
fn advise_huge_pages<T>(buf: &[T]) {
    const HUGE: usize = 2 << 20;
    let bytes = std::mem::size_of_val(buf);
    if bytes < 2 * HUGE {
        return;
    }
    let start = buf.as_ptr() as usize;
    let aligned = (start + HUGE - 1) & !(HUGE - 1);
    let len = (start + bytes - aligned) & !(HUGE - 1);
    // SAFETY: the range lies inside `buf`, and MADV_HUGEPAGE only changes how
    // the kernel backs those pages, never their contents.
    unsafe {
        libc::madvise(aligned as *mut libc::c_void, len, libc::MADV_HUGEPAGE);
    }
}

#[cfg(not(target_os = "linux"))]
fn advise_huge_pages<T>(_buf: &[T]) {}

impl ReachGrid {
    pub fn layout(&self) -> &CellLayout {
        &self.layout
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn cell_of(&self, p: &[f64]) -> Result<Vec<usize>> {
        self.layout.cell_of(p)
    }

    /// Total number of indices stored across all cells.
    pub fn stored_indices(&self) -> usize {
        self.stored
    }

    /// Index list of the cell at the given per-axis coordinates, ascending.
    pub fn cell(&self, cell: &[usize]) -> Vec<u32> {
        self.collect(self.layout.flatten(cell))
    }

    fn collect(&self, flat: usize) -> Vec<u32> {
        let mut out = Vec::new();
        self.scan(flat, |j| {
            out.push(j);
            false
        });
        out.sort_unstable();
        out
    }

    /// Calls `f` on each index in the cell until it returns true.
    #[inline]
    fn scan(&self, flat: usize, mut f: impl FnMut(u32) -> bool) -> bool {
        let slot = &self.slots[flat];
        let len = slot[0] as usize;
        for &j in &slot[2..2 + len.min(INLINE)] {
            if f(j) {
                return true;
            }
        }
        if len > INLINE {
            return self.spill[slot[1] as usize - 1].iter().any(|&j| f(j));
        }
        false
    }

    /// Appends `index` to every cell reached by the ball `B(p, r_p)`.
    pub fn register_reach(&mut self, index: usize, p: &[f64], r_p: f64) -> Result<()> {
        let idx = check_index(index)?;
        if !(r_p > 0.0) || !r_p.is_finite() {
            return Err(Error::InvalidParameter(format!("reach radius must be positive, got {r_p}")));
        }
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        self.register_unchecked(idx, p, r_p)
    }

    #[inline]
    pub(crate) fn register_unchecked(&mut self, idx: u32, p: &[f64], r_p: f64) -> Result<()> {
        let Self { layout, slots, spill, stored, .. } = self;
        layout.for_each_cell_in_ball(p, r_p, |c| {
            *stored += 1;
            let slot = &mut slots[c];
            let len = slot[0] as usize;
            if len < INLINE {
                slot[2 + len] = idx;
            } else {
                if slot[1] == 0 {
                    spill.push(Vec::new());
                    slot[1] = spill.len() as u32;
                }
                spill[slot[1] as usize - 1].push(idx);
            }
            slot[0] += 1;
        });
        Ok(())
    }

    /// The index list of the single cell containing `p`. No neighbor scan.
    pub fn conflict_candidates(&self, p: &[f64]) -> Result<Vec<u32>> {
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        Ok(self.collect(self.layout.flat_index(p)))
    }

    /// True once `f` accepts some index listed in the cell containing `p`.
    #[inline]
    pub(crate) fn any_candidate(&self, p: &[f64], f: impl FnMut(u32) -> bool) -> bool {
        self.scan(self.layout.flat_index(p), f)
    }
}

/// One-point-per-cell grid with edge `r/√n`.
#[derive(Debug, Clone)]
pub struct BridsonGrid {
    layout: CellLayout,
    cells: Vec<u32>,
}

pub fn build_bridson_grid(domain: &Domain, r: f64, limits: GridLimits) -> Result<BridsonGrid> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let layout = CellLayout::new(domain, r / (domain.dim() as f64).sqrt(), limits)?;
    let cells = vec![EMPTY; layout.total_cells()];
    Ok(BridsonGrid { layout, cells })
}

impl BridsonGrid {
    pub fn layout(&self) -> &CellLayout {
        &self.layout
    }

    /// Stores `index` in the cell containing `p`; a second point in one cell is an error.
    pub fn insert(&mut self, index: usize, p: &[f64]) -> Result<()> {
        let idx = check_index(index)?;
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        let slot = &mut self.cells[self.layout.flat_index(p)];
        if *slot != EMPTY {
            return Err(Error::InvalidParameter(format!(
                "bridson cell already holds point {}; separation below the cell diagonal",
                *slot
            )));
        }
        *slot = idx;
        Ok(())
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|&&c| c != EMPTY).count()
    }

    /// Indices stored in all cells meeting `B(p, r)`.
    pub fn bridson_neighbors(&self, p: &[f64], r: f64) -> Result<Vec<u32>> {
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        let mut out = Vec::new();
        self.visit_neighbors(p, r, |j| {
            out.push(j);
            false
        });
        Ok(out)
    }

    /// Visits stored indices near `p` until `f` returns true; returns whether it did.
    #[inline]
    pub(crate) fn visit_neighbors(&self, p: &[f64], r: f64, mut f: impl FnMut(u32) -> bool) -> bool {
        let mut hit = false;
        self.layout.for_each_cell_in_ball(p, r, |c| {
            let j = self.cells[c];
            if !hit && j != EMPTY && f(j) {
                hit = true;
            }
        });
        hit
    }
}

/// List grid with edge `r_max/√n`; each point is listed in its own cell only.
#[derive(Debug, Clone)]
pub struct TullekenGrid {
    layout: CellLayout,
    r_max: f64,
    cells: Vec<Vec<u32>>,
}

pub fn build_tulleken_grid(domain: &Domain, r_max: f64, limits: GridLimits) -> Result<TullekenGrid> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParameter(format!("r_max must be positive and finite, got {r_max}")));
    }
    let layout = CellLayout::new(domain, r_max / (domain.dim() as f64).sqrt(), limits)?;
    let cells = vec![Vec::new(); layout.total_cells()];
    Ok(TullekenGrid { layout, r_max, cells })
}

impl TullekenGrid {
    pub fn layout(&self) -> &CellLayout {
        &self.layout
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn insert(&mut self, index: usize, p: &[f64]) -> Result<()> {
        let idx = check_index(index)?;
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        self.insert_unchecked(idx, p);
        Ok(())
    }

    #[inline]
    pub(crate) fn insert_unchecked(&mut self, idx: u32, p: &[f64]) {
        let c = self.layout.flat_index(p);
        self.cells[c].push(idx);
    }

    pub fn cell(&self, cell: &[usize]) -> &[u32] {
        &self.cells[self.layout.flatten(cell)]
    }

    /// Union of the lists of all cells meeting `B(p, r_query)`.
    pub fn tulleken_neighbors(&self, p: &[f64], r_query: f64) -> Result<Vec<u32>> {
        if !self.layout.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
        if r_query > self.r_max * (1.0 + REACH_SLACK) {
            return Err(Error::InvalidParameter(format!(
                "query radius {r_query} exceeds r_max {}",
                self.r_max
            )));
        }
        let mut out = Vec::new();
        self.visit_neighbors(p, r_query, |j| {
            out.push(j);
            false
        });
        Ok(out)
    }

    #[inline]
    pub(crate) fn visit_neighbors(&self, p: &[f64], r: f64, mut f: impl FnMut(u32) -> bool) -> bool {
        let mut hit = false;
        self.layout.for_each_cell_in_ball(p, r, |c| {
            if hit {
                return;
            }
            for &j in &self.cells[c] {
                if f(j) {
                    hit = true;
                    return;
                }
            }
        });
        hit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dist_sq, uniform_in_domain};
    use crate::rng::RngState;

    /// Exact closed box / closed ball test, no slack.
    fn box_meets_ball(layout: &CellLayout, cell: &[usize], p: &[f64], r: f64) -> bool {
        let mut sq = 0.0;
        for d in 0..p.len() {
            let lo = layout.lo[d] + cell[d] as f64 * layout.edge;
            let hi = lo + layout.edge;
            let g = (lo - p[d]).max(0.0).max(p[d] - hi);
            sq += g * g;
        }
        sq <= r * r
    }

    fn square_grid(edge_cells: usize) -> ReachGrid {
        // edge = 1/edge_cells on the unit square via r_min = edge·√2
        let d = Domain::unit(2);
        let edge = 1.0 / edge_cells as f64;
        build_reach_grid(&d, edge * 2f64.sqrt(), GridLimits::default()).unwrap()
    }

    #[test]
    fn geometry_matches_formula() {
        let g = build_reach_grid(&Domain::unit(2), 0.001, GridLimits::default()).unwrap();
        assert!((g.layout().edge() - 7.0711e-4).abs() < 1e-8);
        assert_eq!(g.layout().counts(), &[1415, 1415]);
        assert_eq!(g.layout().edge() * 2f64.sqrt(), 0.001);

        let g3 = build_reach_grid(&Domain::unit(3), 0.15, GridLimits::default()).unwrap();
        assert!((g3.layout().edge() - 0.0866025).abs() < 1e-6);
        assert_eq!(g3.layout().counts(), &[12, 12, 12]);

        let d1 = Domain::new(vec![0.0], vec![1.0]).unwrap();
        let g1 = build_reach_grid(&d1, 0.1, GridLimits::default()).unwrap();
        assert_eq!(g1.layout().edge(), 0.1);
        assert_eq!(g1.layout().counts(), &[10]);
    }

    #[test]
    fn cell_cap_is_enforced() {
        let limits = GridLimits { max_cells_per_axis: 100, max_total_cells: 1 << 26 };
        let err = build_reach_grid(&Domain::unit(2), 0.001, limits).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
        let limits = GridLimits { max_cells_per_axis: 1 << 20, max_total_cells: 1000 };
        assert!(build_reach_grid(&Domain::unit(2), 0.001, limits).is_err());
        assert!(build_reach_grid(&Domain::unit(2), 0.0, GridLimits::default()).is_err());
    }

    #[test]
    fn cell_of_examples() {
        let d = Domain::unit(2);
        let layout = CellLayout::new(&d, 0.25, GridLimits::default()).unwrap();
        assert_eq!(layout.cell_of(&[-0.5, -0.5]).unwrap(), vec![0, 0]);
        assert_eq!(layout.cell_of(&[0.49, -0.26]).unwrap(), vec![3, 0]);
        assert_eq!(layout.cell_of(&[0.0, 0.0]).unwrap(), vec![2, 2]);
        assert_eq!(layout.cell_of(&[0.4999999999999999, 0.0]).unwrap(), vec![3, 2]);
    }

    #[test]
    fn reach_at_cell_center_with_r_min() {
        // 10×10 cells; point at the center of cell (4,4), reach = r_min = edge·√2.
        let mut g = square_grid(10);
        let edge = g.layout().edge();
        let p = [-0.5 + 4.5 * edge, -0.5 + 4.5 * edge];
        g.register_reach(0, &p, g.r_min()).unwrap();
        // brute-force oracle over the 5×5 neighborhood
        let mut expected = Vec::new();
        for i in 2..=6 {
            for j in 2..=6 {
                if box_meets_ball(g.layout(), &[i, j], &p, g.r_min()) {
                    expected.push((i, j));
                }
            }
        }
        assert_eq!(expected.len(), 9, "{expected:?}");
        for i in 0..10 {
            for j in 0..10 {
                let listed = g.cell(&[i, j]) == vec![0];
                assert_eq!(listed, expected.contains(&(i, j)), "cell ({i},{j})");
            }
        }
        assert_eq!(g.stored_indices(), 9);
    }

    #[test]
    fn tiny_reach_only_own_cell() {
        let mut g = square_grid(10);
        let edge = g.layout().edge();
        let p = [-0.5 + 4.5 * edge, -0.5 + 2.5 * edge];
        g.register_reach(3, &p, 1e-12).unwrap();
        assert_eq!(g.stored_indices(), 1);
        assert_eq!(g.cell(&[4, 2]), vec![3]);
    }

    #[test]
    fn corner_point_reaches_four_incident_cells() {
        let mut g = square_grid(4);
        g.register_reach(0, &[0.0, 0.0], g.r_min()).unwrap();
        for cell in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            assert_eq!(g.cell(&cell), vec![0]);
        }
    }

    #[test]
    fn empty_grid_has_no_candidates() {
        let g = square_grid(8);
        assert!(g.conflict_candidates(&[0.1, 0.2]).unwrap().is_empty());
    }

    #[test]
    fn single_registration_found() {
        let mut g = square_grid(8);
        g.register_reach(0, &[0.1, 0.1], 0.2).unwrap();
        assert_eq!(g.conflict_candidates(&[0.15, 0.12]).unwrap(), vec![0]);
    }

    #[test]
    fn reach_candidates_superset_randomized() {
        let d = Domain::unit(2);
        let mut rng = RngState::new(77);
        let r_min = 0.01;
        let mut g = build_reach_grid(&d, r_min, GridLimits::default()).unwrap();
        let mut pts = Vec::new();
        let mut bound = 0usize;
        for j in 0..1000 {
            let p = uniform_in_domain(&d, &mut rng);
            let r = r_min + 0.05 * rng.uniform();
            g.register_reach(j, &p, r).unwrap();
            bound += (2 * (r / g.layout().edge()).ceil() as usize + 1).pow(2);
            pts.push((p, r));
        }
        assert!(g.stored_indices() <= bound);
        for _ in 0..2000 {
            let q = uniform_in_domain(&d, &mut rng);
            let list = g.conflict_candidates(&q).unwrap();
            for (j, (p, r)) in pts.iter().enumerate() {
                if dist_sq(&q, p) <= r * r {
                    assert!(list.contains(&(j as u32)));
                }
            }
        }
    }

    #[test]
    fn reach_superset_in_three_dims() {
        let d = Domain::unit(3);
        let mut rng = RngState::new(5);
        let mut g = build_reach_grid(&d, 0.05, GridLimits::default()).unwrap();
        let mut pts = Vec::new();
        for j in 0..300 {
            let p = uniform_in_domain(&d, &mut rng);
            let r = 0.05 + 0.1 * rng.uniform();
            g.register_reach(j, &p, r).unwrap();
            pts.push((p, r));
        }
        for _ in 0..1000 {
            let q = uniform_in_domain(&d, &mut rng);
            let list = g.conflict_candidates(&q).unwrap();
            for (j, (p, r)) in pts.iter().enumerate() {
                if dist_sq(&q, p) <= r * r {
                    assert!(list.contains(&(j as u32)));
                }
            }
        }
    }

    #[test]
    fn bridson_neighbors_cases() {
        let d = Domain::unit(2);
        let r = 0.1;
        let mut g = build_bridson_grid(&d, r, GridLimits::default()).unwrap();
        assert!(g.bridson_neighbors(&[0.0, 0.0], r).unwrap().is_empty());

        g.insert(0, &[0.0, 0.0]).unwrap();
        assert_eq!(g.bridson_neighbors(&[0.05, 0.0], r).unwrap(), vec![0]);
        // a second point in the same cell is refused
        assert!(g.insert(1, &[0.001, 0.001]).is_err());

        let mut rng = RngState::new(21);
        let mut g = build_bridson_grid(&d, r, GridLimits::default()).unwrap();
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for _ in 0..5000 {
            let p = uniform_in_domain(&d, &mut rng);
            if pts.iter().all(|q| dist_sq(q, &p) > r * r) {
                g.insert(pts.len(), &p).unwrap();
                pts.push(p.into_inner());
            }
        }
        assert_eq!(g.occupied(), pts.len());
        for _ in 0..1000 {
            let q = uniform_in_domain(&d, &mut rng);
            let list = g.bridson_neighbors(&q, r).unwrap();
            for (j, p) in pts.iter().enumerate() {
                if dist_sq(&q, p) <= r * r {
                    assert!(list.contains(&(j as u32)));
                }
            }
        }
    }

    #[test]
    fn tulleken_neighbors_cases() {
        let d = Domain::unit(2);
        let r_max = 0.2;
        let mut g = build_tulleken_grid(&d, r_max, GridLimits::default()).unwrap();
        assert!(g.tulleken_neighbors(&[0.0, 0.0], 0.1).unwrap().is_empty());
        assert!(g.tulleken_neighbors(&[0.0, 0.0], 0.3).is_err());

        let mut rng = RngState::new(31);
        let mut pts = Vec::new();
        for j in 0..500 {
            let p = uniform_in_domain(&d, &mut rng);
            g.insert(j, &p).unwrap();
            pts.push(p);
        }
        // every index in exactly one cell
        let mut seen = vec![0; 500];
        for c in &g.cells {
            for &j in c {
                seen[j as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        for _ in 0..1000 {
            let q = uniform_in_domain(&d, &mut rng);
            let rq = r_max * rng.uniform();
            let list = g.tulleken_neighbors(&q, rq).unwrap();
            for (j, p) in pts.iter().enumerate() {
                if dist_sq(&q, p) <= rq * rq {
                    assert!(list.contains(&(j as u32)));
                }
            }
        }
    }

    #[test]
    fn single_cell_limit() {
        // r larger than the domain: one cell holding everything
        let d = Domain::unit(2);
        let mut g = build_tulleken_grid(&d, 10.0, GridLimits::default()).unwrap();
        assert_eq!(g.layout().total_cells(), 1);
        g.insert(0, &[0.1, 0.1]).unwrap();
        g.insert(1, &[-0.4, 0.3]).unwrap();
        assert_eq!(g.tulleken_neighbors(&[0.0, 0.0], 1e-6).unwrap(), vec![0, 1]);
    }
}
