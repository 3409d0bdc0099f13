//! Rectangular grids, multilinear interpolation and first-order upwind
//! differences.
//!
//! Node storage is row-major with the last dimension varying fastest. A
//! periodic dimension with `n` nodes covers `[lo, hi)` with spacing
//! `(hi - lo) / n`; the node at `hi` is identified with the node at `lo`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest supported number of continuous state dimensions.
pub const MAX_DIM: usize = 8;

/// Fractional cell offsets within this distance of a node snap onto it, so
/// that interpolating at a node coordinate returns the stored value exactly.
const SNAP: f64 = 1e-9;

/// Nodes handled per parallel work item.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
    periodic: Vec<bool>,
    dx: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

/// What to do when a query point falls outside a non-periodic dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutOfBounds {
    /// Project the point onto the grid box.
    Clamp,
    /// Return the given sentinel instead of a value.
    Infeasible(f64),
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>, periodic: Vec<bool>) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::usage(format!("grid dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if hi.len() != dim || n.len() != dim || periodic.len() != dim {
            return Err(Error::usage("grid lo/hi/n/periodic lengths differ"));
        }
        let mut dx = Vec::with_capacity(dim);
        for k in 0..dim {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::usage(format!("grid bounds for dimension {k} must satisfy lo < hi")));
            }
            if n[k] < 2 {
                return Err(Error::usage(format!("grid dimension {k} needs at least 2 nodes")));
            }
            let cells = if periodic[k] { n[k] } else { n[k] - 1 };
            dx.push((hi[k] - lo[k]) / cells as f64);
        }
        let mut len: usize = 1;
        for &nk in &n {
            len = len
                .checked_mul(nk)
                .ok_or_else(|| Error::usage("grid node count overflows the address space"))?;
        }
        let mut strides = vec![1; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n[k + 1];
        }
        Ok(Self { lo, hi, n, periodic, dx, strides, len })
    }

    /// Non-periodic grid, the common case.
    pub fn uniform(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        Self::new(lo, hi, n, vec![false; dim])
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

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn spacing(&self) -> &[f64] {
        &self.dx
    }

    pub fn dx(&self, k: usize) -> f64 {
        self.dx[k]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        self.lo[k] + i as f64 * self.dx[k]
    }

    pub fn coords(&self, idx: &[usize]) -> Result<Vec<f64>> {
        if idx.len() != self.dim() {
            return Err(Error::usage(format!(
                "index has {} components, grid has {}",
                idx.len(),
                self.dim()
            )));
        }
        idx.iter()
            .enumerate()
            .map(|(k, &i)| {
                if i < self.n[k] {
                    Ok(self.coord(k, i))
                } else {
                    Err(Error::usage(format!("index {i} out of range 0..{} in dimension {k}", self.n[k])))
                }
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = (flat / self.strides[k]) % self.n[k];
        }
    }

    pub fn node_coords(&self, flat: usize, out: &mut [f64]) {
        for k in 0..self.dim() {
            out[k] = self.coord(k, (flat / self.strides[k]) % self.n[k]);
        }
    }

    /// True when `x` lies inside the box in every non-periodic dimension.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|k| {
            self.periodic[k] || {
                let tol = SNAP * self.dx[k];
                x[k] >= self.lo[k] - tol && x[k] <= self.hi[k] + tol
            }
        })
    }

    /// Maps periodic coordinates into `[lo, hi)`; other coordinates are untouched.
    pub fn wrap(&self, x: &mut [f64]) {
        for k in 0..self.dim() {
            if self.periodic[k] {
                let period = self.hi[k] - self.lo[k];
                x[k] = self.lo[k] + (x[k] - self.lo[k]).rem_euclid(period);
            }
        }
    }

    /// Calls `visitor(flat, multi_index, coords)` once per node. Work is split
    /// across the current rayon pool.
    pub fn for_each_node<F>(&self, visitor: F)
    where
        F: Fn(usize, &[usize], &[f64]) + Sync + Send,
    {
        let chunks = self.len.div_ceil(CHUNK);
        (0..chunks).into_par_iter().for_each(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(self.len);
            let mut cursor = NodeCursor::new(self, start);
            for flat in start..end {
                visitor(flat, cursor.index(), cursor.coords());
                cursor.advance();
            }
        });
    }

    /// Evaluates `f(flat, coords)` at every node into `out` in parallel.
    pub fn map_nodes_into<F>(&self, out: &mut [f64], f: F)
    where
        F: Fn(usize, &[f64]) -> f64 + Sync + Send,
    {
        assert_eq!(out.len(), self.len);
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let start = c * CHUNK;
            let mut cursor = NodeCursor::new(self, start);
            for (off, slot) in chunk.iter_mut().enumerate() {
                *slot = f(start + off, cursor.coords());
                cursor.advance();
            }
        });
    }

    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let mut out = vec![0.0; self.len];
        self.map_nodes_into(&mut out, |_, x| f(x));
        out
    }

    pub fn sample_bool<F>(&self, f: F) -> Vec<bool>
    where
        F: Fn(&[f64]) -> bool + Sync + Send,
    {
        let mut out = vec![false; self.len];
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut cursor = NodeCursor::new(self, c * CHUNK);
            for slot in chunk.iter_mut() {
                *slot = f(cursor.coords());
                cursor.advance();
            }
        });
        out
    }

    /// Visits the interpolation stencil of `x` as `(flat index, weight)`
    /// pairs with nonzero weight. Returns `false` without visiting anything
    /// when `x` is outside the box and the policy is `Infeasible`.
    pub(crate) fn for_each_corner<F>(&self, x: &[f64], oob: OutOfBounds, mut visit: F) -> bool
    where
        F: FnMut(usize, f64),
    {
        let dim = self.dim();
        let mut base = [0usize; MAX_DIM];
        let mut next = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        let mut active = [0usize; MAX_DIM];
        let mut n_active = 0;
        for k in 0..dim {
            let nk = self.n[k];
            let mut u = (x[k] - self.lo[k]) / self.dx[k];
            if self.periodic[k] {
                u = u.rem_euclid(nk as f64);
            } else {
                let last = (nk - 1) as f64;
                if !(u >= -SNAP && u <= last + SNAP) {
                    match oob {
                        OutOfBounds::Infeasible(_) => return false,
                        OutOfBounds::Clamp => {}
                    }
                }
                u = if u.is_nan() { 0.0 } else { u.clamp(0.0, last) };
            }
            let mut i = u.floor();
            let mut t = u - i;
            if t < SNAP {
                t = 0.0;
            } else if t > 1.0 - SNAP {
                t = 0.0;
                i += 1.0;
            }
            let mut i = i as usize;
            if i >= nk {
                // only reachable for periodic wrap at the seam
                i = if self.periodic[k] { i % nk } else { nk - 1 };
            }
            base[k] = i;
            frac[k] = t;
            if t > 0.0 {
                next[k] = if i + 1 < nk { i + 1 } else { 0 };
                active[n_active] = k;
                n_active += 1;
            }
        }
        let origin: usize = (0..dim).map(|k| base[k] * self.strides[k]).sum();
        for mask in 0..(1usize << n_active) {
            let mut flat = origin;
            let mut w = 1.0;
            for (bit, &k) in active[..n_active].iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    flat = flat - base[k] * self.strides[k] + next[k] * self.strides[k];
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            visit(flat, w);
        }
        true
    }

    #[inline]
    fn neighbors(&self, data: &[f64], flat: usize, k: usize) -> (f64, f64) {
        let s = self.strides[k];
        let nk = self.n[k];
        let i = (flat / s) % nk;
        let v = data[flat];
        let prev = if i > 0 {
            data[flat - s]
        } else if self.periodic[k] {
            data[flat + (nk - 1) * s]
        } else {
            2.0 * v - data[flat + s]
        };
        let next = if i + 1 < nk {
            data[flat + s]
        } else if self.periodic[k] {
            data[flat - (nk - 1) * s]
        } else {
            2.0 * v - data[flat - s]
        };
        (prev, next)
    }

    /// One-sided differences `(D⁻, D⁺)` of `data` along dimension `k` at a node.
    #[inline]
    pub fn one_sided(&self, data: &[f64], flat: usize, k: usize) -> (f64, f64) {
        let (prev, next) = self.neighbors(data, flat, k);
        let v = data[flat];
        ((v - prev) / self.dx[k], (next - v) / self.dx[k])
    }
}

/// Walks consecutive flat indices while keeping the multi-index and
/// coordinates up to date.
struct NodeCursor<'a> {
    grid: &'a GridSpec,
    idx: [usize; MAX_DIM],
    x: [f64; MAX_DIM],
}

impl<'a> NodeCursor<'a> {
    fn new(grid: &'a GridSpec, flat: usize) -> Self {
        let mut idx = [0usize; MAX_DIM];
        let mut x = [0.0; MAX_DIM];
        grid.multi_index(flat, &mut idx);
        for k in 0..grid.dim() {
            x[k] = grid.coord(k, idx[k]);
        }
        Self { grid, idx, x }
    }

    fn index(&self) -> &[usize] {
        &self.idx[..self.grid.dim()]
    }

    fn coords(&self) -> &[f64] {
        &self.x[..self.grid.dim()]
    }

    fn advance(&mut self) {
        for k in (0..self.grid.dim()).rev() {
            self.idx[k] += 1;
            if self.idx[k] < self.grid.n[k] {
                self.x[k] = self.grid.coord(k, self.idx[k]);
                return;
            }
            self.idx[k] = 0;
            self.x[k] = self.grid.lo[k];
        }
    }
}

/// Multilinear interpolation of nodal `data` at `x`.
pub fn interpolate(grid: &GridSpec, data: &[f64], x: &[f64], oob: OutOfBounds) -> f64 {
    let mut acc = 0.0;
    if grid.for_each_corner(x, oob, |i, w| acc += w * data[i]) {
        acc
    } else {
        match oob {
            OutOfBounds::Infeasible(v) => v,
            OutOfBounds::Clamp => unreachable!(),
        }
    }
}

/// Gradient estimate at an arbitrary point: central differences at the
/// stencil nodes, blended with the interpolation weights. Writes zeros and
/// returns `false` for an infeasible query.
pub fn central_gradient_into(
    grid: &GridSpec,
    data: &[f64],
    x: &[f64],
    oob: OutOfBounds,
    out: &mut [f64],
) -> bool {
    let dim = grid.dim();
    out[..dim].iter_mut().for_each(|g| *g = 0.0);
    grid.for_each_corner(x, oob, |i, w| {
        for (k, g) in out[..dim].iter_mut().enumerate() {
            let (dm, dp) = grid.one_sided(data, i, k);
            *g += w * 0.5 * (dm + dp);
        }
    })
}

/// Fills `left`/`right` with the backward/forward differences along `k`.
pub fn upwind_derivatives_into(grid: &GridSpec, data: &[f64], k: usize, left: &mut [f64], right: &mut [f64]) {
    left.par_chunks_mut(CHUNK)
        .zip(right.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(c, (l, r))| {
            let start = c * CHUNK;
            for off in 0..l.len() {
                let (dm, dp) = grid.one_sided(data, start + off, k);
                l[off] = dm;
                r[off] = dp;
            }
        });
}

/// Scalar values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: Arc<GridSpec>,
    data: Vec<f64>,
}

impl ValueField {
    pub fn new(grid: Arc<GridSpec>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::usage(format!(
                "field has {} entries, grid has {} nodes",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn<F>(grid: Arc<GridSpec>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let data = grid.sample(f);
        Self { grid, data }
    }

    pub fn constant(grid: Arc<GridSpec>, value: f64) -> Self {
        let data = vec![value; grid.len()];
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.grid.flat_index(idx)]
    }

    pub fn interpolate(&self, x: &[f64], oob: OutOfBounds) -> f64 {
        interpolate(&self.grid, &self.data, x, oob)
    }

    pub fn central_gradient(&self, x: &[f64], oob: OutOfBounds) -> Vec<f64> {
        let mut g = vec![0.0; self.grid.dim()];
        central_gradient_into(&self.grid, &self.data, x, oob, &mut g);
        g
    }

    pub fn upwind_derivatives(&self, k: usize) -> (ValueField, ValueField) {
        let mut left = vec![0.0; self.data.len()];
        let mut right = vec![0.0; self.data.len()];
        upwind_derivatives_into(&self.grid, &self.data, k, &mut left, &mut right);
        (
            ValueField { grid: self.grid.clone(), data: left },
            ValueField { grid: self.grid.clone(), data: right },
        )
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn line(lo: f64, hi: f64, n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::uniform(vec![lo], vec![hi], vec![n]).unwrap())
    }

    #[test]
    fn coords_at_corners() {
        let g = line(0.0, 10.0, 11);
        assert_eq!(g.coords(&[0]).unwrap(), vec![0.0]);
        assert_eq!(g.coords(&[10]).unwrap(), vec![10.0]);
        assert!(g.coords(&[11]).is_err());
    }

    #[test]
    fn periodic_last_node_stops_short_of_hi() {
        let g = GridSpec::new(vec![0.0], vec![2.0 * PI], vec![4], vec![true]).unwrap();
        let x = g.coords(&[3]).unwrap()[0];
        assert!((x - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::uniform(vec![1.0], vec![1.0], vec![3]).is_err());
        assert!(GridSpec::uniform(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(GridSpec::uniform(vec![0.0, 0.0], vec![1.0], vec![3]).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let g = line(0.0, 1.0, 11);
        let lin = ValueField::from_fn(g.clone(), |x| 3.0 * x[0]);
        assert!((lin.interpolate(&[0.55], OutOfBounds::Clamp) - 1.65).abs() < 1e-12);
        let sq = ValueField::from_fn(g, |x| x[0] * x[0]);
        assert!((sq.interpolate(&[0.55], OutOfBounds::Clamp) - 0.305).abs() < 1e-12);

        let g2 = Arc::new(GridSpec::uniform(vec![0.0, -1.0], vec![2.0, 1.0], vec![5, 7]).unwrap());
        let c = ValueField::constant(g2, 7.0);
        assert_eq!(c.interpolate(&[0.3, 0.77], OutOfBounds::Clamp), 7.0);
    }

    #[test]
    fn out_of_bounds_policies() {
        let g = line(0.0, 1.0, 11);
        let f = ValueField::from_fn(g, |x| x[0]);
        assert_eq!(f.interpolate(&[1.5], OutOfBounds::Clamp), 1.0);
        assert_eq!(f.interpolate(&[-0.5], OutOfBounds::Clamp), 0.0);
        assert_eq!(f.interpolate(&[1.5], OutOfBounds::Infeasible(1e6)), 1e6);
    }

    #[test]
    fn periodic_interpolation_wraps_across_the_seam() {
        let g = Arc::new(GridSpec::new(vec![0.0], vec![4.0], vec![4], vec![true]).unwrap());
        let f = ValueField::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        // halfway between node 3 (x=3) and node 0 (x=4 ≡ 0)
        assert!((f.interpolate(&[3.5], OutOfBounds::Infeasible(9.0)) - 1.5).abs() < 1e-15);
        assert!((f.interpolate(&[-0.5], OutOfBounds::Infeasible(9.0)) - 1.5).abs() < 1e-15);
        assert_eq!(f.interpolate(&[5.0], OutOfBounds::Infeasible(9.0)), 1.0);
    }

    #[test]
    fn upwind_examples() {
        let g = line(-1.0, 1.0, 21);
        let f = ValueField::from_fn(g.clone(), |x| 2.0 * x[0]);
        let (l, r) = f.upwind_derivatives(0);
        for i in 0..21 {
            assert!((l.data()[i] - 2.0).abs() < 1e-12);
            assert!((r.data()[i] - 2.0).abs() < 1e-12);
        }
        let c = ValueField::constant(g.clone(), 4.0);
        let (l, r) = c.upwind_derivatives(0);
        assert!(l.data().iter().chain(r.data()).all(|&v| v == 0.0));

        let a = ValueField::from_fn(g, |x| x[0].abs());
        let (l, r) = a.upwind_derivatives(0);
        assert!((l.data()[10] + 1.0).abs() < 1e-12);
        assert!((r.data()[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_ghost_is_linear_extrapolation() {
        let g = line(0.0, 1.0, 5);
        let f = ValueField::new(g, vec![0.0, 1.0, 4.0, 9.0, 16.0]).unwrap();
        let (l, r) = f.upwind_derivatives(0);
        assert_eq!(l.data()[0], r.data()[0]);
        assert_eq!(l.data()[4], r.data()[4]);
    }

    #[test]
    fn central_gradient_examples() {
        let g = Arc::new(GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], vec![51, 51]).unwrap());
        let aff = ValueField::from_fn(g.clone(), |x| 2.0 * x[0] - 0.5 * x[1] + 1.0);
        let grad = aff.central_gradient(&[0.313, 0.77], OutOfBounds::Clamp);
        assert!((grad[0] - 2.0).abs() < 1e-12 && (grad[1] + 0.5).abs() < 1e-12);

        let c = ValueField::constant(g.clone(), 1.0);
        assert_eq!(c.central_gradient(&[0.4, 0.4], OutOfBounds::Clamp), vec![0.0, 0.0]);

        let q = ValueField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]);
        let grad = q.central_gradient(&[0.5, 0.5], OutOfBounds::Clamp);
        let tol = 2.0 * 0.02f64.powi(2);
        assert!((grad[0] - 1.0).abs() <= tol && (grad[1] - 1.0).abs() <= tol);
    }

    #[test]
    fn node_visits() {
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], vec![3, 2]).unwrap();
        let count = AtomicUsize::new(0);
        g.for_each_node(|_, _, _| {
            count.fetch_add(1, Ordering::Relaxed);
        });
        assert_eq!(count.into_inner(), 6);

        let big = GridSpec::uniform(vec![0.0; 3], vec![1.0; 3], vec![301, 301, 11]).unwrap();
        let count = AtomicUsize::new(0);
        big.for_each_node(|_, _, _| {
            count.fetch_add(1, Ordering::Relaxed);
        });
        assert_eq!(count.into_inner(), 996_611);

        let g1 = GridSpec::uniform(vec![0.0], vec![1.0], vec![2]).unwrap();
        let total = std::sync::Mutex::new(0.0);
        g1.for_each_node(|_, _, x| *total.lock().unwrap() += x[0]);
        assert_eq!(*total.lock().unwrap(), 1.0);
    }

    #[test]
    fn visitor_sees_consistent_index_and_coords() {
        let g = GridSpec::new(vec![0.0, -1.0, 0.0], vec![1.0, 1.0, 6.0], vec![7, 5, 6], vec![false, false, true])
            .unwrap();
        g.for_each_node(|flat, idx, x| {
            assert_eq!(g.flat_index(idx), flat);
            assert_eq!(g.coords(idx).unwrap(), x.to_vec());
        });
    }

    fn grid3() -> Arc<GridSpec> {
        Arc::new(GridSpec::new(vec![-1.0, 0.0, 0.0], vec![1.0, 2.0, 1.0], vec![5, 4, 6], vec![false, false, true]).unwrap())
    }

    proptest! {
        #[test]
        fn exact_at_nodes(seed in 0u64..1000, i in 0usize..5, j in 0usize..4, k in 0usize..6) {
            let g = grid3();
            let f = ValueField::from_fn(g.clone(), |x| (x[0] * 13.0 + x[1] * 7.0 + x[2] * 3.0 + seed as f64).sin());
            let x = g.coords(&[i, j, k]).unwrap();
            prop_assert_eq!(f.interpolate(&x, OutOfBounds::Clamp), f.get(&[i, j, k]));
        }

        #[test]
        fn reproduces_affine(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
                             x in -1.0f64..1.0, y in 0.0f64..2.0) {
            let g = Arc::new(GridSpec::uniform(vec![-1.0, 0.0], vec![1.0, 2.0], vec![9, 5]).unwrap());
            let f = ValueField::from_fn(g, |p| a * p[0] + b * p[1] + c);
            let v = f.interpolate(&[x, y], OutOfBounds::Clamp);
            prop_assert!((v - (a * x + b * y + c)).abs() < 1e-12);
        }

        #[test]
        fn bounded_by_enclosing_nodes(x in -1.0f64..1.0, y in 0.0f64..2.0, z in 0.0f64..1.0) {
            let g = grid3();
            let f = ValueField::from_fn(g.clone(), |p| (p[0] * 5.0).cos() * (p[1] * 3.0).sin() + p[2]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            g.for_each_corner(&[x, y, z], OutOfBounds::Clamp, |i, _| {
                lo = lo.min(f.data()[i]);
                hi = hi.max(f.data()[i]);
            });
            let v = f.interpolate(&[x, y, z], OutOfBounds::Clamp);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }

        #[test]
        fn one_sided_differences_agree_on_affine(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = Arc::new(GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 2.0], vec![6, 9]).unwrap());
            let f = ValueField::from_fn(g, |p| a * p[0] + b * p[1]);
            for k in 0..2 {
                let (l, r) = f.upwind_derivatives(k);
                for (dl, dr) in l.data().iter().zip(r.data()) {
                    prop_assert!((dl - dr).abs() < 1e-9);
                }
            }
        }
    }
}
