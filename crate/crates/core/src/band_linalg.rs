//! Dense symmetric matrices with optional declared bandwidth, block
//! partitions, and the small set of kernels the samplers and bounds need.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size above which norms and spectral radii switch from dense
/// eigensolves to power iteration.
pub const DENSE_LIMIT: usize = 500;

/// Relative asymmetry tolerated (and then removed) on construction.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
    declared_bandwidth: Option<usize>,
}

impl SymMatrix {
    /// Symmetrizes `m` as (m + mᵀ)/2 after checking that it is symmetric up
    /// to `SYMMETRY_TOL` relative to its largest entry.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let scale = m.amax();
        let mut asym: f64 = 0.0;
        for j in 0..c {
            for i in (j + 1)..r {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if scale > 0.0 && asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        for j in 0..c {
            for i in (j + 1)..r {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { data: m, declared_bandwidth: None })
    }

    pub fn with_bandwidth(m: DMatrix<f64>, l: usize) -> Result<Self> {
        Self::new(m)?.declare_bandwidth(l)
    }

    /// Attaches a bandwidth after checking that every entry outside it is zero.
    pub fn declare_bandwidth(mut self, l: usize) -> Result<Self> {
        let n = self.n();
        for j in 0..n {
            for i in 0..n {
                if i.abs_diff(j) > l && self.data[(i, j)] != 0.0 {
                    return Err(Error::BandwidthViolation { i, j, bandwidth: l });
                }
            }
        }
        self.declared_bandwidth = Some(l);
        Ok(self)
    }

    /// Builds a symmetric matrix from the lower triangle of `f`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { data: m, declared_bandwidth: None }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n), declared_bandwidth: Some(0) }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let v = DVector::from_column_slice(d);
        Self { data: DMatrix::from_diagonal(&v), declared_bandwidth: Some(0) }
    }

    pub fn tridiagonal(n: usize, diag: f64, off: f64) -> Self {
        let mut s = Self::from_fn(n, |i, j| {
            if i == j {
                diag
            } else if i - j == 1 {
                off
            } else {
                0.0
            }
        });
        s.declared_bandwidth = Some(if n > 1 { 1 } else { 0 });
        s
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn declared_bandwidth(&self) -> Option<usize> {
        self.declared_bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev: Vec<f64> = self.data.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        DVector::from_vec(ev)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[ev.len() - 1]
    }

    /// l₂ operator norm, i.e. the largest |eigenvalue|.
    pub fn norm(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        CholeskyFactor::new(&self.data, self.declared_bandwidth)
    }

    pub fn inverse(&self) -> Result<SymMatrix> {
        let f = self.cholesky()?;
        let inv = f.solve_matrix(&DMatrix::identity(self.n(), self.n()));
        SymMatrix::new(inv)
    }

    pub fn add_diagonal(&self, c: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.n() {
            out.data[(i, i)] += c;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        Self { data: &self.data * c, declared_bandwidth: self.declared_bandwidth }
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.data * v
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.data[(idx[a], idx[b])])
    }
}

/// Lower Cholesky factor `A = L Lᵀ`; triangular loops are limited to the
/// bandwidth when one is known.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    band: usize,
}

impl CholeskyFactor {
    pub fn new(a: &DMatrix<f64>, bandwidth: Option<usize>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::NotSquare { rows: n, cols: a.ncols() });
        }
        match bandwidth {
            Some(b) if b + 1 < n && 4 * b < n => Self::banded(a, b),
            _ => {
                let c = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
                let l = c.l();
                if l.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(Self { l, band: n.saturating_sub(1) })
            }
        }
    }

    fn banded(a: &DMatrix<f64>, band: usize) -> Result<Self> {
        let n = a.nrows();
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let lo = j.saturating_sub(band);
            let mut d = a[(j, j)];
            for k in lo..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n.min(j + band + 1) {
                let lo_i = i.saturating_sub(band).max(lo);
                let mut s = a[(i, j)];
                for k in lo_i..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l, band })
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, x: &mut [f64]) {
        let n = self.n();
        for k in 0..n {
            let col = self.l.column(k);
            let xk = x[k] / col[k];
            x[k] = xk;
            let hi = n.min(k + self.band + 1);
            for i in (k + 1)..hi {
                x[i] -= col[i] * xk;
            }
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, x: &mut [f64]) {
        let n = self.n();
        for i in (0..n).rev() {
            let col = self.l.column(i);
            let hi = n.min(i + self.band + 1);
            let mut s = x[i];
            for k in (i + 1)..hi {
                s -= col[k] * x[k];
            }
            x[i] = s / col[i];
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_lower_in_place(x.as_mut_slice());
        self.solve_upper_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            let s = col.as_mut_slice();
            self.solve_lower_in_place(s);
            self.solve_upper_in_place(s);
        }
        x
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut out = DVector::zeros(n);
        for k in 0..n {
            let col = self.l.column(k);
            let hi = n.min(k + self.band + 1);
            for i in k..hi {
                out[i] += col[i] * z[k];
            }
        }
        out
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }
}

/// The bandwidth read off the entries of a (possibly rectangular) matrix.
pub fn bandwidth_of(a: &DMatrix<f64>) -> usize {
    let mut l = 0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                l = l.max(i.abs_diff(j));
            }
        }
    }
    l
}

pub fn bandwidth(a: &SymMatrix) -> usize {
    bandwidth_of(a.as_matrix())
}

pub fn condition_number(a: &SymMatrix) -> Result<f64> {
    let ev = a.eigenvalues();
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(hi / lo)
}

pub fn cholesky_solve(a: &SymMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: b.len() });
    }
    Ok(a.cholesky()?.solve(b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// m consecutive blocks of size q.
    Consecutive { q: usize },
    /// q'×q' tiles over an n'×n' column-stacked image, periodic neighbors.
    Tiles { n_side: usize, tile: usize },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    n: usize,
    layout: Layout,
    blocks: Vec<Vec<usize>>,
    owner: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn consecutive(n: usize, q: usize) -> Result<Self> {
        if q == 0 || n == 0 || n % q != 0 {
            return Err(Error::PartitionMismatch(format!("n = {n} is not a multiple of q = {q}")));
        }
        let m = n / q;
        let blocks: Vec<Vec<usize>> = (0..m).map(|b| (b * q..(b + 1) * q).collect()).collect();
        let neighbors = (0..m)
            .map(|b| {
                let mut v = Vec::new();
                if b > 0 {
                    v.push(b - 1);
                }
                if b + 1 < m {
                    v.push(b + 1);
                }
                v
            })
            .collect();
        Ok(Self::assemble(n, Layout::Consecutive { q }, blocks, neighbors))
    }

    /// Tiles of `tile × tile` pixels over an `n_side × n_side` image whose
    /// pixel (row r, column c) sits at flat index `c·n_side + r`. Block id
    /// is `b·t + a` for tile row a and tile column b, with `t = n_side/tile`.
    pub fn tiles(n_side: usize, tile: usize) -> Result<Self> {
        if tile == 0 || n_side == 0 || n_side % tile != 0 {
            return Err(Error::PartitionMismatch(format!(
                "image side {n_side} is not a multiple of tile {tile}"
            )));
        }
        let t = n_side / tile;
        let mut blocks = Vec::with_capacity(t * t);
        for b in 0..t {
            for a in 0..t {
                let mut idx = Vec::with_capacity(tile * tile);
                for j in 0..tile {
                    for i in 0..tile {
                        idx.push((b * tile + j) * n_side + a * tile + i);
                    }
                }
                idx.sort_unstable();
                blocks.push(idx);
            }
        }
        let pdist = |u: usize, v: usize| {
            let d = u.abs_diff(v);
            d.min(t - d)
        };
        let mut neighbors = vec![Vec::new(); t * t];
        for b1 in 0..t {
            for a1 in 0..t {
                for b2 in 0..t {
                    for a2 in 0..t {
                        if (a1, b1) != (a2, b2) && pdist(a1, a2) <= 1 && pdist(b1, b2) <= 1 {
                            neighbors[b1 * t + a1].push(b2 * t + a2);
                        }
                    }
                }
            }
        }
        Ok(Self::assemble(n_side * n_side, Layout::Tiles { n_side, tile }, blocks, neighbors))
    }

    /// An arbitrary disjoint, exhaustive partition; neighbors are left empty.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for blk in &blocks {
            if blk.is_empty() {
                return Err(Error::PartitionMismatch("empty block".into()));
            }
            for &i in blk {
                if i >= n || seen[i] {
                    return Err(Error::PartitionMismatch(format!("index {i} out of range or repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::PartitionMismatch("blocks do not cover all indices".into()));
        }
        let m = blocks.len();
        Ok(Self::assemble(n, Layout::Custom, blocks, vec![Vec::new(); m]))
    }

    fn assemble(n: usize, layout: Layout, blocks: Vec<Vec<usize>>, neighbors: Vec<Vec<usize>>) -> Self {
        let mut owner = vec![0; n];
        for (b, blk) in blocks.iter().enumerate() {
            for &i in blk {
                owner[i] = b;
            }
        }
        Self { n, layout, blocks, owner, neighbors }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn neighbors(&self, b: usize) -> &[usize] {
        &self.neighbors[b]
    }

    pub fn are_neighbors(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].contains(&b)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::PartitionMismatch(format!("partition covers {} indices, matrix has {n}", self.n)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockTriDecomp {
    pub lower: DMatrix<f64>,
    pub diag: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl BlockTriDecomp {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower + &self.diag + &self.upper
    }
}

pub fn block_decompose(a: &SymMatrix, p: &BlockPartition) -> Result<BlockTriDecomp> {
    let n = a.n();
    p.check_dim(n)?;
    let mut lower = DMatrix::zeros(n, n);
    let mut diag = DMatrix::zeros(n, n);
    let mut upper = DMatrix::zeros(n, n);
    let m = a.as_matrix();
    for j in 0..n {
        for i in 0..n {
            let (bi, bj) = (p.owner(i), p.owner(j));
            let target = match bi.cmp(&bj) {
                std::cmp::Ordering::Greater => &mut lower,
                std::cmp::Ordering::Equal => &mut diag,
                std::cmp::Ordering::Less => &mut upper,
            };
            target[(i, j)] = m[(i, j)];
        }
    }
    Ok(BlockTriDecomp { lower, diag, upper })
}

/// l₂ operator norm of a rectangular matrix.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if r.min(c) <= 4 * DENSE_LIMIT {
        let g = if r <= c { a * a.transpose() } else { a.transpose() * a };
        let ev = g.symmetric_eigenvalues();
        return ev.max().max(0.0).sqrt();
    }
    power_norm(a, 1e-12, 100_000).unwrap_or_else(|_| a.norm())
}

fn power_norm(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let c = a.ncols();
    let mut v = DVector::from_fn(c, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut prev = 0.0;
    for _ in 0..max_iter {
        let w = a.transpose() * (a * &v);
        let s = w.norm();
        if s == 0.0 {
            return Ok(0.0);
        }
        v = w / s;
        if (s - prev).abs() <= tol * s {
            return Ok(s.sqrt());
        }
        prev = s;
    }
    Err(Error::NoConvergence(max_iter))
}

/// Lemma-style bound sqrt(max block row-sum · max block column-sum) of
/// block norms for a square matrix partitioned on both sides by `p`.
pub fn block_norm_bound(a: &DMatrix<f64>, p: &BlockPartition) -> f64 {
    block_norm_bound_rect(a, p, p)
}

pub fn block_norm_bound_rect(a: &DMatrix<f64>, rows: &BlockPartition, cols: &BlockPartition) -> f64 {
    let (mr, mc) = (rows.num_blocks(), cols.num_blocks());
    let mut norms = DMatrix::zeros(mr, mc);
    for bi in 0..mr {
        let ri = rows.block(bi);
        for bj in 0..mc {
            let cj = cols.block(bj);
            let sub = DMatrix::from_fn(ri.len(), cj.len(), |x, y| a[(ri[x], cj[y])]);
            if sub.iter().any(|v| *v != 0.0) {
                norms[(bi, bj)] = operator_norm(&sub);
            }
        }
    }
    let row_max = (0..mr).map(|i| norms.row(i).sum()).fold(0.0, f64::max);
    let col_max = (0..mc).map(|j| norms.column(j).sum()).fold(0.0, f64::max);
    (row_max * col_max).sqrt()
}

/// Largest |eigenvalue| of a square matrix. Dense complex eigensolve up to
/// `DENSE_LIMIT`, power iteration with geometric-mean growth above.
pub fn spectral_radius(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    if r == 0 {
        return Ok(0.0);
    }
    if r <= DENSE_LIMIT {
        let ev = a.complex_eigenvalues();
        return Ok(ev.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    spectral_radius_power(a, tol, max_iter)
}

/// Power iteration estimate `(‖Aᵏv‖/‖Aᵏ⁻ʷv‖)^{1/w}` that tolerates
/// complex-conjugate dominant pairs.
pub fn spectral_radius_power(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    const W: usize = 16;
    let n = a.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.754_877_666).fract());
    v /= v.norm();
    let mut log_growth: Vec<f64> = Vec::with_capacity(max_iter.min(1 << 16));
    let mut prev_est = f64::NAN;
    for it in 0..max_iter {
        let w = a * &v;
        let s = w.norm();
        if s == 0.0 || s < 1e-300 {
            return Ok(0.0);
        }
        log_growth.push(s.ln());
        v = w / s;
        if it + 1 >= W && (it + 1) % W == 0 {
            let k = log_growth.len();
            let est = (log_growth[k - W..].iter().sum::<f64>() / W as f64).exp();
            if est < 1e-14 {
                return Ok(0.0);
            }
            if (est - prev_est).abs() <= tol * est.max(1e-300) {
                return Ok(est);
            }
            prev_est = est;
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// ‖A⁻¹‖²‖B‖ / (1 − ‖B‖‖A⁻¹‖), a bound on ‖(A+B)⁻¹ − A⁻¹‖.
pub fn perturbed_inverse_bound(norm_a_inv: f64, norm_b: f64) -> Result<f64> {
    if !(norm_a_inv >= 0.0 && norm_b >= 0.0) {
        return Err(Error::BoundInapplicable("norms must be nonnegative".into()));
    }
    let prod = norm_b * norm_a_inv;
    if prod >= 1.0 {
        return Err(Error::BoundInapplicable(format!("‖B‖‖A⁻¹‖ = {prod:.4} ≥ 1")));
    }
    Ok(norm_a_inv * norm_a_inv * norm_b / (1.0 - prod))
}

/// Writes "rows bandwidth" then one row per line, 17 significant digits.
pub fn write_matrix<W: Write>(w: &mut W, a: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{} {}", a.nrows(), bandwidth_of(a))?;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads the format written by `write_matrix`; columns come from the
/// width of the first row. Returns the matrix and its header bandwidth.
pub fn read_matrix<R: BufRead>(r: R) -> Result<(DMatrix<f64>, usize)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let mut it = header.split_whitespace();
    let parse_usize = |s: Option<&str>, what: &str| -> Result<usize> {
        s.ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{what}: {e}")))
    };
    let rows = parse_usize(it.next(), "row count")?;
    let bw = parse_usize(it.next(), "bandwidth")?;
    let mut vals = Vec::new();
    let mut cols = None;
    for _ in 0..rows {
        let line = lines.next().ok_or_else(|| Error::Parse("too few rows".into()))??;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t}: {e}"))))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => return Err(Error::Parse("ragged rows".into())),
            _ => {}
        }
        vals.extend(row);
    }
    let cols = cols.unwrap_or(0);
    let m = DMatrix::from_row_slice(rows, cols, &vals);
    if bandwidth_of(&m) > bw {
        return Err(Error::Parse(format!("entries exceed header bandwidth {bw}")));
    }
    Ok((m, bw))
}

pub fn read_sym_matrix<R: BufRead>(r: R) -> Result<SymMatrix> {
    let (m, bw) = read_matrix(r)?;
    SymMatrix::with_bandwidth(m, bw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example3() -> SymMatrix {
        SymMatrix::new(DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.1, -1.0, 2.0, -1.0, 0.1, -1.0, 2.0])).unwrap()
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth(&SymMatrix::identity(5)), 0);
        assert_eq!(bandwidth(&SymMatrix::tridiagonal(4, 2.0, -1.0)), 1);
        assert_eq!(bandwidth(&example3()), 2);
    }

    #[test]
    fn condition_number_examples() {
        assert_relative_eq!(condition_number(&SymMatrix::identity(10)).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(condition_number(&SymMatrix::from_diagonal(&[4.0, 1.0])).unwrap(), 4.0, epsilon = 1e-12);
        let c = condition_number(&SymMatrix::tridiagonal(50, 2.0, -1.0)).unwrap();
        assert!((c - 1e3).abs() / 1e3 < 0.3, "cond = {c}");
        assert!(matches!(
            condition_number(&SymMatrix::from_diagonal(&[1.0, -1.0])),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn asymmetry_rejected_and_noise_removed() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.6, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::NotSymmetric(_))));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-12, 1.0]);
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert!(matches!(SymMatrix::new(DMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn declared_bandwidth_is_checked() {
        assert!(matches!(
            SymMatrix::with_bandwidth(example3().into_matrix(), 1),
            Err(Error::BandwidthViolation { .. })
        ));
        assert!(SymMatrix::with_bandwidth(example3().into_matrix(), 2).is_ok());
    }

    #[test]
    fn block_decompose_examples() {
        let d = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let p = BlockPartition::consecutive(4, 2).unwrap();
        let bd = block_decompose(&d, &p).unwrap();
        assert_eq!(bd.lower, DMatrix::zeros(4, 4));
        assert_eq!(bd.upper, DMatrix::zeros(4, 4));

        let a = SymMatrix::tridiagonal(2, 2.0, -1.0);
        let bd = block_decompose(&a, &BlockPartition::consecutive(2, 1).unwrap()).unwrap();
        assert_eq!(bd.lower, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.0]));

        let t = SymMatrix::tridiagonal(4, 2.0, -1.0);
        let bd = block_decompose(&t, &p).unwrap();
        let mut expect = DMatrix::zeros(4, 4);
        expect[(1, 2)] = -1.0;
        assert_eq!(bd.upper, expect);
        assert_eq!(bd.reconstruct(), *t.as_matrix());
        assert!(matches!(
            block_decompose(&t, &BlockPartition::consecutive(6, 2).unwrap()),
            Err(Error::PartitionMismatch(_))
        ));
    }

    #[test]
    fn partition_errors_and_tiles() {
        assert!(matches!(BlockPartition::consecutive(5, 2), Err(Error::PartitionMismatch(_))));
        let p = BlockPartition::tiles(4, 2).unwrap();
        assert_eq!(p.num_blocks(), 4);
        // tile (a=1,b=0) holds rows 2..4 of columns 0..2
        assert_eq!(p.block(1), &[2, 3, 6, 7]);
        // with two tiles per side every tile neighbors every other
        assert_eq!(p.neighbors(0).len(), 3);
        let p = BlockPartition::tiles(8, 2).unwrap();
        // 4×4 tile grid, periodic: 8 neighbors each
        assert!(p.neighbors(0).iter().all(|&b| b != 0));
        assert_eq!(p.neighbors(0).len(), 8);
        assert!(p.are_neighbors(0, 3 * 4 + 3));
        assert!(!p.are_neighbors(0, 2 * 4 + 2));
    }

    #[test]
    fn block_norm_bound_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let p = BlockPartition::consecutive(2, 1).unwrap();
        assert_relative_eq!(block_norm_bound(&a, &p), 3.0, epsilon = 1e-12);
        assert_relative_eq!(operator_norm(&a), 3.0, epsilon = 1e-12);
        assert_eq!(block_norm_bound(&DMatrix::zeros(4, 4), &BlockPartition::consecutive(4, 2).unwrap()), 0.0);
    }

    #[test]
    fn spectral_radius_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(spectral_radius(&id, 1e-10, 100_000).unwrap(), 1.0, epsilon = 1e-12);
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.0, 0.25]);
        assert_relative_eq!(spectral_radius(&g, 1e-10, 100_000).unwrap(), 0.25, epsilon = 1e-12);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius(&nil, 1e-10, 100_000).unwrap() < 1e-12);
        // power path on the same matrices
        assert_relative_eq!(spectral_radius_power(&g, 1e-12, 100_000).unwrap(), 0.25, epsilon = 1e-9);
        assert_eq!(spectral_radius_power(&nil, 1e-12, 100_000).unwrap(), 0.0);
        // rotation-scaled matrix: complex pair of modulus 0.9
        let (c, s) = (0.9 * 0.3f64.cos(), 0.9 * 0.3f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert_relative_eq!(spectral_radius_power(&rot, 1e-12, 100_000).unwrap(), 0.9, epsilon = 1e-9);
        let slow = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.4]);
        assert!(matches!(spectral_radius_power(&slow, 0.0, 20), Err(Error::NoConvergence(20))));
    }

    #[test]
    fn perturbed_inverse_bound_examples() {
        assert_relative_eq!(perturbed_inverse_bound(1.0, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(perturbed_inverse_bound(7.0, 0.0).unwrap(), 0.0);
        assert!(matches!(perturbed_inverse_bound(2.0, 0.5), Err(Error::BoundInapplicable(_))));
    }

    #[test]
    fn cholesky_solve_examples() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(cholesky_solve(&SymMatrix::identity(3), &b).unwrap(), b);
        let x = cholesky_solve(&SymMatrix::from_diagonal(&[2.0, 4.0]), &DVector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_relative_eq!(x, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-15);
        assert!(matches!(
            cholesky_solve(&SymMatrix::from_diagonal(&[1.0, -1.0]), &DVector::zeros(2)),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn banded_cholesky_matches_dense() {
        let n = 40;
        let a = SymMatrix::from_fn(n, |i, j| match i - j {
            0 => 6.0 + (i % 3) as f64,
            1 => -1.5,
            2 => 0.4,
            _ => 0.0,
        })
        .declare_bandwidth(2)
        .unwrap();
        let banded = a.cholesky().unwrap();
        let dense = a.as_matrix().clone().cholesky().unwrap().l();
        assert_relative_eq!(banded.l().clone(), dense, epsilon = 1e-12);
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let x = banded.solve(&b);
        assert!((a.as_matrix() * &x - &b).norm() <= 1e-10 * b.norm());
        let z = DVector::from_fn(n, |i, _| (i as f64).cos());
        assert_relative_eq!(banded.mul_lower(&z), &dense * &z, epsilon = 1e-12);
    }

    #[test]
    fn matrix_text_round_trip() {
        let a = example3();
        let mut buf = Vec::new();
        write_matrix(&mut buf, a.as_matrix()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 2\n"));
        let back = read_sym_matrix(buf.as_slice()).unwrap();
        assert_eq!(back.as_matrix(), a.as_matrix());
        assert_eq!(back.declared_bandwidth(), Some(2));
        assert!(read_matrix("2 0\n1 2\n3 4\n".as_bytes()).is_err());
        assert!(read_matrix("2 1\n1 2\n".as_bytes()).is_err());
    }
}
