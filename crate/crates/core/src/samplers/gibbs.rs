//! Blocked Gibbs samplers for Gaussian targets, in precision and covariance
//! form, with systematic ascending block scan.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::band_linalg::{BlockPartition, CholeskyFactor, SymMatrix};
use crate::error::{Error, Result};
use crate::linear_gaussian::Prior;

#[derive(Clone, Debug)]
pub struct GaussianTarget {
    pub mean: DVector<f64>,
    pub form: Prior,
    pub partition: BlockPartition,
}

impl GaussianTarget {
    pub fn new(mean: DVector<f64>, form: Prior, partition: BlockPartition) -> Result<Self> {
        if form.n() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: form.n() });
        }
        partition.check_dim(mean.len())?;
        form.matrix().cholesky()?;
        Ok(Self { mean, form, partition })
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> Result<SymMatrix> {
        self.form.covariance()
    }

    pub fn precision(&self) -> Result<SymMatrix> {
        self.form.precision()
    }

    /// The Gibbs kernel matching the target's form.
    pub fn gibbs(&self) -> Result<Arc<dyn BlockConditional>> {
        Ok(match &self.form {
            Prior::Precision(_) => Arc::new(PrecisionGibbs::new(self)?),
            Prior::Covariance(_) => Arc::new(CovarianceGibbs::new(self)?),
        })
    }
}

/// Exact draws from block conditionals of a Gaussian.
pub trait BlockConditional: Send + Sync {
    fn partition(&self) -> &BlockPartition;

    fn n(&self) -> usize {
        self.partition().n()
    }

    /// Writes a draw of x_B given the other coordinates of `x`, using the
    /// standard normal vector `z` (one entry per index of block `b`).
    fn propose_block(&self, b: usize, x: &[f64], z: &[f64], out: &mut [f64]);

    /// One ascending sweep driven by explicit noise, laid out block after
    /// block in block order. Zero noise yields the mean recursion.
    fn sweep_with_noise(&self, x: &mut [f64], noise: &[f64]) {
        let p = self.partition();
        let mut off = 0;
        let mut buf = Vec::new();
        for b in 0..p.num_blocks() {
            let idx = p.block(b);
            buf.resize(idx.len(), 0.0);
            self.propose_block(b, x, &noise[off..off + idx.len()], &mut buf);
            for (k, &i) in idx.iter().enumerate() {
                x[i] = buf[k];
            }
            off += idx.len();
        }
    }

    fn sweep(&self, x: &mut [f64], rng: &mut dyn RngCore) {
        let p = self.partition();
        let mut buf = Vec::new();
        let mut z = Vec::new();
        for b in 0..p.num_blocks() {
            let idx = p.block(b);
            z.clear();
            z.extend((0..idx.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            buf.resize(idx.len(), 0.0);
            self.propose_block(b, x, &z, &mut buf);
            for (k, &i) in idx.iter().enumerate() {
                x[i] = buf[k];
            }
        }
    }
}

struct PrecBlock {
    idx: Vec<usize>,
    chol: CholeskyFactor,
    /// (Ω m)_B
    info: Vec<f64>,
    /// Nonzero off-block entries (row within block, column, value).
    coupling: Vec<(usize, usize, f64)>,
}

/// Solves Ω_BB(x_B − m_B) + Σ Ω_Bi(x_i − m_i) = ξ with ξ ~ N(0, Ω_BB),
/// touching only the nonzero couplings of the block.
pub struct PrecisionGibbs {
    partition: BlockPartition,
    blocks: Vec<PrecBlock>,
}

impl PrecisionGibbs {
    pub fn new(t: &GaussianTarget) -> Result<Self> {
        let w = match &t.form {
            Prior::Precision(w) => w.clone(),
            Prior::Covariance(_) => return Err(Error::PriorFormMismatch("precision-form Gibbs needs a precision matrix")),
        };
        let info = w.mul_vec(&t.mean);
        Self::from_information(&w, &info, t.partition.clone())
    }

    /// Builds the sampler from Ω and the information vector Ω m directly.
    pub fn from_information(w: &SymMatrix, info: &DVector<f64>, partition: BlockPartition) -> Result<Self> {
        partition.check_dim(w.n())?;
        let a = w.as_matrix();
        let mut blocks = Vec::with_capacity(partition.num_blocks());
        for b in 0..partition.num_blocks() {
            let idx = partition.block(b).to_vec();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])]);
            let chol = CholeskyFactor::new(&sub, None)?;
            let mut coupling = Vec::new();
            for (r, &i) in idx.iter().enumerate() {
                for c in 0..w.n() {
                    let v = a[(i, c)];
                    if v != 0.0 && partition.owner(c) != b {
                        coupling.push((r, c, v));
                    }
                }
            }
            let info_b = idx.iter().map(|&i| info[i]).collect();
            blocks.push(PrecBlock { idx, chol, info: info_b, coupling });
        }
        Ok(Self { partition, blocks })
    }

    /// Blocks grouped so that no two blocks of a group share a nonzero
    /// coupling (greedy coloring in block order).
    pub fn independent_groups(&self) -> Vec<Vec<usize>> {
        let m = self.blocks.len();
        let mut adj = vec![std::collections::BTreeSet::new(); m];
        for (b, blk) in self.blocks.iter().enumerate() {
            for &(_, c, _) in &blk.coupling {
                let o = self.partition.owner(c);
                adj[b].insert(o);
                adj[o].insert(b);
            }
        }
        let mut color = vec![usize::MAX; m];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for b in 0..m {
            let used: std::collections::BTreeSet<usize> = adj[b].iter().map(|&o| color[o]).collect();
            let c = (0..).find(|c| !used.contains(c)).unwrap();
            color[b] = c;
            if c == groups.len() {
                groups.push(Vec::new());
            }
            groups[c].push(b);
        }
        groups
    }

    /// Opt-in parallel sweep: groups of mutually uncoupled blocks are
    /// updated concurrently, each block with its own RNG stream derived
    /// from `sweep_seed`. This is a different scan order from `sweep`, so
    /// its chain is not the sequential chain.
    pub fn sweep_parallel(&self, x: &mut [f64], groups: &[Vec<usize>], sweep_seed: u64) {
        for group in groups {
            let updates: Vec<(usize, Vec<f64>)> = group
                .par_iter()
                .map(|&b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(sweep_seed);
                    rng.set_stream(b as u64);
                    let q = self.blocks[b].idx.len();
                    let z: Vec<f64> = (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let mut out = vec![0.0; q];
                    self.propose_block(b, x, &z, &mut out);
                    (b, out)
                })
                .collect();
            for (b, out) in updates {
                for (k, &i) in self.blocks[b].idx.iter().enumerate() {
                    x[i] = out[k];
                }
            }
        }
    }
}

impl BlockConditional for PrecisionGibbs {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn propose_block(&self, b: usize, x: &[f64], z: &[f64], out: &mut [f64]) {
        let blk = &self.blocks[b];
        out.copy_from_slice(&blk.info);
        for &(r, c, v) in &blk.coupling {
            out[r] -= v * x[c];
        }
        blk.chol.solve_lower_in_place(out);
        for (o, zi) in out.iter_mut().zip(z) {
            *o += zi;
        }
        blk.chol.solve_upper_in_place(out);
    }
}

struct CovBlock {
    comp: Vec<usize>,
    /// C_{B,Bc} C_{Bc,Bc}⁻¹
    gain: DMatrix<f64>,
    /// m_B − gain · m_Bc
    offset: DVector<f64>,
    schur: CholeskyFactor,
}

/// Conditionals from the Schur complement of C on each block's complement,
/// with one factorization per block computed up front.
pub struct CovarianceGibbs {
    partition: BlockPartition,
    blocks: Vec<CovBlock>,
}

impl CovarianceGibbs {
    pub fn new(t: &GaussianTarget) -> Result<Self> {
        let c = match &t.form {
            Prior::Covariance(c) => c,
            Prior::Precision(_) => return Err(Error::PriorFormMismatch("covariance-form Gibbs needs a covariance matrix")),
        };
        let p = &t.partition;
        let n = c.n();
        let a = c.as_matrix();
        let mut blocks = Vec::with_capacity(p.num_blocks());
        for b in 0..p.num_blocks() {
            let idx = p.block(b);
            let comp: Vec<usize> = (0..n).filter(|&i| p.owner(i) != b).collect();
            let c_bb = DMatrix::from_fn(idx.len(), idx.len(), |r, s| a[(idx[r], idx[s])]);
            let (gain, schur_m) = if comp.is_empty() {
                (DMatrix::zeros(idx.len(), 0), c_bb)
            } else {
                let c_cc = DMatrix::from_fn(comp.len(), comp.len(), |r, s| a[(comp[r], comp[s])]);
                let c_cb = DMatrix::from_fn(comp.len(), idx.len(), |r, s| a[(comp[r], idx[s])]);
                let f = CholeskyFactor::new(&c_cc, None)?;
                let sol = f.solve_matrix(&c_cb);
                let schur = c_bb - c_cb.transpose() * &sol;
                (sol.transpose(), schur)
            };
            let schur_m = 0.5 * (&schur_m + schur_m.transpose());
            let schur = CholeskyFactor::new(&schur_m, None)?;
            let m_b = DVector::from_iterator(idx.len(), idx.iter().map(|&i| t.mean[i]));
            let m_c = DVector::from_iterator(comp.len(), comp.iter().map(|&i| t.mean[i]));
            let offset = m_b - &gain * m_c;
            blocks.push(CovBlock { comp, gain, offset, schur });
        }
        Ok(Self { partition: p.clone(), blocks })
    }
}

impl BlockConditional for CovarianceGibbs {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn propose_block(&self, b: usize, x: &[f64], z: &[f64], out: &mut [f64]) {
        let blk = &self.blocks[b];
        let q = out.len();
        out.copy_from_slice(blk.offset.as_slice());
        for (col, &c) in blk.comp.iter().enumerate() {
            let xc = x[c];
            let g = blk.gain.column(col);
            for r in 0..q {
                out[r] += g[r] * xc;
            }
        }
        let l = blk.schur.l();
        for s in 0..q {
            let zs = z[s];
            for r in s..q {
                out[r] += l[(r, s)] * zs;
            }
        }
    }
}

/// The affine sweep map x ↦ Gx + c, recovered column by column from
/// noiseless sweeps started at the basis vectors.
pub fn extract_linear_map(k: &dyn BlockConditional) -> DMatrix<f64> {
    let n = k.n();
    let zero = vec![0.0; n];
    let mut base = vec![0.0; n];
    k.sweep_with_noise(&mut base, &zero);
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        k.sweep_with_noise(&mut x, &zero);
        for i in 0..n {
            g[(i, j)] = x[i] - base[i];
        }
    }
    g
}
