//! Localized Metropolis-within-Gibbs: block proposals from the Gibbs kernel
//! of a Gaussian prior, corrected by the likelihood terms assigned to the
//! block.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::chain::{Kernel, SamplerDescriptor, SamplerState};
use super::gibbs::BlockConditional;
use crate::band_linalg::BlockPartition;
use crate::error::{Error, Result};

/// Observation terms H_j(x) = ½(y_j − h_j(x))²/r_j, where h_j reads only
/// the variables of its assigned blocks.
pub trait ObservationTerms: Send + Sync {
    fn n_terms(&self) -> usize;

    /// A non-finite value marks a state to reject; Err reports a failed
    /// forward evaluation.
    fn term(&self, j: usize, x: &[f64]) -> std::result::Result<f64, String>;
}

#[derive(Clone, Debug)]
pub struct LinearTerms {
    rows: Vec<Vec<(usize, f64)>>,
    y: Vec<f64>,
    r: Vec<f64>,
}

impl LinearTerms {
    pub fn new(h: &DMatrix<f64>, y: &DVector<f64>, r: &DVector<f64>) -> Result<Self> {
        if y.len() != h.nrows() || r.len() != h.nrows() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), got: y.len().min(r.len()) });
        }
        let rows = (0..h.nrows())
            .map(|j| (0..h.ncols()).filter(|&i| h[(j, i)] != 0.0).map(|i| (i, h[(j, i)])).collect())
            .collect();
        Ok(Self { rows, y: y.iter().copied().collect(), r: r.iter().copied().collect() })
    }

    /// Variables read by each observation row.
    pub fn dependencies(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(|row| row.iter().map(|&(i, _)| i).collect()).collect()
    }
}

impl ObservationTerms for LinearTerms {
    fn n_terms(&self) -> usize {
        self.rows.len()
    }

    fn term(&self, j: usize, x: &[f64]) -> std::result::Result<f64, String> {
        let hx: f64 = self.rows[j].iter().map(|&(i, v)| v * x[i]).sum();
        let e = self.y[j] - hx;
        Ok(0.5 * e * e / self.r[j])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationAssignment {
    per_block: Vec<Vec<usize>>,
    var_blocks: Vec<Vec<usize>>,
}

impl ObservationAssignment {
    /// From the observations assigned to each block; observation j then
    /// depends on the union I_j of the blocks it is assigned to.
    pub fn from_block_lists(p: &BlockPartition, k: usize, per_block: Vec<Vec<usize>>) -> Result<Self> {
        if per_block.len() != p.num_blocks() {
            return Err(Error::PartitionMismatch(format!("{} block lists for {} blocks", per_block.len(), p.num_blocks())));
        }
        let mut var_blocks = vec![Vec::new(); k];
        for (b, js) in per_block.iter().enumerate() {
            for &j in js {
                if j >= k {
                    return Err(Error::PartitionMismatch(format!("observation {j} out of range")));
                }
                var_blocks[j].push(b);
            }
        }
        if let Some(j) = var_blocks.iter().position(|v| v.is_empty()) {
            return Err(Error::PartitionMismatch(format!("observation {j} is not assigned to any block")));
        }
        let mut per_block = per_block;
        for v in per_block.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        for v in var_blocks.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Ok(Self { per_block, var_blocks })
    }

    /// Assigns each observation to the blocks owning the variables it reads.
    pub fn from_dependencies(p: &BlockPartition, deps: &[Vec<usize>]) -> Result<Self> {
        let mut per_block = vec![Vec::new(); p.num_blocks()];
        for (j, d) in deps.iter().enumerate() {
            let blocks: BTreeSet<usize> = d.iter().map(|&i| p.owner(i)).collect();
            for b in blocks {
                per_block[b].push(j);
            }
        }
        Self::from_block_lists(p, deps.len(), per_block)
    }

    /// Every observation assigned to every block: the acceptance ratio is
    /// the full likelihood ratio.
    pub fn global(p: &BlockPartition, k: usize) -> Result<Self> {
        Self::from_block_lists(p, k, vec![(0..k).collect(); p.num_blocks()])
    }

    pub fn n_obs(&self) -> usize {
        self.var_blocks.len()
    }

    pub fn per_block(&self, b: usize) -> &[usize] {
        &self.per_block[b]
    }

    pub fn var_blocks(&self, j: usize) -> &[usize] {
        &self.var_blocks[j]
    }

    /// I_j as sorted state indices.
    pub fn var_indices(&self, j: usize, p: &BlockPartition) -> Vec<usize> {
        let mut v: Vec<usize> = self.var_blocks[j].iter().flat_map(|&b| p.block(b).iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

pub struct LmwgKernel {
    pub prior: Arc<dyn BlockConditional>,
    pub terms: Arc<dyn ObservationTerms>,
    pub assign: ObservationAssignment,
    pub label: String,
}

impl LmwgKernel {
    pub fn new(prior: Arc<dyn BlockConditional>, terms: Arc<dyn ObservationTerms>, assign: ObservationAssignment, label: impl Into<String>) -> Result<Self> {
        if assign.n_obs() != terms.n_terms() {
            return Err(Error::DimensionMismatch { expected: terms.n_terms(), got: assign.n_obs() });
        }
        if assign.per_block.len() != prior.partition().num_blocks() {
            return Err(Error::PartitionMismatch("assignment and prior partition differ".into()));
        }
        Ok(Self { prior, terms, assign, label: label.into() })
    }

    fn eval(&self, j: usize, x: &[f64], block: usize) -> Result<f64> {
        self.terms.term(j, x).map_err(|msg| Error::ForwardMap { block, msg })
    }
}

impl Kernel for LmwgKernel {
    fn n(&self) -> usize {
        self.prior.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: self.label.clone(), step: None, block_size: Some(self.prior.partition().block(0).len()) }
    }

    fn prepare(&self, s: &mut SamplerState) -> Result<()> {
        let x = s.x.as_slice();
        let mut terms = Vec::with_capacity(self.terms.n_terms());
        for j in 0..self.terms.n_terms() {
            terms.push(self.eval(j, x, self.assign.var_blocks(j)[0])?);
        }
        s.terms = terms;
        Ok(())
    }

    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()> {
        if s.terms.len() != self.terms.n_terms() {
            self.prepare(s)?;
        }
        let p = self.prior.partition();
        let mut prop = Vec::new();
        let mut old = Vec::new();
        let mut z = Vec::new();
        let mut fresh = Vec::new();
        for b in 0..p.num_blocks() {
            let idx = p.block(b);
            z.clear();
            z.extend((0..idx.len()).map(|_| s.rng.sample::<f64, _>(StandardNormal)));
            prop.resize(idx.len(), 0.0);
            self.prior.propose_block(b, s.x.as_slice(), &z, &mut prop);
            old.clear();
            old.extend(idx.iter().map(|&i| s.x[i]));
            for (k, &i) in idx.iter().enumerate() {
                s.x[i] = prop[k];
            }
            let js = self.assign.per_block(b);
            fresh.clear();
            let mut log_ratio = 0.0;
            let mut failure = None;
            for &j in js {
                match self.eval(j, s.x.as_slice(), b) {
                    Ok(v) => {
                        log_ratio += s.terms[j] - v;
                        fresh.push(v);
                    }
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = failure {
                for (k, &i) in idx.iter().enumerate() {
                    s.x[i] = old[k];
                }
                return Err(e);
            }
            let ok = if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
                false
            } else if log_ratio >= 0.0 {
                true
            } else {
                let u: f64 = s.rng.random();
                u.ln() < log_ratio
            };
            if ok {
                for (t, &j) in js.iter().enumerate() {
                    s.terms[j] = fresh[t];
                }
            } else {
                for (k, &i) in idx.iter().enumerate() {
                    s.x[i] = old[k];
                }
            }
            moves.push((b, ok));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_from_dependencies() {
        let p = BlockPartition::consecutive(6, 2).unwrap();
        let deps = vec![vec![0], vec![1, 2], vec![5]];
        let a = ObservationAssignment::from_dependencies(&p, &deps).unwrap();
        assert_eq!(a.per_block(0), &[0, 1]);
        assert_eq!(a.per_block(1), &[1]);
        assert_eq!(a.per_block(2), &[2]);
        assert_eq!(a.var_indices(1, &p), vec![0, 1, 2, 3]);
    }

    #[test]
    fn unassigned_observation_rejected() {
        let p = BlockPartition::consecutive(4, 2).unwrap();
        assert!(ObservationAssignment::from_block_lists(&p, 2, vec![vec![0], vec![0]]).is_err());
        assert!(ObservationAssignment::from_dependencies(&p, &[vec![0], vec![]]).is_err());
    }

    #[test]
    fn linear_terms() {
        let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.5]);
        let t = LinearTerms::new(&h, &DVector::from_vec(vec![1.0, 2.0]), &DVector::from_vec(vec![1.0, 4.0])).unwrap();
        assert_eq!(t.dependencies(), vec![vec![0], vec![1, 2]]);
        assert_eq!(t.term(0, &[0.0, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(t.term(1, &[0.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(t.term(1, &[0.0, 0.0, 0.0]).unwrap(), 0.5);
    }
}
