//! Kernel interface, seeded chain driver, and CSV serialization of chains.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::{BlockConditional, PrecisionGibbs};
use crate::error::{Error, Result};

/// Mutable state of one chain. Kernels keep their caches here so that a
/// kernel value can be shared between chains.
#[derive(Clone, Debug)]
pub struct SamplerState {
    pub x: DVector<f64>,
    /// Per-observation likelihood terms H_j (l-MwG only).
    pub terms: Vec<f64>,
    /// Cached scalar of the Metropolized kernels: log target density for
    /// RWM/MALA/HMC, negative log-likelihood for pCN.
    pub cached: Option<f64>,
    /// Cached gradient of the log target (MALA).
    pub grad: Option<DVector<f64>>,
    pub rng: ChaCha8Rng,
}

impl SamplerState {
    pub fn new(x: DVector<f64>, seed: u64) -> Self {
        Self { x, terms: Vec::new(), cached: None, grad: None, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Drops the caches after `x` was changed from outside a kernel.
    pub fn invalidate(&mut self) {
        self.terms.clear();
        self.cached = None;
        self.grad = None;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerDescriptor {
    pub kind: String,
    pub step: Option<f64>,
    pub block_size: Option<usize>,
}

pub trait Kernel: Send + Sync {
    fn n(&self) -> usize;

    fn descriptor(&self) -> SamplerDescriptor;

    /// False for exact Gibbs, whose moves are never rejected.
    fn metropolized(&self) -> bool {
        true
    }

    /// Fills the state's caches; called before the first step.
    fn prepare(&self, _s: &mut SamplerState) -> Result<()> {
        Ok(())
    }

    /// One full sweep or step. Metropolized kernels push one
    /// (block, accepted) pair per move.
    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()>;
}

/// Exact blocked Gibbs with sequential ascending scan.
pub struct GibbsKernel {
    pub cond: Arc<dyn BlockConditional>,
    pub label: String,
}

impl GibbsKernel {
    pub fn new(cond: Arc<dyn BlockConditional>, label: impl Into<String>) -> Self {
        Self { cond, label: label.into() }
    }
}

impl Kernel for GibbsKernel {
    fn n(&self) -> usize {
        self.cond.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: self.label.clone(), step: None, block_size: Some(self.cond.partition().block(0).len()) }
    }

    fn metropolized(&self) -> bool {
        false
    }

    fn step(&self, s: &mut SamplerState, _moves: &mut Vec<(usize, bool)>) -> Result<()> {
        self.cond.sweep(s.x.as_mut_slice(), &mut s.rng);
        Ok(())
    }
}

/// Precision-form Gibbs updating groups of uncoupled blocks concurrently.
/// The chain differs from the sequential one and is only reproducible for a
/// fixed seed and grouping.
pub struct ParallelGibbsKernel {
    gibbs: Arc<PrecisionGibbs>,
    groups: Vec<Vec<usize>>,
}

impl ParallelGibbsKernel {
    pub fn new(gibbs: Arc<PrecisionGibbs>) -> Self {
        let groups = gibbs.independent_groups();
        Self { gibbs, groups }
    }
}

impl Kernel for ParallelGibbsKernel {
    fn n(&self) -> usize {
        self.gibbs.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor {
            kind: "gibbs_prec_parallel".into(),
            step: None,
            block_size: Some(self.gibbs.partition().block(0).len()),
        }
    }

    fn metropolized(&self) -> bool {
        false
    }

    fn step(&self, s: &mut SamplerState, _moves: &mut Vec<(usize, bool)>) -> Result<()> {
        let seed = rand::Rng::random::<u64>(&mut s.rng);
        self.gibbs.sweep_parallel(s.x.as_mut_slice(), &self.groups, seed);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptRecord {
    pub step: usize,
    pub block: usize,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct RecordOptions {
    /// Coordinates whose full trace is kept; None keeps all.
    pub tracked: Option<Vec<usize>>,
    /// Fraction of leading states excluded from means and IACTs.
    pub burn_in_frac: f64,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self { tracked: None, burn_in_frac: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub descriptor: SamplerDescriptor,
    pub seed: u64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub tracked: Vec<usize>,
    /// One trace per tracked coordinate, `n_steps` values each.
    pub series: Vec<Vec<f64>>,
    /// Mean over all coordinates of the post-burn-in states.
    pub mean: DVector<f64>,
    pub acceptance: Option<Vec<AcceptRecord>>,
    pub final_state: DVector<f64>,
}

impl Chain {
    pub fn post_burn_in(&self, t: usize) -> &[f64] {
        &self.series[t][self.burn_in..]
    }

    pub fn state(&self, step: usize) -> Vec<f64> {
        self.series.iter().map(|s| s[step]).collect()
    }
}

/// Runs `n_steps` moves from `x0` and records every state after each move.
/// The result depends only on the kernel, `x0`, `n_steps` and `seed`.
pub fn run_chain<K: Kernel + ?Sized>(kernel: &K, x0: DVector<f64>, n_steps: usize, seed: u64, opts: &RecordOptions) -> Result<Chain> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("a chain needs at least one step".into()));
    }
    let n = kernel.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    let tracked = opts.tracked.clone().unwrap_or_else(|| (0..n).collect());
    if let Some(&bad) = tracked.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("tracked coordinate {bad} out of range")));
    }
    if !(0.0..1.0).contains(&opts.burn_in_frac) {
        return Err(Error::InvalidArgument("burn-in fraction must lie in [0, 1)".into()));
    }
    let burn_in = (opts.burn_in_frac * n_steps as f64).floor() as usize;
    let mut state = SamplerState::new(x0, seed);
    kernel.prepare(&mut state)?;
    let mut series: Vec<Vec<f64>> = tracked.iter().map(|_| Vec::with_capacity(n_steps)).collect();
    let mut sum = DVector::zeros(n);
    let metropolized = kernel.metropolized();
    let mut log = Vec::new();
    let mut moves = Vec::new();
    for step in 0..n_steps {
        moves.clear();
        kernel.step(&mut state, &mut moves)?;
        if metropolized {
            log.extend(moves.iter().map(|&(block, accepted)| AcceptRecord { step, block, accepted }));
        }
        for (t, &i) in tracked.iter().enumerate() {
            series[t].push(state.x[i]);
        }
        if step >= burn_in {
            sum += &state.x;
        }
    }
    let mean = sum / (n_steps - burn_in) as f64;
    Ok(Chain {
        descriptor: kernel.descriptor(),
        seed,
        n_steps,
        burn_in,
        tracked,
        series,
        mean,
        acceptance: metropolized.then_some(log),
        final_state: state.x,
    })
}

/// Header "step,x_1,...", one row per recorded state; columns are the
/// tracked coordinates, named by their 1-based index.
pub fn write_chain_csv<W: Write>(w: &mut W, chain: &Chain) -> Result<()> {
    let mut header = String::from("step");
    for &i in &chain.tracked {
        header.push_str(&format!(",x_{}", i + 1));
    }
    writeln!(w, "{header}")?;
    for step in 0..chain.n_steps {
        write!(w, "{step}")?;
        for s in &chain.series {
            write!(w, ",{:e}", s[step])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_acceptance_csv<W: Write>(w: &mut W, chain: &Chain) -> Result<()> {
    let log = chain.acceptance.as_ref().ok_or(Error::NoAcceptanceLog)?;
    writeln!(w, "step,block,accepted")?;
    for r in log {
        writeln!(w, "{},{},{}", r.step, r.block, u8::from(r.accepted))?;
    }
    Ok(())
}
