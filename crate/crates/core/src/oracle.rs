//! Finite-sum objectives with conservative-field oracles and stochastic
//! index sampling.
//!
//! Each component oracle returns (f_i(x), d_i) with d_i a deterministic
//! selection from the conservative field of f_i under fixed tie-breaking
//! rules (sign(0) = 0 for absolute values, the derivative of the ReLU at
//! zero taken as 0). Evaluating twice at the same point returns bitwise
//! identical elements.
//!
//! Full-sum evaluation splits the component range into fixed-size chunks,
//! reduces each chunk sequentially, and folds the chunk partials in chunk
//! order. The parallel build evaluates chunks on the rayon pool but keeps
//! the identical chunk boundaries and fold order, so parallel and
//! sequential results agree bit for bit.

use std::sync::Arc;

use crate::blocked::BlockedVector;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Components per reduction chunk in full-sum evaluation.
const FULL_EVAL_CHUNK: usize = 1024;

/// A locally Lipschitz function together with a deterministic selection
/// from one of its conservative fields.
pub trait ConservativeOracle: Send + Sync {
    /// Block layout of the points this oracle accepts.
    fn block_dims(&self) -> &[usize];

    /// Returns (f(x), d) with d an element of D_f(x). At points of
    /// differentiability d is the classical gradient.
    fn eval(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)>;
}

/// f(x) = (1/N) sum_i f_i(x) with per-component conservative oracles.
pub struct FiniteSumObjective {
    components: Vec<Arc<dyn ConservativeOracle>>,
    block_dims: Vec<usize>,
}

impl FiniteSumObjective {
    pub fn new(components: Vec<Arc<dyn ConservativeOracle>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("finite sum needs at least one component"));
        }
        let block_dims = components[0].block_dims().to_vec();
        for c in &components[1..] {
            if c.block_dims() != block_dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    context: "finite sum component shapes",
                    left: block_dims.iter().sum(),
                    right: c.block_dims().iter().sum(),
                });
            }
        }
        Ok(FiniteSumObjective {
            components,
            block_dims,
        })
    }

    pub fn single(component: Arc<dyn ConservativeOracle>) -> Self {
        let block_dims = component.block_dims().to_vec();
        FiniteSumObjective {
            components: vec![component],
            block_dims,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    fn check_point(&self, x: &BlockedVector) -> Result<()> {
        if x.block_dims() == self.block_dims {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context: "objective evaluation point",
                left: x.total_dim(),
                right: self.block_dims.iter().sum(),
            })
        }
    }

    /// (f_i(x), d_i) for component i.
    pub fn eval_component(&self, i: usize, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        let c = self.components.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            count: self.components.len(),
        })?;
        self.check_point(x)?;
        c.eval(x)
    }

    fn eval_chunk(&self, range: std::ops::Range<usize>, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        let mut value = 0.0;
        let mut element = BlockedVector::zeros(&self.block_dims);
        for i in range {
            let (v, d) = self.components[i].eval(x)?;
            value += v;
            element.axpy(1.0, &d);
        }
        Ok((value, element))
    }

    fn combine_chunks(&self, partials: Vec<Result<(f64, BlockedVector)>>) -> Result<(f64, BlockedVector)> {
        let n = self.components.len() as f64;
        let mut value = 0.0;
        let mut element = BlockedVector::zeros(&self.block_dims);
        for partial in partials {
            let (v, d) = partial?;
            value += v;
            element.axpy(1.0, &d);
        }
        element.scale(1.0 / n);
        Ok((value / n, element))
    }

    fn chunk_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.components.len();
        (0..n)
            .step_by(FULL_EVAL_CHUNK)
            .map(|s| s..(s + FULL_EVAL_CHUNK).min(n))
            .collect()
    }

    /// Exact full objective value and averaged conservative element.
    /// Dispatches to the parallel path when built with the `parallel`
    /// feature; results are bitwise identical either way.
    pub fn eval_full(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        self.check_point(x)?;
        #[cfg(feature = "parallel")]
        {
            let partials: Vec<_> = self
                .chunk_ranges()
                .into_par_iter()
                .map(|r| self.eval_chunk(r, x))
                .collect();
            self.combine_chunks(partials)
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.eval_full_seq(x)
        }
    }

    /// Sequential full evaluation, always available (benchmark baseline).
    pub fn eval_full_seq(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        self.check_point(x)?;
        let partials: Vec<_> = self
            .chunk_ranges()
            .into_iter()
            .map(|r| self.eval_chunk(r, x))
            .collect();
        self.combine_chunks(partials)
    }

    /// Full objective value only (skips element accumulation).
    pub fn eval_full_value(&self, x: &BlockedVector) -> Result<f64> {
        self.check_point(x)?;
        let value_chunk = |r: std::ops::Range<usize>| -> Result<f64> {
            let mut acc = 0.0;
            for i in r {
                acc += self.components[i].eval(x)?.0;
            }
            Ok(acc)
        };
        #[cfg(feature = "parallel")]
        let partials: Vec<_> = self
            .chunk_ranges()
            .into_par_iter()
            .map(value_chunk)
            .collect();
        #[cfg(not(feature = "parallel"))]
        let partials: Vec<_> = self.chunk_ranges().into_iter().map(value_chunk).collect();
        let mut value = 0.0;
        for p in partials {
            value += p?;
        }
        Ok(value / self.components.len() as f64)
    }

    /// Collapse to a single-component objective whose component evaluates
    /// the full average; turns any sampler into a full-batch run.
    pub fn into_full_batch(self) -> FiniteSumObjective {
        let block_dims = self.block_dims.clone();
        FiniteSumObjective {
            components: vec![Arc::new(FullBatchOracle { inner: self })],
            block_dims,
        }
    }
}

struct FullBatchOracle {
    inner: FiniteSumObjective,
}

impl ConservativeOracle for FullBatchOracle {
    fn block_dims(&self) -> &[usize] {
        self.inner.block_dims()
    }

    fn eval(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        self.inner.eval_full(x)
    }
}

/// Index sampling strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMode {
    /// Indices drawn uniformly with replacement; the runner may average
    /// `batch_size` of them per step.
    IidMinibatch { batch_size: usize },
    /// Epoch-wise sampling without replacement: within each epoch the
    /// drawn indices form a permutation of 0..N, reshuffled at every
    /// epoch boundary from the seeded stream.
    Reshuffle,
}

/// Stateful index source. Single-owner: an experiment runner gives each
/// run its own sampler.
#[derive(Clone, Debug)]
pub struct Sampler {
    mode: SamplerMode,
    n: usize,
    rng: Rng,
    perm: Vec<usize>,
    pos: usize,
    draws: u64,
}

impl Sampler {
    pub fn new(mode: SamplerMode, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sampler needs N >= 1".into()));
        }
        if let SamplerMode::IidMinibatch { batch_size } = mode {
            if batch_size == 0 {
                return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
            }
        }
        Ok(Sampler {
            mode,
            n,
            rng: Rng::new(seed),
            perm: (0..n).collect(),
            pos: n, // force a shuffle before the first reshuffle draw
            draws: 0,
        })
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn num_components(&self) -> usize {
        self.n
    }

    /// Total indices drawn so far; one epoch is N draws.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn epoch(&self) -> u64 {
        self.draws / self.n as u64
    }

    pub fn next_index(&mut self) -> usize {
        self.draws += 1;
        match self.mode {
            SamplerMode::IidMinibatch { .. } => self.rng.next_below(self.n as u64) as usize,
            SamplerMode::Reshuffle => {
                if self.pos >= self.n {
                    self.rng.shuffle(&mut self.perm);
                    self.pos = 0;
                }
                let idx = self.perm[self.pos];
                self.pos += 1;
                idx
            }
        }
    }
}

/// Diagnostic for the summed-noise condition: the largest windowed
/// partial-sum norm max_s max_i || sum_{k=s}^{i} eta_k xi_k || with the
/// window start s ranging over the trailing half of the run and the
/// window end i capped at Lambda_eta(lambda_eta(s) + horizon).
///
/// A measurement, not a proof: a decreasing value over longer runs is
/// consistent with the summability condition the convergence analysis
/// needs; a flat or growing one flags trouble.
pub fn noise_partial_sum_check(
    etas: &[f64],
    xis: &[BlockedVector],
    horizon: f64,
) -> Result<f64> {
    if etas.is_empty() || xis.is_empty() {
        return Err(Error::EmptyInput("noise_partial_sum_check"));
    }
    if etas.len() != xis.len() {
        return Err(Error::DimensionMismatch {
            context: "noise_partial_sum_check lengths",
            left: etas.len(),
            right: xis.len(),
        });
    }
    let k_total = etas.len();
    // lambda[k] = sum_{i<k} eta_i
    let mut lambda = Vec::with_capacity(k_total + 1);
    lambda.push(0.0);
    for &e in etas {
        lambda.push(lambda.last().unwrap() + e);
    }
    // prefix[k] = sum_{i<k} eta_i * xi_i
    let mut prefix = Vec::with_capacity(k_total + 1);
    prefix.push(BlockedVector::zeros_like(&xis[0]));
    for (e, xi) in etas.iter().zip(xis) {
        let mut next = prefix.last().unwrap().clone();
        next.axpy(*e, xi);
        prefix.push(next);
    }

    let mut worst = 0.0f64;
    for s in k_total / 2..k_total {
        let t_end = lambda[s] + horizon;
        for i in s..k_total {
            // Window end capped at Lambda_eta(lambda_eta(s) + horizon).
            if lambda[i] > t_end {
                break;
            }
            let norm = prefix[i + 1].sub(&prefix[s]).norm();
            worst = worst.max(norm);
        }
    }
    Ok(worst)
}
