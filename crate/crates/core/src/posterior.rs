//! Chain storage and posterior summaries: means, equal-tailed credible
//! intervals, credible-interval thresholding and block Frobenius weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeGraph;
use crate::mcmc::RunConfig;

/// Run settings echoed into every chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub method: String,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub prior: String,
}

impl ChainMeta {
    pub fn new(method: &str, config: &RunConfig, prior: String) -> Self {
        Self {
            method: method.to_string(),
            seed: config.seed,
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            prior,
        }
    }
}

/// Stored precision draws. Samples are exactly symmetric, so each one is
/// kept as its packed upper triangle (column by column, diagonal included).
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    p: usize,
    m: usize,
    n: usize,
    trace_name: String,
    meta: ChainMeta,
    samples: Vec<f64>,
    trace: Vec<f64>,
}

pub(crate) fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl Chain {
    pub fn with_capacity(p: usize, m: usize, n: usize, trace_name: &str, meta: ChainMeta, samples: usize) -> Self {
        Self {
            p,
            m,
            n,
            trace_name: trace_name.to_string(),
            meta,
            samples: Vec::with_capacity(samples * packed_len(p * m)),
            trace: Vec::with_capacity(samples),
        }
    }

    /// Rebuild a chain from packed samples, checking every length.
    pub fn from_parts(
        p: usize,
        m: usize,
        n: usize,
        trace_name: String,
        meta: ChainMeta,
        samples: Vec<f64>,
        trace: Vec<f64>,
    ) -> Result<Self> {
        let per = packed_len(p * m);
        if per == 0 || samples.len() != trace.len() * per {
            return Err(Error::Dimension(format!(
                "{} packed values do not form {} samples of dimension {}",
                samples.len(),
                trace.len(),
                p * m
            )));
        }
        Ok(Self { p, m, n, trace_name, meta, samples, trace })
    }

    pub(crate) fn storage_bytes(dim: usize, samples: usize) -> u64 {
        (packed_len(dim) as u64 + 1) * samples as u64 * 8
    }

    pub fn push(&mut self, theta: &DMatrix<f64>, trace_value: f64) {
        let d = self.dim();
        debug_assert_eq!(theta.shape(), (d, d));
        for j in 0..d {
            self.samples.extend((0..=j).map(|i| theta[(i, j)]));
        }
        self.trace.push(trace_value);
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p * self.m
    }

    pub fn meta(&self) -> &ChainMeta {
        &self.meta
    }

    pub fn trace_name(&self) -> &str {
        &self.trace_name
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn raw_samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> DMatrix<f64> {
        let d = self.dim();
        let packed = &self.samples[k * packed_len(d)..(k + 1) * packed_len(d)];
        DMatrix::from_fn(d, d, |i, j| packed[packed_index(i, j)])
    }

    /// Draws of element `(i, j)` across the chain.
    pub fn element(&self, i: usize, j: usize) -> impl Iterator<Item = f64> + '_ {
        let per = packed_len(self.dim());
        let idx = packed_index(i, j);
        self.samples.iter().skip(idx).step_by(per).copied()
    }
}

pub fn posterior_mean(chain: &Chain) -> Result<DMatrix<f64>> {
    if chain.is_empty() {
        return Err(Error::InsufficientData("posterior mean of an empty chain".into()));
    }
    let d = chain.dim();
    let per = packed_len(d);
    let mut acc = vec![0.0; per];
    for sample in chain.samples.chunks_exact(per) {
        for (a, v) in acc.iter_mut().zip(sample) {
            *a += v;
        }
    }
    let len = chain.len() as f64;
    Ok(DMatrix::from_fn(d, d, |i, j| acc[packed_index(i, j)] / len))
}

/// Type-7 quantile (linear interpolation between order statistics) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Elementwise equal-tailed credible intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleIntervals {
    pub level: f64,
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl CredibleIntervals {
    /// `true` when the interval for `(i, j)` does not contain zero.
    pub fn excludes_zero(&self, i: usize, j: usize) -> bool {
        self.lower[(i, j)] > 0.0 || self.upper[(i, j)] < 0.0
    }
}

pub fn credible_intervals(chain: &Chain, level: f64) -> Result<CredibleIntervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    if chain.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "credible intervals need at least 2 samples, chain has {}",
            chain.len()
        )));
    }
    let d = chain.dim();
    let tail = (1.0 - level) / 2.0;
    let mut lower = DMatrix::zeros(d, d);
    let mut upper = DMatrix::zeros(d, d);
    let mut buf = Vec::with_capacity(chain.len());
    for j in 0..d {
        for i in 0..=j {
            buf.clear();
            buf.extend(chain.element(i, j));
            buf.sort_unstable_by(f64::total_cmp);
            let (lo, hi) = (quantile_sorted(&buf, tail), quantile_sorted(&buf, 1.0 - tail));
            lower[(i, j)] = lo;
            lower[(j, i)] = lo;
            upper[(i, j)] = hi;
            upper[(j, i)] = hi;
        }
    }
    Ok(CredibleIntervals { level, lower, upper })
}

/// `p x p` matrix of block Frobenius norms (zero diagonal blocks included as-is).
pub fn block_frobenius(theta: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let d = theta.nrows();
    if m == 0 || theta.ncols() != d || d % m != 0 {
        return Err(Error::Dimension(format!(
            "a {}x{} matrix does not split into {m}x{m} blocks",
            theta.nrows(),
            theta.ncols()
        )));
    }
    let p = d / m;
    Ok(DMatrix::from_fn(p, p, |i, j| crate::mcmc::state::block_sq_norm(theta, m, i, j).sqrt()))
}

/// Zero every element of `mean` whose interval covers zero, then read edges
/// from the surviving blocks.
pub fn threshold_with(
    mean: &DMatrix<f64>,
    intervals: &CredibleIntervals,
    m: usize,
) -> Result<(DMatrix<f64>, EdgeGraph)> {
    if mean.shape() != intervals.lower.shape() {
        return Err(Error::Dimension("mean and interval matrices differ in shape".into()));
    }
    let d = mean.nrows();
    let thresholded = DMatrix::from_fn(d, d, |i, j| {
        if intervals.excludes_zero(i, j) {
            mean[(i, j)]
        } else {
            0.0
        }
    });
    let weights = block_frobenius(&thresholded, m)?;
    Ok((thresholded, EdgeGraph::from_weights(&weights)))
}

pub fn threshold_graph(chain: &Chain, level: f64) -> Result<(DMatrix<f64>, EdgeGraph)> {
    let mean = posterior_mean(chain)?;
    let intervals = credible_intervals(chain, level)?;
    threshold_with(&mean, &intervals, chain.m())
}
