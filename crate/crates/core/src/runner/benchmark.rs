//! Wall-time benchmark: full sampler sweeps on simulated network-1 scores.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fghs::fghs_init;
use crate::fglasso::{fglasso_init, LambdaPrior};
use crate::fpca::ScoreMatrix;
use crate::mcmc::{rng_from_seed, GibbsSampler};
use crate::netgen::{network1, simulate_scores, FOURIER_TERMS};
use crate::runner::config::Method;

#[derive(Debug, Clone, Copy)]
pub struct BenchmarkSpec {
    pub method: Method,
    pub iterations: usize,
    pub n: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self { method: Method::FglassoHyper, iterations: 2000, n: 100, repeats: 3, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub p: usize,
    /// Median over repeats.
    pub seconds: f64,
    pub runs: Vec<f64>,
}

fn time_sweeps<S: GibbsSampler>(state: &mut S, iterations: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let start = Instant::now();
    for _ in 0..iterations {
        state.sweep(&mut rng)?;
    }
    Ok(start.elapsed().as_secs_f64())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Time `spec.iterations` sweeps (initialization excluded) for each `p`.
pub fn benchmark(p_list: &[usize], spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRow>> {
    if p_list.is_empty() || spec.repeats == 0 || spec.iterations == 0 {
        return Err(Error::Config("benchmark needs p values, iterations >= 1 and repeats >= 1".into()));
    }
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let truth = network1(p, FOURIER_TERMS)?;
        let scores = ScoreMatrix::new(simulate_scores(truth.theta(), spec.n, spec.seed)?, FOURIER_TERMS)?;
        let mut runs = Vec::with_capacity(spec.repeats);
        for r in 0..spec.repeats {
            let seed = spec.seed.wrapping_add(r as u64);
            let secs = match spec.method {
                Method::Fghs => time_sweeps(&mut fghs_init(&scores)?, spec.iterations, seed)?,
                Method::FglassoHyper => {
                    time_sweeps(&mut fglasso_init(&scores, LambdaPrior::default_hyper())?, spec.iterations, seed)?
                }
                Method::FglassoFixed => {
                    time_sweeps(&mut fglasso_init(&scores, LambdaPrior::Fixed { lambda: 1.0 })?, spec.iterations, seed)?
                }
            };
            runs.push(secs);
        }
        rows.push(BenchmarkRow { p, seconds: median(&runs), runs });
    }
    Ok(rows)
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("p,seconds\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.6}", r.p, r.seconds);
    }
    out
}
