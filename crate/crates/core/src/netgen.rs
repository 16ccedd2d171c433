//! Simulation generators: block-banded true precision matrices, Gaussian
//! score draws and noisy Fourier-basis curves.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fpca::{Design, FunctionalDataset, Series};
use crate::graph::EdgeGraph;
use crate::mcmc::{draw_std_normal, substream};
use crate::posterior::block_frobenius;

/// Number of Fourier basis functions used to render curves.
pub const FOURIER_TERMS: usize = 5;

// Stream offsets keep score draws and curve rendering on disjoint sub-streams
// even when callers reuse a seed.
const SCORE_STREAM_BASE: u64 = 1 << 40;
const RENDER_STREAM_BASE: u64 = 1 << 41;

/// Ground-truth block precision matrix with `Theta_ij = w_ij I_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePrecision {
    theta: DMatrix<f64>,
    p: usize,
    m: usize,
}

impl TruePrecision {
    fn from_block_weights(weights: &DMatrix<f64>, m: usize) -> Result<Self> {
        let p = weights.nrows();
        let theta = DMatrix::from_fn(p * m, p * m, |r, c| {
            if r % m == c % m {
                weights[(r / m, c / m)]
            } else {
                0.0
            }
        });
        if theta.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("generated precision".into()));
        }
        Ok(Self { theta, p, m })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Common diagonal value of block `(i, j)`.
    pub fn block_weight(&self, i: usize, j: usize) -> f64 {
        self.theta[(i * self.m, j * self.m)]
    }

    pub fn true_edges(&self) -> EdgeGraph {
        true_edges(&self.theta, self.m)
    }
}

fn banded_weight(i: usize, j: usize) -> f64 {
    match i.abs_diff(j) {
        0 => 1.0,
        1 => 0.4,
        2 => 0.2,
        _ => 0.0,
    }
}

fn check_sizes(p: usize, m: usize) -> Result<()> {
    if p == 0 || m == 0 {
        return Err(Error::Domain(format!("network needs p >= 1 and m >= 1, got p = {p}, m = {m}")));
    }
    Ok(())
}

/// Block-banded network: `0.4 I` to first neighbours, `0.2 I` to second neighbours.
pub fn network1(p: usize, m: usize) -> Result<TruePrecision> {
    check_sizes(p, m)?;
    TruePrecision::from_block_weights(&DMatrix::from_fn(p, p, banded_weight), m)
}

/// Alternating decades of ten nodes: even-indexed decades (nodes 1-10,
/// 21-30, ...) are wired as `network1(10)` internally, odd ones are isolated.
/// A trailing partial decade follows the rule of its own index.
pub fn network2(p: usize, m: usize) -> Result<TruePrecision> {
    check_sizes(p, m)?;
    let weights = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i / 10 == j / 10 && (i / 10) % 2 == 0 {
            banded_weight(i % 10, j % 10)
        } else {
            0.0
        }
    });
    TruePrecision::from_block_weights(&weights, m)
}

/// Edges where the block Frobenius norm is positive, weighted by that norm.
pub fn true_edges(theta: &DMatrix<f64>, m: usize) -> EdgeGraph {
    let weights = block_frobenius(theta, m).expect("true precision dimensions are block-consistent");
    EdgeGraph::from_weights(&weights)
}

/// `n` i.i.d. rows from `N(0, theta^-1)`, one sub-stream of `seed` per row.
pub fn simulate_scores(theta: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let d = theta.nrows();
    let chol = theta
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("precision passed to simulate_scores".into()))?;
    let sigma = chol.inverse();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let l = sigma
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("covariance passed to simulate_scores".into()))?
        .unpack();
    let mut out = DMatrix::zeros(n, d);
    for i in 0..n {
        let mut rng = substream(seed, SCORE_STREAM_BASE + i as u64);
        let z = nalgebra::DVector::from_fn(d, |_, _| draw_std_normal(&mut rng));
        out.row_mut(i).copy_from(&(&l * z).transpose());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingDesign {
    pub kind: Design,
    /// Points per series.
    pub points: usize,
    pub noise_sd: f64,
}

impl SamplingDesign {
    /// 100 equally spaced points including both endpoints, noise sd 0.5.
    pub fn dense() -> Self {
        Self { kind: Design::Dense, points: 100, noise_sd: 0.5 }
    }

    /// 9 uniform random points per series, noise sd 0.5.
    pub fn sparse() -> Self {
        Self { kind: Design::Sparse, points: 9, noise_sd: 0.5 }
    }

    pub fn for_kind(kind: Design) -> Self {
        match kind {
            Design::Dense => Self::dense(),
            Design::Sparse => Self::sparse(),
        }
    }
}

/// `{1, sqrt2 sin 2 pi t, sqrt2 cos 2 pi t, sqrt2 sin 4 pi t, sqrt2 cos 4 pi t}` at `t`.
pub fn fourier_basis(t: f64) -> [f64; FOURIER_TERMS] {
    use std::f64::consts::{PI, SQRT_2};
    let (a, b) = (2.0 * PI * t, 4.0 * PI * t);
    [1.0, SQRT_2 * a.sin(), SQRT_2 * a.cos(), SQRT_2 * b.sin(), SQRT_2 * b.cos()]
}

/// Observe `g_ij(t) = s(t)' delta_ij` with Gaussian noise. Series `(i, j)`
/// draws its times and noise from its own sub-stream.
pub fn render_functions(scores: &DMatrix<f64>, design: &SamplingDesign, seed: u64) -> Result<FunctionalDataset> {
    if scores.ncols() == 0 || scores.ncols() % FOURIER_TERMS != 0 {
        return Err(Error::Dimension(format!(
            "{} score columns are not a multiple of {FOURIER_TERMS}",
            scores.ncols()
        )));
    }
    if design.points == 0 || !(design.noise_sd >= 0.0) {
        return Err(Error::Domain("sampling design needs points >= 1 and noise_sd >= 0".into()));
    }
    let (n, p) = (scores.nrows(), scores.ncols() / FOURIER_TERMS);
    let dense_grid: Vec<f64> = match design.points {
        1 => vec![0.0],
        t => (0..t).map(|k| k as f64 / (t - 1) as f64).collect(),
    };
    let mut series = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            let mut rng = substream(seed, RENDER_STREAM_BASE + (i * p + j) as u64);
            let times = match design.kind {
                Design::Dense => dense_grid.clone(),
                Design::Sparse => {
                    let mut t: Vec<f64> = (0..design.points).map(|_| rng.random::<f64>()).collect();
                    t.sort_by(f64::total_cmp);
                    t
                }
            };
            let coef = scores.view((i, j * FOURIER_TERMS), (1, FOURIER_TERMS));
            let values = times
                .iter()
                .map(|&t| {
                    let s = fourier_basis(t);
                    let g: f64 = s.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
                    g + design.noise_sd * draw_std_normal(&mut rng)
                })
                .collect();
            series.push(Series { times, values });
        }
    }
    FunctionalDataset::new(n, p, series, design.kind)
}
