//! Block precision bookkeeping and the column-wise conditional update shared
//! by the functional graphical lasso and horseshoe samplers.
//!
//! Columns are indexed `c = node * m + score` (zero based). Column `c` has
//! free positions `F` (every index belonging to another node) and structural
//! zeros `Z` (the other scores of its own node). With `Theta_11` the matrix
//! with row and column `c` removed, the update draws
//!
//! ```text
//! gamma ~ Gamma(n/2 + 1, rate = (s_22 + rate_extra) / 2)
//! beta  ~ N(-C s_F, C),   C = (D^-1 + (s_22 + rate_extra) A)^-1
//! ```
//!
//! where `A` is the `F x F` submatrix of `Theta_11^-1`, then writes
//! `theta[F, c] = beta`, `theta[Z, c] = 0`, `theta[c, c] = gamma + beta' A beta`.
//! `Theta_11^-1` comes from the maintained inverse via
//! `Sigma_11 - sigma_12 sigma_12' / sigma_22`, and the inverse is updated in
//! place with the matching block-inverse formula.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::random::{draw_gamma, draw_std_normal};
use crate::error::{Error, Result};

const CHOLESKY_JITTER: f64 = 1e-10;

/// `S = sum_i a_i a_i^T` over the rows of a score matrix.
#[derive(Debug, Clone)]
pub struct ScatterMatrix {
    pub s: DMatrix<f64>,
    pub n: usize,
}

impl ScatterMatrix {
    pub fn from_scores(scores: &DMatrix<f64>) -> Self {
        let s = scores.transpose() * scores;
        // exact symmetry
        let s = (&s + s.transpose()) * 0.5;
        Self { s, n: scores.nrows() }
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

/// Precision matrix of the `p * m` stacked scores with its maintained inverse.
#[derive(Debug, Clone)]
pub struct BlockPrecisionState {
    pub theta: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    p: usize,
    m: usize,
}

impl BlockPrecisionState {
    pub fn identity(p: usize, m: usize) -> Result<Self> {
        if p == 0 || m == 0 {
            return Err(Error::Domain(format!("need p >= 1 and m >= 1, got p={p}, m={m}")));
        }
        let d = p * m;
        Ok(Self {
            theta: DMatrix::identity(d, d),
            sigma: DMatrix::identity(d, d),
            p,
            m,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.p * self.m
    }

    pub fn node_of(&self, column: usize) -> usize {
        column / self.m
    }

    pub fn column_index(&self, node: usize, score: usize) -> usize {
        node * self.m + score
    }

    /// Squared Frobenius norm of block `(i, j)`.
    pub fn block_sq_norm(&self, i: usize, j: usize) -> f64 {
        block_sq_norm(&self.theta, self.m, i, j)
    }

    /// Recompute `Sigma = Theta^-1` from scratch.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        let chol = self
            .theta
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("precision matrix".into()))?;
        let inv = chol.inverse();
        self.sigma = (&inv + inv.transpose()) * 0.5;
        Ok(())
    }

    /// `max |Theta Sigma - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.theta * &self.sigma;
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        is_exactly_symmetric(&self.theta)
    }

    pub fn structural_zeros_hold(&self) -> bool {
        structural_zeros_hold(&self.theta, self.m)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.theta.clone().cholesky().is_some()
    }
}

pub fn block_sq_norm(theta: &DMatrix<f64>, m: usize, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for b in 0..m {
        for a in 0..m {
            let v = theta[(i * m + a, j * m + b)];
            acc += v * v;
        }
    }
    acc
}

pub fn is_exactly_symmetric(theta: &DMatrix<f64>) -> bool {
    let d = theta.nrows();
    theta.ncols() == d && (0..d).all(|j| (0..j).all(|i| theta[(i, j)] == theta[(j, i)]))
}

/// Off-diagonal entries inside every diagonal block are exactly zero.
pub fn structural_zeros_hold(theta: &DMatrix<f64>, m: usize) -> bool {
    let d = theta.nrows();
    (0..d / m).all(|node| {
        let base = node * m;
        (0..m).all(|a| (0..m).all(|b| a == b || theta[(base + a, base + b)] == 0.0))
    })
}

/// Index bookkeeping for one column update.
#[derive(Debug, Clone)]
pub struct ColumnPartition {
    pub column: usize,
    /// Positions in other nodes, ascending; length `m (p - 1)`.
    pub free: Vec<usize>,
    /// Other positions of the column's own node; length `m - 1`.
    pub zeros: Vec<usize>,
    /// `S[F, c]`.
    pub s12: DVector<f64>,
    /// `S[c, c]`.
    pub s22: f64,
}

pub fn partition_column(
    state: &BlockPrecisionState,
    scatter: &ScatterMatrix,
    column: usize,
) -> Result<ColumnPartition> {
    let d = state.dim();
    if column >= d {
        return Err(Error::Domain(format!("column {column} out of range for dimension {d}")));
    }
    if scatter.dim() != d {
        return Err(Error::Dimension(format!(
            "scatter matrix is {}x{}, precision is {d}x{d}",
            scatter.dim(),
            scatter.dim()
        )));
    }
    let node = state.node_of(column);
    let (free, zeros): (Vec<usize>, Vec<usize>) = (0..d)
        .filter(|&r| r != column)
        .partition(|&r| state.node_of(r) != node);
    let s12 = DVector::from_iterator(free.len(), free.iter().map(|&r| scatter.s[(r, column)]));
    Ok(ColumnPartition {
        column,
        free,
        zeros,
        s12,
        s22: scatter.s[(column, column)],
    })
}

/// Result of one column draw.
#[derive(Debug, Clone)]
pub struct ColumnDraw {
    pub beta: DVector<f64>,
    pub gamma: f64,
}

/// `A = (Theta_11^-1)[F, F]` from the maintained inverse.
pub fn reduced_inverse(state: &BlockPrecisionState, part: &ColumnPartition) -> DMatrix<f64> {
    let c = part.column;
    let sigma = &state.sigma;
    let scc = sigma[(c, c)];
    let k = part.free.len();
    DMatrix::from_fn(k, k, |a, b| {
        let (fa, fb) = (part.free[a], part.free[b]);
        sigma[(fa, fb)] - sigma[(fa, c)] * sigma[(fb, c)] / scc
    })
}

pub fn update_column<R: Rng + ?Sized>(
    state: &mut BlockPrecisionState,
    part: &ColumnPartition,
    d_prior: &[f64],
    rate_extra: f64,
    n: usize,
    rng: &mut R,
) -> Result<ColumnDraw> {
    let c = part.column;
    let k = part.free.len();
    let col_err = |reason: String| Error::ColumnUpdate { column: c, reason };
    if d_prior.len() != k {
        return Err(Error::Dimension(format!(
            "prior scale vector has length {}, expected {k}",
            d_prior.len()
        )));
    }
    if let Some(bad) = d_prior.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(col_err(format!("prior scale {bad} is not positive")));
    }
    if !(rate_extra.is_finite() && rate_extra >= 0.0) {
        return Err(col_err(format!("rate term {rate_extra} is negative")));
    }

    let rate_sum = part.s22 + rate_extra;
    let gamma = draw_gamma(n as f64 / 2.0 + 1.0, rate_sum / 2.0, rng).map_err(|e| col_err(e.to_string()))?;

    let beta = if k == 0 {
        DVector::zeros(0)
    } else {
        let a = reduced_inverse(state, part);
        let mut q = &a * rate_sum;
        for (i, dv) in d_prior.iter().enumerate() {
            q[(i, i)] += 1.0 / dv;
        }
        let chol = match q.clone().cholesky() {
            Some(ch) => ch,
            None => {
                for i in 0..k {
                    q[(i, i)] += CHOLESKY_JITTER;
                }
                q.cholesky()
                    .ok_or_else(|| col_err("conditional covariance is not positive definite".into()))?
            }
        };
        let mut mean = chol.solve(&part.s12);
        mean.neg_mut();
        let z = DVector::from_fn(k, |_, _| draw_std_normal(rng));
        let noise = chol
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| col_err("singular Cholesky factor".into()))?;
        mean + noise
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(col_err("non-finite coefficient draw".into()));
    }

    write_column(state, part, &beta, gamma);
    Ok(ColumnDraw { beta, gamma })
}

/// Write `(beta, gamma)` into column `c` and update the inverse to match.
fn write_column(state: &mut BlockPrecisionState, part: &ColumnPartition, beta: &DVector<f64>, gamma: f64) {
    let c = part.column;
    let d = state.dim();

    // t = Sigma theta_12 with theta_12 zero outside F.
    let mut t = vec![0.0; d];
    for (b, &fb) in part.free.iter().enumerate() {
        let coef = beta[b];
        if coef == 0.0 {
            continue;
        }
        let col = state.sigma.column(fb);
        for (r, tr) in t.iter_mut().enumerate() {
            *tr += col[r] * coef;
        }
    }
    let sig_c: Vec<f64> = state.sigma.column(c).iter().copied().collect();
    let scc = sig_c[c];
    let tc = t[c];
    // w = Theta_11^-1 theta_12, indexed over the full range (entry c unused).
    let w: Vec<f64> = (0..d).map(|r| t[r] - sig_c[r] * tc / scc).collect();

    let quad: f64 = part
        .free
        .iter()
        .enumerate()
        .map(|(b, &fb)| beta[b] * w[fb])
        .sum();

    for s in 0..d {
        if s == c {
            continue;
        }
        let (a_s, w_s) = (sig_c[s] / scc, w[s] / gamma);
        for r in 0..d {
            if r == c {
                continue;
            }
            state.sigma[(r, s)] += w[r] * w_s - sig_c[r] * a_s;
        }
    }
    for r in 0..d {
        if r != c {
            let v = -w[r] / gamma;
            state.sigma[(r, c)] = v;
            state.sigma[(c, r)] = v;
        }
    }
    state.sigma[(c, c)] = 1.0 / gamma;

    for (b, &fb) in part.free.iter().enumerate() {
        state.theta[(fb, c)] = beta[b];
        state.theta[(c, fb)] = beta[b];
    }
    for &z in &part.zeros {
        state.theta[(z, c)] = 0.0;
        state.theta[(c, z)] = 0.0;
    }
    state.theta[(c, c)] = gamma + quad;
}

/// Gaussian log-likelihood up to a constant: `log det Theta - tr(S Theta) / n`.
pub fn log_likelihood(theta: &DMatrix<f64>, s: &DMatrix<f64>, n: usize) -> Result<f64> {
    if theta.shape() != s.shape() || theta.nrows() != theta.ncols() {
        return Err(Error::Dimension(format!(
            "theta is {:?}, scatter is {:?}",
            theta.shape(),
            s.shape()
        )));
    }
    if n == 0 {
        return Err(Error::InsufficientData("log-likelihood needs n >= 1".into()));
    }
    let chol = theta
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("precision matrix".into()))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let trace: f64 = theta.component_mul(s).sum();
    Ok(log_det - trace / n as f64)
}
