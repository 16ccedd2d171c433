//! Functional graphical horseshoe.
//!
//! `vec(Theta_ij) ~ N(0, lambda_ij^2 tau^2 I)` with half-Cauchy local and
//! global scales, diagonals `Exp(rate diag_rate / 2)`. The half-Cauchy scales
//! use the inverse-gamma auxiliary representation:
//!
//! ```text
//! lambda_ij^2 | nu_ij ~ InvGamma(1/2, 1/nu_ij),  nu_ij ~ InvGamma(1/2, 1)
//! tau^2 | zeta        ~ InvGamma(1/2, 1/zeta),   zeta  ~ InvGamma(1/2, 1)
//! ```

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fpca::ScoreMatrix;
use crate::mcmc::{
    draw_inverse_gamma, partition_column, run_chain, update_column, BlockPrecisionState, GibbsSampler, RunConfig,
    SamplerRng, ScatterMatrix, SweepReport,
};
use crate::posterior::{Chain, ChainMeta};

const SCALE_FLOOR: f64 = 1e-12;

/// Default rate parameter of the diagonal exponential priors.
pub const DEFAULT_DIAG_RATE: f64 = 1.0;

/// `lambda^2 ~ InvGamma((k + 1)/2, 1/nu + ||Theta_ij||^2 / (2 tau^2))` for a
/// block of `k` coefficients. `k = 0` is the prior-only kernel.
pub fn draw_local_scale(
    block_sq_norm: f64,
    block_entries: usize,
    nu: f64,
    tau2: f64,
    rng: &mut SamplerRng,
) -> Result<f64> {
    let shape = (block_entries as f64 + 1.0) / 2.0;
    let scale = 1.0 / nu + block_sq_norm / (2.0 * tau2);
    Ok(draw_inverse_gamma(shape, scale, rng)?.max(SCALE_FLOOR))
}

/// `nu ~ InvGamma(1, 1 + 1/lambda^2)`.
pub fn draw_local_aux(lambda2: f64, rng: &mut SamplerRng) -> Result<f64> {
    draw_inverse_gamma(1.0, 1.0 + 1.0 / lambda2, rng)
}

/// Shape and scale of the `tau^2` full conditional:
/// `InvGamma((m^2 p (p-1) + 2)/4, 1/zeta + sum_{i<j} ||Theta_ij||^2 / (2 lambda_ij^2))`.
pub fn global_conditional(p: usize, m: usize, zeta: f64, weighted_sq_sum: f64) -> (f64, f64) {
    let (pf, mf) = (p as f64, m as f64);
    let shape = (mf * mf * pf * (pf - 1.0) + 2.0) / 4.0;
    (shape, 1.0 / zeta + weighted_sq_sum)
}

/// Shape of the local-scale conditional for blocks of size `m x m`.
pub fn local_shape(m: usize) -> f64 {
    ((m * m) as f64 + 1.0) / 2.0
}

#[derive(Debug, Clone)]
pub struct HorseshoeState {
    pub precision: BlockPrecisionState,
    /// Local scales `lambda_ij^2`; diagonal unused and kept at 1.
    pub local: DMatrix<f64>,
    /// Auxiliaries `nu_ij`; diagonal unused and kept at 1.
    pub nu: DMatrix<f64>,
    /// Global scale `tau^2`.
    pub global: f64,
    pub zeta: f64,
    pub diag_rate: f64,
    pub scatter: ScatterMatrix,
}

pub fn fghs_init(scores: &ScoreMatrix) -> Result<HorseshoeState> {
    fghs_init_with_diag_rate(scores, DEFAULT_DIAG_RATE)
}

pub fn fghs_init_with_diag_rate(scores: &ScoreMatrix, diag_rate: f64) -> Result<HorseshoeState> {
    if scores.n_subjects() == 0 {
        return Err(Error::InsufficientData("score matrix has no rows".into()));
    }
    if !(diag_rate.is_finite() && diag_rate > 0.0) {
        return Err(Error::Domain(format!("diagonal rate must be positive, got {diag_rate}")));
    }
    let (p, m) = (scores.n_nodes(), scores.truncation());
    Ok(HorseshoeState {
        precision: BlockPrecisionState::identity(p, m)?,
        local: DMatrix::from_element(p, p, 1.0),
        nu: DMatrix::from_element(p, p, 1.0),
        global: 1.0,
        zeta: 1.0,
        diag_rate,
        scatter: ScatterMatrix::from_scores(scores.data()),
    })
}

impl HorseshoeState {
    pub fn sweep(&mut self, rng: &mut SamplerRng) -> Result<SweepReport> {
        let mut report = SweepReport::default();
        let d = self.precision.dim();
        let n = self.scatter.n;
        for c in 0..d {
            let part = partition_column(&self.precision, &self.scatter, c)?;
            let node = self.precision.node_of(c);
            let d_prior: Vec<f64> = part
                .free
                .iter()
                .map(|&r| self.global * self.local[(node, self.precision.node_of(r))])
                .collect();
            update_column(&mut self.precision, &part, &d_prior, self.diag_rate, n, rng)?;
            report.column_updates += 1;
        }
        self.precision.refresh_inverse()?;

        let (p, m) = (self.precision.p(), self.precision.m());
        let mut weighted = 0.0;
        for j in 0..p {
            for i in 0..j {
                let sq = self.precision.block_sq_norm(i, j);
                let l2 = draw_local_scale(sq, m * m, self.nu[(i, j)], self.global, rng)?;
                let nu = draw_local_aux(l2, rng)?;
                self.local[(i, j)] = l2;
                self.local[(j, i)] = l2;
                self.nu[(i, j)] = nu;
                self.nu[(j, i)] = nu;
                weighted += sq / (2.0 * l2);
                report.scale_updates += 1;
            }
        }
        let (shape, scale) = global_conditional(p, m, self.zeta, weighted);
        self.global = draw_inverse_gamma(shape, scale, rng)?.max(SCALE_FLOOR);
        self.zeta = draw_inverse_gamma(1.0, 1.0 + 1.0 / self.global, rng)?;
        Ok(report)
    }
}

impl GibbsSampler for HorseshoeState {
    fn sweep(&mut self, rng: &mut SamplerRng) -> Result<SweepReport> {
        HorseshoeState::sweep(self, rng)
    }

    fn precision(&self) -> &BlockPrecisionState {
        &self.precision
    }

    fn trace_value(&self) -> f64 {
        self.global
    }

    fn trace_name(&self) -> &'static str {
        "tau2"
    }

    fn sample_size(&self) -> usize {
        self.scatter.n
    }
}

pub fn fghs_run(scores: &ScoreMatrix, config: &RunConfig) -> Result<Chain> {
    fghs_run_with_diag_rate(scores, DEFAULT_DIAG_RATE, config)
}

pub fn fghs_run_with_diag_rate(scores: &ScoreMatrix, diag_rate: f64, config: &RunConfig) -> Result<Chain> {
    let mut state = fghs_init_with_diag_rate(scores, diag_rate)?;
    let meta = ChainMeta::new("fghs", config, format!("horseshoe(diag_rate={diag_rate})"));
    run_chain(&mut state, config, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{draw_std_normal, rng_from_seed};

    fn random_scores(n: usize, p: usize, m: usize, seed: u64) -> ScoreMatrix {
        let mut rng = rng_from_seed(seed);
        let data = DMatrix::from_fn(n, p * m, |_, _| draw_std_normal(&mut rng));
        ScoreMatrix::new(data, m).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_valid() {
        let scores = random_scores(15, 10, 5, 2);
        let a = fghs_init(&scores).unwrap();
        let b = fghs_init(&scores).unwrap();
        assert_eq!(a.local.shape(), (10, 10));
        assert_eq!(a.precision.theta, b.precision.theta);
        assert_eq!(a.global, 1.0);
        assert_eq!(a.zeta, 1.0);
        assert!(a.local.iter().all(|&v| v == 1.0));
        assert!(a.precision.is_positive_definite());
    }

    #[test]
    fn conditional_shapes() {
        assert_eq!(global_conditional(10, 5, 1.0, 0.0).0, 563.0);
        assert_eq!(local_shape(5), 13.0);
    }

    #[test]
    fn zero_block_local_scale_is_inverse_gamma_13_1() {
        // InvGamma(13, 1) has mean 1/12 and variance 1/(144 * 11).
        let mut rng = rng_from_seed(4);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| draw_local_scale(0.0, 25, 1.0, 1.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0 / 12.0).abs() < 0.001, "mean {mean}");
        assert!((var - 1.0 / (144.0 * 11.0)).abs() / (1.0 / (144.0 * 11.0)) < 0.03, "var {var}");
    }

    #[test]
    fn run_stores_valid_samples() {
        let scores = random_scores(50, 3, 2, 5);
        let config = RunConfig { iterations: 400, burn_in: 100, thin: 2, seed: 7, ..Default::default() };
        let chain = fghs_run(&scores, &config).unwrap();
        assert_eq!(chain.len(), 150);
        assert!(chain.trace().iter().all(|t| *t > 0.0));
        for k in 0..chain.len() {
            let theta = chain.sample(k);
            assert!(crate::mcmc::state::is_exactly_symmetric(&theta));
            assert!(crate::mcmc::state::structural_zeros_hold(&theta, 2));
            assert!(theta.cholesky().is_some());
        }
    }

    #[test]
    fn thinned_run_count() {
        let scores = random_scores(20, 2, 1, 5);
        let config = RunConfig { iterations: 2000, burn_in: 1000, thin: 2, seed: 1, ..Default::default() };
        assert_eq!(fghs_run(&scores, &config).unwrap().len(), 500);
    }

    #[test]
    fn rejects_bad_diag_rate() {
        let scores = random_scores(5, 2, 1, 5);
        assert!(fghs_init_with_diag_rate(&scores, 0.0).is_err());
    }
}
