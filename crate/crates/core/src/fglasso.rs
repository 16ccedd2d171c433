//! Bayesian functional graphical lasso.
//!
//! Off-diagonal blocks carry a group-lasso prior written as a gamma scale
//! mixture of normals, `vec(Theta_ij) | tau_ij^2 ~ N(0, tau_ij^2 I)` with
//! `tau_ij^2 ~ Gamma((m^2 + 1)/2, rate lambda^2 / 2)`; diagonals carry
//! `Exp(rate lambda^2 / 2)`. `lambda` is either fixed or given a
//! `Gamma(s, r)` hyperprior on `lambda^2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpca::ScoreMatrix;
use crate::mcmc::{
    draw_gamma, draw_inverse_gaussian, partition_column, run_chain, update_column, BlockPrecisionState,
    GibbsSampler, RunConfig, SamplerRng, ScatterMatrix, SweepReport,
};
use crate::posterior::{Chain, ChainMeta};

/// Inverse-Gaussian mean used when a block is numerically zero.
const DEGENERATE_BLOCK_MEAN: f64 = 1e6;
const DEGENERATE_BLOCK_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaPrior {
    /// Fixed regularization `lambda` (the sampler uses `lambda^2`).
    Fixed { lambda: f64 },
    /// `lambda^2 ~ Gamma(shape, rate)`.
    Hyper { shape: f64, rate: f64 },
}

impl LambdaPrior {
    /// The `Gamma(1, 0.01)` hyperprior.
    pub fn default_hyper() -> Self {
        LambdaPrior::Hyper { shape: 1.0, rate: 0.01 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LambdaPrior::Fixed { lambda } => lambda.is_finite() && lambda > 0.0,
            LambdaPrior::Hyper { shape, rate } => shape.is_finite() && shape > 0.0 && rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid lambda prior {self:?}")))
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            LambdaPrior::Fixed { lambda } => format!("fixed(lambda={lambda})"),
            LambdaPrior::Hyper { shape, rate } => format!("gamma(shape={shape}, rate={rate})"),
        }
    }
}

/// Shape and rate of the `lambda^2` full conditional under a `Gamma(s, r)` hyperprior.
pub fn lambda2_conditional(p: usize, m: usize, s: f64, r: f64, diag_sum: f64, tau2_sum: f64) -> (f64, f64) {
    let (pf, mf) = (p as f64, m as f64);
    let shape = s + pf * mf + pf * (pf - 1.0) * (mf * mf + 1.0) / 4.0;
    let rate = r + (diag_sum + tau2_sum) / 2.0;
    (shape, rate)
}

/// Draw `tau^2` given a block's squared Frobenius norm:
/// `1 / tau^2 ~ InverseGaussian(sqrt(lambda^2 / ||Theta_ij||^2), lambda^2)`.
pub fn draw_latent_scale(block_sq_norm: f64, lambda2: f64, rng: &mut SamplerRng) -> Result<f64> {
    let norm = block_sq_norm.sqrt();
    let mean = if norm < DEGENERATE_BLOCK_NORM {
        DEGENERATE_BLOCK_MEAN
    } else {
        lambda2.sqrt() / norm
    };
    let inv = draw_inverse_gaussian(mean, lambda2, rng)?;
    Ok(1.0 / inv)
}

#[derive(Debug, Clone)]
pub struct FglassoState {
    pub precision: BlockPrecisionState,
    /// Latent block scales `tau_ij^2`; zero diagonal.
    pub tau2: DMatrix<f64>,
    pub lambda2: f64,
    pub prior: LambdaPrior,
    pub scatter: ScatterMatrix,
}

pub fn fglasso_init(scores: &ScoreMatrix, prior: LambdaPrior) -> Result<FglassoState> {
    prior.validate()?;
    if scores.n_subjects() == 0 {
        return Err(Error::InsufficientData("score matrix has no rows".into()));
    }
    let (p, m) = (scores.n_nodes(), scores.truncation());
    let precision = BlockPrecisionState::identity(p, m)?;
    let mut tau2 = DMatrix::from_element(p, p, 1.0);
    tau2.fill_diagonal(0.0);
    let lambda2 = match prior {
        LambdaPrior::Fixed { lambda } => lambda * lambda,
        LambdaPrior::Hyper { .. } => 1.0,
    };
    Ok(FglassoState {
        precision,
        tau2,
        lambda2,
        prior,
        scatter: ScatterMatrix::from_scores(scores.data()),
    })
}

impl FglassoState {
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
                .map(|&r| self.tau2[(node, self.precision.node_of(r))])
                .collect();
            update_column(&mut self.precision, &part, &d_prior, self.lambda2, n, rng)?;
            report.column_updates += 1;
        }
        self.precision.refresh_inverse()?;

        let p = self.precision.p();
        let mut tau2_sum = 0.0;
        for j in 0..p {
            for i in 0..j {
                let t = draw_latent_scale(self.precision.block_sq_norm(i, j), self.lambda2, rng)?;
                self.tau2[(i, j)] = t;
                self.tau2[(j, i)] = t;
                tau2_sum += t;
                report.scale_updates += 1;
            }
        }

        if let LambdaPrior::Hyper { shape, rate } = self.prior {
            let diag_sum = self.precision.theta.diagonal().sum();
            let (a, b) = lambda2_conditional(p, self.precision.m(), shape, rate, diag_sum, tau2_sum);
            self.lambda2 = draw_gamma(a, b, rng)?;
        }
        Ok(report)
    }
}

impl GibbsSampler for FglassoState {
    fn sweep(&mut self, rng: &mut SamplerRng) -> Result<SweepReport> {
        FglassoState::sweep(self, rng)
    }

    fn precision(&self) -> &BlockPrecisionState {
        &self.precision
    }

    fn trace_value(&self) -> f64 {
        self.lambda2
    }

    fn trace_name(&self) -> &'static str {
        "lambda2"
    }

    fn sample_size(&self) -> usize {
        self.scatter.n
    }
}

pub fn fglasso_run(scores: &ScoreMatrix, prior: LambdaPrior, config: &RunConfig) -> Result<Chain> {
    let mut state = fglasso_init(scores, prior)?;
    let method = match prior {
        LambdaPrior::Fixed { .. } => "fglasso-fixed",
        LambdaPrior::Hyper { .. } => "fglasso-hyper",
    };
    let meta = ChainMeta::new(method, config, prior.describe());
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
    fn init_state() {
        let scores = random_scores(20, 10, 5, 1);
        let state = fglasso_init(&scores, LambdaPrior::default_hyper()).unwrap();
        assert_eq!(state.precision.theta.shape(), (50, 50));
        assert!(state.precision.is_positive_definite());
        assert_eq!(state.tau2[(0, 0)], 0.0);
        assert_eq!(state.tau2[(0, 1)], 1.0);
        assert_eq!(state.scatter.n, 20);
    }

    #[test]
    fn init_rejects_bad_prior() {
        let scores = random_scores(5, 2, 1, 1);
        assert!(fglasso_init(&scores, LambdaPrior::Fixed { lambda: 0.0 }).is_err());
        assert!(fglasso_init(&scores, LambdaPrior::Hyper { shape: 1.0, rate: -1.0 }).is_err());
    }

    #[test]
    fn lambda2_shape_matches_hand_evaluation() {
        let (shape, rate) = lambda2_conditional(10, 5, 1.0, 0.01, 4.0, 6.0);
        assert_eq!(shape, 636.0);
        assert!((rate - 5.01).abs() < 1e-12);
    }

    #[test]
    fn latent_scale_inverse_mean() {
        let mut rng = rng_from_seed(21);
        let n = 1_000_000;
        let total: f64 = (0..n).map(|_| 1.0 / draw_latent_scale(1.0, 1.0, &mut rng).unwrap()).sum();
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn degenerate_block_is_guarded() {
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            let t = draw_latent_scale(0.0, 4.0, &mut rng).unwrap();
            assert!(t.is_finite() && t > 0.0);
        }
    }

    #[test]
    fn sweep_bookkeeping_p2_m1() {
        let scores = random_scores(30, 2, 1, 4);
        let mut state = fglasso_init(&scores, LambdaPrior::Fixed { lambda: 1.0 }).unwrap();
        let report = state.sweep(&mut rng_from_seed(1)).unwrap();
        assert_eq!(report, SweepReport { column_updates: 2, scale_updates: 1 });
    }

    #[test]
    fn hyper_run_keeps_lambda_positive() {
        let scores = random_scores(40, 4, 2, 7);
        let config = RunConfig { iterations: 300, burn_in: 100, thin: 1, seed: 3, ..Default::default() };
        let chain = fglasso_run(&scores, LambdaPrior::default_hyper(), &config).unwrap();
        assert_eq!(chain.len(), 200);
        assert!(chain.trace().iter().all(|v| v.is_finite() && *v > 0.0));
        for k in 0..chain.len() {
            let theta = chain.sample(k);
            assert!(crate::mcmc::state::is_exactly_symmetric(&theta));
            assert!(crate::mcmc::state::structural_zeros_hold(&theta, 2));
            assert!(theta.cholesky().is_some());
        }
    }

    #[test]
    fn run_is_deterministic() {
        let scores = random_scores(25, 3, 2, 8);
        let config = RunConfig { iterations: 60, burn_in: 10, thin: 5, seed: 99, ..Default::default() };
        let a = fglasso_run(&scores, LambdaPrior::Fixed { lambda: 2.0 }, &config).unwrap();
        let b = fglasso_run(&scores, LambdaPrior::Fixed { lambda: 2.0 }, &config).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a.raw_samples(), b.raw_samples());
    }

    #[test]
    fn storage_budget_is_enforced() {
        let scores = random_scores(10, 2, 2, 1);
        let config = RunConfig { iterations: 200, burn_in: 0, thin: 1, seed: 1, storage_budget: 1000 };
        assert!(matches!(
            fglasso_run(&scores, LambdaPrior::Fixed { lambda: 1.0 }, &config),
            Err(Error::StorageBudget { .. })
        ));
    }
}
