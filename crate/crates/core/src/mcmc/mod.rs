//! Shared sampler machinery: variate generators, the column-wise block
//! update, and the generic chain driver used by both samplers.

pub mod random;
pub mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::{Chain, ChainMeta};
pub use random::{
    draw_gamma, draw_inverse_gamma, draw_inverse_gaussian, draw_mvn, draw_std_normal, rng_from_seed, substream,
    SamplerRng,
};
pub use state::{
    log_likelihood, partition_column, update_column, BlockPrecisionState, ColumnDraw, ColumnPartition,
    ScatterMatrix,
};

/// Chain length and storage settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Upper bound on stored sample bytes.
    pub storage_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 11_000,
            burn_in: 1_000,
            thin: 1,
            seed: 0,
            storage_budget: 2 << 30,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of samples kept after burn-in and thinning.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// One systematic-scan Gibbs sampler over a block precision matrix.
pub trait GibbsSampler {
    fn sweep(&mut self, rng: &mut SamplerRng) -> Result<SweepReport>;
    fn precision(&self) -> &BlockPrecisionState;
    /// Scalar recorded alongside each kept sample (lambda^2 or tau^2).
    fn trace_value(&self) -> f64;
    fn trace_name(&self) -> &'static str;
    fn sample_size(&self) -> usize;
}

/// Bookkeeping returned by one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub column_updates: usize,
    pub scale_updates: usize,
}

/// Run `config.iterations` sweeps and keep the thinned post-burn-in draws.
pub fn run_chain<S: GibbsSampler>(sampler: &mut S, config: &RunConfig, meta: ChainMeta) -> Result<Chain> {
    config.validate()?;
    let precision = sampler.precision();
    let (p, m) = (precision.p(), precision.m());
    let kept = config.kept();
    let requested = Chain::storage_bytes(p * m, kept);
    if requested > config.storage_budget {
        return Err(Error::StorageBudget {
            requested,
            budget: config.storage_budget,
        });
    }

    let mut chain = Chain::with_capacity(p, m, sampler.sample_size(), sampler.trace_name(), meta, kept);
    let mut rng = rng_from_seed(config.seed);
    for it in 0..config.iterations {
        sampler
            .sweep(&mut rng)
            .map_err(|e| Error::Sweep { sweep: it, source: Box::new(e) })?;
        if it >= config.burn_in && (it - config.burn_in) % config.thin == 0 {
            chain.push(&sampler.precision().theta, sampler.trace_value());
        }
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kept_counts() {
        let c = RunConfig { iterations: 1100, burn_in: 1000, thin: 1, ..Default::default() };
        assert_eq!(c.kept(), 100);
        let c = RunConfig { iterations: 2000, burn_in: 1000, thin: 2, ..Default::default() };
        assert_eq!(c.kept(), 500);
        assert_eq!(RunConfig::default().kept(), 10_000);
    }

    #[test]
    fn invalid_configs() {
        assert!(RunConfig { iterations: 10, burn_in: 10, ..Default::default() }.validate().is_err());
        assert!(RunConfig { thin: 0, ..Default::default() }.validate().is_err());
    }
}
