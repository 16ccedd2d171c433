//! Experiment configuration, read from TOML. Command-line flags are applied
//! on top of the file with [`ExperimentConfig::apply`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fghs::DEFAULT_DIAG_RATE;
use crate::fglasso::LambdaPrior;
use crate::fpca::Design;
use crate::mcmc::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FglassoFixed,
    FglassoHyper,
    Fghs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FglassoFixed => "fglasso-fixed",
            Method::FglassoHyper => "fglasso-hyper",
            Method::Fghs => "fghs",
        }
    }

    /// Credible level used for selection when none is configured.
    pub fn default_level(self) -> f64 {
        match self {
            Method::Fghs => 0.5,
            Method::FglassoHyper | Method::FglassoFixed => 0.9,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fglasso-fixed" => Ok(Method::FglassoFixed),
            "fglasso-hyper" => Ok(Method::FglassoHyper),
            "fghs" => Ok(Method::Fghs),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Network1,
    Network2,
}

/// Where the sampler's scores come from for simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    /// Render noisy curves and estimate scores by FPCA.
    #[default]
    Fpca,
    /// Use the simulated Gaussian scores directly.
    Latent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Simulate {
        network: NetworkKind,
        p: usize,
        n: usize,
        #[serde(default = "dense")]
        design: Design,
        #[serde(default)]
        scores: ScoreSource,
    },
    Ingest {
        path: PathBuf,
        #[serde(default)]
        rescale: bool,
    },
}

fn dense() -> Design {
    Design::Dense
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpcaConfig {
    pub var_threshold: f64,
}

impl Default for FpcaConfig {
    fn default() -> Self {
        Self { var_threshold: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Required for `fglasso-fixed`.
    pub lambda: Option<f64>,
    /// `Gamma(shape, rate)` hyperprior on `lambda^2` for `fglasso-hyper`.
    pub shape: f64,
    pub rate: f64,
    /// Diagonal exponential rate for `fghs`.
    pub diag_rate: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { lambda: None, shape: 1.0, rate: 0.01, diag_rate: DEFAULT_DIAG_RATE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Credible level; the method default when absent.
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub save_chain: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("fgm-output"), save_chain: true }
    }
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub data: DataSource,
    #[serde(default)]
    pub fpca: FpcaConfig,
    #[serde(default)]
    pub mcmc: RunConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads for replications; falls back to `FGM_WORKERS`.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub replications: Option<usize>,
    pub level: Option<f64>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.seed {
            self.mcmc.seed = v;
        }
        if let Some(v) = o.iterations {
            self.mcmc.iterations = v;
        }
        if let Some(v) = o.burn_in {
            self.mcmc.burn_in = v;
        }
        if let Some(v) = o.thin {
            self.mcmc.thin = v;
        }
        if let Some(v) = o.replications {
            self.replications = v;
        }
        if let Some(v) = o.level {
            self.selection.level = Some(v);
        }
        if let Some(v) = &o.output {
            self.output.dir = v.clone();
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
        self.validate()
    }

    pub fn level(&self) -> f64 {
        self.selection.level.unwrap_or_else(|| self.method.default_level())
    }

    pub fn lambda_prior(&self) -> Result<LambdaPrior> {
        match self.method {
            Method::FglassoFixed => self
                .prior
                .lambda
                .map(|lambda| LambdaPrior::Fixed { lambda })
                .ok_or_else(|| Error::Config("method fglasso-fixed needs prior.lambda".into())),
            _ => Ok(LambdaPrior::Hyper { shape: self.prior.shape, rate: self.prior.rate }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mcmc.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let level = self.level();
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!("selection level must lie in (0, 1), got {level}")));
        }
        let v = self.fpca.var_threshold;
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Config(format!("fpca.var_threshold must lie in (0, 1], got {v}")));
        }
        if let DataSource::Simulate { p, n, .. } = self.data {
            if p == 0 || n == 0 {
                return Err(Error::Config("simulated data needs p >= 1 and n >= 1".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.method == Method::FglassoFixed {
            self.lambda_prior()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
method = "fghs"
replications = 2

[data]
source = "simulate"
network = "network1"
p = 10
n = 100

[mcmc]
iterations = 300
burn_in = 100
seed = 5

[output]
dir = "out"
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.method, Method::Fghs);
        assert_eq!(cfg.mcmc.thin, 1);
        assert_eq!(cfg.fpca.var_threshold, 0.95);
        assert_eq!(cfg.level(), 0.5);
        assert!(cfg.output.save_chain);
        assert_eq!(
            cfg.data,
            DataSource::Simulate {
                network: NetworkKind::Network1,
                p: 10,
                n: 100,
                design: Design::Dense,
                scores: ScoreSource::Fpca
            }
        );
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        cfg.apply(&Overrides { seed: Some(9), level: Some(0.8), replications: Some(3), ..Default::default() })
            .unwrap();
        assert_eq!((cfg.mcmc.seed, cfg.level(), cfg.replications), (9, 0.8, 3));
        assert!(cfg.apply(&Overrides { level: Some(1.5), ..Default::default() }).is_err());
    }

    #[test]
    fn rejects_invalid() {
        assert!(ExperimentConfig::from_toml(&BASIC.replace("replications = 2", "replications = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("burn_in = 100", "burn_in = 300")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("fghs", "lasso")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("fghs", "fglasso-fixed")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("seed = 5", "seed = 5\nbogus = 1")).is_err());
        let fixed = BASIC.replace("fghs", "fglasso-fixed") + "\n[prior]\nlambda = 2.0\n";
        assert!(matches!(
            ExperimentConfig::from_toml(&fixed).unwrap().lambda_prior().unwrap(),
            LambdaPrior::Fixed { lambda } if lambda == 2.0
        ));
    }
}
