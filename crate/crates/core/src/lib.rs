//! Bayesian regularization for functional graphical models.
//!
//! Multivariate functional data are reduced to truncated principal component
//! scores ([`fpca`]), and a block-sparse precision matrix over the scores is
//! sampled with either the Bayesian functional graphical lasso ([`fglasso`])
//! or the functional graphical horseshoe ([`fghs`]). Edges between nodes are
//! read from block Frobenius norms of credible-interval-thresholded
//! posterior means ([`posterior`]).

pub mod error;
pub mod fghs;
pub mod fglasso;
pub mod fpca;
pub mod graph;
pub mod mcmc;
pub mod metrics;
pub mod netgen;
pub mod posterior;
pub mod runner;

pub use error::{Error, Result};
pub use fghs::{fghs_init, fghs_run, HorseshoeState};
pub use fglasso::{fglasso_init, fglasso_run, FglassoState, LambdaPrior};
pub use fpca::{estimate_scores_dense, Design, FpcaBasis, FunctionalDataset, ScoreMatrix, Series};
pub use graph::{EdgeGraph, ExportFormat};
pub use mcmc::{BlockPrecisionState, RunConfig};
pub use netgen::{network1, network2, SamplingDesign, TruePrecision};
pub use posterior::{Chain, ChainMeta};
