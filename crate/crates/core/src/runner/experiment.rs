//! Replicated experiments: data, scores, sampler, selection and metrics for
//! each replication, followed by a mean / standard-error summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fghs::fghs_run_with_diag_rate;
use crate::fglasso::fglasso_run;
use crate::fpca::{estimate_scores_dense, ScoreMatrix};
use crate::graph::{export_graph, EdgeGraph, ExportFormat};
use crate::metrics::{confusion, grouped_mse};
use crate::netgen::{network1, network2, render_functions, simulate_scores, SamplingDesign, TruePrecision, FOURIER_TERMS};
use crate::posterior::{credible_intervals, posterior_mean, threshold_with, Chain};
use crate::runner::archive::save_chain;
use crate::runner::config::{DataSource, ExperimentConfig, Method, NetworkKind, ScoreSource};
use crate::runner::io::{ingest_csv, intervals_to_csv, matrix_to_csv};
use crate::mcmc::RunConfig;

/// Environment variable read for the worker count when the config has none.
pub const WORKERS_ENV: &str = "FGM_WORKERS";

pub fn worker_count(configured: Option<usize>) -> usize {
    configured
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn simulate_truth(network: NetworkKind, p: usize) -> Result<TruePrecision> {
    match network {
        NetworkKind::Network1 => network1(p, FOURIER_TERMS),
        NetworkKind::Network2 => network2(p, FOURIER_TERMS),
    }
}

/// Scores for one replication, plus the truth when the data are simulated.
pub fn prepare_scores(config: &ExperimentConfig, seed: u64) -> Result<(ScoreMatrix, Option<TruePrecision>)> {
    match &config.data {
        DataSource::Simulate { network, p, n, design, scores } => {
            let truth = simulate_truth(*network, *p)?;
            let delta = simulate_scores(truth.theta(), *n, seed)?;
            let matrix = match scores {
                ScoreSource::Latent => ScoreMatrix::new(delta, FOURIER_TERMS)?,
                ScoreSource::Fpca => {
                    let data = render_functions(&delta, &SamplingDesign::for_kind(*design), seed)?;
                    estimate_scores_dense(&data, config.fpca.var_threshold)?.0
                }
            };
            Ok((matrix, Some(truth)))
        }
        DataSource::Ingest { path, rescale } => {
            let data = ingest_csv(path, *rescale)?;
            Ok((estimate_scores_dense(&data, config.fpca.var_threshold)?.0, None))
        }
    }
}

pub fn run_method(config: &ExperimentConfig, scores: &ScoreMatrix, run: &RunConfig) -> Result<Chain> {
    match config.method {
        Method::Fghs => fghs_run_with_diag_rate(scores, config.prior.diag_rate, run),
        Method::FglassoFixed | Method::FglassoHyper => fglasso_run(scores, config.lambda_prior()?, run),
    }
}

/// Threshold `chain` at `level` and write `edges.csv`, `edges.dot`,
/// `theta_hat.csv` and `intervals.csv` into `dir`.
pub fn write_selection(dir: &Path, chain: &Chain, level: f64) -> Result<(DMatrix<f64>, EdgeGraph)> {
    let mean = posterior_mean(chain)?;
    let ci = credible_intervals(chain, level)?;
    let (theta_hat, graph) = threshold_with(&mean, &ci, chain.m())?;
    write(dir.join("edges.csv"), export_graph(&graph, ExportFormat::Csv))?;
    write(dir.join("edges.dot"), export_graph(&graph, ExportFormat::Dot))?;
    write(dir.join("theta_hat.csv"), matrix_to_csv(&theta_hat))?;
    write(dir.join("intervals.csv"), intervals_to_csv(&mean, &ci))?;
    Ok((theta_hat, graph))
}

fn write(path: PathBuf, contents: String) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn trace_csv(chain: &Chain) -> String {
    let mut out = format!("sample,{}\n", chain.trace_name());
    for (k, v) in chain.trace().iter().enumerate() {
        let _ = writeln!(out, "{},{v}", k + 1);
    }
    out
}

/// Ordered `(name, value)` metrics for one replication.
pub type MetricRow = Vec<(String, f64)>;

fn metrics_csv(rows: &MetricRow) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in rows {
        let _ = writeln!(out, "{name},{v}");
    }
    out
}

pub fn replication_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("rep_{index:03}"))
}

fn run_replication(config: &ExperimentConfig, index: usize) -> Result<MetricRow> {
    let seed = config.mcmc.seed.wrapping_add(index as u64);
    let dir = replication_dir(&config.output.dir, index);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let (scores, truth) = prepare_scores(config, seed)?;
    let run = RunConfig { seed, ..config.mcmc };
    let chain = run_method(config, &scores, &run)?;
    if config.output.save_chain {
        save_chain(&chain, &dir.join("chain.fgmc"))?;
    }
    write(dir.join("trace.csv"), trace_csv(&chain))?;
    let (theta_hat, graph) = write_selection(&dir, &chain, config.level())?;

    let mut rows: MetricRow = vec![
        ("truncation".into(), scores.truncation() as f64),
        ("edges".into(), graph.edges().len() as f64),
    ];
    if let Some(truth) = truth {
        let c = confusion(&graph, &truth.true_edges())?;
        rows.extend([
            ("tpr".into(), c.tpr()),
            ("fpr".into(), c.fpr()),
            ("fnr".into(), c.fnr()),
            ("err".into(), c.err()),
            ("f1".into(), c.f1()),
            ("sparsity".into(), c.sparsity()),
        ]);
        // Elementwise error is only defined when the score dimension matches the truth.
        if scores.truncation() == truth.m() {
            let mse = grouped_mse(&theta_hat, truth.theta(), truth.m())?;
            for (value, err, _) in &mse.groups {
                rows.push((format!("mse_{value}"), *err));
            }
            rows.push(("mse_overall".into(), mse.overall));
        }
    }
    write(dir.join("metrics.csv"), metrics_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; 0 for a single value.
    pub se: f64,
    pub count: usize,
}

pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut names: Vec<&str> = Vec::new();
    for row in rows {
        for (name, _) in row {
            if !names.contains(&name.as_str()) {
                names.push(name);
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let vals: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
                .collect();
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let se = if vals.len() > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            } else {
                0.0
            };
            SummaryRow { metric: name.to_string(), mean, se, count: vals.len() }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("metric,mean,se,count\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.metric, r.mean, r.se, r.count);
    }
    out
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub replications: Vec<Result<MetricRow, String>>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.replications.iter().filter(|r| r.is_err()).count()
    }
}

/// Run every replication (replication `r` uses seed `mcmc.seed + r`) on a
/// pool of [`worker_count`] threads. A failing replication is recorded in its
/// `error.txt` and in the report; the others still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if let DataSource::Simulate { design, scores: ScoreSource::Fpca, .. } = config.data {
        if design == crate::fpca::Design::Sparse {
            return Err(Error::UnsupportedDesign);
        }
    }
    let root = &config.output.dir;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write(root.join("config.toml"), config.to_toml())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config.workers))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<MetricRow, String>> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|r| {
                run_replication(config, r).map_err(|e| {
                    let msg = e.to_string();
                    let dir = replication_dir(root, r);
                    let _ = std::fs::create_dir_all(&dir);
                    let _ = std::fs::write(dir.join("error.txt"), format!("{msg}\n"));
                    msg
                })
            })
            .collect()
    });

    let ok: Vec<MetricRow> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    let summary = summarize(&ok);
    write(root.join("summary.csv"), summary_csv(&summary))?;
    Ok(ExperimentReport { replications: results, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn summary_uses_sample_sd_over_sqrt_r() {
        let rows: Vec<MetricRow> = [0.5, 0.7, 0.9].iter().map(|&v| vec![("f1".to_string(), v)]).collect();
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_relative_eq!(s[0].mean, 0.7, epsilon = 1e-12);
        assert_relative_eq!(s[0].se, 0.2 / 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(summarize(&rows[..1])[0].se, 0.0);
    }

    #[test]
    fn worker_count_prefers_config() {
        assert_eq!(worker_count(Some(3)), 3);
        assert!(worker_count(None) >= 1);
    }

    fn config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
method = "fghs"
replications = 2
workers = 2
{extra}
[data]
source = "simulate"
network = "network1"
p = 4
n = 40

[mcmc]
iterations = 120
burn_in = 20
seed = 11

[output]
dir = "{}"
"#,
            dir.display()
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn replications_write_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "");
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.failures(), 0);
        for r in 0..2 {
            let rep = replication_dir(dir.path(), r);
            for f in ["chain.fgmc", "edges.csv", "edges.dot", "theta_hat.csv", "intervals.csv", "metrics.csv", "trace.csv"] {
                assert!(rep.join(f).exists(), "{f}");
            }
        }
        let f1 = report.summary.iter().find(|s| s.metric == "f1").unwrap();
        assert_eq!(f1.count, 2);
        assert!(dir.path().join("summary.csv").exists());
    }

    #[test]
    fn sparse_design_estimation_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), "");
        if let DataSource::Simulate { design, .. } = &mut cfg.data {
            *design = crate::fpca::Design::Sparse;
        }
        assert!(matches!(run_experiment(&cfg), Err(Error::UnsupportedDesign)));
    }

    #[test]
    fn failing_replications_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), "");
        cfg.data = DataSource::Ingest { path: dir.path().join("missing.csv"), rescale: false };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.failures(), 2);
        assert!(replication_dir(dir.path(), 0).join("error.txt").exists());
    }
}
