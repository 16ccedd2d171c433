use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bayes_fgm::fpca::Design;
use bayes_fgm::graph::{compare_graphs, export_comparison, export_graph, ExportFormat};
use bayes_fgm::metrics::confusion;
use bayes_fgm::netgen::{render_functions, simulate_scores, SamplingDesign};
use bayes_fgm::runner::experiment::{simulate_truth, write_selection};
use bayes_fgm::runner::io::{dataset_to_csv, matrix_to_csv};
use bayes_fgm::runner::{
    benchmark, benchmark_csv, load_chain, read_edges_csv, run_experiment, BenchmarkSpec, ExperimentConfig, Method,
    NetworkKind, Overrides,
};
use bayes_fgm::{Error, Result};

#[derive(Parser)]
#[command(name = "bayes-fgm", version, about = "Bayesian functional graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate functional data from network 1 or 2 and write it as CSV.
    Simulate(SimulateArgs),
    /// Run a configured experiment (all replications).
    Fit(FitArgs),
    /// Threshold a saved chain at a credible level.
    Threshold(ThresholdArgs),
    /// Score an estimated edge list against a true one.
    Metrics(MetricsArgs),
    /// Time full sampler sweeps for several graph sizes.
    Benchmark(BenchmarkArgs),
    /// Join two edge lists and flag shared and exclusive edges.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "network1", value_parser = parse_network)]
    network: NetworkKind,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "dense", value_parser = parse_design)]
    design: Design,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observation CSV (`subject_id,node_id,time,value`).
    #[arg(long)]
    out: PathBuf,
    /// Optional true edge list.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Optional matrix of the latent scores.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// TOML experiment file; flags below override it.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Node count; defaults to the largest label in either file.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    p: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value = "fglasso-hyper")]
    method: Method,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_network(s: &str) -> std::result::Result<NetworkKind, String> {
    match s {
        "network1" => Ok(NetworkKind::Network1),
        "network2" => Ok(NetworkKind::Network2),
        _ => Err(format!("unknown network {s:?} (network1 | network2)")),
    }
}

fn parse_design(s: &str) -> std::result::Result<Design, String> {
    match s {
        "dense" => Ok(Design::Dense),
        "sparse" => Ok(Design::Sparse),
        _ => Err(format!("unknown design {s:?} (dense | sparse)")),
    }
}

fn write(path: &Path, contents: String) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn emit(out: Option<&Path>, contents: String) -> Result<()> {
    match out {
        Some(path) => write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let truth = simulate_truth(a.network, a.p)?;
    let delta = simulate_scores(truth.theta(), a.n, a.seed)?;
    let data = render_functions(&delta, &SamplingDesign::for_kind(a.design), a.seed)?;
    write(&a.out, dataset_to_csv(&data))?;
    if let Some(path) = a.truth {
        write(&path, export_graph(&truth.true_edges(), ExportFormat::Csv))?;
    }
    if let Some(path) = a.scores {
        write(&path, matrix_to_csv(&delta))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn fit(a: FitArgs) -> Result<ExitCode> {
    let mut config = ExperimentConfig::from_file(&a.config)?;
    config.apply(&Overrides {
        seed: a.seed,
        iterations: a.iterations,
        burn_in: a.burn_in,
        thin: a.thin,
        replications: a.replications,
        level: a.level,
        output: a.output,
        workers: a.workers,
    })?;
    let report = run_experiment(&config)?;
    for (r, outcome) in report.replications.iter().enumerate() {
        if let Err(msg) = outcome {
            eprintln!("replication {r} failed: {msg}");
        }
    }
    print!("{}", bayes_fgm::runner::experiment::summary_csv(&report.summary));
    Ok(if report.failures() == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn threshold(a: ThresholdArgs) -> Result<ExitCode> {
    let chain = load_chain(&a.chain)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io { path: a.out.clone(), source: e })?;
    let (_, graph) = write_selection(&a.out, &chain, a.level)?;
    println!("{} edges at level {}", graph.edges().len(), a.level);
    Ok(ExitCode::SUCCESS)
}

fn metrics(a: MetricsArgs) -> Result<ExitCode> {
    let est = read_edges_csv(&a.estimate, a.nodes)?;
    let truth = read_edges_csv(&a.truth, a.nodes)?;
    let p = est.p().max(truth.p());
    let c = confusion(&est.with_node_count(p)?, &truth.with_node_count(p)?)?;
    println!("metric,value");
    println!("tp,{}\nfp,{}\ntn,{}\nfn,{}", c.tp, c.fp, c.tn, c.fn_);
    for (name, v) in [
        ("tpr", c.tpr()),
        ("fpr", c.fpr()),
        ("fnr", c.fnr()),
        ("err", c.err()),
        ("f1", c.f1()),
        ("sparsity", c.sparsity()),
    ] {
        println!("{name},{v}");
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchmarkArgs) -> Result<ExitCode> {
    let spec = BenchmarkSpec { method: a.method, iterations: a.iterations, n: a.n, repeats: a.repeats, seed: a.seed };
    let rows = benchmark(&a.p, &spec)?;
    emit(a.out.as_deref(), benchmark_csv(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn compare(a: CompareArgs) -> Result<ExitCode> {
    let format: ExportFormat = a.format.parse()?;
    let ga = read_edges_csv(&a.a, a.nodes)?;
    let gb = read_edges_csv(&a.b, a.nodes)?;
    let p = ga.p().max(gb.p());
    let rows = compare_graphs(&ga.with_node_count(p)?, &gb.with_node_count(p)?)?;
    emit(a.out.as_deref(), export_comparison(p, &rows, format))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Threshold(a) => threshold(a),
        Command::Metrics(a) => metrics(a),
        Command::Benchmark(a) => bench(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
