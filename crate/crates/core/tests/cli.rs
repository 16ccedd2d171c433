use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bayes-fgm"))
}

fn run(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn metric(stdout: &str, name: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("{name} missing in {stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn simulate_writes_observations_truth_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, truth, scores) = (dir.path().join("obs.csv"), dir.path().join("truth.csv"), dir.path().join("s.csv"));
    let mut cmd = bin();
    cmd.args(["simulate", "--network", "network1", "--p", "4", "--n", "3", "--seed", "5", "--out"])
        .arg(&obs)
        .arg("--truth")
        .arg(&truth)
        .arg("--scores")
        .arg(&scores);
    ok(&cmd.output().unwrap());

    let text = std::fs::read_to_string(&obs).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("subject_id,node_id,time,value"));
    // dense design: 100 points per curve
    assert_eq!(lines.count(), 3 * 4 * 100);
    let edges = std::fs::read_to_string(&truth).unwrap();
    assert!(edges.starts_with("node_i,node_j,weight\n1,2,"));
    assert_eq!(std::fs::read_to_string(&scores).unwrap().lines().count(), 3);

    let data = bayes_fgm::runner::ingest_csv(&obs, false).unwrap();
    assert_eq!((data.n_subjects(), data.n_nodes()), (3, 4));
}

#[test]
fn simulate_sparse_design_has_nine_points() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    ok(&run(&["simulate", "--p", "2", "--n", "2", "--design", "sparse", "--out"], &[&obs]));
    assert_eq!(std::fs::read_to_string(&obs).unwrap().lines().count(), 1 + 2 * 2 * 9);
}

#[test]
fn metrics_of_truth_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, truth) = (dir.path().join("obs.csv"), dir.path().join("truth.csv"));
    ok(&run(&["simulate", "--p", "10", "--n", "2", "--out"], &[&obs, Path::new("--truth"), &truth]));
    let out = ok(&run(&["metrics", "--nodes", "10", "--estimate"], &[&truth, Path::new("--truth"), &truth]));
    assert_eq!(metric(&out, "tp"), 17.0);
    assert_eq!(metric(&out, "f1"), 1.0);
    assert_eq!(metric(&out, "fpr"), 0.0);
    assert!((metric(&out, "sparsity") - 17.0 / 45.0).abs() < 1e-12);
}

#[test]
fn compare_flags_membership() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    std::fs::write(&a, "node_i,node_j,weight\n1,2,0.5\n2,3,1.0\n").unwrap();
    std::fs::write(&b, "node_i,node_j,weight\n2,3,2.0\n3,4,1.0\n").unwrap();
    let csv = ok(&run(&["compare", "--a"], &[&a, Path::new("--b"), &b]));
    assert_eq!(
        csv,
        "node_i,node_j,weight_a,weight_b,membership\n\
         1,2,0.500000,,only-A\n\
         2,3,1.000000,2.000000,both\n\
         3,4,,1.000000,only-B\n"
    );
    let dot = ok(&run(&["compare", "--format", "dot", "--nodes", "5", "--a"], &[&a, Path::new("--b"), &b]));
    assert!(dot.contains("  5;"));
    assert!(dot.contains("color=orange"));

    let bad = run(&["compare", "--format", "png", "--a"], &[&a, Path::new("--b"), &b]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

#[test]
fn fit_then_threshold_the_saved_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fit.toml");
    std::fs::write(
        &config,
        "method = \"fglasso-hyper\"\n\
         [data]\nsource = \"simulate\"\nnetwork = \"network1\"\np = 4\nn = 30\nscores = \"latent\"\n\
         [mcmc]\niterations = 60\nburn_in = 10\nseed = 3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let summary = ok(&run(&["fit", "--iterations", "80", "--config"], &[&config, Path::new("--output"), &out_dir]));
    assert!(summary.starts_with("metric,mean,se,count\n"));
    assert!(summary.contains("\nf1,"));
    let rep = out_dir.join("rep_000");
    for f in ["chain.fgmc", "edges.csv", "edges.dot", "theta_hat.csv", "intervals.csv", "trace.csv", "metrics.csv"] {
        assert!(rep.join(f).exists(), "{f}");
    }
    assert!(out_dir.join("config.toml").exists());
    // the override reached the chain: 80 - 10 kept draws
    let chain = bayes_fgm::runner::load_chain(&rep.join("chain.fgmc")).unwrap();
    assert_eq!(chain.len(), 70);

    let sel = dir.path().join("sel");
    let msg = ok(&run(&["threshold", "--level", "0.99", "--chain"], &[&rep.join("chain.fgmc"), Path::new("--out"), &sel]));
    assert!(msg.ends_with("at level 0.99\n"));
    assert!(sel.join("edges.csv").exists());
}

#[test]
fn fit_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fit.toml");
    std::fs::write(&config, "method = \"fghs\"\nbogus = 1\n[data]\nsource = \"simulate\"\nnetwork = \"network1\"\np = 3\nn = 5\n")
        .unwrap();
    let out = run(&["fit", "--config"], &[&config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn threshold_rejects_corrupt_archive() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("c.fgmc");
    std::fs::write(&chain, b"FGMCHAIN\x01\x00\x00\x00garbage").unwrap();
    let out = run(&["threshold", "--level", "0.9", "--chain"], &[&chain, Path::new("--out"), dir.path()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn benchmark_prints_csv() {
    let out = ok(&run(&["benchmark", "--p", "2,3", "--iterations", "2", "--repeats", "1", "--n", "10"], &[]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "p,seconds");
    assert!(lines[1].starts_with("2,") && lines[2].starts_with("3,"));
}
