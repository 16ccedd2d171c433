//! Functional data containers and dense-grid functional principal components.
//!
//! For a dense design every series shares one grid of `T` points in `[0, 1]`.
//! Each node's curves are centered, the `T x T` sample covariance is
//! eigendecomposed, and scores come from Riemann projection with weight
//! `dt = 1 / (T - 1)`. Eigenfunctions are `phi = v / sqrt(dt)` so that
//! `sum_t phi_k(t) phi_l(t) dt = delta_kl`, and eigenvalues are reported on the
//! operator scale (matrix eigenvalue times `dt`).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Observations for `N` subjects on `p` nodes. Series are stored subject-major:
/// the series of subject `i`, node `j` sits at `i * p + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    n_subjects: usize,
    n_nodes: usize,
    series: Vec<Series>,
    design: Design,
    subject_labels: Vec<String>,
    node_labels: Vec<String>,
}

impl FunctionalDataset {
    pub fn new(n_subjects: usize, n_nodes: usize, series: Vec<Series>, design: Design) -> Result<Self> {
        let subject_labels = (1..=n_subjects).map(|i| i.to_string()).collect();
        let node_labels = (1..=n_nodes).map(|j| j.to_string()).collect();
        Self::with_labels(series, design, subject_labels, node_labels)
    }

    pub fn with_labels(
        series: Vec<Series>,
        design: Design,
        subject_labels: Vec<String>,
        node_labels: Vec<String>,
    ) -> Result<Self> {
        let (n_subjects, n_nodes) = (subject_labels.len(), node_labels.len());
        if n_subjects == 0 || n_nodes == 0 {
            return Err(Error::InsufficientData("a dataset needs at least one subject and one node".into()));
        }
        if series.len() != n_subjects * n_nodes {
            return Err(Error::Dimension(format!(
                "{} series for {n_subjects} subjects x {n_nodes} nodes",
                series.len()
            )));
        }
        for (k, s) in series.iter().enumerate() {
            if s.times.len() != s.values.len() {
                return Err(Error::Dimension(format!("series {k}: times and values differ in length")));
            }
            if let Some(t) = s.times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(Error::Domain(format!("series {k}: time {t} outside [0, 1]")));
            }
        }
        if design == Design::Dense {
            let grid = &series[0].times;
            if grid.is_empty() || series.iter().any(|s| &s.times != grid) {
                return Err(Error::UnsupportedDesign);
            }
        }
        Ok(Self { n_subjects, n_nodes, series, design, subject_labels, node_labels })
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn series(&self, subject: usize, node: usize) -> &Series {
        &self.series[subject * self.n_nodes + node]
    }

    pub fn all_series(&self) -> &[Series] {
        &self.series
    }

    pub fn subject_labels(&self) -> &[String] {
        &self.subject_labels
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    /// The common grid, when every series shares one.
    pub fn common_grid(&self) -> Option<&[f64]> {
        let grid = &self.series[0].times;
        (!grid.is_empty() && self.series.iter().all(|s| &s.times == grid)).then_some(grid.as_slice())
    }
}

/// `N x (p M)` score matrix; column `j * M + k` holds score `k` of node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    data: DMatrix<f64>,
    m: usize,
}

impl ScoreMatrix {
    pub fn new(data: DMatrix<f64>, m: usize) -> Result<Self> {
        if m == 0 || data.ncols() == 0 || data.ncols() % m != 0 {
            return Err(Error::Dimension(format!(
                "{} columns do not split into nodes of {m} scores",
                data.ncols()
            )));
        }
        Ok(Self { data, m })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n_subjects(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.data.ncols() / self.m
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    /// Reorder nodes so that new node `perm[j]` holds old node `j`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        let p = self.n_nodes();
        let mut seen = vec![false; p];
        if perm.len() != p || perm.iter().any(|&t| t >= p || std::mem::replace(&mut seen[t], true)) {
            return Err(Error::Domain("node permutation is not a bijection".into()));
        }
        let m = self.m;
        let mut out = DMatrix::zeros(self.data.nrows(), self.data.ncols());
        for (old, &new) in perm.iter().enumerate() {
            out.columns_mut(new * m, m).copy_from(&self.data.columns(old * m, m));
        }
        Self::new(out, m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeBasis {
    pub mean: DVector<f64>,
    /// `T x M` eigenfunction values on the grid.
    pub eigenfunctions: DMatrix<f64>,
    /// All `T` eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaBasis {
    pub grid: Vec<f64>,
    pub nodes: Vec<NodeBasis>,
    pub truncation: usize,
}

impl FpcaBasis {
    pub fn dt(&self) -> f64 {
        grid_weight(self.grid.len())
    }
}

fn grid_weight(t: usize) -> f64 {
    if t > 1 {
        1.0 / (t - 1) as f64
    } else {
        1.0
    }
}

/// Smallest `M` whose leading eigenvalues reach `threshold` of the total.
pub fn select_truncation(eigenvalues: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Domain(format!("variance threshold must lie in (0, 1], got {threshold}")));
    }
    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::Rank("no positive eigenvalue".into()));
    }
    let mut acc = 0.0;
    for (k, v) in eigenvalues.iter().enumerate() {
        acc += v.max(0.0);
        // Relative slack so that a threshold of exactly 1 is reachable in floating point.
        if acc / total >= threshold - 1e-12 {
            return Ok(k + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Sign rule: the entry of largest magnitude is made positive, lowest index on ties.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

struct NodeDecomposition {
    mean: DVector<f64>,
    centered: DMatrix<f64>,
    /// Eigenvectors as columns, descending order, unit Euclidean norm.
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

fn decompose_node(data: &FunctionalDataset, node: usize, dt: f64) -> Result<NodeDecomposition> {
    let n = data.n_subjects();
    let t = data.series(0, node).values.len();
    let mut x = DMatrix::from_fn(n, t, |i, k| data.series(i, node).values[k]);
    let mean = DVector::from_fn(t, |k, _| x.column(k).mean());
    for k in 0..t {
        x.column_mut(k).add_scalar_mut(-mean[k]);
    }
    let cov = (x.transpose() * &x) / (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut vectors = DMatrix::zeros(t, t);
    let mut eigenvalues = Vec::with_capacity(t);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        fix_sign(&mut v);
        vectors.set_column(dst, &DVector::from_vec(v));
        eigenvalues.push(eig.eigenvalues[src].max(0.0) * dt);
    }
    if !eigenvalues.iter().any(|&v| v > 0.0) {
        return Err(Error::Rank(format!("node {} has zero sample covariance", node + 1)));
    }
    Ok(NodeDecomposition { mean, centered: x, vectors, eigenvalues })
}

fn dense_inputs(data: &FunctionalDataset) -> Result<Vec<f64>> {
    if data.design() != Design::Dense {
        return Err(Error::UnsupportedDesign);
    }
    let grid = data.common_grid().ok_or(Error::UnsupportedDesign)?;
    if data.n_subjects() < 2 {
        return Err(Error::InsufficientData(format!(
            "score estimation needs at least 2 subjects, got {}",
            data.n_subjects()
        )));
    }
    Ok(grid.to_vec())
}

fn assemble(decomps: Vec<NodeDecomposition>, grid: Vec<f64>, m: usize, dt: f64) -> (ScoreMatrix, FpcaBasis) {
    let p = decomps.len();
    let n = decomps[0].centered.nrows();
    let mut scores = DMatrix::zeros(n, p * m);
    let mut nodes = Vec::with_capacity(p);
    let root = dt.sqrt();
    for (j, d) in decomps.into_iter().enumerate() {
        let v = d.vectors.columns(0, m);
        // a_ijk = sum_t g(t) phi_k(t) dt with phi = v / sqrt(dt)
        let block = &d.centered * v * root;
        scores.columns_mut(j * m, m).copy_from(&block);
        nodes.push(NodeBasis {
            mean: d.mean,
            eigenfunctions: v.into_owned() / root,
            eigenvalues: d.eigenvalues,
        });
    }
    let scores = ScoreMatrix::new(scores, m).expect("m >= 1 and p >= 1");
    (scores, FpcaBasis { grid, nodes, truncation: m })
}

/// Dense-design scores with a shared truncation: the largest of the per-node
/// minimal `M` reaching `var_threshold`.
pub fn estimate_scores_dense(data: &FunctionalDataset, var_threshold: f64) -> Result<(ScoreMatrix, FpcaBasis)> {
    if !(var_threshold > 0.0 && var_threshold <= 1.0) {
        return Err(Error::Domain(format!(
            "variance threshold must lie in (0, 1], got {var_threshold}"
        )));
    }
    let grid = dense_inputs(data)?;
    let dt = grid_weight(grid.len());
    let decomps = (0..data.n_nodes())
        .into_par_iter()
        .map(|j| decompose_node(data, j, dt))
        .collect::<Result<Vec<_>>>()?;
    let mut m = 1;
    for d in &decomps {
        m = m.max(select_truncation(&d.eigenvalues, var_threshold)?);
    }
    Ok(assemble(decomps, grid, m, dt))
}

/// Dense-design scores at a fixed truncation `m`.
pub fn estimate_scores_dense_fixed(data: &FunctionalDataset, m: usize) -> Result<(ScoreMatrix, FpcaBasis)> {
    let grid = dense_inputs(data)?;
    if m == 0 || m > grid.len() {
        return Err(Error::Domain(format!("truncation {m} outside 1..={}", grid.len())));
    }
    let dt = grid_weight(grid.len());
    let decomps = (0..data.n_nodes())
        .into_par_iter()
        .map(|j| decompose_node(data, j, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(decomps, grid, m, dt))
}

/// Centered fitted curves `sum_k a_ijk phi_jk(t)`; entry `[i * p + j]` is a `T`-vector.
pub fn reconstruct(scores: &ScoreMatrix, basis: &FpcaBasis) -> Result<Vec<DVector<f64>>> {
    let (p, m) = (scores.n_nodes(), scores.truncation());
    if p != basis.nodes.len() || basis.nodes.iter().any(|b| b.eigenfunctions.ncols() != m) {
        return Err(Error::Dimension(format!(
            "scores with {p} nodes x {m} components do not match a basis of {} nodes x {} components",
            basis.nodes.len(),
            basis.truncation
        )));
    }
    let mut out = Vec::with_capacity(scores.n_subjects() * p);
    for i in 0..scores.n_subjects() {
        for (j, node) in basis.nodes.iter().enumerate() {
            let a = scores.data().view((i, j * m), (1, m)).transpose();
            out.push(DVector::from_iterator(node.eigenfunctions.nrows(), (&node.eigenfunctions * a).iter().copied()));
        }
    }
    Ok(out)
}
