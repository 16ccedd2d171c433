//! Structure-recovery and estimation metrics.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fglasso::{fglasso_run, LambdaPrior};
use crate::fpca::ScoreMatrix;
use crate::graph::EdgeGraph;
use crate::mcmc::RunConfig;
use crate::posterior::threshold_graph;

/// Counts over the `p (p - 1) / 2` unordered node pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionSummary {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FN)`; 1 when the truth has no edges (nothing was missed).
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_, 1.0)
    }

    /// `FP / (FP + TN)`; 0 when every pair is a true edge.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn, 0.0)
    }

    pub fn fnr(&self) -> f64 {
        1.0 - self.tpr()
    }

    pub fn err(&self) -> f64 {
        ratio(self.fp + self.fn_, self.total(), 0.0)
    }

    /// `2TP / (2TP + FP + FN)`, with 1 when both graphs are empty.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_, 1.0)
    }

    /// Fraction of pairs the estimate calls edges.
    pub fn sparsity(&self) -> f64 {
        ratio(self.tp + self.fp, self.total(), 0.0)
    }
}

pub fn confusion(est: &EdgeGraph, truth: &EdgeGraph) -> Result<ConfusionSummary> {
    if est.p() != truth.p() {
        return Err(Error::Dimension(format!(
            "estimated graph has {} nodes, truth has {}",
            est.p(),
            truth.p()
        )));
    }
    let p = est.p();
    let tp = est.edges().iter().filter(|e| truth.contains(e.i, e.j)).count();
    let fp = est.edges().len() - tp;
    let fn_ = truth.edges().len() - tp;
    let tn = p * p.saturating_sub(1) / 2 - tp - fp - fn_;
    Ok(ConfusionSummary { tp, fp, tn, fn_ })
}

/// Trapezoidal area under `(FPR, TPR)` points padded with `(0, 0)` and `(1, 1)`.
pub fn roc_auc(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData("ROC curve needs at least one point".into()));
    }
    let mut pts = Vec::with_capacity(points.len() + 2);
    pts.push((0.0, 0.0));
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.extend(sorted);
    pts.push((1.0, 1.0));
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum())
}

/// 20 log-spaced values in `[0.1, 100]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(0.1, 100.0, 20)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Default credible level for ROC points.
pub const ROC_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub lambdas: Vec<f64>,
    /// `(FPR, TPR)` per grid value.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// One fixed-lambda fglasso chain per grid value, thresholded at `level`.
/// Grid point `k` runs with seed `config.seed + k`.
pub fn roc_sweep(
    scores: &ScoreMatrix,
    truth: &EdgeGraph,
    lambdas: &[f64],
    level: f64,
    config: &RunConfig,
) -> Result<RocCurve> {
    if lambdas.is_empty() {
        return Err(Error::InsufficientData("empty lambda grid".into()));
    }
    let points = lambdas
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let cfg = RunConfig { seed: config.seed.wrapping_add(k as u64), ..*config };
            let chain = fglasso_run(scores, LambdaPrior::Fixed { lambda }, &cfg)?;
            let (_, graph) = threshold_graph(&chain, level)?;
            let c = confusion(&graph, truth)?;
            Ok((c.fpr(), c.tpr()))
        })
        .collect::<Result<Vec<_>>>()?;
    let auc = roc_auc(&points)?;
    Ok(RocCurve { lambdas: lambdas.to_vec(), points, auc })
}

/// Mean squared error of off-diagonal-block entries, grouped by true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedMse {
    /// `(true value, MSE, element count)` sorted by true value.
    pub groups: Vec<(f64, f64, usize)>,
    pub overall: f64,
}

impl GroupedMse {
    pub fn group(&self, value: f64) -> Option<f64> {
        self.groups.iter().find(|g| (g.0 - value).abs() < 1e-12).map(|g| g.1)
    }
}

pub fn grouped_mse(est: &DMatrix<f64>, truth: &DMatrix<f64>, m: usize) -> Result<GroupedMse> {
    let d = truth.nrows();
    if est.shape() != truth.shape() || truth.ncols() != d || m == 0 || d % m != 0 {
        return Err(Error::Dimension(format!(
            "estimate {:?} and truth {:?} with block size {m}",
            est.shape(),
            truth.shape()
        )));
    }
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    let (mut total, mut count) = (0.0, 0usize);
    for c in 0..d {
        for r in 0..d {
            if r / m >= c / m {
                continue;
            }
            let t = truth[(r, c)];
            let e2 = (est[(r, c)] - t).powi(2);
            match groups.iter_mut().find(|g| (g.0 - t).abs() < 1e-12) {
                Some(g) => {
                    g.1 += e2;
                    g.2 += 1;
                }
                None => groups.push((t, e2, 1)),
            }
            total += e2;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("no off-diagonal blocks (p = 1)".into()));
    }
    for g in &mut groups {
        g.1 /= g.2 as f64;
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GroupedMse { groups, overall: total / count as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{network1, network2};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identical_graphs() {
        let t = network1(10, 5).unwrap().true_edges();
        let c = confusion(&t, &t).unwrap();
        assert_eq!((c.tpr(), c.fpr(), c.err(), c.f1()), (1.0, 0.0, 0.0, 1.0));
        assert_eq!(c.total(), 45);
    }

    #[test]
    fn f1_hand_example() {
        let truth = EdgeGraph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]).unwrap();
        let est = EdgeGraph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 4, 1.0)]).unwrap();
        let c = confusion(&est, &truth).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (3, 1, 1));
        assert_relative_eq!(c.f1(), 0.75);
    }

    #[test]
    fn empty_estimate() {
        let truth = network1(4, 1).unwrap().true_edges();
        let c = confusion(&EdgeGraph::empty(4), &truth).unwrap();
        assert_eq!((c.tpr(), c.fpr(), c.f1()), (0.0, 0.0, 0.0));
        let both = confusion(&EdgeGraph::empty(4), &EdgeGraph::empty(4)).unwrap();
        assert_eq!(both.f1(), 1.0);
        assert!(confusion(&EdgeGraph::empty(3), &truth).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_relative_eq!(roc_auc(&[(0.3, 0.3), (0.7, 0.7)]).unwrap(), 0.5);
        assert_relative_eq!(roc_auc(&[(0.0, 1.0)]).unwrap(), 1.0);
        assert_relative_eq!(roc_auc(&[(0.2, 0.8)]).unwrap(), 0.8);
        assert!(roc_auc(&[]).is_err());
    }

    #[test]
    fn network1_sparsities() {
        for (p, pct, decimals) in [(10, 37.78, 2), (30, 13.1, 1), (50, 7.92, 2)] {
            let t = network1(p, 5).unwrap().true_edges();
            let s = confusion(&t, &t).unwrap().sparsity() * 100.0;
            let scale = 10f64.powi(decimals);
            assert_eq!((s * scale).round() / scale, pct, "p={p}: {s}");
        }
    }

    #[test]
    fn network2_sparsity_follows_definition() {
        // Connected decades carry 17 edges each.
        for (p, edges) in [(10usize, 17usize), (30, 34), (50, 51)] {
            let t = network2(p, 5).unwrap().true_edges();
            assert_eq!(t.edges().len(), edges);
        }
    }

    #[test]
    fn grouped_mse_examples() {
        let truth = network1(10, 5).unwrap();
        let same = grouped_mse(truth.theta(), truth.theta(), 5).unwrap();
        assert!(same.groups.iter().all(|g| g.1 == 0.0));
        assert_eq!(same.overall, 0.0);
        let zero = grouped_mse(&DMatrix::zeros(50, 50), truth.theta(), 5).unwrap();
        assert_relative_eq!(zero.group(0.2).unwrap(), 0.04, epsilon = 1e-15);
        assert_relative_eq!(zero.group(0.4).unwrap(), 0.16, epsilon = 1e-15);
        assert_eq!(zero.group(0.0).unwrap(), 0.0);
        assert!(grouped_mse(&DMatrix::zeros(10, 10), truth.theta(), 5).is_err());
    }

    #[test]
    fn lambda_grid_shape() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 20);
        assert_relative_eq!(g[0], 0.1, epsilon = 1e-12);
        assert_relative_eq!(g[19], 100.0, epsilon = 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    fn arb_graph(p: usize) -> impl Strategy<Value = EdgeGraph> {
        proptest::collection::vec(any::<bool>(), p * (p - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..p {
                for j in i + 1..p {
                    if bits[k] {
                        edges.push((i, j, 1.0));
                    }
                    k += 1;
                }
            }
            EdgeGraph::from_edges(p, edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rates_bounded_and_counts_add_up(est in arb_graph(7), truth in arb_graph(7)) {
            let c = confusion(&est, &truth).unwrap();
            prop_assert_eq!(c.total(), 21);
            for r in [c.tpr(), c.fpr(), c.fnr(), c.err(), c.f1(), c.sparsity()] {
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn confusion_invariant_to_relabeling(est in arb_graph(6), truth in arb_graph(6), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            let a = confusion(&est, &truth).unwrap();
            let b = confusion(&est.relabel(&perm), &truth.relabel(&perm)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mirrored_curve_auc_complements(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8)) {
            // A monotone curve: sort both coordinates independently.
            let mut xs: Vec<f64> = raw.iter().map(|p| p.0).collect();
            let mut ys: Vec<f64> = raw.iter().map(|p| p.1).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
            let mirror: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (y, x)).collect();
            let s = roc_auc(&pts).unwrap() + roc_auc(&mirror).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
