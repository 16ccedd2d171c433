//! Weighted undirected edge sets and their text exports.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// 0-based, `i < j`.
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph on `p` nodes with positive edge weights, edges sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGraph {
    p: usize,
    edges: Vec<Edge>,
}

impl EdgeGraph {
    pub fn empty(p: usize) -> Self {
        Self { p, edges: Vec::new() }
    }

    /// Edges wherever the upper triangle of `weights` is strictly positive.
    pub fn from_weights(weights: &DMatrix<f64>) -> Self {
        let p = weights.nrows();
        let mut edges = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                let w = weights[(i, j)];
                if w > 0.0 {
                    edges.push(Edge { i, j, weight: w });
                }
            }
        }
        Self { p, edges }
    }

    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b, weight) in edges {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || j >= p {
                return Err(Error::Domain(format!("invalid edge ({a}, {b}) for {p} nodes")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Domain(format!("edge ({a}, {b}) has non-positive weight {weight}")));
            }
            out.push(Edge { i, j, weight });
        }
        out.sort_by_key(|e| (e.i, e.j));
        if out.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::Domain("duplicate edge".into()));
        }
        Ok(Self { p, edges: out })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The same edges over `p` nodes (`p` must cover every endpoint).
    pub fn with_node_count(&self, p: usize) -> Result<Self> {
        Self::from_edges(p, self.edges.iter().map(|e| (e.i, e.j, e.weight)))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search_by_key(&key, |e| (e.i, e.j)).is_ok()
    }

    /// Apply a node relabeling `new = perm[old]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (perm[e.i], perm[e.j]);
                Edge { i: a.min(b), j: a.max(b), weight: e.weight }
            })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));
        Self { p: self.p, edges }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Render `graph` with 1-based node labels and 6-decimal weights.
pub fn export_graph(graph: &EdgeGraph, format: ExportFormat) -> String {
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            out.push_str("node_i,node_j,weight\n");
            for e in graph.edges() {
                let _ = writeln!(out, "{},{},{:.6}", e.i + 1, e.j + 1, e.weight);
            }
        }
        ExportFormat::Dot => {
            out.push_str("graph G {\n");
            for k in 0..graph.p() {
                let _ = writeln!(out, "  {};", k + 1);
            }
            for e in graph.edges() {
                let _ = writeln!(out, "  {} -- {} [weight={:.6}];", e.i + 1, e.j + 1, e.weight);
            }
            out.push_str("}\n");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Both,
    OnlyA,
    OnlyB,
}

impl Membership {
    pub fn as_str(self) -> &'static str {
        match self {
            Membership::Both => "both",
            Membership::OnlyA => "only-A",
            Membership::OnlyB => "only-B",
        }
    }

    fn color(self) -> &'static str {
        match self {
            Membership::Both => "orange",
            Membership::OnlyA => "blue",
            Membership::OnlyB => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparedEdge {
    pub i: usize,
    pub j: usize,
    pub weight_a: Option<f64>,
    pub weight_b: Option<f64>,
    pub membership: Membership,
}

/// Join two graphs on the same node set.
pub fn compare_graphs(a: &EdgeGraph, b: &EdgeGraph) -> Result<Vec<ComparedEdge>> {
    if a.p() != b.p() {
        return Err(Error::Dimension(format!("graphs have {} and {} nodes", a.p(), b.p())));
    }
    let (mut x, mut y) = (a.edges().iter().peekable(), b.edges().iter().peekable());
    let mut out = Vec::new();
    loop {
        let next = match (x.peek(), y.peek()) {
            (None, None) => break,
            (Some(ea), Some(eb)) if (ea.i, ea.j) == (eb.i, eb.j) => {
                let row = ComparedEdge {
                    i: ea.i,
                    j: ea.j,
                    weight_a: Some(ea.weight),
                    weight_b: Some(eb.weight),
                    membership: Membership::Both,
                };
                x.next();
                y.next();
                row
            }
            (Some(ea), eb) if eb.is_none_or(|eb| (ea.i, ea.j) < (eb.i, eb.j)) => {
                let row = ComparedEdge { i: ea.i, j: ea.j, weight_a: Some(ea.weight), weight_b: None, membership: Membership::OnlyA };
                x.next();
                row
            }
            (_, Some(eb)) => {
                let row = ComparedEdge { i: eb.i, j: eb.j, weight_a: None, weight_b: Some(eb.weight), membership: Membership::OnlyB };
                y.next();
                row
            }
            (Some(_), None) => unreachable!(),
        };
        out.push(next);
    }
    Ok(out)
}

pub fn export_comparison(p: usize, rows: &[ComparedEdge], format: ExportFormat) -> String {
    let fmt_w = |w: Option<f64>| w.map(|w| format!("{w:.6}")).unwrap_or_default();
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            out.push_str("node_i,node_j,weight_a,weight_b,membership\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.i + 1,
                    r.j + 1,
                    fmt_w(r.weight_a),
                    fmt_w(r.weight_b),
                    r.membership.as_str()
                );
            }
        }
        ExportFormat::Dot => {
            out.push_str("graph G {\n");
            for k in 0..p {
                let _ = writeln!(out, "  {};", k + 1);
            }
            for r in rows {
                let w = r.weight_a.or(r.weight_b).unwrap_or(0.0);
                let _ = writeln!(
                    out,
                    "  {} -- {} [weight={:.6}, color={}, membership=\"{}\"];",
                    r.i + 1,
                    r.j + 1,
                    w,
                    r.membership.color(),
                    r.membership.as_str()
                );
            }
            out.push_str("}\n");
        }
    }
    out
}
