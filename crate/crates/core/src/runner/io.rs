//! Text formats: the long-format observation CSV, matrices, interval tables
//! and edge lists.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fpca::{Design, FunctionalDataset, Series};
use crate::graph::EdgeGraph;
use crate::posterior::CredibleIntervals;

pub const DATASET_HEADER: &str = "subject_id,node_id,time,value";

struct Row {
    subject: usize,
    node: usize,
    time: f64,
    value: f64,
    line: usize,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn intern(labels: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    *index.entry(key.to_string()).or_insert_with(|| {
        labels.push(key.to_string());
        labels.len() - 1
    })
}

/// Read rows `subject_id,node_id,time,value` (an optional header line is
/// skipped). Subjects and nodes keep their order of first appearance. With
/// `rescale`, times are min-max mapped onto `[0, 1]`; otherwise any time
/// outside `[0, 1]` is rejected. A dataset whose series all share one grid
/// is dense, otherwise sparse.
pub fn ingest_csv(path: &Path, rescale: bool) -> Result<FunctionalDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let (mut subjects, mut nodes) = (Vec::new(), Vec::new());
    let (mut subject_index, mut node_index) = (HashMap::new(), HashMap::new());
    let mut rows = Vec::new();
    let mut seen: HashMap<(usize, usize, u64), usize> = HashMap::new();

    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, found {}", record.len())));
        }
        let time = record[2].parse::<f64>();
        if k == 0 && time.is_err() {
            continue;
        }
        let time = time.map_err(|_| parse_err(path, line, format!("time {:?} is not a number", &record[2])))?;
        let value = record[3]
            .parse::<f64>()
            .map_err(|_| parse_err(path, line, format!("value {:?} is not a number", &record[3])))?;
        if !time.is_finite() || !value.is_finite() {
            return Err(parse_err(path, line, "time and value must be finite"));
        }
        if !rescale && !(0.0..=1.0).contains(&time) {
            return Err(parse_err(path, line, format!("time {time} outside [0, 1] (use the rescale flag)")));
        }
        let subject = intern(&mut subjects, &mut subject_index, &record[0]);
        let node = intern(&mut nodes, &mut node_index, &record[1]);
        if let Some(&first) = seen.get(&(subject, node, time.to_bits())) {
            return Err(Error::DuplicateObservation {
                path: path.to_path_buf(),
                subject: record[0].to_string(),
                node: record[1].to_string(),
                time,
                first,
                second: line,
            });
        }
        seen.insert((subject, node, time.to_bits()), line);
        rows.push(Row { subject, node, time, value, line });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{}: no observations", path.display())));
    }

    if rescale {
        let lo = rows.iter().map(|r| r.time).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.time).fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for r in &mut rows {
            r.time = if span > 0.0 { ((r.time - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }

    let p = nodes.len();
    let mut series = vec![Series::default(); subjects.len() * p];
    rows.sort_by(|a, b| (a.subject, a.node).cmp(&(b.subject, b.node)).then(a.time.total_cmp(&b.time)));
    for r in &rows {
        let s = &mut series[r.subject * p + r.node];
        if s.times.last() == Some(&r.time) {
            // Distinct raw times can collide after rescaling.
            return Err(parse_err(path, r.line, "two observations share a rescaled time"));
        }
        s.times.push(r.time);
        s.values.push(r.value);
    }
    let grid = &series[0].times;
    let design = if series.iter().all(|s| &s.times == grid) { Design::Dense } else { Design::Sparse };
    FunctionalDataset::with_labels(series, design, subjects, nodes)
}

pub fn dataset_to_csv(data: &FunctionalDataset) -> String {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for (i, subject) in data.subject_labels().iter().enumerate() {
        for (j, node) in data.node_labels().iter().enumerate() {
            let s = data.series(i, j);
            for (t, v) in s.times.iter().zip(&s.values) {
                let _ = writeln!(out, "{subject},{node},{t},{v}");
            }
        }
    }
    out
}

/// Plain comma-separated matrix with full round-trip precision.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, k + 1, e.to_string()))?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            return Err(parse_err(path, k + 1, "ragged matrix row"));
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Upper-triangle table `row,col,mean,lower,upper` with 1-based indices.
pub fn intervals_to_csv(mean: &DMatrix<f64>, ci: &CredibleIntervals) -> String {
    let mut out = String::from("row,col,mean,lower,upper\n");
    for r in 0..mean.nrows() {
        for c in r..mean.ncols() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r + 1,
                c + 1,
                mean[(r, c)],
                ci.lower[(r, c)],
                ci.upper[(r, c)]
            );
        }
    }
    out
}

/// Read a `node_i,node_j,weight` edge list (1-based). `p` defaults to the
/// largest node label present.
pub fn read_edges_csv(path: &Path, p: Option<usize>) -> Result<EdgeGraph> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() < 3 {
            return Err(parse_err(path, line, "expected node_i,node_j,weight"));
        }
        let field = |k: usize| record[k].parse::<f64>().map_err(|e| parse_err(path, line, e.to_string()));
        let (i, j, w) = (field(0)?, field(1)?, field(2)?);
        if i < 1.0 || j < 1.0 || i.fract() != 0.0 || j.fract() != 0.0 {
            return Err(parse_err(path, line, "node labels must be positive integers"));
        }
        edges.push((i as usize - 1, j as usize - 1, w));
    }
    let p = p.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    EdgeGraph::from_edges(p, edges)
}
