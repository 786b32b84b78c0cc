//! HITS, PageRank and correlations between encoding magnitudes and
//! centralities.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::model::EncodingPair;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityScores {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub pagerank: Vec<f64>,
    /// Raw degrees, self-loops not added.
    pub outdegree: Vec<usize>,
    pub indegree: Vec<usize>,
}

fn l2_normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Hub and authority scores by the alternating power iteration
/// `a ← Aᵀh`, `h ← Aa`, each renormalized to unit 2-norm.
///
/// An edgeless graph has all-zero scores.
pub fn hits(g: &DirectedGraph, tol: f64, max_iters: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("hits"));
    }
    let mut hub = vec![1.0 / (n as f64).sqrt(); n];
    let mut auth = vec![0.0; n];
    for _ in 0..max_iters {
        let mut a = vec![0.0; n];
        for e in g.edges() {
            a[e.target] += e.weight * hub[e.source];
        }
        l2_normalize(&mut a);
        let mut h = vec![0.0; n];
        for e in g.edges() {
            h[e.source] += e.weight * a[e.target];
        }
        l2_normalize(&mut h);
        let delta = max_diff(&a, &auth).max(max_diff(&h, &hub));
        auth = a;
        hub = h;
        if delta < tol {
            return Ok((hub, auth));
        }
    }
    Err(Error::NoConvergence {
        what: "HITS",
        iters: max_iters,
    })
}

/// PageRank with uniform teleportation; dangling nodes spread their mass
/// uniformly.
pub fn pagerank(g: &DirectedGraph, damping: f64, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("pagerank"));
    }
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::InvalidConfig(format!("damping {damping} outside [0, 1]")));
    }
    let out_weight: Vec<f64> = (0..n).map(|i| g.out_weights(i).iter().sum()).collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..max_iters {
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] == 0.0).map(|i| x[i]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        let mut next = vec![base; n];
        for e in g.edges() {
            next[e.target] += damping * x[e.source] * e.weight / out_weight[e.source];
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        what: "PageRank",
        iters: max_iters,
    })
}

pub fn centrality_scores(g: &DirectedGraph) -> Result<CentralityScores> {
    let (hub, authority) = hits(g, 1e-12, 100_000)?;
    let pagerank = pagerank(g, 0.85, 1e-13, 100_000)?;
    let n = g.node_count();
    Ok(CentralityScores {
        hub,
        authority,
        pagerank,
        outdegree: (0..n).map(|i| g.out_degree(i)).collect(),
        indegree: (0..n).map(|i| g.in_degree(i)).collect(),
    })
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Magnitude {
    L1,
    #[default]
    L2,
    Max,
}

impl Magnitude {
    pub fn of(self, row: &[f64]) -> f64 {
        match self {
            Magnitude::L1 => row.iter().map(|v| v.abs()).sum(),
            Magnitude::L2 => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Magnitude::Max => row.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

impl std::str::FromStr for Magnitude {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Magnitude::L1),
            "l2" => Ok(Magnitude::L2),
            "max" => Ok(Magnitude::Max),
            other => Err(Error::InvalidConfig(format!("unknown magnitude {other:?}"))),
        }
    }
}

pub const SCORE_ROWS: [&str; 5] = ["hub", "outdegree", "authority", "pagerank", "indegree"];

/// Rows follow [`SCORE_ROWS`]; columns are (source, target) magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub rows: [[Option<f64>; 2]; 5],
}

impl CorrelationTable {
    pub fn get(&self, score: &str, target_role: bool) -> Option<f64> {
        let i = SCORE_ROWS.iter().position(|s| *s == score)?;
        self.rows[i][target_role as usize]
    }
}

pub fn magnitude_correlations(z: &EncodingPair, scores: &CentralityScores, norm: Magnitude) -> Result<CorrelationTable> {
    let n = z.node_count();
    if scores.hub.len() != n || scores.pagerank.len() != n || scores.indegree.len() != n {
        return Err(Error::DimensionMismatch {
            op: "magnitude_correlations",
            detail: format!("{n} encodings vs {} scores", scores.hub.len()),
        });
    }
    let mag = |m: &crate::linalg::Matrix| (0..n).map(|i| norm.of(m.row(i))).collect::<Vec<f64>>();
    let (ms, mt) = (mag(&z.s), mag(&z.t));
    let as_f = |v: &[usize]| v.iter().map(|&d| d as f64).collect::<Vec<f64>>();
    let columns = [
        scores.hub.clone(),
        as_f(&scores.outdegree),
        scores.authority.clone(),
        scores.pagerank.clone(),
        as_f(&scores.indegree),
    ];
    let mut rows = [[None; 2]; 5];
    for (r, c) in columns.iter().enumerate() {
        rows[r] = [pearson(&ms, c), pearson(&mt, c)];
    }
    Ok(CorrelationTable { rows })
}

/// CSV `score,source,target`; undefined correlations are empty fields.
pub fn write_correlations_csv(table: &CorrelationTable, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["score", "source", "target"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for (name, row) in SCORE_ROWS.iter().zip(&table.rows) {
        out.write_record([name.to_string(), cell(row[0]), cell(row[1])])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bowtie_graph;
    use crate::linalg::Matrix;

    #[test]
    fn star_hits() {
        let g = DirectedGraph::from_pairs(4, [(0, 3), (1, 3), (2, 3)]).unwrap();
        let (h, a) = hits(&g, 1e-12, 1000).unwrap();
        assert!((a[3] - 1.0).abs() < 1e-12);
        assert!(a[..3].iter().all(|&x| x == 0.0));
        assert!((h[0] - h[1]).abs() < 1e-15 && (h[1] - h[2]).abs() < 1e-15);
        assert!((h[0] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_hits() {
        let g = DirectedGraph::from_pairs(2, [(0, 1), (1, 0)]).unwrap();
        let (h, a) = hits(&g, 1e-12, 1000).unwrap();
        assert_eq!(h, a);
        assert!((h[0] - h[1]).abs() < 1e-15);
    }

    #[test]
    fn bowtie_hits_leaders() {
        let (h, a) = hits(&bowtie_graph(), 1e-12, 10_000).unwrap();
        let amax = a.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(a[3], amax);
        let hmax = h.iter().cloned().fold(f64::MIN, f64::max);
        assert!((h[0] - hmax).abs() < 1e-12 && h[0] == h[1] && h[1] == h[2]);
    }

    #[test]
    fn pagerank_small_cases() {
        let single = DirectedGraph::from_pairs(1, []).unwrap();
        assert_eq!(pagerank(&single, 0.85, 1e-12, 100).unwrap(), vec![1.0]);
        let cycle = DirectedGraph::from_pairs(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let pr = pagerank(&cycle, 0.85, 1e-13, 1000).unwrap();
        assert!(pr.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn pagerank_chain_matches_linear_solve() {
        // x = (1−d)/n + d·(dangling share + in-flow); solve the 2×2 system.
        let d = 0.85;
        let g = DirectedGraph::from_pairs(2, [(0, 1)]).unwrap();
        let pr = pagerank(&g, d, 1e-14, 10_000).unwrap();
        // x0 = (1−d)/2 + d·x1/2,  x1 = (1−d)/2 + d·x1/2 + d·x0
        let m = nalgebra::Matrix2::new(1.0, -d / 2.0, -d, 1.0 - d / 2.0);
        let rhs = nalgebra::Vector2::new((1.0 - d) / 2.0, (1.0 - d) / 2.0);
        let x = m.lu().solve(&rhs).unwrap();
        let x = x / x.sum();
        assert!((pr[0] - x[0]).abs() < 1e-10 && (pr[1] - x[1]).abs() < 1e-10);
    }

    #[test]
    fn pearson_edge_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 4.0]), None);
    }

    #[test]
    fn replicated_scores_correlate_perfectly() {
        let g = bowtie_graph();
        let sc = centrality_scores(&g).unwrap();
        let s = Matrix::column_vector(sc.outdegree.iter().map(|&d| d as f64).collect());
        let t = Matrix::column_vector(sc.indegree.iter().map(|&d| d as f64).collect());
        let table = magnitude_correlations(&EncodingPair::new(s, t).unwrap(), &sc, Magnitude::L2).unwrap();
        assert!((table.get("outdegree", false).unwrap() - 1.0).abs() < 1e-12);
        assert!((table.get("indegree", true).unwrap() - 1.0).abs() < 1e-12);
    }
}
