//! Directed graph storage, self-loop augmentation and the degree-normalized
//! propagation operator `Â = (D̃⁺)^(−β) Ã (D̃⁻)^(−α)`.
//!
//! A [`DirectedGraph`] keeps both a row view (out-neighbors) and a transpose
//! view (in-neighbors), so products with `Â` and `Âᵀ` are both row-parallel.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Immutable weighted directed graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    /// Sorted by `(source, target)`.
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    in_weights: Vec<f64>,
}

impl DirectedGraph {
    /// Builds a graph from weighted edges. Duplicate `(source, target)` pairs
    /// keep their first weight and are reported with a warning.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::new_counting_duplicates(n, edges).map(|(g, _)| g)
    }

    /// Like [`DirectedGraph::new`], also returning how many duplicates were dropped.
    pub fn new_counting_duplicates(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<(Self, usize)> {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        let mut duplicates = 0;
        for (source, target, weight) in edges {
            for id in [source, target] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight(source, target));
            }
            if seen.insert((source, target)) {
                list.push(Edge {
                    source,
                    target,
                    weight,
                });
            } else {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("dropped {duplicates} duplicate edge(s)");
        }
        Ok((Self::from_unique_edges(n, list), duplicates))
    }

    /// Unit-weight edges.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(s, t)| (s, t, 1.0)))
    }

    fn from_unique_edges(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by_key(|e| (e.source, e.target));

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.source + 1] += 1;
            in_offsets[e.target + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = edges.iter().map(|e| e.target).collect();
        let out_weights = edges.iter().map(|e| e.weight).collect();

        // Edges are visited in source order, so every in-list comes out sorted.
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0usize; edges.len()];
        let mut in_weights = vec![0.0; edges.len()];
        for e in &edges {
            let slot = cursor[e.target];
            in_sources[slot] = e.source;
            in_weights[slot] = e.weight;
            cursor[e.target] += 1;
        }

        Self {
            n,
            edges,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.source, e.target))
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    pub fn out_weights(&self, i: usize) -> &[f64] {
        &self.out_weights[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn in_weights(&self, i: usize) -> &[f64] {
        &self.in_weights[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn weight(&self, source: usize, target: usize) -> Option<f64> {
        let nbrs = self.out_neighbors(source);
        nbrs.binary_search(&target)
            .ok()
            .map(|k| self.out_weights(source)[k])
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        source < self.n && self.out_neighbors(source).binary_search(&target).is_ok()
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.has_edge(i, i)
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.source == e.target).count()
    }

    /// Same nodes, self-loops removed.
    pub fn without_self_loops(&self) -> DirectedGraph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| e.source != e.target)
            .collect();
        Self::from_unique_edges(self.n, edges)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<DirectedGraph> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                op: "DirectedGraph::permuted",
                detail: format!("permutation of length {} for {} nodes", perm.len(), self.n),
            });
        }
        DirectedGraph::new(
            self.n,
            self.edges
                .iter()
                .map(|e| (perm[e.source], perm[e.target], e.weight)),
        )
    }

    /// Dense weighted adjacency matrix.
    pub fn to_dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a.set(e.source, e.target, e.weight);
        }
        a
    }

    /// `A · x` using edge weights.
    pub fn adjacency_mul(&self, x: &Matrix) -> Result<Matrix> {
        self.weighted_mul(x, false, |_, _| 1.0)
    }

    /// `Aᵀ · x` using edge weights.
    pub fn adjacency_t_mul(&self, x: &Matrix) -> Result<Matrix> {
        self.weighted_mul(x, true, |_, _| 1.0)
    }

    /// Row-parallel product with the (optionally transposed) adjacency, each
    /// stored weight multiplied by `scale(row, col)` of the untransposed matrix.
    fn weighted_mul(
        &self,
        x: &Matrix,
        transpose: bool,
        scale: impl Fn(usize, usize) -> f64 + Sync,
    ) -> Result<Matrix> {
        if x.rows() != self.n {
            return Err(Error::DimensionMismatch {
                op: "spmm",
                detail: format!("operator on {} nodes applied to {} rows", self.n, x.rows()),
            });
        }
        let width = x.cols();
        let mut out = Matrix::zeros(self.n, width);
        if width == 0 {
            return Ok(out);
        }
        out.as_mut_slice()
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, out_row)| {
                let (nbrs, weights) = if transpose {
                    (self.in_neighbors(i), self.in_weights(i))
                } else {
                    (self.out_neighbors(i), self.out_weights(i))
                };
                for (&j, &w) in nbrs.iter().zip(weights) {
                    let coef = if transpose {
                        w * scale(j, i)
                    } else {
                        w * scale(i, j)
                    };
                    for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                        *o += coef * v;
                    }
                }
            });
        Ok(out)
    }
}

/// Returns `g` with a unit-weight self-loop on every node that lacks one.
/// Existing self-loops keep their weight, so the operation is idempotent.
pub fn add_self_loops(g: &DirectedGraph) -> DirectedGraph {
    let mut edges = g.edges.clone();
    edges.extend(
        (0..g.n)
            .filter(|&i| !g.has_self_loop(i))
            .map(|i| Edge {
                source: i,
                target: i,
                weight: 1.0,
            }),
    );
    DirectedGraph::from_unique_edges(g.n, edges)
}

/// Self-loop-inclusive neighborhood sizes `|Ñ⁺(i)|` and `|Ñ⁻(i)|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVectors {
    pub out_deg: Vec<usize>,
    pub in_deg: Vec<usize>,
}

/// Degrees of a self-loop augmented graph.
pub fn degrees(g: &DirectedGraph) -> Result<DegreeVectors> {
    if let Some(i) = (0..g.n).find(|&i| !g.has_self_loop(i)) {
        return Err(Error::MissingSelfLoop(i));
    }
    Ok(DegreeVectors {
        out_deg: (0..g.n).map(|i| g.out_degree(i)).collect(),
        in_deg: (0..g.n).map(|i| g.in_degree(i)).collect(),
    })
}

/// The operator `Â = (D̃⁺)^(−β) Ã (D̃⁻)^(−α)`, kept in factored form.
#[derive(Debug, Clone)]
pub struct PropagationOperator {
    graph: DirectedGraph,
    alpha: f64,
    beta: f64,
    scale_out: Vec<f64>,
    scale_in: Vec<f64>,
}

/// Builds `Â` from a self-loop augmented graph.
pub fn build_operator(g: &DirectedGraph, alpha: f64, beta: f64) -> Result<PropagationOperator> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NonFiniteExponent { alpha, beta });
    }
    let deg = degrees(g)?;
    Ok(PropagationOperator {
        graph: g.clone(),
        alpha,
        beta,
        scale_out: deg.out_deg.iter().map(|&d| (d as f64).powf(-beta)).collect(),
        scale_in: deg.in_deg.iter().map(|&d| (d as f64).powf(-alpha)).collect(),
    })
}

impl PropagationOperator {
    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `deg⁺(i)^(−β)` per node.
    pub fn scale_out(&self) -> &[f64] {
        &self.scale_out
    }

    /// `deg⁻(i)^(−α)` per node.
    pub fn scale_in(&self) -> &[f64] {
        &self.scale_in
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.graph
            .weight(i, j)
            .map_or(0.0, |w| self.scale_out[i] * w * self.scale_in[j])
    }

    /// `Â · x`
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.graph
            .weighted_mul(x, false, |i, j| self.scale_out[i] * self.scale_in[j])
    }

    /// `Âᵀ · x`
    pub fn apply_transpose(&self, x: &Matrix) -> Result<Matrix> {
        self.graph
            .weighted_mul(x, true, |i, j| self.scale_out[i] * self.scale_in[j])
    }

    pub fn to_dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.graph.n, self.graph.n);
        for e in &self.graph.edges {
            a.set(e.source, e.target, self.entry(e.source, e.target));
        }
        a
    }
}

/// Simple undirected graph given by sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            adjacency[u].push(v);
            if u != v {
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        let (loops, others) = self
            .adjacency
            .iter()
            .enumerate()
            .fold((0, 0), |(l, o), (v, nbrs)| {
                let has_loop = nbrs.binary_search(&v).is_ok() as usize;
                (l + has_loop, o + nbrs.len() - has_loop)
            });
        loops + others / 2
    }

    /// Edges `{u, v}` with `u <= v`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v >= u).map(move |&v| (u, v)))
            .collect()
    }
}

/// Role of a node in the bipartite representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Source,
    Target,
}

/// Undirected bipartite graph on `2n` nodes: node `i` is the source copy of
/// original node `i`, node `i + n` its target copy, and every directed edge
/// `(i, j)` becomes `{i, j + n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    original_nodes: usize,
    graph: UndirectedGraph,
}

impl BipartiteGraph {
    pub fn original_node_count(&self) -> usize {
        self.original_nodes
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn role(&self, v: usize) -> Role {
        if v < self.original_nodes {
            Role::Source
        } else {
            Role::Target
        }
    }

    /// Initial labels: `s` (0) for source copies, `t` (1) for target copies.
    pub fn initial_labels(&self) -> Vec<u32> {
        (0..2 * self.original_nodes)
            .map(|v| match self.role(v) {
                Role::Source => 0,
                Role::Target => 1,
            })
            .collect()
    }
}

pub fn to_bipartite(g: &DirectedGraph) -> BipartiteGraph {
    let n = g.node_count();
    let graph = UndirectedGraph::new(2 * n, g.edge_pairs().map(|(i, j)| (i, j + n)))
        .expect("bipartite ids are in range by construction");
    BipartiteGraph {
        original_nodes: n,
        graph,
    }
}
