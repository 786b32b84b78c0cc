//! Weisfeiler-Leman color refinement.
//!
//! [`wl_refine_undirected`] is classic 1-WL. [`wl_refine_directed`] keeps a
//! (source, target) color pair per node: the source color absorbs the target
//! colors of out-neighbors, the target color absorbs the source colors of
//! in-neighbors. [`check_reduction`] runs the directed variant next to 1-WL
//! on the bipartite representation and compares the partitions step by step.
//!
//! Hashing is exact: each signature `(own color, sorted neighbor colors)` is
//! a key in an ordered map and the new color is its rank among the distinct
//! signatures of the round. Colors therefore depend only on the previous
//! coloring, never on node ids.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::graph::{to_bipartite, DirectedGraph, UndirectedGraph};

pub type Color = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedColorState {
    pub colors: Vec<Color>,
    pub iteration: usize,
}

/// Per-node (source, target) colors. Each role has its own dense color
/// range starting at 0; a source color and a target color with the same
/// number are unrelated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorState {
    pub source_colors: Vec<Color>,
    pub target_colors: Vec<Color>,
    pub iteration: usize,
}

impl ColorState {
    pub fn initial(n: usize) -> Self {
        Self {
            source_colors: vec![0; n],
            target_colors: vec![0; n],
            iteration: 0,
        }
    }

    pub fn source_class_count(&self) -> usize {
        class_count(&self.source_colors)
    }

    pub fn target_class_count(&self) -> usize {
        class_count(&self.target_colors)
    }
}

impl UndirectedColorState {
    /// Uniform coloring.
    pub fn uniform(n: usize) -> Self {
        Self {
            colors: vec![0; n],
            iteration: 0,
        }
    }

    /// Any labeling, renumbered densely in ascending label order.
    pub fn from_labels(labels: &[Color]) -> Self {
        Self {
            colors: relabel(labels.to_vec()),
            iteration: 0,
        }
    }

    pub fn class_count(&self) -> usize {
        class_count(&self.colors)
    }
}

/// Number of distinct values.
pub fn class_count(colors: &[Color]) -> usize {
    let mut sorted = colors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len()
}

/// Dense ranks of the distinct keys, in key order.
fn relabel<K: Ord + Clone>(signatures: Vec<K>) -> Vec<Color> {
    let mut table: BTreeMap<K, Color> = signatures.iter().cloned().map(|k| (k, 0)).collect();
    for (rank, value) in table.values_mut().enumerate() {
        *value = rank as Color;
    }
    signatures.iter().map(|k| table[k]).collect()
}

/// True when `a` and `b` induce the same partition of the index set.
pub fn same_partition<A, B>(a: &[A], b: &[B]) -> bool
where
    A: std::hash::Hash + Eq,
    B: std::hash::Hash + Eq,
{
    if a.len() != b.len() {
        return false;
    }
    let mut forward: HashMap<&A, &B> = HashMap::new();
    let mut backward: HashMap<&B, &A> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        if *forward.entry(x).or_insert(y) != y || *backward.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

fn undirected_step(g: &UndirectedGraph, colors: &[Color]) -> Vec<Color> {
    let signatures: Vec<(Color, Vec<Color>)> = (0..g.node_count())
        .into_par_iter()
        .map(|v| {
            let mut nbr: Vec<Color> = g.neighbors(v).iter().map(|&w| colors[w]).collect();
            nbr.sort_unstable();
            (colors[v], nbr)
        })
        .collect();
    relabel(signatures)
}

/// Every coloring from the initial one up to the fixed point (inclusive).
pub fn wl_refine_undirected_history(
    g: &UndirectedGraph,
    initial: &UndirectedColorState,
    max_iters: usize,
) -> Vec<UndirectedColorState> {
    let mut history = vec![UndirectedColorState {
        colors: relabel(initial.colors.clone()),
        iteration: 0,
    }];
    for t in 1..=max_iters {
        let prev = history.last().expect("non-empty");
        let colors = undirected_step(g, &prev.colors);
        let stable = class_count(&colors) == prev.class_count();
        history.push(UndirectedColorState {
            colors,
            iteration: t,
        });
        if stable {
            break;
        }
    }
    history
}

/// 1-WL refinement. Stops when the number of color classes stops growing or
/// after `max_iters` rounds.
pub fn wl_refine_undirected(
    g: &UndirectedGraph,
    initial: &UndirectedColorState,
    max_iters: usize,
) -> UndirectedColorState {
    wl_refine_undirected_history(g, initial, max_iters)
        .pop()
        .expect("history holds at least the initial state")
}

fn directed_step(g: &DirectedGraph, state: &ColorState) -> (Vec<Color>, Vec<Color>) {
    let n = g.node_count();
    let source_sigs: Vec<(Color, Vec<Color>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut nbr: Vec<Color> = g
                .out_neighbors(i)
                .iter()
                .map(|&j| state.target_colors[j])
                .collect();
            nbr.sort_unstable();
            (state.source_colors[i], nbr)
        })
        .collect();
    let target_sigs: Vec<(Color, Vec<Color>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut nbr: Vec<Color> = g
                .in_neighbors(i)
                .iter()
                .map(|&j| state.source_colors[j])
                .collect();
            nbr.sort_unstable();
            (state.target_colors[i], nbr)
        })
        .collect();
    (relabel(source_sigs), relabel(target_sigs))
}

/// Every directed pair coloring from the initial one up to the fixed point.
pub fn wl_refine_directed_history(g: &DirectedGraph, max_iters: usize) -> Vec<ColorState> {
    let mut history = vec![ColorState::initial(g.node_count())];
    for t in 1..=max_iters {
        let prev = history.last().expect("non-empty");
        let (source_colors, target_colors) = directed_step(g, prev);
        let next = ColorState {
            source_colors,
            target_colors,
            iteration: t,
        };
        // Both roles must stop growing in the same round.
        let stable = next.source_class_count() == prev.source_class_count()
            && next.target_class_count() == prev.target_class_count();
        history.push(next);
        if stable {
            break;
        }
    }
    history
}

/// Directed pair-coloring refinement.
pub fn wl_refine_directed(g: &DirectedGraph, max_iters: usize) -> ColorState {
    wl_refine_directed_history(g, max_iters)
        .pop()
        .expect("history holds at least the initial state")
}

/// Per-iteration comparison between the directed pair coloring of `g` and
/// 1-WL on its bipartite representation.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ReductionReport {
    pub holds: bool,
    pub directed_iterations: usize,
    pub bipartite_iterations: usize,
    /// (source classes, target classes, bipartite classes) per iteration.
    pub class_counts: Vec<(usize, usize, usize)>,
    pub first_mismatch: Option<usize>,
}

pub fn reduction_report(g: &DirectedGraph) -> ReductionReport {
    let n = g.node_count();
    let max_iters = 2 * n.max(1);
    let directed = wl_refine_directed_history(g, max_iters);
    let bipartite = to_bipartite(g);
    let start = UndirectedColorState::from_labels(&bipartite.initial_labels());
    let undirected = wl_refine_undirected_history(bipartite.graph(), &start, max_iters);

    let rounds = directed.len().max(undirected.len());
    let mut class_counts = Vec::with_capacity(rounds);
    let mut first_mismatch = None;
    for t in 0..rounds {
        // A finished run keeps its fixed-point coloring.
        let d = &directed[t.min(directed.len() - 1)];
        let u = &undirected[t.min(undirected.len() - 1)];
        let directed_pairs: Vec<(Color, Color)> = d
            .source_colors
            .iter()
            .copied()
            .zip(d.target_colors.iter().copied())
            .collect();
        let bipartite_pairs: Vec<(Color, Color)> =
            (0..n).map(|i| (u.colors[i], u.colors[i + n])).collect();
        class_counts.push((
            d.source_class_count(),
            d.target_class_count(),
            u.class_count(),
        ));
        if first_mismatch.is_none() && !same_partition(&directed_pairs, &bipartite_pairs) {
            first_mismatch = Some(t);
        }
    }
    ReductionReport {
        holds: first_mismatch.is_none(),
        directed_iterations: directed.last().map_or(0, |s| s.iteration),
        bipartite_iterations: undirected.last().map_or(0, |s| s.iteration),
        class_counts,
        first_mismatch,
    }
}

/// True iff at every iteration the partition of nodes by their directed
/// (source, target) color pair equals the partition by the bipartite colors
/// of `(i, i + n)`.
pub fn check_reduction(g: &DirectedGraph) -> bool {
    reduction_report(g).holds
}
