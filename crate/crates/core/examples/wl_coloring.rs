//! Directed pair coloring on the six-node example graph and the check
//! that it matches 1-WL on the bipartite representation.
//!
//!     cargo run --example wl_coloring

use digae::fixtures::bowtie_graph;
use digae::graph::to_bipartite;
use digae::wl::{reduction_report, wl_refine_directed_history, wl_refine_undirected, UndirectedColorState};

fn main() {
    let g = bowtie_graph();
    for state in wl_refine_directed_history(&g, 10) {
        println!(
            "round {}: source {:?} target {:?}",
            state.iteration, state.source_colors, state.target_colors
        );
    }

    let b = to_bipartite(&g);
    let start = UndirectedColorState::from_labels(&b.initial_labels());
    let fixed = wl_refine_undirected(b.graph(), &start, 20);
    println!("bipartite colors {:?} ({} classes)", fixed.colors, fixed.class_count());

    let report = reduction_report(&g);
    println!("class counts per round {:?}", report.class_counts);
    println!("reduction check = {}", report.holds);
}
