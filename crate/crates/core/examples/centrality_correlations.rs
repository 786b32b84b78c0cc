//! Trains DiGAE-1L on a whole graph and correlates the length of each
//! node's source and target encodings with its centralities.
//!
//!     cargo run --release --example centrality_correlations

use digae::analytics::{centrality_scores, magnitude_correlations, write_correlations_csv, Magnitude};
use digae::dataset::{synthetic_citation, SyntheticSpec};
use digae::graph::{add_self_loops, build_operator};
use digae::model::encode;
use digae::train::{train, TrainConfig};

fn main() -> digae::Result<()> {
    let ds = synthetic_citation(&SyntheticSpec::default())?;
    let cfg = TrainConfig {
        depth: 1,
        ..TrainConfig::default()
    };
    let out = train(&ds.graph, &ds.features, &cfg)?;
    let op = build_operator(&add_self_loops(&ds.graph), cfg.alpha, cfg.beta)?;
    let z = encode(&out.params, &op, &ds.features, &ds.features)?;

    let scores = centrality_scores(&ds.graph)?;
    let top = scores.authority.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    println!("top authority: node {} ({:.3}), indegree {}", top.0, top.1, scores.indegree[top.0]);

    let table = magnitude_correlations(&z, &scores, Magnitude::L2)?;
    write_correlations_csv(&table, std::io::stdout())
}
