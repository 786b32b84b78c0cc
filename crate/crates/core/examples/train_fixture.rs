//! Trains DiGAE and DiGAE-1L on the six-node graph with one-hot features and
//! prints the reconstructed edge probabilities.
//!
//!     cargo run --example train_fixture

use digae::fixtures::bowtie_graph;
use digae::graph::{add_self_loops, build_operator};
use digae::linalg::FeatureMatrix;
use digae::model::{edge_probability, encode};
use digae::train::{train, TrainConfig};

fn main() -> digae::Result<()> {
    let g = bowtie_graph();
    let x = FeatureMatrix::identity(g.node_count());
    for depth in [2, 1] {
        let cfg = TrainConfig {
            depth,
            hidden_dim: 8,
            latent_dim: 4,
            ..TrainConfig::default()
        };
        let out = train(&g, &x, &cfg)?;
        let first = out.loss_trace[0];
        let last = *out.loss_trace.last().unwrap();
        println!("depth {depth}: loss {first:.4} -> {last:.4}");

        let op = build_operator(&add_self_loops(&g), cfg.alpha, cfg.beta)?;
        let z = encode(&out.params, &op, &x, &x)?;
        for (i, j) in [(0, 3), (3, 0), (3, 4), (4, 3), (0, 1)] {
            let edge = if g.has_edge(i, j) { "edge" } else { "    " };
            println!("  {edge} p({i} -> {j}) = {:.3}", edge_probability(&z, i, j)?);
        }
    }
    Ok(())
}
