//! The encoder written as per-node message passing, checked against the
//! matrix form, and one block-structured 1-GNN step on the bipartite graph.
//!
//!     cargo run --example message_passing

use digae::dataset::random_digraph;
use digae::graph::{add_self_loops, build_operator, to_bipartite};
use digae::linalg::{FeatureMatrix, Matrix};
use digae::model::{
    bipartite_features, block_gnn_step, encode, message_passing_encode, Activation, BlockWeights, EncodingPair,
    ModelParams,
};
use digae::train::{init_params, TrainConfig};

fn main() -> digae::Result<()> {
    let g = random_digraph(12, 0.2, 3)?;
    let x = Matrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0);
    let cfg = TrainConfig {
        hidden_dim: 4,
        latent_dim: 2,
        alpha: 0.3,
        beta: 0.7,
        ..TrainConfig::default()
    };
    let params: ModelParams = init_params(&cfg, 3, 1)?;

    let op = build_operator(&add_self_loops(&g), cfg.alpha, cfg.beta)?;
    let f = FeatureMatrix::Dense(x.clone());
    let dense = encode(&params, &op, &f, &f)?;
    let mp = message_passing_encode(&params, &g, &EncodingPair::new(x.clone(), x.clone())?)?;
    let gap = dense.s.sub(&mp.s)?.max_abs().max(dense.t.sub(&mp.t)?.max_abs());
    println!("matrix form vs message passing: max |diff| = {gap:.2e}");

    // Zero self weights: each source copy sums its out-neighbors' target
    // features, each target copy its in-neighbors' source features.
    let e = 3;
    let w = BlockWeights {
        w1s: Matrix::zeros(e, e),
        w1t: Matrix::zeros(e, e),
        w2s: Matrix::identity(e),
        w2t: Matrix::identity(e),
    };
    let enc = EncodingPair::new(x.clone(), x)?;
    let out = block_gnn_step(&to_bipartite(&g), &bipartite_features(&enc), &w, Activation::Identity)?;
    let n = g.node_count();
    let direct = g.adjacency_mul(&enc.t)?;
    println!("node 0 as source: {:?}", &out.row(0)[..e]);
    println!("A·T row 0:        {:?}", direct.row(0));
    println!("node 0 target block: {:?}", &out.row(n)[e..]);
    Ok(())
}
