//! Writes source and target encodings to CSV for external plotting.
//!
//!     cargo run --release --example export_embeddings -- out.csv

use std::fs::File;

use digae::dataset::{synthetic_citation, SyntheticSpec};
use digae::graph::{add_self_loops, build_operator};
use digae::model::{encode, write_embeddings_csv, write_params};
use digae::train::{train, TrainConfig};

fn main() -> digae::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "embeddings.csv".into());
    let ds = synthetic_citation(&SyntheticSpec {
        nodes: 300,
        ..Default::default()
    })?;
    let cfg = TrainConfig::default().with_hidden(16);
    let out = train(&ds.graph, &ds.features, &cfg)?;
    let op = build_operator(&add_self_loops(&ds.graph), cfg.alpha, cfg.beta)?;
    let z = encode(&out.params, &op, &ds.features, &ds.features)?;
    write_embeddings_csv(&z, File::create(&path)?)?;

    let mut bin = Vec::new();
    write_params(&out.params, &mut bin)?;
    println!("{} rows of width {} written to {path}; params take {} bytes", 2 * z.node_count(), z.dim(), bin.len());
    Ok(())
}
