//! Loads a `.content`/`.cites` pair. With no arguments a synthetic dataset
//! is written to a temporary directory first and read back.
//!
//!     cargo run --example load_citation -- data/coraml/coraml.content data/coraml/coraml.cites

use std::fs::File;

use digae::dataset::{load_citation, synthetic_citation, write_citation, CitationOrientation, SyntheticSpec};

fn main() -> digae::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::env::temp_dir().join("digae-load-citation");
    let (content, cites) = if let [c, e] = args.as_slice() {
        (c.into(), e.into())
    } else {
        std::fs::create_dir_all(&dir)?;
        let ds = synthetic_citation(&SyntheticSpec::default())?;
        let (c, e) = (dir.join("toy.content"), dir.join("toy.cites"));
        write_citation(&ds, File::create(&c)?, File::create(&e)?, CitationOrientation::CitingToCited)?;
        (c, e)
    };
    let ds = load_citation(&content, &cites, CitationOrientation::CitingToCited)?;
    println!(
        "{}: n={} m={} k0={} classes={} {:?}",
        ds.name,
        ds.node_count(),
        ds.edge_count(),
        ds.feature_dim(),
        ds.class_count(),
        ds.class_names
    );
    println!(
        "dropped: {} dangling, {} duplicate, {} self-citations",
        ds.stats.dangling_edges, ds.stats.duplicate_edges, ds.stats.self_loops
    );
    Ok(())
}
