//! A small DiGAE-1L grid over the degree exponents, selected by validation
//! AUC, with the α×β heatmap written to stdout.
//!
//!     cargo run --release --example grid_search

use digae::dataset::{synthetic_citation, SyntheticSpec};
use digae::linkpred::{grid_search, write_heatmap_csv, DigaeGrid, ModelSpec, SplitOptions};
use digae::train::TrainConfig;

fn main() -> digae::Result<()> {
    let ds = synthetic_citation(&SyntheticSpec::default())?;
    let grid = DigaeGrid {
        learning_rates: vec![0.01],
        hidden_dims: vec![32],
        alphas: vec![0.0, 0.4, 0.8],
        betas: vec![0.0, 0.4, 0.8],
    };
    let base = TrainConfig {
        depth: 1,
        epochs: 100,
        ..TrainConfig::default()
    };
    let report = grid_search(&ds, &grid.cells(&base), 2, 0, SplitOptions::default())?;
    if let ModelSpec::Digae(cfg) = &report.best_cell().spec {
        println!("best: alpha={} beta={} val AUC {:.4}", cfg.alpha, cfg.beta, report.best_cell().val_auc.mean);
    }
    println!("validation AUC spread {:.4}", report.val_auc_spread());
    write_heatmap_csv(&report, std::io::stdout())
}
