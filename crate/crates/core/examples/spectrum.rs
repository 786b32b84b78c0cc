//! Leading singular values of the propagation operator as the degree
//! exponents grow.
//!
//!     cargo run --release --example spectrum

use digae::dataset::{synthetic_citation, SyntheticSpec};
use digae::graph::add_self_loops;
use digae::spectral::spectrum_study;

fn main() -> digae::Result<()> {
    let ds = synthetic_citation(&SyntheticSpec::default())?;
    let g = add_self_loops(&ds.graph);
    let pairs: Vec<(f64, f64)> = [0.0, 0.3, 0.5, 0.8, 1.0].iter().map(|&e| (e, e)).collect();
    for s in spectrum_study(&g, &pairs, Some(5))? {
        println!("alpha=beta={:.1}: {:.4?}", s.alpha, s.singular_values);
    }
    // Unbalanced exponents.
    for s in spectrum_study(&g, &[(0.8, 0.2), (0.2, 0.8)], Some(1))? {
        println!("alpha={} beta={}: sigma_max {:.4}", s.alpha, s.beta, s.singular_values[0]);
    }
    Ok(())
}
