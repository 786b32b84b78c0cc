//! Truncated SVD by Lanczos and by randomized range finding, then the SVD
//! and HOPE/Katz embeddings of a graph.
//!
//!     cargo run --release --example spectral_baselines

use digae::dataset::{random_digraph, synthetic_citation, SyntheticSpec};
use digae::linkpred::{evaluate, make_split};
use digae::spectral::{adjacency_operator, hope_embeddings, svd_link_embeddings, truncated_svd, SvdMethod};

fn main() -> digae::Result<()> {
    let g = random_digraph(300, 0.02, 7)?;
    let a = adjacency_operator(&g);
    let lanczos = truncated_svd(&a, 5, SvdMethod::Lanczos, 0)?;
    let randomized = truncated_svd(&a, 5, SvdMethod::Randomized, 0)?;
    println!("lanczos    {:.6?}", lanczos.sigma);
    println!("randomized {:.6?}", randomized.sigma);

    let ds = synthetic_citation(&SyntheticSpec::default())?;
    let split = make_split(&ds.graph, 0)?;
    let g_train = split.train_graph()?;
    for k in [4, 16, 64] {
        let svd = svd_link_embeddings(&g_train, k, SvdMethod::Randomized, 0)?;
        let hope = hope_embeddings(&g_train, k, 0.02, SvdMethod::Randomized, 0)?;
        let s = evaluate(&svd, &split.test_pos, &split.test_neg)?;
        let h = evaluate(&hope, &split.test_pos, &split.test_neg)?;
        println!("k={k:>3}  svd AUC {:.3} AP {:.3}  hope AUC {:.3} AP {:.3}", s.auc, s.ap, h.auc, h.ap);
    }
    Ok(())
}
