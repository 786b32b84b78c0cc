//! Directed graph auto-encoders.
//!
//! Nodes get separate source and target encodings, learned by propagating
//! over a degree-normalized adjacency `Â = (D̃⁺)^(−β) Ã (D̃⁻)^(−α)` with
//! tunable exponents. Around the model sit a directed Weisfeiler-Leman
//! pair coloring, a link-prediction benchmark with spectral baselines, and
//! centrality analytics on learned embeddings.

pub mod analytics;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod linkpred;
pub mod model;
pub mod spectral;
pub mod train;
pub mod wl;

pub use error::{Error, ErrorClass, Result};
pub use graph::{add_self_loops, build_operator, DirectedGraph, PropagationOperator};
pub use linalg::{FeatureMatrix, Matrix};
pub use model::{decode_pairs, encode, EncodingPair, ModelParams};
