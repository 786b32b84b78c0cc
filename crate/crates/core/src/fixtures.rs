//! Small graphs used in docs, examples and tests.

use crate::graph::DirectedGraph;

/// Edge list of the six-node example graph: three nodes point at node 3,
/// which points at nodes 4 and 5.
pub const BOWTIE_EDGES: [(usize, usize); 5] = [(0, 3), (1, 3), (2, 3), (3, 4), (3, 5)];

pub fn bowtie_graph() -> DirectedGraph {
    DirectedGraph::from_pairs(6, BOWTIE_EDGES).expect("fixture is valid")
}
