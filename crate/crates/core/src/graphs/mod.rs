//! Attributed-graph domain: the graph type, approximate graph edit distance
//! via bipartite assignment, Delaunay dataset generation and the graph-space
//! sample median used by the baseline detector.

mod delaunay;
mod ged;
mod generate;
mod lsap;

pub use delaunay::{delaunay_triangles, delaunay_triangulation, empty_circumcircle_holds};
pub use ged::{
    cross_distance_matrix, distance_matrix, distance_matrix_seq, graph_edit_distance,
    graph_set_median, set_median_index,
};
pub use generate::{
    class_template, generate_class_graph, generate_from_template, DelaunayClassSpec,
    NODE_NOISE_RADIUS,
};
pub use lsap::{solve_lsap, Assignment};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid cost matrix: {0}")]
    InvalidCostMatrix(String),
    #[error("invalid edit costs: {0}")]
    InvalidCosts(String),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("duplicate points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("degenerate point set: {0}")]
    DegeneratePointSet(String),
    #[error("empty graph sample")]
    EmptySample,
    #[error("graph generation failed after {0} retries")]
    RetriesExhausted(usize),
}

/// Undirected graph whose nodes carry planar coordinates. Edges are stored as
/// sorted `(i, j)` pairs with `i < j`, no duplicates, no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributedGraph {
    nodes: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
}

impl AttributedGraph {
    pub fn new(nodes: Vec<[f64; 2]>, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::InvalidGraph(format!("self-loop at {a}")));
            }
            if a >= n || b >= n {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({a},{b}) out of range for {n} nodes"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(GraphError::InvalidGraph("duplicate edge".into()));
        }
        Ok(AttributedGraph { nodes, edges: norm })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| *a == i || *b == i)
            .count()
    }

    /// Relabel nodes by `perm` (new index of node `i` is `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        if perm.len() != self.nodes.len() {
            return Err(GraphError::InvalidGraph(
                "permutation length mismatch".into(),
            ));
        }
        let mut nodes = vec![[0.0; 2]; self.nodes.len()];
        for (i, &p) in perm.iter().enumerate() {
            nodes[p] = self.nodes[i];
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        AttributedGraph::new(nodes, edges)
    }

    /// One-line JSON form: `{"nodes": [[x,y],...], "edges": [[i,j],...]}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn from_json_line(line: &str) -> Result<Self, GraphError> {
        let raw: AttributedGraph = serde_json::from_str(line)
            .map_err(|e| GraphError::InvalidGraph(format!("bad JSON graph line: {e}")))?;
        AttributedGraph::new(raw.nodes, raw.edges)
    }
}

/// Edit cost parameters for the approximate graph edit distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditCostParams {
    /// Cost of inserting or deleting a node.
    pub node_insert_delete: f64,
    /// Cost of inserting or deleting an edge.
    pub edge_insert_delete: f64,
    /// Cap on the Euclidean attribute substitution cost; keeps substitution
    /// competitive with delete-plus-insert.
    pub substitution_cap: f64,
}

impl Default for EditCostParams {
    fn default() -> Self {
        EditCostParams {
            node_insert_delete: 1.0,
            edge_insert_delete: 0.5,
            substitution_cap: 2.0,
        }
    }
}

impl EditCostParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.node_insert_delete <= 0.0
            || self.edge_insert_delete <= 0.0
            || self.substitution_cap <= 0.0
        {
            return Err(GraphError::InvalidCosts(
                "costs must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    pub fn substitution(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        d.min(self.substitution_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_construction_normalises_edges() {
        let g = AttributedGraph::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![(2, 0), (0, 1)],
        )
        .unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(1, 2));
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(AttributedGraph::new(vec![[0.0, 0.0]], vec![(0, 0)]).is_err());
        assert!(AttributedGraph::new(vec![[0.0, 0.0]], vec![(0, 1)]).is_err());
        assert!(AttributedGraph::new(vec![[0.0, 0.0], [1.0, 1.0]], vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = AttributedGraph::new(vec![[0.5, -1.25], [2.0, 3.0]], vec![(0, 1)]).unwrap();
        let line = g.to_json_line();
        assert!(line.starts_with("{\"nodes\":[[0.5,-1.25],"));
        let back = AttributedGraph::from_json_line(&line).unwrap();
        assert_eq!(g, back);
    }
}
