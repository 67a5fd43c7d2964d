//! Approximate graph edit distance through bipartite assignment: build the
//! (n+m) x (n+m) node substitution/insertion/deletion cost matrix with local
//! edge terms, solve the assignment, and charge the edit path the node
//! mapping induces. The result upper-bounds the exact edit distance; the
//! reported value is symmetrised over both argument orders.

use super::lsap::solve_lsap;
use super::{AttributedGraph, EditCostParams, GraphError};
use crate::embedding::DissimilarityMatrix;
use crate::parallel;

/// Larger than any real entry of a GED cost matrix; keeps forbidden
/// epsilon-to-wrong-node assignments out of the optimum while staying finite
/// for the assignment solver.
const FORBIDDEN: f64 = 1e9;

fn bipartite_matrix(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    costs: &EditCostParams,
) -> (usize, Vec<f64>) {
    let n = g1.node_count();
    let m = g2.node_count();
    let size = n + m;
    let mut c = vec![0.0; size * size];
    for i in 0..n {
        let deg1 = g1.degree(i) as f64;
        for j in 0..m {
            c[i * size + j] = costs.substitution(g1.nodes()[i], g2.nodes()[j])
                + costs.edge_insert_delete * (deg1 - g2.degree(j) as f64).abs();
        }
        for k in 0..n {
            c[i * size + (m + k)] = if k == i {
                costs.node_insert_delete + costs.edge_insert_delete * deg1
            } else {
                FORBIDDEN
            };
        }
    }
    for k in 0..m {
        for j in 0..m {
            c[(n + k) * size + j] = if k == j {
                costs.node_insert_delete + costs.edge_insert_delete * g2.degree(j) as f64
            } else {
                FORBIDDEN
            };
        }
        // epsilon-to-epsilon stays zero
    }
    (size, c)
}

/// Edit cost charged by the node mapping: substitutions, node
/// insertions/deletions, and every edge operation the mapping forces.
fn induced_cost(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    map_to: &[Option<usize>],
    costs: &EditCostParams,
) -> f64 {
    let mut mapped_from: Vec<Option<usize>> = vec![None; g2.node_count()];
    let mut total = 0.0;
    for (i, target) in map_to.iter().enumerate() {
        match target {
            Some(j) => {
                mapped_from[*j] = Some(i);
                total += costs.substitution(g1.nodes()[i], g2.nodes()[*j]);
            }
            None => total += costs.node_insert_delete,
        }
    }
    total += costs.node_insert_delete
        * mapped_from.iter().filter(|x| x.is_none()).count() as f64;

    for &(a, b) in g1.edges() {
        match (map_to[a], map_to[b]) {
            (Some(ja), Some(jb)) => {
                if !g2.has_edge(ja, jb) {
                    total += costs.edge_insert_delete;
                }
            }
            _ => total += costs.edge_insert_delete,
        }
    }
    for &(a, b) in g2.edges() {
        match (mapped_from[a], mapped_from[b]) {
            (Some(ia), Some(ib)) => {
                if !g1.has_edge(ia, ib) {
                    total += costs.edge_insert_delete;
                }
            }
            _ => total += costs.edge_insert_delete,
        }
    }
    total
}

fn bp_directed(g1: &AttributedGraph, g2: &AttributedGraph, costs: &EditCostParams) -> f64 {
    let n = g1.node_count();
    let m = g2.node_count();
    if n == 0 && m == 0 {
        return 0.0;
    }
    let (size, c) = bipartite_matrix(g1, g2, costs);
    let assignment = solve_lsap(size, &c).expect("GED cost matrix is square and finite");
    let map_to: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let j = assignment.row_to_col[i];
            if j < m {
                Some(j)
            } else {
                None
            }
        })
        .collect();
    induced_cost(g1, g2, &map_to, costs)
}

/// Symmetrised bipartite approximation of the graph edit distance.
pub fn graph_edit_distance(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    costs: &EditCostParams,
) -> f64 {
    if g1 == g2 {
        return 0.0;
    }
    0.5 * (bp_directed(g1, g2, costs) + bp_directed(g2, g1, costs))
}

/// Pairwise GED matrix over a graph set, computed concurrently over index
/// pairs and merged in order.
pub fn distance_matrix(graphs: &[AttributedGraph], costs: &EditCostParams) -> DissimilarityMatrix {
    let n = graphs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values = parallel::map_indexed(pairs.len(), |p| {
        let (i, j) = pairs[p];
        graph_edit_distance(&graphs[i], &graphs[j], costs)
    });
    assemble(n, &pairs, values)
}

/// Sequential variant of [`distance_matrix`] for benchmarking.
pub fn distance_matrix_seq(
    graphs: &[AttributedGraph],
    costs: &EditCostParams,
) -> DissimilarityMatrix {
    let n = graphs.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values = parallel::map_indexed_seq(pairs.len(), |p| {
        let (i, j) = pairs[p];
        graph_edit_distance(&graphs[i], &graphs[j], costs)
    });
    assemble(n, &pairs, values)
}

fn assemble(n: usize, pairs: &[(usize, usize)], values: Vec<f64>) -> DissimilarityMatrix {
    let mut flat = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        flat[i * n + j] = v;
        flat[j * n + i] = v;
    }
    DissimilarityMatrix::from_raw(n, flat).expect("constructed symmetric matrix")
}

/// Row-major `a.len() x b.len()` GED block between two graph sets.
pub fn cross_distance_matrix(
    a: &[AttributedGraph],
    b: &[AttributedGraph],
    costs: &EditCostParams,
) -> Vec<f64> {
    let cols = b.len();
    parallel::map_indexed(a.len() * cols, |idx| {
        graph_edit_distance(&a[idx / cols], &b[idx % cols], costs)
    })
}

/// Index of the sample member minimising the summed squared distances to the
/// rest, given the precomputed pairwise matrix. Ties break to the lowest
/// index.
pub fn set_median_index(d: &DissimilarityMatrix) -> Result<usize, GraphError> {
    let n = d.size();
    if n == 0 {
        return Err(GraphError::EmptySample);
    }
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for i in 0..n {
        let score: f64 = (0..n).map(|j| d.get(i, j).powi(2)).sum();
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

/// Set median of a graph sample under the squared-distance criterion.
pub fn graph_set_median(
    sample: &[AttributedGraph],
    costs: &EditCostParams,
) -> Result<AttributedGraph, GraphError> {
    let d = distance_matrix(sample, costs);
    Ok(sample[set_median_index(&d)?].clone())
}
