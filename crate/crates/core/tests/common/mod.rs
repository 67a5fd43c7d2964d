//! Shared test support: independent oracles (exhaustive graph edit distance,
//! dense Fréchet grid search, exhaustive k-centres) and random data
//! generators. Deliberately written from the definitions, not by calling the
//! library paths they are used to check.

#![allow(dead_code)]

use ccm_core::graphs::{AttributedGraph, EditCostParams};
use ccm_core::manifold::{self, Curvature};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Cost of the edit path induced by a node mapping (None = delete), written
/// out from the edit-cost definition.
fn mapping_cost(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    map_to: &[Option<usize>],
    costs: &EditCostParams,
) -> f64 {
    let mut total = 0.0;
    let mut hit = vec![false; g2.node_count()];
    for (i, t) in map_to.iter().enumerate() {
        match t {
            Some(j) => {
                hit[*j] = true;
                let a = g1.nodes()[i];
                let b = g2.nodes()[*j];
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                total += d.min(costs.substitution_cap);
            }
            None => total += costs.node_insert_delete,
        }
    }
    total += costs.node_insert_delete * hit.iter().filter(|h| !**h).count() as f64;
    for &(a, b) in g1.edges() {
        match (map_to[a], map_to[b]) {
            (Some(x), Some(y)) if g2.has_edge(x, y) => {}
            _ => total += costs.edge_insert_delete,
        }
    }
    let mut from = vec![None; g2.node_count()];
    for (i, t) in map_to.iter().enumerate() {
        if let Some(j) = t {
            from[*j] = Some(i);
        }
    }
    for &(a, b) in g2.edges() {
        match (from[a], from[b]) {
            (Some(x), Some(y)) if g1.has_edge(x, y) => {}
            _ => total += costs.edge_insert_delete,
        }
    }
    total
}

/// Exact graph edit distance by exhaustive enumeration of node mappings;
/// exponential, intended for graphs of at most ~5 nodes.
pub fn exact_ged(g1: &AttributedGraph, g2: &AttributedGraph, costs: &EditCostParams) -> f64 {
    let n = g1.node_count();
    let m = g2.node_count();
    let mut best = f64::INFINITY;
    let mut map_to: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; m];
    fn recurse(
        i: usize,
        g1: &AttributedGraph,
        g2: &AttributedGraph,
        costs: &EditCostParams,
        map_to: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if i == map_to.len() {
            let c = mapping_cost(g1, g2, map_to, costs);
            if c < *best {
                *best = c;
            }
            return;
        }
        map_to[i] = None;
        recurse(i + 1, g1, g2, costs, map_to, used, best);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                map_to[i] = Some(j);
                recurse(i + 1, g1, g2, costs, map_to, used, best);
                map_to[i] = None;
                used[j] = false;
            }
        }
    }
    recurse(0, g1, g2, costs, &mut map_to, &mut used, &mut best);
    best
}

/// Random small attributed graph (n nodes, random edges, coords in a box).
pub fn random_small_graph(rng: &mut ChaCha12Rng, max_nodes: usize, box_side: f64) -> AttributedGraph {
    let n = rng.random_range(0..=max_nodes);
    let nodes: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random::<f64>() * box_side, rng.random::<f64>() * box_side])
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.5 {
                edges.push((i, j));
            }
        }
    }
    AttributedGraph::new(nodes, edges).unwrap()
}

/// Random point on the manifold of curvature `kappa` with ambient dimension
/// `ambient`, spread controlled by `scale` (tangent-space standard
/// deviations relative to the radius for curved geometries).
pub fn random_point(
    rng: &mut ChaCha12Rng,
    kappa: Curvature,
    ambient: usize,
    scale: f64,
) -> Vec<f64> {
    match kappa.radius() {
        None => (0..ambient).map(|_| gaussian(rng) * scale).collect(),
        Some(r) => {
            let mut apex = vec![0.0; ambient];
            apex[0] = r;
            let mut t = vec![0.0; ambient];
            for v in t.iter_mut().skip(1) {
                *v = gaussian(rng) * scale * r;
            }
            manifold::exp_map(&apex, &t, kappa).unwrap()
        }
    }
}

/// Dense grid search of the Fréchet objective. For curved geometries the
/// candidates are exponential-map images of a tangent grid at the first
/// point; the returned value is the best objective over roughly
/// `per_axis^2` candidates.
pub fn frechet_grid_best(points: &[Vec<f64>], kappa: Curvature, per_axis: usize) -> f64 {
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    match kappa.radius() {
        None => {
            // arithmetic mean is the known optimum; scan a box around it
            let mut mean = vec![0.0; dim];
            for p in points {
                for (m, v) in mean.iter_mut().zip(p) {
                    *m += v / points.len() as f64;
                }
            }
            let spread = points
                .iter()
                .flat_map(|p| p.iter().zip(&mean).map(|(v, m)| (v - m).abs()))
                .fold(0.0f64, f64::max)
                .max(1e-6);
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let mut cand = mean.clone();
                    cand[0] += spread * (2.0 * i as f64 / (per_axis - 1) as f64 - 1.0);
                    if dim > 1 {
                        cand[1] += spread * (2.0 * j as f64 / (per_axis - 1) as f64 - 1.0);
                    }
                    best = best.min(manifold::frechet_objective(&cand, points, kappa).unwrap());
                }
            }
            best
        }
        Some(r) => {
            let base = &points[0];
            // orthonormal tangent basis at base via Gram-Schmidt of the
            // projected coordinate axes
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for axis in 0..dim {
                let mut e = vec![0.0; dim];
                e[axis] = 1.0;
                // remove the radial component
                let radial = if kappa.value() > 0.0 {
                    manifold::scalar_product(base, &e, kappa).unwrap() / (r * r)
                } else {
                    -manifold::scalar_product(base, &e, kappa).unwrap() / (r * r)
                };
                let mut t: Vec<f64> = e.iter().zip(base).map(|(v, b)| v - radial * b).collect();
                for prev in &basis {
                    let ip = manifold::scalar_product(&t, prev, kappa).unwrap();
                    for (ti, pi) in t.iter_mut().zip(prev) {
                        *ti -= ip * pi;
                    }
                }
                let norm = manifold::scalar_product(&t, &t, kappa).unwrap().max(0.0).sqrt();
                if norm > 1e-8 {
                    for ti in t.iter_mut() {
                        *ti /= norm;
                    }
                    basis.push(t);
                }
                if basis.len() == 2 {
                    break;
                }
            }
            let reach = points
                .iter()
                .map(|p| manifold::geodesic_distance(base, p, kappa).unwrap())
                .fold(0.0f64, f64::max)
                .max(1e-6)
                * 1.2;
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let a = reach * (2.0 * i as f64 / (per_axis - 1) as f64 - 1.0);
                    let b = reach * (2.0 * j as f64 / (per_axis - 1) as f64 - 1.0);
                    let mut t = vec![0.0; dim];
                    for (k, tv) in t.iter_mut().enumerate() {
                        *tv = a * basis[0][k] + if basis.len() > 1 { b * basis[1][k] } else { 0.0 };
                    }
                    if let Ok(cand) = manifold::exp_map(base, &t, kappa) {
                        if let Ok(obj) = manifold::frechet_objective(&cand, points, kappa) {
                            best = best.min(obj);
                        }
                    }
                }
            }
            best
        }
    }
}

/// Exhaustive k-centres optimum over all index pairs (m = 2).
pub fn kcentres_exhaustive_pairs(n: usize, dist: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in (a + 1)..n {
            let radius = (0..n)
                .map(|i| dist[i * n + a].min(dist[i * n + b]))
                .fold(0.0f64, f64::max);
            best = best.min(radius);
        }
    }
    best
}
