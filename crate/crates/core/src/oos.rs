//! Out-of-sample machinery: k-centres prototype selection over an embedded
//! configuration, dissimilarity representations of new graphs against the
//! prototypes, and positioning of those representations on the manifold.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::graphs::{AttributedGraph, GraphError};
use crate::manifold::{self, Configuration, Curvature, Geometry, ManifoldError, ManifoldPoint};

/// Ridge added to the normal equations of every least-squares solve.
const RIDGE: f64 = 1e-10;
/// Iteration cap of the on-manifold refinement.
const MAX_REFINE_ITERS: usize = 50;
/// Relative objective-change stopping threshold of the refinement.
const REFINE_REL_TOL: f64 = 1e-10;
/// Swap-improvement sweep cap for k-centres.
const MAX_KCENTRE_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OosError {
    #[error("prototype count {m} out of range for {n} points")]
    PrototypeCountOutOfRange { m: usize, n: usize },
    #[error("dissimilarity vector has {got} entries for {expected} prototypes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("negative dissimilarity {0}")]
    NegativeDissimilarity(f64),
    #[error("dissimilarity {value:.6} exceeds the spherical limit pi*r = {limit:.6}")]
    NotRepresentable { value: f64, limit: f64 },
    #[error("prototype graphs and positions are misaligned: {graphs} vs {positions}")]
    MisalignedPrototypes { graphs: usize, positions: usize },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Prototype graphs with their embedded positions, index-aligned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrototypeSet {
    graphs: Vec<AttributedGraph>,
    positions: Configuration,
}

impl PrototypeSet {
    pub fn new(graphs: Vec<AttributedGraph>, positions: Configuration) -> Result<Self, OosError> {
        if graphs.is_empty() || graphs.len() != positions.nrows() {
            return Err(OosError::MisalignedPrototypes {
                graphs: graphs.len(),
                positions: positions.nrows(),
            });
        }
        Ok(PrototypeSet { graphs, positions })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[AttributedGraph] {
        &self.graphs
    }

    pub fn positions(&self) -> &Configuration {
        &self.positions
    }

    pub fn kappa(&self) -> Curvature {
        self.positions.kappa()
    }
}

/// Distances from one graph to every prototype, in prototype order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityVector(Vec<f64>);

impl DissimilarityVector {
    pub fn new(values: Vec<f64>) -> Result<Self, OosError> {
        if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(OosError::NegativeDissimilarity(v));
        }
        Ok(DissimilarityVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of k-centres selection.
#[derive(Debug, Clone, PartialEq)]
pub struct KCentres {
    /// Selected indices, ascending.
    pub indices: Vec<usize>,
    /// Maximal distance from any point to its nearest centre.
    pub cover_radius: f64,
}

/// k-centres over a precomputed symmetric distance matrix (row-major
/// `n x n`): greedy farthest-first traversal seeded by `seed`, improved by
/// best-improvement swaps until the cover radius stops decreasing. Ties break
/// to the lowest index throughout.
pub fn kcentres_on_distances(
    n: usize,
    dist: &[f64],
    m: usize,
    seed: u64,
) -> Result<KCentres, OosError> {
    if m == 0 || m > n {
        return Err(OosError::PrototypeCountOutOfRange { m, n });
    }
    assert_eq!(dist.len(), n * n, "distance matrix shape");
    let d = |i: usize, j: usize| dist[i * n + j];

    use rand::Rng;
    let mut rng = crate::rng::derive(seed, &[0x6b63]);
    let first = rng.random_range(0..n);
    let mut centres = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| d(i, first)).collect();
    while centres.len() < m {
        let mut best = 0;
        for i in 1..n {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        centres.push(best);
        for i in 0..n {
            nearest[i] = nearest[i].min(d(i, best));
        }
    }

    // first and second nearest centre per point, for O(n) swap evaluation
    let assign = |centres: &[usize]| -> (Vec<f64>, Vec<usize>, Vec<f64>) {
        let mut d1 = vec![f64::INFINITY; n];
        let mut c1 = vec![usize::MAX; n];
        let mut d2 = vec![f64::INFINITY; n];
        for i in 0..n {
            for (pos, &c) in centres.iter().enumerate() {
                let dc = d(i, c);
                if dc < d1[i] {
                    d2[i] = d1[i];
                    d1[i] = dc;
                    c1[i] = pos;
                } else if dc < d2[i] {
                    d2[i] = dc;
                }
            }
        }
        (d1, c1, d2)
    };
    let radius_of = |d1: &[f64]| d1.iter().cloned().fold(0.0, f64::max);

    for _ in 0..MAX_KCENTRE_SWEEPS {
        let (d1, c1, d2) = assign(&centres);
        let current = radius_of(&d1);
        let mut best_swap: Option<(usize, usize, f64)> = None;
        for pos in 0..centres.len() {
            for cand in 0..n {
                if centres.contains(&cand) {
                    continue;
                }
                let mut radius: f64 = 0.0;
                for i in 0..n {
                    let base = if c1[i] == pos { d2[i] } else { d1[i] };
                    radius = radius.max(base.min(d(i, cand)));
                    if best_swap.is_some_and(|(_, _, r)| radius >= r) && radius >= current {
                        break;
                    }
                }
                let beats_current = radius < current - 1e-15;
                let beats_best = best_swap.is_none_or(|(_, _, r)| radius < r - 1e-15);
                if beats_current && beats_best {
                    best_swap = Some((pos, cand, radius));
                }
            }
        }
        match best_swap {
            Some((pos, cand, _)) => centres[pos] = cand,
            None => break,
        }
    }

    let (d1, _, _) = assign(&centres);
    let cover_radius = radius_of(&d1);
    centres.sort_unstable();
    Ok(KCentres {
        indices: centres,
        cover_radius,
    })
}

/// k-centres on an embedded configuration under its geodesic distance.
pub fn select_prototypes_kcentres(
    x: &Configuration,
    m: usize,
    seed: u64,
) -> Result<KCentres, OosError> {
    let dist = x.pairwise_distances()?;
    kcentres_on_distances(x.nrows(), &dist, m, seed)
}

/// Dissimilarity representation of `g`: componentwise distance to each
/// prototype graph.
pub fn dissimilarity_representation<F>(
    g: &AttributedGraph,
    protos: &PrototypeSet,
    mut dist: F,
) -> Result<DissimilarityVector, OosError>
where
    F: FnMut(&AttributedGraph, &AttributedGraph) -> Result<f64, GraphError>,
{
    let mut values = Vec::with_capacity(protos.len());
    for r in protos.graphs() {
        values.push(dist(g, r)?);
    }
    DissimilarityVector::new(values)
}

/// An out-of-sample placement: the ambient coordinates and the residual of
/// the scalar-product system at the returned point.
#[derive(Debug, Clone, PartialEq)]
pub struct OosPlacement {
    pub coords: Vec<f64>,
    pub residual: f64,
}

/// Position a dissimilarity vector on the manifold of the prototype
/// configuration by minimising the scalar-product residual `|X_R I_k x -
/// C_R|`.
///
/// Flat case: the targets are the Gower scalar products in
/// prototype-centred coordinates with an intercept column absorbing the
/// unknown squared norm; one ridge least-squares solve is exact for
/// isometric inputs. Curved cases: the targets follow from the distance
/// inversion (`r^2 cos`, `-r^2 cosh`), started from the ambient ridge
/// least-squares solution projected to the manifold and refined by damped
/// Gauss-Newton steps in the tangent space (step halved on non-decrease,
/// stop on relative objective change below 1e-10, at most 50 iterations).
pub fn position_from_dissimilarities(
    y: &DissimilarityVector,
    x_r: &Configuration,
) -> Result<OosPlacement, OosError> {
    let m = x_r.nrows();
    if y.len() != m {
        return Err(OosError::LengthMismatch {
            expected: m,
            got: y.len(),
        });
    }
    let kappa = x_r.kappa();
    match kappa.geometry() {
        Geometry::Euclidean => solve_flat(y.values(), x_r),
        _ => solve_curved(y.values(), x_r, kappa),
    }
}

/// Convenience wrapper over [`position_from_dissimilarities`] returning a
/// validated manifold point.
pub fn embed_out_of_sample(
    y: &DissimilarityVector,
    protos: &PrototypeSet,
) -> Result<ManifoldPoint, OosError> {
    let placement = position_from_dissimilarities(y, protos.positions())?;
    Ok(ManifoldPoint::new(placement.coords, protos.kappa())?)
}

fn solve_flat(y: &[f64], x_r: &Configuration) -> Result<OosPlacement, OosError> {
    let m = x_r.nrows();
    let dim = x_r.ambient_dim();
    let mut centre = vec![0.0; dim];
    for row in x_r.rows() {
        for (c, v) in centre.iter_mut().zip(row) {
            *c += v / m as f64;
        }
    }
    // Gower targets in centred coordinates; the intercept column absorbs the
    // unknown -|x|^2/2 term.
    let mut b = DMatrix::zeros(m, dim + 1);
    let mut target = DVector::zeros(m);
    for (i, row) in x_r.rows().enumerate() {
        let mut norm2 = 0.0;
        for (j, (v, c)) in row.iter().zip(&centre).enumerate() {
            let centred = v - c;
            b[(i, j)] = centred;
            norm2 += centred * centred;
        }
        b[(i, dim)] = 1.0;
        target[i] = -0.5 * (y[i] * y[i] - norm2);
    }
    let z = ridge_solve(&b, &target);
    let coords: Vec<f64> = (0..dim).map(|j| centre[j] + z[j]).collect();
    let residual = (&b * &z - &target).norm();
    Ok(OosPlacement { coords, residual })
}

fn solve_curved(
    y: &[f64],
    x_r: &Configuration,
    kappa: Curvature,
) -> Result<OosPlacement, OosError> {
    let m = x_r.nrows();
    let ambient = x_r.ambient_dim();
    let r = kappa.radius().unwrap();
    let spherical = kappa.value() > 0.0;

    let mut c_r = DVector::zeros(m);
    for (i, &yi) in y.iter().enumerate() {
        if spherical {
            let limit = PI * r;
            if yi > limit * (1.0 + 1e-12) {
                return Err(OosError::NotRepresentable {
                    value: yi,
                    limit,
                });
            }
            c_r[i] = r * r * (yi / r).cos();
        } else {
            c_r[i] = -r * r * (yi / r).cosh();
        }
    }

    // A = X_R I_k
    let mut a = DMatrix::zeros(m, ambient);
    for (i, row) in x_r.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let sign = if !spherical && j == 0 { -1.0 } else { 1.0 };
            a[(i, j)] = sign * v;
        }
    }

    let x0 = ridge_solve(&a, &c_r);
    let mut x = manifold::project_to_manifold(x0.as_slice(), kappa)?;
    let objective = |pt: &[f64]| -> f64 {
        let v = DVector::from_row_slice(pt);
        (&a * v - &c_r).norm_squared()
    };
    let mut obj = objective(&x);

    for _ in 0..MAX_REFINE_ITERS {
        // Euclidean-orthogonal projector onto the tangent space at x:
        // tangents satisfy (I_k x)' v = 0.
        let mut q = DVector::from_row_slice(&x);
        if !spherical {
            q[0] = -q[0];
        }
        let qn2 = q.norm_squared();
        let xi = DVector::from_row_slice(&x);
        let residual = &a * &xi - &c_r;
        let ap = &a - (&a * &q) * q.transpose() / qn2;
        // relative ridge: the tangent system shrinks quadratically near a
        // degenerate optimum and a fixed ridge would stall it
        let w = solve_normal_equations(&ap, &(-&residual), None);
        let v = &w - &q * (q.dot(&w) / qn2);

        let mut eta = 1.0;
        let mut accepted = false;
        while eta > 1e-12 {
            let step: Vec<f64> = v.iter().map(|t| t * eta).collect();
            match manifold::exp_map(&x, &step, kappa) {
                Ok(cand) => {
                    let cand_obj = objective(&cand);
                    if cand_obj < obj {
                        let rel = (obj - cand_obj) / obj.max(f64::MIN_POSITIVE);
                        x = cand;
                        obj = cand_obj;
                        accepted = true;
                        if rel < REFINE_REL_TOL {
                            return Ok(OosPlacement {
                                coords: x,
                                residual: obj.sqrt(),
                            });
                        }
                        break;
                    }
                }
                Err(_) => {}
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(OosPlacement {
        coords: x,
        residual: obj.sqrt(),
    })
}

fn ridge_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    solve_normal_equations(a, rhs, Some(RIDGE))
}

fn solve_normal_equations(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    ridge: Option<f64>,
) -> DVector<f64> {
    let cols = a.ncols();
    let mut normal = a.transpose() * a;
    let ridge = ridge.unwrap_or_else(|| {
        let mean_diag = normal.trace() / cols as f64;
        1e-14 * mean_diag.max(f64::MIN_POSITIVE)
    });
    for i in 0..cols {
        normal[(i, i)] += ridge;
    }
    let atb = a.transpose() * rhs;
    normal
        .lu()
        .solve(&atb)
        .unwrap_or_else(|| DVector::zeros(cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::embedding;
    use rand::Rng;

    fn k(v: f64) -> Curvature {
        Curvature::new(v).unwrap()
    }

    fn gaussian(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    fn planar_config(n: usize, seed: u64) -> Configuration {
        let mut r = rng::derive(seed, &[55]);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![gaussian(&mut r) * 2.0, gaussian(&mut r) * 2.0])
            .collect();
        Configuration::from_rows(rows, k(0.0)).unwrap()
    }

    fn sphere_config(n: usize, seed: u64) -> Configuration {
        let mut r = rng::derive(seed, &[56]);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let v = vec![
                    gaussian(&mut r).abs() + 0.5,
                    gaussian(&mut r),
                    gaussian(&mut r),
                ];
                manifold::project_to_manifold(&v, k(1.0)).unwrap()
            })
            .collect();
        Configuration::from_rows(rows, k(1.0)).unwrap()
    }

    fn hyper_config(n: usize, seed: u64) -> Configuration {
        let mut r = rng::derive(seed, &[57]);
        let apex = vec![1.0, 0.0, 0.0];
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let t = vec![0.0, gaussian(&mut r), gaussian(&mut r)];
                manifold::exp_map(&apex, &t, k(-1.0)).unwrap()
            })
            .collect();
        Configuration::from_rows(rows, k(-1.0)).unwrap()
    }

    fn y_to(config: &Configuration, point: &[f64]) -> DissimilarityVector {
        let vals: Vec<f64> = config
            .rows()
            .map(|row| manifold::geodesic_distance(point, row, config.kappa()).unwrap())
            .collect();
        DissimilarityVector::new(vals).unwrap()
    }

    #[test]
    fn kcentres_selects_all_when_m_equals_n() {
        let x = planar_config(6, 1);
        let sel = select_prototypes_kcentres(&x, 6, 0).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sel.cover_radius, 0.0);
    }

    #[test]
    fn kcentres_single_centre_on_square() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let x = Configuration::from_rows(rows, k(0.0)).unwrap();
        let sel = select_prototypes_kcentres(&x, 1, 3).unwrap();
        assert_eq!(sel.indices.len(), 1);
        assert!((sel.cover_radius - 2f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn kcentres_close_to_exhaustive_optimum() {
        let x = planar_config(8, 9);
        let dist = x.pairwise_distances().unwrap();
        let sel = kcentres_on_distances(8, &dist, 2, 5).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..8 {
            for b in (a + 1)..8 {
                let radius = (0..8)
                    .map(|i| dist[i * 8 + a].min(dist[i * 8 + b]))
                    .fold(0.0, f64::max);
                best = best.min(radius);
            }
        }
        assert!(
            sel.cover_radius <= 2.0 * best + 1e-9,
            "cover {} vs optimum {best}",
            sel.cover_radius
        );
    }

    #[test]
    fn kcentres_rejects_bad_m() {
        let x = planar_config(4, 2);
        assert!(select_prototypes_kcentres(&x, 0, 0).is_err());
        assert!(select_prototypes_kcentres(&x, 5, 0).is_err());
    }

    #[test]
    fn kcentres_deterministic_under_seed() {
        let x = planar_config(20, 4);
        let a = select_prototypes_kcentres(&x, 4, 17).unwrap();
        let b = select_prototypes_kcentres(&x, 4, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dissimilarity_representation_is_componentwise() {
        let g1 = AttributedGraph::new(vec![[0.0, 0.0]], vec![]).unwrap();
        let g2 = AttributedGraph::new(vec![[1.0, 0.0]], vec![]).unwrap();
        let positions = planar_config(2, 8);
        let protos = PrototypeSet::new(vec![g1.clone(), g2], positions).unwrap();
        let y = dissimilarity_representation(&g1, &protos, |a, b| {
            Ok(crate::graphs::graph_edit_distance(
                a,
                b,
                &crate::graphs::EditCostParams::default(),
            ))
        })
        .unwrap();
        assert_eq!(y.values()[0], 0.0);
        assert!(y.values()[1] > 0.0);
    }

    #[test]
    fn flat_oos_recovers_in_sample_points() {
        let x = planar_config(10, 21);
        for i in 0..10 {
            let y = y_to(&x, x.row(i));
            let placement = position_from_dissimilarities(&y, &x).unwrap();
            let err = manifold::geodesic_distance(&placement.coords, x.row(i), k(0.0)).unwrap();
            assert!(err <= 1e-6, "point {i} recovered at distance {err}");
            assert!(placement.residual <= 1e-6);
        }
    }

    #[test]
    fn spherical_oos_recovers_in_sample_points() {
        let x = sphere_config(10, 22);
        for i in 0..10 {
            let y = y_to(&x, x.row(i));
            let placement = position_from_dissimilarities(&y, &x).unwrap();
            let err =
                manifold::geodesic_distance(&placement.coords, x.row(i), k(1.0)).unwrap();
            assert!(err <= 1e-5, "point {i} recovered at distance {err}");
        }
    }

    #[test]
    fn hyperbolic_oos_recovers_in_sample_points() {
        let x = hyper_config(10, 23);
        for i in 0..10 {
            let y = y_to(&x, x.row(i));
            let placement = position_from_dissimilarities(&y, &x).unwrap();
            let err =
                manifold::geodesic_distance(&placement.coords, x.row(i), k(-1.0)).unwrap();
            assert!(err <= 1e-5, "point {i} recovered at distance {err}");
        }
    }

    #[test]
    fn collapse_case_returns_the_shared_prototype_point() {
        for kappa in [k(0.0), k(1.0), k(-1.0)] {
            let p = match kappa.geometry() {
                Geometry::Euclidean => vec![0.7, -1.1],
                Geometry::Spherical => {
                    manifold::project_to_manifold(&[0.3, 0.8, -0.2], kappa).unwrap()
                }
                Geometry::Hyperbolic => {
                    manifold::exp_map(&[1.0, 0.0, 0.0], &[0.0, 0.9, -0.4], kappa).unwrap()
                }
            };
            let x =
                Configuration::from_rows(vec![p.clone(), p.clone(), p.clone()], kappa).unwrap();
            let y = DissimilarityVector::new(vec![0.0; 3]).unwrap();
            let placement = position_from_dissimilarities(&y, &x).unwrap();
            let err = manifold::geodesic_distance(&placement.coords, &p, kappa).unwrap();
            assert!(err <= 1e-6, "kappa {:?}: distance {err}", kappa.value());
        }
    }

    #[test]
    fn exact_case_has_tiny_residual() {
        let x = sphere_config(8, 31);
        let target = manifold::project_to_manifold(&[1.0, 0.4, 0.2], k(1.0)).unwrap();
        let y = y_to(&x, &target);
        let placement = position_from_dissimilarities(&y, &x).unwrap();
        assert!(placement.residual <= 1e-6, "residual {}", placement.residual);
    }

    #[test]
    fn spherical_oos_rejects_unrepresentable_distances() {
        let x = sphere_config(4, 35);
        let y = DissimilarityVector::new(vec![0.1, 0.2, 4.0, 0.3]).unwrap();
        assert!(matches!(
            position_from_dissimilarities(&y, &x),
            Err(OosError::NotRepresentable { .. })
        ));
    }

    #[test]
    fn prototype_fixed_points_under_isometric_training() {
        // full pipeline shape: embed a spherical distance matrix, select
        // prototypes, and re-place each prototype from its own distances
        let base = sphere_config(12, 41);
        let d = embedding::DissimilarityMatrix::from_fn(12, |i, j| {
            base.row_distance(i, j).unwrap()
        });
        let sol = embedding::embed_spherical(&d, k(1.0), 2).unwrap();
        let sel = select_prototypes_kcentres(&sol.x, 5, 7).unwrap();
        let x_r = sol.x.select_rows(&sel.indices);
        for (slot, &idx) in sel.indices.iter().enumerate() {
            let y = DissimilarityVector::new(
                sel.indices.iter().map(|&j| d.get(idx, j)).collect(),
            )
            .unwrap();
            let placement = position_from_dissimilarities(&y, &x_r).unwrap();
            let err = manifold::geodesic_distance(
                &placement.coords,
                x_r.row(slot),
                k(1.0),
            )
            .unwrap();
            assert!(err <= 1e-6, "prototype {idx} displaced by {err}");
        }
    }
}
