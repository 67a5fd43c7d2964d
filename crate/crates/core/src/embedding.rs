//! Training-set embedding.
//!
//! Given a symmetric matrix of pairwise graph distances, build the
//! curvature-specific scalar-product matrix, recover a point configuration
//! through its eigendecomposition (classical MDS for the flat case, a
//! constrained diagonal approximation for curved spaces), measure the
//! distortion of the embedded distances, and select the curvature minimising
//! that distortion over a grid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::manifold::{self, Configuration, Curvature, Geometry, ManifoldError};
use crate::parallel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("invalid dissimilarity matrix: {0}")]
    InvalidDissimilarity(String),
    #[error(
        "distances up to {max_distance:.6} are not representable on a sphere of radius {radius:.6} (limit pi*r = {limit:.6})"
    )]
    SphericalRepresentability {
        max_distance: f64,
        radius: f64,
        limit: f64,
    },
    #[error(
        "hyperbolic embedding infeasible: second-smallest eigenvalue {lambda2:.6} <= 1/kappa = {bound:.6}"
    )]
    HyperbolicInfeasible { lambda2: f64, bound: f64 },
    #[error("target dimension {dim} requires at most {max} for {n} points")]
    DimensionTooLarge { dim: usize, max: usize, n: usize },
    #[error("curvature grid is empty")]
    EmptyGrid,
    #[error("every grid point failed to embed")]
    AllGridPointsFailed,
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// Symmetric nonnegative matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Build from a function over index pairs; `f` is evaluated once per
    /// unordered pair `i < j` and mirrored.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DissimilarityMatrix { n, values }
    }

    pub fn from_raw(n: usize, values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.len() != n * n {
            return Err(EmbeddingError::InvalidDissimilarity(format!(
                "expected {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(EmbeddingError::InvalidDissimilarity(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(EmbeddingError::InvalidDissimilarity(format!(
                        "entry ({i},{j}) = {v}"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(EmbeddingError::InvalidDissimilarity(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Submatrix induced by `indices` (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(indices.len(), |i, j| self.get(indices[i], indices[j]))
    }
}

/// Pairwise scalar products consistent with a curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProductMatrix {
    values: DMatrix<f64>,
    kappa: Curvature,
}

impl ScalarProductMatrix {
    pub fn kappa(&self) -> Curvature {
        self.kappa
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending
/// order and a deterministic sign convention (the first component of each
/// eigenvector above 1e-12 in magnitude is made positive).
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub u: DMatrix<f64>,
    pub lambda: Vec<f64>,
}

/// Result of embedding a dissimilarity matrix at one curvature.
#[derive(Debug, Clone)]
pub struct EmbeddingSolution {
    pub x: Configuration,
    pub kappa: Curvature,
    pub dim: usize,
    /// Retained diagonal entries, in the column order of `x`.
    pub b: Vec<f64>,
    /// Full diagonal vector before truncation (diagnostic).
    pub b_full: Vec<f64>,
    /// Largest manifold-membership deviation before row projection
    /// (diagnostic; zero for the flat case).
    pub projection_deviation: f64,
    pub distortion: f64,
}

/// Scalar-product matrix from distances: `r^2 cos(D/r)` (spherical),
/// double-centred `-1/2 J D^2 J` (flat), `-r^2 cosh(D/r)` (hyperbolic).
pub fn scalar_product_matrix(
    d: &DissimilarityMatrix,
    kappa: Curvature,
) -> Result<ScalarProductMatrix, EmbeddingError> {
    let n = d.size();
    let values = match kappa.geometry() {
        Geometry::Spherical => {
            let r = kappa.radius().unwrap();
            check_spherical_representable(d, r)?;
            DMatrix::from_fn(n, n, |i, j| r * r * (d.get(i, j) / r).cos())
        }
        Geometry::Euclidean => {
            let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
            let j = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            -0.5 * (&j * sq * &j)
        }
        Geometry::Hyperbolic => {
            let r = kappa.radius().unwrap();
            DMatrix::from_fn(n, n, |i, j| -r * r * (d.get(i, j) / r).cosh())
        }
    };
    Ok(ScalarProductMatrix { values, kappa })
}

fn check_spherical_representable(d: &DissimilarityMatrix, r: f64) -> Result<(), EmbeddingError> {
    let limit = PI * r;
    let max_distance = d.max_value();
    if max_distance > limit * (1.0 + 1e-12) {
        return Err(EmbeddingError::SphericalRepresentability {
            max_distance,
            radius: r,
            limit,
        });
    }
    Ok(())
}

/// Symmetric eigendecomposition with ascending eigenvalues and fixed signs.
pub fn eigendecompose_sym(c: &ScalarProductMatrix) -> EigenPair {
    eigendecompose_matrix(&c.values)
}

fn eigendecompose_matrix(m: &DMatrix<f64>) -> EigenPair {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let lambda: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut u = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = se.eigenvectors.column(src);
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for row in 0..n {
            u[(row, col)] = v[row] * sign;
        }
    }
    EigenPair { u, lambda }
}

/// Classical MDS: double-centre, take the `dim` largest eigenvalues (negative
/// ones clamped to zero) and set `X = U_d Lambda_d^(1/2)`.
pub fn embed_euclidean(
    d: &DissimilarityMatrix,
    dim: usize,
) -> Result<EmbeddingSolution, EmbeddingError> {
    let n = d.size();
    if dim > n || dim == 0 {
        return Err(EmbeddingError::DimensionTooLarge { dim, max: n, n });
    }
    let kappa = Curvature::flat();
    let c = scalar_product_matrix(d, kappa)?;
    let eig = eigendecompose_sym(&c);
    let selected = select_descending(&eig.lambda, dim, &[]);
    let b: Vec<f64> = selected.iter().map(|&i| eig.lambda[i].max(0.0)).collect();
    let rows = reconstruct_rows(&eig.u, &selected, &b);
    let x = Configuration::from_rows(rows, kappa)?;
    let distortion = distortion(&x, d)?;
    Ok(EmbeddingSolution {
        x,
        kappa,
        dim,
        b: b.clone(),
        b_full: eig.lambda,
        projection_deviation: 0.0,
        distortion,
    })
}

/// Spherical embedding: solve the diagonal approximation on the constraint
/// line through `lambda` and `(1/kappa) 1`, retain the `dim + 1` largest
/// components and project the reconstructed rows onto the sphere.
pub fn embed_spherical(
    d: &DissimilarityMatrix,
    kappa: Curvature,
    dim: usize,
) -> Result<EmbeddingSolution, EmbeddingError> {
    assert!(kappa.value() > 0.0, "embed_spherical requires kappa > 0");
    embed_curved(d, kappa, dim)
}

/// Hyperbolic embedding: as the spherical case but with the timelike
/// component constrained nonpositive; infeasible exactly when the
/// second-smallest eigenvalue is at most `1/kappa`.
pub fn embed_hyperbolic(
    d: &DissimilarityMatrix,
    kappa: Curvature,
    dim: usize,
) -> Result<EmbeddingSolution, EmbeddingError> {
    assert!(kappa.value() < 0.0, "embed_hyperbolic requires kappa < 0");
    embed_curved(d, kappa, dim)
}

/// Embed at any curvature, dispatching on its sign.
pub fn embed_at(
    d: &DissimilarityMatrix,
    kappa: Curvature,
    dim: usize,
) -> Result<EmbeddingSolution, EmbeddingError> {
    match kappa.geometry() {
        Geometry::Euclidean => embed_euclidean(d, dim),
        Geometry::Spherical => embed_spherical(d, kappa, dim),
        Geometry::Hyperbolic => embed_hyperbolic(d, kappa, dim),
    }
}

fn embed_curved(
    d: &DissimilarityMatrix,
    kappa: Curvature,
    dim: usize,
) -> Result<EmbeddingSolution, EmbeddingError> {
    let n = d.size();
    if dim + 1 > n || dim == 0 {
        return Err(EmbeddingError::DimensionTooLarge {
            dim,
            max: n.saturating_sub(1),
            n,
        });
    }
    let hyperbolic = kappa.value() < 0.0;
    let c = scalar_product_matrix(d, kappa)?;
    let eig = eigendecompose_sym(&c);
    let b_full = solve_constraint_line(&eig.lambda, 1.0 / kappa.value(), hyperbolic)?;

    let selected = if hyperbolic {
        // keep the timelike component, then the dim largest of the rest
        select_descending(&b_full, dim, &[0])
    } else {
        select_descending(&b_full, dim + 1, &[])
    };
    let b: Vec<f64> = selected.iter().map(|&i| b_full[i]).collect();
    let raw_rows = reconstruct_rows(&eig.u, &selected, &b);

    let mut projection_deviation: f64 = 0.0;
    let mut rows = Vec::with_capacity(raw_rows.len());
    for row in &raw_rows {
        projection_deviation = projection_deviation.max(manifold::membership_deviation(row, kappa));
        rows.push(manifold::project_to_manifold(row, kappa)?);
    }
    let x = Configuration::from_rows(rows, kappa)?;
    let distortion = distortion(&x, d)?;
    Ok(EmbeddingSolution {
        x,
        kappa,
        dim,
        b,
        b_full,
        projection_deviation,
        distortion,
    })
}

/// Closest feasible point to `lambda` on the line `b(t) = lambda + t ((1/k)1
/// - lambda)`. The distance to `lambda` along the line is proportional to
/// `|t|`, so the minimiser is the feasible `t` of smallest magnitude; an
/// empty feasible interval is the hyperbolic infeasibility case.
fn solve_constraint_line(
    lambda: &[f64],
    inv_kappa: f64,
    hyperbolic: bool,
) -> Result<Vec<f64>, EmbeddingError> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let scale = lambda
        .iter()
        .fold(inv_kappa.abs(), |m, l| m.max(l.abs()))
        .max(1.0);
    let mut feasible = true;
    for (i, &l) in lambda.iter().enumerate() {
        let slope = inv_kappa - l;
        // b_0 <= 0 for the hyperbolic timelike component, b_i >= 0 otherwise
        let wants_nonneg = !(hyperbolic && i == 0);
        if slope.abs() <= 1e-14 * scale {
            let ok = if wants_nonneg {
                l >= -1e-12 * scale
            } else {
                l <= 1e-12 * scale
            };
            if !ok {
                feasible = false;
            }
            continue;
        }
        let root = -l / slope;
        // b_i beyond the root takes the sign of the slope
        let lower_bound = wants_nonneg == (slope > 0.0);
        if lower_bound {
            lo = lo.max(root);
        } else {
            hi = hi.min(root);
        }
    }
    if !feasible || lo > hi + 1e-12 {
        return Err(EmbeddingError::HyperbolicInfeasible {
            lambda2: lambda.get(1).copied().unwrap_or(f64::NAN),
            bound: inv_kappa,
        });
    }
    let t = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi
    } else {
        0.0
    };
    Ok(lambda.iter().map(|&l| l + t * (inv_kappa - l)).collect())
}

/// Indices of the `count` largest entries of `b` (ties by original index),
/// excluding `pinned`, which are prepended in order.
fn select_descending(b: &[f64], count: usize, pinned: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..b.len()).filter(|i| !pinned.contains(i)).collect();
    order.sort_by(|&a, &c| b[c].partial_cmp(&b[a]).unwrap().then(a.cmp(&c)));
    let mut selected: Vec<usize> = pinned.to_vec();
    selected.extend(order.into_iter().take(count));
    selected
}

fn reconstruct_rows(u: &DMatrix<f64>, selected: &[usize], b: &[f64]) -> Vec<Vec<f64>> {
    let n = u.nrows();
    let mut rows = vec![vec![0.0; selected.len()]; n];
    for (col, (&src, &bv)) in selected.iter().zip(b).enumerate() {
        let scale = bv.abs().sqrt();
        for (i, row) in rows.iter_mut().enumerate() {
            row[col] = u[(i, src)] * scale;
        }
    }
    rows
}

/// Frobenius norm of the difference between the embedded pairwise geodesic
/// distances and the target distances.
pub fn distortion(x: &Configuration, d: &DissimilarityMatrix) -> Result<f64, EmbeddingError> {
    let n = d.size();
    if x.nrows() != n {
        return Err(EmbeddingError::InvalidDissimilarity(format!(
            "configuration has {} rows for a {}-point matrix",
            x.nrows(),
            n
        )));
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = x.row_distance(i, j)?;
            let diff = rho - d.get(i, j);
            sum += 2.0 * diff * diff;
        }
    }
    Ok(sum.sqrt())
}

/// One point of a distortion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub kappa: f64,
    /// `f64::INFINITY` when the embedding failed at this curvature.
    pub distortion: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best: Curvature,
    pub curve: Vec<SweepPoint>,
}

/// Evaluate the embedding distortion across a curvature grid and return the
/// minimising curvature together with the full curve. Grid points that fail
/// to embed (hyperbolic infeasibility, spherical representability) are
/// recorded with infinite distortion and excluded from the argmin.
pub fn curvature_sweep(
    d: &DissimilarityMatrix,
    grid: &[Curvature],
    dim: usize,
) -> Result<SweepResult, EmbeddingError> {
    let points = parallel::map_indexed(grid.len(), |i| sweep_point(d, grid[i], dim));
    finish_sweep(grid, points)
}

/// Sequential variant of [`curvature_sweep`] for benchmarking.
pub fn curvature_sweep_seq(
    d: &DissimilarityMatrix,
    grid: &[Curvature],
    dim: usize,
) -> Result<SweepResult, EmbeddingError> {
    let points = parallel::map_indexed_seq(grid.len(), |i| sweep_point(d, grid[i], dim));
    finish_sweep(grid, points)
}

fn sweep_point(d: &DissimilarityMatrix, kappa: Curvature, dim: usize) -> SweepPoint {
    let distortion = embed_at(d, kappa, dim).map_or(f64::INFINITY, |s| s.distortion);
    SweepPoint {
        kappa: kappa.value(),
        distortion,
    }
}

fn finish_sweep(grid: &[Curvature], curve: Vec<SweepPoint>) -> Result<SweepResult, EmbeddingError> {
    if grid.is_empty() {
        return Err(EmbeddingError::EmptyGrid);
    }
    let mut best: Option<usize> = None;
    for (i, p) in curve.iter().enumerate() {
        if p.distortion.is_finite() && best.is_none_or(|b| p.distortion < curve[b].distortion) {
            best = Some(i);
        }
    }
    match best {
        Some(i) => Ok(SweepResult {
            best: grid[i],
            curve,
        }),
        None => Err(EmbeddingError::AllGridPointsFailed),
    }
}

/// Default 41-point grid: 20 log-spaced negative curvatures, zero, and 20
/// log-spaced positive curvatures capped so the sphere radius satisfies
/// `r >= max(D)/pi`. The positive side spans three decades below the cap;
/// the negative side has no representability bound and extends three decades
/// beyond it as well, since hyperbolic optima often sit at curvature scales
/// a sphere could never reach.
pub fn default_curvature_grid(d: &DissimilarityMatrix) -> Vec<Curvature> {
    let max_d = d.max_value();
    let cap = if max_d > 0.0 {
        (PI / max_d).powi(2)
    } else {
        1.0
    };
    let per_side = 20usize;
    let logspace = |lo_decade: f64, hi_decade: f64| -> Vec<f64> {
        (0..per_side)
            .map(|i| {
                let t = i as f64 / (per_side - 1) as f64;
                cap * 10f64.powf(lo_decade + t * (hi_decade - lo_decade))
            })
            .collect()
    };
    let mut grid = Vec::with_capacity(2 * per_side + 1);
    for m in logspace(-3.0, 3.0).iter().rev() {
        grid.push(Curvature::new(-m).unwrap());
    }
    grid.push(Curvature::flat());
    for m in logspace(-3.0, 0.0) {
        grid.push(Curvature::new(m).unwrap());
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::DVector;
    use rand::Rng;

    fn k(v: f64) -> Curvature {
        Curvature::new(v).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Gaussian sampler for test point clouds (Box-Muller).
    fn gaussian(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    fn sphere_points(n: usize, r: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng::derive(seed, &[101]);
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| gaussian(&mut rng)).collect();
                manifold::project_to_manifold(&v, k(1.0 / (r * r))).unwrap()
            })
            .collect()
    }

    fn hyperboloid_points(n: usize, r: f64, seed: u64) -> Vec<Vec<f64>> {
        let kappa = k(-1.0 / (r * r));
        let mut rng = rng::derive(seed, &[102]);
        let apex = vec![r, 0.0, 0.0];
        (0..n)
            .map(|_| {
                let t = vec![0.0, gaussian(&mut rng) * r, gaussian(&mut rng) * r];
                manifold::exp_map(&apex, &t, kappa).unwrap()
            })
            .collect()
    }

    fn geodesic_matrix(points: &[Vec<f64>], kappa: Curvature) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(points.len(), |i, j| {
            manifold::geodesic_distance(&points[i], &points[j], kappa).unwrap()
        })
    }

    #[test]
    fn scalar_product_matrix_examples() {
        let zero = DissimilarityMatrix::from_fn(3, |_, _| 0.0);
        let c = scalar_product_matrix(&zero, k(1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(c.get(i, j), 1.0, 0.0);
            }
        }

        let anti = DissimilarityMatrix::from_raw(2, vec![0.0, PI, PI, 0.0]).unwrap();
        let c = scalar_product_matrix(&anti, k(1.0)).unwrap();
        assert_close(c.get(0, 0), 1.0, 1e-15);
        assert_close(c.get(0, 1), -1.0, 1e-15);

        // collinear points 0, 3, 4 on a line: double-centring kills row sums
        let d =
            DissimilarityMatrix::from_raw(3, vec![0.0, 3.0, 4.0, 3.0, 0.0, 1.0, 4.0, 1.0, 0.0])
                .unwrap();
        let c = scalar_product_matrix(&d, k(0.0)).unwrap();
        for i in 0..3 {
            let row_sum: f64 = (0..3).map(|j| c.get(i, j)).sum();
            let col_sum: f64 = (0..3).map(|j| c.get(j, i)).sum();
            assert_close(row_sum, 0.0, 1e-12);
            assert_close(col_sum, 0.0, 1e-12);
        }
    }

    #[test]
    fn spherical_representability_rejected() {
        let d = DissimilarityMatrix::from_raw(2, vec![0.0, 4.0, 4.0, 0.0]).unwrap();
        assert!(matches!(
            scalar_product_matrix(&d, k(1.0)),
            Err(EmbeddingError::SphericalRepresentability { .. })
        ));
    }

    #[test]
    fn eigendecompose_identity_and_diag() {
        let c = ScalarProductMatrix {
            values: DMatrix::identity(3, 3),
            kappa: k(0.0),
        };
        let e = eigendecompose_sym(&c);
        for l in &e.lambda {
            assert_close(*l, 1.0, 1e-12);
        }

        let c = ScalarProductMatrix {
            values: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]),
            kappa: k(0.0),
        };
        let e = eigendecompose_sym(&c);
        assert_close(e.lambda[0], -1.0, 1e-12);
        assert_close(e.lambda[1], 2.0, 1e-12);
        // permutation of the identity
        assert_close(e.u[(1, 0)].abs(), 1.0, 1e-12);
        assert_close(e.u[(0, 1)].abs(), 1.0, 1e-12);
    }

    #[test]
    fn eigendecompose_reconstructs_random_symmetric() {
        let mut rng = rng::derive(3, &[1]);
        let mut m = DMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in i..5 {
                let v = gaussian(&mut rng);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let e = eigendecompose_matrix(&m);
        let rebuilt =
            &e.u * DMatrix::from_diagonal(&DVector::from_vec(e.lambda.clone())) * e.u.transpose();
        assert!((rebuilt - &m).norm() <= 1e-10);
    }

    #[test]
    fn embed_euclidean_recovers_triangle() {
        let d =
            DissimilarityMatrix::from_raw(3, vec![0.0, 3.0, 4.0, 3.0, 0.0, 5.0, 4.0, 5.0, 0.0])
                .unwrap();
        let sol = embed_euclidean(&d, 2).unwrap();
        let mut got: Vec<f64> = vec![
            sol.x.row_distance(0, 1).unwrap(),
            sol.x.row_distance(0, 2).unwrap(),
            sol.x.row_distance(1, 2).unwrap(),
        ];
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_close(got[0], 3.0, 1e-8);
        assert_close(got[1], 4.0, 1e-8);
        assert_close(got[2], 5.0, 1e-8);
    }

    #[test]
    fn embed_euclidean_degenerate_pair() {
        let d = DissimilarityMatrix::from_fn(2, |_, _| 0.0);
        let sol = embed_euclidean(&d, 1).unwrap();
        assert_close(sol.x.row_distance(0, 1).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn embed_euclidean_exact_recovery_of_planar_points() {
        let mut rng = rng::derive(11, &[7]);
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|_| vec![gaussian(&mut rng), gaussian(&mut rng)])
            .collect();
        let d = geodesic_matrix(&pts, k(0.0));
        let sol = embed_euclidean(&d, 2).unwrap();
        assert!(sol.distortion <= 1e-6, "distortion {}", sol.distortion);
    }

    #[test]
    fn embed_spherical_exact_recovery() {
        let pts = sphere_points(5, 1.0, 42);
        let d = geodesic_matrix(&pts, k(1.0));
        let sol = embed_spherical(&d, k(1.0), 2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_close(sol.x.row_distance(i, j).unwrap(), d.get(i, j), 1e-6);
            }
        }
    }

    #[test]
    fn embed_spherical_quarter_circle() {
        let d = DissimilarityMatrix::from_raw(2, vec![0.0, PI / 2.0, PI / 2.0, 0.0]).unwrap();
        let sol = embed_spherical(&d, k(1.0), 1).unwrap();
        let ip = manifold::scalar_product(sol.x.row(0), sol.x.row(1), k(1.0)).unwrap();
        assert_close(ip, 0.0, 1e-12);
    }

    #[test]
    fn embed_spherical_feasible_spectrum_is_untouched() {
        // exact spherical data has a nonnegative spectrum, so t = 0 and the
        // full diagonal equals the spectrum
        let pts = sphere_points(6, 1.0, 9);
        let d = geodesic_matrix(&pts, k(1.0));
        let c = scalar_product_matrix(&d, k(1.0)).unwrap();
        let eig = eigendecompose_sym(&c);
        let sol = embed_spherical(&d, k(1.0), 2).unwrap();
        for (a, b) in sol.b_full.iter().zip(&eig.lambda) {
            assert_close(*a, *b, 1e-9);
        }
    }

    #[test]
    fn embed_hyperbolic_exact_recovery() {
        let pts = hyperboloid_points(5, 1.0, 17);
        let d = geodesic_matrix(&pts, k(-1.0));
        let sol = embed_hyperbolic(&d, k(-1.0), 2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_close(sol.x.row_distance(i, j).unwrap(), d.get(i, j), 1e-6);
            }
        }
    }

    #[test]
    fn embed_hyperbolic_two_points() {
        let d = DissimilarityMatrix::from_raw(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let sol = embed_hyperbolic(&d, k(-1.0), 1).unwrap();
        let ip = manifold::scalar_product(sol.x.row(0), sol.x.row(1), k(-1.0)).unwrap();
        assert_close(-ip, 1.0f64.cosh(), 1e-9);
    }

    #[test]
    fn constraint_line_infeasible_spectrum() {
        // lambda_2 <= 1/kappa leaves the line outside the feasible set
        let err = solve_constraint_line(&[-5.0, -2.0, 1.0, 3.0], -1.0, true);
        assert!(matches!(
            err,
            Err(EmbeddingError::HyperbolicInfeasible { .. })
        ));
    }

    #[test]
    fn constraint_line_negative_t_branch() {
        // a small negative eigenvalue above 1/kappa forces t < 0; the
        // solution must stay feasible and as close to lambda as possible
        let lambda = [-2.0, -0.5, 3.0];
        let b = solve_constraint_line(&lambda, -1.0, true).unwrap();
        assert!(b[0] <= 1e-12);
        assert!(b[1] >= -1e-12 && b[2] >= -1e-12);
        // 1-D scan of the line cannot find a closer feasible point
        let t_star = (b[1] - lambda[1]) / (-1.0 - lambda[1]);
        for i in 0..=400 {
            let t = -2.0 + i as f64 * 0.01;
            let bt: Vec<f64> = lambda.iter().map(|&l| l + t * (-1.0 - l)).collect();
            let feasible = bt[0] <= 1e-12 && bt[1] >= -1e-12 && bt[2] >= -1e-12;
            if feasible {
                assert!(t_star.abs() <= t.abs() + 1e-9);
            }
        }
    }

    #[test]
    fn distortion_zero_iff_isometric() {
        let pts = sphere_points(5, 1.0, 3);
        let d = geodesic_matrix(&pts, k(1.0));
        let x = Configuration::from_rows(pts.clone(), k(1.0)).unwrap();
        assert!(distortion(&x, &d).unwrap() <= 1e-6);

        let mut moved = pts;
        moved[0] = manifold::project_to_manifold(&[0.3, -0.9, 0.4], k(1.0)).unwrap();
        let x2 = Configuration::from_rows(moved, k(1.0)).unwrap();
        assert!(distortion(&x2, &d).unwrap() > 1e-3);
    }

    #[test]
    fn sweep_prefers_flat_for_planar_data() {
        let mut rng = rng::derive(5, &[13]);
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| vec![gaussian(&mut rng), gaussian(&mut rng)])
            .collect();
        let d = geodesic_matrix(&pts, k(0.0));
        let grid = [k(-0.1), k(0.0), k(0.1)];
        let sweep = curvature_sweep(&d, &grid, 2).unwrap();
        assert_eq!(sweep.best.value(), 0.0);
    }

    #[test]
    fn sweep_recovers_generative_curvature() {
        let pts = sphere_points(8, 1.0, 21);
        let d = geodesic_matrix(&pts, k(1.0));
        let grid = [k(0.0), k(0.5), k(1.0), k(2.0)];
        let sweep = curvature_sweep(&d, &grid, 2).unwrap();
        assert_eq!(sweep.best.value(), 1.0);
        assert_eq!(sweep.curve.len(), 4);
    }

    #[test]
    fn sweep_matches_sequential_path() {
        let pts = sphere_points(6, 1.0, 33);
        let d = geodesic_matrix(&pts, k(1.0));
        let grid = default_curvature_grid(&d);
        let a = curvature_sweep(&d, &grid, 2).unwrap();
        let b = curvature_sweep_seq(&d, &grid, 2).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.best.value(), b.best.value());
    }

    #[test]
    fn default_grid_caps_positive_side() {
        let d = DissimilarityMatrix::from_raw(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let grid = default_curvature_grid(&d);
        assert_eq!(grid.len(), 41);
        let max_pos = grid.iter().map(|c| c.value()).fold(0.0, f64::max);
        let r = 1.0 / max_pos.sqrt();
        assert!(PI * r >= 2.0 - 1e-12);
        assert!(grid.iter().any(|c| c.value() == 0.0));
        // representable everywhere on the positive side
        for c in &grid {
            if c.value() > 0.0 {
                assert!(scalar_product_matrix(&d, *c).is_ok());
            }
        }
    }
}
