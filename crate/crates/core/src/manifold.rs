//! Constant-curvature geometry.
//!
//! A curvature `kappa` selects one of three geometries: Euclidean (`kappa =
//! 0`, points in R^d), spherical (`kappa > 0`, points on the radius-`r`
//! sphere in R^{d+1} with `r = 1/sqrt(kappa)`), and hyperbolic (`kappa < 0`,
//! points on the upper sheet of the hyperboloid `<x,x> = -r^2`, `x(0) > 0`,
//! under the pseudo-Euclidean product). All operations here are pure
//! functions over immutable data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance (w.r.t. `r^2`) for manifold membership.
pub const TOL_MEMBERSHIP: f64 = 1e-9;
/// Slack past the arccos/arccosh domain boundary treated as rounding drift;
/// larger violations signal off-manifold inputs and are reported as errors.
pub const TOL_BOUNDARY: f64 = 1e-9;
/// Relative tolerance on tangent orthogonality in [`exp_map`].
pub const TOL_ORTHOGONAL: f64 = 1e-6;
/// Convergence tolerance on the summed log-map tangent in [`frechet_mean`].
pub const TOL_FRECHET: f64 = 1e-9;
/// Iteration cap for [`frechet_mean`].
pub const MAX_FRECHET_ITERS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("curvature must be finite, got {0}")]
    NonFiniteCurvature(f64),
    #[error("point violates manifold membership by {deviation:.3e} (tolerance {tolerance:.3e})")]
    OffManifold { deviation: f64, tolerance: f64 },
    #[error("cannot project the zero vector onto a sphere")]
    ZeroVector,
    #[error("distance argument {argument} outside the valid domain for {geometry:?}")]
    InvalidDistanceArgument { argument: f64, geometry: Geometry },
    #[error("tangent is not orthogonal to the base point (relative deviation {deviation:.3e})")]
    NonOrthogonalTangent { deviation: f64 },
    #[error("log map undefined for antipodal points")]
    AntipodalPoints,
    #[error("Fréchet mean did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("empty point set")]
    EmptyPointSet,
}

/// Sign class of a curvature value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Euclidean,
    Spherical,
    Hyperbolic,
}

/// Constant curvature `kappa` (units 1/length^2). The radius of the sphere or
/// hyperboloid is `r = 1/sqrt(|kappa|)` for nonzero curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(kappa: f64) -> Result<Self, ManifoldError> {
        if !kappa.is_finite() {
            return Err(ManifoldError::NonFiniteCurvature(kappa));
        }
        Ok(Curvature(kappa))
    }

    pub fn flat() -> Self {
        Curvature(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn geometry(self) -> Geometry {
        if self.0 == 0.0 {
            Geometry::Euclidean
        } else if self.0 > 0.0 {
            Geometry::Spherical
        } else {
            Geometry::Hyperbolic
        }
    }

    /// Radius `1/sqrt(|kappa|)`; `None` in the flat case.
    pub fn radius(self) -> Option<f64> {
        if self.0 == 0.0 {
            None
        } else {
            Some(1.0 / self.0.abs().sqrt())
        }
    }

    /// Ambient coordinate count for a manifold of dimension `d`.
    pub fn ambient_dim(self, d: usize) -> usize {
        match self.geometry() {
            Geometry::Euclidean => d,
            _ => d + 1,
        }
    }
}

fn check_same_len(x: &[f64], y: &[f64]) -> Result<(), ManifoldError> {
    if x.len() != y.len() {
        return Err(ManifoldError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Scalar product associated with the geometry: the Euclidean dot product for
/// `kappa >= 0` and the pseudo-Euclidean product `sum_{i>=1} x_i y_i - x_0
/// y_0` for `kappa < 0` (coordinate 0 is the timelike one).
pub fn scalar_product(x: &[f64], y: &[f64], kappa: Curvature) -> Result<f64, ManifoldError> {
    check_same_len(x, y)?;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    match kappa.geometry() {
        Geometry::Hyperbolic => Ok(dot - 2.0 * x[0] * y[0]),
        _ => Ok(dot),
    }
}

fn euclidean_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Geodesic distance between two on-manifold points.
///
/// Arguments that land just past the arccos/arccosh domain (within
/// [`TOL_BOUNDARY`]) are clamped; larger violations are reported as errors
/// since they indicate points that drifted off the manifold. Small angles are
/// evaluated through chordal half-angle identities, which are well
/// conditioned where arccos/arccosh are not.
pub fn geodesic_distance(x: &[f64], y: &[f64], kappa: Curvature) -> Result<f64, ManifoldError> {
    check_same_len(x, y)?;
    match kappa.geometry() {
        Geometry::Euclidean => Ok(euclidean_dist(x, y)),
        Geometry::Spherical => {
            let r = kappa.radius().unwrap();
            let c = scalar_product(x, y, kappa)? / (r * r);
            if !(-1.0 - TOL_BOUNDARY..=1.0 + TOL_BOUNDARY).contains(&c) {
                return Err(ManifoldError::InvalidDistanceArgument {
                    argument: c,
                    geometry: Geometry::Spherical,
                });
            }
            if c >= 0.0 {
                // half-angle form, exact at coincident points
                let half = (euclidean_dist(x, y) / (2.0 * r)).clamp(-1.0, 1.0);
                Ok(2.0 * r * half.asin())
            } else {
                Ok(r * c.clamp(-1.0, 1.0).acos())
            }
        }
        Geometry::Hyperbolic => {
            let r = kappa.radius().unwrap();
            let c = -scalar_product(x, y, kappa)? / (r * r);
            if c < 1.0 - TOL_BOUNDARY {
                return Err(ManifoldError::InvalidDistanceArgument {
                    argument: c,
                    geometry: Geometry::Hyperbolic,
                });
            }
            // cosh d/r - 1 = <x-y, x-y> / (2 r^2), spacelike hence nonnegative
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let chord2 = scalar_product(&diff, &diff, kappa)?.max(0.0);
            Ok(2.0 * r * (chord2.sqrt() / (2.0 * r)).asinh())
        }
    }
}

/// Project an ambient vector onto the manifold.
///
/// Spherical: rescale to norm `r` (zero vectors are rejected). Hyperbolic:
/// keep the spacelike coordinates and recompute the timelike one from the
/// membership constraint. Flat: identity.
pub fn project_to_manifold(v: &[f64], kappa: Curvature) -> Result<Vec<f64>, ManifoldError> {
    match kappa.geometry() {
        Geometry::Euclidean => Ok(v.to_vec()),
        Geometry::Spherical => {
            let r = kappa.radius().unwrap();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n == 0.0 {
                return Err(ManifoldError::ZeroVector);
            }
            Ok(v.iter().map(|a| a * r / n).collect())
        }
        Geometry::Hyperbolic => {
            let r = kappa.radius().unwrap();
            let tail2: f64 = v[1..].iter().map(|a| a * a).sum();
            let mut out = v.to_vec();
            out[0] = (r * r + tail2).sqrt();
            Ok(out)
        }
    }
}

/// Signed membership deviation `|<x,x> -/+ r^2|` relative to `r^2`; zero for
/// the flat case.
pub fn membership_deviation(x: &[f64], kappa: Curvature) -> f64 {
    match kappa.geometry() {
        Geometry::Euclidean => 0.0,
        Geometry::Spherical => {
            let r2 = kappa.radius().unwrap().powi(2);
            let sq: f64 = x.iter().map(|a| a * a).sum();
            (sq - r2).abs() / r2
        }
        Geometry::Hyperbolic => {
            let r2 = kappa.radius().unwrap().powi(2);
            let sq = scalar_product(x, x, kappa).unwrap_or(f64::NAN);
            if x[0] <= 0.0 {
                return f64::INFINITY;
            }
            (sq + r2).abs() / r2
        }
    }
}

/// Exponential map at `base` applied to a tangent vector.
///
/// The tangent must be orthogonal to the base under the geometry's scalar
/// product within [`TOL_ORTHOGONAL`]; the residual radial component is
/// removed before use so that iterated calls stay consistent.
pub fn exp_map(base: &[f64], tangent: &[f64], kappa: Curvature) -> Result<Vec<f64>, ManifoldError> {
    check_same_len(base, tangent)?;
    match kappa.geometry() {
        Geometry::Euclidean => Ok(base.iter().zip(tangent).map(|(b, t)| b + t).collect()),
        Geometry::Spherical => {
            let r = kappa.radius().unwrap();
            let radial = scalar_product(base, tangent, kappa)? / (r * r);
            let t: Vec<f64> = tangent
                .iter()
                .zip(base)
                .map(|(ti, bi)| ti - radial * bi)
                .collect();
            let n = t.iter().map(|a| a * a).sum::<f64>().sqrt();
            check_orthogonality(radial.abs() * r, n)?;
            if n == 0.0 {
                return Ok(base.to_vec());
            }
            let theta = n / r;
            let (s, c) = (theta.sin(), theta.cos());
            let raw: Vec<f64> = base
                .iter()
                .zip(&t)
                .map(|(b, ti)| c * b + s * r * ti / n)
                .collect();
            project_to_manifold(&raw, kappa)
        }
        Geometry::Hyperbolic => {
            let r = kappa.radius().unwrap();
            // component of the tangent along base w.r.t. the pseudo product
            let radial = -scalar_product(base, tangent, kappa)? / (r * r);
            let t: Vec<f64> = tangent
                .iter()
                .zip(base)
                .map(|(ti, bi)| ti - radial * bi)
                .collect();
            let n = scalar_product(&t, &t, kappa)?.max(0.0).sqrt();
            check_orthogonality(radial.abs() * r, n)?;
            if n == 0.0 {
                return Ok(base.to_vec());
            }
            let theta = n / r;
            let (s, c) = (theta.sinh(), theta.cosh());
            let raw: Vec<f64> = base
                .iter()
                .zip(&t)
                .map(|(b, ti)| c * b + s * r * ti / n)
                .collect();
            project_to_manifold(&raw, kappa)
        }
    }
}

fn check_orthogonality(radial_norm: f64, tangent_norm: f64) -> Result<(), ManifoldError> {
    if tangent_norm > 0.0 && radial_norm > TOL_ORTHOGONAL * tangent_norm.max(1.0) {
        return Err(ManifoldError::NonOrthogonalTangent {
            deviation: radial_norm / tangent_norm.max(1.0),
        });
    }
    Ok(())
}

/// Logarithmic map: the tangent at `base` whose exponential reaches `target`.
/// Its norm equals the geodesic distance.
pub fn log_map(base: &[f64], target: &[f64], kappa: Curvature) -> Result<Vec<f64>, ManifoldError> {
    check_same_len(base, target)?;
    match kappa.geometry() {
        Geometry::Euclidean => Ok(target.iter().zip(base).map(|(t, b)| t - b).collect()),
        Geometry::Spherical => {
            let r = kappa.radius().unwrap();
            let dist = geodesic_distance(base, target, kappa)?;
            let radial = scalar_product(base, target, kappa)? / (r * r);
            let perp: Vec<f64> = target
                .iter()
                .zip(base)
                .map(|(t, b)| t - radial * b)
                .collect();
            let n = perp.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n == 0.0 || dist == 0.0 {
                if radial < 0.0 {
                    return Err(ManifoldError::AntipodalPoints);
                }
                return Ok(vec![0.0; base.len()]);
            }
            Ok(perp.iter().map(|p| p * dist / n).collect())
        }
        Geometry::Hyperbolic => {
            let r = kappa.radius().unwrap();
            let dist = geodesic_distance(base, target, kappa)?;
            let radial = -scalar_product(base, target, kappa)? / (r * r);
            let perp: Vec<f64> = target
                .iter()
                .zip(base)
                .map(|(t, b)| t - radial * b)
                .collect();
            let n = scalar_product(&perp, &perp, kappa)?.max(0.0).sqrt();
            if n == 0.0 || dist == 0.0 {
                return Ok(vec![0.0; base.len()]);
            }
            Ok(perp.iter().map(|p| p * dist / n).collect())
        }
    }
}

/// Norm of a tangent vector under the geometry's scalar product.
pub fn tangent_norm(t: &[f64], kappa: Curvature) -> f64 {
    match kappa.geometry() {
        Geometry::Hyperbolic => scalar_product(t, t, kappa).map_or(f64::NAN, |s| s.max(0.0).sqrt()),
        _ => t.iter().map(|a| a * a).sum::<f64>().sqrt(),
    }
}

/// Fréchet (Karcher) mean: the on-manifold minimiser of the summed squared
/// geodesic distances to `points`.
///
/// Implemented as Riemannian gradient descent `m <- exp_m(mean of log_m x_i)`
/// initialised at the projected Euclidean average, stopping when the summed
/// tangent norm falls below [`TOL_FRECHET`]. For the flat case this reduces
/// to the arithmetic mean in one step. Spherical inputs must stay within an
/// open hemisphere for the mean to be unique; outside it the iteration is
/// reported as non-convergent rather than guessing a minimiser.
pub fn frechet_mean(points: &[Vec<f64>], kappa: Curvature) -> Result<Vec<f64>, ManifoldError> {
    if points.is_empty() {
        return Err(ManifoldError::EmptyPointSet);
    }
    let dim = points[0].len();
    for p in points {
        check_same_len(&points[0], p)?;
    }
    let n = points.len() as f64;
    let mut avg = vec![0.0; dim];
    for p in points {
        for (a, v) in avg.iter_mut().zip(p) {
            *a += v / n;
        }
    }
    let mut mean = project_to_manifold(&avg, kappa)?;
    for _ in 0..MAX_FRECHET_ITERS {
        let mut sum = vec![0.0; dim];
        for p in points {
            let l = log_map(&mean, p, kappa)?;
            for (s, v) in sum.iter_mut().zip(&l) {
                *s += v;
            }
        }
        if tangent_norm(&sum, kappa) <= TOL_FRECHET {
            return Ok(mean);
        }
        let step: Vec<f64> = sum.iter().map(|s| s / n).collect();
        mean = exp_map(&mean, &step, kappa)?;
    }
    Err(ManifoldError::NotConverged(MAX_FRECHET_ITERS))
}

/// Value of the Fréchet objective `sum_i rho(x, x_i)^2` at `x`.
pub fn frechet_objective(
    x: &[f64],
    points: &[Vec<f64>],
    kappa: Curvature,
) -> Result<f64, ManifoldError> {
    let mut total = 0.0;
    for p in points {
        let d = geodesic_distance(x, p, kappa)?;
        total += d * d;
    }
    Ok(total)
}

/// A single point on a constant-curvature manifold. Construction normalises
/// near-misses via [`project_to_manifold`] and rejects coordinates that
/// violate membership by more than [`TOL_MEMBERSHIP`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    coords: Vec<f64>,
    kappa: Curvature,
}

impl ManifoldPoint {
    pub fn new(coords: Vec<f64>, kappa: Curvature) -> Result<Self, ManifoldError> {
        let dev = membership_deviation(&coords, kappa);
        if dev > TOL_MEMBERSHIP {
            return Err(ManifoldError::OffManifold {
                deviation: dev,
                tolerance: TOL_MEMBERSHIP,
            });
        }
        let coords = project_to_manifold(&coords, kappa)?;
        Ok(ManifoldPoint { coords, kappa })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn kappa(&self) -> Curvature {
        self.kappa
    }

    pub fn distance_to(&self, other: &ManifoldPoint) -> Result<f64, ManifoldError> {
        geodesic_distance(&self.coords, &other.coords, self.kappa)
    }
}

/// A row-stacked set of points sharing one curvature; rows are contiguous
/// ambient coordinate slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    kappa: Curvature,
    ambient: usize,
    data: Vec<f64>,
}

impl Configuration {
    pub fn from_rows(rows: Vec<Vec<f64>>, kappa: Curvature) -> Result<Self, ManifoldError> {
        let ambient = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * ambient);
        for r in &rows {
            if r.len() != ambient {
                return Err(ManifoldError::DimensionMismatch {
                    expected: ambient,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Configuration {
            kappa,
            ambient,
            data,
        })
    }

    pub fn kappa(&self) -> Curvature {
        self.kappa
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn nrows(&self) -> usize {
        if self.ambient == 0 {
            0
        } else {
            self.data.len() / self.ambient
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ambient..(i + 1) * self.ambient]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.ambient.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Geodesic distance between rows `i` and `j`.
    pub fn row_distance(&self, i: usize, j: usize) -> Result<f64, ManifoldError> {
        geodesic_distance(self.row(i), self.row(j), self.kappa)
    }

    /// Full pairwise geodesic distance matrix, row-major `n x n`.
    pub fn pairwise_distances(&self) -> Result<Vec<f64>, ManifoldError> {
        let n = self.nrows();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.row_distance(i, j)?;
                out[i * n + j] = d;
                out[j * n + i] = d;
            }
        }
        Ok(out)
    }

    /// Fréchet mean of the rows.
    pub fn frechet_mean(&self) -> Result<Vec<f64>, ManifoldError> {
        frechet_mean(&self.to_rows(), self.kappa)
    }

    /// Keep only the rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Configuration {
        let mut data = Vec::with_capacity(indices.len() * self.ambient);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Configuration {
            kappa: self.kappa,
            ambient: self.ambient,
            data,
        }
    }
}
