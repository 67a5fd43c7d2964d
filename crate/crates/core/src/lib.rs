//! Embedding of attributed-graph streams onto constant-curvature manifolds
//! (Euclidean, spherical, hyperbolic) with curvature learned from data, plus
//! CUSUM-based change and anomaly detection on the resulting geodesic
//! statistics.
//!
//! The crate is organised around the processing pipeline:
//!
//! * [`graphs`] — attributed graphs, approximate graph edit distance via
//!   bipartite assignment, Delaunay dataset generation, graph-domain medians.
//! * [`manifold`] — curvature, geodesics, exp/log maps, Fréchet means.
//! * [`embedding`] — training-set embedding from a dissimilarity matrix and
//!   curvature selection by distortion sweep.
//! * [`oos`] — prototype selection and out-of-sample positioning.
//! * [`detection`] — CUSUM recursion, threshold calibration, run metrics.
//! * [`harness`] — experiment pipeline, dataset/model files, CSV/SVG reports.
//!
//! With the default `parallel` feature the hot loops (distance matrices,
//! curvature sweeps, sequence batches) run on rayon; disabling the feature
//! yields a fully sequential build with identical outputs.

#![forbid(unsafe_code)]

pub mod detection;
pub mod embedding;
pub mod graphs;
pub mod harness;
pub mod manifold;
pub mod oos;

pub(crate) mod parallel;
pub(crate) mod rng;

pub use manifold::{Configuration, Curvature, Geometry, ManifoldPoint};
