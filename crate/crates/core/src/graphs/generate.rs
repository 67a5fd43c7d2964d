//! Delaunay dataset generation. A class is a perturbation of a shared set of
//! seed points: class 0 draws them uniformly in the support box, class `t >=
//! 1` displaces each seed point by a vector of length `support_box * 2^-t`
//! (so larger class ids sit closer to class 0 and are harder to tell apart).
//! Every emitted graph adds per-node disc noise to the class template and
//! re-triangulates.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::delaunay::delaunay_triangulation;
use super::{AttributedGraph, GraphError};
use crate::rng;

/// Radius of the per-graph uniform disc noise added to each template node.
pub const NODE_NOISE_RADIUS: f64 = 0.5;

const TAG_TEMPLATE: u64 = 0x7431;
const MAX_RETRIES: usize = 32;

/// Parameters of one Delaunay graph class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayClassSpec {
    pub class_id: u32,
    pub n_points: usize,
    pub support_box: f64,
    pub perturbation_radius: f64,
    pub seed: u64,
}

impl DelaunayClassSpec {
    /// Standard class layout: `perturbation_radius = support_box * 2^-t` for
    /// `t >= 1`, zero for the reference class.
    pub fn new(class_id: u32, n_points: usize, support_box: f64, seed: u64) -> Self {
        let perturbation_radius = if class_id == 0 {
            0.0
        } else {
            support_box * 2f64.powi(-(class_id as i32))
        };
        DelaunayClassSpec {
            class_id,
            n_points,
            support_box,
            perturbation_radius,
            seed,
        }
    }
}

/// Template point set of a class: the class-0 seed points, displaced for
/// `class_id >= 1`. Deterministic in `(seed, class_id)`.
pub fn class_template(spec: &DelaunayClassSpec) -> Vec<[f64; 2]> {
    let mut seed_rng = rng::derive(spec.seed, &[TAG_TEMPLATE, 0]);
    let mut pts: Vec<[f64; 2]> = (0..spec.n_points)
        .map(|_| {
            [
                seed_rng.random::<f64>() * spec.support_box,
                seed_rng.random::<f64>() * spec.support_box,
            ]
        })
        .collect();
    if spec.class_id > 0 {
        let mut disp_rng = rng::derive(spec.seed, &[TAG_TEMPLATE, spec.class_id as u64]);
        for p in &mut pts {
            let angle = disp_rng.random::<f64>() * TAU;
            p[0] += spec.perturbation_radius * angle.cos();
            p[1] += spec.perturbation_radius * angle.sin();
        }
    }
    pts
}

/// Draw one graph of the class: template plus i.i.d. per-node disc noise,
/// re-triangulated. Degenerate point sets are retried with fresh noise.
pub fn generate_class_graph(
    spec: &DelaunayClassSpec,
    rng: &mut ChaCha12Rng,
    noise_radius: f64,
) -> Result<AttributedGraph, GraphError> {
    let template = class_template(spec);
    generate_from_template(&template, rng, noise_radius)
}

/// As [`generate_class_graph`] but with a precomputed template, so bulk
/// generation does not rebuild it per draw.
pub fn generate_from_template(
    template: &[[f64; 2]],
    rng: &mut ChaCha12Rng,
    noise_radius: f64,
) -> Result<AttributedGraph, GraphError> {
    for _ in 0..MAX_RETRIES {
        let pts: Vec<[f64; 2]> = template
            .iter()
            .map(|p| {
                let radius = noise_radius * rng.random::<f64>().sqrt();
                let angle = rng.random::<f64>() * TAU;
                [p[0] + radius * angle.cos(), p[1] + radius * angle.sin()]
            })
            .collect();
        match delaunay_triangulation(&pts) {
            Ok(edges) => return AttributedGraph::new(pts, edges),
            Err(GraphError::TooFewPoints(n)) => return Err(GraphError::TooFewPoints(n)),
            Err(_) => continue,
        }
    }
    Err(GraphError::RetriesExhausted(MAX_RETRIES))
}
