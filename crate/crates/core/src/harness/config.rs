//! Experiment configuration. Every field has a default mirroring the
//! reference protocol (300 embedding-training graphs, N = 600 detector
//! graphs, 2N operational, alpha = 0.99, 100 sequences) and can be set from
//! a declarative key-value file or overridden per field.

use serde::{Deserialize, Serialize};

use crate::detection::CalibrationMode;
use crate::graphs::EditCostParams;

use super::HarnessError;

/// Monitored statistic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// CUSUM on the graph edit distance to the training set median.
    GraphDomain,
    /// Manifold pipeline pinned at curvature zero.
    Euclidean,
    /// Manifold pipeline with the curvature learned on the positive side.
    Spherical,
    /// Manifold pipeline with the curvature learned on the negative side.
    Hyperbolic,
    /// CUSUM on the Euclidean norm of the dissimilarity-vector deviation.
    Dissimilarity,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GraphDomain => "graph_domain",
            Method::Euclidean => "euclidean",
            Method::Spherical => "spherical",
            Method::Hyperbolic => "hyperbolic",
            Method::Dissimilarity => "dissimilarity",
        }
    }

    /// Whether the method embeds graphs on a constant-curvature manifold.
    pub fn is_manifold(&self) -> bool {
        matches!(
            self,
            Method::Euclidean | Method::Spherical | Method::Hyperbolic
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Class id of the post-change distribution; class 0 is the nominal one.
    pub difficulty: u32,
    /// Prototype count M (unused by the graph-domain method).
    pub prototypes: usize,
    /// Manifold dimension d (unused by graph-domain and dissimilarity).
    pub dim: usize,
    /// Graphs reserved for curvature learning and prototype selection.
    pub n_embed_train: usize,
    /// Graphs used to train the change detector (N).
    pub n_detect_train: usize,
    /// Operational stream length; defaults to 2N when zero.
    pub n_operational: usize,
    /// Number of independent sequences.
    pub n_sequences: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Graphs generated per class pool; sequences bootstrap from the pools.
    pub pool_size: usize,
    pub n_points: usize,
    pub support_box: f64,
    pub node_noise_radius: f64,
    pub costs: EditCostParams,
    /// Explicit curvature grid; empty means the adaptive default grid.
    pub curvature_grid: Vec<f64>,
    pub calibration_mode: CalibrationMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Hyperbolic,
            difficulty: 4,
            prototypes: 30,
            dim: 15,
            n_embed_train: 300,
            n_detect_train: 600,
            n_operational: 0,
            n_sequences: 100,
            alpha: 0.99,
            seed: 1,
            pool_size: 300,
            n_points: 10,
            support_box: 10.0,
            node_noise_radius: crate::graphs::NODE_NOISE_RADIUS,
            costs: EditCostParams::default(),
            curvature_grid: Vec::new(),
            calibration_mode: CalibrationMode::ArlTargeted,
        }
    }
}

impl ExperimentConfig {
    /// Operational stream length, applying the `2N` default.
    pub fn operational_len(&self) -> usize {
        if self.n_operational == 0 {
            2 * self.n_detect_train
        } else {
            self.n_operational
        }
    }

    /// Change time: the midpoint of the operational segment.
    pub fn change_time(&self) -> usize {
        self.operational_len() / 2
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n_sequences == 0 {
            return fail("n_sequences must be positive".into());
        }
        if self.n_detect_train < crate::detection::MIN_TRAIN_LEN {
            return fail(format!(
                "n_detect_train must be at least {}",
                crate::detection::MIN_TRAIN_LEN
            ));
        }
        if self.operational_len() < 2 {
            return fail("operational stream too short".into());
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if self.pool_size == 0 {
            return fail("pool_size must be positive".into());
        }
        if self.n_points < 3 {
            return fail("n_points must be at least 3".into());
        }
        if self.support_box <= 0.0 || self.node_noise_radius < 0.0 {
            return fail("support_box must be positive, noise nonnegative".into());
        }
        self.costs
            .validate()
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        if self.method.is_manifold() || self.method == Method::Dissimilarity {
            if self.n_embed_train < 2 {
                return fail("n_embed_train must be at least 2".into());
            }
            if self.prototypes == 0 || self.prototypes > self.n_embed_train {
                return fail(format!(
                    "prototypes must lie in 1..={}",
                    self.n_embed_train
                ));
            }
        }
        if self.method.is_manifold() && self.dim + 1 >= self.n_embed_train {
            return fail(format!(
                "dim {} too large for {} embedding-training graphs",
                self.dim, self.n_embed_train
            ));
        }
        for &g in &self.curvature_grid {
            if !g.is_finite() {
                return fail(format!("curvature grid entry {g} not finite"));
            }
        }
        match self.method {
            Method::Spherical if !self.curvature_grid.is_empty() => {
                if !self.curvature_grid.iter().any(|&g| g > 0.0) {
                    return fail("spherical method needs positive grid points".into());
                }
            }
            Method::Hyperbolic if !self.curvature_grid.is_empty() => {
                if !self.curvature_grid.iter().any(|&g| g < 0.0) {
                    return fail("hyperbolic method needs negative grid points".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}
