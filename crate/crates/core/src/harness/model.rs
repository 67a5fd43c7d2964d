//! Trained model file: everything the operational phase needs to score and
//! monitor a fresh graph stream, as one JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{detect_change, CalibrationMode, CusumConfig};
use crate::graphs::{self, AttributedGraph, EditCostParams};
use crate::manifold::{self, Configuration, Curvature};
use crate::oos;

use super::config::{ExperimentConfig, Method};
use super::pipeline::{fit_detector, training_draws, MethodState, PoolContext};
use super::HarnessError;

/// Centre statistic of the trained method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodMean {
    /// Median graph of the training sample (graph-domain method).
    Graph { graph: AttributedGraph },
    /// Mean dissimilarity vector (dissimilarity method).
    Vector { values: Vec<f64> },
    /// Fréchet mean on the manifold (manifold methods).
    Point { coords: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub method: Method,
    pub kappa: f64,
    pub dim: usize,
    pub alpha: f64,
    pub q: f64,
    pub h: f64,
    pub seed: u64,
    pub costs: EditCostParams,
    pub calibration_mode: CalibrationMode,
    pub mean: MethodMean,
    /// Prototype graphs (empty for the graph-domain method).
    pub prototypes: Vec<AttributedGraph>,
    /// Prototype positions on the manifold (manifold methods only).
    pub prototype_positions: Option<Configuration>,
}

/// Train a model on the experiment's class-0 pool using dedicated draws
/// (independent from the per-sequence streams of `run`).
pub fn train(config: &ExperimentConfig) -> Result<TrainedModel, HarnessError> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.difficulty = 0; // training touches nominal data only
    let ctx = PoolContext::build(&cfg)?;
    let (embed_idx, detect_idx, cal_seed, kc_seed) =
        training_draws(config, ctx.pool0.graphs.len());
    let fitted = fit_detector(config, &ctx, &embed_idx, &detect_idx, cal_seed, kc_seed)?;

    let (mean, prototypes, prototype_positions) = match &fitted.state {
        MethodState::Graph { median } => (
            MethodMean::Graph {
                graph: ctx.pool0.graphs[*median].clone(),
            },
            Vec::new(),
            None,
        ),
        MethodState::Dissimilarity { protos, mean_y } => (
            MethodMean::Vector {
                values: mean_y.clone(),
            },
            protos.iter().map(|&p| ctx.pool0.graphs[p].clone()).collect(),
            None,
        ),
        MethodState::Manifold {
            protos,
            positions,
            mean,
        } => (
            MethodMean::Point {
                coords: mean.clone(),
            },
            protos.iter().map(|&p| ctx.pool0.graphs[p].clone()).collect(),
            Some(positions.clone()),
        ),
    };
    Ok(TrainedModel {
        method: config.method,
        kappa: fitted.kappa,
        dim: config.dim,
        alpha: config.alpha,
        q: fitted.cusum.q,
        h: fitted.cusum.h,
        seed: config.seed,
        costs: config.costs,
        calibration_mode: config.calibration_mode,
        mean,
        prototypes,
        prototype_positions,
    })
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::io("train", e))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io("detect", e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::InvalidConfig(format!("bad model file: {e}")))
    }

    fn cusum(&self) -> CusumConfig {
        CusumConfig {
            q: self.q,
            h: self.h,
            alpha: self.alpha,
        }
    }

    /// Monitored statistic of one fresh graph, computed with live graph
    /// edit distances.
    pub fn statistic(&self, g: &AttributedGraph) -> Result<f64, HarnessError> {
        match &self.mean {
            MethodMean::Graph { graph } => {
                Ok(graphs::graph_edit_distance(graph, g, &self.costs))
            }
            MethodMean::Vector { values } => {
                let y = self.dissimilarities(g);
                Ok(y
                    .iter()
                    .zip(values)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt())
            }
            MethodMean::Point { coords } => {
                let positions = self
                    .prototype_positions
                    .as_ref()
                    .ok_or_else(|| {
                        HarnessError::InvalidConfig("model lacks prototype positions".into())
                    })?;
                let y = oos::DissimilarityVector::new(self.dissimilarities(g))
                    .map_err(|e| HarnessError::stage("detect", e))?;
                let placement = oos::position_from_dissimilarities(&y, positions)
                    .map_err(|e| HarnessError::stage("detect", e))?;
                let kappa = Curvature::new(self.kappa)
                    .map_err(|e| HarnessError::stage("detect", e))?;
                manifold::geodesic_distance(coords, &placement.coords, kappa)
                    .map_err(|e| HarnessError::stage("detect", e))
            }
        }
    }

    fn dissimilarities(&self, g: &AttributedGraph) -> Vec<f64> {
        self.prototypes
            .iter()
            .map(|r| graphs::graph_edit_distance(g, r, &self.costs))
            .collect()
    }

    /// Apply the trained detector to a graph stream, returning 1-based alarm
    /// times.
    pub fn detect_stream(&self, stream: &[AttributedGraph]) -> Result<Vec<usize>, HarnessError> {
        let mut e = Vec::with_capacity(stream.len());
        for g in stream {
            e.push(self.statistic(g)?);
        }
        Ok(detect_change(&e, &self.cusum()))
    }
}
