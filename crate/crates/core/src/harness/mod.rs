//! Experiment harness: configuration, dataset generation, the end-to-end
//! pipeline (curvature learning, prototypes, detector calibration,
//! operational streaming), trained-model files, and CSV/SVG reports.

mod cache;
mod config;
mod dataset;
mod model;
mod pipeline;
mod report;
mod svg;

pub use cache::{cache_dir, CACHE_DIR_ENV};
pub use config::{ExperimentConfig, Method};
pub use dataset::{
    build_pool, generate_dataset, read_class_file, read_graph_stream, write_class_file, ClassPool,
    DatasetHeader, PoolParams,
};
pub use model::{train, MethodMean, TrainedModel};
pub use pipeline::{run_pipeline, ExperimentReport, SequenceOutcome, Timings};
pub use report::{report_csv, runs_csv, sweep_csv, REPORT_HEADER, RUNS_HEADER, SWEEP_HEADER};
pub use svg::sweep_svg;

use thiserror::Error;

use crate::embedding::{self, DissimilarityMatrix, SweepPoint};
use crate::manifold::Curvature;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("stage {stage} I/O error: {source}")]
    Io {
        stage: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn io(stage: &str, err: std::io::Error) -> Self {
        HarnessError::Io {
            stage: stage.to_string(),
            source: err,
        }
    }
}

/// Distortion sweep over the training distance matrix of the experiment's
/// class-0 pool: the curve, its CSV rows, and a line-plot SVG.
#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub curve: Vec<SweepPoint>,
    pub best_kappa: f64,
    pub csv: String,
    pub svg: String,
}

pub fn run_distortion_sweep(config: &ExperimentConfig) -> Result<SweepArtifacts, HarnessError> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.difficulty = 0;
    let ctx = pipeline::PoolContext::build(&cfg)?;
    let (embed_idx, _, _, _) = pipeline::training_draws(config, ctx.pool0.graphs.len());
    let d_train = ctx.d00.select(&embed_idx);
    let grid: Vec<Curvature> = if config.curvature_grid.is_empty() {
        embedding::default_curvature_grid(&d_train)
    } else {
        config
            .curvature_grid
            .iter()
            .map(|&g| Curvature::new(g).expect("validated grid"))
            .collect()
    };
    let sweep = embedding::curvature_sweep(&d_train, &grid, config.dim)
        .map_err(|e| HarnessError::stage("sweep", e))?;
    Ok(SweepArtifacts {
        csv: report::sweep_csv(&sweep.curve),
        svg: svg::sweep_svg(&sweep.curve),
        best_kappa: sweep.best.value(),
        curve: sweep.curve,
    })
}

/// Training distance matrix of an experiment (exposed for inspection and
/// tests; uses the same cache as the pipeline).
pub fn training_distance_matrix(
    config: &ExperimentConfig,
) -> Result<DissimilarityMatrix, HarnessError> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.difficulty = 0;
    let ctx = pipeline::PoolContext::build(&cfg)?;
    let (embed_idx, _, _, _) = pipeline::training_draws(config, ctx.pool0.graphs.len());
    Ok(ctx.d00.select(&embed_idx))
}
