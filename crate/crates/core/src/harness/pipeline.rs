//! Experiment pipeline: build class pools and their GED matrices, then for
//! each sequence learn the manifold, fit the detector on nominal data, and
//! stream the operational segment through the CUSUM. All sequence draws are
//! bootstrap indices into the pools, so every graph distance the pipeline
//! needs is a lookup into the pool-level matrices.

use rand::Rng;

use crate::detection::{
    self, calibrate_with, detect_change, CalibrationOptions, CusumConfig, RunMetrics,
    SequenceMetrics,
};
use crate::embedding::{
    self, curvature_sweep, default_curvature_grid, DissimilarityMatrix, EmbeddingError,
    EmbeddingSolution,
};
use crate::graphs;
use crate::manifold::{self, Configuration, Curvature};
use crate::oos;
use crate::parallel;
use crate::rng;

use super::cache::{self, GedKey};
use super::config::{ExperimentConfig, Method};
use super::dataset::{build_pool, ClassPool, PoolParams};
use super::HarnessError;

const TAG_SEQ: u64 = 0x5e71;
const TAG_TRAIN: u64 = 0x7a1a;
const ROLE_EMBED: u64 = 1;
const ROLE_DETECT: u64 = 2;
const ROLE_OP_NOMINAL: u64 = 3;
const ROLE_OP_CHANGE: u64 = 4;
const ROLE_CALIBRATE: u64 = 5;
const ROLE_KCENTRES: u64 = 6;

/// Pools and distance blocks shared by every sequence of one experiment.
pub(crate) struct PoolContext {
    pub pool0: ClassPool,
    pub pool_change: ClassPool,
    /// Pairwise GED over the class-0 pool.
    pub d00: DissimilarityMatrix,
    /// Row-major block `pool0 x pool_change` of cross-class GEDs.
    pub d0c: Vec<f64>,
}

impl PoolContext {
    pub fn build(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        let params = PoolParams {
            n_points: config.n_points,
            support_box: config.support_box,
            node_noise_radius: config.node_noise_radius,
            pool_size: config.pool_size,
        };
        let pool0 = build_pool(config.seed, 0, &params)?;
        let n = pool0.graphs.len();

        let key00 = GedKey {
            seed: config.seed,
            class_a: 0,
            class_b: 0,
            pool_size: config.pool_size,
            n_points: config.n_points,
            support_box: config.support_box,
            node_noise_radius: config.node_noise_radius,
            costs: config.costs,
        };
        let d00 = match cache::load(&key00, n * n) {
            Some(values) => DissimilarityMatrix::from_raw(n, values)
                .map_err(|e| HarnessError::stage("ged-cache", e))?,
            None => {
                let m = graphs::distance_matrix(&pool0.graphs, &config.costs);
                cache::store(&key00, m.values());
                m
            }
        };

        if config.difficulty == 0 {
            let d0c = d00.values().to_vec();
            return Ok(PoolContext {
                pool_change: pool0.clone(),
                pool0,
                d00,
                d0c,
            });
        }

        let pool_change = build_pool(config.seed, config.difficulty, &params)?;
        let key0c = GedKey {
            class_b: config.difficulty,
            ..key00
        };
        let d0c = match cache::load(&key0c, n * pool_change.graphs.len()) {
            Some(values) => values,
            None => {
                let block =
                    graphs::cross_distance_matrix(&pool0.graphs, &pool_change.graphs, &config.costs);
                cache::store(&key0c, &block);
                block
            }
        };
        Ok(PoolContext {
            pool0,
            pool_change,
            d00,
            d0c,
        })
    }

    /// Distance from class-0 pool member `p0` to an operational graph.
    fn dist_to_pool0(&self, p0: usize, g: OpGraph) -> f64 {
        match g {
            OpGraph::Nominal(i) => self.d00.get(p0, i),
            OpGraph::Change(i) => self.d0c[p0 * self.pool_change.graphs.len() + i],
        }
    }
}

/// Reference to one operational graph by pool and index.
#[derive(Debug, Clone, Copy)]
enum OpGraph {
    Nominal(usize),
    Change(usize),
}

/// Fitted per-sequence detector: learned manifold (where applicable), the
/// method's centre statistic, and the calibrated CUSUM.
pub(crate) struct FittedDetector {
    pub kappa: f64,
    pub distortion: f64,
    pub state: MethodState,
    pub cusum: CusumConfig,
}

pub(crate) enum MethodState {
    Graph {
        /// Pool index of the training-set median graph.
        median: usize,
    },
    Dissimilarity {
        /// Prototype pool indices, ascending.
        protos: Vec<usize>,
        mean_y: Vec<f64>,
    },
    Manifold {
        protos: Vec<usize>,
        positions: Configuration,
        mean: Vec<f64>,
    },
}

/// Outcome of one sequence.
#[derive(Debug, Clone, Copy)]
pub struct SequenceOutcome {
    pub seq: usize,
    /// Learned curvature; zero for the graph-domain and dissimilarity
    /// methods.
    pub kappa: f64,
    /// Training-set embedding distortion; zero for non-manifold methods.
    pub distortion: f64,
    pub metrics: SequenceMetrics,
}

/// Wall-clock accounting; informational only and deliberately kept out of
/// the CSV reports so those stay byte-identical across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub pool_seconds: f64,
    pub sequence_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub sequences: Vec<SequenceOutcome>,
    pub aggregate: RunMetrics,
    pub mean_kappa: f64,
    pub mean_distortion: f64,
    pub timings: Timings,
}

/// Run the full experiment: pools, per-sequence train/calibrate/stream, and
/// aggregation. Sequences are independent jobs merged by index.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let t0 = std::time::Instant::now();
    let ctx = PoolContext::build(config)?;
    let pool_seconds = t0.elapsed().as_secs_f64();

    let t1 = std::time::Instant::now();
    let results = parallel::map_indexed(config.n_sequences, |s| run_sequence(config, &ctx, s));
    let mut sequences = Vec::with_capacity(config.n_sequences);
    for r in results {
        sequences.push(r?);
    }
    let sequence_seconds = t1.elapsed().as_secs_f64();

    let metrics: Vec<SequenceMetrics> = sequences.iter().map(|o| o.metrics).collect();
    let aggregate = detection::aggregate_metrics(&metrics, rng_seed_for_aggregate(config.seed))
        .map_err(|e| HarnessError::stage("aggregate", e))?;
    let n = sequences.len() as f64;
    let mean_kappa = sequences.iter().map(|o| o.kappa).sum::<f64>() / n;
    let mean_distortion = sequences.iter().map(|o| o.distortion).sum::<f64>() / n;
    Ok(ExperimentReport {
        config: config.clone(),
        sequences,
        aggregate,
        mean_kappa,
        mean_distortion,
        timings: Timings {
            pool_seconds,
            sequence_seconds,
        },
    })
}

fn rng_seed_for_aggregate(seed: u64) -> u64 {
    seed ^ 0xa99a
}

fn draw_indices(seed: u64, tags: &[u64], count: usize, pool_len: usize) -> Vec<usize> {
    let mut r = rng::derive(seed, tags);
    (0..count).map(|_| r.random_range(0..pool_len)).collect()
}

fn run_sequence(
    config: &ExperimentConfig,
    ctx: &PoolContext,
    s: usize,
) -> Result<SequenceOutcome, HarnessError> {
    let seq = s as u64;
    let pool_len = ctx.pool0.graphs.len();
    let embed_idx = draw_indices(
        config.seed,
        &[TAG_SEQ, seq, ROLE_EMBED],
        config.n_embed_train,
        pool_len,
    );
    let detect_idx = draw_indices(
        config.seed,
        &[TAG_SEQ, seq, ROLE_DETECT],
        config.n_detect_train,
        pool_len,
    );
    let fitted = fit_detector(
        config,
        ctx,
        &embed_idx,
        &detect_idx,
        rng::derive(config.seed, &[TAG_SEQ, seq, ROLE_CALIBRATE])
            .random::<u64>(),
        rng::derive(config.seed, &[TAG_SEQ, seq, ROLE_KCENTRES]).random::<u64>(),
    )?;

    let op_len = config.operational_len();
    let tau = config.change_time();
    let nominal_idx = draw_indices(config.seed, &[TAG_SEQ, seq, ROLE_OP_NOMINAL], tau, pool_len);
    let change_idx = draw_indices(
        config.seed,
        &[TAG_SEQ, seq, ROLE_OP_CHANGE, config.difficulty as u64],
        op_len - tau,
        ctx.pool_change.graphs.len(),
    );

    let mut e_op = Vec::with_capacity(op_len);
    for &i in &nominal_idx {
        e_op.push(statistic(ctx, &fitted.state, OpGraph::Nominal(i))?);
    }
    for &i in &change_idx {
        e_op.push(statistic(ctx, &fitted.state, OpGraph::Change(i))?);
    }
    let alarms = detect_change(&e_op, &fitted.cusum);
    let nominal_alarms: Vec<usize> = alarms.iter().copied().filter(|&t| t <= tau).collect();
    let change_alarms: Vec<usize> = alarms
        .iter()
        .copied()
        .filter(|&t| t > tau)
        .map(|t| t - tau)
        .collect();
    let metrics =
        detection::compute_run_metrics(&nominal_alarms, &change_alarms, tau, op_len - tau);
    Ok(SequenceOutcome {
        seq: s,
        kappa: fitted.kappa,
        distortion: fitted.distortion,
        metrics,
    })
}

/// Stages 1 and 2: learn the manifold and prototypes where the method calls
/// for them, estimate the centre statistic on the detector-training graphs,
/// and calibrate the CUSUM.
pub(crate) fn fit_detector(
    config: &ExperimentConfig,
    ctx: &PoolContext,
    embed_idx: &[usize],
    detect_idx: &[usize],
    calibrate_seed: u64,
    kcentres_seed: u64,
) -> Result<FittedDetector, HarnessError> {
    let state = match config.method {
        Method::GraphDomain => {
            let d_detect = ctx.d00.select(detect_idx);
            let local = graphs::set_median_index(&d_detect)
                .map_err(|e| HarnessError::stage("train-median", e))?;
            MethodState::Graph {
                median: detect_idx[local],
            }
        }
        Method::Dissimilarity => {
            let d_train = ctx.d00.select(embed_idx);
            let kc = oos::kcentres_on_distances(
                embed_idx.len(),
                d_train.values(),
                config.prototypes,
                kcentres_seed,
            )
            .map_err(|e| HarnessError::stage("train-prototypes", e))?;
            let protos: Vec<usize> = kc.indices.iter().map(|&i| embed_idx[i]).collect();
            let mean_y = mean_dissimilarity(ctx, &protos, detect_idx);
            MethodState::Dissimilarity { protos, mean_y }
        }
        method => {
            let d_train = ctx.d00.select(embed_idx);
            let (kappa, solution) = learn_manifold(config, method, &d_train)?;
            let kc = oos::select_prototypes_kcentres(
                &solution.x,
                config.prototypes,
                kcentres_seed,
            )
            .map_err(|e| HarnessError::stage("train-prototypes", e))?;
            let protos: Vec<usize> = kc.indices.iter().map(|&i| embed_idx[i]).collect();
            let positions = solution.x.select_rows(&kc.indices);

            let mut train_points = Vec::with_capacity(detect_idx.len());
            for &g in detect_idx {
                let y = dissimilarity_to(ctx, &protos, OpGraph::Nominal(g));
                train_points.push(place(&y, &positions)?);
            }
            let mean = manifold::frechet_mean(&train_points, kappa)
                .map_err(|e| HarnessError::stage("train-mean", e))?;
            return finish_fit(
                config,
                ctx,
                detect_idx,
                calibrate_seed,
                kappa.value(),
                solution.distortion,
                MethodState::Manifold {
                    protos,
                    positions,
                    mean,
                },
            );
        }
    };
    finish_fit(config, ctx, detect_idx, calibrate_seed, 0.0, 0.0, state)
}

fn finish_fit(
    config: &ExperimentConfig,
    ctx: &PoolContext,
    detect_idx: &[usize],
    calibrate_seed: u64,
    kappa: f64,
    distortion: f64,
    state: MethodState,
) -> Result<FittedDetector, HarnessError> {
    let mut e_train = Vec::with_capacity(detect_idx.len());
    for &g in detect_idx {
        e_train.push(statistic(ctx, &state, OpGraph::Nominal(g))?);
    }
    let cusum = calibrate_with(
        &e_train,
        config.alpha,
        CalibrationOptions {
            mode: config.calibration_mode,
            resamples: detection::BOOTSTRAP_RESAMPLES,
            seed: calibrate_seed,
        },
    )
    .map_err(|e| HarnessError::stage("train-calibrate", e))?;
    Ok(FittedDetector {
        kappa,
        distortion,
        state,
        cusum,
    })
}

/// Curvature selection and embedding for the manifold methods. The sweep
/// already skips infeasible grid points; should the re-embedding at the
/// selected curvature still fail, fall back to the nearest feasible grid
/// point with a warning.
fn learn_manifold(
    config: &ExperimentConfig,
    method: Method,
    d_train: &DissimilarityMatrix,
) -> Result<(Curvature, EmbeddingSolution), HarnessError> {
    if method == Method::Euclidean {
        let sol = embedding::embed_euclidean(d_train, config.dim)
            .map_err(|e| HarnessError::stage("train-embed", e))?;
        return Ok((Curvature::flat(), sol));
    }
    let full_grid: Vec<Curvature> = if config.curvature_grid.is_empty() {
        default_curvature_grid(d_train)
    } else {
        config
            .curvature_grid
            .iter()
            .map(|&g| Curvature::new(g).expect("validated grid"))
            .collect()
    };
    let grid: Vec<Curvature> = full_grid
        .iter()
        .copied()
        .filter(|c| match method {
            Method::Spherical => c.value() > 0.0,
            Method::Hyperbolic => c.value() < 0.0,
            _ => true,
        })
        .collect();
    if grid.is_empty() {
        return Err(HarnessError::InvalidConfig(format!(
            "no usable grid points for method {}",
            method.as_str()
        )));
    }
    let sweep =
        curvature_sweep(d_train, &grid, config.dim).map_err(|e| HarnessError::stage("train-sweep", e))?;
    let kappa = sweep.best;
    match embedding::embed_at(d_train, kappa, config.dim) {
        Ok(sol) => Ok((kappa, sol)),
        Err(EmbeddingError::HyperbolicInfeasible { .. })
        | Err(EmbeddingError::SphericalRepresentability { .. }) => {
            let mut candidates: Vec<Curvature> = grid
                .iter()
                .copied()
                .filter(|c| c.value() != kappa.value())
                .collect();
            candidates.sort_by(|a, b| {
                let da = (a.value() - kappa.value()).abs();
                let db = (b.value() - kappa.value()).abs();
                da.partial_cmp(&db).unwrap()
            });
            for cand in candidates {
                if let Ok(sol) = embedding::embed_at(d_train, cand, config.dim) {
                    eprintln!(
                        "warning: embedding at selected curvature {} failed; falling back to {}",
                        kappa.value(),
                        cand.value()
                    );
                    return Ok((cand, sol));
                }
            }
            Err(HarnessError::stage(
                "train-embed",
                EmbeddingError::AllGridPointsFailed,
            ))
        }
        Err(e) => Err(HarnessError::stage("train-embed", e)),
    }
}

fn dissimilarity_to(ctx: &PoolContext, protos: &[usize], g: OpGraph) -> Vec<f64> {
    protos.iter().map(|&p| ctx.dist_to_pool0(p, g)).collect()
}

fn mean_dissimilarity(ctx: &PoolContext, protos: &[usize], detect_idx: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; protos.len()];
    for &g in detect_idx {
        for (m, &p) in protos.iter().enumerate() {
            mean[m] += ctx.d00.get(p, g);
        }
    }
    for m in &mut mean {
        *m /= detect_idx.len() as f64;
    }
    mean
}

fn place(y: &[f64], positions: &Configuration) -> Result<Vec<f64>, HarnessError> {
    let yv = oos::DissimilarityVector::new(y.to_vec())
        .map_err(|e| HarnessError::stage("embed-oos", e))?;
    let placement = oos::position_from_dissimilarities(&yv, positions)
        .map_err(|e| HarnessError::stage("embed-oos", e))?;
    Ok(placement.coords)
}

/// The monitored scalar statistic of one operational graph.
fn statistic(ctx: &PoolContext, state: &MethodState, g: OpGraph) -> Result<f64, HarnessError> {
    match state {
        MethodState::Graph { median } => Ok(ctx.dist_to_pool0(*median, g)),
        MethodState::Dissimilarity { protos, mean_y } => {
            let y = dissimilarity_to(ctx, protos, g);
            Ok(y
                .iter()
                .zip(mean_y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        }
        MethodState::Manifold {
            protos,
            positions,
            mean,
        } => {
            let y = dissimilarity_to(ctx, protos, g);
            let x = place(&y, positions)?;
            manifold::geodesic_distance(mean, &x, positions.kappa())
                .map_err(|e| HarnessError::stage("stream-statistic", e))
        }
    }
}

/// Dedicated draw tags for one-off training (the `train` CLI command).
pub(crate) fn training_draws(config: &ExperimentConfig, pool_len: usize) -> (Vec<usize>, Vec<usize>, u64, u64) {
    let embed_idx = draw_indices(
        config.seed,
        &[TAG_TRAIN, ROLE_EMBED],
        config.n_embed_train,
        pool_len,
    );
    let detect_idx = draw_indices(
        config.seed,
        &[TAG_TRAIN, ROLE_DETECT],
        config.n_detect_train,
        pool_len,
    );
    let cal_seed = rng::derive(config.seed, &[TAG_TRAIN, ROLE_CALIBRATE]).random::<u64>();
    let kc_seed = rng::derive(config.seed, &[TAG_TRAIN, ROLE_KCENTRES]).random::<u64>();
    (embed_idx, detect_idx, cal_seed, kc_seed)
}
