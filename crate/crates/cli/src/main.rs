//! Command-line front end: dataset generation, training, the full
//! experiment pipeline, distortion sweeps, and applying a trained model to a
//! graph stream.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ccm_core::detection::CalibrationMode;
use ccm_core::harness::{
    self, generate_dataset, read_graph_stream, report_csv, run_distortion_sweep, run_pipeline,
    runs_csv, ExperimentConfig, Method, PoolParams, TrainedModel,
};

#[derive(Parser)]
#[command(
    name = "ccm",
    about = "Constant-curvature manifold embedding and change detection for attributed-graph streams",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate Delaunay dataset files (one JSONL file per class).
    Gen {
        /// Output directory for class_<id>.jsonl files.
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
        /// Class ids to generate, e.g. 0,2,4.
        #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8,10,12")]
        classes: Vec<u32>,
        /// Graphs per class.
        #[arg(long)]
        per_class: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a model (curvature, prototypes, centre statistic, thresholds)
    /// and write it as a single JSON document.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output model path.
        #[arg(short, long, default_value = "model.json")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the full experiment pipeline and write CSV reports.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.csv and runs.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Distortion sweep over the curvature grid; writes CSV and SVG.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "sweep.csv")]
        csv: PathBuf,
        #[arg(long, default_value = "sweep.svg")]
        svg: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Apply a trained model to a JSONL graph stream and print alarm times.
    Detect {
        /// Trained model file from `ccm train`.
        #[arg(long)]
        model: PathBuf,
        /// JSONL graph stream (a dataset header line is skipped).
        #[arg(long)]
        stream: PathBuf,
    },
}

/// Per-field overrides applied on top of the config file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    difficulty: Option<u32>,
    #[arg(long)]
    prototypes: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_embed_train: Option<usize>,
    #[arg(long)]
    n_detect_train: Option<usize>,
    #[arg(long)]
    n_operational: Option<usize>,
    #[arg(long)]
    n_sequences: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    support_box: Option<f64>,
    #[arg(long)]
    node_noise_radius: Option<f64>,
    #[arg(long)]
    node_cost: Option<f64>,
    #[arg(long)]
    edge_cost: Option<f64>,
    #[arg(long)]
    substitution_cap: Option<f64>,
    /// Comma-separated explicit curvature grid.
    #[arg(long, value_delimiter = ',')]
    curvature_grid: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_calibration)]
    calibration_mode: Option<CalibrationMode>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "graph_domain" => Ok(Method::GraphDomain),
        "euclidean" => Ok(Method::Euclidean),
        "spherical" => Ok(Method::Spherical),
        "hyperbolic" => Ok(Method::Hyperbolic),
        "dissimilarity" => Ok(Method::Dissimilarity),
        other => Err(format!(
            "unknown method '{other}' (expected graph_domain, euclidean, spherical, hyperbolic or dissimilarity)"
        )),
    }
}

fn parse_calibration(s: &str) -> Result<CalibrationMode, String> {
    match s {
        "conditional" => Ok(CalibrationMode::Conditional),
        "unconditional" => Ok(CalibrationMode::Unconditional),
        "arl_targeted" => Ok(CalibrationMode::ArlTargeted),
        other => Err(format!(
            "unknown calibration mode '{other}' (expected conditional, unconditional or arl_targeted)"
        )),
    }
}

fn load_config(path: &Option<PathBuf>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = overrides.$field { cfg.$field = v; })*
        };
    }
    apply!(
        method,
        difficulty,
        prototypes,
        dim,
        n_embed_train,
        n_detect_train,
        n_operational,
        n_sequences,
        alpha,
        seed,
        pool_size,
        n_points,
        support_box,
        node_noise_radius,
        calibration_mode
    );
    if let Some(v) = overrides.node_cost {
        cfg.costs.node_insert_delete = v;
    }
    if let Some(v) = overrides.edge_cost {
        cfg.costs.edge_insert_delete = v;
    }
    if let Some(v) = overrides.substitution_cap {
        cfg.costs.substitution_cap = v;
    }
    if let Some(grid) = &overrides.curvature_grid {
        cfg.curvature_grid = grid.clone();
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            out,
            classes,
            per_class,
            overrides,
            config,
        } => {
            let mut cfg = load_config(&config, &overrides)?;
            if let Some(p) = per_class {
                cfg.pool_size = p;
            }
            let params = PoolParams {
                n_points: cfg.n_points,
                support_box: cfg.support_box,
                node_noise_radius: cfg.node_noise_radius,
                pool_size: cfg.pool_size,
            };
            let paths = generate_dataset(&out, &classes, cfg.seed, &params)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::Train {
            config,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let model = harness::train(&cfg)?;
            model.save(&out)?;
            eprintln!(
                "trained {} model: kappa={:.6e} q={:.6} h={:.6} -> {}",
                cfg.method.as_str(),
                model.kappa,
                model.q,
                model.h,
                out.display()
            );
        }
        Command::Run {
            config,
            out_dir,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let report = run_pipeline(&cfg)?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let report_path = out_dir.join("report.csv");
            let runs_path = out_dir.join("runs.csv");
            std::fs::write(&report_path, report_csv(&[&report]))?;
            std::fs::write(&runs_path, runs_csv(&report))?;
            let a = &report.aggregate;
            eprintln!(
                "{} difficulty {}: DCR {:.3} [{:.3},{:.3}] ARL0 {:.1} ARL1 {:.1} (pool {:.1}s, sequences {:.1}s)",
                cfg.method.as_str(),
                cfg.difficulty,
                a.dcr,
                a.dcr_ci.0,
                a.dcr_ci.1,
                a.arl0,
                a.arl1,
                report.timings.pool_seconds,
                report.timings.sequence_seconds,
            );
            println!("{}", report_path.display());
            println!("{}", runs_path.display());
        }
        Command::Sweep {
            config,
            csv,
            svg,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let artifacts = run_distortion_sweep(&cfg)?;
            std::fs::write(&csv, &artifacts.csv)?;
            std::fs::write(&svg, &artifacts.svg)?;
            eprintln!("minimising curvature: {:.6e}", artifacts.best_kappa);
            println!("{}", csv.display());
            println!("{}", svg.display());
        }
        Command::Detect { model, stream } => {
            let model = TrainedModel::load(&model)?;
            let graphs = read_graph_stream(&stream)?;
            let alarms = model.detect_stream(&graphs)?;
            eprintln!("{} graphs scanned, {} alarms", graphs.len(), alarms.len());
            for t in alarms {
                println!("{t}");
            }
        }
    }
    Ok(())
}
