//! Class pools and dataset files. A pool is the fixed set of graphs one
//! class contributes to an experiment; sequences bootstrap from it. Dataset
//! files hold one JSON header line followed by one JSON graph per line.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graphs::{generate_from_template, AttributedGraph, DelaunayClassSpec};
use crate::parallel;
use crate::rng;

use super::HarnessError;

const TAG_POOL: u64 = 0x9001;

/// Fixed per-class graph sample of one experiment.
#[derive(Debug, Clone)]
pub struct ClassPool {
    pub spec: DelaunayClassSpec,
    pub graphs: Vec<AttributedGraph>,
}

/// Generation parameters shared by every class of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct PoolParams {
    pub n_points: usize,
    pub support_box: f64,
    pub node_noise_radius: f64,
    pub pool_size: usize,
}

/// Build the pool of `class_id` deterministically from the experiment seed.
/// Each graph draws from its own derived stream, so the pool is identical
/// regardless of evaluation order.
pub fn build_pool(seed: u64, class_id: u32, params: &PoolParams) -> Result<ClassPool, HarnessError> {
    let spec = DelaunayClassSpec::new(class_id, params.n_points, params.support_box, seed);
    let template = crate::graphs::class_template(&spec);
    let results = parallel::map_indexed(params.pool_size, |i| {
        let mut graph_rng = rng::derive(seed, &[TAG_POOL, class_id as u64, i as u64]);
        generate_from_template(&template, &mut graph_rng, params.node_noise_radius)
    });
    let mut graphs = Vec::with_capacity(params.pool_size);
    for r in results {
        graphs.push(r.map_err(|e| HarnessError::stage("dataset", e))?);
    }
    Ok(ClassPool { spec, graphs })
}

/// Header line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub spec: DelaunayClassSpec,
    pub n_graphs: usize,
    pub node_noise_radius: f64,
}

/// Write one class pool as a JSONL file (`class_<id>.jsonl`) under
/// `out_dir`; returns the file path.
pub fn write_class_file(
    out_dir: &Path,
    pool: &ClassPool,
    node_noise_radius: f64,
) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io("dataset", e))?;
    let path = out_dir.join(format!("class_{}.jsonl", pool.spec.class_id));
    let header = DatasetHeader {
        spec: pool.spec,
        n_graphs: pool.graphs.len(),
        node_noise_radius,
    };
    let mut buf = String::new();
    buf.push_str(&serde_json::to_string(&header).expect("header serializes"));
    buf.push('\n');
    for g in &pool.graphs {
        buf.push_str(&g.to_json_line());
        buf.push('\n');
    }
    let mut file = std::fs::File::create(&path).map_err(|e| HarnessError::io("dataset", e))?;
    file.write_all(buf.as_bytes())
        .map_err(|e| HarnessError::io("dataset", e))?;
    Ok(path)
}

/// Generate pools for `classes` and write one file per class.
pub fn generate_dataset(
    out_dir: &Path,
    classes: &[u32],
    seed: u64,
    params: &PoolParams,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths = Vec::with_capacity(classes.len());
    for &class_id in classes {
        let pool = build_pool(seed, class_id, params)?;
        paths.push(write_class_file(out_dir, &pool, params.node_noise_radius)?);
    }
    Ok(paths)
}

/// Read a dataset file back: header plus graphs.
pub fn read_class_file(path: &Path) -> Result<(DatasetHeader, Vec<AttributedGraph>), HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io("dataset", e))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| HarnessError::InvalidConfig(format!("{}: empty dataset", path.display())))?
        .map_err(|e| HarnessError::io("dataset", e))?;
    let header: DatasetHeader = serde_json::from_str(&header_line)
        .map_err(|e| HarnessError::InvalidConfig(format!("bad dataset header: {e}")))?;
    let mut graphs = Vec::with_capacity(header.n_graphs);
    for line in lines {
        let line = line.map_err(|e| HarnessError::io("dataset", e))?;
        if line.trim().is_empty() {
            continue;
        }
        graphs.push(
            AttributedGraph::from_json_line(&line).map_err(|e| HarnessError::stage("dataset", e))?,
        );
    }
    Ok((header, graphs))
}

/// Read a plain JSONL graph stream (no header line expected; a leading
/// header is skipped if present).
pub fn read_graph_stream(path: &Path) -> Result<Vec<AttributedGraph>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io("detect", e))?;
    let mut graphs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io("detect", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match AttributedGraph::from_json_line(&line) {
            Ok(g) => graphs.push(g),
            Err(e) => {
                if i == 0 && serde_json::from_str::<DatasetHeader>(&line).is_ok() {
                    continue;
                }
                return Err(HarnessError::stage("detect", e));
            }
        }
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PoolParams {
        PoolParams {
            n_points: 8,
            support_box: 10.0,
            node_noise_radius: 0.5,
            pool_size: 12,
        }
    }

    #[test]
    fn pools_are_deterministic() {
        let a = build_pool(3, 0, &params()).unwrap();
        let b = build_pool(3, 0, &params()).unwrap();
        assert_eq!(a.graphs, b.graphs);
        let c = build_pool(4, 0, &params()).unwrap();
        assert_ne!(a.graphs, c.graphs);
    }

    #[test]
    fn dataset_files_round_trip_and_are_byte_stable() {
        let dir = std::env::temp_dir().join(format!("ccm-dataset-test-{}", std::process::id()));
        let paths = generate_dataset(&dir, &[0, 2], 9, &params()).unwrap();
        assert_eq!(paths.len(), 2);
        let first = std::fs::read(&paths[0]).unwrap();
        assert_eq!(
            String::from_utf8_lossy(&first).lines().count(),
            1 + params().pool_size
        );

        let (header, graphs) = read_class_file(&paths[0]).unwrap();
        assert_eq!(header.spec.class_id, 0);
        assert_eq!(graphs.len(), params().pool_size);

        generate_dataset(&dir, &[0, 2], 9, &params()).unwrap();
        let second = std::fs::read(&paths[0]).unwrap();
        assert_eq!(first, second);
        std::fs::remove_dir_all(&dir).ok();
    }
}
