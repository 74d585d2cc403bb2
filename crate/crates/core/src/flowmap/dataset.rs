use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use super::config::{ExtractionConfig, FlowMapStrategy};
use super::npy;
use crate::error::FlowMapError;
use crate::geometry::{Domain, Vec3};
use crate::io_util::atomic_write;
use crate::seeding::{SeedSet, SeedingStrategy};

/// Where the seeds of a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub strategy: SeedingStrategy,
    pub token: u64,
    pub count: usize,
    pub domain: Domain,
}

impl From<&SeedSet> for SeedProvenance {
    fn from(s: &SeedSet) -> Self {
        Self { strategy: s.strategy, token: s.token, count: s.len(), domain: s.domain }
    }
}

/// A `[n+1, N, 3]` array: row 0 holds the seeds, row `j` the end positions
/// at file cycle `j·C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMapDataset {
    pub data: Array3<f32>,
    pub config: ExtractionConfig,
    pub seeds: SeedProvenance,
}

impl FlowMapDataset {
    pub fn new(
        data: Array3<f32>,
        config: ExtractionConfig,
        seeds: SeedProvenance,
    ) -> Result<Self, FlowMapError> {
        let (rows, count, dim) = data.dim();
        if dim != 3 {
            return Err(FlowMapError::Shape(data.shape().to_vec()));
        }
        if rows != config.file_cycles() + 1 || count != seeds.count {
            return Err(FlowMapError::Metadata(format!(
                "array is [{rows}, {count}, 3] but metadata implies [{}, {}, 3]",
                config.file_cycles() + 1,
                seeds.count
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FlowMapError::Format("dataset holds non-finite values".into()));
        }
        Ok(Self { data, config, seeds })
    }

    /// `n`.
    pub fn file_cycles(&self) -> usize {
        self.data.dim().0 - 1
    }

    /// `N`.
    pub fn seed_count(&self) -> usize {
        self.data.dim().1
    }

    pub fn row(&self, j: usize) -> ArrayView2<'_, f32> {
        self.data.index_axis(ndarray::Axis(0), j)
    }

    pub fn position(&self, row: usize, seed: usize) -> Vec3 {
        Vec3::new(
            self.data[[row, seed, 0]] as f64,
            self.data[[row, seed, 1]] as f64,
            self.data[[row, seed, 2]] as f64,
        )
    }

    pub fn seed_positions(&self) -> Vec<Vec3> {
        (0..self.seed_count()).map(|i| self.position(0, i)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMetadata {
    strategy: FlowMapStrategy,
    delta: f64,
    #[serde(rename = "interval_C")]
    interval: u32,
    #[serde(rename = "T")]
    duration: f64,
    n: usize,
    #[serde(rename = "N")]
    seed_count: usize,
    domain: Domain,
    seeding: SeedingStrategy,
    rng_token: u64,
}

/// The metadata document stored next to a dataset file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FlowMapError + '_ {
    move |source| FlowMapError::Io { path: path.to_path_buf(), source }
}

pub fn write_dataset(ds: &FlowMapDataset, path: impl AsRef<Path>) -> Result<(), FlowMapError> {
    let path = path.as_ref();
    let data: Vec<f32> = ds.data.iter().copied().collect();
    let bytes = npy::encode_f32(ds.data.shape(), &data)?;
    atomic_write(path, &bytes).map_err(io_err(path))?;

    let meta = DatasetMetadata {
        strategy: ds.config.strategy,
        delta: ds.config.delta,
        interval: ds.config.interval,
        duration: ds.config.duration,
        n: ds.file_cycles(),
        seed_count: ds.seed_count(),
        domain: ds.seeds.domain,
        seeding: ds.seeds.strategy,
        rng_token: ds.seeds.token,
    };
    let sidecar = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| FlowMapError::Metadata(e.to_string()))?;
    atomic_write(&sidecar, text.as_bytes()).map_err(io_err(&sidecar))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<FlowMapDataset, FlowMapError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (shape, values) = npy::decode_f32(&bytes)?;
    if shape.len() != 3 || shape[2] != 3 {
        return Err(FlowMapError::Shape(shape));
    }
    let data = Array3::from_shape_vec((shape[0], shape[1], shape[2]), values)
        .map_err(|e| FlowMapError::Format(e.to_string()))?;

    let sidecar = sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?;
    let meta: DatasetMetadata =
        serde_json::from_str(&text).map_err(|e| FlowMapError::Metadata(e.to_string()))?;
    let config = ExtractionConfig::new(meta.delta, meta.interval, meta.duration, meta.strategy)?;
    if config.file_cycles() != meta.n {
        return Err(FlowMapError::Metadata(format!(
            "recorded n = {} disagrees with the extraction parameters (n = {})",
            meta.n,
            config.file_cycles()
        )));
    }
    let seeds = SeedProvenance {
        strategy: meta.seeding,
        token: meta.rng_token,
        count: meta.seed_count,
        domain: meta.domain,
    };
    FlowMapDataset::new(data, config, seeds)
}
