//! A trained surrogate: network weights plus everything needed to map
//! between domain coordinates and the network's normalized inputs.
//!
//! # File layout
//!
//! | bytes            | content                                               |
//! |------------------|-------------------------------------------------------|
//! | 0..8             | magic `FLOWSURR`                                      |
//! | 8..12            | format version (u32 LE)                               |
//! | 12..16           | payload element size in bytes (u32 LE, always 4)      |
//! | 16..24           | metadata block length (u64 LE)                        |
//! | 24..32           | parameter count (u64 LE)                              |
//! | 32..40           | reserved, zero                                        |
//! | 40..40+M         | JSON metadata, space padded to a fixed block size     |
//! | ..+4P            | parameters, little-endian `f32`, storage order        |
//! | last 4           | CRC-32 of everything before it                        |
//!
//! The metadata block has a fixed length, so the file size depends only on
//! the architecture.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::architecture::Architecture;
use super::network::Network;
use crate::error::SurrogateError;
use crate::flowmap::{ExtractionConfig, FlowMapStrategy, TrainingSample};
use crate::geometry::{Domain, Vec3};
use crate::io_util::atomic_write;
use crate::seeding::SeedingStrategy;

pub const MODEL_MAGIC: &[u8; 8] = b"FLOWSURR";
pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;
pub const METADATA_BLOCK_LEN: usize = 4096;
const CHECKSUM_LEN: usize = 4;

/// Rows per inference chunk. Chunk boundaries are fixed, so parallel and
/// serial inference produce identical results.
const INFERENCE_CHUNK: usize = 512;

/// Affine maps between domain coordinates and network inputs: `x`, `y` to
/// `[−1, 1]`, `z` unchanged, file cycle divided by the total cycle count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputNormalization {
    pub domain: Domain,
    pub total_cycles: u32,
}

impl InputNormalization {
    pub fn position(&self, p: [f64; 3]) -> [f64; 3] {
        let d = &self.domain;
        [
            2.0 * (p[0] - d.x_min) / d.width() - 1.0,
            2.0 * (p[1] - d.y_min) / d.height() - 1.0,
            p[2],
        ]
    }

    pub fn denormalize(&self, q: [f64; 3]) -> Vec3 {
        let d = &self.domain;
        Vec3::new(
            d.x_min + 0.5 * (q[0] + 1.0) * d.width(),
            d.y_min + 0.5 * (q[1] + 1.0) * d.height(),
            q[2],
        )
    }

    pub fn cycle(&self, c: u32) -> f64 {
        c as f64 / self.total_cycles as f64
    }
}

/// Normalized training matrices: positions `[B,3]`, cycles `[B,1]`, targets `[B,3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSamples {
    pub position: Array2<f32>,
    pub cycle: Array2<f32>,
    pub target: Array2<f32>,
}

impl EncodedSamples {
    pub fn encode(norm: &InputNormalization, samples: &[TrainingSample]) -> Self {
        let b = samples.len();
        let mut position = Array2::zeros((b, 3));
        let mut cycle = Array2::zeros((b, 1));
        let mut target = Array2::zeros((b, 3));
        for (i, s) in samples.iter().enumerate() {
            let widen = |v: [f32; 3]| [v[0] as f64, v[1] as f64, v[2] as f64];
            let p = norm.position(widen(s.start));
            let t = norm.position(widen(s.target));
            for c in 0..3 {
                position[[i, c]] = p[c] as f32;
                target[[i, c]] = t[c] as f32;
            }
            cycle[[i, 0]] = norm.cycle(s.file_cycle) as f32;
        }
        Self { position, cycle, target }
    }

    pub fn len(&self) -> usize {
        self.position.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a model was produced; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingProvenance {
    pub seed_count: usize,
    pub seeding: SeedingStrategy,
    pub seed_token: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub architecture: Architecture,
    pub network: Network<f32>,
    pub normalization: InputNormalization,
    pub extraction: ExtractionConfig,
    pub provenance: TrainingProvenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMetadata {
    architecture: Architecture,
    normalization: InputNormalization,
    strategy: FlowMapStrategy,
    delta: f64,
    #[serde(rename = "interval_C")]
    interval: u32,
    #[serde(rename = "T")]
    duration: f64,
    n: usize,
    provenance: TrainingProvenance,
}

impl SurrogateModel {
    pub fn strategy(&self) -> FlowMapStrategy {
        self.extraction.strategy
    }

    pub fn interval(&self) -> u32 {
        self.extraction.interval
    }

    pub fn file_cycles(&self) -> usize {
        self.extraction.file_cycles()
    }

    pub fn domain(&self) -> Domain {
        self.normalization.domain
    }

    pub fn param_count(&self) -> usize {
        self.network.param_count()
    }

    /// CRC-32 over the parameter payload.
    pub fn fingerprint(&self) -> u32 {
        let mut hasher = crc32fast::Hasher::new();
        for t in self.network.tensors() {
            for v in t {
                hasher.update(&v.to_le_bytes());
            }
        }
        hasher.finalize()
    }

    fn predict_chunk(&self, starts: &[Vec3], cycles: &[u32]) -> Vec<Vec3> {
        let b = starts.len();
        let mut pos = Array2::<f32>::zeros((b, 3));
        let mut cyc = Array2::<f32>::zeros((b, 1));
        for (i, (s, &c)) in starts.iter().zip(cycles).enumerate() {
            let p = self.normalization.position(s.to_array());
            for k in 0..3 {
                pos[[i, k]] = p[k] as f32;
            }
            cyc[[i, 0]] = self.normalization.cycle(c) as f32;
        }
        let out = self.network.forward(pos.view(), cyc.view());
        out.rows()
            .into_iter()
            .map(|r| self.normalization.denormalize([r[0] as f64, r[1] as f64, r[2] as f64]))
            .collect()
    }

    /// Predicted end positions for `(start, file cycle)` pairs, in domain
    /// coordinates. Work is split into fixed chunks evaluated in parallel.
    pub fn predict(&self, starts: &[Vec3], cycles: &[u32]) -> Result<Vec<Vec3>, SurrogateError> {
        if starts.len() != cycles.len() {
            return Err(SurrogateError::Shape(format!(
                "{} starts but {} cycles",
                starts.len(),
                cycles.len()
            )));
        }
        let parts: Vec<Vec<Vec3>> = starts
            .par_chunks(INFERENCE_CHUNK)
            .zip(cycles.par_chunks(INFERENCE_CHUNK))
            .map(|(s, c)| self.predict_chunk(s, c))
            .collect();
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn predict_one(&self, start: Vec3, cycle: u32) -> Vec3 {
        self.predict_chunk(&[start], &[cycle])[0]
    }

    /// Serialized bytes; see the module docs for the layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>, SurrogateError> {
        let meta = ModelMetadata {
            architecture: self.architecture.clone(),
            normalization: self.normalization,
            strategy: self.extraction.strategy,
            delta: self.extraction.delta,
            interval: self.extraction.interval,
            duration: self.extraction.duration,
            n: self.extraction.file_cycles(),
            provenance: self.provenance,
        };
        let mut block =
            serde_json::to_vec(&meta).map_err(|e| SurrogateError::Format(e.to_string()))?;
        if block.len() > METADATA_BLOCK_LEN {
            return Err(SurrogateError::Format(format!(
                "metadata needs {} bytes, block holds {METADATA_BLOCK_LEN}",
                block.len()
            )));
        }
        block.resize(METADATA_BLOCK_LEN, b' ');

        let count = self.param_count();
        let mut out = Vec::with_capacity(HEADER_LEN + METADATA_BLOCK_LEN + 4 * count + CHECKSUM_LEN);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&(METADATA_BLOCK_LEN as u64).to_le_bytes());
        out.extend_from_slice(&(count as u64).to_le_bytes());
        out.extend_from_slice(&0u64.to_le_bytes());
        out.extend_from_slice(&block);
        for t in self.network.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SurrogateError> {
        let format = |m: &str| SurrogateError::Format(m.to_string());
        if bytes.len() < HEADER_LEN + CHECKSUM_LEN || &bytes[..8] != MODEL_MAGIC {
            return Err(format("missing model magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(8);
        if version != MODEL_FORMAT_VERSION {
            return Err(SurrogateError::Format(format!("unsupported format version {version}")));
        }
        if u32_at(12) != 4 {
            return Err(format("unsupported payload element size"));
        }

        let body_len = bytes.len() - CHECKSUM_LEN;
        let stored = u32_at(body_len);
        let computed = crc32fast::hash(&bytes[..body_len]);
        if stored != computed {
            return Err(SurrogateError::Checksum { stored, computed });
        }

        let meta_len = u64_at(16) as usize;
        let count = u64_at(24) as usize;
        let expected = HEADER_LEN + meta_len + 4 * count + CHECKSUM_LEN;
        if bytes.len() != expected {
            return Err(SurrogateError::Format(format!(
                "file holds {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let meta: ModelMetadata = serde_json::from_slice(&bytes[HEADER_LEN..HEADER_LEN + meta_len])
            .map_err(|e| SurrogateError::Format(format!("metadata: {e}")))?;
        meta.architecture.validate()?;
        if meta.architecture.param_count() != count {
            return Err(SurrogateError::Format(format!(
                "architecture has {} parameters, header declares {count}",
                meta.architecture.param_count()
            )));
        }
        let extraction = ExtractionConfig::new(meta.delta, meta.interval, meta.duration, meta.strategy)
            .map_err(|e| SurrogateError::Format(e.to_string()))?;
        if extraction.file_cycles() != meta.n {
            return Err(format("recorded file-cycle count disagrees with extraction parameters"));
        }

        let mut network = Network::<f32>::zeros(&meta.architecture);
        let mut offset = HEADER_LEN + meta_len;
        for tensor in network.tensors_mut() {
            for v in tensor.iter_mut() {
                *v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"));
                offset += 4;
            }
        }
        Ok(Self {
            architecture: meta.architecture,
            network,
            normalization: meta.normalization,
            extraction,
            provenance: meta.provenance,
        })
    }
}

/// Size in bytes of a serialized model with this architecture.
pub fn model_file_size(arch: &Architecture) -> usize {
    HEADER_LEN + METADATA_BLOCK_LEN + 4 * arch.param_count() + CHECKSUM_LEN
}

pub fn save_model(model: &SurrogateModel, path: impl AsRef<Path>) -> Result<(), SurrogateError> {
    let path = path.as_ref();
    let bytes = model.to_bytes()?;
    atomic_write(path, &bytes).map_err(|source| SurrogateError::Io { path: path.to_path_buf(), source })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SurrogateModel, SurrogateError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| SurrogateError::Io { path: path.to_path_buf(), source })?;
    SurrogateModel::from_bytes(&bytes)
}
