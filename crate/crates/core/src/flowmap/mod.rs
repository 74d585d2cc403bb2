//! Particle advection and Lagrangian flow-map datasets.

mod advect;
mod config;
mod dataset;
mod extract;
pub mod npy;
mod samples;

pub use advect::{advect, rk4_step, Particle};
pub use config::{ExtractionConfig, FlowMapStrategy};
pub use dataset::{read_dataset, sidecar_path, write_dataset, FlowMapDataset, SeedProvenance};
pub use extract::{extract, extract_long, extract_short, long_trajectory, short_trajectory};
pub use samples::{assemble_samples, validation_seeds, TrainingSample};
