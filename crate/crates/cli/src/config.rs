//! Optional TOML run configuration. Keys mirror the long flag names with
//! underscores (`batch_size`, `rng_seed`, ...); flags given on the command
//! line take precedence.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flowmap_core::fields::{load_gridded_field, DoubleGyre, UniformFlow, VectorField};
use flowmap_core::geometry::Domain;
use flowmap_core::seeding::{seed_random, seed_sobol, seed_uniform, SeedSet, SeedingStrategy};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub field: Option<String>,
    pub strategy: Option<String>,
    pub seeds: Option<String>,
    pub seeding: Option<String>,
    pub rng_seed: Option<u64>,
    pub delta: Option<f64>,
    pub interval: Option<u32>,
    pub duration: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub width_scale: Option<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub grid: Option<String>,
    pub port: Option<u16>,
    pub source: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// `double-gyre`, `still` (zero velocity over the Double Gyre domain), or a
/// path to a gridded-field descriptor.
pub fn parse_field(spec: &str) -> Result<Arc<dyn VectorField>, CliError> {
    match spec {
        "double-gyre" | "double_gyre" | "doublegyre" => Ok(Arc::new(DoubleGyre::default())),
        "still" | "zero" => Ok(Arc::new(UniformFlow::still(Domain::double_gyre()))),
        path => {
            let p = Path::new(path);
            if !p.exists() {
                return Err(CliError::Config(format!(
                    "field '{path}' is neither double-gyre, still, nor an existing descriptor file"
                )));
            }
            load_gridded_field(p).map(|f| Arc::new(f) as Arc<dyn VectorField>).map_err(CliError::from)
        }
    }
}

/// Parses `WxH` or `W×H`.
pub fn parse_grid(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid must look like 256x128, got '{spec}'"));
    let (a, b) = spec.split_once(['x', 'X', '×']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn nz(n: usize, what: &str) -> Result<NonZeroUsize, CliError> {
    NonZeroUsize::new(n).ok_or_else(|| CliError::Config(format!("{what} must be at least 1")))
}

/// Builds the seed set. `seeds` is a count, or `NXxNY` for uniform seeding;
/// a bare count with uniform seeding picks a lattice matching the domain
/// aspect ratio. `rng_seed` is the RNG seed or the Sobol skip.
pub fn build_seeds(domain: Domain, seeding: SeedingStrategy, seeds: &str, rng_seed: u64) -> Result<SeedSet, CliError> {
    if seeding == SeedingStrategy::Uniform {
        let (nx, ny) = match parse_grid(seeds) {
            Ok(shape) => shape,
            Err(_) => {
                let n: usize = seeds.parse().map_err(|_| CliError::Config(format!("bad seed count '{seeds}'")))?;
                let nx = ((n as f64 * domain.width() / domain.height()).sqrt().round() as usize).max(1);
                (nx, n.div_ceil(nx))
            }
        };
        return Ok(seed_uniform(domain, nz(nx, "nx")?, nz(ny, "ny")?));
    }
    let n: usize = seeds.parse().map_err(|_| CliError::Config(format!("bad seed count '{seeds}'")))?;
    let n = nz(n, "seed count")?;
    Ok(match seeding {
        SeedingStrategy::Random => seed_random(domain, n, rng_seed),
        _ => seed_sobol(domain, n, rng_seed),
    })
}
