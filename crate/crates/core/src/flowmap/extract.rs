use ndarray::Array3;
use rayon::prelude::*;

use super::advect::Particle;
use super::config::{ExtractionConfig, FlowMapStrategy};
use super::dataset::{FlowMapDataset, SeedProvenance};
use crate::error::FlowMapError;
use crate::fields::VectorField;
use crate::geometry::Vec3;
use crate::seeding::SeedSet;

/// Positions of one seed at cycles `C, 2C, ..., nC`, advected continuously
/// from `t = 0`.
pub fn long_trajectory<F: VectorField + ?Sized>(
    field: &F,
    seed: Vec3,
    cfg: &ExtractionConfig,
) -> Result<Vec<Vec3>, FlowMapError> {
    let n = cfg.file_cycles();
    let mut particle = Particle::new(seed);
    let mut rows = Vec::with_capacity(n);
    for j in 0..n as u32 {
        for k in j * cfg.interval..(j + 1) * cfg.interval {
            particle.advance(field, cfg.time_at(k), cfg.delta)?;
        }
        rows.push(particle.position);
    }
    Ok(rows)
}

/// End positions of one seed for each interval `j`, each restarted at the
/// seed at time `j·C·delta`.
pub fn short_trajectory<F: VectorField + ?Sized>(
    field: &F,
    seed: Vec3,
    cfg: &ExtractionConfig,
) -> Result<Vec<Vec3>, FlowMapError> {
    let n = cfg.file_cycles();
    let mut rows = Vec::with_capacity(n);
    for j in 0..n as u32 {
        let mut particle = Particle::new(seed);
        for k in j * cfg.interval..(j + 1) * cfg.interval {
            particle.advance(field, cfg.time_at(k), cfg.delta)?;
        }
        rows.push(particle.position);
    }
    Ok(rows)
}

fn assemble<F>(
    seeds: &SeedSet,
    cfg: &ExtractionConfig,
    per_seed: F,
) -> Result<FlowMapDataset, FlowMapError>
where
    F: Fn(Vec3) -> Result<Vec<Vec3>, FlowMapError> + Sync,
{
    cfg.validate()?;
    let n = cfg.file_cycles();
    // seeds are independent; collection preserves seed order, so the output
    // does not depend on the number of worker threads
    let rows: Vec<Vec<Vec3>> = seeds.positions.par_iter().map(|&s| per_seed(s)).collect::<Result<_, _>>()?;
    let mut data = Array3::<f32>::zeros((n + 1, seeds.len(), 3));
    for (i, (seed, traj)) in seeds.positions.iter().zip(&rows).enumerate() {
        let s = seed.to_f32();
        for c in 0..3 {
            data[[0, i, c]] = s[c];
        }
        for (j, p) in traj.iter().enumerate() {
            let p = p.to_f32();
            for c in 0..3 {
                data[[j + 1, i, c]] = p[c];
            }
        }
    }
    FlowMapDataset::new(data, *cfg, SeedProvenance::from(seeds))
}

/// Long-trajectory flow map.
pub fn extract_long<F: VectorField + ?Sized>(
    field: &F,
    seeds: &SeedSet,
    cfg: &ExtractionConfig,
) -> Result<FlowMapDataset, FlowMapError> {
    if cfg.strategy != FlowMapStrategy::Long {
        return Err(FlowMapError::Config("extract_long requires the long strategy".into()));
    }
    assemble(seeds, cfg, |s| long_trajectory(field, s, cfg))
}

/// Sequence of single-interval flow maps.
pub fn extract_short<F: VectorField + ?Sized>(
    field: &F,
    seeds: &SeedSet,
    cfg: &ExtractionConfig,
) -> Result<FlowMapDataset, FlowMapError> {
    if cfg.strategy != FlowMapStrategy::Short {
        return Err(FlowMapError::Config("extract_short requires the short strategy".into()));
    }
    assemble(seeds, cfg, |s| short_trajectory(field, s, cfg))
}

/// Dispatches on `cfg.strategy`.
pub fn extract<F: VectorField + ?Sized>(
    field: &F,
    seeds: &SeedSet,
    cfg: &ExtractionConfig,
) -> Result<FlowMapDataset, FlowMapError> {
    match cfg.strategy {
        FlowMapStrategy::Long => extract_long(field, seeds, cfg),
        FlowMapStrategy::Short => extract_short(field, seeds, cfg),
    }
}
