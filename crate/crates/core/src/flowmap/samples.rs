use std::num::NonZeroUsize;

use super::dataset::FlowMapDataset;
use crate::seeding::{seed_random, seed_sobol, seed_uniform, SeedSet, SeedingStrategy};

/// One `(start, file cycle, target)` training triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub start: [f32; 3],
    pub file_cycle: u32,
    pub target: [f32; 3],
}

/// Flattens a dataset into `N·n` samples, seed-major: sample `(i, j)` pairs
/// seed `i` with cycle `(j+1)·C` and the row `j+1` position. Short datasets
/// also start from the row-0 seed, since every interval restarts there.
pub fn assemble_samples(ds: &FlowMapDataset) -> Vec<TrainingSample> {
    let n = ds.file_cycles();
    let count = ds.seed_count();
    let interval = ds.config.interval;
    let d = &ds.data;
    let mut samples = Vec::with_capacity(count * n);
    for i in 0..count {
        let start = [d[[0, i, 0]], d[[0, i, 1]], d[[0, i, 2]]];
        for j in 0..n {
            samples.push(TrainingSample {
                start,
                file_cycle: (j as u32 + 1) * interval,
                target: [d[[j + 1, i, 0]], d[[j + 1, i, 1]], d[[j + 1, i, 2]]],
            });
        }
    }
    samples
}

const VALIDATION_RNG_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Validation seeds: `ceil(0.1·N)` seeds from the same strategy but disjoint
/// from the training seeds (the next Sobol points, or a different RNG stream).
pub fn validation_seeds(train: &SeedSet) -> SeedSet {
    let count = NonZeroUsize::new(train.len().div_ceil(10)).unwrap_or(NonZeroUsize::MIN);
    match train.strategy {
        SeedingStrategy::Sobol => seed_sobol(train.domain, count, train.token + train.len() as u64),
        SeedingStrategy::Random => {
            seed_random(train.domain, count, train.token ^ VALIDATION_RNG_SALT)
        }
        SeedingStrategy::Uniform => {
            let nx = (train.token >> 32) as f64;
            let ny = (train.token & 0xffff_ffff) as f64;
            let shrink = 0.1f64.sqrt();
            let axis = |v: f64| NonZeroUsize::new((v * shrink).ceil() as usize).unwrap_or(NonZeroUsize::MIN);
            seed_uniform(train.domain, axis(nx), axis(ny))
        }
    }
}
