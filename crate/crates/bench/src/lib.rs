//! Shared fixtures for the benchmarks.

use std::num::NonZeroUsize;

use flowmap_core::fields::DoubleGyre;
use flowmap_core::flowmap::{extract, validation_seeds, ExtractionConfig, FlowMapStrategy};
use flowmap_core::geometry::{Domain, Vec3};
use flowmap_core::reconstruct::{test_seeds, TEST_SEED_OFFSET};
use flowmap_core::seeding::{seed_sobol, SeedSet};
use flowmap_core::surrogate::{train_on_datasets, Architecture, SurrogateModel, TrainConfig};

pub fn sobol_seeds(n: usize) -> SeedSet {
    seed_sobol(Domain::double_gyre(), NonZeroUsize::new(n.max(1)).unwrap(), 0)
}

pub fn random_seeds(n: usize) -> Vec<Vec3> {
    test_seeds(Domain::double_gyre(), NonZeroUsize::new(n.max(1)).unwrap(), TEST_SEED_OFFSET, 1)
        .unwrap()
        .positions
}

/// A one-epoch model; inference cost does not depend on how well it is trained.
pub fn model(strategy: FlowMapStrategy, width_scale: f64) -> SurrogateModel {
    let cfg = ExtractionConfig::new(0.01, 50, 10.0, strategy).unwrap();
    let seeds = sobol_seeds(20);
    let field = DoubleGyre::default();
    let tr = extract(&field, &seeds, &cfg).unwrap();
    let va = extract(&field, &validation_seeds(&seeds), &cfg).unwrap();
    let tc = TrainConfig { epochs: 1, ..TrainConfig::for_strategy(strategy) };
    train_on_datasets(&tr, &va, &Architecture::scaled(width_scale), &tc).unwrap().0
}
