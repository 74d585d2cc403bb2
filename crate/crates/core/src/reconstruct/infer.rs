use std::num::NonZeroUsize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ReconstructError;
use crate::fields::VectorField;
use crate::flowmap::{Particle, FlowMapStrategy};
use crate::geometry::{Domain, Vec3};
use crate::seeding::{seed_random, SeedSet};
use crate::surrogate::SurrogateModel;

/// Default number of evaluation seeds.
pub const TEST_SEED_COUNT: usize = 2000;
/// Evaluation seeds keep this distance from every domain edge.
pub const TEST_SEED_OFFSET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    LongDirect,
    ShortStitched,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: Vec3,
    /// `(file cycle, position)` in request order.
    pub points: Vec<(u32, Vec3)>,
    pub mode: TrajectoryMode,
}

impl Trajectory {
    pub fn cycles(&self) -> impl Iterator<Item = u32> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn last(&self) -> Option<Vec3> {
        self.points.last().map(|p| p.1)
    }
}

/// Pseudorandom seeds inside the domain shrunk by `offset` on every side.
pub fn test_seeds(domain: Domain, count: NonZeroUsize, offset: f64, rng_seed: u64) -> Result<SeedSet, ReconstructError> {
    let inner = domain.shrink(offset)?;
    let mut seeds = seed_random(inner, count, rng_seed);
    seeds.domain = domain;
    Ok(seeds)
}

fn require_strategy(model: &SurrogateModel, wanted: FlowMapStrategy) -> Result<(), ReconstructError> {
    if model.strategy() != wanted {
        return Err(ReconstructError::StrategyMismatch {
            model: model.strategy().to_string(),
            requested: wanted.to_string(),
        });
    }
    Ok(())
}

fn check_file_cycle(model: &SurrogateModel, cycle: u32) -> Result<(), ReconstructError> {
    if model.extraction.is_file_cycle(cycle) {
        Ok(())
    } else {
        Err(ReconstructError::BadCycle {
            cycle,
            interval: model.interval(),
            max: model.extraction.total_cycles(),
        })
    }
}

/// `C, 2C, ..., max_cycle`; `max_cycle` must itself be a file cycle.
pub fn cycles_up_to(model: &SurrogateModel, max_cycle: u32) -> Result<Vec<u32>, ReconstructError> {
    check_file_cycle(model, max_cycle)?;
    let c = model.interval();
    Ok((1..=max_cycle / c).map(|j| j * c).collect())
}

/// Direct inference: every point is one independent model evaluation from
/// the seed.
pub fn infer_long(model: &SurrogateModel, seeds: &[Vec3], cycles: &[u32]) -> Result<Vec<Trajectory>, ReconstructError> {
    require_strategy(model, FlowMapStrategy::Long)?;
    if cycles.is_empty() {
        return Err(ReconstructError::Empty);
    }
    for &c in cycles {
        check_file_cycle(model, c)?;
    }
    let k = cycles.len();
    let starts: Vec<Vec3> = seeds.iter().flat_map(|&s| std::iter::repeat_n(s, k)).collect();
    let cyc: Vec<u32> = seeds.iter().flat_map(|_| cycles.iter().copied()).collect();
    let ends = model.predict(&starts, &cyc)?;
    Ok(seeds
        .iter()
        .zip(ends.chunks(k))
        .map(|(&seed, row)| Trajectory {
            seed,
            points: cycles.iter().copied().zip(row.iter().copied()).collect(),
            mode: TrajectoryMode::LongDirect,
        })
        .collect())
}

/// Stitched inference continuing from `positions` at cycle `start_cycle`:
/// each interval's predicted end position is the next interval's input.
/// `cycles` must be `start_cycle + C, start_cycle + 2C, ...` without gaps.
pub fn stitch_from(
    model: &SurrogateModel,
    positions: &[Vec3],
    start_cycle: u32,
    cycles: &[u32],
) -> Result<Vec<Vec<Vec3>>, ReconstructError> {
    require_strategy(model, FlowMapStrategy::Short)?;
    let c = model.interval();
    if !start_cycle.is_multiple_of(c) || cycles.iter().enumerate().any(|(j, &x)| x != start_cycle + (j as u32 + 1) * c) {
        return Err(ReconstructError::NonPrefixCycles(cycles.to_vec()));
    }
    for &x in cycles {
        check_file_cycle(model, x)?;
    }
    let mut current = positions.to_vec();
    let mut steps = Vec::with_capacity(cycles.len());
    for &cycle in cycles {
        current = model.predict(&current, &vec![cycle; current.len()])?;
        steps.push(current.clone());
    }
    Ok(steps)
}

/// Stitched inference over the prefix `C, 2C, ..., kC`.
pub fn infer_short(model: &SurrogateModel, seeds: &[Vec3], cycles: &[u32]) -> Result<Vec<Trajectory>, ReconstructError> {
    if cycles.is_empty() {
        return Err(ReconstructError::Empty);
    }
    let steps = stitch_from(model, seeds, 0, cycles)?;
    Ok(seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| Trajectory {
            seed,
            points: cycles.iter().zip(&steps).map(|(&c, row)| (c, row[i])).collect(),
            mode: TrajectoryMode::ShortStitched,
        })
        .collect())
}

/// Direct or stitched inference, whichever the model was trained for, over
/// the prefix `C, ..., max_cycle`.
pub fn infer(model: &SurrogateModel, seeds: &[Vec3], max_cycle: u32) -> Result<Vec<Trajectory>, ReconstructError> {
    let cycles = cycles_up_to(model, max_cycle)?;
    match model.strategy() {
        FlowMapStrategy::Long => infer_long(model, seeds, &cycles),
        FlowMapStrategy::Short => infer_short(model, seeds, &cycles),
    }
}

/// Reference trajectories: continuous RK4 advection from `t = 0` with one
/// step of `delta` per cycle, recorded at the given increasing cycles.
pub fn ground_truth<F: VectorField + ?Sized>(
    field: &F,
    seeds: &[Vec3],
    cycles: &[u32],
    delta: f64,
) -> Result<Vec<Trajectory>, ReconstructError> {
    if cycles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ReconstructError::NonPrefixCycles(cycles.to_vec()));
    }
    seeds
        .par_iter()
        .map(|&seed| {
            let mut particle = Particle::new(seed);
            let mut k = 0u32;
            let mut points = Vec::with_capacity(cycles.len());
            for &target in cycles {
                while k < target {
                    particle.advance(field, k as f64 * delta, delta)?;
                    k += 1;
                }
                points.push((target, particle.position));
            }
            Ok(Trajectory { seed, points, mode: TrajectoryMode::GroundTruth })
        })
        .collect()
}
