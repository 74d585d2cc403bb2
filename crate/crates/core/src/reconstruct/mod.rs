//! Trajectory reconstruction from a trained surrogate, error statistics and
//! FTLE fields.

mod export;
mod ftle;
mod infer;
mod metrics;

pub use export::{
    error_map_csv, ftle_csv, parse_ftle_csv, per_cycle_csv, violin_csv, write_error_map, write_ftle,
    write_per_cycle, write_violin,
};
pub use ftle::{ftle_from_endpoints, ftle_from_field, ftle_from_model, ftle_grid_nodes, FtleField, MAX_FTLE_GRID};
pub use infer::{
    cycles_up_to, ground_truth, infer, infer_long, infer_short, stitch_from, test_seeds, Trajectory,
    TrajectoryMode, TEST_SEED_COUNT, TEST_SEED_OFFSET,
};
pub use metrics::{
    error_report, median_sorted, pearson, per_cycle_mean_distance, ranks, spearman, trajectory_error,
    trajectory_errors, trimmed_len, ErrorReport,
};

use crate::error::ReconstructError;
use crate::fields::VectorField;
use crate::geometry::Vec3;
use crate::surrogate::SurrogateModel;

/// Predicted and reference trajectories over every file cycle of a model,
/// with their error report.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub predicted: Vec<Trajectory>,
    pub truth: Vec<Trajectory>,
    pub report: ErrorReport,
}

pub fn evaluate_model<F: VectorField + ?Sized>(
    model: &SurrogateModel,
    field: &F,
    seeds: &[Vec3],
) -> Result<Evaluation, ReconstructError> {
    let predicted = infer(model, seeds, model.extraction.total_cycles())?;
    let truth = ground_truth(field, seeds, &model.extraction.cycle_list(), model.extraction.delta)?;
    let report = error_report(&predicted, &truth)?;
    Ok(Evaluation { predicted, truth, report })
}
