use super::infer::Trajectory;
use crate::error::ReconstructError;

/// Mean Euclidean distance between two trajectories over their shared file
/// cycles.
pub fn trajectory_error(pred: &Trajectory, truth: &Trajectory) -> Result<f64, ReconstructError> {
    if pred.points.is_empty() {
        return Err(ReconstructError::Empty);
    }
    if !pred.cycles().eq(truth.cycles()) {
        return Err(ReconstructError::MismatchedCycles);
    }
    let sum: f64 = pred.positions().zip(truth.positions()).map(|(a, b)| a.distance(b)).sum();
    Ok(sum / pred.points.len() as f64)
}

/// One error per trajectory pair.
pub fn trajectory_errors(pred: &[Trajectory], truth: &[Trajectory]) -> Result<Vec<f64>, ReconstructError> {
    if pred.len() != truth.len() {
        return Err(ReconstructError::LengthMismatch(pred.len(), truth.len()));
    }
    pred.iter().zip(truth).map(|(p, t)| trajectory_error(p, t)).collect()
}

/// Mean distance at each file cycle over all trajectories, untrimmed.
pub fn per_cycle_mean_distance(pred: &[Trajectory], truth: &[Trajectory]) -> Result<Vec<(u32, f64)>, ReconstructError> {
    if pred.len() != truth.len() {
        return Err(ReconstructError::LengthMismatch(pred.len(), truth.len()));
    }
    let first = pred.first().ok_or(ReconstructError::Empty)?;
    let mut sums: Vec<(u32, f64)> = first.cycles().map(|c| (c, 0.0)).collect();
    for (p, t) in pred.iter().zip(truth) {
        if !p.cycles().eq(first.cycles()) || !t.cycles().eq(first.cycles()) {
            return Err(ReconstructError::MismatchedCycles);
        }
        for (slot, (a, b)) in sums.iter_mut().zip(p.positions().zip(t.positions())) {
            slot.1 += a.distance(b);
        }
    }
    let n = pred.len() as f64;
    Ok(sums.into_iter().map(|(c, s)| (c, s / n)).collect())
}

/// Number of values kept once the largest 1% are dropped: `ceil(0.99·count)`.
pub fn trimmed_len(count: usize) -> usize {
    count - count / 100
}

/// Median of an ascending slice; the mean of the middle pair for even lengths.
pub fn median_sorted(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Per-trajectory errors in input order.
    pub errors: Vec<f64>,
    /// Ascending, with the largest 1% removed.
    pub trimmed: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// `(file cycle, mean distance)` over all trajectories.
    pub per_cycle: Vec<(u32, f64)>,
}

impl ErrorReport {
    pub fn new(errors: Vec<f64>, per_cycle: Vec<(u32, f64)>) -> Result<Self, ReconstructError> {
        if errors.is_empty() {
            return Err(ReconstructError::Empty);
        }
        if let Some(&bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(ReconstructError::InvalidError(bad));
        }
        let mut trimmed = errors.clone();
        trimmed.sort_by(f64::total_cmp);
        trimmed.truncate(trimmed_len(errors.len()));
        let min = trimmed[0];
        let max = trimmed[trimmed.len() - 1];
        let median = median_sorted(&trimmed).unwrap_or(0.0);
        Ok(Self { errors, trimmed, min, median, max, per_cycle })
    }
}

/// Full report for matching predicted and reference trajectories.
pub fn error_report(pred: &[Trajectory], truth: &[Trajectory]) -> Result<ErrorReport, ReconstructError> {
    let errors = trajectory_errors(pred, truth)?;
    let per_cycle = per_cycle_mean_distance(pred, truth)?;
    ErrorReport::new(errors, per_cycle)
}

/// Pearson correlation; `None` when either input is constant or lengths
/// differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation: Pearson over ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&ranks(a), &ranks(b))
}
