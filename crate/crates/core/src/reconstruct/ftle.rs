use rayon::prelude::*;

use super::infer::{stitch_from, cycles_up_to};
use crate::error::ReconstructError;
use crate::fields::VectorField;
use crate::flowmap::{FlowMapStrategy, Particle};
use crate::geometry::{Domain, Vec3};
use crate::surrogate::SurrogateModel;

/// Upper bound on either grid dimension.
pub const MAX_FTLE_GRID: usize = 4096;

/// Forward FTLE sampled on a cell-centered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FtleField {
    pub gx: usize,
    pub gy: usize,
    /// Integration time `|T| = cycles · delta`.
    pub duration: f64,
    pub domain: Domain,
    /// Row-major, `gy` rows of `gx` values, `y` ascending.
    pub values: Vec<f64>,
}

impl FtleField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.gx + i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_grid(gx: usize, gy: usize) -> Result<(), ReconstructError> {
    if gx < 3 || gy < 3 || gx > MAX_FTLE_GRID || gy > MAX_FTLE_GRID {
        return Err(ReconstructError::InvalidGrid(format!(
            "grid {gx}x{gy} must be between 3x3 and {MAX_FTLE_GRID}x{MAX_FTLE_GRID}"
        )));
    }
    Ok(())
}

/// Cell centers of a `gx × gy` grid over `domain`, row-major.
pub fn ftle_grid_nodes(domain: &Domain, gx: usize, gy: usize) -> Vec<Vec3> {
    let hx = domain.width() / gx as f64;
    let hy = domain.height() / gy as f64;
    (0..gy)
        .flat_map(|j| {
            (0..gx).map(move |i| {
                Vec3::xy(domain.x_min + (i as f64 + 0.5) * hx, domain.y_min + (j as f64 + 0.5) * hy)
            })
        })
        .collect()
}

/// FTLE from flow-map end points of the grid nodes, in the order produced by
/// [`ftle_grid_nodes`]. Central differences inside, one-sided at the edges.
pub fn ftle_from_endpoints(
    domain: Domain,
    gx: usize,
    gy: usize,
    duration: f64,
    ends: &[Vec3],
) -> Result<FtleField, ReconstructError> {
    check_grid(gx, gy)?;
    if ends.len() != gx * gy {
        return Err(ReconstructError::LengthMismatch(ends.len(), gx * gy));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ReconstructError::InvalidGrid(format!("duration must be positive, got {duration}")));
    }
    let hx = domain.width() / gx as f64;
    let hy = domain.height() / gy as f64;
    let at = |i: usize, j: usize| ends[j * gx + i];
    // (lo, hi, spacing in cells)
    let stencil = |k: usize, n: usize| match k {
        0 => (0, 1, 1.0),
        _ if k == n - 1 => (n - 2, n - 1, 1.0),
        _ => (k - 1, k + 1, 2.0),
    };

    let mut values = vec![0.0; gx * gy];
    for j in 0..gy {
        for i in 0..gx {
            let (il, ih, sx) = stencil(i, gx);
            let (jl, jh, sy) = stencil(j, gy);
            let dx = (at(ih, j) - at(il, j)) * (1.0 / (sx * hx));
            let dy = (at(i, jh) - at(i, jl)) * (1.0 / (sy * hy));
            // Cauchy–Green tensor of the 2x2 gradient [[dx.x, dy.x], [dx.y, dy.y]]
            let a = dx.x * dx.x + dx.y * dx.y;
            let b = dx.x * dy.x + dx.y * dy.y;
            let d = dy.x * dy.x + dy.y * dy.y;
            let half_trace = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let lambda = half_trace + disc;
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(ReconstructError::Degenerate(i, j));
            }
            values[j * gx + i] = 0.5 * lambda.ln() / duration;
        }
    }
    Ok(FtleField { gx, gy, duration, domain, values })
}

/// FTLE from RK4 advection through `field` over `cycles` steps of `delta`
/// starting at `t = 0`.
pub fn ftle_from_field<F: VectorField + ?Sized>(
    field: &F,
    gx: usize,
    gy: usize,
    cycles: u32,
    delta: f64,
) -> Result<FtleField, ReconstructError> {
    check_grid(gx, gy)?;
    if cycles == 0 {
        return Err(ReconstructError::InvalidGrid("duration must be at least one cycle".into()));
    }
    let domain = field.domain();
    let nodes = ftle_grid_nodes(&domain, gx, gy);
    let ends = nodes
        .par_iter()
        .map(|&p| {
            let mut particle = Particle::new(p);
            for k in 0..cycles {
                particle.advance(field, k as f64 * delta, delta)?;
            }
            Ok(particle.position)
        })
        .collect::<Result<Vec<_>, ReconstructError>>()?;
    ftle_from_endpoints(domain, gx, gy, cycles as f64 * delta, &ends)
}

/// FTLE from model inference: direct end points for long models, stitched
/// end points for short ones. `cycles` must be a file cycle.
pub fn ftle_from_model(model: &SurrogateModel, gx: usize, gy: usize, cycles: u32) -> Result<FtleField, ReconstructError> {
    check_grid(gx, gy)?;
    let domain = model.domain();
    let nodes = ftle_grid_nodes(&domain, gx, gy);
    let ends = match model.strategy() {
        FlowMapStrategy::Long => {
            cycles_up_to(model, cycles)?;
            model.predict(&nodes, &vec![cycles; nodes.len()])?
        }
        FlowMapStrategy::Short => {
            let prefix = cycles_up_to(model, cycles)?;
            stitch_from(model, &nodes, 0, &prefix)?.pop().unwrap_or(nodes)
        }
    };
    ftle_from_endpoints(domain, gx, gy, cycles as f64 * model.extraction.delta, &ends)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{LinearSaddle, RigidRotation, UniformFlow};

    fn box_domain() -> Domain {
        Domain::new(-1.0, 1.0, -0.5, 0.5).unwrap()
    }

    #[test]
    fn still_field_has_zero_ftle() {
        let f = ftle_from_field(&UniformFlow::still(box_domain()), 16, 8, 50, 0.01).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn translation_has_zero_ftle() {
        let field = UniformFlow { velocity: Vec3::xy(0.3, -0.2), domain: box_domain() };
        let f = ftle_from_field(&field, 64, 32, 100, 0.01).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-6), "max {}", f.max());
    }

    #[test]
    fn rotation_has_zero_ftle() {
        let field = RigidRotation { omega: 1.3, domain: box_domain() };
        let f = ftle_from_field(&field, 64, 32, 200, 0.01).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-6), "range {} {}", f.min(), f.max());
    }

    #[test]
    fn saddle_ftle_is_its_rate() {
        // x(T) = x e^T, y(T) = y e^-T, so λmax = e^{2T}
        let field = LinearSaddle { rate: 1.0, domain: box_domain() };
        let f = ftle_from_field(&field, 20, 10, 150, 0.01).unwrap();
        assert!(f.values.iter().all(|v| (v - 1.0).abs() < 1e-8), "range {} {}", f.min(), f.max());
    }

    #[test]
    fn grid_nodes_are_cell_centers() {
        let nodes = ftle_grid_nodes(&Domain::double_gyre(), 4, 3);
        assert_eq!(nodes.len(), 12);
        assert!((nodes[0].x - 0.25).abs() < 1e-15 && (nodes[0].y - 1.0 / 6.0).abs() < 1e-15);
        assert!((nodes[11].x - 1.75).abs() < 1e-15 && (nodes[11].y - 5.0 / 6.0).abs() < 1e-15);
        assert!(nodes.iter().all(|p| Domain::double_gyre().contains(*p)));
    }

    #[test]
    fn collapsed_map_is_degenerate() {
        let ends = vec![Vec3::xy(0.5, 0.5); 9];
        assert!(matches!(
            ftle_from_endpoints(box_domain(), 3, 3, 1.0, &ends),
            Err(ReconstructError::Degenerate(0, 0))
        ));
    }

    #[test]
    fn small_or_zero_grids_rejected() {
        let field = UniformFlow::still(box_domain());
        assert!(ftle_from_field(&field, 0, 8, 10, 0.01).is_err());
        assert!(ftle_from_field(&field, 2, 8, 10, 0.01).is_err());
        assert!(ftle_from_field(&field, 8, 8, 0, 0.01).is_err());
    }
}
