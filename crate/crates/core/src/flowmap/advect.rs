//! Classical fourth-order Runge–Kutta particle advection.

use crate::error::FieldError;
use crate::fields::VectorField;
use crate::geometry::Vec3;

/// One classical RK4 step of size `h` from `(p, t)`.
pub fn rk4_step<F: VectorField + ?Sized>(
    field: &F,
    p: Vec3,
    t: f64,
    h: f64,
) -> Result<Vec3, FieldError> {
    let k1 = field.velocity(p, t)?;
    let k2 = field.velocity(p + k1 * (0.5 * h), t + 0.5 * h)?;
    let k3 = field.velocity(p + k2 * (0.5 * h), t + 0.5 * h)?;
    let k4 = field.velocity(p + k3 * h, t + h)?;
    Ok(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// A particle that may have been frozen at the boundary of a confining field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub frozen: bool,
}

impl Particle {
    pub fn new(position: Vec3) -> Self {
        Self { position, frozen: false }
    }

    /// Advances by one cycle. In a field that confines particles, a step that
    /// leaves the domain clamps the particle to the boundary and freezes it
    /// for all remaining cycles.
    pub fn advance<F: VectorField + ?Sized>(
        &mut self,
        field: &F,
        t: f64,
        h: f64,
    ) -> Result<(), FieldError> {
        if self.frozen {
            return Ok(());
        }
        if !field.confines_particles() {
            self.position = rk4_step(field, self.position, t, h)?;
            return Ok(());
        }
        let domain = field.domain();
        match rk4_step(field, self.position, t, h) {
            Ok(next) if domain.contains(next) => self.position = next,
            Ok(next) => {
                self.position = domain.clamp(next);
                self.frozen = true;
            }
            Err(FieldError::OutOfDomain { .. }) => {
                let k1 = field.velocity(self.position, t)?;
                self.position = domain.clamp(self.position + k1 * h);
                self.frozen = true;
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

/// Advects `p` over `cycles` steps of size `h` starting at cycle `start_cycle`.
pub fn advect<F: VectorField + ?Sized>(
    field: &F,
    p: Vec3,
    start_cycle: u32,
    cycles: u32,
    h: f64,
) -> Result<Vec3, FieldError> {
    let mut particle = Particle::new(p);
    for k in start_cycle..start_cycle + cycles {
        particle.advance(field, k as f64 * h, h)?;
    }
    Ok(particle.position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DoubleGyre, GriddedField, RigidRotation, UniformFlow};
    use crate::geometry::Domain;

    fn plane() -> Domain {
        Domain::new(-10.0, 10.0, -10.0, 10.0).unwrap()
    }

    #[test]
    fn constant_field_step() {
        let f = UniformFlow::new(Vec3::xy(1.0, 0.0), plane());
        let p = rk4_step(&f, Vec3::xy(0.3, 0.2), 0.0, 0.01).unwrap();
        assert!((p.x - 0.31).abs() < 1e-15 && p.y == 0.2);
    }

    #[test]
    fn rotation_single_step_local_error() {
        let f = RigidRotation { omega: 1.0, domain: plane() };
        for &h in &[0.1, 0.05, 0.01] {
            let p = rk4_step(&f, Vec3::xy(1.0, 0.0), 0.0, h).unwrap();
            let err = p.distance(Vec3::xy(h.cos(), h.sin()));
            assert!(err <= 2.0 * h.powi(5), "h={h} err={err}");
        }
    }

    #[test]
    fn double_gyre_step_matches_fine_reference() {
        let dg = DoubleGyre::default();
        let p0 = Vec3::xy(0.3, 0.4);
        let coarse = rk4_step(&dg, p0, 0.0, 0.01).unwrap();
        // 1000 sub-steps of 1e-5
        let mut fine = p0;
        for k in 0..1000 {
            fine = rk4_step(&dg, fine, k as f64 * 1e-5, 1e-5).unwrap();
        }
        assert!(coarse.distance(fine) < 1e-9, "diff {}", coarse.distance(fine));
    }

    #[test]
    fn rotation_global_order_four() {
        let f = RigidRotation { omega: 1.0, domain: plane() };
        let end_err = |h: f64| {
            let steps = (1.0 / h).round() as u32;
            let p = advect(&f, Vec3::xy(1.0, 0.0), 0, steps, h).unwrap();
            p.distance(Vec3::xy(1f64.cos(), 1f64.sin()))
        };
        let ratio = end_err(0.01) / end_err(0.005);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn confined_particle_freezes_at_boundary() {
        let d = Domain::unit();
        let values: Vec<f32> = (0..2 * 2 * 2).flat_map(|_| [1.0f32, 0.0]).collect();
        let grid = GriddedField::new(d, 2, 2, 2, 10.0, values).unwrap();
        let mut particle = Particle::new(Vec3::xy(0.95, 0.5));
        particle.advance(&grid, 0.0, 0.1).unwrap();
        assert!(particle.frozen);
        assert_eq!(particle.position, Vec3::xy(1.0, 0.5));
        particle.advance(&grid, 0.1, 0.1).unwrap();
        assert_eq!(particle.position, Vec3::xy(1.0, 0.5));
    }
}
