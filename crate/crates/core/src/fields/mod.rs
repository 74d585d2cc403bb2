//! Time-varying velocity fields.
//!
//! Every field is immutable after construction and evaluation is pure, so a
//! single instance can be shared across advection worker threads.

mod analytic;
mod double_gyre;
mod gridded;

pub use analytic::{LinearSaddle, RigidRotation, UniformFlow};
pub use double_gyre::{DoubleGyre, DoubleGyreParams};
pub use gridded::{load_gridded_field, write_gridded_field, GriddedField};

use crate::error::FieldError;
use crate::geometry::{Domain, Vec3};

/// A velocity field `v(p, t)` over a rectangular domain.
pub trait VectorField: Send + Sync {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError>;

    /// Nominal spatial domain, used for seeding and input normalization.
    fn domain(&self) -> Domain;

    /// True when the field is only defined inside its domain. Particles that
    /// leave such a field are clamped to the boundary and frozen.
    fn confines_particles(&self) -> bool {
        false
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        (**self).velocity(p, t)
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn confines_particles(&self) -> bool {
        (**self).confines_particles()
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        (**self).velocity(p, t)
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn confines_particles(&self) -> bool {
        (**self).confines_particles()
    }
}

impl<F: VectorField + ?Sized> VectorField for std::sync::Arc<F> {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        (**self).velocity(p, t)
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn confines_particles(&self) -> bool {
        (**self).confines_particles()
    }
}
