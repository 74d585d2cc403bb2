//! Closed-form fields with known flow maps, used as oracles.

use super::VectorField;
use crate::error::FieldError;
use crate::geometry::{Domain, Vec3};

/// Spatially and temporally constant velocity. The zero field is
/// `UniformFlow::still(domain)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFlow {
    pub velocity: Vec3,
    pub domain: Domain,
}

impl UniformFlow {
    pub fn new(velocity: Vec3, domain: Domain) -> Self {
        Self { velocity, domain }
    }

    pub fn still(domain: Domain) -> Self {
        Self { velocity: Vec3::ZERO, domain }
    }
}

impl VectorField for UniformFlow {
    fn velocity(&self, _p: Vec3, _t: f64) -> Result<Vec3, FieldError> {
        Ok(self.velocity)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
}

/// Rigid rotation `v = ω (−y, x)` about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidRotation {
    pub omega: f64,
    pub domain: Domain,
}

impl VectorField for RigidRotation {
    fn velocity(&self, p: Vec3, _t: f64) -> Result<Vec3, FieldError> {
        Ok(Vec3::new(-self.omega * p.y, self.omega * p.x, 0.0))
    }
    fn domain(&self) -> Domain {
        self.domain
    }
}

/// Hyperbolic saddle `v = r (x, −y)`; its flow map stretches by `e^{rT}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSaddle {
    pub rate: f64,
    pub domain: Domain,
}

impl VectorField for LinearSaddle {
    fn velocity(&self, p: Vec3, _t: f64) -> Result<Vec3, FieldError> {
        Ok(Vec3::new(self.rate * p.x, -self.rate * p.y, 0.0))
    }
    fn domain(&self) -> Domain {
        self.domain
    }
}
