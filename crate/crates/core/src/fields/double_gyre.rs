use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::VectorField;
use crate::error::FieldError;
use crate::geometry::{Domain, Vec3};

/// Parameters of the unsteady Double Gyre stream function
/// `ψ = A sin(π f(x,t)) sin(π y)`, `f = a x² + b x`,
/// `a = ε sin(ω t)`, `b = 1 − 2ε sin(ω t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleGyreParams {
    pub amplitude: f64,
    pub omega: f64,
    pub epsilon: f64,
}

impl Default for DoubleGyreParams {
    fn default() -> Self {
        Self { amplitude: 0.1, omega: PI / 5.0, epsilon: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleGyre {
    pub params: DoubleGyreParams,
}

impl DoubleGyre {
    pub fn new(params: DoubleGyreParams) -> Self {
        Self { params }
    }

    fn coefficients(&self, t: f64) -> (f64, f64) {
        let s = (self.params.omega * t).sin();
        let a = self.params.epsilon * s;
        let b = 1.0 - 2.0 * self.params.epsilon * s;
        (a, b)
    }

    /// The stream function ψ(x, y, t).
    pub fn stream_function(&self, x: f64, y: f64, t: f64) -> f64 {
        let (a, b) = self.coefficients(t);
        let f = a * x * x + b * x;
        self.params.amplitude * (PI * f).sin() * (PI * y).sin()
    }

    /// Velocity `(u, v) = (−∂ψ/∂y, ∂ψ/∂x)`; defined for all real inputs.
    pub fn velocity_at(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let (a, b) = self.coefficients(t);
        let f = a * x * x + b * x;
        let df_dx = 2.0 * a * x + b;
        let pa = PI * self.params.amplitude;
        let u = -pa * (PI * f).sin() * (PI * y).cos();
        let v = pa * (PI * f).cos() * (PI * y).sin() * df_dx;
        (u, v)
    }
}

impl VectorField for DoubleGyre {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        let (u, v) = self.velocity_at(p.x, p.y, t);
        Ok(Vec3::new(u, v, 0.0))
    }

    fn domain(&self) -> Domain {
        Domain::double_gyre()
    }
}
