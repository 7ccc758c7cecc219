use std::f64::consts::PI;

use crate::error::{KrotovError, Result};
use crate::grid::TimeGrid;

/// Real control sampled on the interval midpoints of a [`TimeGrid`], together
/// with its update shape `S(t)`, reference field and weight `λ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    values: Vec<f64>,
    shape: Vec<f64>,
    reference: Vec<f64>,
    lambda_a: f64,
}

impl ControlField {
    pub fn new(values: Vec<f64>, shape: Vec<f64>, reference: Vec<f64>, lambda_a: f64) -> Result<Self> {
        let n = values.len();
        if shape.len() != n || reference.len() != n {
            return Err(KrotovError::DimensionMismatch(format!(
                "field has {n} samples, shape {} and reference {}",
                shape.len(),
                reference.len()
            )));
        }
        if let Some((j, s)) = shape.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
            return Err(KrotovError::InvalidArgument(format!("shape function must be non-negative and finite, S[{j}] = {s}")));
        }
        if !(lambda_a.is_finite() && lambda_a > 0.0) {
            return Err(KrotovError::InvalidArgument(format!("lambda_a must be positive, got {lambda_a}")));
        }
        Ok(Self { values, shape, reference, lambda_a })
    }

    /// A field with flat shape `S ≡ 1`, referenced to itself.
    pub fn from_values(values: Vec<f64>, lambda_a: f64) -> Result<Self> {
        let n = values.len();
        Self::new(values.clone(), vec![1.0; n], values, lambda_a)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn with_lambda_a(mut self, lambda_a: f64) -> Result<Self> {
        if !(lambda_a.is_finite() && lambda_a > 0.0) {
            return Err(KrotovError::InvalidArgument(format!("lambda_a must be positive, got {lambda_a}")));
        }
        self.lambda_a = lambda_a;
        Ok(self)
    }

    pub fn with_shape(self, shape: Vec<f64>) -> Result<Self> {
        Self::new(self.values, shape, self.reference, self.lambda_a)
    }

    pub fn with_reference(self, reference: Vec<f64>) -> Result<Self> {
        Self::new(self.values, self.shape, reference, self.lambda_a)
    }

    /// Same shape and weight, new samples, referenced to `reference`.
    pub fn with_values(&self, values: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        Self::new(values, self.shape.clone(), reference, self.lambda_a)
    }

    /// Check that the field matches a grid.
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.values.len() != grid.n_steps() {
            return Err(KrotovError::DimensionMismatch(format!(
                "field has {} samples but the grid has {} intervals",
                self.values.len(),
                grid.n_steps()
            )));
        }
        Ok(())
    }
}

/// Envelope `sin²(π t / T)`.
pub fn sin_squared(t: f64, t_final: f64) -> f64 {
    let s = (PI * t / t_final).sin();
    s * s
}

/// Guess field `ε₀ sin²(πt/T) cos(Ωt)` sampled on interval midpoints. The shape
/// defaults to the `sin²` envelope and the reference to the guess itself;
/// `λ_a` defaults to one.
pub fn build_guess_field(grid: &TimeGrid, eps0: f64, omega: f64) -> Result<ControlField> {
    if !(eps0.is_finite() && eps0 >= 0.0) {
        return Err(KrotovError::InvalidArgument(format!("field amplitude must be >= 0, got {eps0}")));
    }
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(KrotovError::InvalidArgument(format!("field frequency must be >= 0, got {omega}")));
    }
    let t_final = grid.t_final();
    let mids = grid.midpoints();
    let shape: Vec<f64> = mids.iter().map(|&t| sin_squared(t, t_final)).collect();
    let values: Vec<f64> = mids.iter().zip(&shape).map(|(&t, &s)| eps0 * s * (omega * t).cos()).collect();
    ControlField::new(values.clone(), shape, values, 1.0)
}
