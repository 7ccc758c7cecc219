use crate::error::{KrotovError, Result};

/// Uniform time grid `t_j = j T / n`, `j = 0..=n`.
///
/// States live on the `n + 1` grid points, controls on the `n` interval
/// midpoints `t_{j+1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_steps: usize,
    t_final: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, t_final: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(KrotovError::InvalidGrid("n_steps must be positive".into()));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(KrotovError::InvalidGrid(format!("final time must be positive and finite, got {t_final}")));
        }
        Ok(Self { n_steps, t_final })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// Grid point `t_j`; the last point is exactly `T`.
    pub fn point(&self, j: usize) -> f64 {
        debug_assert!(j <= self.n_steps);
        if j == self.n_steps {
            self.t_final
        } else {
            self.t_final * (j as f64 / self.n_steps as f64)
        }
    }

    /// Interval midpoint `t_{j+1/2}`.
    pub fn midpoint(&self, j: usize) -> f64 {
        debug_assert!(j < self.n_steps);
        self.t_final * ((j as f64 + 0.5) / self.n_steps as f64)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.point(j)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_steps).map(|j| self.midpoint(j)).collect()
    }
}
