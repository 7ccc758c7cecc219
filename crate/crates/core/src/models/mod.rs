//! Ready-made control problems.

mod fourier_grid;
mod lambda;
mod spin_spin;
mod tls;

pub use fourier_grid::{make_fourier_grid, FourierGrid};
pub use lambda::{lambda_hamiltonian, make_lambda, CostChoice, LambdaParams, LambdaSystem, FORBIDDEN_INDEX};
pub use spin_spin::{b_gate, make_spin_spin, spin_spin_hamiltonian, spin_spin_operator};
pub use tls::{hadamard, make_tls, tls_hamiltonian, TlsTarget};

use crate::error::Result;
use crate::field::{build_guess_field, ControlField};
use crate::grid::TimeGrid;

/// Shape function `S(t)` of the field update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapeChoice {
    /// `sin²(πt/T)`, switching the update on and off smoothly.
    #[default]
    Sin2,
    Flat,
}

/// Grid, guess field and update weights shared by all builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSettings {
    pub t_final: f64,
    pub n_steps: usize,
    /// Guess amplitude `ε₀`.
    pub eps0: f64,
    /// Guess carrier frequency `Ω`.
    pub guess_omega: f64,
    pub lambda_a: f64,
    pub shape: ShapeChoice,
    pub hbar: f64,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self { t_final: 10.0, n_steps: 500, eps0: 0.1, guess_omega: 1.0, lambda_a: 1.0, shape: ShapeChoice::Sin2, hbar: 1.0 }
    }
}

impl ControlSettings {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.n_steps, self.t_final)
    }

    pub fn guess(&self, grid: &TimeGrid) -> Result<ControlField> {
        let field = build_guess_field(grid, self.eps0, self.guess_omega)?.with_lambda_a(self.lambda_a)?;
        match self.shape {
            ShapeChoice::Sin2 => Ok(field),
            ShapeChoice::Flat => field.with_shape(vec![1.0; grid.n_steps()]),
        }
    }
}
