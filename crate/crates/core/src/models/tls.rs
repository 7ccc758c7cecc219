use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use super::ControlSettings;
use crate::dynamics::{PolynomialControlHamiltonian, PropagationOptions};
use crate::engine::Problem;
use crate::error::Result;
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::operator::{pauli, DenseOperator};
use crate::state::orthonormal_basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlsTarget {
    /// `|0⟩ → |1⟩`, N = 1.
    StateToState,
    /// Hadamard gate on both basis states, N = 2.
    Hadamard,
}

pub fn hadamard() -> DenseOperator {
    DenseOperator::from_real(2, &[1.0, 1.0, 1.0, -1.0]).expect("2x2").scaled(FRAC_1_SQRT_2)
}

/// `H = (ω/2) σ_z + ε(t) · drive`.
pub fn tls_hamiltonian(omega: f64, drive: DenseOperator) -> Result<PolynomialControlHamiltonian> {
    PolynomialControlHamiltonian::linear(pauli(3).scaled(0.5 * omega), drive)
}

/// Two-level system; `drive` defaults to `σ_x` in the usual setups.
pub fn make_tls(
    omega: f64,
    drive: DenseOperator,
    target: TlsTarget,
    functional: Arc<dyn FinalTimeFunctional>,
    settings: &ControlSettings,
) -> Result<Problem> {
    let hamiltonian = Arc::new(tls_hamiltonian(omega, drive)?);
    let (initial, targets) = match target {
        TlsTarget::StateToState => (orthonormal_basis(2, &[0])?, Targets::from_gate(&DenseOperator::identity(2), &[1])?),
        TlsTarget::Hadamard => (orthonormal_basis(2, &[0, 1])?, Targets::from_gate(&hadamard(), &[0, 1])?),
    };
    let grid = settings.grid()?;
    let problem = Problem {
        hamiltonian,
        initial,
        targets,
        functional,
        cost: None,
        guess: settings.guess(&grid)?,
        grid,
        propagation: PropagationOptions::with_hbar(settings.hbar),
    };
    problem.validate()?;
    Ok(problem)
}
