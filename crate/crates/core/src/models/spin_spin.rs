use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::ControlSettings;
use crate::dynamics::{PolynomialControlHamiltonian, PropagationOptions};
use crate::engine::Problem;
use crate::error::{KrotovError, Result};
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::operator::{pauli, DenseOperator};
use crate::state::{orthonormal_basis, StateSet, StateVector};
use crate::C64;

/// The B-gate in the two-qubit computational basis.
pub fn b_gate() -> DenseOperator {
    let (c1, s1) = ((PI / 8.0).cos(), (PI / 8.0).sin());
    let (c3, s3) = ((3.0 * PI / 8.0).cos(), (3.0 * PI / 8.0).sin());
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        r(c1), r(0.0), r(0.0), i(s1),
        r(0.0), r(c3), i(s3), r(0.0),
        r(0.0), i(s3), r(c3), r(0.0),
        i(s1), r(0.0), r(0.0), r(c1),
    ]);
    DenseOperator::new(m).expect("square")
}

/// `K = Σ_{ij} a_ij σ_i ⊗ σ_j` with `σ_0 = 1`.
pub fn spin_spin_operator(a: &[[f64; 4]; 4]) -> Result<DenseOperator> {
    for (i, row) in a.iter().enumerate() {
        for (j, &aij) in row.iter().enumerate() {
            if !aij.is_finite() || (aij - a[j][i]).abs() > 1e-12 {
                return Err(KrotovError::InvalidArgument("spin-spin tensor must be real, finite and symmetric".into()));
            }
        }
    }
    let mut k = DenseOperator::zeros(4);
    for (i, row) in a.iter().enumerate() {
        for (j, &aij) in row.iter().enumerate() {
            if aij != 0.0 {
                k = k.add_scaled(aij, &pauli(i).kron(&pauli(j)));
            }
        }
    }
    Ok(k)
}

/// `H = (ħ Ω²/8) K`, quadratic in the control `Ω`.
pub fn spin_spin_hamiltonian(a: &[[f64; 4]; 4], hbar: f64) -> Result<PolynomialControlHamiltonian> {
    let k = spin_spin_operator(a)?;
    PolynomialControlHamiltonian::new(vec![DenseOperator::zeros(4), DenseOperator::zeros(4), k.scaled(hbar / 8.0)])
}

/// Two-qubit transfer `|00⟩ → exp(−iθK/8)|00⟩`, reachable with `∫Ω² dt = θ`.
pub fn make_spin_spin(
    a: &[[f64; 4]; 4],
    theta: f64,
    functional: Arc<dyn FinalTimeFunctional>,
    settings: &ControlSettings,
) -> Result<Problem> {
    let hamiltonian = spin_spin_hamiltonian(a, settings.hbar)?;
    let k = spin_spin_operator(a)?;
    let generator = k.matrix() * C64::new(0.0, -theta / 8.0);
    let target = StateVector::new(generator.exp().column(0).into_owned());
    let grid = settings.grid()?;
    let problem = Problem {
        hamiltonian: Arc::new(hamiltonian),
        initial: orthonormal_basis(4, &[0])?,
        targets: Targets::from_states(StateSet::new(vec![target])?),
        functional,
        cost: None,
        guess: settings.guess(&grid)?,
        grid,
        propagation: PropagationOptions::with_hbar(settings.hbar),
    };
    problem.validate()?;
    Ok(problem)
}
