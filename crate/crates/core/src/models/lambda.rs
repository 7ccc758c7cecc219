use std::sync::Arc;

use super::ControlSettings;
use crate::dynamics::{PolynomialControlHamiltonian, PropagationOptions};
use crate::engine::Problem;
use crate::error::{KrotovError, Result};
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::operator::DenseOperator;
use crate::running_cost::RunningCost;
use crate::state::orthonormal_basis;

/// Level whose population is penalized.
pub const FORBIDDEN_INDEX: usize = 2;

/// Operator `D` of the state-dependent cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostChoice {
    #[default]
    None,
    /// `D = P_allow = |0⟩⟨0| + |1⟩⟨1|`, used with `λ_b ≤ 0`.
    Allow,
    /// `D = P_forbid = |2⟩⟨2|`, used with `λ_b ≥ 0`.
    Forbid,
}

/// Three levels coupled in a chain `0 – 1 – 2`; the transfer `0 → 1` is
/// wanted, level 2 sits just above and is reached by off-resonant leakage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    pub energies: [f64; 3],
    /// Relative strength of the `1 – 2` coupling.
    pub upper_coupling: f64,
    pub lambda_b: f64,
    pub cost: CostChoice,
}

impl Default for LambdaParams {
    fn default() -> Self {
        Self { energies: [0.0, 1.0, 1.9], upper_coupling: 1.0, lambda_b: 0.0, cost: CostChoice::None }
    }
}

#[derive(Debug, Clone)]
pub struct LambdaSystem {
    pub problem: Problem,
    /// `D = P_forbid` with `λ_b > 0` makes `g_b` convex, so `C < 0`.
    pub second_order_required: bool,
}

pub fn lambda_hamiltonian(params: &LambdaParams) -> Result<PolynomialControlHamiltonian> {
    let e = params.energies;
    let g = params.upper_coupling;
    let drift = DenseOperator::from_real(3, &[e[0], 0.0, 0.0, 0.0, e[1], 0.0, 0.0, 0.0, e[2]])?;
    let mu = DenseOperator::from_real(3, &[0.0, 1.0, 0.0, 1.0, 0.0, g, 0.0, g, 0.0])?;
    PolynomialControlHamiltonian::linear(drift, mu)
}

pub fn make_lambda(params: &LambdaParams, functional: Arc<dyn FinalTimeFunctional>, settings: &ControlSettings) -> Result<LambdaSystem> {
    let d = match params.cost {
        CostChoice::None => None,
        CostChoice::Allow => {
            if params.lambda_b > 0.0 {
                return Err(KrotovError::InvalidArgument("D = P_allow needs lambda_b <= 0".into()));
            }
            Some(DenseOperator::projector(3, &[0, 1])?)
        }
        CostChoice::Forbid => {
            if params.lambda_b < 0.0 {
                return Err(KrotovError::InvalidArgument("D = P_forbid needs lambda_b >= 0".into()));
            }
            Some(DenseOperator::projector(3, &[FORBIDDEN_INDEX])?)
        }
    };
    let grid = settings.grid()?;
    let cost = match d {
        Some(d) if params.lambda_b != 0.0 => Some(RunningCost::constant(params.lambda_b, d, grid.t_final(), 1)?),
        _ => None,
    };
    let problem = Problem {
        hamiltonian: Arc::new(lambda_hamiltonian(params)?),
        initial: orthonormal_basis(3, &[0])?,
        targets: Targets::from_gate(&DenseOperator::identity(3), &[1])?,
        functional,
        cost,
        guess: settings.guess(&grid)?,
        grid,
        propagation: PropagationOptions::with_hbar(settings.hbar),
    };
    problem.validate()?;
    Ok(LambdaSystem { problem, second_order_required: params.cost == CostChoice::Forbid && params.lambda_b > 0.0 })
}
