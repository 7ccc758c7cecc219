//! Running costs: the field penalty `g_a` and the state-dependent cost `g_b`.

use std::fmt;
use std::sync::Arc;

use crate::error::{KrotovError, Result};
use crate::field::ControlField;
use crate::grid::TimeGrid;
use crate::operator::DenseOperator;
use crate::state::{StateSet, StateVector, Trajectory};
use crate::C64;

/// The operator `D(t)` of `g_b`.
#[derive(Clone)]
pub enum CostOperator {
    Constant(DenseOperator),
    TimeDependent(Arc<dyn Fn(f64) -> DenseOperator + Send + Sync>),
}

impl fmt::Debug for CostOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostOperator::Constant(op) => f.debug_tuple("Constant").field(op).finish(),
            CostOperator::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

impl CostOperator {
    pub fn at(&self, t: f64) -> DenseOperator {
        match self {
            CostOperator::Constant(op) => op.clone(),
            CostOperator::TimeDependent(f) => f(t),
        }
    }
}

/// `g_b = (λ_b / (T N)) Σ_k ⟨φ_k|D(t)|φ_k⟩`.
#[derive(Debug, Clone)]
pub struct RunningCost {
    lambda_b: f64,
    operator: CostOperator,
    t_final: f64,
    n_states: usize,
    /// Sample times used to bound the spectrum of a time-dependent `D`.
    spectrum_samples: usize,
}

impl RunningCost {
    pub fn new(lambda_b: f64, operator: CostOperator, t_final: f64, n_states: usize) -> Result<Self> {
        if !lambda_b.is_finite() {
            return Err(KrotovError::InvalidArgument("lambda_b must be finite".into()));
        }
        if !(t_final.is_finite() && t_final > 0.0) || n_states == 0 {
            return Err(KrotovError::InvalidArgument("running cost needs T > 0 and N >= 1".into()));
        }
        if let CostOperator::Constant(op) = &operator {
            if !op.is_hermitian() {
                return Err(KrotovError::InvalidArgument("cost operator D must be Hermitian".into()));
            }
        }
        Ok(Self { lambda_b, operator, t_final, n_states, spectrum_samples: 64 })
    }

    pub fn constant(lambda_b: f64, d: DenseOperator, t_final: f64, n_states: usize) -> Result<Self> {
        Self::new(lambda_b, CostOperator::Constant(d), t_final, n_states)
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    pub fn operator(&self) -> &CostOperator {
        &self.operator
    }

    pub fn is_active(&self) -> bool {
        self.lambda_b != 0.0
    }

    /// `λ_b / (T N)`.
    pub fn prefactor(&self) -> f64 {
        self.lambda_b / (self.t_final * self.n_states as f64)
    }

    /// Integrand `g_b(t)` for the states at time `t`.
    pub fn value(&self, states: &StateSet, t: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let d = self.operator.at(t);
        self.prefactor() * states.iter().map(|phi| d.matrix_element(phi, phi).re).sum::<f64>()
    }

    /// `g_b(φ + Δφ) − g_b(φ)` at time `t`, expanded so that small `Δφ` does
    /// not cancel against the two O(1) values.
    pub fn value_change(&self, states: &StateSet, delta: &StateSet, t: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let d = self.operator.at(t);
        let sum: f64 =
            states.iter().zip(delta.iter()).map(|(phi, dphi)| 2.0 * d.matrix_element(phi, dphi).re + d.matrix_element(dphi, dphi).re).sum();
        self.prefactor() * sum
    }

    /// `∇_{⟨φ_k|} g_b = (λ_b/(T N)) D(t)|φ_k⟩`.
    pub fn gradient(&self, phi: &StateVector, t: f64) -> StateVector {
        self.operator.at(t).apply(phi).scaled(C64::new(self.prefactor(), 0.0))
    }

    /// Smallest and largest eigenvalue of `D` over the horizon.
    fn spectrum(&self) -> (f64, f64) {
        match &self.operator {
            CostOperator::Constant(op) => op.extreme_eigenvalues(),
            CostOperator::TimeDependent(f) => {
                let n = self.spectrum_samples;
                (0..=n)
                    .map(|i| f(self.t_final * i as f64 / n as f64).extreme_eigenvalues())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
            }
        }
    }

    /// `sup g₂ / ‖Δφ‖²` where `g₂ = (λ_b/(T N)) Σ⟨Δφ|D|Δφ⟩` is the second-order
    /// part of `g_b`.
    pub fn curvature_bound(&self) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let (lo, hi) = self.spectrum();
        let p = self.prefactor();
        if p >= 0.0 {
            p * hi
        } else {
            p * lo
        }
    }

    /// `∫ g_b dt` over a stored trajectory, trapezoid rule on the grid points.
    pub fn integral(&self, forward: &Trajectory, grid: &TimeGrid) -> f64 {
        g_b_integral(forward, grid, Some(self))
    }
}

/// `∫ (λ_a / S) (ε − ε_ref)² dt` with the midpoint rule.
pub fn g_a_integral(field: &ControlField, grid: &TimeGrid) -> Result<f64> {
    g_a_integral_against(field.values(), field.reference(), field.shape(), field.lambda_a(), grid)
}

/// `∫ (λ_a / S) (ε − ref)² dt` for explicit samples.
pub fn g_a_integral_against(values: &[f64], reference: &[f64], shape: &[f64], lambda_a: f64, grid: &TimeGrid) -> Result<f64> {
    let mut sum = 0.0;
    for (j, ((&e, &r), &s)) in values.iter().zip(reference).zip(shape).enumerate() {
        let diff = e - r;
        if diff == 0.0 {
            continue;
        }
        if s == 0.0 {
            return Err(KrotovError::ZeroShape(j));
        }
        sum += lambda_a / s * diff * diff;
    }
    Ok(sum * grid.dt())
}

/// `∫ g_b dt`, trapezoid rule on the grid points; zero without a cost.
pub fn g_b_integral(forward: &Trajectory, grid: &TimeGrid, cost: Option<&RunningCost>) -> f64 {
    let Some(cost) = cost.filter(|c| c.is_active()) else {
        return 0.0;
    };
    let n = grid.n_steps();
    let mut sum = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        sum += w * cost.value(forward.at(j), grid.point(j));
    }
    sum * grid.dt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::orthonormal_basis;

    #[test]
    fn g_a_vanishes_at_reference() {
        let grid = TimeGrid::new(10, 1.0).unwrap();
        let f = ControlField::from_values(vec![0.3; 10], 2.0).unwrap();
        assert_eq!(g_a_integral(&f, &grid).unwrap(), 0.0);
        let g = f.with_values(vec![0.5; 10], vec![0.3; 10]).unwrap();
        // λ_a (0.2)² T
        assert!((g_a_integral(&g, &grid).unwrap() - 2.0 * 0.04).abs() < 1e-14);
    }

    #[test]
    fn g_a_zero_shape_names_index() {
        let grid = TimeGrid::new(4, 1.0).unwrap();
        let f = ControlField::new(vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 4], 1.0).unwrap();
        assert!(matches!(g_a_integral(&f, &grid), Err(KrotovError::ZeroShape(2))));
        // S = 0 where ε = ε_ref is fine
        let ok = ControlField::new(vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0, 1.0], vec![0.0; 4], 1.0).unwrap();
        assert!(g_a_integral(&ok, &grid).is_ok());
    }

    #[test]
    fn g_b_identity_gives_lambda_b() {
        let grid = TimeGrid::new(20, 2.0).unwrap();
        let states = orthonormal_basis(3, &[0, 2]).unwrap();
        let traj = Trajectory::new(vec![states; 21]);
        let cost = RunningCost::constant(-1.5, DenseOperator::identity(3), 2.0, 2).unwrap();
        assert!((cost.integral(&traj, &grid) + 1.5).abs() < 1e-13);
        let forbid = RunningCost::constant(3.0, DenseOperator::projector(3, &[1]).unwrap(), 2.0, 2).unwrap();
        assert_eq!(forbid.integral(&traj, &grid), 0.0);
    }

    #[test]
    fn value_change_matches_difference() {
        let d = DenseOperator::from_real(2, &[1.0, 0.5, 0.5, -2.0]).unwrap();
        let c = RunningCost::constant(0.7, d, 3.0, 1).unwrap();
        let old = StateSet::new(vec![StateVector::from_vec(vec![C64::new(0.6, 0.1), C64::new(-0.2, 0.77)])]).unwrap();
        let delta = StateSet::new(vec![StateVector::from_vec(vec![C64::new(0.01, -0.03), C64::new(0.02, 0.0)])]).unwrap();
        let new = StateSet::new(vec![old.get(0).add(delta.get(0))]).unwrap();
        let direct = c.value(&new, 1.0) - c.value(&old, 1.0);
        assert!((c.value_change(&old, &delta, 1.0) - direct).abs() < 1e-15);
    }

    #[test]
    fn curvature_bound_follows_sign() {
        let p = DenseOperator::projector(3, &[2]).unwrap();
        let c = RunningCost::constant(20.0, p.clone(), 2.0, 1).unwrap();
        assert!((c.curvature_bound() - 10.0).abs() < 1e-10);
        let allow = DenseOperator::projector(3, &[0, 1]).unwrap();
        let c = RunningCost::constant(-4.0, allow, 2.0, 1).unwrap();
        assert!(c.curvature_bound().abs() < 1e-10);
        let indefinite = DenseOperator::from_real(2, &[1.0, 0.0, 0.0, -3.0]).unwrap();
        let c = RunningCost::constant(-1.0, indefinite, 1.0, 1).unwrap();
        assert!((c.curvature_bound() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_hermitian_cost() {
        let d = DenseOperator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(RunningCost::constant(1.0, d, 1.0, 1).is_err());
        assert!(RunningCost::constant(f64::NAN, DenseOperator::identity(2), 1.0, 1).is_err());
    }
}
