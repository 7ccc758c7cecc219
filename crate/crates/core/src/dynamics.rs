//! Generators of the equations of motion and time propagation of states
//! (forward) and costates (backward).

use std::fmt::Debug;

use crate::error::{KrotovError, Result};
use crate::grid::TimeGrid;
use crate::operator::DenseOperator;
use crate::propagator::{Source, SourceMode, StepPropagator};
use crate::running_cost::RunningCost;
use crate::state::{StateSet, StateVector, Trajectory};
use crate::C64;

/// A supremum bound a generator can report about itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Zero,
    Finite(f64),
    Unavailable,
}

impl Bound {
    /// The bound as a number; `Unavailable` is an error naming `what`.
    pub fn require(self, what: &str) -> Result<f64> {
        match self {
            Bound::Zero => Ok(0.0),
            Bound::Finite(v) => Ok(v),
            Bound::Unavailable => Err(KrotovError::BoundUnavailable(what.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HamiltonianFlags {
    pub hermitian: bool,
    pub linear_in_field: bool,
    pub linear_in_state: bool,
}

/// The generator `H(φ, ε, t)` of `dφ/dt = −(i/ħ) H φ`.
pub trait Hamiltonian: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn flags(&self) -> HamiltonianFlags;

    /// `H(φ, ε, t)`. `state` may be `None` for state-independent generators.
    fn operator(&self, state: Option<&StateVector>, eps: f64, t: f64) -> DenseOperator;

    /// `∂H/∂ε` at `(φ, ε, t)`.
    fn field_derivative(&self, state: Option<&StateVector>, eps: f64, t: f64) -> DenseOperator;

    fn apply(&self, state: &StateVector, eps: f64, t: f64) -> StateVector {
        self.operator(Some(state), eps, t).apply(state)
    }

    fn apply_field_derivative(&self, state: &StateVector, eps: f64, t: f64) -> StateVector {
        self.field_derivative(Some(state), eps, t).apply(state)
    }

    /// `sup ‖∂²H/∂ε²‖` over states and fields.
    fn second_field_derivative_bound(&self) -> Bound;

    /// `sup |∂^α H|`, `|α| = 1`, over the states of the norm ball.
    fn state_gradient_bound(&self) -> Bound;

    /// Bound on `|Im λ|` over the eigenvalues of `H`.
    fn imaginary_part_bound(&self) -> Bound {
        if self.flags().hermitian {
            Bound::Zero
        } else {
            Bound::Unavailable
        }
    }

    /// For state-dependent generators: the bracket with components
    /// `b_i = Σ_l ⟨φ_l|∂H†/∂φ̄_{k,i}|χ_l⟩ − Σ_l ⟨χ_l|∂H/∂φ̄_{k,i}|φ_l⟩`,
    /// which keeps `Re Σ_k ⟨χ_k|δφ_k⟩` constant along linearized
    /// trajectories. The costate equation adds `−(i/ħ) b`.
    /// For `H = H₀ + g·diag|φ|²` this is `b = g(|φ|²χ − φ²χ̄)`.
    fn costate_nonlinear_term(&self, _k: usize, _forward: &StateSet, _costates: &StateSet, _eps: f64, _t: f64) -> Option<StateVector> {
        None
    }
}

/// `H(ε) = Σ_n εⁿ H_n`, independent of the state and of time.
#[derive(Debug, Clone)]
pub struct PolynomialControlHamiltonian {
    terms: Vec<DenseOperator>,
    /// `|ε| ≤ field_bound`, needed to bound `∂²H/∂ε²` beyond quadratic order.
    field_bound: Option<f64>,
}

impl PolynomialControlHamiltonian {
    pub fn new(terms: Vec<DenseOperator>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(KrotovError::InvalidArgument("Hamiltonian needs at least a drift term".into()));
        };
        let dim = first.dim();
        if terms.iter().any(|t| t.dim() != dim) {
            return Err(KrotovError::DimensionMismatch("Hamiltonian terms differ in dimension".into()));
        }
        Ok(Self { terms, field_bound: None })
    }

    /// `H₀ + ε μ`.
    pub fn linear(drift: DenseOperator, coupling: DenseOperator) -> Result<Self> {
        Self::new(vec![drift, coupling])
    }

    pub fn with_field_bound(mut self, bound: f64) -> Self {
        self.field_bound = Some(bound);
        self
    }

    pub fn terms(&self) -> &[DenseOperator] {
        &self.terms
    }

    fn degree(&self) -> usize {
        self.terms.iter().rposition(|t| t.matrix().iter().any(|z| *z != C64::new(0.0, 0.0))).unwrap_or(0)
    }
}

impl Hamiltonian for PolynomialControlHamiltonian {
    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn flags(&self) -> HamiltonianFlags {
        HamiltonianFlags {
            hermitian: self.terms.iter().all(DenseOperator::is_hermitian),
            linear_in_field: self.degree() <= 1,
            linear_in_state: true,
        }
    }

    fn operator(&self, _state: Option<&StateVector>, eps: f64, _t: f64) -> DenseOperator {
        let mut op = self.terms[0].clone();
        let mut power = 1.0;
        for term in &self.terms[1..] {
            power *= eps;
            op = op.add_scaled(power, term);
        }
        op
    }

    fn field_derivative(&self, _state: Option<&StateVector>, eps: f64, _t: f64) -> DenseOperator {
        let mut op = DenseOperator::zeros(self.dim());
        let mut power = 1.0;
        for (n, term) in self.terms.iter().enumerate().skip(1) {
            op = op.add_scaled(n as f64 * power, term);
            power *= eps;
        }
        op
    }

    fn second_field_derivative_bound(&self) -> Bound {
        match self.degree() {
            0 | 1 => Bound::Zero,
            2 => Bound::Finite(self.terms[2].scaled(2.0).spectral_norm()),
            _ => match self.field_bound {
                Some(e) => Bound::Finite(
                    self.terms
                        .iter()
                        .enumerate()
                        .skip(2)
                        .map(|(n, t)| (n * (n - 1)) as f64 * e.powi(n as i32 - 2) * t.spectral_norm())
                        .sum(),
                ),
                None => Bound::Unavailable,
            },
        }
    }

    fn state_gradient_bound(&self) -> Bound {
        Bound::Zero
    }

    fn imaginary_part_bound(&self) -> Bound {
        let parts: Vec<f64> = self.terms.iter().map(DenseOperator::imaginary_eigenvalue_bound).collect();
        if parts.iter().all(|&p| p == 0.0) {
            return Bound::Zero;
        }
        if parts[1..].iter().all(|&p| p == 0.0) {
            return Bound::Finite(parts[0]);
        }
        match self.field_bound {
            Some(e) => Bound::Finite(parts.iter().enumerate().map(|(n, p)| p * e.powi(n as i32)).sum()),
            None => Bound::Unavailable,
        }
    }
}

/// Step-level settings shared by forward and backward propagation.
#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationOptions {
    pub stepper: StepPropagator,
    pub source_mode: SourceMode,
}

impl PropagationOptions {
    pub fn with_hbar(hbar: f64) -> Self {
        Self { stepper: StepPropagator::with_hbar(hbar), ..Self::default() }
    }

    pub fn hbar(&self) -> f64 {
        self.stepper.hbar
    }
}

fn at_step(err: KrotovError, step: usize) -> KrotovError {
    match err {
        KrotovError::PropagatorAccuracy { alpha, terms, .. } => KrotovError::PropagatorAccuracy { step, alpha, terms },
        KrotovError::NonFinite { what, .. } => KrotovError::NonFinite { index: step, what },
        other => other,
    }
}

/// Advance every state of `states` over grid interval `j` under field `eps`.
pub fn forward_step(
    states: &StateSet,
    eps: f64,
    j: usize,
    grid: &TimeGrid,
    h: &dyn Hamiltonian,
    opts: &PropagationOptions,
) -> Result<StateSet> {
    let t = grid.midpoint(j);
    let state_dependent = !h.flags().linear_in_state;
    let shared = (!state_dependent).then(|| h.operator(None, eps, t));
    let next = states
        .iter()
        .map(|phi| {
            let owned;
            let op = match &shared {
                Some(op) => op,
                None => {
                    owned = h.operator(Some(phi), eps, t);
                    &owned
                }
            };
            opts.stepper.step(op, grid.dt(), phi, Source::None).map(|p| p.state).map_err(|e| at_step(e, j))
        })
        .collect::<Result<Vec<_>>>()?;
    StateSet::new(next)
}

/// Forward propagation of the states `φ_k` under a piecewise-constant field.
pub fn propagate_forward(
    initial: &StateSet,
    field: &[f64],
    grid: &TimeGrid,
    h: &dyn Hamiltonian,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    check_dims(initial, field, grid, h)?;
    let mut sets = Vec::with_capacity(grid.n_points());
    sets.push(initial.clone());
    for (j, &eps) in field.iter().enumerate() {
        let next = forward_step(&sets[j], eps, j, grid, h, opts)?;
        sets.push(next);
    }
    Ok(Trajectory::new(sets))
}

fn check_dims(states: &StateSet, field: &[f64], grid: &TimeGrid, h: &dyn Hamiltonian) -> Result<()> {
    if field.len() != grid.n_steps() {
        return Err(KrotovError::DimensionMismatch(format!("field has {} samples, grid has {} intervals", field.len(), grid.n_steps())));
    }
    if states.dim() != h.dim() {
        return Err(KrotovError::DimensionMismatch(format!(
            "states of dimension {} for a Hamiltonian of dimension {}",
            states.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Right-hand side source of the costate equation for state `k` at grid
/// point `j`: `∇_{⟨φ_k|} g_b − (i/ħ)[nonlinear bracket]`.
#[allow(clippy::too_many_arguments)]
pub fn costate_source(
    k: usize,
    j: usize,
    forward: &Trajectory,
    costates: &StateSet,
    eps: f64,
    grid: &TimeGrid,
    h: &dyn Hamiltonian,
    cost: Option<&RunningCost>,
    hbar: f64,
) -> Option<StateVector> {
    let t = grid.point(j);
    let phi = forward.at(j);
    let mut source: Option<StateVector> = cost.filter(|c| c.is_active()).map(|c| c.gradient(phi.get(k), t));
    if !h.flags().linear_in_state {
        if let Some(bracket) = h.costate_nonlinear_term(k, phi, costates, eps, t) {
            let term = bracket.scaled(C64::new(0.0, -1.0 / hbar));
            source = Some(match source {
                Some(mut s) => {
                    s.axpy(C64::new(1.0, 0.0), &term);
                    s
                }
                None => term,
            });
        }
    }
    source
}

/// Backward propagation of the costates `χ_k` from `χ_k(T) = terminal`,
/// `dχ/dt = −(i/ħ) H† χ + source`, along the stored forward trajectory.
pub fn propagate_costate_backward(
    terminal: &StateSet,
    forward: &Trajectory,
    field: &[f64],
    grid: &TimeGrid,
    h: &dyn Hamiltonian,
    cost: Option<&RunningCost>,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    check_dims(terminal, field, grid, h)?;
    if forward.len() != grid.n_points() {
        return Err(KrotovError::DimensionMismatch(format!(
            "forward trajectory has {} points, grid has {}",
            forward.len(),
            grid.n_points()
        )));
    }
    if forward.at(0).len() != terminal.len() || forward.at(0).dim() != terminal.dim() {
        return Err(KrotovError::DimensionMismatch("costates do not match the forward states".into()));
    }
    let n = grid.n_steps();
    let hbar = opts.hbar();
    let flags = h.flags();
    let mut sets: Vec<StateSet> = vec![terminal.clone(); grid.n_points()];
    for j in (0..n).rev() {
        let eps = field[j];
        let t = grid.midpoint(j);
        let later = sets[j + 1].clone();
        let mut next = Vec::with_capacity(later.len());
        for (k, chi) in later.iter().enumerate() {
            // Backward in τ = t_{j+1} − t: dχ/dτ = −(i/ħ)(−H†)χ − source.
            let op = if flags.linear_in_state { h.operator(None, eps, t) } else { h.operator(Some(forward.at(j + 1).get(k)), eps, t) };
            let generator = op.adjoint().scaled(-1.0);
            let s_late = costate_source(k, j + 1, forward, &later, eps, grid, h, cost, hbar);
            let s_early = costate_source(k, j, forward, &later, eps, grid, h, cost, hbar);
            let stepped = match (s_late, s_early) {
                (None, None) => opts.stepper.step(&generator, grid.dt(), chi, Source::None),
                (late, early) => {
                    let zero = StateVector::zeros(chi.dim());
                    let late = late.unwrap_or_else(|| zero.clone()).scaled(C64::new(-1.0, 0.0));
                    let early = early.unwrap_or(zero).scaled(C64::new(-1.0, 0.0));
                    match opts.source_mode {
                        SourceMode::Constant => {
                            let avg = late.add(&early).scaled(C64::new(0.5, 0.0));
                            opts.stepper.step(&generator, grid.dt(), chi, Source::Constant(&avg))
                        }
                        SourceMode::Linear => opts.stepper.step(&generator, grid.dt(), chi, Source::Linear { start: &late, end: &early }),
                    }
                }
            };
            next.push(stepped.map_err(|e| at_step(e, j))?.state);
        }
        sets[j] = StateSet::new(next)?;
    }
    Ok(Trajectory::new(sets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;
    use crate::state::orthonormal_basis;

    fn tls() -> PolynomialControlHamiltonian {
        PolynomialControlHamiltonian::linear(pauli(3).scaled(0.5), pauli(1)).unwrap()
    }

    #[test]
    fn polynomial_flags_and_bounds() {
        let h = tls();
        assert_eq!(h.flags(), HamiltonianFlags { hermitian: true, linear_in_field: true, linear_in_state: true });
        assert_eq!(h.second_field_derivative_bound(), Bound::Zero);
        assert_eq!(h.state_gradient_bound(), Bound::Zero);

        let q = PolynomialControlHamiltonian::new(vec![DenseOperator::zeros(2), DenseOperator::zeros(2), pauli(3)]).unwrap();
        assert!(!q.flags().linear_in_field);
        match q.second_field_derivative_bound() {
            Bound::Finite(v) => assert!((v - 2.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
        let cubic = PolynomialControlHamiltonian::new(vec![pauli(3), pauli(1), pauli(1), pauli(1)]).unwrap();
        assert_eq!(cubic.second_field_derivative_bound(), Bound::Unavailable);
        assert!(matches!(cubic.with_field_bound(1.0).second_field_derivative_bound(), Bound::Finite(_)));
    }

    #[test]
    fn field_derivative_of_polynomial() {
        let h = PolynomialControlHamiltonian::new(vec![pauli(3), pauli(1), pauli(2)]).unwrap();
        let d = h.field_derivative(None, 0.3, 0.0);
        let expected = pauli(1).add_scaled(0.6, &pauli(2));
        assert!((d.matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn forward_preserves_norm_and_rejects_mismatch() {
        let h = tls();
        let grid = TimeGrid::new(1000, 10.0).unwrap();
        let field: Vec<f64> = grid.midpoints().iter().map(|t| 0.3 * t.cos()).collect();
        let traj = propagate_forward(&orthonormal_basis(2, &[0]).unwrap(), &field, &grid, &h, &PropagationOptions::default()).unwrap();
        assert_eq!(traj.len(), 1001);
        for set in traj.iter() {
            assert!((set.get(0).norm() - 1.0).abs() < 1e-9);
        }
        assert!(propagate_forward(&orthonormal_basis(2, &[0]).unwrap(), &field[1..], &grid, &h, &PropagationOptions::default()).is_err());
        assert!(propagate_forward(&orthonormal_basis(3, &[0]).unwrap(), &field, &grid, &h, &PropagationOptions::default()).is_err());
    }

    #[test]
    fn backward_requires_matching_forward() {
        let h = tls();
        let grid = TimeGrid::new(10, 1.0).unwrap();
        let field = vec![0.1; 10];
        let opts = PropagationOptions::default();
        let basis = orthonormal_basis(2, &[0]).unwrap();
        let fwd = propagate_forward(&basis, &field, &grid, &h, &opts).unwrap();
        let short = Trajectory::new(fwd.iter().take(5).cloned().collect());
        assert!(propagate_costate_backward(&basis, &short, &field, &grid, &h, None, &opts).is_err());
        let other = TimeGrid::new(20, 1.0).unwrap();
        assert!(propagate_costate_backward(&basis, &fwd, &field, &other, &h, None, &opts).is_err());
    }

    #[test]
    fn overlap_of_state_and_costate_is_conserved() {
        let h = tls();
        let grid = TimeGrid::new(400, 4.0).unwrap();
        let field: Vec<f64> = grid.midpoints().iter().map(|t| 0.5 * (1.3 * t).sin()).collect();
        let opts = PropagationOptions::default();
        let basis = orthonormal_basis(2, &[0]).unwrap();
        let fwd = propagate_forward(&basis, &field, &grid, &h, &opts).unwrap();
        let terminal = StateSet::new(vec![StateVector::from_vec(vec![C64::new(0.2, 0.1), C64::new(-0.4, 0.7)])]).unwrap();
        let chi = propagate_costate_backward(&terminal, &fwd, &field, &grid, &h, None, &opts).unwrap();
        let reference = chi.at(grid.n_steps()).get(0).inner(fwd.at(grid.n_steps()).get(0));
        for j in 0..=grid.n_steps() {
            let o = chi.at(j).get(0).inner(fwd.at(j).get(0));
            assert!((o - reference).norm() < 1e-8);
            assert!((chi.at(j).get(0).norm() - terminal.get(0).norm()).abs() < 1e-9);
        }
    }
}
