mod common;

use krotov::dynamics::{propagate_costate_backward, propagate_forward, Bound, Hamiltonian, HamiltonianFlags, PropagationOptions};
use krotov::{orthonormal_basis, DenseOperator, FinalTimeFunctional, SquareModulus, StateSet, StateVector, Targets, TimeGrid, C64};

/// `H = H₀ + ε μ + g·diag|φ|²`, a discrete Gross–Pitaevskii generator.
#[derive(Debug)]
struct Condensate {
    h0: DenseOperator,
    mu: DenseOperator,
    g: f64,
    bracket: bool,
}

impl Hamiltonian for Condensate {
    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn flags(&self) -> HamiltonianFlags {
        HamiltonianFlags { hermitian: true, linear_in_field: true, linear_in_state: false }
    }

    fn operator(&self, state: Option<&StateVector>, eps: f64, _t: f64) -> DenseOperator {
        let op = self.h0.add_scaled(eps, &self.mu);
        match state {
            Some(phi) => {
                let diag = nalgebra::DMatrix::from_diagonal(&phi.amplitudes().map(|z| C64::new(self.g * z.norm_sqr(), 0.0)));
                op.add_scaled(1.0, &DenseOperator::hermitian(diag).unwrap())
            }
            None => op,
        }
    }

    fn field_derivative(&self, _state: Option<&StateVector>, _eps: f64, _t: f64) -> DenseOperator {
        self.mu.clone()
    }

    fn second_field_derivative_bound(&self) -> Bound {
        Bound::Zero
    }

    fn state_gradient_bound(&self) -> Bound {
        Bound::Unavailable
    }

    fn costate_nonlinear_term(&self, k: usize, forward: &StateSet, costates: &StateSet, _eps: f64, _t: f64) -> Option<StateVector> {
        if !self.bracket {
            return None;
        }
        let (phi, chi) = (forward.get(k).amplitudes(), costates.get(k).amplitudes());
        Some(StateVector::new(phi.zip_map(chi, |p, c| (c * p.norm_sqr() - p * p * c.conj()) * self.g)))
    }
}

fn model(bracket: bool) -> Condensate {
    let h0 = DenseOperator::from_real(3, &[0.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 2.1]).unwrap();
    let mu = DenseOperator::from_real(3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    Condensate { h0, mu, g: 1.5, bracket }
}

/// Largest relative mismatch between `−(2/ħ) Im⟨χ|μ|φ⟩` and central
/// differences of `J_T` under field bumps on a few windows.
fn gradient_mismatch(h: &Condensate) -> f64 {
    let grid = TimeGrid::new(3000, 3.0).unwrap();
    let field: Vec<f64> = grid.midpoints().iter().map(|t| 0.6 * (1.3 * t).cos()).collect();
    let opts = PropagationOptions::default();
    let initial = orthonormal_basis(3, &[0]).unwrap();
    let targets = Targets::from_states(orthonormal_basis(3, &[2]).unwrap());
    let functional = SquareModulus::new(1.0).unwrap();
    let j_t = |f: &[f64]| functional.value(propagate_forward(&initial, f, &grid, h, &opts).unwrap().last(), &targets).unwrap();

    let forward = propagate_forward(&initial, &field, &grid, h, &opts).unwrap();
    let chi_t = functional.costate_boundary(forward.last(), &targets).unwrap();
    let costates = propagate_costate_backward(&chi_t, &forward, &field, &grid, h, None, &opts).unwrap();

    let width = 100;
    let delta = 1e-5;
    let mut worst: f64 = 0.0;
    for start in [200, 1200, 2400] {
        let bumped = |sign: f64| -> Vec<f64> {
            let mut f = field.clone();
            for v in &mut f[start..start + width] {
                *v += sign * delta;
            }
            f
        };
        let fd = (j_t(&bumped(1.0)) - j_t(&bumped(-1.0))) / (2.0 * delta * width as f64 * grid.dt());
        let analytic: f64 =
            (start..start + width).map(|j| -2.0 * h.mu.matrix_element(costates.at(j).get(0), forward.at(j).get(0)).im).sum::<f64>()
                / width as f64;
        worst = worst.max((fd - analytic).abs() / fd.abs().max(1e-3));
    }
    worst
}

#[test]
fn nonlinear_costate_gives_the_field_gradient() {
    let with = gradient_mismatch(&model(true));
    let without = gradient_mismatch(&model(false));
    assert!(with < 5e-3, "with bracket: {with:e}");
    assert!(without > 10.0 * with, "without bracket: {without:e}, with: {with:e}");
}
