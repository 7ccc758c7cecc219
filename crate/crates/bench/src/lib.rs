//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use krotov::models::{make_fourier_grid, make_lambda, make_tls, ControlSettings, CostChoice, LambdaParams, TlsTarget};
use krotov::operator::pauli;
use krotov::{DenseOperator, Problem, SquareModulus, StateVector, C64};

pub fn tls_problem(n_steps: usize) -> Problem {
    let settings = ControlSettings { n_steps, eps0: 0.2, ..Default::default() };
    make_tls(1.0, pauli(1), TlsTarget::StateToState, Arc::new(SquareModulus::new(1.0).unwrap()), &settings).unwrap()
}

pub fn forbidden_problem(n_steps: usize) -> Problem {
    let params = LambdaParams { lambda_b: 20.0, cost: CostChoice::Forbid, ..Default::default() };
    let settings = ControlSettings { n_steps, lambda_a: 0.3, ..Default::default() };
    make_lambda(&params, Arc::new(SquareModulus::new(1.0).unwrap()), &settings).unwrap().problem
}

/// Two displaced harmonic surfaces on `n_r` grid points.
pub fn fourier_grid_problem(n_r: usize, n_steps: usize) -> Problem {
    let dr = 12.0 / n_r as f64;
    let r: Vec<f64> = (0..n_r).map(|i| -6.0 + dr * i as f64).collect();
    let lower = r.iter().map(|x| 0.5 * x * x).collect();
    let upper = r.iter().map(|x| 0.5 * (x - 1.0).powi(2) + 3.0).collect();
    let model = make_fourier_grid(&r, vec![lower, upper], 1.0, 1.0, 1.0).unwrap();
    let settings = ControlSettings { t_final: 20.0, n_steps, eps0: 0.2, guess_omega: 3.0, lambda_a: 0.5, ..Default::default() };
    model.problem(TlsTarget::StateToState, (0, 1), Arc::new(SquareModulus::new(1.0).unwrap()), &settings).unwrap()
}

/// Deterministic Hermitian matrix with entries of order one.
pub fn hermitian(dim: usize) -> DenseOperator {
    let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (i.min(j) as f64, i.max(j) as f64);
        let re = (0.7 * a + 1.3 * b).sin();
        let im = if i == j { 0.0 } else { (0.4 * a - 0.9 * b).cos() * if i < j { 1.0 } else { -1.0 } };
        C64::new(re, im)
    });
    DenseOperator::hermitian(m).unwrap()
}

pub fn unit_vector(dim: usize) -> StateVector {
    let v = StateVector::from_vec((0..dim).map(|i| C64::new(1.0, i as f64 * 0.1)).collect());
    let n = v.norm();
    v.scaled(C64::new(1.0 / n, 0.0))
}
