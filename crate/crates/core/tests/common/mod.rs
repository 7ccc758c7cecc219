//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use krotov::{StateSet, StateVector, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| gaussian(rng))
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    let v = random_vector(rng, dim);
    let n = v.norm();
    StateVector::new(v / C64::new(n, 0.0))
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> StateSet {
    StateSet::new((0..n).map(|_| random_unit(rng, dim)).collect()).unwrap()
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn taylor_expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm: f64 = (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::new(0.5f64.powi(squarings), 0.0);
    let dim = a.nrows();
    let mut sum = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(−i H dt) v` through the Taylor oracle.
pub fn expm_apply(h: &DMatrix<C64>, dt: f64, v: &DVector<C64>) -> DVector<C64> {
    taylor_expm(&(h * C64::new(0.0, -dt))) * v
}

/// Classical RK4 with `substeps` fixed steps for `dy/dt = −i H y + s(t)`.
pub fn rk4_inhomogeneous(
    h: &DMatrix<C64>,
    y0: &DVector<C64>,
    source: &dyn Fn(f64) -> DVector<C64>,
    dt: f64,
    substeps: usize,
) -> DVector<C64> {
    let minus_i = C64::new(0.0, -1.0);
    let f = |t: f64, y: &DVector<C64>| (h * y) * minus_i + source(t);
    let step = dt / substeps as f64;
    let half = C64::new(step / 2.0, 0.0);
    let full = C64::new(step, 0.0);
    let mut y = y0.clone();
    for i in 0..substeps {
        let t = i as f64 * step;
        let k1 = f(t, &y);
        let k2 = f(t + step / 2.0, &(&y + &k1 * half));
        let k3 = f(t + step / 2.0, &(&y + &k2 * half));
        let k4 = f(t + step, &(&y + &k3 * full));
        y += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(step / 6.0, 0.0);
    }
    y
}

/// Central-difference Wirtinger gradient `∂f/∂φ̄_k = ½(∂_x + i∂_y) f`.
pub fn fd_wirtinger_gradient(f: &dyn Fn(&StateSet) -> f64, states: &StateSet, h: f64) -> Vec<Vec<C64>> {
    (0..states.len())
        .map(|k| {
            (0..states.dim())
                .map(|m| {
                    let mut parts = [0.0; 2];
                    for (p, dir) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].into_iter().enumerate() {
                        let mut plus = states.clone();
                        plus.get_mut(k)[m] += dir * h;
                        let mut minus = states.clone();
                        minus.get_mut(k)[m] -= dir * h;
                        parts[p] = (f(&plus) - f(&minus)) / (2.0 * h);
                    }
                    C64::new(0.5 * parts[0], 0.5 * parts[1])
                })
                .collect()
        })
        .collect()
}

/// Relative distance between a costate and `−∇` from finite differences.
pub fn costate_gradient_error(costate: &StateSet, fd: &[Vec<C64>]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (k, grad) in fd.iter().enumerate() {
        for (m, g) in grad.iter().enumerate() {
            diff += (costate.get(k)[m] + g).norm_sqr();
            norm += costate.get(k)[m].norm_sqr();
        }
    }
    diff.sqrt() / norm.sqrt().max(1e-12)
}

/// Hermitian-part extremes of a dense matrix via the eigen-decomposition.
pub fn eigen_extremes(m: &DMatrix<C64>) -> (f64, f64) {
    let e = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues;
    (e.min(), e.max())
}
