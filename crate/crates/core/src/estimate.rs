//! Estimates of the second-order parameters `A`, `B`, `C`: worst-case bounds
//! from the problem structure, and per-iteration values from the history.

use crate::dynamics::Hamiltonian;
use crate::error::{KrotovError, Result};
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::grid::TimeGrid;
use crate::running_cost::RunningCost;
use crate::state::{StateSet, StateVector, Trajectory};
use crate::C64;

/// Grid points with `Σ_k ‖Δφ_k‖²` below this are skipped (0/0 limit).
pub const DELTA_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AbcTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AbcTriple {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }
}

/// `sup_t Σ_k ‖χ_k(t)‖` over a costate trajectory.
pub fn max_costate_norm(costates: &Trajectory) -> f64 {
    costates.iter().map(StateSet::sum_of_norms).fold(0.0, f64::max)
}

/// Analytic `(A, B, C)` from the suprema reported by the functional, the
/// Hamiltonian and the running cost.
///
/// `functional_curvature` is `functional.curvature_bound(targets)`, passed in
/// so that a sampled bound is computed once per run.
pub fn estimate_analytic(
    functional_curvature: f64,
    h: &dyn Hamiltonian,
    cost: Option<&RunningCost>,
    costates: Option<&Trajectory>,
    n_states: usize,
    hbar: f64,
) -> Result<AbcTriple> {
    let a = (functional_curvature / 2.0).max(0.0);
    let gradient = h.state_gradient_bound().require("state gradient of the Hamiltonian")?;
    let imaginary = h.imaginary_part_bound().require("imaginary part of the Hamiltonian spectrum")?;
    let b = (2.0 * (n_states as f64).sqrt() * gradient + 2.0 * imaginary) / hbar;
    let mut c = -cost.map_or(0.0, RunningCost::curvature_bound);
    if gradient != 0.0 {
        let costates = costates.ok_or_else(|| KrotovError::BoundUnavailable("costate norms for the C bound".into()))?;
        c -= 2.0 * max_costate_norm(costates) * gradient / hbar;
    }
    Ok(AbcTriple { a, b, c })
}

/// Convenience wrapper computing the functional's curvature bound in place.
pub fn estimate_analytic_for(
    functional: &dyn FinalTimeFunctional,
    targets: &Targets,
    h: &dyn Hamiltonian,
    cost: Option<&RunningCost>,
    costates: Option<&Trajectory>,
    hbar: f64,
) -> Result<AbcTriple> {
    estimate_analytic(functional.curvature_bound(targets), h, cost, costates, targets.len(), hbar)
}

/// Everything a completed iteration leaves behind for the numeric estimate.
#[derive(Debug, Clone, Copy)]
pub struct IterationSnapshot<'a> {
    pub grid: &'a TimeGrid,
    pub old_forward: &'a Trajectory,
    pub new_forward: &'a Trajectory,
    /// Costates of the iteration, propagated under `old_field`.
    pub costates: &'a Trajectory,
    pub old_field: &'a [f64],
    pub hbar: f64,
}

/// Per-iteration estimates and their raw extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericEstimate {
    /// The triple for the next iteration; `0` where no grid point qualified.
    pub abc: AbcTriple,
    /// Grid points that entered the sup / inf.
    pub points_used: usize,
    pub b_max: Option<f64>,
    pub c_min: Option<f64>,
    pub a_final: Option<f64>,
    /// `max_j Σ_k ‖Δφ_k(t_j)‖²`.
    pub max_delta_norm_sq: f64,
}

impl NumericEstimate {
    pub fn first_order() -> Self {
        Self { abc: AbcTriple::default(), points_used: 0, b_max: None, c_min: None, a_final: None, max_delta_norm_sq: 0.0 }
    }
}

fn generator_rhs(h: &dyn Hamiltonian, state: &StateVector, eps: f64, t: f64, hbar: f64) -> StateVector {
    h.apply(state, eps, t).scaled(C64::new(0.0, -1.0 / hbar))
}

/// `A` from the final-time remainder, `B = sup_j B_j`, `C = inf_j C_j`.
pub fn estimate_numeric(
    snap: &IterationSnapshot<'_>,
    functional: &dyn FinalTimeFunctional,
    targets: &Targets,
    h: &dyn Hamiltonian,
    cost: Option<&RunningCost>,
) -> Result<NumericEstimate> {
    let grid = snap.grid;
    let n = grid.n_steps();
    let hbar = snap.hbar;
    let cost = cost.filter(|c| c.is_active());
    let mut b_max: Option<f64> = None;
    let mut c_min: Option<f64> = None;
    let mut used = 0;
    let mut max_delta: f64 = 0.0;

    for j in 0..=n {
        let old = snap.old_forward.at(j);
        let new = snap.new_forward.at(j);
        let delta = new.difference(old);
        let den = delta.total_norm_sq();
        max_delta = max_delta.max(den);
        if den < DELTA_FLOOR {
            continue;
        }
        used += 1;
        let t = grid.point(j);
        let eps = snap.old_field[j.min(n - 1)];
        let chi = snap.costates.at(j);
        let mut b_num = 0.0;
        let mut c_num = 0.0;
        for k in 0..old.len() {
            let dphi = delta.get(k);
            let df = if h.flags().linear_in_state {
                // f(φ+Δφ) − f(φ) = f(Δφ), without cancellation
                generator_rhs(h, dphi, eps, t, hbar)
            } else {
                generator_rhs(h, new.get(k), eps, t, hbar).sub(&generator_rhs(h, old.get(k), eps, t, hbar))
            };
            b_num += 2.0 * dphi.inner(&df).re;
            let mut chi_dot = generator_rhs_adjoint(h, old.get(k), chi.get(k), eps, t, hbar);
            if let Some(extra) = crate::dynamics::costate_source(k, j, snap.old_forward, chi, eps, grid, h, cost, hbar) {
                chi_dot.axpy(C64::new(1.0, 0.0), &extra);
            }
            c_num += 2.0 * chi_dot.inner(dphi).re + 2.0 * chi.get(k).inner(&df).re;
        }
        if let Some(cost) = cost {
            c_num -= cost.value_change(old, &delta, t);
        }
        let (bj, cj) = (b_num / den, c_num / den);
        b_max = Some(b_max.map_or(bj, |b| b.max(bj)));
        c_min = Some(c_min.map_or(cj, |c| c.min(cj)));
    }

    let old_t = snap.old_forward.last();
    let new_t = snap.new_forward.last();
    let delta_t = new_t.difference(old_t);
    let den_t = delta_t.total_norm_sq();
    let a_final = if den_t < DELTA_FLOOR {
        None
    } else {
        let chi_t = snap.costates.last();
        let linear: f64 = chi_t.iter().zip(delta_t.iter()).map(|(c, d)| 2.0 * c.inner(d).re).sum();
        let jump = functional.value(new_t, targets)? - functional.value(old_t, targets)?;
        Some((linear + jump) / den_t)
    };

    Ok(NumericEstimate {
        abc: AbcTriple { a: a_final.unwrap_or(0.0), b: b_max.unwrap_or(0.0), c: c_min.unwrap_or(0.0) },
        points_used: used,
        b_max,
        c_min,
        a_final,
        max_delta_norm_sq: max_delta,
    })
}

/// `−(i/ħ) H†(φ) χ`, the homogeneous part of the costate equation.
fn generator_rhs_adjoint(h: &dyn Hamiltonian, phi: &StateVector, chi: &StateVector, eps: f64, t: f64, hbar: f64) -> StateVector {
    let op = if h.flags().linear_in_state { h.operator(None, eps, t) } else { h.operator(Some(phi), eps, t) };
    op.adjoint().apply(chi).scaled(C64::new(0.0, -1.0 / hbar))
}

/// Outcome of the check `λ_a / S(t) > ½√N Σ_k‖χ_k‖ M̃₂ + N|σ| M̃₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBoundCheck {
    pub satisfied: Vec<bool>,
    /// Right-hand side per time sample.
    pub rhs: Vec<f64>,
    /// Smallest uniform `λ_a` satisfying the bound everywhere, with 10% headroom.
    pub minimal_lambda_a: f64,
}

impl FieldBoundCheck {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }
}

pub fn check_field_nonlinearity_bound(
    lambda_a: f64,
    shape: &[f64],
    sigma: &[f64],
    chi_norms: &[f64],
    h: &dyn Hamiltonian,
    n_states: usize,
    hbar: f64,
) -> Result<FieldBoundCheck> {
    if shape.len() != sigma.len() || shape.len() != chi_norms.len() {
        return Err(KrotovError::DimensionMismatch("shape, sigma and costate norms differ in length".into()));
    }
    let m2 = h.second_field_derivative_bound().require("second field derivative of the Hamiltonian")?;
    let n = n_states as f64;
    let rhs: Vec<f64> = sigma.iter().zip(chi_norms).map(|(s, c)| (0.5 * n.sqrt() * c * m2 + n * s.abs() * m2) / hbar).collect();
    let satisfied = shape.iter().zip(&rhs).map(|(&s, &r)| s == 0.0 || lambda_a / s > r).collect();
    let worst = shape.iter().zip(&rhs).map(|(s, r)| s * r).fold(0.0, f64::max);
    Ok(FieldBoundCheck { satisfied, rhs, minimal_lambda_a: 1.1 * worst })
}
