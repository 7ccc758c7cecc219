//! The optimization loop: backward costates, sequential forward update of the
//! field, evaluation of `J`, monotonicity bookkeeping and records.

use std::io::Write;
use std::sync::Arc;

use crate::dynamics::{forward_step, propagate_costate_backward, propagate_forward, Hamiltonian, PropagationOptions};
use crate::error::{KrotovError, Result};
use crate::estimate::{estimate_analytic, estimate_numeric, AbcTriple, IterationSnapshot, NumericEstimate};
use crate::field::ControlField;
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::grid::TimeGrid;
use crate::running_cost::{g_a_integral_against, g_b_integral, RunningCost};
use crate::sigma::{SigmaMode, SigmaParams};
use crate::state::{StateSet, Trajectory};
use crate::C64;

/// Relative tolerance separating a true increase of `J` from round-off.
pub const MONOTONIC_TOL: f64 = 1e-12;

/// Everything that defines one control problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub hamiltonian: Arc<dyn Hamiltonian>,
    pub initial: StateSet,
    pub targets: Targets,
    pub functional: Arc<dyn FinalTimeFunctional>,
    pub cost: Option<RunningCost>,
    pub grid: TimeGrid,
    pub guess: ControlField,
    pub propagation: PropagationOptions,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        let dim = self.hamiltonian.dim();
        if self.initial.dim() != dim || self.targets.dim() != dim {
            return Err(KrotovError::DimensionMismatch(format!(
                "Hamiltonian dimension {dim}, initial states {}, targets {}",
                self.initial.dim(),
                self.targets.dim()
            )));
        }
        if self.initial.len() != self.targets.len() {
            return Err(KrotovError::DimensionMismatch(format!(
                "{} initial states but {} targets",
                self.initial.len(),
                self.targets.len()
            )));
        }
        self.guess.check_grid(&self.grid)?;
        if !(self.propagation.hbar().is_finite() && self.propagation.hbar() > 0.0) {
            return Err(KrotovError::InvalidArgument("hbar must be positive".into()));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn hbar(&self) -> f64 {
        self.propagation.hbar()
    }

    pub fn cost(&self) -> Option<&RunningCost> {
        self.cost.as_ref()
    }

    pub fn lambda_b(&self) -> f64 {
        self.cost.as_ref().map_or(0.0, RunningCost::lambda_b)
    }

    pub fn forward(&self, field: &[f64]) -> Result<Trajectory> {
        propagate_forward(&self.initial, field, &self.grid, &*self.hamiltonian, &self.propagation)
    }

    /// Analytic `(A, B, C)` for the costates of a given field.
    pub fn analytic_estimate(&self, costates: Option<&Trajectory>) -> Result<AbcTriple> {
        estimate_analytic(
            self.functional.curvature_bound(&self.targets),
            &*self.hamiltonian,
            self.cost(),
            costates,
            self.n_states(),
            self.hbar(),
        )
    }
}

/// What `ε_ref` is in iteration `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    /// `ε_ref = ε^{(i)}`: `g_a` penalizes the change per iteration.
    #[default]
    PreviousIteration,
    /// The reference stored in the guess field throughout. `J_T` then keeps a
    /// finite gradient at the optimum and the O(dt) error of the sequential
    /// update can show up as tiny increases of `J` near convergence.
    Fixed,
}

#[derive(Debug, Clone)]
pub struct OptimizationOptions {
    pub max_iter: usize,
    /// Stop once `|ΔJ| < j_tol`.
    pub j_tol: f64,
    pub sigma: SigmaParams,
    pub monotonic_guard: bool,
    pub reference: ReferenceMode,
    /// Re-evaluations of `∂H/∂ε` at the candidate field for nonlinear-in-field `H`.
    pub fixed_point_sweeps: usize,
    /// `(A, B, C)` for the first numeric-mode iteration; first order if `None`.
    pub numeric_seed: Option<AbcTriple>,
    /// Lower bound for `ε_A`, `ε_C` after a failed retry in numeric mode.
    pub escalation_floor: f64,
}

impl Default for OptimizationOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            j_tol: 0.0,
            sigma: SigmaParams::off(),
            monotonic_guard: true,
            reference: ReferenceMode::PreviousIteration,
            fixed_point_sweeps: 1,
            numeric_seed: None,
            escalation_floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub j_t: f64,
    pub int_ga: f64,
    pub int_gb: f64,
    /// `None` where the normalization has a zero denominator.
    pub j_norm: Option<f64>,
    /// `None` for the guess-field evaluation.
    pub delta_j: Option<f64>,
    pub monotonic: bool,
    pub a_bar: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    pub retries: usize,
    /// History-based estimate from this iteration's step.
    pub numeric: Option<NumericEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    Converged,
    /// `J` became non-finite; the record stops at `last_good`.
    Diverged {
        last_good: usize,
    },
}

#[derive(Debug, Clone)]
pub struct OptimizationRecord {
    pub iterations: Vec<IterationRecord>,
    pub final_field: ControlField,
    pub final_states: StateSet,
    pub termination: Termination,
    pub lambda0: f64,
    pub lambda_b: f64,
}

impl OptimizationRecord {
    /// Completed iterations, not counting the guess-field evaluation.
    pub fn completed(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("record holds the guess evaluation")
    }

    pub fn violations(&self) -> usize {
        self.iterations.iter().filter(|r| !r.monotonic).count()
    }

    pub fn is_monotonic(&self) -> bool {
        self.violations() == 0
    }

    pub const CSV_HEADER: &'static str = "iter,J,J_T,int_ga,int_gb,J_norm,delta_J,monotonic,A_bar,B_bar,C_bar,retries";

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let num = |x: f64| format!("{x:.16e}");
        let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), num);
        for r in &self.iterations {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                num(r.j),
                num(r.j_t),
                num(r.int_ga),
                num(r.int_gb),
                opt(r.j_norm),
                opt(r.delta_j),
                r.monotonic,
                num(r.a_bar),
                num(r.b_bar),
                num(r.c_bar),
                r.retries
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Normalized functional: `J/(λ_b − λ₀)` for `λ_b ≤ 0`,
/// `1 − (J − λ₀)/(λ_b − λ₀)` for `λ_b > 0`.
pub fn j_norm(j: f64, lambda0: f64, lambda_b: f64) -> Result<f64> {
    let den = lambda_b - lambda0;
    if den == 0.0 {
        return Err(KrotovError::ZeroDenominator);
    }
    Ok(if lambda_b <= 0.0 { j / den } else { 1.0 - (j - lambda0) / den })
}

/// New field sample at interval `j` from the overlaps at `t_j`:
/// `ε_ref + (S/λ_a)(1/ħ) Im{Σ⟨χ_k|∂H/∂ε|φ_k⟩ + ½σ Σ⟨Δφ_k|∂H/∂ε|φ_k⟩}`.
///
/// For a nonlinear-in-field `H`, `∂H/∂ε` is first taken at the old sample
/// and then re-evaluated `sweeps` times at the candidate.
#[allow(clippy::too_many_arguments)]
pub fn update_field_step(
    j: usize,
    chi: &StateSet,
    phi_new: &StateSet,
    delta: &StateSet,
    sigma_j: f64,
    field: &ControlField,
    h: &dyn Hamiltonian,
    t: f64,
    hbar: f64,
    sweeps: usize,
) -> Result<f64> {
    let weight = field.shape()[j] / field.lambda_a() / hbar;
    if !weight.is_finite() {
        return Err(KrotovError::NonFinite { index: j, what: "S/lambda_a".into() });
    }
    let reference = field.reference()[j];
    if weight == 0.0 {
        return Ok(reference);
    }
    let candidate = |eps: f64| -> f64 {
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..phi_new.len() {
            let d = h.apply_field_derivative(phi_new.get(k), eps, t);
            sum += chi.get(k).inner(&d);
            if sigma_j != 0.0 {
                sum += 0.5 * sigma_j * delta.get(k).inner(&d);
            }
        }
        reference + weight * sum.im
    };
    let mut eps = candidate(field.values()[j]);
    if !h.flags().linear_in_field {
        for _ in 0..sweeps {
            eps = candidate(eps);
        }
    }
    if !eps.is_finite() {
        return Err(KrotovError::NonFinite { index: j, what: "updated field".into() });
    }
    Ok(eps)
}

/// Evaluated functional for a field and its forward trajectory.
#[derive(Debug, Clone, Copy)]
struct Evaluation {
    j: f64,
    j_t: f64,
    int_ga: f64,
    int_gb: f64,
}

fn evaluate(problem: &Problem, forward: &Trajectory, values: &[f64], reference: &[f64]) -> Result<Evaluation> {
    let j_t = problem.functional.value(forward.last(), &problem.targets)?;
    let int_ga = g_a_integral_against(values, reference, problem.guess.shape(), problem.guess.lambda_a(), &problem.grid)?;
    let int_gb = g_b_integral(forward, &problem.grid, problem.cost());
    Ok(Evaluation { j: j_t + int_ga + int_gb, j_t, int_ga, int_gb })
}

/// Result of one sweep before acceptance.
struct Step {
    values: Vec<f64>,
    forward: Trajectory,
    eval: Evaluation,
    numeric: NumericEstimate,
}

struct Sweep<'a> {
    problem: &'a Problem,
    options: &'a OptimizationOptions,
    values: &'a [f64],
    forward: &'a Trajectory,
    costates: &'a Trajectory,
    reference: &'a [f64],
}

impl Sweep<'_> {
    /// Sequential forward update under `σ` built from `params`.
    fn run(&self, params: &SigmaParams) -> Result<Step> {
        let p = self.problem;
        let grid = &p.grid;
        let h = &*p.hamiltonian;
        let hbar = p.hbar();
        let field = p.guess.with_values(self.values.to_vec(), self.reference.to_vec())?;
        let mut values = Vec::with_capacity(grid.n_steps());
        let mut sets = Vec::with_capacity(grid.n_points());
        sets.push(p.initial.clone());
        for j in 0..grid.n_steps() {
            let phi = &sets[j];
            let delta = phi.difference(self.forward.at(j));
            let sigma_j = params.eval(grid.point(j), grid.t_final());
            let eps = update_field_step(
                j,
                self.costates.at(j),
                phi,
                &delta,
                sigma_j,
                &field,
                h,
                grid.midpoint(j),
                hbar,
                self.options.fixed_point_sweeps,
            )?;
            let next = forward_step(phi, eps, j, grid, h, &p.propagation)?;
            values.push(eps);
            sets.push(next);
        }
        let forward = Trajectory::new(sets);
        let eval = evaluate(p, &forward, &values, self.reference)?;
        let snap = IterationSnapshot {
            grid,
            old_forward: self.forward,
            new_forward: &forward,
            costates: self.costates,
            old_field: self.values,
            hbar,
        };
        let numeric = estimate_numeric(&snap, &*p.functional, &p.targets, h, p.cost())?;
        Ok(Step { values, forward, eval, numeric })
    }
}

fn is_violation(delta_j: f64, j_prev: f64) -> bool {
    delta_j > MONOTONIC_TOL * (1.0 + j_prev.abs())
}

/// Run Krotov's method from the guess field of `problem`.
pub fn iterate(problem: &Problem, options: &OptimizationOptions) -> Result<OptimizationRecord> {
    problem.validate()?;
    let lambda0 = problem.functional.lambda0();
    let lambda_b = problem.lambda_b();
    let norm = |j: f64| j_norm(j, lambda0, lambda_b).ok();

    let mut values = problem.guess.values().to_vec();
    let mut forward = problem.forward(&values)?;
    // with a self-referencing guess g_a vanishes; a fixed reference may differ
    let fixed_reference = problem.guess.reference().to_vec();
    let guess_reference = match options.reference {
        ReferenceMode::PreviousIteration => values.clone(),
        ReferenceMode::Fixed => fixed_reference.clone(),
    };
    let eval = evaluate(problem, &forward, &values, &guess_reference)?;
    let mut iterations = vec![IterationRecord {
        iter: 0,
        j: eval.j,
        j_t: eval.j_t,
        int_ga: eval.int_ga,
        int_gb: eval.int_gb,
        j_norm: norm(eval.j),
        delta_j: None,
        monotonic: true,
        a_bar: 0.0,
        b_bar: 0.0,
        c_bar: 0.0,
        retries: 0,
        numeric: None,
    }];
    if !eval.j.is_finite() {
        return Err(KrotovError::NonFinite { index: 0, what: "functional of the guess field".into() });
    }

    let mut sigma = options.sigma;
    let curvature = match sigma.mode {
        SigmaMode::Analytic => Some(problem.functional.curvature_bound(&problem.targets)),
        _ => None,
    };
    let mut numeric_next = options.numeric_seed.unwrap_or_default();
    let mut termination = Termination::MaxIterations;

    for iter in 1..=options.max_iter {
        let j_prev = iterations.last().expect("nonempty").j;
        let chi_t = problem.functional.costate_boundary(forward.last(), &problem.targets)?;
        let costates = propagate_costate_backward(
            &chi_t,
            &forward,
            &values,
            &problem.grid,
            &*problem.hamiltonian,
            problem.cost(),
            &problem.propagation,
        )?;

        let params = match sigma.mode {
            SigmaMode::Off | SigmaMode::Fixed => sigma,
            SigmaMode::Analytic => {
                let abc = estimate_analytic(
                    curvature.unwrap_or(0.0),
                    &*problem.hamiltonian,
                    problem.cost(),
                    Some(&costates),
                    problem.n_states(),
                    problem.hbar(),
                )?;
                sigma.with_estimates(abc.a, abc.b, abc.c)
            }
            SigmaMode::Numeric => sigma.with_estimates(numeric_next.a, numeric_next.b, numeric_next.c),
        };
        let reference = match options.reference {
            ReferenceMode::PreviousIteration => values.clone(),
            ReferenceMode::Fixed => fixed_reference.clone(),
        };
        let sweep = Sweep { problem, options, values: &values, forward: &forward, costates: &costates, reference: &reference };

        let mut used = params;
        let mut retries = 0;
        let mut step = sweep.run(&params)?;
        let mut violated = step.eval.j.is_finite() && is_violation(step.eval.j - j_prev, j_prev);
        if violated && options.monotonic_guard && sigma.mode == SigmaMode::Numeric {
            // repeat with the estimate obtained during the failed step
            let abc = step.numeric.abc;
            used = sigma.with_estimates(abc.a, abc.b, abc.c);
            retries = 1;
            step = sweep.run(&used)?;
            violated = step.eval.j.is_finite() && is_violation(step.eval.j - j_prev, j_prev);
            if violated {
                sigma.eps_a = (2.0 * sigma.eps_a).max(options.escalation_floor);
                sigma.eps_c = (2.0 * sigma.eps_c).max(options.escalation_floor);
            }
        }
        if !step.eval.j.is_finite() {
            termination = Termination::Diverged { last_good: iter - 1 };
            break;
        }

        let delta_j = step.eval.j - j_prev;
        numeric_next = step.numeric.abc;
        iterations.push(IterationRecord {
            iter,
            j: step.eval.j,
            j_t: step.eval.j_t,
            int_ga: step.eval.int_ga,
            int_gb: step.eval.int_gb,
            j_norm: norm(step.eval.j),
            delta_j: Some(delta_j),
            monotonic: !violated,
            a_bar: if used.mode == SigmaMode::Off { 0.0 } else { used.a_bar },
            b_bar: if used.mode == SigmaMode::Off { 0.0 } else { used.b_bar },
            c_bar: if used.mode == SigmaMode::Off { 0.0 } else { used.c_bar },
            retries,
            numeric: Some(step.numeric),
        });
        values = step.values;
        forward = step.forward;
        if delta_j.abs() < options.j_tol {
            termination = Termination::Converged;
            break;
        }
    }

    let final_reference = match options.reference {
        ReferenceMode::PreviousIteration => values.clone(),
        ReferenceMode::Fixed => fixed_reference,
    };
    Ok(OptimizationRecord {
        final_field: problem.guess.with_values(values, final_reference)?,
        final_states: forward.last().clone(),
        iterations,
        termination,
        lambda0,
        lambda_b,
    })
}
