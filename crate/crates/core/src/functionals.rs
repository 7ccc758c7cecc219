//! Final-time functionals `J_T` built on the overlap `τ = Σ_k ⟨ψ_k|φ_k(T)⟩`
//! with target states `ψ_k = O|k⟩`.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{KrotovError, Result};
use crate::operator::DenseOperator;
use crate::state::{StateSet, StateVector};
use crate::C64;

/// Target states `ψ_k`, one per propagated state.
#[derive(Debug, Clone)]
pub struct Targets {
    states: StateSet,
}

impl Targets {
    /// `ψ_k = O|k⟩` for the basis indices of the optimized subspace.
    pub fn from_gate(gate: &DenseOperator, indices: &[usize]) -> Result<Self> {
        let basis = crate::state::orthonormal_basis(gate.dim(), indices)?;
        let states = basis.iter().map(|k| gate.apply(k)).collect();
        Ok(Self { states: StateSet::new(states)? })
    }

    pub fn from_states(states: StateSet) -> Self {
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.dim()
    }

    pub fn states(&self) -> &StateSet {
        &self.states
    }

    pub fn get(&self, k: usize) -> &StateVector {
        self.states.get(k)
    }

    fn check(&self, states: &StateSet) -> Result<()> {
        if states.len() != self.len() || states.dim() != self.dim() {
            return Err(KrotovError::DimensionMismatch(format!(
                "{} states of dimension {} against {} targets of dimension {}",
                states.len(),
                states.dim(),
                self.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `τ = Σ_k ⟨ψ_k|φ_k⟩`.
    pub fn tau(&self, states: &StateSet) -> Result<C64> {
        self.check(states)?;
        Ok(self.states.iter().zip(states.iter()).map(|(psi, phi)| psi.inner(phi)).sum())
    }

    /// `|⟨ψ_k|φ_k⟩|²` per state.
    pub fn populations(&self, states: &StateSet) -> Result<Vec<f64>> {
        self.check(states)?;
        Ok(self.states.iter().zip(states.iter()).map(|(psi, phi)| psi.inner(phi).norm_sqr()).collect())
    }

    fn scaled_targets(&self, factor: C64) -> StateSet {
        StateSet::new(self.states.iter().map(|psi| psi.scaled(factor)).collect()).expect("targets are nonempty")
    }
}

pub trait FinalTimeFunctional: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn lambda0(&self) -> f64;

    fn value(&self, states: &StateSet, targets: &Targets) -> Result<f64>;

    /// `χ_k(T) = −∇_{⟨φ_k|} J_T`.
    fn costate_boundary(&self, states: &StateSet, targets: &Targets) -> Result<StateSet>;

    /// Supremum of the second-order derivatives of `J_T` over the state ball;
    /// non-positive for functionals that are concave in the states.
    fn curvature_bound(&self, targets: &Targets) -> f64;
}

/// `J_T = −(λ₀/N²)|τ|²`.
pub fn jt_sm(states: &StateSet, targets: &Targets, lambda0: f64) -> Result<f64> {
    let n = targets.len() as f64;
    Ok(-lambda0 / (n * n) * targets.tau(states)?.norm_sqr())
}

/// `χ_k(T) = (λ₀/N²) τ ψ_k`.
pub fn jt_sm_costate(states: &StateSet, targets: &Targets, lambda0: f64) -> Result<StateSet> {
    let n = targets.len() as f64;
    let tau = targets.tau(states)?;
    Ok(targets.scaled_targets(tau * (lambda0 / (n * n))))
}

/// `J_T = −(λ₀/N) Re τ`.
pub fn jt_re(states: &StateSet, targets: &Targets, lambda0: f64) -> Result<f64> {
    Ok(-lambda0 / targets.len() as f64 * targets.tau(states)?.re)
}

/// `χ_k(T) = (λ₀/2N) ψ_k`.
pub fn jt_re_costate(states: &StateSet, targets: &Targets, lambda0: f64) -> Result<StateSet> {
    targets.check(states)?;
    Ok(targets.scaled_targets(C64::new(lambda0 / (2.0 * targets.len() as f64), 0.0)))
}

/// `J_T = −λ₀ (|τ|²/N²)^p`.
pub fn jt_power(states: &StateSet, targets: &Targets, lambda0: f64, p: u32) -> Result<f64> {
    check_power(p)?;
    let n = targets.len() as f64;
    Ok(-lambda0 * (targets.tau(states)?.norm_sqr() / (n * n)).powi(p as i32))
}

/// `χ_k(T) = (λ₀ p/N²)(|τ|²/N²)^{p−1} τ ψ_k`.
pub fn jt_power_costate(states: &StateSet, targets: &Targets, lambda0: f64, p: u32) -> Result<StateSet> {
    check_power(p)?;
    let n2 = (targets.len() * targets.len()) as f64;
    let tau = targets.tau(states)?;
    let factor = lambda0 * p as f64 / n2 * (tau.norm_sqr() / n2).powi(p as i32 - 1);
    Ok(targets.scaled_targets(tau * factor))
}

fn check_power(p: u32) -> Result<()> {
    if p == 0 {
        return Err(KrotovError::InvalidArgument("power functional needs p >= 1".into()));
    }
    Ok(())
}

fn check_lambda0(lambda0: f64) -> Result<()> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(KrotovError::InvalidArgument(format!("lambda_0 must be positive, got {lambda0}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareModulus {
    pub lambda0: f64,
}

impl SquareModulus {
    pub fn new(lambda0: f64) -> Result<Self> {
        check_lambda0(lambda0)?;
        Ok(Self { lambda0 })
    }
}

impl FinalTimeFunctional for SquareModulus {
    fn name(&self) -> &'static str {
        "sm"
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn value(&self, states: &StateSet, targets: &Targets) -> Result<f64> {
        jt_sm(states, targets, self.lambda0)
    }

    fn costate_boundary(&self, states: &StateSet, targets: &Targets) -> Result<StateSet> {
        jt_sm_costate(states, targets, self.lambda0)
    }

    fn curvature_bound(&self, _targets: &Targets) -> f64 {
        // J_T is −λ₀/N² times a positive semidefinite form in the states
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPart {
    pub lambda0: f64,
}

impl RealPart {
    pub fn new(lambda0: f64) -> Result<Self> {
        check_lambda0(lambda0)?;
        Ok(Self { lambda0 })
    }
}

impl FinalTimeFunctional for RealPart {
    fn name(&self) -> &'static str {
        "re"
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn value(&self, states: &StateSet, targets: &Targets) -> Result<f64> {
        jt_re(states, targets, self.lambda0)
    }

    fn costate_boundary(&self, states: &StateSet, targets: &Targets) -> Result<StateSet> {
        jt_re_costate(states, targets, self.lambda0)
    }

    fn curvature_bound(&self, _targets: &Targets) -> f64 {
        0.0
    }
}

/// `J_T = −λ₀ (|τ|²/N²)^p`, a polynomial of degree `2p` in the states.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFunctional {
    pub lambda0: f64,
    pub p: u32,
    pub seed: u64,
    pub samples: usize,
    pub curvature_override: Option<f64>,
}

impl PowerFunctional {
    pub fn new(lambda0: f64, p: u32) -> Result<Self> {
        check_lambda0(lambda0)?;
        check_power(p)?;
        Ok(Self { lambda0, p, seed: 0, samples: 2000, curvature_override: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_curvature_override(mut self, bound: f64) -> Self {
        self.curvature_override = Some(bound);
        self
    }

    /// Largest sampled `|∂_a ∂_b J_T|` (unscaled).
    pub fn sampled_curvature(&self, targets: &Targets) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let sampler = CurvatureSampler::new(targets, self.lambda0, self.p);
        let mut best: f64 = 0.0;
        for i in 0..self.samples {
            let point = sample_point(&mut rng, targets, i % 2 == 1);
            best = best.max(sampler.max_second_difference(&point));
        }
        best
    }
}

impl FinalTimeFunctional for PowerFunctional {
    fn name(&self) -> &'static str {
        "power"
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn value(&self, states: &StateSet, targets: &Targets) -> Result<f64> {
        jt_power(states, targets, self.lambda0, self.p)
    }

    fn costate_boundary(&self, states: &StateSet, targets: &Targets) -> Result<StateSet> {
        jt_power_costate(states, targets, self.lambda0, self.p)
    }

    fn curvature_bound(&self, targets: &Targets) -> f64 {
        if let Some(bound) = self.curvature_override {
            return bound;
        }
        1.5 * self.sampled_curvature(targets)
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    let v = StateVector::from_vec((0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect());
    let n = v.norm();
    v.scaled(C64::new(1.0 / n, 0.0))
}

/// A point `φ + c(φ' − φ)` of the state ball; `near_target` pulls `φ'` to
/// the targets, where the overlap and hence the curvature is largest.
fn sample_point(rng: &mut ChaCha8Rng, targets: &Targets, near_target: bool) -> Vec<C64> {
    let dim = targets.dim();
    let c: f64 = rng.random();
    let gamma: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let noise: f64 = 0.3 * rng.random::<f64>();
    let mut point = Vec::with_capacity(targets.len() * dim);
    for psi in targets.states().iter() {
        let phi = random_state(rng, dim);
        let other = if near_target {
            let mut v = psi.scaled(C64::from_polar(1.0, gamma));
            v.axpy(C64::new(noise, 0.0), &random_state(rng, dim));
            let n = v.norm();
            v.scaled(C64::new(1.0 / n, 0.0))
        } else {
            random_state(rng, dim)
        };
        let mixed = phi.add(&other.sub(&phi).scaled(C64::new(c, 0.0)));
        point.extend(mixed.amplitudes().iter().copied());
    }
    point
}

/// Second differences of `J_T` in the independent coordinates `(φ, φ̄)`.
///
/// Treating kets and bras as independent, `J_T = −λ₀(τ τ̄/N²)^p` is a
/// polynomial in `τ = Σ ψ̄·φ` and `τ̄ = Σ ψ·φ̄`, so each coordinate shift only
/// moves `τ` or `τ̄`.
struct CurvatureSampler {
    /// `∂τ/∂φ_a` for the ket coordinates, `∂τ̄/∂φ̄_a` for the bra coordinates.
    slopes: Vec<C64>,
    lambda0: f64,
    p: i32,
    n2: f64,
    h: f64,
}

impl CurvatureSampler {
    fn new(targets: &Targets, lambda0: f64, p: u32) -> Self {
        let slopes = targets.states().iter().flat_map(|psi| psi.amplitudes().iter().map(|z| z.conj()).collect::<Vec<_>>()).collect();
        let n = targets.len() as f64;
        Self { slopes, lambda0, p: p as i32, n2: n * n, h: 1e-4 }
    }

    fn eval(&self, tau: C64, tau_bar: C64) -> C64 {
        -self.lambda0 * (tau * tau_bar / self.n2).powi(self.p)
    }

    /// Shift of `(τ, τ̄)` from moving coordinate `a` by `h`.
    fn shift(&self, a: usize, h: f64) -> (C64, C64) {
        let m = self.slopes.len();
        if a < m {
            (self.slopes[a] * h, C64::new(0.0, 0.0))
        } else {
            (C64::new(0.0, 0.0), self.slopes[a - m].conj() * h)
        }
    }

    fn max_second_difference(&self, point: &[C64]) -> f64 {
        let tau: C64 = self.slopes.iter().zip(point).map(|(s, x)| s * x).sum();
        let tau_bar = tau.conj();
        let h = self.h;
        let coords = 2 * self.slopes.len();
        let f = |d1: (C64, C64), d2: (C64, C64)| self.eval(tau + d1.0 + d2.0, tau_bar + d1.1 + d2.1);
        let zero = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut best: f64 = 0.0;
        for a in 0..coords {
            let (pa, ma) = (self.shift(a, h), self.shift(a, -h));
            let diag = (f(pa, zero) - f(zero, zero) * 2.0 + f(ma, zero)) / (h * h);
            best = best.max(diag.norm());
            for b in (a + 1)..coords {
                let (pb, mb) = (self.shift(b, h), self.shift(b, -h));
                let mixed = (f(pa, pb) - f(pa, mb) - f(ma, pb) + f(ma, mb)) / (4.0 * h * h);
                best = best.max(mixed.norm());
            }
        }
        best
    }
}
