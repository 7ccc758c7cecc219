//! Single time steps of `dφ/dt = −(i/ħ) H φ + s(t)`.
//!
//! Hermitian generators use a Chebychev expansion on the Gershgorin interval
//! of the spectrum. The homogeneous part uses the Bessel-function
//! coefficients of `exp(−iαx)`; the source part uses Chebychev coefficients of
//! `φ₁(z) = (eᶻ − 1)/z` and `φ₂(z) = (eᶻ − 1 − z)/z²`, obtained by
//! Gauss–Chebychev quadrature. Non-Hermitian generators fall back to a dense
//! exponential of an augmented matrix.

use nalgebra::DMatrix;

use crate::error::{KrotovError, Result};
use crate::operator::DenseOperator;
use crate::state::StateVector;
use crate::C64;

/// How a source term is held over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceMode {
    /// Source frozen at the average of its end-point values.
    #[default]
    Constant,
    /// Source interpolated linearly between its end-point values.
    Linear,
}

/// Inhomogeneity of one step. `Linear` is `start` at the beginning of the
/// step and `end` at its end.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    None,
    Constant(&'a StateVector),
    Linear { start: &'a StateVector, end: &'a StateVector },
}

/// Which algorithm produced a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorPath {
    /// Generator is a multiple of the identity; evaluated in closed form.
    ScalarPhase,
    Chebychev {
        terms: usize,
    },
    DenseExponential,
}

#[derive(Debug, Clone)]
pub struct Propagated {
    pub state: StateVector,
    pub path: PropagatorPath,
}

#[derive(Debug, Clone, Copy)]
pub struct StepPropagator {
    pub hbar: f64,
    /// Coefficients below this magnitude (relative to the leading one)
    /// terminate the series.
    pub truncation: f64,
    /// Upper limit on series length; exceeding it is a
    /// [`KrotovError::PropagatorAccuracy`].
    pub max_terms: usize,
}

impl Default for StepPropagator {
    fn default() -> Self {
        Self { hbar: 1.0, truncation: 1e-17, max_terms: 20_000 }
    }
}

impl StepPropagator {
    pub fn with_hbar(hbar: f64) -> Self {
        Self { hbar, ..Self::default() }
    }

    /// Advance `state` by `dt` under the constant generator `h`.
    pub fn step(&self, h: &DenseOperator, dt: f64, state: &StateVector, source: Source<'_>) -> Result<Propagated> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(KrotovError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if h.dim() != state.dim() {
            return Err(KrotovError::DimensionMismatch(format!(
                "operator of dimension {} applied to state of dimension {}",
                h.dim(),
                state.dim()
            )));
        }
        if h.is_hermitian() {
            self.chebychev_step(h, dt, state, source)
        } else {
            self.dense_step(h, dt, state, source)
        }
    }

    /// Dense exponential of the augmented generator
    /// `[[Z, w₂, w₁], [0, 0, 1], [0, 0, 0]]`, `Z = −iH dt/ħ`, whose top-right
    /// column is `φ₁(Z) w₁ + φ₂(Z) w₂`.
    pub fn dense_step(&self, h: &DenseOperator, dt: f64, state: &StateVector, source: Source<'_>) -> Result<Propagated> {
        let m = h.dim();
        let z = h.matrix() * C64::new(0.0, -dt / self.hbar);
        let (w1, w2) = source_weights(source, dt, m);
        let mut aug = DMatrix::<C64>::zeros(m + 2, m + 2);
        aug.view_mut((0, 0), (m, m)).copy_from(&z);
        aug.view_mut((0, m), (m, 1)).copy_from(&w2);
        aug.view_mut((0, m + 1), (m, 1)).copy_from(&w1);
        aug[(m, m + 1)] = C64::new(1.0, 0.0);
        let e = aug.exp();
        let mut out = e.view((0, 0), (m, m)) * state.amplitudes();
        out += e.view((0, m + 1), (m, 1));
        if out.iter().any(|z| !z.is_finite()) {
            return Err(KrotovError::NonFinite { index: 0, what: "dense exponential".into() });
        }
        Ok(Propagated { state: StateVector::new(out), path: PropagatorPath::DenseExponential })
    }

    fn chebychev_step(&self, h: &DenseOperator, dt: f64, state: &StateVector, source: Source<'_>) -> Result<Propagated> {
        let (emin, emax) = h.gershgorin_interval();
        let center = 0.5 * (emin + emax);
        let half = 0.5 * (emax - emin);
        let scale = dt / self.hbar;

        if half == 0.0 {
            // h = center · 1
            let zc = C64::new(0.0, -center * scale);
            let mut out = state.scaled(zc.exp());
            let (w1, w2) = source_weights(source, dt, state.dim());
            out.axpy(phi1(zc), &StateVector::new(w1));
            out.axpy(phi2(zc), &StateVector::new(w2));
            return Ok(Propagated { state: out, path: PropagatorPath::ScalarPhase });
        }

        let alpha = half * scale;
        let needed = series_length(alpha);
        if needed > self.max_terms {
            return Err(KrotovError::PropagatorAccuracy { step: 0, alpha, terms: self.max_terms });
        }

        // Homogeneous part: e^{-i center dt/ħ} Σ (2-δ_n0) (-i)^n J_n(α) T_n(H̃).
        let bessel = bessel_j_sequence(alpha, needed);
        let phase = C64::new(0.0, -center * scale).exp();
        let mut coeffs: Vec<C64> = bessel
            .iter()
            .enumerate()
            .map(|(n, &j)| {
                let weight = if n == 0 { 1.0 } else { 2.0 };
                phase * minus_i_pow(n) * weight * j
            })
            .collect();
        truncate(&mut coeffs, self.truncation).ok_or(KrotovError::PropagatorAccuracy { step: 0, alpha, terms: needed })?;
        let mut terms = coeffs.len();
        let mut out = chebychev_sum(h, center, half, &coeffs, state);

        let (w1, w2) = source_weights(source, dt, state.dim());
        let sources = [(w1, 1u8), (w2, 2u8)];
        for (w, order) in sources {
            if w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let f = |x: f64| {
                let z = C64::new(0.0, -(center + half * x) * scale);
                if order == 1 {
                    phi1(z)
                } else {
                    phi2(z)
                }
            };
            let c = sampled_series(f, needed, self.truncation.max(SAMPLED_TRUNCATION)).ok_or(KrotovError::PropagatorAccuracy {
                step: 0,
                alpha,
                terms: 2 * needed,
            })?;
            terms = terms.max(c.len());
            let contrib = chebychev_sum(h, center, half, &c, &StateVector::new(w));
            out.axpy(C64::new(1.0, 0.0), &contrib);
        }
        Ok(Propagated { state: out, path: PropagatorPath::Chebychev { terms } })
    }
}

/// `(w₁, w₂)` with `w₁ = dt·s₀` and `w₂ = dt·(s₁ − s₀)`.
fn source_weights(source: Source<'_>, dt: f64, dim: usize) -> (nalgebra::DVector<C64>, nalgebra::DVector<C64>) {
    let zero = nalgebra::DVector::<C64>::zeros(dim);
    let dtc = C64::new(dt, 0.0);
    match source {
        Source::None => (zero.clone(), zero),
        Source::Constant(s) => (s.amplitudes() * dtc, zero),
        Source::Linear { start, end } => (start.amplitudes() * dtc, (end.amplitudes() - start.amplitudes()) * dtc),
    }
}

/// Series length covering `exp(−iαx)` on `[−1, 1]` with margin.
/// Relative cut for coefficients obtained by sampling, which plateau at
/// rounding noise instead of decaying further.
const SAMPLED_TRUNCATION: f64 = 1e-14;

fn series_length(alpha: f64) -> usize {
    (alpha + 10.0 * alpha.cbrt() + 30.0).ceil() as usize
}

fn minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// Drops the trailing coefficients that are below `tol` relative to the
/// largest one. `None` if the tail never decays, i.e. the series is not
/// converged within the computed length.
fn truncate(coeffs: &mut Vec<C64>, tol: f64) -> Option<()> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        coeffs.truncate(1);
        return Some(());
    }
    let last = coeffs.iter().rposition(|c| c.norm() > tol * scale)?;
    // require a decayed tail of a few terms after the cut
    if coeffs.len() - last < 4 {
        return None;
    }
    coeffs.truncate(last + 1);
    Some(())
}

/// `Σ c_n T_n(H̃) v` with `H̃ = (H − center)/half`.
fn chebychev_sum(h: &DenseOperator, center: f64, half: f64, coeffs: &[C64], v: &StateVector) -> StateVector {
    let apply_norm = |x: &StateVector| -> StateVector {
        let mut y = h.apply(x);
        y.axpy(C64::new(-center, 0.0), x);
        y.scaled(C64::new(1.0 / half, 0.0))
    };
    let mut out = v.scaled(coeffs[0]);
    if coeffs.len() == 1 {
        return out;
    }
    let mut prev = v.clone();
    let mut cur = apply_norm(v);
    out.axpy(coeffs[1], &cur);
    for &c in &coeffs[2..] {
        let mut next = apply_norm(&cur).scaled(C64::new(2.0, 0.0));
        next.axpy(C64::new(-1.0, 0.0), &prev);
        out.axpy(c, &next);
        prev = cur;
        cur = next;
    }
    out
}

/// Truncated Chebychev series of `f`, sampled on as few nodes as keep the
/// aliased upper half of the coefficients below `tol`.
fn sampled_series<F: Fn(f64) -> C64>(f: F, needed: usize, tol: f64) -> Option<Vec<C64>> {
    let max_nodes = (2 * needed).max(64);
    let mut nodes = 16;
    loop {
        let mut c = chebychev_coefficients(&f, nodes);
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let significant = c.iter().rposition(|z| z.norm() > tol * scale).unwrap_or(0);
        if significant < nodes / 2 {
            c.truncate(significant + 1);
            return Some(c);
        }
        if nodes >= max_nodes {
            return None;
        }
        nodes = (2 * nodes).min(max_nodes);
    }
}

/// Chebychev coefficients of `f` on `[−1, 1]` from `k` Gauss–Chebychev nodes.
fn chebychev_coefficients<F: Fn(f64) -> C64>(f: F, k: usize) -> Vec<C64> {
    // cos(n θ_j) with θ_j = π(2j+1)/(2k) only takes the values cos(π m/(2k))
    let period = 4 * k;
    let table: Vec<f64> = (0..period).map(|m| (std::f64::consts::PI * m as f64 / (2 * k) as f64).cos()).collect();
    let samples: Vec<C64> = (0..k).map(|j| f(table[2 * j + 1])).collect();
    (0..k)
        .map(|n| {
            let sum: C64 = samples.iter().enumerate().map(|(j, s)| s * table[(n * (2 * j + 1)) % period]).sum();
            let weight = if n == 0 { 1.0 } else { 2.0 };
            sum * (weight / k as f64)
        })
        .collect()
}

/// `J_0(α) … J_{n-1}(α)` by Miller's downward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(alpha: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut out = vec![0.0; n];
    if alpha == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = n.max(alpha.ceil() as usize);
    let mut start = top + ((160.0 * top as f64).sqrt() as usize) + 20;
    start += start % 2;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / alpha * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds J_{k-1}
        let idx = k - 1;
        if idx < n {
            out[idx] = j;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `φ₁(z) = (eᶻ − 1)/z`.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < 0.5 {
        // Σ z^k/(k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..30 {
            term *= z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `φ₂(z) = (eᶻ − 1 − z)/z²`.
pub fn phi2(z: C64) -> C64 {
    if z.norm() < 0.5 {
        // Σ z^k/(k+2)!
        let mut term = C64::new(0.5, 0.0);
        let mut sum = term;
        for k in 1..30 {
            term *= z / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn bessel_values() {
        // Reference values of J_n(x).
        let j = bessel_j_sequence(1.0, 4);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 12);
        assert!((j[0] - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((j[10] - 0.207_486_106_633_358_9).abs() < 1e-14);
        let j = bessel_j_sequence(1e-9, 3);
        assert!((j[0] - 1.0).abs() < 1e-15 && (j[1] - 5e-10).abs() < 1e-22);
    }

    #[test]
    fn phi_functions_are_continuous_across_series_switch() {
        for &r in &[0.499999, 0.500001] {
            let z = C64::new(0.0, -r);
            let exact1 = (z.exp() - 1.0) / z;
            let exact2 = (z.exp() - 1.0 - z) / (z * z);
            assert!((phi1(z) - exact1).norm() < 1e-14);
            assert!((phi2(z) - exact2).norm() < 1e-13);
        }
        assert_eq!(phi1(C64::new(0.0, 0.0)), C64::new(1.0, 0.0));
        assert_eq!(phi2(C64::new(0.0, 0.0)), C64::new(0.5, 0.0));
    }

    #[test]
    fn zero_generator_is_identity_and_source_integrates() {
        let p = StepPropagator::default();
        let h = DenseOperator::zeros(2);
        let psi = StateVector::from_vec(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.9)]);
        let out = p.step(&h, 0.7, &psi, Source::None).unwrap();
        assert_eq!(out.state, psi);
        assert_eq!(out.path, PropagatorPath::ScalarPhase);

        let s = StateVector::from_vec(vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)]);
        let out = p.step(&h, 0.7, &psi, Source::Constant(&s)).unwrap();
        let expected = psi.add(&s.scaled(C64::new(0.7, 0.0)));
        assert!((out.state.amplitudes() - expected.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn sigma_z_eigenstate_phase() {
        let p = StepPropagator::default();
        let h = pauli(3);
        let psi = StateVector::basis(2, 0);
        let out = p.step(&h, std::f64::consts::PI, &psi, Source::None).unwrap();
        assert!((out.state[0] - C64::new(-1.0, 0.0)).norm() < 1e-10);
        assert!(out.state[1].norm() < 1e-10);
    }

    #[test]
    fn chebychev_agrees_with_dense_fallback() {
        let p = StepPropagator::with_hbar(0.7);
        let h = pauli(1).add_scaled(0.4, &pauli(3)).add_scaled(-1.3, &pauli(2));
        let psi = StateVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let s0 = StateVector::from_vec(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0)]);
        let s1 = StateVector::from_vec(vec![C64::new(0.0, 0.4), C64::new(0.2, -0.1)]);
        for src in [Source::None, Source::Constant(&s0), Source::Linear { start: &s0, end: &s1 }] {
            let a = p.step(&h, 1.9, &psi, src).unwrap();
            let b = p.dense_step(&h, 1.9, &psi, src).unwrap();
            assert!(matches!(a.path, PropagatorPath::Chebychev { .. }));
            assert!((a.state.amplitudes() - b.state.amplitudes()).norm() < 1e-12);
        }
    }

    #[test]
    fn oversized_step_is_reported() {
        let p = StepPropagator { max_terms: 50, ..StepPropagator::default() };
        let h = pauli(3).scaled(100.0);
        let err = p.step(&h, 1.0, &StateVector::basis(2, 0), Source::None).unwrap_err();
        assert!(matches!(err, KrotovError::PropagatorAccuracy { .. }));
    }
}
