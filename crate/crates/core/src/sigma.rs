//! The second-order weight `σ(t)` and its parameters.

/// How the parameters of `σ(t)` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// `σ ≡ 0`, first-order update.
    #[default]
    Off,
    /// User-supplied `Ā`, `B̄`, `C̄`.
    Fixed,
    /// Worst-case bounds from the functional, Hamiltonian and cost.
    Analytic,
    /// Per-iteration estimates from the previous iteration.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaParams {
    pub a_bar: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub eps_c: f64,
    pub mode: SigmaMode,
}

impl Default for SigmaParams {
    fn default() -> Self {
        Self::off()
    }
}

impl SigmaParams {
    pub fn off() -> Self {
        Self { a_bar: 0.0, b_bar: 0.0, c_bar: 0.0, eps_a: 0.0, eps_b: 0.0, eps_c: 0.0, mode: SigmaMode::Off }
    }

    pub fn fixed(a_bar: f64, b_bar: f64, c_bar: f64) -> Self {
        Self { a_bar, b_bar, c_bar, mode: SigmaMode::Fixed, ..Self::off() }
    }

    pub fn analytic(eps_a: f64, eps_b: f64, eps_c: f64) -> Self {
        Self { eps_a, eps_b, eps_c, mode: SigmaMode::Analytic, ..Self::off() }
    }

    pub fn numeric(eps_a: f64, eps_b: f64, eps_c: f64) -> Self {
        Self { eps_a, eps_b, eps_c, mode: SigmaMode::Numeric, ..Self::off() }
    }

    /// Replace `Ā, B̄, C̄` by the barred form of `(A, B, C)`.
    pub fn with_estimates(self, a: f64, b: f64, c: f64) -> Self {
        let (a_bar, b_bar, c_bar) = bar_params(a, b, c, self.eps_a, self.eps_b, self.eps_c);
        Self { a_bar, b_bar, c_bar, ..self }
    }

    pub fn eval(&self, t: f64, t_final: f64) -> f64 {
        if self.mode == SigmaMode::Off {
            return 0.0;
        }
        sigma_eval(t, self.a_bar, self.b_bar, self.c_bar, t_final)
    }
}

/// `σ(t) = e^{B̄(T−t)}(C̄/B̄ − Ā) − C̄/B̄`, or `C̄(T−t) − Ā` for `B̄ = 0`.
pub fn sigma_eval(t: f64, a_bar: f64, b_bar: f64, c_bar: f64, t_final: f64) -> f64 {
    let tau = t_final - t;
    if b_bar == 0.0 {
        return c_bar * tau - a_bar;
    }
    // same expression, rearranged so small B̄ does not cancel
    let x = b_bar * tau;
    c_bar * tau * exprel(x) - a_bar * x.exp()
}

/// `(eˣ − 1)/x`, continuous at zero.
fn exprel(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `Ā = max(ε_A, 2A + ε_A)`, `B̄ = 2B + ε_B`, `C̄ = min(−ε_C, 2C − ε_C)`.
pub fn bar_params(a: f64, b: f64, c: f64, eps_a: f64, eps_b: f64, eps_c: f64) -> (f64, f64, f64) {
    (eps_a.max(2.0 * a + eps_a), 2.0 * b + eps_b, (-eps_c).min(2.0 * c - eps_c))
}
