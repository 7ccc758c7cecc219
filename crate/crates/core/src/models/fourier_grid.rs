use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::FftPlanner;

use super::{ControlSettings, TlsTarget};
use crate::dynamics::{PolynomialControlHamiltonian, PropagationOptions};
use crate::engine::Problem;
use crate::error::{KrotovError, Result};
use crate::functionals::{FinalTimeFunctional, Targets};
use crate::operator::DenseOperator;
use crate::state::{StateSet, StateVector};
use crate::C64;

/// Vibrational wavepackets on up to three coupled potential surfaces,
/// represented on a uniform Fourier grid of `N_R` points.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    r: Vec<f64>,
    potentials: Vec<Vec<f64>>,
    mass: f64,
    mu: f64,
    hbar: f64,
    kinetic: DMatrix<C64>,
}

/// Build the grid model from sampled potentials `V_s(R_i)`.
pub fn make_fourier_grid(r: &[f64], potentials: Vec<Vec<f64>>, mass: f64, mu: f64, hbar: f64) -> Result<FourierGrid> {
    let n = r.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(KrotovError::InvalidArgument(format!("N_R must be a power of two, got {n}")));
    }
    if potentials.is_empty() || potentials.len() > 3 {
        return Err(KrotovError::InvalidArgument("one to three potential surfaces are supported".into()));
    }
    if potentials.iter().any(|v| v.len() != n || v.iter().any(|x| !x.is_finite())) {
        return Err(KrotovError::DimensionMismatch("every potential needs one finite value per grid point".into()));
    }
    if !(mass > 0.0 && hbar > 0.0) || !mu.is_finite() {
        return Err(KrotovError::InvalidArgument("mass and hbar must be positive, mu finite".into()));
    }
    let dx = r[1] - r[0];
    if !(dx.is_finite() && dx > 0.0) || r.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0)) {
        return Err(KrotovError::InvalidArgument("R grid must be uniform and increasing".into()));
    }
    let kinetic = kinetic_matrix(n, dx, mass, hbar);
    Ok(FourierGrid { r: r.to_vec(), potentials, mass, mu, hbar, kinetic })
}

/// `T = F⁻¹ diag(ħ²k²/2m) F`, built column by column with FFTs.
fn kinetic_matrix(n: usize, dx: f64, mass: f64, hbar: f64) -> DMatrix<C64> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    let energy: Vec<f64> = (0..n)
        .map(|m| {
            let idx = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = idx * dk;
            hbar * hbar * k * k / (2.0 * mass)
        })
        .collect();
    let mut t = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut col = vec![C64::new(0.0, 0.0); n];
        col[b] = C64::new(1.0, 0.0);
        fft.process(&mut col);
        for (c, e) in col.iter_mut().zip(&energy) {
            *c *= e / n as f64;
        }
        ifft.process(&mut col);
        for (a, c) in col.into_iter().enumerate() {
            t[(a, b)] = c;
        }
    }
    // k² is even in k, so T is real symmetric up to rounding
    let t = t.map(|z| C64::new(z.re, 0.0));
    (&t + t.transpose()) * C64::new(0.5, 0.0)
}

impl FourierGrid {
    /// Columns `R V1 [V2 V3]` as read from a potential file.
    pub fn from_columns(columns: &[Vec<f64>], mass: f64, mu: f64, hbar: f64) -> Result<Self> {
        let width = columns.first().map_or(0, Vec::len);
        if !(2..=4).contains(&width) {
            return Err(KrotovError::InvalidArgument("potential file needs columns R V1 [V2 V3]".into()));
        }
        let r: Vec<f64> = columns.iter().map(|row| row[0]).collect();
        let potentials = (1..width).map(|s| columns.iter().map(|row| row[s]).collect()).collect();
        make_fourier_grid(&r, potentials, mass, mu, hbar)
    }

    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    pub fn n_surfaces(&self) -> usize {
        self.potentials.len()
    }

    pub fn dim(&self) -> usize {
        self.n_r() * self.n_surfaces()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `T + V_s` on surface `s`.
    pub fn surface_hamiltonian(&self, s: usize) -> DMatrix<C64> {
        let mut h = self.kinetic.clone();
        for (i, v) in self.potentials[s].iter().enumerate() {
            h[(i, i)] += C64::new(*v, 0.0);
        }
        h
    }

    pub fn drift(&self) -> DenseOperator {
        let n = self.n_r();
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for s in 0..self.n_surfaces() {
            m.view_mut((s * n, s * n), (n, n)).copy_from(&self.surface_hamiltonian(s));
        }
        DenseOperator::hermitian(m).expect("block diagonal of Hermitian blocks")
    }

    /// `μ (|e₁⟩⟨e₂| + |e₂⟩⟨e₃| + h.c.) ⊗ 1`.
    pub fn coupling(&self) -> DenseOperator {
        let n = self.n_r();
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for s in 0..self.n_surfaces().saturating_sub(1) {
            for i in 0..n {
                m[(s * n + i, (s + 1) * n + i)] = C64::new(self.mu, 0.0);
                m[((s + 1) * n + i, s * n + i)] = C64::new(self.mu, 0.0);
            }
        }
        DenseOperator::hermitian(m).expect("symmetric real coupling")
    }

    pub fn hamiltonian(&self) -> Result<PolynomialControlHamiltonian> {
        PolynomialControlHamiltonian::linear(self.drift(), self.coupling())
    }

    /// Lowest `count` eigenpairs of surface `s`, embedded in the full space.
    pub fn eigenstates(&self, s: usize, count: usize) -> Result<(Vec<f64>, Vec<StateVector>)> {
        if s >= self.n_surfaces() || count > self.n_r() {
            return Err(KrotovError::IndexOutOfRange { index: s.max(count), dim: self.n_r() });
        }
        let eig = SymmetricEigen::new(self.surface_hamiltonian(s));
        let mut order: Vec<usize> = (0..self.n_r()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = self.n_r();
        let mut energies = Vec::with_capacity(count);
        let mut states = Vec::with_capacity(count);
        for &idx in order.iter().take(count) {
            energies.push(eig.eigenvalues[idx]);
            let mut v = nalgebra::DVector::zeros(self.dim());
            v.rows_mut(s * n, n).copy_from(&eig.eigenvectors.column(idx));
            states.push(StateVector::new(v));
        }
        Ok((energies, states))
    }

    /// Population of each surface.
    pub fn surface_populations(&self, state: &StateVector) -> Vec<f64> {
        let n = self.n_r();
        (0..self.n_surfaces()).map(|s| state.amplitudes().rows(s * n, n).norm_squared()).collect()
    }

    /// Transfer `v_initial → v_target` on the lowest surface, or a Hadamard
    /// gate on its two lowest levels.
    pub fn problem(
        &self,
        target: TlsTarget,
        levels: (usize, usize),
        functional: Arc<dyn FinalTimeFunctional>,
        settings: &ControlSettings,
    ) -> Result<Problem> {
        let count = levels.0.max(levels.1) + 1;
        let (_, eig) = self.eigenstates(0, count.max(2))?;
        let (initial, targets) = match target {
            TlsTarget::StateToState => {
                (StateSet::new(vec![eig[levels.0].clone()])?, Targets::from_states(StateSet::new(vec![eig[levels.1].clone()])?))
            }
            TlsTarget::Hadamard => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let plus = eig[0].add(&eig[1]).scaled(C64::new(s, 0.0));
                let minus = eig[0].sub(&eig[1]).scaled(C64::new(s, 0.0));
                (StateSet::new(vec![eig[0].clone(), eig[1].clone()])?, Targets::from_states(StateSet::new(vec![plus, minus])?))
            }
        };
        let grid = settings.grid()?;
        let problem = Problem {
            hamiltonian: Arc::new(self.hamiltonian()?),
            initial,
            targets,
            functional,
            cost: None,
            guess: settings.guess(&grid)?,
            grid,
            propagation: PropagationOptions::with_hbar(self.hbar),
        };
        problem.validate()?;
        Ok(problem)
    }
}
