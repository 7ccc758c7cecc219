use nalgebra::{DMatrix, DVector};

use crate::error::{KrotovError, Result};
use crate::state::StateVector;
use crate::C64;

/// Entry-wise tolerance below which a matrix is treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex `M × M` operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    hermitian: bool,
    /// Copy of a purely real matrix; real products are much faster.
    real: Option<DMatrix<f64>>,
}

impl DenseOperator {
    fn build(matrix: DMatrix<C64>, hermitian: bool) -> Self {
        let real = matrix.iter().all(|z| z.im == 0.0).then(|| matrix.map(|z| z.re));
        Self { matrix, hermitian, real }
    }

    /// Wraps a square matrix, detecting Hermiticity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(KrotovError::DimensionMismatch(format!("operator must be square, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        let hermitian = hermiticity_defect(&matrix) < HERMITIAN_TOL;
        Ok(Self::build(matrix, hermitian))
    }

    /// Wraps a matrix that must be Hermitian.
    pub fn hermitian(matrix: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(matrix)?;
        if !op.hermitian {
            return Err(KrotovError::InvalidArgument(format!(
                "operator is not Hermitian (max |H - H†| = {:.3e})",
                hermiticity_defect(&op.matrix)
            )));
        }
        Ok(op)
    }

    pub fn from_real(rows: usize, data: &[f64]) -> Result<Self> {
        let m = DMatrix::from_row_slice(rows, data.len() / rows.max(1), data).map(|x| C64::new(x, 0.0));
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::build(DMatrix::zeros(dim, dim), true)
    }

    pub fn identity(dim: usize) -> Self {
        Self::build(DMatrix::identity(dim, dim), true)
    }

    /// Projector `Σ_i |i⟩⟨i|` onto a set of canonical basis vectors.
    pub fn projector(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        for &i in indices {
            if i >= dim {
                return Err(KrotovError::IndexOutOfRange { index: i, dim });
            }
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        Ok(Self::build(m, true))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector::new(self.apply_vector(state.amplitudes()))
    }

    fn apply_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.real {
            Some(re) => {
                let (x, y) = (re * v.map(|z| z.re), re * v.map(|z| z.im));
                x.zip_map(&y, C64::new)
            }
            None => &self.matrix * v,
        }
    }

    pub fn adjoint(&self) -> DenseOperator {
        Self::build(self.matrix.adjoint(), self.hermitian)
    }

    pub fn scaled(&self, factor: f64) -> DenseOperator {
        Self::build(&self.matrix * C64::new(factor, 0.0), self.hermitian)
    }

    /// `self + factor * other`; Hermiticity is re-detected.
    pub fn add_scaled(&self, factor: f64, other: &DenseOperator) -> DenseOperator {
        let matrix = &self.matrix + &other.matrix * C64::new(factor, 0.0);
        let hermitian = if self.hermitian && other.hermitian { true } else { hermiticity_defect(&matrix) < HERMITIAN_TOL };
        Self::build(matrix, hermitian)
    }

    /// `⟨a|self|b⟩`.
    pub fn matrix_element(&self, a: &StateVector, b: &StateVector) -> C64 {
        a.amplitudes().dotc(&self.apply_vector(b.amplitudes()))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let matrix = self.matrix.kronecker(&other.matrix);
        Self::build(matrix, self.hermitian && other.hermitian)
    }

    /// Largest singular value, by power iteration on `A†A`.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        let g = DenseOperator::build(gram, true);
        g.extreme_eigenvalues().1.max(0.0).sqrt()
    }

    /// Largest `|Im λ|` over the eigenvalues, bounded by the spectral norm of
    /// the anti-Hermitian part `(H − H†)/2i`. Zero for Hermitian operators.
    pub fn imaginary_eigenvalue_bound(&self) -> f64 {
        if self.hermitian {
            return 0.0;
        }
        let anti = (&self.matrix - self.matrix.adjoint()) * C64::new(0.0, -0.5);
        DenseOperator::build(anti, true).spectral_norm()
    }

    /// `(λ_min, λ_max)` of a Hermitian operator by shifted power iteration on
    /// `D + s` and `−D + s`, with the shift `s` a Gershgorin bound.
    pub fn extreme_eigenvalues(&self) -> (f64, f64) {
        let n = self.dim();
        if n == 0 {
            return (0.0, 0.0);
        }
        let shift = gershgorin_radius(&self.matrix);
        if shift == 0.0 {
            return (0.0, 0.0);
        }
        let top = dominant_eigenvalue(&self.matrix, shift) - shift;
        let neg = -&self.matrix;
        let bottom = -(dominant_eigenvalue(&neg, shift) - shift);
        (bottom, top)
    }

    /// Eigenvalue of largest magnitude (signed) of a Hermitian operator.
    pub fn max_abs_eigenvalue(&self) -> f64 {
        let (lo, hi) = self.extreme_eigenvalues();
        if hi.abs() >= lo.abs() {
            hi
        } else {
            lo
        }
    }

    /// Real Gershgorin interval `[E_min, E_max]` containing the spectrum of a
    /// Hermitian operator.
    pub fn gershgorin_interval(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let center = self.matrix[(i, i)].re;
            let radius: f64 = (0..self.dim()).filter(|&j| j != i).map(|j| self.matrix[(i, j)].norm()).sum();
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn gershgorin_radius(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Dominant eigenvalue of the positive semi-definite `m + shift·1`, returned
/// as a Rayleigh quotient.
fn dominant_eigenvalue(m: &DMatrix<C64>, shift: f64) -> f64 {
    let n = m.nrows();
    let shifted = m + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0);
    // Deterministic start vector with generic overlap on every eigenvector.
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.1 * (i as f64).sin(), 0.05 * i as f64));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let w = &shifted * &v;
        let next = v.dotc(&w).re;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / C64::new(norm, 0.0);
        if (next - lambda).abs() <= 1e-15 * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Pauli matrices `σ_0 = 1, σ_x, σ_y, σ_z`.
pub fn pauli(index: usize) -> DenseOperator {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let data = match index {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index must be 0..=3"),
    };
    DenseOperator::build(DMatrix::from_row_slice(2, 2, &data), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_hermiticity() {
        assert!(pauli(2).is_hermitian());
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(!DenseOperator::new(m.clone()).unwrap().is_hermitian());
        assert!(DenseOperator::hermitian(m).is_err());
    }

    #[test]
    fn real_and_complex_products_agree() {
        let real = DenseOperator::from_real(3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.5, -1.0, 0.25, 2.0]).unwrap();
        assert!(real.real.is_some() && pauli(2).real.is_none());
        let v = StateVector::from_vec(vec![C64::new(0.3, -1.0), C64::new(2.0, 0.5), C64::new(-0.7, 0.1)]);
        let direct = real.matrix() * v.amplitudes();
        assert!((real.apply(&v).amplitudes() - direct).norm() < 1e-15);
        let shifted = real.add_scaled(0.5, &DenseOperator::identity(3));
        assert!(shifted.real.is_some());
    }

    #[test]
    fn projector_spectrum() {
        let p = DenseOperator::projector(3, &[2]).unwrap();
        let (lo, hi) = p.extreme_eigenvalues();
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!((p.max_abs_eigenvalue() - 1.0).abs() < 1e-12);
        assert!((p.spectral_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn indefinite_spectrum() {
        let d = DenseOperator::from_real(3, &[1.0, 0.5, 0.0, 0.5, -2.0, 0.3, 0.0, 0.3, 0.5]).unwrap();
        let eig = nalgebra::SymmetricEigen::new(d.matrix().clone());
        let exact_lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let exact_hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = d.extreme_eigenvalues();
        assert!((lo - exact_lo).abs() < 1e-9, "{lo} vs {exact_lo}");
        assert!((hi - exact_hi).abs() < 1e-9, "{hi} vs {exact_hi}");
        assert!((d.max_abs_eigenvalue() - exact_lo).abs() < 1e-9);
    }

    #[test]
    fn imaginary_bound_of_damped_operator() {
        let mut m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, -0.25), C64::new(2.0, -0.5)]));
        m[(0, 1)] = C64::new(0.0, 0.0);
        let op = DenseOperator::new(m).unwrap();
        assert!((op.imaginary_eigenvalue_bound() - 0.5).abs() < 1e-10);
    }
}
