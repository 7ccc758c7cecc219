use std::ops::{Deref, DerefMut};

use nalgebra::DVector;

use crate::error::{KrotovError, Result};
use crate::C64;

/// A single state (or costate) vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Self {
        Self(DVector::from_vec(amplitudes))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    /// Canonical basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, factor: C64) -> StateVector {
        Self(&self.0 * factor)
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        Self(&self.0 - &other.0)
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        Self(&self.0 + &other.0)
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: C64, other: &StateVector) {
        self.0.axpy(factor, &other.0, C64::new(1.0, 0.0));
    }
}

impl Deref for StateVector {
    type Target = DVector<C64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<DVector<C64>> for StateVector {
    fn from(v: DVector<C64>) -> Self {
        Self(v)
    }
}

/// The `N` states `φ_1 … φ_N` (or costates) at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSet {
    states: Vec<StateVector>,
}

impl StateSet {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(KrotovError::InvalidArgument("a state set needs at least one state".into()));
        };
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(KrotovError::DimensionMismatch(format!("state of dimension {} in a set of dimension {dim}", bad.dim())));
        }
        Ok(Self { states })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { states: vec![StateVector::zeros(dim); n.max(1)] }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StateVector> {
        self.states.iter()
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn into_states(self) -> Vec<StateVector> {
        self.states
    }

    pub fn get(&self, k: usize) -> &StateVector {
        &self.states[k]
    }

    pub fn get_mut(&mut self, k: usize) -> &mut StateVector {
        &mut self.states[k]
    }

    /// Element-wise difference `self − other`.
    pub fn difference(&self, other: &StateSet) -> StateSet {
        StateSet { states: self.states.iter().zip(&other.states).map(|(a, b)| a.sub(b)).collect() }
    }

    /// `Σ_k ‖φ_k‖²`.
    pub fn total_norm_sq(&self) -> f64 {
        self.states.iter().map(StateVector::norm_sq).sum()
    }

    /// `Σ_k ‖φ_k‖`.
    pub fn sum_of_norms(&self) -> f64 {
        self.states.iter().map(StateVector::norm).sum()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

impl<'a> IntoIterator for &'a StateSet {
    type Item = &'a StateVector;
    type IntoIter = std::slice::Iter<'a, StateVector>;
    fn into_iter(self) -> Self::IntoIter {
        self.states.iter()
    }
}

/// Canonical unit vectors `{|k⟩}` at the given indices.
pub fn orthonormal_basis(dim: usize, indices: &[usize]) -> Result<StateSet> {
    if indices.is_empty() {
        return Err(KrotovError::InvalidArgument("no basis indices given".into()));
    }
    let mut seen = vec![false; dim];
    for &index in indices {
        if index >= dim {
            return Err(KrotovError::IndexOutOfRange { index, dim });
        }
        if std::mem::replace(&mut seen[index], true) {
            return Err(KrotovError::DuplicateIndex(index));
        }
    }
    StateSet::new(indices.iter().map(|&i| StateVector::basis(dim, i)).collect())
}

/// One [`StateSet`] per grid point; index 0 holds the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    sets: Vec<StateSet>,
}

impl Trajectory {
    pub fn new(sets: Vec<StateSet>) -> Self {
        Self { sets }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn at(&self, j: usize) -> &StateSet {
        &self.sets[j]
    }

    pub fn last(&self) -> &StateSet {
        self.sets.last().expect("empty trajectory")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StateSet> {
        self.sets.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_single_and_full() {
        let b = orthonormal_basis(2, &[0]).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.get(0).as_slice(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);

        let b = orthonormal_basis(4, &[0, 1, 2, 3]).unwrap();
        for k in 0..4 {
            for m in 0..4 {
                let expected = if k == m { 1.0 } else { 0.0 };
                assert_eq!(b.get(k)[m], C64::new(expected, 0.0));
            }
        }
        assert_eq!(b.orthonormality_error(), 0.0);
    }

    #[test]
    fn basis_rejects_bad_indices() {
        assert!(matches!(orthonormal_basis(3, &[0, 0]), Err(KrotovError::DuplicateIndex(0))));
        assert!(matches!(orthonormal_basis(3, &[3]), Err(KrotovError::IndexOutOfRange { index: 3, dim: 3 })));
        assert!(orthonormal_basis(3, &[]).is_err());
    }

    #[test]
    fn set_rejects_mixed_dimensions() {
        let r = StateSet::new(vec![StateVector::zeros(2), StateVector::zeros(3)]);
        assert!(matches!(r, Err(KrotovError::DimensionMismatch(_))));
    }

    proptest::proptest! {
        #[test]
        fn basis_is_orthonormal(dim in 1usize..12, seed in 0u64..1000) {
            let count = 1 + (seed as usize % dim);
            let indices: Vec<usize> = (0..count).map(|i| (i * 7 + seed as usize) % dim).collect();
            let mut uniq = indices.clone();
            uniq.sort_unstable();
            uniq.dedup();
            if uniq.len() == indices.len() {
                let b = orthonormal_basis(dim, &indices).unwrap();
                proptest::prop_assert!(b.orthonormality_error() == 0.0);
            }
        }
    }
}
