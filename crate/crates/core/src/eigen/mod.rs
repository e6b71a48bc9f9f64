//! Eigenpairs of Hermitian operators: a dense full diagonalization used as the
//! oracle, and a Jacobi-Davidson iteration that converges the pairs a
//! [`Target`] asks for, one at a time.

mod correction;
mod dense;
mod jd;
mod target;

use num_complex::Complex64;

use crate::pauli::StateVector;

pub use dense::{dense_eigh, dense_full_ed};
pub use jd::{jd_targeted, lock_and_deflate, JdConfig, Preconditioner, StopRule};
pub use target::{ClosestTo, OverlapWith, Target};

/// Eigenvalues, eigenvectors and the per-pair bookkeeping of a solve.
#[derive(Clone, Debug, Default)]
pub struct EigenpairSet {
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
    /// Target score of each pair when it was accepted; zero for the dense path.
    pub scores: Vec<f64>,
    /// `||H v - E v||_2` of each returned pair.
    pub residual_norms: Vec<f64>,
}

impl EigenpairSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Length of the vectors, or `None` for an empty set.
    pub fn dimension(&self) -> Option<usize> {
        self.vectors.first().map(StateVector::len)
    }

    pub fn push(&mut self, value: f64, vector: StateVector, score: f64, residual: f64) {
        self.values.push(value);
        self.vectors.push(vector);
        self.scores.push(score);
        self.residual_norms.push(residual);
    }

    /// `max |<v_a|v_b> - delta_ab|` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.vectors)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn orthonormality_error(vectors: &[StateVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, va) in vectors.iter().enumerate() {
        for (b, vb) in vectors.iter().enumerate().skip(a) {
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((va.dot(vb) - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}
