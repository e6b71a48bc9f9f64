use faer::MatRef;
use num_complex::Complex64;

use crate::pauli::StateVector;

/// Rule for which Ritz pair the solver converges next. Higher scores are
/// preferred. Scores must not depend on the global phase of the vector.
pub trait Target: Sync {
    fn score(&self, theta: f64, u: &StateVector) -> f64;

    /// Scores of all Ritz pairs of a search space, where column `j` of `coeffs`
    /// expresses Ritz vector `j` in `basis`. The default assembles each vector.
    fn score_ritz(&self, thetas: &[f64], basis: &[StateVector], coeffs: MatRef<'_, Complex64>) -> Vec<f64> {
        thetas
            .iter()
            .enumerate()
            .map(|(j, &theta)| {
                let mut u = StateVector::zeros(basis[0].len());
                for (i, v) in basis.iter().enumerate() {
                    u.axpy(coeffs[(i, j)], v);
                }
                self.score(theta, &u)
            })
            .collect()
    }

    /// Vector the search space should start from and keep, if the rule has one.
    fn anchor(&self) -> Option<&StateVector> {
        None
    }

    /// Whether the score is the captured weight `|<ref|u>|^2`, which the
    /// weight-threshold stopping rule sums.
    fn is_weight(&self) -> bool {
        false
    }
}

/// Scores a pair by `|<ref|u>|^2`.
#[derive(Clone, Debug)]
pub struct OverlapWith {
    reference: StateVector,
}

impl OverlapWith {
    pub fn new(reference: StateVector) -> Self {
        Self { reference }
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }
}

impl Target for OverlapWith {
    fn score(&self, _theta: f64, u: &StateVector) -> f64 {
        self.reference.dot(u).norm_sqr()
    }

    fn score_ritz(&self, thetas: &[f64], basis: &[StateVector], coeffs: MatRef<'_, Complex64>) -> Vec<f64> {
        let proj: Vec<Complex64> = basis.iter().map(|v| self.reference.dot(v)).collect();
        (0..thetas.len())
            .map(|j| {
                proj.iter()
                    .enumerate()
                    .map(|(i, p)| p * coeffs[(i, j)])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }

    fn anchor(&self) -> Option<&StateVector> {
        Some(&self.reference)
    }

    fn is_weight(&self) -> bool {
        true
    }
}

/// Scores a pair by `-|theta - energy|`: the usual shift-style targeting.
#[derive(Clone, Copy, Debug)]
pub struct ClosestTo(pub f64);

impl Target for ClosestTo {
    fn score(&self, theta: f64, _u: &StateVector) -> f64 {
        -(theta - self.0).abs()
    }

    fn score_ritz(&self, thetas: &[f64], _basis: &[StateVector], _coeffs: MatRef<'_, Complex64>) -> Vec<f64> {
        thetas.iter().map(|&t| -(t - self.0).abs()).collect()
    }
}
