use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Complex amplitudes over the computational basis of a spin chain.
///
/// Physical states are unit vectors; intermediates of the solvers (residuals,
/// corrections) reuse the type without that guarantee. [`is_normalized`]
/// tells the two apart.
///
/// [`is_normalized`]: StateVector::is_normalized
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amps: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = Complex64::new(1.0, 0.0);
        v
    }

    /// Unit vector with i.i.d. uniform real and imaginary parts in [-1, 1).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let amps = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut v = Self { amps };
        v.normalize();
        v
    }

    /// Validates that `amps` has power-of-two length and unit norm within `1e-12`.
    pub fn physical(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "state length {} is not a power of two",
                amps.len()
            )));
        }
        let v = Self { amps };
        if !v.is_normalized(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "state norm {} is not 1",
                v.norm()
            )));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Site count `N` when the length is `2^N`.
    pub fn n_sites(&self) -> Option<usize> {
        self.amps
            .len()
            .is_power_of_two()
            .then(|| self.amps.len().trailing_zeros() as usize)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.amps
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &StateVector) -> Complex64 {
        dot(&self.amps, &other.amps)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm and returns the previous norm. A zero vector is left untouched.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            self.scale(Complex64::new(1.0 / norm, 0.0));
        }
        norm
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= alpha);
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: Complex64, x: &StateVector) {
        axpy(alpha, &x.amps, &mut self.amps);
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect();
        StateVector { amps }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_states_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = StateVector::random(64, &mut rng);
        assert!(v.is_normalized(1e-14));
        assert_eq!(v.n_sites(), Some(6));
    }

    #[test]
    fn physical_rejects_bad_inputs() {
        let c = |re: f64| Complex64::new(re, 0.0);
        assert!(StateVector::physical(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(StateVector::physical(vec![c(1.0), c(1.0)]).is_err());
        assert!(StateVector::physical(vec![c(0.6), c(0.8)]).is_ok());
    }

    #[test]
    fn dot_is_conjugate_linear_in_left_argument() {
        let a = StateVector::new(vec![Complex64::new(0.0, 1.0)]);
        let b = StateVector::new(vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(a.dot(&b), Complex64::new(0.0, -1.0));
    }
}
