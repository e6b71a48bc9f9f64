use faer::{Mat, Side};
use num_complex::Complex64;

use crate::eigen::EigenpairSet;
use crate::error::{Error, Result};
use crate::pauli::state::{axpy, dot};
use crate::pauli::{LinearOperator, StateVector};

/// `|psi(t)> = sum_i <E_i|psi0> exp(-i E_i t) |E_i>` over a complete eigenbasis.
pub struct EigenbasisPropagator<'a> {
    eigs: &'a EigenpairSet,
    coefficients: Vec<Complex64>,
}

impl<'a> EigenbasisPropagator<'a> {
    pub fn new(eigs: &'a EigenpairSet, psi0: &StateVector) -> Result<Self> {
        let dim = psi0.len();
        if eigs.len() != dim || eigs.dimension() != Some(dim) {
            return Err(Error::IncompleteBasis {
                have: eigs.len(),
                dim,
            });
        }
        let coefficients = eigs.vectors.iter().map(|v| v.dot(psi0)).collect();
        Ok(Self { eigs, coefficients })
    }

    pub fn state_at(&self, t: f64) -> StateVector {
        let mut psi = StateVector::zeros(self.coefficients.len());
        for ((c, &e), v) in self.coefficients.iter().zip(&self.eigs.values).zip(&self.eigs.vectors) {
            if *c != Complex64::new(0.0, 0.0) {
                psi.axpy(c * Complex64::from_polar(1.0, -e * t), v);
            }
        }
        psi
    }
}

/// Matrix-free propagation `exp(-i H dt)` by Lanczos with full
/// reorthogonalization. Steps whose a posteriori error estimate stays above
/// `tol` at `max_dim` Krylov vectors are split into equal substeps.
pub struct KrylovPropagator<'a, Op: LinearOperator + ?Sized> {
    op: &'a Op,
    pub tol: f64,
    pub max_dim: usize,
}

const MAX_SUBSTEPS: usize = 1 << 16;

impl<'a, Op: LinearOperator + ?Sized> KrylovPropagator<'a, Op> {
    pub fn new(op: &'a Op, tol: f64) -> Self {
        Self {
            op,
            tol,
            max_dim: 40,
        }
    }

    pub fn step(&self, psi: &StateVector, dt: f64) -> Result<StateVector> {
        let mut substeps = 1;
        'outer: while substeps <= MAX_SUBSTEPS {
            let h = dt / substeps as f64;
            let mut cur = psi.clone();
            for _ in 0..substeps {
                match self.try_step(&cur, h) {
                    Some(next) => cur = next,
                    None => {
                        substeps *= 2;
                        continue 'outer;
                    }
                }
            }
            return Ok(cur);
        }
        Err(Error::Propagation { dt, substeps: MAX_SUBSTEPS })
    }

    /// Calls `visit(i, t_i, state)` for every sample of a uniform grid, starting from `psi0` at `times[0]`.
    pub fn evolve<F>(&self, psi0: &StateVector, times: &[f64], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, f64, &StateVector) -> Result<()>,
    {
        let mut cur = psi0.clone();
        for (i, &t) in times.iter().enumerate() {
            if i > 0 {
                cur = self.step(&cur, t - times[i - 1])?;
            }
            visit(i, t, &cur)?;
        }
        Ok(())
    }

    fn try_step(&self, psi: &StateVector, dt: f64) -> Option<StateVector> {
        let n = psi.len();
        let beta0 = psi.norm();
        if beta0 == 0.0 {
            return Some(psi.clone());
        }
        let mut basis: Vec<Vec<Complex64>> = vec![psi.as_slice().iter().map(|x| x / beta0).collect()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut scale: f64 = 0.0;
        for j in 0..self.max_dim {
            self.op.apply_into(&basis[j], &mut w);
            let alpha = dot(&basis[j], &w).re;
            axpy(Complex64::new(-alpha, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(Complex64::new(-betas[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
            let beta = dot(&w, &w).re.sqrt();
            alphas.push(alpha);
            scale = scale.max(alpha.abs()).max(beta);
            let y = exp_tridiagonal(&alphas, &betas, dt);
            let estimate = beta * y[j].norm();
            if beta <= 1e-14 * scale.max(1.0) || estimate <= self.tol {
                let mut out = StateVector::zeros(n);
                for (yi, v) in y.iter().zip(&basis) {
                    axpy(yi * beta0, v, out.as_mut_slice());
                }
                return Some(out);
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        None
    }
}

/// First column of `exp(-i T dt)` for the symmetric tridiagonal `T`.
fn exp_tridiagonal(alphas: &[f64], betas: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alphas.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigen(Side::Lower)
        .expect("small tridiagonal eigendecomposition");
    let u = eig.U();
    let s = eig.S().column_vector();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|l| Complex64::from_polar(u[(i, l)] * u[(0, l)], -s[l] * dt))
                .sum()
        })
        .collect()
}
