use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pauli::{LinearOperator, OperatorSum, StateVector, DENSE_GUARD};

/// Relative accuracy of the matrix-free path.
pub const NORM_TOL: f64 = 1e-8;

/// `max |lambda|` of a Hermitian operator: dense spectrum up to the dense
/// guard, power iteration on `O^2` above it.
pub fn operator_l2_norm(op: &OperatorSum) -> Result<f64> {
    if op.dimension() <= DENSE_GUARD {
        dense_l2_norm(op)
    } else {
        power_iteration_norm(op, NORM_TOL, 100_000, 0)
    }
}

pub fn dense_l2_norm(op: &OperatorSum) -> Result<f64> {
    let dense = op.to_dense(true)?;
    let n = dense.nrows();
    let values: Vec<f64> = if op.is_real() {
        let real = Mat::<f64>::from_fn(n, n, |i, j| dense[(i, j)].re);
        real.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::DenseEigen(format!("{e:?}")))?
    } else {
        dense
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::DenseEigen(format!("{e:?}")))?
    };
    Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Power iteration on `O^2` from a seeded random start. Stops when the
/// extrapolated distance of the Rayleigh quotient `<v|O^2|v>` to its limit is
/// well below `tol` relative.
pub fn power_iteration_norm<Op: LinearOperator + ?Sized>(
    op: &Op,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = StateVector::random(op.dim(), &mut rng);
    let mut prev: Option<f64> = None;
    let mut prev_diff: Option<f64> = None;
    for _ in 0..max_iters {
        let ov = op.apply_vec(&v);
        let rho = ov.norm_sqr();
        if rho == 0.0 {
            return Ok(0.0);
        }
        if let Some(p) = prev {
            let d = (rho - p).abs();
            let remaining = match prev_diff {
                Some(pd) if d < pd => {
                    let q = d / pd;
                    d * q / (1.0 - q)
                }
                _ => f64::INFINITY,
            };
            if d <= 4.0 * f64::EPSILON * rho || remaining <= 1e-2 * tol * rho {
                return Ok(rho.sqrt());
            }
            prev_diff = Some(d);
        }
        prev = Some(rho);
        v = op.apply_vec(&ov);
        v.normalize();
    }
    Err(Error::PowerIteration {
        iterations: max_iters,
        tol,
    })
}
