use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use super::EigenpairSet;
use crate::error::{Error, Result};
use crate::pauli::{LinearOperator, OperatorSum, StateVector};

/// Every eigenpair of `op` in ascending eigenvalue order.
///
/// Real operators (even number of Y factors in each string) go through the
/// real symmetric solver. Residual norms are measured with the matrix-free
/// action. Dimensions above the dense guard need `override_guard`.
pub fn dense_full_ed(op: &OperatorSum, override_guard: bool) -> Result<EigenpairSet> {
    let dense = op.to_dense(override_guard)?;
    let (values, vectors) = if op.is_real() {
        let n = dense.nrows();
        let real = Mat::<f64>::from_fn(n, n, |i, j| dense[(i, j)].re);
        drop(dense);
        let eig = real
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::DenseEigen(format!("{e:?}")))?;
        let u = eig.U();
        let values: Vec<f64> = eig.S().column_vector().iter().copied().collect();
        let vectors = (0..n)
            .map(|c| StateVector::new(u.col(c).iter().map(|&x| Complex64::new(x, 0.0)).collect()))
            .collect();
        (values, vectors)
    } else {
        eigh_parts(dense.as_ref())?
    };
    Ok(with_residuals(op, values, vectors))
}

/// Dense Hermitian eigendecomposition of an explicit matrix (lower triangle is read).
pub fn dense_eigh(matrix: MatRef<'_, Complex64>) -> Result<EigenpairSet> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            actual: matrix.ncols(),
        });
    }
    let (values, vectors) = eigh_parts(matrix)?;
    let op = crate::pauli::DenseOperator(matrix.to_owned());
    Ok(with_residuals(&op, values, vectors))
}

pub(crate) fn eigh_parts(matrix: MatRef<'_, Complex64>) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let eig = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::DenseEigen(format!("{e:?}")))?;
    let u = eig.U();
    let values = eig.S().column_vector().iter().map(|s| s.re).collect();
    let vectors = (0..matrix.ncols())
        .map(|c| StateVector::new(u.col(c).iter().copied().collect()))
        .collect();
    Ok((values, vectors))
}

fn with_residuals<Op: LinearOperator + ?Sized>(
    op: &Op,
    values: Vec<f64>,
    vectors: Vec<StateVector>,
) -> EigenpairSet {
    let residual_norms = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| {
            let mut hv = op.apply_vec(v);
            hv.axpy(Complex64::new(-e, 0.0), v);
            hv.norm()
        })
        .collect();
    EigenpairSet {
        scores: vec![0.0; values.len()],
        values,
        vectors,
        residual_norms,
    }
}
