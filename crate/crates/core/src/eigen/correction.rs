//! Approximate solve of the Jacobi-Davidson correction equation
//! `(I - U U*)(H - theta)(I - U U*) t = -r`, `t ⟂ U`, by a fixed number of
//! GMRES steps. `U` holds the locked vectors and the current Ritz vector.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::pauli::state::{axpy, dot};
use crate::pauli::{LinearOperator, StateVector};

fn project_out(x: &mut [Complex64], u: &[&StateVector]) {
    for q in u {
        let c = dot(q.as_slice(), x);
        axpy(-c, q.as_slice(), x);
    }
}

/// Projected inverse of `diag(H) - theta` restricted to the complement of `U`:
/// `K~^{-1} z = K^{-1} z - K^{-1} U (U* K^{-1} U)^{-1} U* K^{-1} z`.
struct ProjectedJacobi<'a> {
    inv_diag: Vec<f64>,
    u: &'a [&'a StateVector],
    y: Vec<Vec<Complex64>>,
    gram_lu: faer::linalg::solvers::PartialPivLu<Complex64>,
}

impl<'a> ProjectedJacobi<'a> {
    fn new(diag: &[f64], theta: f64, u: &'a [&'a StateVector]) -> Self {
        let inv_diag: Vec<f64> = diag
            .iter()
            .map(|d| {
                let s = d - theta;
                if s.abs() < 1e-8 {
                    1.0 / 1e-8f64.copysign(s)
                } else {
                    1.0 / s
                }
            })
            .collect();
        let y: Vec<Vec<Complex64>> = u
            .iter()
            .map(|q| q.as_slice().iter().zip(&inv_diag).map(|(a, w)| a * w).collect())
            .collect();
        let m = u.len();
        let gram = Mat::<Complex64>::from_fn(m, m, |i, j| dot(u[i].as_slice(), &y[j]));
        Self {
            inv_diag,
            u,
            y,
            gram_lu: gram.partial_piv_lu(),
        }
    }

    fn apply(&self, z: &mut [Complex64]) {
        z.iter_mut().zip(&self.inv_diag).for_each(|(a, w)| *a *= w);
        let m = self.u.len();
        let rhs = Mat::<Complex64>::from_fn(m, 1, |i, _| dot(self.u[i].as_slice(), z));
        let coef = self.gram_lu.solve(&rhs);
        for (j, yj) in self.y.iter().enumerate() {
            axpy(-coef[(j, 0)], yj, z);
        }
    }
}

pub(crate) fn solve_correction<Op: LinearOperator + ?Sized>(
    op: &Op,
    u: &[&StateVector],
    theta: f64,
    residual: &StateVector,
    iters: usize,
    diag: Option<&[f64]>,
) -> StateVector {
    let n = residual.len();
    let precond = diag.map(|d| ProjectedJacobi::new(d, theta, u));
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];

    let apply = |x: &[Complex64], out: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>| {
        op.apply_into(x, scratch);
        out.clear();
        out.extend(scratch.iter().zip(x).map(|(hx, xi)| hx - theta * xi));
        project_out(out, u);
        if let Some(p) = &precond {
            p.apply(out);
        }
    };

    let mut rhs: Vec<Complex64> = residual.as_slice().iter().map(|r| -r).collect();
    project_out(&mut rhs, u);
    if let Some(p) = &precond {
        p.apply(&mut rhs);
    }
    let sol = gmres(apply, &rhs, iters, &mut scratch);
    let mut t = StateVector::new(sol);
    project_out(t.as_mut_slice(), u);
    t
}

/// GMRES from a zero initial guess, at most `iters` Arnoldi steps.
fn gmres<F>(apply: F, rhs: &[Complex64], iters: usize, scratch: &mut Vec<Complex64>) -> Vec<Complex64>
where
    F: Fn(&[Complex64], &mut Vec<Complex64>, &mut Vec<Complex64>),
{
    let n = rhs.len();
    let zero = Complex64::new(0.0, 0.0);
    let beta = dot(rhs, rhs).re.sqrt();
    if beta == 0.0 || iters == 0 {
        return vec![zero; n];
    }
    let mut basis: Vec<Vec<Complex64>> = vec![rhs.iter().map(|x| x / beta).collect()];
    let mut h = vec![vec![zero; iters]; iters + 1];
    let mut cs = vec![0.0; iters];
    let mut sn = vec![zero; iters];
    let mut g = vec![zero; iters + 1];
    g[0] = Complex64::new(beta, 0.0);
    let mut w = Vec::with_capacity(n);
    let mut steps = 0;

    for j in 0..iters {
        apply(&basis[j], &mut w, scratch);
        for (i, vi) in basis.iter().enumerate() {
            let hij = dot(vi, &w);
            h[i][j] = hij;
            axpy(-hij, vi, &mut w);
        }
        // second pass keeps the Krylov basis orthogonal in the ill-conditioned interior case
        for (i, vi) in basis.iter().enumerate() {
            let c = dot(vi, &w);
            h[i][j] += c;
            axpy(-c, vi, &mut w);
        }
        let hnext = dot(&w, &w).re.sqrt();
        h[j + 1][j] = Complex64::new(hnext, 0.0);

        for i in 0..j {
            let (a, b) = (h[i][j], h[i + 1][j]);
            h[i][j] = cs[i] * a + sn[i] * b;
            h[i + 1][j] = -sn[i].conj() * a + cs[i] * b;
        }
        let (a, b) = (h[j][j], h[j + 1][j]);
        let nu = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if nu == 0.0 {
            break;
        }
        if a.norm() == 0.0 {
            cs[j] = 0.0;
            sn[j] = b.conj() / b.norm();
        } else {
            let phase = a / a.norm();
            cs[j] = a.norm() / nu;
            sn[j] = phase * b.conj() / nu;
        }
        h[j][j] = cs[j] * a + sn[j] * b;
        h[j + 1][j] = zero;
        g[j + 1] = -sn[j].conj() * g[j];
        g[j] *= cs[j];
        steps = j + 1;

        if hnext <= 1e-14 * beta || g[j + 1].norm() <= 1e-15 * beta {
            break;
        }
        basis.push(w.iter().map(|x| x / hnext).collect());
    }

    let mut y = vec![zero; steps];
    for i in (0..steps).rev() {
        let s: Complex64 = (i + 1..steps).map(|k| h[i][k] * y[k]).sum();
        y[i] = (g[i] - s) / h[i][i];
    }
    let mut x = vec![zero; n];
    for (yi, vi) in y.iter().zip(&basis) {
        axpy(*yi, vi, &mut x);
    }
    x
}
