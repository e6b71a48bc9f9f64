//! Exact and reduced time evolution, expectation series, and the error
//! measurements that compare the two.

mod grid;
mod norm;
mod propagate;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigen::EigenpairSet;
use crate::error::{Error, Result};
use crate::pauli::{LinearOperator, OperatorSum, StateVector};
use crate::reduction::ReducedModel;

pub use grid::{TimeGrid, TimeSeries, MAX_SAMPLES};
pub use norm::{dense_l2_norm, operator_l2_norm, power_iteration_norm, NORM_TOL};
pub use propagate::{EigenbasisPropagator, KrylovPropagator};

/// Exact states on the grid from a complete eigenbasis.
pub fn evolve_exact(eigs: &EigenpairSet, psi0: &StateVector, grid: &TimeGrid) -> Result<Vec<StateVector>> {
    grid.validate()?;
    let prop = EigenbasisPropagator::new(eigs, psi0)?;
    Ok(grid.times().par_iter().map(|&t| prop.state_at(t)).collect())
}

/// Reduced coefficient vectors `psi~(t)` on the grid; `O(k)` per sample.
pub fn evolve_reduced(model: &ReducedModel, grid: &TimeGrid) -> Vec<Vec<Complex64>> {
    grid.times().iter().map(|&t| model.reduced_state(t)).collect()
}

/// `<psi|O|psi>` (real part; every Pauli sum with real coefficients is Hermitian).
pub fn expectation(op: &OperatorSum, psi: &StateVector) -> Result<f64> {
    Ok(psi.dot(&op.apply(psi)?).re)
}

pub fn expect_full(op: &OperatorSum, states: &[StateVector], grid: &TimeGrid, label: &str) -> Result<TimeSeries> {
    if states.len() != grid.samples {
        return Err(Error::GridMismatch(grid.samples, states.len()));
    }
    let values = states
        .par_iter()
        .map(|psi| expectation(op, psi))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(label, *grid, values)
}

/// Reduced-space series of a cached observable; only `k x k` algebra.
pub fn expect_reduced(model: &ReducedModel, name: &str, grid: &TimeGrid) -> Result<TimeSeries> {
    let values = grid
        .times()
        .iter()
        .map(|&t| model.expectation(name, t))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(name, *grid, values)
}

/// `|Phi(t)> = |Psi(t)> - nu |psi(t)>`.
pub fn residual_state(exact: &StateVector, model: &ReducedModel, t: f64) -> Result<StateVector> {
    let mut phi = exact.clone();
    let psi = model.full_state(t)?;
    if psi.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            actual: phi.len(),
        });
    }
    phi.axpy(Complex64::new(-model.nu, 0.0), &psi);
    Ok(phi)
}

/// Measured errors of a reduced model against an exact trajectory, next to
/// their closed forms.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub nu: f64,
    /// `||Psi(t) - psi(t)||^2`
    pub state_error_sq: TimeSeries,
    /// `2 (1 - nu)`
    pub predicted_state_error: f64,
    pub exact_expectation: TimeSeries,
    pub reduced_expectation: TimeSeries,
    /// `|<O>_Psi - <O>_psi|`
    pub observable_error: TimeSeries,
    /// `||O||_2` (largest absolute eigenvalue).
    pub operator_norm: f64,
    /// `2 (1 - nu^2) ||O||_2^2`
    pub observable_bound: f64,
    /// `2 (1 - nu^2) ||O||_2`
    pub observable_bound_unsquared: f64,
    /// `1 - nu^2`
    pub residual_norm_sq: f64,
    /// `<Phi(t)|Phi(t)>`
    pub residual_norm_sq_measured: TimeSeries,
}

impl ErrorReport {
    /// `max_t | ||Psi - psi||^2 - 2(1 - nu) |`
    pub fn equality_residual(&self) -> f64 {
        self.state_error_sq
            .values
            .iter()
            .fold(0.0, |m, e| m.max((e - self.predicted_state_error).abs()))
    }

    /// `max_t <Phi|Phi> - (1 - nu^2)` in absolute value.
    pub fn residual_norm_error(&self) -> f64 {
        self.residual_norm_sq_measured
            .values
            .iter()
            .fold(0.0, |m, e| m.max((e - self.residual_norm_sq).abs()))
    }

    /// Samples whose observable error exceeds `bound + headroom`.
    pub fn bound_violations(&self, bound: f64, headroom: f64) -> usize {
        self.observable_error.values.iter().filter(|&&e| e > bound + headroom).count()
    }
}

/// Compares `exact` (one state per grid sample) with the model's
/// reconstruction `P psi~(t)`. The observable must be cached in the model
/// under `name`; its reduced series uses only that cached matrix.
pub fn error_report(
    exact: &[StateVector],
    model: &ReducedModel,
    name: &str,
    observable: &OperatorSum,
    grid: &TimeGrid,
    operator_norm: f64,
) -> Result<ErrorReport> {
    grid.validate()?;
    if exact.len() != grid.samples {
        return Err(Error::GridMismatch(grid.samples, exact.len()));
    }
    let nu = model.nu;
    let times = grid.times();
    let rows = exact
        .par_iter()
        .zip(times.par_iter())
        .map(|(psi_exact, &t)| {
            let approx = model.full_state(t)?;
            let err = psi_exact.sub(&approx).norm_sqr();
            let phi = residual_state(psi_exact, model, t)?;
            let o_exact = expectation(observable, psi_exact)?;
            let o_reduced = model.expectation(name, t)?;
            Ok((err, phi.norm_sqr(), o_exact, o_reduced))
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |label: &str, f: &dyn Fn(&(f64, f64, f64, f64)) -> f64| {
        TimeSeries::new(label, *grid, rows.iter().map(f).collect())
    };
    let residual_norm_sq = 1.0 - nu * nu;
    Ok(ErrorReport {
        nu,
        state_error_sq: column("state_error_sq", &|r| r.0)?,
        predicted_state_error: 2.0 * (1.0 - nu),
        exact_expectation: column("exact", &|r| r.2)?,
        reduced_expectation: column("reduced", &|r| r.3)?,
        observable_error: column("observable_error", &|r| (r.2 - r.3).abs())?,
        operator_norm,
        observable_bound: 2.0 * residual_norm_sq * operator_norm * operator_norm,
        observable_bound_unsquared: 2.0 * residual_norm_sq * operator_norm,
        residual_norm_sq,
        residual_norm_sq_measured: column("residual_norm_sq", &|r| r.1)?,
    })
}

/// Exact expectation series by matrix-free Krylov propagation, without
/// storing the trajectory.
pub fn expect_krylov<Op: LinearOperator + ?Sized>(
    h: &Op,
    observable: &OperatorSum,
    psi0: &StateVector,
    grid: &TimeGrid,
    tol: f64,
    label: &str,
) -> Result<TimeSeries> {
    grid.validate()?;
    let mut values = Vec::with_capacity(grid.samples);
    KrylovPropagator::new(h, tol).evolve(psi0, &grid.times(), |_, _, psi| {
        values.push(expectation(observable, psi)?);
        Ok(())
    })?;
    TimeSeries::new(label, *grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_full_ed;
    use crate::pauli::{build_hamiltonian, build_initial_state, build_sx2_observable, SpinChainParams};
    use crate::reduction::{build_reduced_model, overlaps, select, SelectionRule};

    struct Case {
        h: OperatorSum,
        eig: EigenpairSet,
        psi0: StateVector,
        sx2: OperatorSum,
    }

    fn case(n: usize, p: f64) -> Case {
        let h = build_hamiltonian(&SpinChainParams::critical(n, p)).unwrap();
        Case {
            eig: dense_full_ed(&h, false).unwrap(),
            psi0: build_initial_state(n).unwrap(),
            sx2: build_sx2_observable(n).unwrap(),
            h,
        }
    }

    fn model(c: &Case, k: usize) -> ReducedModel {
        let sel = select(&overlaps(&c.eig, &c.psi0).unwrap(), SelectionRule::Count(k)).unwrap();
        build_reduced_model(&c.eig, &sel, &c.psi0, &[("sx2", &c.sx2), ("H", &c.h)]).unwrap()
    }

    #[test]
    fn free_chain_is_stationary() {
        let mut p = SpinChainParams::critical(4, 0.5);
        p.j = 0.0;
        let h = build_hamiltonian(&p).unwrap();
        let eig = dense_full_ed(&h, false).unwrap();
        let psi0 = build_initial_state(4).unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 31).unwrap();
        let states = evolve_exact(&eig, &psi0, &grid).unwrap();
        for (psi, t) in states.iter().zip(grid.times()) {
            let phase = Complex64::from_polar(1.0, 4.0 * t);
            assert!((psi.as_slice()[0] - phase).norm() < 1e-12);
        }
        let s = expect_full(&build_sx2_observable(4).unwrap(), &states, &grid, "sx2").unwrap();
        assert!(s.spread() < 1e-12);
    }

    #[test]
    fn norm_and_energy_conserved() {
        let c = case(6, 0.4);
        let grid = TimeGrid::default();
        let states = evolve_exact(&c.eig, &c.psi0, &grid).unwrap();
        assert!(states.iter().all(|s| (s.norm() - 1.0).abs() < 1e-10));
        let e = expect_full(&c.h, &states, &grid, "H").unwrap();
        assert!(e.spread() < 1e-9);
        let m = model(&c, 4);
        assert!(expect_reduced(&m, "H", &grid).unwrap().spread() < 1e-9);
    }

    #[test]
    fn sx2_starts_at_one() {
        for n in [2, 5, 7] {
            let psi0 = build_initial_state(n).unwrap();
            let v = expectation(&build_sx2_observable(n).unwrap(), &psi0).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn complete_model_has_zero_error() {
        let c = case(4, 0.9);
        let m = model(&c, 16);
        let grid = TimeGrid::new(0.0, 5.0, 101).unwrap();
        let states = evolve_exact(&c.eig, &c.psi0, &grid).unwrap();
        let norm = operator_l2_norm(&c.sx2).unwrap();
        let r = error_report(&states, &m, "sx2", &c.sx2, &grid, norm).unwrap();
        assert!(r.state_error_sq.max_abs() < 1e-12);
        assert!(r.observable_error.max_abs() < 1e-12);
        assert!(r.predicted_state_error.abs() < 1e-12);
        let phi = residual_state(&states[40], &m, grid.time(40)).unwrap();
        assert!(phi.norm() < 1e-12);
    }

    #[test]
    fn single_eigenstate_residual_vanishes() {
        let c = case(4, 0.3);
        let psi0 = c.eig.vectors[3].clone();
        let sel = select(&overlaps(&c.eig, &psi0).unwrap(), SelectionRule::Count(1)).unwrap();
        let m = build_reduced_model(&c.eig, &sel, &psi0, &[]).unwrap();
        let prop = EigenbasisPropagator::new(&c.eig, &psi0).unwrap();
        for t in [0.0, 1.3, 7.0] {
            assert!(residual_state(&prop.state_at(t), &m, t).unwrap().norm() < 1e-12);
            let r = m.reduced_state(t);
            assert_eq!(r.len(), 1);
            assert!((r[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn error_formulas_hold() {
        let c = case(6, 0.9);
        let grid = TimeGrid::default();
        let states = evolve_exact(&c.eig, &c.psi0, &grid).unwrap();
        let norm = operator_l2_norm(&c.sx2).unwrap();
        for k in [1, 3, 6] {
            let m = model(&c, k);
            let r = error_report(&states, &m, "sx2", &c.sx2, &grid, norm).unwrap();
            assert!(r.equality_residual() <= 1e-9);
            assert!(r.state_error_sq.spread() <= 1e-9);
            assert!(r.residual_norm_error() <= 1e-10);
            assert_eq!(r.bound_violations(r.observable_bound, 1e-12), 0);
        }
    }

    #[test]
    fn reconstruction_matches_truncated_sum() {
        let c = case(6, 0.1);
        let m = model(&c, 5);
        let dec = overlaps(&c.eig, &c.psi0).unwrap();
        for t in [0.0, 0.7, 4.2] {
            let mut expect = StateVector::zeros(64);
            for e in &dec.entries()[..5] {
                expect.axpy(e.coefficient * Complex64::from_polar(1.0, -e.energy * t), &c.eig.vectors[e.index]);
            }
            let mut got = m.full_state(t).unwrap();
            got.scale(Complex64::new(m.nu, 0.0));
            assert!(got.max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn mismatched_grid_rejected() {
        let c = case(4, 0.1);
        let m = model(&c, 2);
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let states = evolve_exact(&c.eig, &c.psi0, &grid).unwrap();
        assert!(matches!(
            error_report(&states[..10], &m, "sx2", &c.sx2, &grid, 4.0),
            Err(Error::GridMismatch(11, 10))
        ));
    }

    #[test]
    fn krylov_series_matches_exact() {
        let c = case(6, 0.9);
        let grid = TimeGrid::new(0.0, 4.0, 201).unwrap();
        let states = evolve_exact(&c.eig, &c.psi0, &grid).unwrap();
        let exact = expect_full(&c.sx2, &states, &grid, "sx2").unwrap();
        let kry = expect_krylov(&c.h, &c.sx2, &c.psi0, &grid, 1e-13, "sx2").unwrap();
        assert!(kry.max_abs_diff(&exact).unwrap() < 1e-10);
    }
}
