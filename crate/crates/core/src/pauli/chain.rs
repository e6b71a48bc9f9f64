use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OperatorSum, Pauli, PauliString, PauliTerm, StateVector, MAX_SITES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Coupling {
    /// `J_ij = J / |i - j|^p`
    PowerLaw { exponent: f64 },
    /// Symmetric table with zero diagonal; `J` is ignored.
    Explicit { table: Vec<Vec<f64>> },
}

/// Long-range XY chain in a longitudinal field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainParams {
    pub sites: usize,
    pub j: f64,
    pub b: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub coupling: Coupling,
}

impl SpinChainParams {
    /// Power-law chain at `J = B = 1`, `gamma_x = 1`, `gamma_y = 0`.
    pub fn critical(sites: usize, exponent: f64) -> Self {
        Self {
            sites,
            j: 1.0,
            b: 1.0,
            gamma_x: 1.0,
            gamma_y: 0.0,
            coupling: Coupling::PowerLaw { exponent },
        }
    }

    pub fn dimension(&self) -> usize {
        1usize << self.sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites > MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "chain needs 2..={MAX_SITES} sites, got {}",
                self.sites
            )));
        }
        for (name, v) in [("J", self.j), ("B", self.b), ("gamma_x", self.gamma_x), ("gamma_y", self.gamma_y)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        match &self.coupling {
            Coupling::PowerLaw { exponent } => {
                if !exponent.is_finite() {
                    return Err(Error::InvalidParameter(format!("exponent {exponent} is not finite")));
                }
                if !(0.0..1.0).contains(exponent) {
                    log::warn!("power-law exponent {exponent} outside the studied range [0, 1)");
                }
            }
            Coupling::Explicit { table } => {
                let n = self.sites;
                if table.len() != n || table.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidParameter(format!("coupling table must be {n}x{n}")));
                }
                for i in 0..n {
                    if table[i][i] != 0.0 {
                        return Err(Error::InvalidParameter(format!("coupling table diagonal ({i},{i}) is nonzero")));
                    }
                    for jx in 0..n {
                        let v = table[i][jx];
                        if !v.is_finite() || v != table[jx][i] {
                            return Err(Error::InvalidParameter(format!(
                                "coupling table is not symmetric and finite at ({i},{jx})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn coupling(&self, i: usize, jx: usize) -> f64 {
        if i == jx {
            return 0.0;
        }
        match &self.coupling {
            Coupling::PowerLaw { exponent } => self.j / (i.abs_diff(jx) as f64).powf(*exponent),
            Coupling::Explicit { table } => table[i][jx],
        }
    }

    /// `(1 / (N - 1)) sum_{i != j} J_ij`
    pub fn kac_factor(&self) -> f64 {
        let n = self.sites;
        let total: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |jx| (i, jx)))
            .filter(|(i, jx)| i != jx)
            .map(|(i, jx)| self.coupling(i, jx))
            .sum();
        total / (n - 1) as f64
    }
}

/// `H = -(1/K) sum_{i<j} J_ij (gx X_i X_j + gy Y_i Y_j) - B sum_i Z_i`, with `K` the Kac factor.
///
/// A coupling table that is identically zero gives free spins in the field;
/// a nonzero table whose Kac factor vanishes is rejected.
pub fn build_hamiltonian(params: &SpinChainParams) -> Result<OperatorSum> {
    params.validate()?;
    let n = params.sites;
    let mut terms = Vec::with_capacity(n * (n - 1) + n);
    let interacting = (0..n).any(|i| (0..n).any(|jx| params.coupling(i, jx) != 0.0));
    if interacting {
        let kac = params.kac_factor();
        if kac == 0.0 || !kac.is_finite() {
            return Err(Error::ZeroKacFactor);
        }
        for i in 0..n {
            for jx in i + 1..n {
                let w = -params.coupling(i, jx) / kac;
                terms.push(PauliTerm::new(w * params.gamma_x, PauliString::pair(i, jx, Pauli::X)));
                terms.push(PauliTerm::new(w * params.gamma_y, PauliString::pair(i, jx, Pauli::Y)));
            }
        }
    }
    for i in 0..n {
        terms.push(PauliTerm::new(-params.b, PauliString::single(i, Pauli::Z)));
    }
    OperatorSum::new(n, terms)
}

/// `(1/N) sum_{i,j} X_i X_j`, diagonal pairs included (they add `1` to the identity coefficient).
pub fn build_sx2_observable(sites: usize) -> Result<OperatorSum> {
    if sites == 0 {
        return Err(Error::InvalidParameter("observable needs at least one site".into()));
    }
    let w = 1.0 / sites as f64;
    let mut terms = Vec::with_capacity(sites * sites);
    for i in 0..sites {
        for jx in 0..sites {
            let s = if i == jx {
                PauliString::IDENTITY
            } else {
                PauliString::pair(i, jx, Pauli::X)
            };
            terms.push(PauliTerm::new(w, s));
        }
    }
    OperatorSum::new(sites, terms)
}

/// All spins up: basis index 0.
pub fn build_initial_state(sites: usize) -> Result<StateVector> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::InvalidParameter(format!("site count {sites} outside 1..={MAX_SITES}")));
    }
    let mut v = StateVector::zeros(1usize << sites);
    v.as_mut_slice()[0] = Complex64::new(1.0, 0.0);
    Ok(v)
}
