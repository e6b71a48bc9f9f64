//! JSON form of a [`ReducedModel`]. Numbers are written in shortest
//! round-trip decimal form, so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ReducedMatrix, ReducedModel};
use crate::error::{Error, Result};
use crate::pauli::{SpinChainParams, StateVector};

pub const MODEL_FORMAT: &str = "reducedyn-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub n_sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SpinChainParams>,
    pub k: usize,
    pub energies: Vec<f64>,
    /// `[re, im]` pairs.
    pub coefficients: Vec<[f64; 2]>,
    pub nu: f64,
    #[serde(default)]
    pub boundary_tie: bool,
    /// Row-major `k x k` matrices of `[re, im]` pairs.
    pub observables: BTreeMap<String, Vec<[f64; 2]>>,
    /// Projector columns, each `2^n_sites` `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<Vec<Vec<[f64; 2]>>>,
}

fn pack(z: &[Complex64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

fn unpack(z: &[[f64; 2]]) -> Vec<Complex64> {
    z.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl ModelFile {
    pub fn from_model(model: &ReducedModel, with_projector: bool) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            n_sites: model.n_sites,
            params: model.params.clone(),
            k: model.k(),
            energies: model.energies.clone(),
            coefficients: pack(&model.coefficients),
            nu: model.nu,
            boundary_tie: model.boundary_tie,
            observables: model
                .observables
                .iter()
                .map(|(name, m)| (name.clone(), pack(m.row_major())))
                .collect(),
            projector: if with_projector {
                model
                    .projector
                    .as_ref()
                    .map(|cols| cols.iter().map(|c| pack(c.as_slice())).collect())
            } else {
                None
            },
        }
    }

    pub fn into_model(self) -> Result<ReducedModel> {
        let bad = |msg: String| Error::ModelFormat(msg);
        if self.format != MODEL_FORMAT {
            return Err(bad(format!("unexpected format tag {:?}", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(bad(format!("unsupported version {}", self.version)));
        }
        if self.n_sites == 0 || self.n_sites > crate::pauli::MAX_SITES {
            return Err(bad(format!("n_sites {} out of range", self.n_sites)));
        }
        let k = self.k;
        if k == 0 || self.energies.len() != k || self.coefficients.len() != k {
            return Err(bad(format!(
                "k = {k} but {} energies and {} coefficients",
                self.energies.len(),
                self.coefficients.len()
            )));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(bad(format!("nu = {} outside (0, 1]", self.nu)));
        }
        let coefficients = unpack(&self.coefficients);
        let nu2: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if (nu2 - self.nu * self.nu).abs() > 1e-12 {
            return Err(bad(format!("nu^2 = {} but coefficients carry {nu2}", self.nu * self.nu)));
        }
        let mut observables = BTreeMap::new();
        for (name, data) in self.observables {
            let m = ReducedMatrix::from_row_major(k, unpack(&data))
                .map_err(|_| bad(format!("observable {name:?} is not {k}x{k}")))?;
            observables.insert(name, m);
        }
        let dim = 1usize << self.n_sites;
        let projector = match self.projector {
            None => None,
            Some(cols) => {
                if cols.len() != k || cols.iter().any(|c| c.len() != dim) {
                    return Err(bad(format!("projector must be {k} columns of length {dim}")));
                }
                Some(cols.iter().map(|c| StateVector::new(unpack(c))).collect())
            }
        };
        Ok(ReducedModel {
            n_sites: self.n_sites,
            params: self.params,
            energies: self.energies,
            coefficients,
            nu: self.nu,
            projector,
            observables,
            boundary_tie: self.boundary_tie,
        })
    }
}

impl ReducedModel {
    pub fn to_json(&self, with_projector: bool) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from_model(self, with_projector))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn save(&self, path: &Path, with_projector: bool) -> Result<()> {
        std::fs::write(path, self.to_json(with_projector)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_full_ed;
    use crate::pauli::{build_hamiltonian, build_initial_state, build_sx2_observable};
    use crate::reduction::{build_reduced_model, overlaps, select, SelectionRule};

    fn model() -> ReducedModel {
        let params = SpinChainParams::critical(6, 0.9);
        let h = build_hamiltonian(&params).unwrap();
        let eig = dense_full_ed(&h, false).unwrap();
        let psi0 = build_initial_state(6).unwrap();
        let sx2 = build_sx2_observable(6).unwrap();
        let sel = select(&overlaps(&eig, &psi0).unwrap(), SelectionRule::Count(4)).unwrap();
        build_reduced_model(&eig, &sel, &psi0, &[("sx2", &sx2)])
            .unwrap()
            .with_params(params)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = model();
        for with in [false, true] {
            let back = ReducedModel::from_json(&m.to_json(with).unwrap()).unwrap();
            assert_eq!(back.energies, m.energies);
            assert_eq!(back.coefficients, m.coefficients);
            assert_eq!(back.nu, m.nu);
            assert_eq!(back.observables, m.observables);
            assert_eq!(back.params, m.params);
            assert_eq!(back.projector.is_some(), with);
            for t in [0.0, 0.37, 9.5] {
                assert_eq!(back.expectation("sx2", t).unwrap(), m.expectation("sx2", t).unwrap());
            }
        }
    }

    #[test]
    fn rejects_malformed_files() {
        let m = model();
        let good = ModelFile::from_model(&m, false);
        let mut f = good.clone();
        f.version = 99;
        assert!(f.into_model().is_err());
        let mut f = good.clone();
        f.energies.pop();
        assert!(f.into_model().is_err());
        let mut f = good.clone();
        f.nu = 0.5;
        assert!(f.into_model().is_err());
        let mut f = good.clone();
        f.observables.get_mut("sx2").unwrap().pop();
        assert!(f.into_model().is_err());
        assert!(ReducedModel::from_json("{").is_err());
    }
}
