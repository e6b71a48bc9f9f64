//! The optimal order-k approximation: overlap coefficients of the initial
//! state, selection of the dominant eigenstates, and the reduced model built
//! on the projector whose columns are those eigenstates.

mod file;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::eigen::{orthonormality_error, EigenpairSet};
use crate::error::{Error, Result};
use crate::pauli::{LinearOperator, OperatorSum, SpinChainParams, StateVector};

pub use file::{ModelFile, MODEL_FORMAT, MODEL_VERSION};

/// Weights closer than this are treated as tied when ordering and at the selection boundary.
pub const TIE_TOL: f64 = 1e-12;

/// Slack applied when comparing captured weight against `nu_min^2`.
pub const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapEntry {
    /// Position of the pair in the source [`EigenpairSet`].
    pub index: usize,
    pub energy: f64,
    /// `c_i = <E_i|psi0>`
    pub coefficient: Complex64,
}

impl OverlapEntry {
    pub fn weight(&self) -> f64 {
        self.coefficient.norm_sqr()
    }
}

/// Overlaps ordered by descending `|c_i|`; near-ties go to the lower energy, then the lower index.
#[derive(Clone, Debug)]
pub struct OverlapDecomposition {
    entries: Vec<OverlapEntry>,
}

impl OverlapDecomposition {
    pub fn entries(&self) -> &[OverlapEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(OverlapEntry::weight).sum()
    }
}

pub fn overlaps(eigs: &EigenpairSet, psi0: &StateVector) -> Result<OverlapDecomposition> {
    if let Some(dim) = eigs.dimension() {
        if dim != psi0.len() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: psi0.len(),
            });
        }
    }
    let mut entries: Vec<OverlapEntry> = eigs
        .vectors
        .iter()
        .zip(&eigs.values)
        .enumerate()
        .map(|(index, (v, &energy))| OverlapEntry {
            index,
            energy,
            coefficient: v.dot(psi0),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.weight()
            .total_cmp(&a.weight())
            .then(a.energy.total_cmp(&b.energy))
            .then(a.index.cmp(&b.index))
    });
    // runs of near-equal weight are reordered by energy, then index
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end - 1].weight() - entries[end].weight() <= TIE_TOL {
            end += 1;
        }
        entries[start..end].sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.index.cmp(&b.index)));
        start = end;
    }
    Ok(OverlapDecomposition { entries })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectionRule {
    /// The `k` largest overlaps.
    Count(usize),
    /// The shortest prefix whose captured weight reaches `nu_min^2`.
    Threshold(f64),
}

/// Eigenpair indices chosen for the reduced space, in descending-overlap order.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    /// The last chosen weight ties (within [`TIE_TOL`]) with the first rejected one.
    pub boundary_tie: bool,
}

impl Selection {
    /// An arbitrary subset, e.g. for comparing against the optimal choice.
    pub fn from_indices(indices: Vec<usize>) -> Self {
        Self {
            indices,
            boundary_tie: false,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn select(dec: &OverlapDecomposition, rule: SelectionRule) -> Result<Selection> {
    if dec.is_empty() {
        return Err(Error::EmptySelection);
    }
    let take = match rule {
        SelectionRule::Count(k) => {
            if k == 0 || k > dec.len() {
                return Err(Error::InvalidParameter(format!(
                    "cannot select {k} of {} states",
                    dec.len()
                )));
            }
            k
        }
        SelectionRule::Threshold(nu_min) => {
            if !(nu_min > 0.0 && nu_min <= 1.0) {
                return Err(Error::InvalidParameter(format!("threshold {nu_min} outside (0, 1]")));
            }
            let goal = nu_min * nu_min - WEIGHT_SLACK;
            let mut acc = 0.0;
            let mut take = None;
            for (i, e) in dec.entries.iter().enumerate() {
                acc += e.weight();
                if acc >= goal {
                    take = Some(i + 1);
                    break;
                }
            }
            take.ok_or(Error::ThresholdUnreachable {
                nu_min,
                available: acc.sqrt(),
            })?
        }
    };
    let boundary_tie = take < dec.len()
        && dec.entries[take - 1].weight() - dec.entries[take].weight() <= TIE_TOL;
    Ok(Selection {
        indices: dec.entries[..take].iter().map(|e| e.index).collect(),
        boundary_tie,
    })
}

/// Row-major `k x k` complex matrix of a reduced observable.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ReducedMatrix {
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn row_major(&self) -> &[Complex64] {
        &self.data
    }

    /// `max |A_ij - conj(A_ji)|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `<x|A|x>`, real part; `x` need not be normalized.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            let row: Complex64 = (0..self.dim).map(|j| self.get(i, j) * x[j]).sum();
            acc += xi.conj() * row;
        }
        acc.re
    }
}

/// Relative tolerance on reduced-observable hermiticity.
const HERMITIAN_TOL: f64 = 1e-10;

/// Orthonormality tolerance for projector columns.
const ORTHONORMAL_TOL: f64 = 1e-10;

/// The approximation on `k` eigenstates.
///
/// `energies` and `coefficients` follow descending-overlap order, so the
/// energies are generally not sorted. Phases of the projector columns are
/// fixed such that every coefficient `c_q = <E_q|psi0>` is real and non-negative.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub n_sites: usize,
    pub params: Option<SpinChainParams>,
    pub energies: Vec<f64>,
    pub coefficients: Vec<Complex64>,
    /// Captured weight `sqrt(sum_q |c_q|^2)`.
    pub nu: f64,
    pub projector: Option<Vec<StateVector>>,
    pub observables: BTreeMap<String, ReducedMatrix>,
    pub boundary_tie: bool,
}

pub fn build_reduced_model(
    eigs: &EigenpairSet,
    selection: &Selection,
    psi0: &StateVector,
    observables: &[(&str, &OperatorSum)],
) -> Result<ReducedModel> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n_sites = psi0
        .n_sites()
        .ok_or_else(|| Error::InvalidParameter("initial state length is not a power of two".into()))?;
    let mut columns = Vec::with_capacity(selection.len());
    let mut energies = Vec::with_capacity(selection.len());
    let mut coefficients = Vec::with_capacity(selection.len());
    for &idx in &selection.indices {
        let v = eigs.vectors.get(idx).ok_or_else(|| {
            Error::InvalidParameter(format!("selection index {idx} outside the {} pairs", eigs.len()))
        })?;
        if v.len() != psi0.len() {
            return Err(Error::DimensionMismatch {
                expected: psi0.len(),
                actual: v.len(),
            });
        }
        let c = v.dot(psi0);
        let mut col = v.clone();
        if c.norm() > 0.0 {
            col.scale(c / c.norm());
        }
        columns.push(col);
        energies.push(eigs.values[idx]);
        coefficients.push(Complex64::new(c.norm(), 0.0));
    }
    let ortho = orthonormality_error(&columns);
    if ortho > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(ortho));
    }
    let nu = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if nu == 0.0 {
        return Err(Error::EmptySelection);
    }

    let mut reduced = BTreeMap::new();
    for &(name, op) in observables {
        let m = project_operator(op, &columns)?;
        let scale = m.row_major().iter().map(|x| x.norm()).fold(1.0, f64::max);
        let herm = m.hermiticity_error();
        if herm > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(herm));
        }
        reduced.insert(name.to_string(), m);
    }

    Ok(ReducedModel {
        n_sites,
        params: None,
        energies,
        coefficients,
        nu: nu.min(1.0),
        projector: Some(columns),
        observables: reduced,
        boundary_tie: selection.boundary_tie,
    })
}

/// `P* O P` with `k` matrix-free applications and `k^2` inner products.
pub fn project_operator(op: &OperatorSum, columns: &[StateVector]) -> Result<ReducedMatrix> {
    let k = columns.len();
    let mut data = vec![Complex64::new(0.0, 0.0); k * k];
    for (b, vb) in columns.iter().enumerate() {
        if vb.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                actual: vb.len(),
            });
        }
        let ovb = op.apply_vec(vb);
        for (a, va) in columns.iter().enumerate() {
            data[a * k + b] = va.dot(&ovb);
        }
    }
    ReducedMatrix::from_row_major(k, data)
}

impl ReducedModel {
    pub fn with_params(mut self, params: SpinChainParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn k(&self) -> usize {
        self.energies.len()
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_sites
    }

    /// Reduced coefficients `(c_q / nu) exp(-i E_q t)`; `O(k)` work.
    pub fn reduced_state(&self, t: f64) -> Vec<Complex64> {
        self.energies
            .iter()
            .zip(&self.coefficients)
            .map(|(&e, &c)| c / self.nu * Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    /// `P psi~(t)` in the full space; needs the projector columns.
    pub fn full_state(&self, t: f64) -> Result<StateVector> {
        let cols = self.projector.as_ref().ok_or(Error::MissingProjector)?;
        let mut psi = StateVector::zeros(self.dimension());
        for (c, col) in self.reduced_state(t).into_iter().zip(cols) {
            psi.axpy(c, col);
        }
        Ok(psi)
    }

    pub fn observable(&self, name: &str) -> Result<&ReducedMatrix> {
        self.observables
            .get(name)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    /// `<psi~(t)|O~|psi~(t)>`, rejecting non-Hermitian matrices.
    pub fn expectation(&self, name: &str, t: f64) -> Result<f64> {
        let m = self.observable(name)?;
        if m.dim() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: m.dim(),
            });
        }
        let scale = m.row_major().iter().map(|x| x.norm()).fold(1.0, f64::max);
        let herm = m.hermiticity_error();
        if herm > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(herm));
        }
        Ok(m.expectation(&self.reduced_state(t)))
    }

    /// Largest off-diagonal magnitude of `P* H P`, and largest deviation of its
    /// diagonal from the stored energies.
    pub fn hamiltonian_consistency(&self, h: &OperatorSum) -> Result<(f64, f64)> {
        let cols = self.projector.as_ref().ok_or(Error::MissingProjector)?;
        let m = project_operator(h, cols)?;
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if i == j {
                    diag = diag.max((m.get(i, i).re - self.energies[i]).abs());
                } else {
                    off = off.max(m.get(i, j).norm());
                }
            }
        }
        Ok((off, diag))
    }

    /// `max |P*P - I|` of the stored projector.
    pub fn semi_unitarity_error(&self) -> Result<f64> {
        let cols = self.projector.as_ref().ok_or(Error::MissingProjector)?;
        Ok(orthonormality_error(cols))
    }
}
