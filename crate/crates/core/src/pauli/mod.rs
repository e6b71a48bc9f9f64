//! Pauli-string operators with matrix-free application.
//!
//! Basis convention: site `i` is bit `i` of the basis index, and a spin-up site
//! is bit value 0, so `Z|up> = +|up>` and the fully polarized state is index 0.

mod chain;
pub(crate) mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use chain::{build_hamiltonian, build_initial_state, build_sx2_observable, Coupling, SpinChainParams};
pub use state::StateVector;

/// Largest dimension `to_dense` will build without an explicit override.
pub const DENSE_GUARD: usize = 4096;

/// Sites are stored in `u64` masks; the state vector bounds practical sizes far below this.
pub const MAX_SITES: usize = 40;

const CHUNK: usize = 1 << 12;

/// Anything that can act on a vector without exposing its entries.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Diagonal entries, when they are cheap to produce (used by the Jacobi preconditioner).
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    fn apply_vec(&self, x: &StateVector) -> StateVector {
        let mut y = StateVector::zeros(self.dim());
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-site Paulis in symplectic form: X and Y set the
/// `x` bit, Z and Y set the `z` bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn from_axes(axes: &[Pauli]) -> Self {
        let mut s = Self::IDENTITY;
        for (site, &p) in axes.iter().enumerate() {
            s = s.with(site, p);
        }
        s
    }

    /// Single-site operator `p` on `site`.
    pub fn single(site: usize, p: Pauli) -> Self {
        Self::IDENTITY.with(site, p)
    }

    /// `p_i p_j` on two distinct sites.
    pub fn pair(i: usize, j: usize, p: Pauli) -> Self {
        debug_assert_ne!(i, j);
        Self::IDENTITY.with(i, p).with(j, p)
    }

    fn with(mut self, site: usize, p: Pauli) -> Self {
        let bit = 1u64 << site;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Pauli::Z => self.z |= bit,
        }
        self
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn axis(&self, site: usize) -> Pauli {
        let bit = 1u64 << site;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn axes(&self, n_sites: usize) -> Vec<Pauli> {
        (0..n_sites).map(|s| self.axis(s)).collect()
    }

    /// Highest site touched plus one.
    pub fn support_len(&self) -> usize {
        64 - (self.x | self.z).leading_zeros() as usize
    }

    /// `i^{#Y}`: with `Y = iXZ`, `P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>`.
    fn y_phase(&self) -> Complex64 {
        match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn label(&self, n_sites: usize) -> String {
        self.axes(n_sites).into_iter().map(Pauli::symbol).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: f64, string: PauliString) -> Self {
        Self { coeff, string }
    }
}

/// One group of terms sharing a flip mask; the group contributes
/// `sum_e w_e (-1)^{|b & z_e|} v[b]` to `out[b ^ x]`.
#[derive(Clone, Debug)]
struct FlipGroup {
    x: u64,
    entries: Vec<(Complex64, u64)>,
}

/// Hermitian operator `sum_t c_t P_t` with real coefficients on `n_sites` sites.
///
/// Construction canonicalizes: duplicate strings are merged, zero
/// coefficients dropped, and terms sorted by their masks.
#[derive(Clone, Debug)]
pub struct OperatorSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
    groups: Vec<FlipGroup>,
}

impl PartialEq for OperatorSum {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.terms == other.terms
    }
}

impl OperatorSum {
    pub fn new(n_sites: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "site count {n_sites} outside 1..={MAX_SITES}"
            )));
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for t in terms {
            if !t.coeff.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite coefficient {} on {}",
                    t.coeff,
                    t.string.label(n_sites)
                )));
            }
            if t.string.support_len() > n_sites {
                return Err(Error::InvalidParameter(format!(
                    "Pauli string touches site {} of a {n_sites}-site chain",
                    t.string.support_len() - 1
                )));
            }
            *merged.entry(t.string).or_insert(0.0) += t.coeff;
        }
        let terms: Vec<PauliTerm> = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(string, coeff)| PauliTerm { coeff, string })
            .collect();

        let mut groups: Vec<FlipGroup> = Vec::new();
        for t in &terms {
            let w = t.string.y_phase() * t.coeff;
            match groups.iter_mut().find(|g| g.x == t.string.x) {
                Some(g) => g.entries.push((w, t.string.z)),
                None => groups.push(FlipGroup {
                    x: t.string.x,
                    entries: vec![(w, t.string.z)],
                }),
            }
        }
        Ok(Self {
            n_sites,
            terms,
            groups,
        })
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, [PauliTerm::new(1.0, PauliString::IDENTITY)])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn coefficient(&self, string: PauliString) -> f64 {
        self.terms
            .iter()
            .find(|t| t.string == string)
            .map_or(0.0, |t| t.coeff)
    }

    /// True when every term has an even number of Y factors, so the matrix is real.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.string.y_count() % 2 == 0)
    }

    /// `sum |c_t|`, an upper bound on the spectral radius.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.terms.iter().map(|t| PauliTerm::new(t.coeff * factor, t.string)),
        )
    }

    /// Matrix-free `op * v`; cost `O(|terms| n)` with no extra storage besides the output.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: v.len(),
            });
        }
        Ok(self.apply_vec(v))
    }

    /// Dense matrix of the operator; refuses dimensions above [`DENSE_GUARD`]
    /// unless `override_guard` is set.
    pub fn to_dense(&self, override_guard: bool) -> Result<Mat<Complex64>> {
        let n = self.dimension();
        if n > DENSE_GUARD && !override_guard {
            return Err(Error::DenseGuard {
                dim: n,
                limit: DENSE_GUARD,
            });
        }
        let mut m = Mat::<Complex64>::zeros(n, n);
        for g in &self.groups {
            for col in 0..n {
                let row = col ^ g.x as usize;
                m[(row, col)] += group_weight(&g.entries, col as u64);
            }
        }
        Ok(m)
    }
}

#[inline]
fn group_weight(entries: &[(Complex64, u64)], b: u64) -> Complex64 {
    entries.iter().fold(Complex64::new(0.0, 0.0), |acc, &(w, z)| {
        if (b & z).count_ones() & 1 == 0 {
            acc + w
        } else {
            acc - w
        }
    })
}

impl LinearOperator for OperatorSum {
    fn dim(&self) -> usize {
        self.dimension()
    }

    // Gather form: each output entry sums its contributions in fixed term
    // order, so the result does not depend on how chunks map to threads.
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let base = c * CHUNK;
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
            for g in &self.groups {
                for (off, o) in out.iter_mut().enumerate() {
                    let b = (base + off) ^ g.x as usize;
                    *o += group_weight(&g.entries, b as u64) * x[b];
                }
            }
        });
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let n = self.dimension();
        let mut d = vec![0.0; n];
        if let Some(g) = self.groups.iter().find(|g| g.x == 0) {
            d.iter_mut()
                .enumerate()
                .for_each(|(b, di)| *di = group_weight(&g.entries, b as u64).re);
        }
        Some(d)
    }
}

/// Dense matrix viewed as an operator; used for small test problems and oracles.
#[derive(Clone, Debug)]
pub struct DenseOperator(pub Mat<Complex64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.0.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.0.nrows()).map(|i| self.0[(i, i)].re).collect())
    }
}

impl fmt::Display for OperatorSum {
    /// One `coefficient label` pair per line, the format read by [`OperatorSum::from_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{:.17e} {}", t.coeff, t.string.label(self.n_sites))?;
        }
        Ok(())
    }
}

impl FromStr for OperatorSum {
    type Err = Error;

    /// Parses lines of `coefficient LABEL`, where character `i` of the label
    /// acts on site `i`. Blank lines and `#` comments are ignored; all labels
    /// must share one length.
    fn from_str(s: &str) -> Result<Self> {
        let mut n_sites = None;
        let mut terms = Vec::new();
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::InvalidParameter(format!("line {}: {what}", lineno + 1));
            let mut parts = line.split_whitespace();
            let (Some(c), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected `coefficient LABEL`"));
            };
            let coeff: f64 = c.parse().map_err(|_| bad("bad coefficient"))?;
            let axes = label
                .chars()
                .map(Pauli::from_char)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("label must use I, X, Y, Z"))?;
            match n_sites {
                None => n_sites = Some(axes.len()),
                Some(n) if n != axes.len() => return Err(bad("label length differs")),
                _ => {}
            }
            terms.push(PauliTerm::new(coeff, PauliString::from_axes(&axes)));
        }
        let n = n_sites.ok_or_else(|| Error::InvalidParameter("no terms".into()))?;
        OperatorSum::new(n, terms)
    }
}
