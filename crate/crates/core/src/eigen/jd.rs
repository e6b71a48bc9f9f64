use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correction::solve_correction;
use super::{EigenpairSet, Target};
use crate::error::{Error, Result};
use crate::pauli::state::{axpy, dot};
use crate::pauli::{LinearOperator, StateVector};

/// Slack on the captured-weight comparison so that a complete basis reaches `nu_min = 1`.
pub(crate) const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Converge exactly this many pairs.
    Count(usize),
    /// Converge pairs until the summed weight reaches `nu_min^2`.
    Weight(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    #[default]
    None,
    /// `diag(H) - theta`, projected onto the complement of the locked space.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JdConfig {
    pub stop: StopRule,
    /// Convergence when `||H u - theta u|| <= residual_tol * ||H||`, with
    /// `||H||` estimated from the Ritz values and matvecs seen so far.
    pub residual_tol: f64,
    pub max_subspace: usize,
    pub restart_size: usize,
    pub correction_iters: usize,
    pub max_outer_iters: usize,
    pub preconditioner: Preconditioner,
    /// Seeds the random directions injected on empty starts and stagnation.
    pub seed: u64,
    /// Consecutive stagnated corrections tolerated before giving up.
    pub max_stagnations: usize,
}

impl JdConfig {
    pub fn count(k: usize) -> Self {
        Self {
            stop: StopRule::Count(k),
            residual_tol: 1e-10,
            max_subspace: 60,
            restart_size: 20,
            correction_iters: 25,
            max_outer_iters: 20_000,
            preconditioner: Preconditioner::None,
            seed: 0,
            max_stagnations: 3,
        }
    }

    pub fn weight(nu_min: f64) -> Self {
        Self {
            stop: StopRule::Weight(nu_min),
            ..Self::count(1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.stop {
            StopRule::Count(0) => return bad("pair count must be at least 1".into()),
            StopRule::Weight(nu) if !(nu > 0.0 && nu <= 1.0) => {
                return bad(format!("weight threshold {nu} outside (0, 1]"))
            }
            _ => {}
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return bad(format!("residual tolerance {} must be positive", self.residual_tol));
        }
        if self.restart_size == 0 || self.restart_size >= self.max_subspace {
            return bad(format!(
                "restart size {} must be in 1..{}",
                self.restart_size, self.max_subspace
            ));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be positive".into());
        }
        Ok(())
    }
}

/// Orthogonalizes `candidate` against the locked vectors of `found`.
///
/// The result is rescaled to the candidate's norm. Fails with
/// [`Error::DeflationCollapse`] when nothing survives the projection.
pub fn lock_and_deflate(found: &EigenpairSet, candidate: &StateVector) -> Result<StateVector> {
    if found.is_empty() {
        return Ok(candidate.clone());
    }
    let norm = candidate.norm();
    let mut out = candidate.clone();
    let refs: Vec<&StateVector> = found.vectors.iter().collect();
    orthogonalize(out.as_mut_slice(), &refs);
    let left = out.norm();
    if norm == 0.0 || left <= 1e-10 * norm {
        return Err(Error::DeflationCollapse);
    }
    out.scale(Complex64::new(norm / left, 0.0));
    Ok(out)
}

/// Two passes of classical Gram-Schmidt.
fn orthogonalize(x: &mut [Complex64], against: &[&StateVector]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q.as_slice(), x);
            axpy(-c, q.as_slice(), x);
        }
    }
}

/// Orthonormal search space `V`, its image `H V`, and the projected matrix `V* H V`.
struct Search {
    v: Vec<StateVector>,
    hv: Vec<StateVector>,
    gram: Mat<Complex64>,
}

impl Search {
    fn new() -> Self {
        Self {
            v: Vec::new(),
            hv: Vec::new(),
            gram: Mat::zeros(0, 0),
        }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Adds the part of `t` orthogonal to `locked` and `V`. Returns `false`
    /// when that part is negligible.
    fn expand<Op: LinearOperator + ?Sized>(
        &mut self,
        op: &Op,
        locked: &[StateVector],
        mut t: StateVector,
        hnorm: &mut f64,
    ) -> bool {
        let before = t.norm();
        if before == 0.0 || !before.is_finite() {
            return false;
        }
        let against: Vec<&StateVector> = locked.iter().chain(self.v.iter()).collect();
        orthogonalize(t.as_mut_slice(), &against);
        let after = t.norm();
        if after <= 1e-10 * before {
            return false;
        }
        t.scale(Complex64::new(1.0 / after, 0.0));
        let ht = op.apply_vec(&t);
        *hnorm = hnorm.max(ht.norm());

        let m = self.len();
        let mut gram = Mat::<Complex64>::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = self.gram[(i, j)];
            }
            let g = self.v[i].dot(&ht);
            gram[(i, m)] = g;
            gram[(m, i)] = g.conj();
        }
        gram[(m, m)] = Complex64::new(t.dot(&ht).re, 0.0);
        self.gram = gram;
        self.v.push(t);
        self.hv.push(ht);
        true
    }

    fn combine(vectors: &[StateVector], coeffs: &Mat<Complex64>, col: usize) -> StateVector {
        let mut u = StateVector::zeros(vectors[0].len());
        for (i, v) in vectors.iter().enumerate() {
            u.axpy(coeffs[(i, col)], v);
        }
        u
    }

    /// Replaces the space by the Ritz vectors in `keep`; the projected matrix becomes diagonal.
    fn compress(&mut self, coeffs: &Mat<Complex64>, thetas: &[f64], keep: &[usize]) {
        let v: Vec<StateVector> = keep.iter().map(|&c| Self::combine(&self.v, coeffs, c)).collect();
        let hv: Vec<StateVector> = keep.iter().map(|&c| Self::combine(&self.hv, coeffs, c)).collect();
        let k = keep.len();
        self.gram = Mat::from_fn(k, k, |i, j| {
            if i == j {
                Complex64::new(thetas[keep[i]], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        self.v = v;
        self.hv = hv;
    }
}

/// Jacobi-Davidson iteration that converges, one pair at a time, the Ritz pair
/// the target scores highest.
///
/// Returned pairs are in discovery order. Each outer step extracts Ritz pairs
/// from the search space, takes the best-scoring one, and either locks it
/// (residual below tolerance) or expands the space with an approximate
/// solution of the deflated correction equation. When the space hits
/// `max_subspace` it is shrunk to `restart_size` Ritz vectors, mixing the
/// best-scoring ones with the Ritz values nearest the current target so that
/// near-degenerate neighbours stay resolved; a target anchor (the reference state for overlap targeting) is reinjected
/// after every shrink so its unexplained remainder is never lost.
pub fn jd_targeted<Op: LinearOperator + ?Sized>(
    op: &Op,
    target: &dyn Target,
    config: &JdConfig,
) -> Result<EigenpairSet> {
    config.validate()?;
    let n = op.dim();
    if let StopRule::Count(k) = config.stop {
        if k > n {
            return Err(Error::InvalidParameter(format!("requested {k} pairs of a {n}-dimensional operator")));
        }
    }
    if matches!(config.stop, StopRule::Weight(_)) && !target.is_weight() {
        return Err(Error::InvalidParameter(
            "weight-threshold stopping needs an overlap target".into(),
        ));
    }
    if let Some(a) = target.anchor() {
        if a.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: a.len() });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let diag = match config.preconditioner {
        Preconditioner::Diagonal => op.diagonal(),
        Preconditioner::None => None,
    };
    let mut found = EigenpairSet::default();
    let mut search = Search::new();
    let mut hnorm: f64 = 0.0;
    let mut stagnations = 0;
    let mut captured = 0.0;

    for iter in 0..config.max_outer_iters {
        if search.len() == 0 {
            seed_space(op, target, &found, &mut search, &mut rng, &mut hnorm)?;
        }

        let eig = search
            .gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::DenseEigen(format!("{e:?}")))?;
        let thetas: Vec<f64> = eig.S().column_vector().iter().map(|s| s.re).collect();
        let coeffs = eig.U().to_owned();
        hnorm = thetas.iter().fold(hnorm, |acc, t| acc.max(t.abs()));
        let scores = target.score_ritz(&thetas, &search.v, coeffs.as_ref());
        let order = rank(&scores, &thetas);
        let best = order[0];
        let theta = thetas[best];

        let mut u = Search::combine(&search.v, &coeffs, best);
        let hu = Search::combine(&search.hv, &coeffs, best);
        let mut r = hu;
        r.axpy(Complex64::new(-theta, 0.0), &u);
        let rnorm = r.norm();
        log::trace!("jd: iter {iter} m={} theta={theta:.10} score={:.4e} res={rnorm:.3e}", search.len(), scores[best]);
        let space_full = search.len() + found.len() >= n;

        if rnorm <= config.residual_tol * hnorm.max(f64::MIN_POSITIVE) || space_full {
            u.normalize();
            log::debug!(
                "jd: locked pair {} at iteration {iter}: theta = {theta:.12}, score = {:.3e}, residual = {rnorm:.2e}",
                found.len(),
                scores[best]
            );
            found.push(theta, u, scores[best], rnorm);
            captured += scores[best];
            let done = match config.stop {
                StopRule::Count(k) => found.len() >= k,
                StopRule::Weight(nu) => captured >= nu * nu - WEIGHT_SLACK,
            };
            if done {
                return Ok(found);
            }
            if found.len() >= n {
                return Err(Error::ThresholdUnreachable {
                    nu_min: match config.stop {
                        StopRule::Weight(nu) => nu,
                        StopRule::Count(_) => 1.0,
                    },
                    available: captured.sqrt(),
                });
            }
            let rest: Vec<usize> = order[1..].to_vec();
            search.compress(&coeffs, &thetas, &rest);
            stagnations = 0;
            continue;
        }

        if search.len() >= config.max_subspace {
            let keep = restart_set(&order, &thetas, config.restart_size);
            search.compress(&coeffs, &thetas, &keep);
            if let Some(a) = target.anchor() {
                search.expand(op, &found.vectors, a.clone(), &mut hnorm);
            }
        }

        let mut locked: Vec<&StateVector> = found.vectors.iter().collect();
        locked.push(&u);
        orthogonalize(r.as_mut_slice(), &locked);
        let t = solve_correction(op, &locked, theta, &r, config.correction_iters, diag.as_deref());
        if !search.expand(op, &found.vectors, t, &mut hnorm) {
            stagnations += 1;
            log::debug!("jd: correction stagnated at iteration {iter} ({stagnations} in a row)");
            if stagnations > config.max_stagnations {
                return Err(Error::Breakdown { iterations: iter + 1 });
            }
            inject_random(op, &found, &mut search, &mut rng, &mut hnorm);
        } else {
            stagnations = 0;
        }
    }
    Err(Error::NotConverged {
        iterations: config.max_outer_iters,
        partial: Box::new(found),
    })
}

/// Current target first, then alternately the next-best score and the Ritz
/// value nearest the target, until `size` indices are chosen.
fn restart_set(order: &[usize], thetas: &[f64], size: usize) -> Vec<usize> {
    let best = order[0];
    let mut near: Vec<usize> = order[1..].to_vec();
    near.sort_by(|&a, &b| {
        (thetas[a] - thetas[best])
            .abs()
            .total_cmp(&(thetas[b] - thetas[best]).abs())
            .then(a.cmp(&b))
    });
    let mut keep = vec![best];
    let (mut by_score, mut by_dist) = (order[1..].iter(), near.iter());
    while keep.len() < size.min(order.len()) {
        let next = if keep.len() % 2 == 1 { by_score.next() } else { by_dist.next() };
        match next {
            Some(&j) if !keep.contains(&j) => keep.push(j),
            Some(_) => {}
            None => break,
        }
    }
    keep
}

/// Ritz indices by descending score; equal scores prefer the lower Ritz value, then the index.
fn rank(scores: &[f64], thetas: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(thetas[a].total_cmp(&thetas[b]))
            .then(a.cmp(&b))
    });
    order
}

fn seed_space<Op: LinearOperator + ?Sized>(
    op: &Op,
    target: &dyn Target,
    found: &EigenpairSet,
    search: &mut Search,
    rng: &mut ChaCha8Rng,
    hnorm: &mut f64,
) -> Result<()> {
    if let Some(a) = target.anchor() {
        if search.expand(op, &found.vectors, a.clone(), hnorm) {
            return Ok(());
        }
    }
    if inject_random(op, found, search, rng, hnorm) {
        Ok(())
    } else {
        Err(Error::DeflationCollapse)
    }
}

fn inject_random<Op: LinearOperator + ?Sized>(
    op: &Op,
    found: &EigenpairSet,
    search: &mut Search,
    rng: &mut ChaCha8Rng,
    hnorm: &mut f64,
) -> bool {
    (0..8).any(|_| {
        let v = StateVector::random(op.dim(), rng);
        search.expand(op, &found.vectors, v, hnorm)
    })
}
