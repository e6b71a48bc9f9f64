use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExactMode, ExperimentConfig, SolverMode};
use super::output::{header, num, write_csv};
use crate::dynamics::{
    error_report, evolve_exact, expect_full, expect_krylov, expect_reduced, operator_l2_norm, EigenbasisPropagator,
    TimeSeries,
};
use crate::eigen::{dense_full_ed, jd_targeted, EigenpairSet, OverlapWith};
use crate::error::{Error, Result};
use crate::pauli::{OperatorSum, StateVector};
use crate::reduction::{build_reduced_model, overlaps, select, OverlapDecomposition, ReducedModel, Selection};

/// Resolved settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: ExperimentConfig,
    pub override_dense_guard: bool,
    /// Echoed into output headers.
    pub command_line: String,
}

/// What a command produced; a non-empty `violations` list maps to exit status 1.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub violations: Vec<String>,
}

impl Context {
    pub fn new(config: ExperimentConfig, override_dense_guard: bool, command_line: impl Into<String>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            override_dense_guard,
            command_line: command_line.into(),
        })
    }

    fn header(&self) -> String {
        header(&self.command_line, &self.config.to_toml())
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.output.dir.join(name)
    }
}

/// Eigenpairs and the chosen subset for the configured experiment.
pub struct Solved {
    pub h: OperatorSum,
    pub psi0: StateVector,
    pub eigs: EigenpairSet,
    pub decomposition: OverlapDecomposition,
    pub selection: Selection,
}

pub fn solve(ctx: &Context) -> Result<Solved> {
    let cfg = &ctx.config;
    cfg.check_dense_guard(ctx.override_dense_guard)?;
    let h = cfg.hamiltonian()?;
    let psi0 = cfg.initial_state()?;
    let eigs = match cfg.solver.mode {
        SolverMode::Dense => dense_full_ed(&h, ctx.override_dense_guard)?,
        SolverMode::Jd => jd_targeted(&h, &OverlapWith::new(psi0.clone()), &cfg.jd_config())?,
    };
    log::info!("{} eigenpairs, max residual {:.3e}", eigs.len(), eigs.max_residual());
    let decomposition = overlaps(&eigs, &psi0)?;
    let selection = select(&decomposition, cfg.selection_rule())?;
    if selection.boundary_tie {
        log::warn!("selection boundary falls inside a group of equal overlaps");
    }
    Ok(Solved {
        h,
        psi0,
        eigs,
        decomposition,
        selection,
    })
}

fn build_model(ctx: &Context, solved: &Solved, basis: &EigenpairSet, selection: &Selection) -> Result<ReducedModel> {
    let observables = ctx.config.observables(&solved.h)?;
    let refs: Vec<(&str, &OperatorSum)> = observables.iter().map(|(n, o)| (n.as_str(), o)).collect();
    Ok(build_reduced_model(basis, selection, &solved.psi0, &refs)?.with_params(ctx.config.chain.clone()))
}

/// Every computed eigenpair with its weight; selected rows flagged.
pub fn cmd_spectrum(ctx: &Context) -> Result<Outcome> {
    let solved = solve(ctx)?;
    let mut rows: Vec<(usize, f64, f64, bool)> = solved
        .decomposition
        .entries()
        .iter()
        .map(|e| (e.index, e.energy, e.weight(), solved.selection.indices.contains(&e.index)))
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let path = ctx.out("spectrum.csv");
    write_csv(
        &path,
        &ctx.header(),
        &["index", "energy", "weight", "selected"],
        rows.iter()
            .map(|&(i, e, w, s)| vec![i.to_string(), num(e), num(w), u8::from(s).to_string()]),
    )?;
    let nu2: f64 = solved
        .selection
        .indices
        .iter()
        .map(|&i| solved.eigs.vectors[i].dot(&solved.psi0).norm_sqr())
        .sum();
    Ok(Outcome {
        files: vec![path],
        summary: vec![format!(
            "{} states, {} selected, nu = {:.12}",
            rows.len(),
            solved.selection.len(),
            nu2.sqrt()
        )],
        violations: vec![],
    })
}

/// Reduced (and, when feasible, exact) expectation series. With `model`
/// the solve is skipped and only the reduced series is written.
pub fn cmd_evolve(ctx: &Context, model_path: Option<&Path>) -> Result<Outcome> {
    let cfg = &ctx.config;
    let grid = cfg.grid;
    let mut outcome = Outcome::default();
    if let Some(path) = model_path {
        let model = ReducedModel::load(path)?;
        for name in model.observables.keys() {
            let reduced = expect_reduced(&model, name, &grid)?;
            let out = ctx.out(&format!("evolve_{name}.csv"));
            write_csv(
                &out,
                &format!("{}# model: {}\n", ctx.header(), path.display()),
                &["t", "reduced"],
                grid.times().iter().zip(&reduced.values).map(|(t, r)| vec![num(*t), num(*r)]),
            )?;
            outcome.files.push(out);
        }
        outcome.summary.push(format!("model k = {}, nu = {:.12}", model.k(), model.nu));
        return Ok(outcome);
    }

    let solved = solve(ctx)?;
    let model = build_model(ctx, &solved, &solved.eigs, &solved.selection)?;
    if let Some(save) = &cfg.output.save_model {
        if let Some(parent) = save.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        model.save(save, cfg.output.with_projector)?;
        outcome.files.push(save.clone());
    }
    let exact_mode = match cfg.output.exact {
        ExactMode::Auto if cfg.solver.mode == SolverMode::Dense => Some(ExactMode::Auto),
        ExactMode::Auto | ExactMode::None => None,
        ExactMode::Krylov => Some(ExactMode::Krylov),
    };
    let propagator = match exact_mode {
        Some(ExactMode::Auto) => Some(EigenbasisPropagator::new(&solved.eigs, &solved.psi0)?),
        _ => None,
    };
    let exact_states: Option<Vec<StateVector>> =
        propagator.map(|p| grid.times().iter().map(|&t| p.state_at(t)).collect());

    for (name, op) in cfg.observables(&solved.h)? {
        let reduced = expect_reduced(&model, &name, &grid)?;
        let exact: Option<TimeSeries> = match (&exact_states, exact_mode) {
            (Some(states), _) => Some(expect_full(&op, states, &grid, &name)?),
            (None, Some(ExactMode::Krylov)) => {
                Some(expect_krylov(&solved.h, &op, &solved.psi0, &grid, cfg.output.krylov_tol, &name)?)
            }
            _ => None,
        };
        let out = ctx.out(&format!("evolve_{name}.csv"));
        match exact {
            Some(exact) => {
                let rel = reduced.relative_error(&exact)?;
                outcome.summary.push(format!("{name}: max relative error {:.6e}", rel.max()));
                let rows = (0..grid.samples).map(|i| {
                    vec![num(grid.time(i)), num(exact.values[i]), num(reduced.values[i]), num(rel.values[i])]
                });
                write_csv(&out, &ctx.header(), &["t", "exact", "reduced", "rel_error"], rows)?;
            }
            None => {
                let rows = (0..grid.samples).map(|i| vec![num(grid.time(i)), num(reduced.values[i])]);
                write_csv(&out, &ctx.header(), &["t", "reduced"], rows)?;
            }
        }
        outcome.files.push(out);
    }
    outcome
        .summary
        .insert(0, format!("k = {}, nu = {:.12}", model.k(), model.nu));
    Ok(outcome)
}

/// Tolerances of the verification checks.
pub const EQUALITY_TOL: f64 = 1e-9;
pub const SPREAD_TOL: f64 = 1e-9;
pub const RESIDUAL_NORM_TOL: f64 = 1e-10;
pub const BOUND_HEADROOM: f64 = 1e-12;
pub const SUBOPTIMAL_SLACK: f64 = 1e-12;

/// Measured errors against the dense oracle. With `suboptimal`, the weakest
/// selected state is swapped for a random unselected one, and the equality
/// check becomes `measured >= 2 (1 - nu_optimal)`.
pub fn cmd_verify(ctx: &Context, suboptimal: bool) -> Result<Outcome> {
    let cfg = &ctx.config;
    let dim = cfg.chain.dimension();
    if dim > crate::pauli::DENSE_GUARD && !ctx.override_dense_guard {
        return Err(Error::DenseGuard {
            dim,
            limit: crate::pauli::DENSE_GUARD,
        });
    }
    let solved = solve(ctx)?;
    let oracle = match cfg.solver.mode {
        SolverMode::Dense => solved.eigs.clone(),
        SolverMode::Jd => dense_full_ed(&solved.h, ctx.override_dense_guard)?,
    };
    let grid = cfg.grid;
    let exact = evolve_exact(&oracle, &solved.psi0, &grid)?;

    // the suboptimal comparison draws replacement states from the complete oracle basis
    let (basis, decomposition, optimal) = if suboptimal {
        let dec = overlaps(&oracle, &solved.psi0)?;
        let sel = select(&dec, cfg.selection_rule())?;
        (&oracle, dec, sel)
    } else {
        (&solved.eigs, solved.decomposition.clone(), solved.selection.clone())
    };
    let optimal_nu2: f64 = optimal
        .indices
        .iter()
        .map(|&i| basis.vectors[i].dot(&solved.psi0).norm_sqr())
        .sum();
    let optimal_error = 2.0 * (1.0 - optimal_nu2.min(1.0).sqrt());
    let selection = if suboptimal {
        suboptimal_selection(&decomposition, &optimal, cfg.seed)?
    } else {
        optimal
    };
    let model = build_model(ctx, &solved, basis, &selection)?;

    let mut outcome = Outcome::default();
    let mut checks = Vec::new();
    for (name, op) in cfg.observables(&solved.h)? {
        let norm = operator_l2_norm(&op)?;
        let report = error_report(&exact, &model, &name, &op, &grid, norm)?;
        let out = ctx.out(&format!("verify_{name}.csv"));
        let rows = (0..grid.samples).map(|i| {
            vec![
                num(grid.time(i)),
                num(report.state_error_sq.values[i]),
                num(report.predicted_state_error),
                num(report.observable_error.values[i]),
                num(report.observable_bound),
                num(report.observable_bound_unsquared),
                num(report.residual_norm_sq_measured.values[i]),
                num(report.residual_norm_sq),
            ]
        });
        write_csv(
            &out,
            &ctx.header(),
            &[
                "t",
                "state_error_sq",
                "predicted_state_error",
                "observable_error",
                "bound",
                "bound_unsquared",
                "residual_norm_sq",
                "predicted_residual_norm_sq",
            ],
            rows,
        )?;
        outcome.files.push(out);

        let mut entries = Vec::new();
        if suboptimal {
            let mean = report.state_error_sq.mean();
            entries.push((
                format!("{name} suboptimal state error >= optimal"),
                mean,
                optimal_error - SUBOPTIMAL_SLACK,
                mean >= optimal_error - SUBOPTIMAL_SLACK,
            ));
        } else {
            let eq = report.equality_residual();
            entries.push((format!("{name} state error equality"), eq, EQUALITY_TOL, eq <= EQUALITY_TOL));
            let spread = report.state_error_sq.spread();
            entries.push((format!("{name} state error time spread"), spread, SPREAD_TOL, spread <= SPREAD_TOL));
        }
        let worst = report.observable_error.max();
        entries.push((
            format!("{name} observable error within bound"),
            worst,
            report.observable_bound,
            report.bound_violations(report.observable_bound, BOUND_HEADROOM) == 0,
        ));
        let rn = report.residual_norm_error();
        entries.push((format!("{name} residual norm identity"), rn, RESIDUAL_NORM_TOL, rn <= RESIDUAL_NORM_TOL));
        let unsquared = report.bound_violations(report.observable_bound_unsquared, BOUND_HEADROOM);
        outcome.summary.push(format!(
            "INFO {name}: nu = {:.12}, norm = {norm}, bound = {:.6e}, unsquared bound = {:.6e} ({unsquared} samples above)",
            report.nu, report.observable_bound, report.observable_bound_unsquared
        ));
        checks.extend(entries);
    }
    let mut summary_rows = Vec::new();
    for (label, value, limit, pass) in checks {
        let line = format!("{} {label}: {value:.3e} (limit {limit:.3e})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            outcome.violations.push(line.clone());
        }
        outcome.summary.push(line);
        summary_rows.push(vec![label, num(value), num(limit), u8::from(pass).to_string()]);
    }
    let out = ctx.out("verify_summary.csv");
    write_csv(&out, &ctx.header(), &["check", "value", "limit", "pass"], summary_rows)?;
    outcome.files.push(out);
    Ok(outcome)
}

fn suboptimal_selection(decomposition: &OverlapDecomposition, optimal: &Selection, seed: u64) -> Result<Selection> {
    let mut indices = optimal.indices.clone();
    let others: Vec<usize> = decomposition
        .entries()
        .iter()
        .filter(|e| !indices.contains(&e.index) && e.weight() > 0.0)
        .map(|e| e.index)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = others.choose(&mut rng).ok_or_else(|| {
        Error::InvalidParameter("no unselected state with nonzero overlap to swap in".into())
    })?;
    *indices.last_mut().expect("selection is non-empty") = *pick;
    Ok(Selection::from_indices(indices))
}
