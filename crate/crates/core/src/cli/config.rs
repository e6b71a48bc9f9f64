use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::eigen::{JdConfig, Preconditioner, StopRule};
use crate::error::{Error, Result};
use crate::pauli::{
    build_hamiltonian, build_initial_state, build_sx2_observable, OperatorSum, SpinChainParams, StateVector, DENSE_GUARD,
};
use crate::reduction::SelectionRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Drives every stochastic choice (solver restart injections, suboptimal subsets).
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chain")]
    pub chain: SpinChainParams,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub grid: TimeGrid,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

fn default_chain() -> SpinChainParams {
    SpinChainParams::critical(10, 0.1)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            chain: default_chain(),
            initial_state: InitialStateConfig::default(),
            solver: SolverConfig::default(),
            selection: SelectionConfig::default(),
            grid: TimeGrid::default(),
            observables: ObservablesConfig::default(),
            output: OutputConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    /// Only `all-up` is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Text file with one `re im` amplitude per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            preset: Some("all-up".into()),
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    #[default]
    Jd,
    /// Full dense diagonalization; refuses dimensions above the dense guard without the override.
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub mode: SolverMode,
    pub residual_tol: f64,
    pub max_subspace: usize,
    pub restart_size: usize,
    pub correction_iters: usize,
    pub max_outer_iters: usize,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    pub max_stagnations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let jd = JdConfig::count(1);
        Self {
            mode: SolverMode::Jd,
            residual_tol: jd.residual_tol,
            max_subspace: jd.max_subspace,
            restart_size: jd.restart_size,
            correction_iters: jd.correction_iters,
            max_outer_iters: jd.max_outer_iters,
            preconditioner: jd.preconditioner,
            max_stagnations: jd.max_stagnations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_min: Option<f64>,
    /// `verify` only: swap the weakest optimal state for a random other one.
    #[serde(default)]
    pub suboptimal: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: Some(8),
            nu_min: None,
            suboptimal: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    /// `sx2` (`S_x^2 / N`) or `energy` (the Hamiltonian).
    #[serde(default = "default_builtin")]
    pub builtin: Vec<String>,
    /// Name to Pauli-sum text file.
    #[serde(default)]
    pub files: BTreeMap<String, PathBuf>,
}

fn default_builtin() -> Vec<String> {
    vec!["sx2".into()]
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        Self {
            builtin: default_builtin(),
            files: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExactMode {
    /// Eigenbasis propagation in dense mode, no exact column otherwise.
    #[default]
    Auto,
    None,
    /// Matrix-free Lanczos propagation; no dimension cap.
    Krylov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub exact: ExactMode,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_model: Option<PathBuf>,
    #[serde(default)]
    pub with_projector: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_krylov_tol() -> f64 {
    1e-12
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            exact: ExactMode::Auto,
            krylov_tol: default_krylov_tol(),
            save_model: None,
            with_projector: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub min_sites: usize,
    pub max_sites: usize,
    pub matvec_reps: usize,
    pub evolve_reps: usize,
    /// Any of `matvec`, `jd`, `reduce`, `evolve`.
    pub phases: Vec<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            min_sites: 8,
            max_sites: 14,
            matvec_reps: 20,
            evolve_reps: 50,
            phases: vec!["matvec".into(), "jd".into(), "reduce".into(), "evolve".into()],
        }
    }
}

pub const BENCH_PHASES: [&str; 4] = ["matvec", "jd", "reduce", "evolve"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.chain.validate().map_err(|e| Error::Config(e.to_string()))?;
        match (&self.initial_state.preset, &self.initial_state.file) {
            (Some(p), None) if p == "all-up" => {}
            (Some(p), None) => return cfg(format!("unknown initial-state preset {p:?}")),
            (None, Some(_)) => {}
            _ => return cfg("initial_state needs exactly one of `preset` or `file`".into()),
        }
        match (self.selection.k, self.selection.nu_min) {
            (Some(0), None) => return cfg("selection.k must be at least 1".into()),
            (Some(k), None) if k > self.chain.dimension() => {
                return cfg(format!("selection.k = {k} exceeds the dimension {}", self.chain.dimension()))
            }
            (None, Some(nu)) if !(nu > 0.0 && nu <= 1.0) => return cfg(format!("selection.nu_min = {nu} outside (0, 1]")),
            (Some(_), None) | (None, Some(_)) => {}
            _ => return cfg("selection needs exactly one of `k` or `nu_min`".into()),
        }
        self.jd_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        for name in &self.observables.builtin {
            if name != "sx2" && name != "energy" {
                return cfg(format!("unknown builtin observable {name:?}"));
            }
        }
        if self.observables.builtin.is_empty() && self.observables.files.is_empty() {
            return cfg("at least one observable is required".into());
        }
        if !(self.output.krylov_tol > 0.0) {
            return cfg("output.krylov_tol must be positive".into());
        }
        let b = &self.bench;
        if b.min_sites < 2 || b.min_sites > b.max_sites || b.max_sites > 30 {
            return cfg(format!("bench sites {}..={} invalid", b.min_sites, b.max_sites));
        }
        if b.matvec_reps == 0 || b.evolve_reps == 0 {
            return cfg("bench repetitions must be positive".into());
        }
        if let Some(bad) = b.phases.iter().find(|p| !BENCH_PHASES.contains(&p.as_str())) {
            return cfg(format!("unknown bench phase {bad:?}"));
        }
        Ok(())
    }

    pub fn selection_rule(&self) -> SelectionRule {
        match (self.selection.k, self.selection.nu_min) {
            (_, Some(nu)) => SelectionRule::Threshold(nu),
            (Some(k), None) => SelectionRule::Count(k),
            (None, None) => SelectionRule::Count(8),
        }
    }

    pub fn jd_config(&self) -> JdConfig {
        let s = &self.solver;
        JdConfig {
            stop: match self.selection_rule() {
                SelectionRule::Count(k) => StopRule::Count(k),
                SelectionRule::Threshold(nu) => StopRule::Weight(nu),
            },
            residual_tol: s.residual_tol,
            max_subspace: s.max_subspace,
            restart_size: s.restart_size,
            correction_iters: s.correction_iters,
            max_outer_iters: s.max_outer_iters,
            preconditioner: s.preconditioner,
            seed: self.seed,
            max_stagnations: s.max_stagnations,
        }
    }

    /// Dense mode refuses dimensions above the guard unless overridden.
    pub fn check_dense_guard(&self, override_guard: bool) -> Result<()> {
        let dim = self.chain.dimension();
        if self.solver.mode == SolverMode::Dense && dim > DENSE_GUARD && !override_guard {
            return Err(Error::DenseGuard {
                dim,
                limit: DENSE_GUARD,
            });
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<OperatorSum> {
        build_hamiltonian(&self.chain)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        match &self.initial_state.file {
            None => build_initial_state(self.chain.sites),
            Some(path) => {
                let psi = read_amplitudes(path)?;
                if psi.len() != self.chain.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: self.chain.dimension(),
                        actual: psi.len(),
                    });
                }
                Ok(psi)
            }
        }
    }

    /// Named observables in a fixed order: builtins first, then files by name.
    pub fn observables(&self, h: &OperatorSum) -> Result<Vec<(String, OperatorSum)>> {
        let mut out = Vec::new();
        for name in &self.observables.builtin {
            let op = match name.as_str() {
                "sx2" => build_sx2_observable(self.chain.sites)?,
                "energy" => h.clone(),
                other => return Err(Error::Config(format!("unknown builtin observable {other:?}"))),
            };
            out.push((name.clone(), op));
        }
        for (name, path) in &self.observables.files {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let op: OperatorSum = text.parse()?;
            if op.n_sites() != self.chain.sites {
                return Err(Error::Config(format!(
                    "observable {name:?} acts on {} sites, chain has {}",
                    op.n_sites(),
                    self.chain.sites
                )));
            }
            out.push((name.clone(), op));
        }
        Ok(out)
    }
}

fn read_amplitudes(path: &Path) -> Result<StateVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut amps = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("{}:{}: bad number {s:?}", path.display(), lineno + 1)))
        };
        let (re, im) = match parts.as_slice() {
            [re] => (parse(re)?, 0.0),
            [re, im] => (parse(re)?, parse(im)?),
            _ => return Err(Error::Config(format!("{}:{}: expected `re [im]`", path.display(), lineno + 1))),
        };
        amps.push(num_complex::Complex64::new(re, im));
    }
    StateVector::physical(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Coupling;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parses_a_written_config() {
        let text = r#"
seed = 7

[chain]
sites = 6
j = 1.0
b = 1.0
gamma_x = 1.0
gamma_y = 0.0
coupling = { mode = "power-law", exponent = 0.9 }

[solver]
mode = "dense"
residual_tol = 1e-11
max_subspace = 40
restart_size = 12
correction_iters = 20
max_outer_iters = 5000
max_stagnations = 3

[selection]
nu_min = 0.99

[grid]
t_start = 0.0
t_end = 5.0
samples = 11
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.chain.coupling, Coupling::PowerLaw { exponent: 0.9 });
        assert_eq!(c.solver.mode, SolverMode::Dense);
        assert_eq!(c.selection_rule(), SelectionRule::Threshold(0.99));
        assert_eq!(c.jd_config().stop, StopRule::Weight(0.99));
        assert_eq!(c.jd_config().seed, 7);
        assert_eq!(c.grid.samples, 11);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("unknown = 1").is_err());
        let mut c = ExperimentConfig::default();
        c.selection.nu_min = Some(0.9);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.initial_state.preset = Some("neel".into());
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.observables.builtin = vec!["sz".into()];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.chain.sites = 13;
        c.solver.mode = SolverMode::Dense;
        assert!(matches!(c.check_dense_guard(false), Err(Error::DenseGuard { .. })));
        assert!(c.check_dense_guard(true).is_ok());
        c.solver.mode = SolverMode::Jd;
        assert!(c.check_dense_guard(false).is_ok());
    }

    #[test]
    fn amplitude_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.txt");
        std::fs::write(&path, "# plus state on two sites\n0.5 0\n0.5\n0 0.5\n0.5 0.0\n").unwrap();
        let mut c = ExperimentConfig::default();
        c.chain.sites = 2;
        c.selection.k = Some(2);
        c.initial_state = InitialStateConfig {
            preset: None,
            file: Some(path.clone()),
        };
        c.validate().unwrap();
        let psi = c.initial_state().unwrap();
        assert_eq!(psi.len(), 4);
        std::fs::write(&path, "1 0\n1 0\n").unwrap();
        assert!(c.initial_state().is_err());
    }
}
