use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::commands::{Context, Outcome};
use super::config::ExperimentConfig;
use super::output::{num, write_csv};
use crate::dynamics::evolve_reduced;
use crate::eigen::{jd_targeted, EigenpairSet, OverlapWith};
use crate::error::{Error, Result};
use crate::pauli::{
    build_hamiltonian, build_initial_state, build_sx2_observable, Coupling, LinearOperator, StateVector,
};
use crate::reduction::{build_reduced_model, overlaps, select, Selection, SelectionRule};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub sites: usize,
    pub dim: usize,
    pub phase: &'static str,
    /// Median seconds per repetition.
    pub seconds: f64,
    pub peak_rss_kb: Option<u64>,
}

/// `VmHWM` of the current process, where procfs exists.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with("VmHWM:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Times the configured phases for every chain length in
/// `bench.min_sites..=bench.max_sites`. The chain must use power-law couplings.
///
/// Without the `jd` phase, `reduce` and `evolve` run on a stand-in set of
/// `k` computational basis states; their cost depends only on `k` and `n`,
/// not on the vectors being eigenvectors.
pub fn run_bench(config: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    if !matches!(config.chain.coupling, Coupling::PowerLaw { .. }) {
        return Err(Error::Config("bench needs a power-law coupling".into()));
    }
    let b = &config.bench;
    let has = |p: &str| b.phases.iter().any(|x| x == p);
    let k = match config.selection_rule() {
        SelectionRule::Count(k) => k,
        SelectionRule::Threshold(_) => 8,
    };
    let mut rows = Vec::new();
    for sites in b.min_sites..=b.max_sites {
        let mut params = config.chain.clone();
        params.sites = sites;
        let dim = params.dimension();
        let h = build_hamiltonian(&params)?;
        let psi0 = build_initial_state(sites)?;
        let mut row = |phase: &'static str, seconds: f64| {
            log::info!("bench N={sites} {phase}: {seconds:.3e} s");
            rows.push(BenchRow {
                sites,
                dim,
                phase,
                seconds,
                peak_rss_kb: peak_rss_kb(),
            });
        };

        if has("matvec") {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let x = StateVector::random(dim, &mut rng);
            let mut y = vec![num_complex::Complex64::new(0.0, 0.0); dim];
            h.apply_into(x.as_slice(), &mut y);
            let times = (0..b.matvec_reps)
                .map(|_| timed(|| h.apply_into(x.as_slice(), &mut y)).1)
                .collect();
            row("matvec", median(times));
        }

        let eigs = if has("jd") {
            let mut jd = config.jd_config();
            jd.stop = crate::eigen::StopRule::Count(k.min(dim));
            let (eigs, secs) = timed(|| jd_targeted(&h, &OverlapWith::new(psi0.clone()), &jd));
            let eigs = eigs?;
            row("jd", secs);
            eigs
        } else {
            let diag = h.diagonal().expect("Pauli sums expose their diagonal");
            let mut set = EigenpairSet::default();
            for (i, &d) in diag.iter().take(k.min(dim)).enumerate() {
                set.push(d, StateVector::basis(dim, i), 0.0, 0.0);
            }
            set
        };

        if has("reduce") || has("evolve") {
            let sx2 = build_sx2_observable(sites)?;
            let selection = if has("jd") {
                select(&overlaps(&eigs, &psi0)?, SelectionRule::Count(eigs.len()))?
            } else {
                Selection::from_indices((0..eigs.len()).collect())
            };
            let (model, secs) = timed(|| build_reduced_model(&eigs, &selection, &psi0, &[("sx2", &sx2)]));
            let model = model?;
            if has("reduce") {
                row("reduce", secs);
            }
            if has("evolve") {
                let m = model.observable("sx2")?;
                let times = (0..b.evolve_reps)
                    .map(|_| {
                        timed(|| {
                            evolve_reduced(&model, &config.grid)
                                .iter()
                                .map(|x| m.expectation(x))
                                .sum::<f64>()
                        })
                        .1
                    })
                    .collect();
                row("evolve", median(times));
            }
        }
    }
    Ok(rows)
}

pub fn cmd_bench(ctx: &Context) -> Result<Outcome> {
    let rows = run_bench(&ctx.config)?;
    let path = ctx.config.output.dir.join("bench.csv");
    write_csv(
        &path,
        &super::output::header(&ctx.command_line, &ctx.config.to_toml()),
        &["sites", "dim", "phase", "seconds", "peak_rss_kb"],
        rows.iter().map(|r| {
            vec![
                r.sites.to_string(),
                r.dim.to_string(),
                r.phase.to_string(),
                num(r.seconds),
                r.peak_rss_kb.map(|v| v.to_string()).unwrap_or_default(),
            ]
        }),
    )?;
    let mut summary = Vec::new();
    for phase in ["matvec", "jd", "evolve"] {
        let series: Vec<&BenchRow> = rows.iter().filter(|r| r.phase == phase).collect();
        let ratios: Vec<String> = series
            .windows(2)
            .map(|w| format!("{:.2}", w[1].seconds / w[0].seconds))
            .collect();
        if !ratios.is_empty() {
            summary.push(format!("{phase} growth per site: {}", ratios.join(" ")));
        }
    }
    Ok(Outcome {
        files: vec![path],
        summary,
        violations: vec![],
    })
}
