use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reducedyn::eigen::{dense_eigh, dense_full_ed, jd_targeted, EigenpairSet, JdConfig, OverlapWith};
use reducedyn::pauli::{build_hamiltonian, build_initial_state, DenseOperator, OperatorSum, SpinChainParams, StateVector};
use reducedyn::reduction::{overlaps, select, SelectionRule};

fn top_k(eig: &EigenpairSet, psi0: &StateVector, k: usize) -> Vec<(f64, f64)> {
    let dec = overlaps(eig, psi0).unwrap();
    dec.entries()[..k].iter().map(|e| (e.energy, e.weight())).collect()
}

fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

#[test]
fn targeted_pairs_match_dense_top_k() {
    for n in [4, 6, 8] {
        for p in [0.1, 0.9] {
            let h = build_hamiltonian(&SpinChainParams::critical(n, p)).unwrap();
            let psi0 = build_initial_state(n).unwrap();
            let dense = dense_full_ed(&h, false).unwrap();
            let emax = dense.values.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let k = 8.min(dense.len());
            let jd = jd_targeted(&h, &OverlapWith::new(psi0.clone()), &JdConfig::count(k)).unwrap();
            assert_eq!(jd.len(), k, "no over-computation");
            for i in 0..jd.len() {
                let r = h.apply(&jd.vectors[i]).unwrap();
                let mut res = r.clone();
                res.axpy(Complex64::new(-jd.values[i], 0.0), &jd.vectors[i]);
                assert!(res.norm() <= 1e-8 * emax, "N={n} p={p} residual {}", res.norm());
            }
            // zero-overlap states (other symmetry sectors) tie and are excluded
            let want: Vec<(f64, f64)> = sorted(top_k(&dense, &psi0, k)).into_iter().filter(|x| x.1 > 1e-10).collect();
            let got: Vec<(f64, f64)> = sorted(top_k(&jd, &psi0, k)).into_iter().filter(|x| x.1 > 1e-10).collect();
            assert_eq!(want.len(), got.len(), "N={n} p={p}");
            for ((ew, ww), (eg, wg)) in want.iter().zip(&got) {
                assert!((ew - eg).abs() <= 1e-8, "N={n} p={p}: {ew} vs {eg}");
                assert!((ww - wg).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn threshold_mode_stops_at_minimal_count() {
    let h = build_hamiltonian(&SpinChainParams::critical(8, 0.9)).unwrap();
    let psi0 = build_initial_state(8).unwrap();
    let dense = dense_full_ed(&h, false).unwrap();
    for nu_min in [0.9, 0.99, 0.999] {
        let minimal = select(&overlaps(&dense, &psi0).unwrap(), SelectionRule::Threshold(nu_min))
            .unwrap()
            .len();
        let jd = jd_targeted(&h, &OverlapWith::new(psi0.clone()), &JdConfig::weight(nu_min)).unwrap();
        assert!(jd.len() <= minimal + 1, "{} pairs for minimal {minimal}", jd.len());
        let captured: f64 = jd.scores.iter().sum();
        assert!(captured >= nu_min * nu_min - 1e-12);
        // running weight is non-decreasing by construction of a sum of squares
        let mut acc = 0.0;
        for s in &jd.scores {
            assert!(*s >= 0.0);
            let next = acc + s;
            assert!(next >= acc);
            acc = next;
        }
    }
}

#[test]
fn reference_phase_changes_nothing() {
    let h = build_hamiltonian(&SpinChainParams::critical(7, 0.5)).unwrap();
    let psi0 = build_initial_state(7).unwrap();
    let base = jd_targeted(&h, &OverlapWith::new(psi0.clone()), &JdConfig::count(5)).unwrap();
    for phi in [0.3, 2.0, -1.1] {
        let mut rotated = psi0.clone();
        rotated.scale(Complex64::from_polar(1.0, phi));
        let other = jd_targeted(&h, &OverlapWith::new(rotated), &JdConfig::count(5)).unwrap();
        let a = sorted(base.values.iter().copied().zip(base.scores.iter().copied()).collect());
        let b = sorted(other.values.iter().copied().zip(other.scores.iter().copied()).collect());
        for ((ea, sa), (eb, sb)) in a.iter().zip(&b) {
            assert!((ea - eb).abs() <= 1e-12, "{ea} vs {eb}");
            assert!((sa - sb).abs() <= 1e-12, "{sa} vs {sb}");
        }
    }
}

#[test]
fn dense_eigh_of_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 24;
    let mut m = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in 0..i {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    let eig = dense_eigh(m.as_ref()).unwrap();
    assert!(eig.max_residual() < 1e-12);
    assert!(eig.orthonormality_error() < 1e-12);
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    assert!((eig.values.iter().sum::<f64>() - trace).abs() < 1e-12);
    // the targeted solver on the same matrix picks the largest overlaps with e_0
    let op = DenseOperator(m);
    let psi0 = StateVector::basis(n, 0);
    let jd = jd_targeted(&op, &OverlapWith::new(psi0.clone()), &JdConfig::count(3)).unwrap();
    let want = sorted(top_k(&eig, &psi0, 3));
    let got = sorted(top_k(&jd, &psi0, 3));
    for (w, g) in want.iter().zip(&got) {
        assert!((w.0 - g.0).abs() < 1e-9);
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let h: OperatorSum = build_hamiltonian(&SpinChainParams::critical(8, 0.9)).unwrap();
    let psi0 = build_initial_state(8).unwrap();
    let mut cfg = JdConfig::count(6);
    cfg.seed = 17;
    let a = jd_targeted(&h, &OverlapWith::new(psi0.clone()), &cfg).unwrap();
    let b = jd_targeted(&h, &OverlapWith::new(psi0), &cfg).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.scores, b.scores);
}
