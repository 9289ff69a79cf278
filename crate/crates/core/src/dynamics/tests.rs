use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ring::{detect_walls, initial_state, RingSpec};
use crate::schedule::{build_reverse_waveform, ScheduleTable, SchedulePoint};

fn synthetic() -> ScheduleTable<f64> {
    ScheduleTable::synthetic()
}

fn flat_a_zero() -> ScheduleTable<f64> {
    ScheduleTable::new(
        "no-field",
        vec![
            SchedulePoint { s: 0.0, a_ghz: 0.0, b_ghz: 1.0 },
            SchedulePoint { s: 1.0, a_ghz: 0.0, b_ghz: 10.0 },
        ],
    )
    .unwrap()
}

fn exact_cfg(dt_ns: f64) -> BackendConfig {
    BackendConfig {
        dt_ns,
        ..Default::default()
    }
}

#[test]
fn exact_matches_refined_oracle_on_short_waveform() {
    let spec = RingSpec::new(3, 1.0).unwrap();
    let table = synthetic();
    for s_pause in [0.1, 0.5, 0.9] {
        let w = build_reverse_waveform(s_pause, 0.002, 0.010).unwrap();
        let ex = evolve_exact(&spec, &table, &w, &exact_cfg(0.01)).unwrap().probabilities();
        let or = evolve_oracle(&spec, &table, &w, 32000).unwrap().probabilities();
        for (a, b) in ex.iter().zip(&or) {
            // the oracle's midpoint error, not the exact backend, dominates this gap
            assert!((a - b).abs() < 1e-5, "s_pause {s_pause}: {a} vs {b}");
        }
    }
}

#[test]
fn no_transverse_field_keeps_initial_state() {
    let spec = RingSpec::with_options(3, 1.0, 1, Default::default()).unwrap();
    let w = build_reverse_waveform(1.0, 0.01, 0.02).unwrap();
    let state = evolve_exact(&spec, &synthetic(), &w, &exact_cfg(1.0)).unwrap();
    let idx = initial_state(&spec).basis_index() as usize;
    assert!((state.probabilities()[idx] - 1.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for cfg in measure_z(&state, 100, &mut rng) {
        assert_eq!(cfg, initial_state(&spec));
    }
}

#[test]
fn norm_is_conserved() {
    let spec = RingSpec::new(7, 1.0).unwrap();
    let w = build_reverse_waveform(0.4, 0.02, 0.05).unwrap();
    let (state, stats) = evolve_exact_with_stats(&spec, &synthetic(), &w, &exact_cfg(0.1)).unwrap();
    assert!(stats.max_norm_drift < 1e-10, "{}", stats.max_norm_drift);
    assert!((state.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn energy_is_conserved_during_hold() {
    let op = RingOperator::new(9, 1.0);
    let c = Coefficients::new(1.5, 4.0);
    let mut psi = vec![Complex64::new(0.0, 0.0); op.dim()];
    psi[0b10101] = Complex64::new(0.8, 0.0);
    psi[0b101] = Complex64::new(0.0, 0.6);
    let e0 = op.expectation(c, &psi);
    let mut cheb = psi.clone();
    Propagator::new(&op).step(c, 1000.0, &mut cheb);
    assert!((op.expectation(c, &cheb) - e0).abs() < 1e-6);
    SectorPropagator::new(&op, c).evolve(1000.0, &mut psi);
    assert!((op.expectation(c, &psi) - e0).abs() < 1e-6);
}

#[test]
fn global_flip_maps_distributions() {
    for n in [3, 5] {
        let op = RingOperator::new(n, 1.0);
        let c = Coefficients::new(0.7, 2.5);
        let mask = op.dim() - 1;
        let start = 0b1;
        let mut a = vec![Complex64::new(0.0, 0.0); op.dim()];
        let mut b = a.clone();
        a[start] = Complex64::new(1.0, 0.0);
        b[start ^ mask] = Complex64::new(1.0, 0.0);
        let mut prop = Propagator::new(&op);
        prop.step(c, 13.0, &mut a);
        prop.step(c, 13.0, &mut b);
        for x in 0..op.dim() {
            assert!((a[x].norm_sqr() - b[x ^ mask].norm_sqr()).abs() < 1e-12);
        }
    }
}

#[test]
fn measure_basis_state_is_deterministic() {
    let op = RingOperator::new(5, 1.0);
    let cfg: crate::ring::SpinConfig = "+-+-+".parse().unwrap();
    let state = QuantumState::from_amplitudes(5, op.basis_state(&cfg));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert!(measure_z(&state, 500, &mut rng).iter().all(|c| *c == cfg));
}

#[test]
fn measure_uniform_superposition() {
    let amp = Complex64::new(1.0 / 8f64.sqrt(), 0.0);
    let state = QuantumState::from_amplitudes(3, vec![amp; 8]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = [0usize; 8];
    for c in measure_z(&state, 80_000, &mut rng) {
        counts[c.basis_index() as usize] += 1;
    }
    for k in counts {
        assert!((k as f64 / 80_000.0 - 0.125).abs() < 0.005, "{counts:?}");
    }
}

#[test]
fn measure_bell_pair_support() {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b000] = Complex64::new(0.5f64.sqrt(), 0.0);
    amps[0b011] = Complex64::new(0.0, 0.5f64.sqrt());
    let state = QuantumState::from_amplitudes(3, amps);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples = measure_z(&state, 2000, &mut rng);
    assert!(samples.iter().all(|c| matches!(c.basis_index(), 0b000 | 0b011)));
    assert!(samples.iter().any(|c| c.basis_index() == 0) && samples.iter().any(|c| c.basis_index() == 3));
}

#[test]
fn measure_is_seed_deterministic() {
    let amps: Vec<Complex64> = (0..8).map(|k| Complex64::new((k as f64 + 1.0).sqrt() / 6.0, 0.0)).collect();
    let state = QuantumState::from_amplitudes(3, amps);
    let a = measure_z(&state, 100, &mut ChaCha8Rng::seed_from_u64(5));
    let b = measure_z(&state, 100, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(a, b);
}

#[test]
fn svmc_is_identity_without_field() {
    let spec = RingSpec::with_options(11, 1.0, 4, Default::default()).unwrap();
    let w = build_reverse_waveform(0.3, 0.2, 0.5).unwrap();
    let cfg = BackendConfig {
        kind: BackendKind::Svmc,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let out = evolve_svmc(&spec, &flat_a_zero(), &w, &cfg, &mut rng).unwrap();
        assert_eq!(out, initial_state(&spec));
    }
    let w = build_reverse_waveform(1.0, 0.2, 0.5).unwrap();
    let out = evolve_svmc(&spec, &synthetic(), &w, &cfg, &mut rng).unwrap();
    assert_eq!(out, initial_state(&spec));
}

#[test]
fn svmc_is_seed_deterministic() {
    let spec = RingSpec::new(21, 1.0).unwrap();
    let w = build_reverse_waveform(0.4, 0.1, 0.2).unwrap();
    let cfg = BackendConfig {
        kind: BackendKind::Svmc,
        temperature_mk: 15.0,
        ..Default::default()
    };
    let plan = SvmcPlan::new(&spec, &synthetic(), &w, &cfg).unwrap();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..10).map(|_| plan.sample(&mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));
}

#[test]
fn svmc_strong_field_forgets_the_wall() {
    let n = 11;
    let spec = RingSpec::new(n, 1.0).unwrap();
    let w = build_reverse_waveform(0.0, 0.5, 1.0).unwrap();
    let cfg = BackendConfig {
        kind: BackendKind::Svmc,
        ..Default::default()
    };
    let plan = SvmcPlan::new(&spec, &synthetic(), &w, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shots = 8000;
    let mut up = vec![0usize; n];
    let mut edges = vec![0usize; n];
    for _ in 0..shots {
        let cfg = plan.sample(&mut rng);
        for (i, &s) in cfg.spins().iter().enumerate() {
            up[i] += (s > 0) as usize;
        }
        for e in detect_walls(&cfg).edges() {
            edges[e] += 1;
        }
    }
    let band = 4.0 * (0.25 / shots as f64).sqrt();
    for &u in &up {
        assert!((u as f64 / shots as f64 - 0.5).abs() < band, "{up:?}");
    }
    let total: usize = edges.iter().sum();
    let expect = total as f64 / n as f64;
    let chi2: f64 = edges.iter().map(|&k| (k as f64 - expect).powi(2) / expect).sum();
    // 99th percentile of chi-square with 10 degrees of freedom
    assert!(chi2 < 23.209, "chi2 {chi2}, {edges:?}");
}

#[test]
fn oracle_converges_with_slices() {
    let spec = RingSpec::new(3, 1.0).unwrap();
    // slice edges land on the breakpoints
    let w = build_reverse_waveform(0.995, 0.001, 0.002).unwrap();
    let a = evolve_oracle(&spec, &synthetic(), &w, 2000).unwrap();
    let b = evolve_oracle(&spec, &synthetic(), &w, 4000).unwrap();
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn oracle_without_field_is_diagonal_phase() {
    let spec = RingSpec::new(5, 1.0).unwrap();
    let table = flat_a_zero();
    let w = build_reverse_waveform(0.5, 0.01, 0.02).unwrap();
    let state = evolve_oracle(&spec, &table, &w, 400).unwrap();
    let op = RingOperator::new(5, 1.0);
    let idx = initial_state(&spec).basis_index() as usize;
    // B is linear in s and s is piecewise linear in t, so the midpoint rule is exact
    let mut phase = 0.0;
    for win in w.breakpoints().windows(2) {
        let (t0, s0) = win[0];
        let (t1, s1) = win[1];
        let b_mean = 0.5 * (table.interpolate(s0).unwrap().1 + table.interpolate(s1).unwrap().1);
        phase += op.diagonal(b_mean, idx) * (t1 - t0) * 1e3;
    }
    let expect = Complex64::from_polar(1.0, -2.0 * PI * phase);
    assert!((state.amplitudes()[idx] - expect).norm() < 1e-10);
    assert!((state.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn backends_reject_large_rings() {
    let w = build_reverse_waveform(0.5, 0.01, 0.0).unwrap();
    let big = RingSpec::new(17, 1.0).unwrap();
    assert!(matches!(
        evolve_exact(&big, &synthetic(), &w, &exact_cfg(1.0)),
        Err(crate::error::Error::TooLarge { .. })
    ));
    let nine = RingSpec::new(9, 1.0).unwrap();
    assert!(matches!(
        evolve_oracle(&nine, &synthetic(), &w, 10),
        Err(crate::error::Error::TooLarge { .. })
    ));
}

#[test]
fn config_validation() {
    assert!(BackendConfig::default().validate().is_ok());
    for bad in [
        BackendConfig { dt_ns: 0.0, ..Default::default() },
        BackendConfig { sweeps_per_us: 0.5, ..Default::default() },
        BackendConfig { temperature_mk: -1.0, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}
