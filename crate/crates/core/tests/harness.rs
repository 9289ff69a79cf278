use std::fs;
use std::io::Write;

use wallmem::dynamics::evolve_oracle;
use wallmem::harness::{run_point, run_sweep, ExperimentConfig, RawConfig, RunOptions, SampleArchive};
use wallmem::ring::SpinConfig;
use wallmem::schedule::build_reverse_waveform;

fn config(text: &str, out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_raw(RawConfig::from_json(text).unwrap()).unwrap();
    cfg.output_path = out.to_path_buf();
    cfg
}

fn fixed_time() -> RunOptions {
    RunOptions {
        timestamp: Some(1_700_000_000),
        ..Default::default()
    }
}

#[test]
fn exact_frequencies_match_oracle_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"n": 3, "s_values": [0.5], "ramp_us": 0.05, "hold_us": 0.2, "shots_per_point": 8000, "seed": 4}"#,
        &dir.path().join("a.jsonl"),
    );
    let rec = run_point(&cfg, 0).unwrap();
    assert_eq!(rec.samples.len(), 8000);
    let waveform = build_reverse_waveform(0.5, 0.05, 0.2).unwrap();
    let probs = evolve_oracle(&cfg.spec, &cfg.table, &waveform, 4000).unwrap().probabilities();
    // two-sided 99.9% normal quantile
    let z = 3.2905;
    for (idx, &p) in probs.iter().enumerate() {
        let cfg_i = SpinConfig::from_basis_index(idx as u64, 3);
        let f = rec.samples.iter().filter(|c| **c == cfg_i).count() as f64 / 8000.0;
        let band = z * (p * (1.0 - p) / 8000.0).sqrt() + 1e-3;
        assert!((f - p).abs() <= band, "{cfg_i}: f={f} p={p} band={band}");
    }
}

#[test]
fn three_point_sweep_orders_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let cfg = config(
        r#"{"n": 3, "s_values": [0.0, 0.5, 1.0], "ramp_us": 0.02, "hold_us": 0.05, "shots_per_point": 100}"#,
        &path,
    );
    let summary = run_sweep(&cfg, &fixed_time()).unwrap();
    assert!(summary.is_complete() && summary.failures.is_empty());
    let archive = SampleArchive::read(&path).unwrap();
    assert_eq!(archive.records.len(), 3);
    let ratios: Vec<f64> = archive.records.iter().map(|r| r.gamma_over_j.to_float()).collect();
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
    for r in &archive.records {
        assert_eq!(r.samples.len(), 100);
        let e = cfg.table.energy_point(r.s, 1.0).unwrap();
        assert_eq!(e.gamma_over_j, r.gamma_over_j);
    }
}

#[test]
fn interrupted_sweep_resumes_to_identical_archive() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"n": 5, "s_values": [0.3, 0.6, 0.9], "ramp_us": 0.02, "hold_us": 0.05, "shots_per_point": 64, "seed": 21}"#;
    let full = dir.path().join("full/a.jsonl.gz");
    run_sweep(&config(text, &full), &fixed_time()).unwrap();

    let part = dir.path().join("part/a.jsonl.gz");
    let cfg = config(text, &part);
    let first = run_sweep(
        &cfg,
        &RunOptions {
            limit: Some(1),
            ..fixed_time()
        },
    )
    .unwrap();
    assert_eq!((first.completed, first.is_complete()), (1, false));
    // torn final write
    fs::OpenOptions::new().append(true).open(&part).unwrap().write_all(&[0x1f, 0x8b, 8]).unwrap();
    let rest = run_sweep(&cfg, &fixed_time()).unwrap();
    assert_eq!((rest.resumed, rest.completed), (1, 2));
    assert_eq!(SampleArchive::read(&part).unwrap(), SampleArchive::read(&full).unwrap());
}

#[test]
fn worker_count_does_not_change_records() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"n": 5, "backend": "svmc", "s_count": 6, "ramp_us": 0.1, "hold_us": 0.2, "shots_per_point": 40, "seed": 8}"#;
    let one = dir.path().join("one/a.jsonl");
    let three = dir.path().join("three/a.jsonl");
    run_sweep(&config(text, &one), &fixed_time()).unwrap();
    let mut cfg = config(text, &three);
    cfg.workers = 3;
    run_sweep(&cfg, &fixed_time()).unwrap();
    assert_eq!(fs::read(&one).unwrap(), fs::read(&three).unwrap());
}

#[test]
fn changed_config_refuses_to_resume() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    run_sweep(
        &config(r#"{"n": 3, "s_values": [0.9], "shots_per_point": 10, "hold_us": 0.01, "ramp_us": 0.01}"#, &path),
        &fixed_time(),
    )
    .unwrap();
    let other = config(r#"{"n": 3, "s_values": [0.9], "shots_per_point": 11, "hold_us": 0.01, "ramp_us": 0.01}"#, &path);
    assert!(run_sweep(&other, &fixed_time()).is_err());
}
