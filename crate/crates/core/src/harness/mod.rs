//! Sweep driver: for each pause point, re-initialise the pinned-wall ring,
//! evolve, read out and append the samples to an archive.

mod archive;
mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use archive::{write_atomic, ArchiveHeader, PointRecord, SampleArchive, ARCHIVE_FORMAT, ARCHIVE_VERSION};
pub use config::{apply_override, resolve_schedule, ExperimentConfig, RawConfig, SCHEDULE_DIR_ENV, SYNTHETIC_SCHEDULE};

use archive::{parse_header, read_lines, write_lines_atomic, Appender};

use crate::dynamics::{evolve_exact, evolve_oracle, measure_z, BackendKind, SvmcPlan};
use crate::error::{Error, Result};
use crate::ring::apply_faults;
use crate::schedule::build_reverse_waveform;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep point `index`; independent of sweep order and scheduling.
pub fn point_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64))
}

/// Evolves and samples one pause point.
pub fn run_point(config: &ExperimentConfig, index: usize) -> Result<PointRecord> {
    let s = *config.s_values.get(index).ok_or_else(|| {
        Error::InvalidParameter(format!("point {index} outside a sweep of {}", config.s_values.len()))
    })?;
    run_point_inner(config, index, s).map_err(|e| Error::Point {
        index,
        s,
        source: Box::new(e),
    })
}

fn run_point_inner(config: &ExperimentConfig, index: usize, s: f64) -> Result<PointRecord> {
    let spec = &config.spec;
    let waveform = build_reverse_waveform(s, config.ramp_us, config.hold_us)?;
    let energy = config.table.energy_point(s, spec.j_programmed())?;
    let seed = point_seed(config.backend.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = config.shots_per_point;
    let readout = match config.backend.kind {
        BackendKind::Exact => {
            let state = evolve_exact(spec, &config.table, &waveform, &config.backend)?;
            measure_z(&state, shots, &mut rng)
        }
        BackendKind::Oracle => {
            let state = evolve_oracle(spec, &config.table, &waveform, config.backend.oracle_slices)?;
            measure_z(&state, shots, &mut rng)
        }
        BackendKind::Svmc => {
            let plan = SvmcPlan::new(spec, &config.table, &waveform, &config.backend)?;
            (0..shots).map(|_| plan.sample(&mut rng)).collect()
        }
    };
    let samples: Vec<_> = readout.iter().map(|c| apply_faults(c, spec, &mut rng)).collect();
    let walls = samples.iter().map(|c| c.wall_count()).collect();
    Ok(PointRecord {
        index,
        s,
        gamma_over_j: energy.gamma_over_j,
        gamma_ghz: energy.gamma_ghz,
        seed,
        samples,
        walls,
    })
}

/// Knobs of [`run_sweep`] that do not affect the sampled data.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Header timestamp; falls back to `SOURCE_DATE_EPOCH`, then the clock.
    pub timestamp: Option<u64>,
    /// Stop after committing this many new records.
    pub limit: Option<usize>,
    /// Report progress on standard error.
    pub verbose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub s: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub path: PathBuf,
    pub total: usize,
    /// Records already present when the sweep started.
    pub resumed: usize,
    pub completed: usize,
    pub failures: Vec<PointFailure>,
}

impl SweepSummary {
    pub fn is_complete(&self) -> bool {
        self.resumed + self.completed == self.total
    }
}

fn header_timestamp(options: &RunOptions) -> u64 {
    options
        .timestamp
        .or_else(|| std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// Keeps the valid prefix of an existing archive and returns the indices it holds.
fn resume(config: &ExperimentConfig) -> Result<BTreeSet<usize>> {
    let path = &config.output_path;
    let partial = read_lines(path)?;
    let mut lines = partial.lines.into_iter();
    let Some(first) = lines.next() else {
        return Err(Error::Archive(format!("{}: existing file has no header", path.display())));
    };
    let header = parse_header(&first)?;
    if header.config.identity() != config.raw.identity() {
        return Err(Error::Config(format!(
            "{} was produced by a different configuration; remove it or choose another output_path",
            path.display()
        )));
    }
    let mut kept = vec![first];
    let mut done = BTreeSet::new();
    for line in lines {
        let Ok(rec) = serde_json::from_str::<PointRecord>(&line) else {
            break;
        };
        let expected = config.s_values.get(rec.index).copied();
        if expected != Some(rec.s) || rec.samples.len() != config.shots_per_point || !done.insert(rec.index) {
            break;
        }
        kept.push(line);
    }
    write_lines_atomic(path, &kept)?;
    Ok(done)
}

/// Runs every point not yet in the archive, appending records in sweep
/// order. Point failures are collected, not fatal.
pub fn run_sweep(config: &ExperimentConfig, options: &RunOptions) -> Result<SweepSummary> {
    let path = config.output_path.clone();
    let done = if path.exists() {
        resume(config)?
    } else {
        let header = ArchiveHeader {
            format: ARCHIVE_FORMAT.into(),
            version: ARCHIVE_VERSION,
            created_unix: header_timestamp(options),
            schedule: config.table.name().to_string(),
            schedule_synthetic: config.table.is_synthetic(),
            config: config.raw.clone(),
        };
        write_lines_atomic(&path, &[serde_json::to_string(&header)?])?;
        BTreeSet::new()
    };
    let pending: Vec<usize> = (0..config.s_values.len()).filter(|i| !done.contains(i)).collect();
    let mut appender = Appender::open(&path)?;
    let mut summary = SweepSummary {
        path: path.clone(),
        total: config.s_values.len(),
        resumed: done.len(),
        completed: 0,
        failures: Vec::new(),
    };
    let limit = options.limit.unwrap_or(usize::MAX);
    let workers = config.workers.min(pending.len()).max(1);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<PointRecord>)>();

    let mut commit = |slot: usize, result: Result<PointRecord>, summary: &mut SweepSummary| -> Result<bool> {
        let index = pending[slot];
        match result {
            Ok(rec) => {
                appender.append(&serde_json::to_string(&rec)?)?;
                summary.completed += 1;
                if options.verbose {
                    eprintln!(
                        "point {}/{} s={} gamma/J={} done",
                        index + 1,
                        summary.total,
                        rec.s,
                        rec.gamma_over_j
                    );
                }
            }
            Err(e) => {
                if options.verbose {
                    eprintln!("point {}/{} failed: {e}", index + 1, summary.total);
                }
                summary.failures.push(PointFailure {
                    index,
                    s: config.s_values[index],
                    message: e.to_string(),
                });
            }
        }
        Ok(summary.completed >= limit)
    };

    let outcome: Result<()> = std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, pending) = (&next, &stop, &pending);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let slot = next.fetch_add(1, Ordering::Relaxed);
                if slot >= pending.len() {
                    break;
                }
                if tx.send((slot, run_point(config, pending[slot]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // commit strictly in sweep order
        let mut buffer = BTreeMap::new();
        let mut expected = 0usize;
        for (slot, result) in rx.iter() {
            buffer.insert(slot, result);
            while let Some(result) = buffer.remove(&expected) {
                expected += 1;
                match commit(expected - 1, result, &mut summary) {
                    Ok(false) => {}
                    Ok(true) => {
                        stop.store(true, Ordering::Relaxed);
                        return Ok(());
                    }
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        return Err(e);
                    }
                }
            }
        }
        Ok(())
    });
    outcome?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_point_and_master() {
        let a: BTreeSet<u64> = (0..1000).map(|i| point_seed(1, i)).collect();
        assert_eq!(a.len(), 1000);
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
        assert_eq!(point_seed(7, 3), point_seed(7, 3));
    }

    #[test]
    fn pause_at_one_keeps_initial_state() {
        for backend in ["exact", "svmc", "oracle"] {
            let raw = RawConfig::from_json(&format!(
                r#"{{"n": 5, "backend": "{backend}", "s_values": [1.0], "shots_per_point": 50, "hold_us": 0.1, "ramp_us": 0.05, "oracle_slices": 100}}"#
            ))
            .unwrap();
            let cfg = ExperimentConfig::from_raw(raw).unwrap();
            let rec = run_point(&cfg, 0).unwrap();
            let init = crate::ring::initial_state(&cfg.spec);
            assert!(rec.samples.iter().all(|c| *c == init), "{backend}");
            assert_eq!(rec.gamma_over_j, crate::schedule::GammaRatio::Finite(0.0));
        }
    }

    #[test]
    fn point_errors_carry_context() {
        let raw = RawConfig::from_json(r#"{"n": 17, "s_values": [0.5], "shots_per_point": 1}"#).unwrap();
        let cfg = ExperimentConfig::from_raw(raw).unwrap();
        let err = run_point(&cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Point { index: 0, .. }));
        assert!(err.to_string().contains("s = 0.5"));
    }
}
