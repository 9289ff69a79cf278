//! Metrics of sampled ring configurations: wall histograms, the normalised
//! Shannon entropy of wall positions, single-wall proportions and spatial
//! wall densities, plus curve fits over a sweep.

mod fit;
mod report;

use crate::error::{Error, Result};
use crate::ring::{detect_walls, Orientation, RingSpec, SpinConfig};
use crate::scalar::Scalar;
use crate::schedule::GammaRatio;

pub use fit::{
    fit_sigmoid, gamma_init, scaling_fit, sigmoid, wpm_bounds, FitAxis, Onset, ScalingFit, SigmoidFit, Wpm,
};
pub use report::{
    analyze_archive, read_metrics_csv, write_metrics_csv, AnalysisReport, FitReport, MetricsTable, METRICS_HEADER,
    ONSET_THRESHOLD, WPM_HIGH, WPM_LOW,
};

/// Which samples contribute walls to the histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WallAggregation {
    /// Every wall of every sample.
    #[default]
    AllWalls,
    /// Only samples with exactly one wall.
    SingleWallOnly,
}

/// Per-edge wall counts and their normalised distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WallHistogram<T> {
    counts: Vec<u64>,
    p: Vec<T>,
}

impl<T: Scalar> WallHistogram<T> {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let p = if total == 0 {
            vec![T::zero(); counts.len()]
        } else {
            let t = T::from_u64(total).expect("count representable");
            counts
                .iter()
                .map(|&c| T::from_u64(c).expect("count representable") / t)
                .collect()
        };
        WallHistogram { counts, p }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn n_edges(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// No walls were counted (only possible with [`WallAggregation::SingleWallOnly`]).
    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

fn ring_length(samples: &[SpinConfig]) -> Result<usize> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("sample set is empty".into()))?;
    let n = first.len();
    if let Some(bad) = samples.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    Ok(n)
}

pub fn wall_histogram<T: Scalar>(samples: &[SpinConfig], aggregation: WallAggregation) -> Result<WallHistogram<T>> {
    let n = ring_length(samples)?;
    let mut counts = vec![0u64; n];
    for cfg in samples {
        let walls = detect_walls(cfg);
        if aggregation == WallAggregation::SingleWallOnly && walls.len() != 1 {
            continue;
        }
        for e in walls.edges() {
            counts[e] += 1;
        }
    }
    Ok(WallHistogram::from_counts(counts))
}

/// `h = −Σ p_e log_N p_e`, with `0·log 0 = 0`; an empty histogram gives 0.
pub fn entropy<T: Scalar>(hist: &WallHistogram<T>) -> T {
    let n = hist.n_edges();
    if n < 2 || hist.is_empty() {
        return T::zero();
    }
    let sum = hist
        .p()
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |acc, &p| acc - p * p.ln());
    (sum / T::count(n).ln()).max(T::zero()).min(T::one())
}

/// Fraction of samples with exactly one wall.
pub fn sdwp<T: Scalar>(samples: &[SpinConfig]) -> Result<T> {
    ring_length(samples)?;
    let single = samples.iter().filter(|c| c.wall_count() == 1).count();
    Ok(T::count(single) / T::count(samples.len()))
}

fn is_moved(cfg: &SpinConfig, spec: &RingSpec) -> bool {
    let walls = detect_walls(cfg);
    walls.len() == 1
        && (walls.walls[0].edge != spec.initial_wall_edge() || walls.walls[0].orientation == Orientation::Down)
}

/// Fraction of samples with one wall that is either displaced from the
/// initial edge or has the opposite (down-down) orientation.
pub fn moved_sdwp<T: Scalar>(samples: &[SpinConfig], spec: &RingSpec) -> Result<T> {
    let n = ring_length(samples)?;
    if n != spec.n() {
        return Err(Error::LengthMismatch {
            expected: spec.n(),
            got: n,
        });
    }
    let moved = samples.iter().filter(|c| is_moved(c, spec)).count();
    Ok(T::count(moved) / T::count(samples.len()))
}

/// Distance convention of [`spatial_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// `d ∈ [0, max]`, the two ring directions averaged.
    #[default]
    Folded,
    /// `d ∈ [−max, max]`, positive along increasing edge index.
    Signed,
}

/// Mean number of walls per sample at each distance from the initial edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile<T> {
    pub distances: Vec<i64>,
    pub density: Vec<T>,
}

pub fn spatial_density<T: Scalar>(
    samples: &[SpinConfig],
    spec: &RingSpec,
    exclude_initial: bool,
    max_distance: usize,
    mode: DistanceMode,
) -> Result<DensityProfile<T>> {
    let n = ring_length(samples)?;
    if n != spec.n() {
        return Err(Error::LengthMismatch {
            expected: spec.n(),
            got: n,
        });
    }
    if max_distance > n / 2 {
        return Err(Error::OutOfRange {
            what: "max_distance",
            value: max_distance as f64,
            lo: 0.0,
            hi: (n / 2) as f64,
        });
    }
    let hist: WallHistogram<T> = wall_histogram(samples, WallAggregation::AllWalls)?;
    let per_sample = |e: usize| T::from_u64(hist.counts()[e]).unwrap() / T::count(samples.len());
    let e0 = spec.initial_wall_edge();
    let edge_at = |d: i64| (e0 as i64 + d).rem_euclid(n as i64) as usize;
    let max = max_distance as i64;
    let range: Vec<i64> = match mode {
        DistanceMode::Folded => (0..=max).collect(),
        DistanceMode::Signed => (-max..=max).collect(),
    };
    let mut distances = Vec::new();
    let mut density = Vec::new();
    for d in range {
        if exclude_initial && d == 0 {
            continue;
        }
        let value = match mode {
            DistanceMode::Folded if d > 0 => (per_sample(edge_at(d)) + per_sample(edge_at(-d))) / T::lit(2.0),
            _ => per_sample(edge_at(d)),
        };
        distances.push(d);
        density.push(value);
    }
    Ok(DensityProfile { distances, density })
}

/// Metrics of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics<T> {
    pub s_pause: T,
    pub gamma_over_j: GammaRatio<T>,
    pub gamma_ghz: T,
    pub entropy_h: T,
    pub sdwp: T,
    pub moved_sdwp: T,
    pub mean_wall_count: T,
}

impl<T: Scalar> PointMetrics<T> {
    pub fn from_samples(
        s_pause: T,
        gamma_over_j: GammaRatio<T>,
        gamma_ghz: T,
        samples: &[SpinConfig],
        spec: &RingSpec,
        aggregation: WallAggregation,
    ) -> Result<Self> {
        let hist = wall_histogram(samples, aggregation)?;
        let walls: usize = samples.iter().map(|c| c.wall_count()).sum();
        Ok(PointMetrics {
            s_pause,
            gamma_over_j,
            gamma_ghz,
            entropy_h: entropy(&hist),
            sdwp: sdwp(samples)?,
            moved_sdwp: moved_sdwp(samples, spec)?,
            mean_wall_count: T::count(walls) / T::count(samples.len()),
        })
    }
}
