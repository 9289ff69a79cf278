//! Time evolution of the ring along a reverse-anneal waveform.
//!
//! Energies are linear frequencies in GHz and time is integrated in ns, so
//! the propagator is `exp(−i 2π ∫ H dt)`. Three backends exist:
//!
//! * [`evolve_exact`]: closed-system state vector, up to 16 sites;
//! * [`evolve_svmc`]: classical rotor surrogate for large rings, with an
//!   optional temperature standing in for the open-system environment;
//! * [`evolve_oracle`]: dense time-sliced matrix exponentials, for tests.

mod chebyshev;
mod exact;
mod hamiltonian;
mod oracle;
mod sectors;
mod svmc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::SpinConfig;

pub use chebyshev::{bessel_sequence, Propagator};
pub use exact::{
    evolve_exact, evolve_exact_with_stats, ExactStats, MAX_EXACT_SITES, NORM_TOLERANCE,
};
pub use hamiltonian::{Coefficients, RingOperator};
pub use oracle::{evolve_oracle, MAX_ORACLE_SITES};
pub use sectors::SectorPropagator;
pub use svmc::{evolve_svmc, SvmcPlan, KB_GHZ_PER_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Svmc,
    Oracle,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Exact => "exact",
            BackendKind::Svmc => "svmc",
            BackendKind::Oracle => "oracle",
        })
    }
}

/// Numerical knobs of the dynamics backends.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Magnus step on the ramps (exact backend), ns.
    pub dt_ns: f64,
    /// Monte Carlo sweeps per µs of waveform time (svmc).
    pub sweeps_per_us: f64,
    /// Rotor temperature in mK (svmc).
    pub temperature_mk: f64,
    pub seed: u64,
    /// Time slices of the oracle backend.
    pub oracle_slices: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Exact,
            dt_ns: 0.1,
            sweeps_per_us: 100.0,
            temperature_mk: 0.0,
            seed: 0,
            oracle_slices: 4000,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ns > 0.0) || !self.dt_ns.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt_ns must be positive, got {}",
                self.dt_ns
            )));
        }
        if !(self.sweeps_per_us >= 1.0) || !self.sweeps_per_us.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sweeps_per_us must be at least 1, got {}",
                self.sweeps_per_us
            )));
        }
        if !(self.temperature_mk >= 0.0) || !self.temperature_mk.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "temperature_mk must be non-negative, got {}",
                self.temperature_mk
            )));
        }
        if self.oracle_slices == 0 {
            return Err(Error::InvalidParameter(
                "oracle_slices must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Normalised state vector over the `2ⁿ` Z-basis configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(amplitudes.len(), 1 << n, "amplitude count must be 2^n");
        QuantumState { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Born-rule samples in the Z basis; deterministic given the RNG state.
pub fn measure_z<R: Rng + ?Sized>(
    state: &QuantumState,
    shots: usize,
    rng: &mut R,
) -> Vec<SpinConfig> {
    let mut cumulative = Vec::with_capacity(state.amplitudes.len());
    let mut total = 0.0;
    for z in &state.amplitudes {
        total += z.norm_sqr();
        cumulative.push(total);
    }
    let last = cumulative.len() - 1;
    (0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            SpinConfig::from_basis_index(idx as u64, state.n)
        })
        .collect()
}

#[cfg(test)]
mod tests;
