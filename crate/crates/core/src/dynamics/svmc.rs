//! Spin-vector Monte Carlo: each qubit is a planar rotor at polar angle
//! `θ ∈ [0, π]` in the x–z plane with energy
//! `E = Σ (B J/2) cos θ_i cos θ_{i+1} − (A/2) Σ sin θ_i`,
//! updated by single-site Metropolis moves while `s` follows the waveform.

use rand::Rng;

use super::BackendConfig;
use crate::error::Result;
use crate::ring::{initial_state, RingSpec, SpinConfig};
use crate::schedule::{ScheduleTable, Waveform};

/// Boltzmann constant in GHz per kelvin.
pub const KB_GHZ_PER_K: f64 = 20.836_612;

/// Per-sweep energy scales, precomputed once and shared by all trajectories.
#[derive(Debug, Clone)]
pub struct SvmcPlan {
    n: usize,
    initial: SpinConfig,
    /// (B·J/2, A/2) in GHz for every sweep
    sweeps: Vec<(f64, f64)>,
    /// k_B T in GHz; zero means only strictly downhill moves are accepted
    kt_ghz: f64,
}

impl SvmcPlan {
    pub fn new(
        spec: &RingSpec,
        table: &ScheduleTable<f64>,
        waveform: &Waveform<f64>,
        cfg: &BackendConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let total = waveform.total_us();
        let count = (cfg.sweeps_per_us * total).ceil().max(1.0) as usize;
        let mut sweeps = Vec::with_capacity(count);
        for k in 0..count {
            let t = (k as f64 + 0.5) * total / count as f64;
            let (a, b) = table.interpolate(waveform.s_at(t)?)?;
            sweeps.push((0.5 * b * spec.j_programmed(), 0.5 * a));
        }
        Ok(SvmcPlan {
            n: spec.n(),
            initial: initial_state(spec),
            sweeps,
            kt_ghz: KB_GHZ_PER_K * cfg.temperature_mk * 1e-3,
        })
    }

    pub fn sweep_count(&self) -> usize {
        self.sweeps.len()
    }

    /// Runs one trajectory from the pinned-wall state and projects it onto Z.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfig {
        let n = self.n;
        let mut cos: Vec<f64> = self.initial.spins().iter().map(|&s| s as f64).collect();
        let mut sin = vec![0.0f64; n];
        for &(coupling, field) in &self.sweeps {
            for i in 0..n {
                let theta: f64 = rng.gen::<f64>() * std::f64::consts::PI;
                let (s_new, c_new) = theta.sin_cos();
                let neighbours = cos[(i + n - 1) % n] + cos[(i + 1) % n];
                let delta = coupling * (c_new - cos[i]) * neighbours - field * (s_new - sin[i]);
                let accept = if delta < 0.0 {
                    true
                } else if self.kt_ghz > 0.0 {
                    rng.gen::<f64>() < (-delta / self.kt_ghz).exp()
                } else {
                    false
                };
                if accept {
                    cos[i] = c_new;
                    sin[i] = s_new;
                }
            }
        }
        let spins = cos
            .iter()
            .map(|&c| {
                if c > 0.0 {
                    1
                } else if c < 0.0 {
                    -1
                } else if rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SpinConfig::new(spins).expect("projected spins are ±1")
    }
}

/// One SVMC sample; deterministic given the RNG state.
pub fn evolve_svmc<R: Rng + ?Sized>(
    spec: &RingSpec,
    table: &ScheduleTable<f64>,
    waveform: &Waveform<f64>,
    cfg: &BackendConfig,
    rng: &mut R,
) -> Result<SpinConfig> {
    Ok(SvmcPlan::new(spec, table, waveform, cfg)?.sample(rng))
}
