//! Closed-system state-vector evolution along a reverse-anneal waveform.
//!
//! Ramps are integrated with the fourth-order commutator-free Magnus scheme
//! (two exponentials per step, each evaluated by Chebyshev expansion); the
//! constant-`s` hold is propagated exactly, either by sector
//! diagonalisation or by one long Chebyshev expansion, whichever is cheaper.

use num_complex::Complex64;

use super::chebyshev::Propagator;
use super::hamiltonian::{Coefficients, RingOperator};
use super::sectors::SectorPropagator;
use super::{BackendConfig, QuantumState};
use crate::error::{Error, Result};
use crate::ring::{initial_state, RingSpec};
use crate::schedule::{ScheduleTable, Waveform};

/// Resource guard for the state-vector backend.
pub const MAX_EXACT_SITES: usize = 16;
pub const NORM_TOLERANCE: f64 = 1e-6;

const SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3 / 6

/// Diagnostics of one exact evolution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactStats {
    pub max_norm_drift: f64,
    pub matvecs: u64,
    pub magnus_steps: usize,
    pub sector_holds: usize,
}

pub fn evolve_exact(
    spec: &RingSpec,
    table: &ScheduleTable<f64>,
    waveform: &Waveform<f64>,
    cfg: &BackendConfig,
) -> Result<QuantumState> {
    evolve_exact_with_stats(spec, table, waveform, cfg).map(|(s, _)| s)
}

pub fn evolve_exact_with_stats(
    spec: &RingSpec,
    table: &ScheduleTable<f64>,
    waveform: &Waveform<f64>,
    cfg: &BackendConfig,
) -> Result<(QuantumState, ExactStats)> {
    let n = spec.n();
    if n > MAX_EXACT_SITES {
        return Err(Error::TooLarge {
            backend: "exact",
            n,
            limit: MAX_EXACT_SITES,
        });
    }
    cfg.validate()?;
    let op = RingOperator::new(n, spec.j_programmed());
    let mut psi = op.basis_state(&initial_state(spec));
    let mut stats = ExactStats::default();
    let mut prop = Propagator::new(&op);

    let coeffs_at = |t_ns: f64| -> Result<Coefficients> {
        let t_us = (t_ns * 1e-3).clamp(0.0, waveform.total_us());
        let s = waveform.s_at(t_us)?;
        let (a, b) = table.interpolate(s)?;
        Ok(Coefficients::new(a, b))
    };

    let bp = waveform.breakpoints();
    for win in bp.windows(2) {
        let (t0, s0) = win[0];
        let (t1, s1) = win[1];
        let len_ns = (t1 - t0) * 1e3;
        if len_ns <= 0.0 {
            continue;
        }
        if s0 == s1 {
            let (a, b) = table.interpolate(s0)?;
            let c = Coefficients::new(a, b);
            hold(&op, c, len_ns, &mut psi, &mut prop, &mut stats);
            renormalize(&mut psi, &mut stats)?;
            continue;
        }
        let steps = (len_ns / cfg.dt_ns).ceil().max(1.0) as usize;
        let h = len_ns / steps as f64;
        let (alpha1, alpha2) = (0.25 + SQRT3_6, 0.25 - SQRT3_6);
        for step in 0..steps {
            let start = t0 * 1e3 + step as f64 * h;
            let c1 = coeffs_at(start + (0.5 - SQRT3_6) * h)?;
            let c2 = coeffs_at(start + (0.5 + SQRT3_6) * h)?;
            // the exponential weighted toward the earlier node acts first
            prop.step(c1.scaled(alpha1).plus(c2.scaled(alpha2)), h, &mut psi);
            prop.step(c1.scaled(alpha2).plus(c2.scaled(alpha1)), h, &mut psi);
            stats.magnus_steps += 1;
            renormalize(&mut psi, &mut stats)?;
        }
    }
    stats.matvecs = prop.products;
    Ok((QuantumState::from_amplitudes(n, psi), stats))
}

fn hold(
    op: &RingOperator,
    c: Coefficients,
    len_ns: f64,
    psi: &mut [Complex64],
    prop: &mut Propagator,
    stats: &mut ExactStats,
) {
    if c.a == 0.0 {
        for (x, z) in psi.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * op.diagonal(c.b, x) * len_ns);
        }
        return;
    }
    let (lo, hi) = op.spectral_bounds(c);
    let terms = std::f64::consts::PI * (hi - lo) * len_ns + 50.0;
    let cheb_cost = terms * op.dim() as f64 * (op.n() as f64 + 4.0) * 8.0;
    if SectorPropagator::estimated_cost(op.n()) < cheb_cost {
        SectorPropagator::new(op, c).evolve(len_ns, psi);
        stats.sector_holds += 1;
    } else {
        prop.step(c, len_ns, psi);
    }
}

fn renormalize(psi: &mut [Complex64], stats: &mut ExactStats) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let drift = (norm - 1.0).abs();
    stats.max_norm_drift = stats.max_norm_drift.max(drift);
    if drift > NORM_TOLERANCE || !drift.is_finite() {
        return Err(Error::NormDrift {
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    let inv = 1.0 / norm;
    psi.iter_mut().for_each(|z| *z *= inv);
    Ok(())
}
