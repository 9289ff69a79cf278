//! Dense reference propagator: a product of exact matrix exponentials of
//! `H(s)` frozen at the midpoint of each uniform time slice. Used only to
//! check the production backends.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::{Coefficients, RingOperator};
use super::QuantumState;
use crate::error::{Error, Result};
use crate::ring::{initial_state, RingSpec};
use crate::schedule::{ScheduleTable, Waveform};

pub const MAX_ORACLE_SITES: usize = 8;

pub fn evolve_oracle(
    spec: &RingSpec,
    table: &ScheduleTable<f64>,
    waveform: &Waveform<f64>,
    slices: usize,
) -> Result<QuantumState> {
    let n = spec.n();
    if n > MAX_ORACLE_SITES {
        return Err(Error::TooLarge {
            backend: "oracle",
            n,
            limit: MAX_ORACLE_SITES,
        });
    }
    if slices == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs at least one slice".into(),
        ));
    }
    let op = RingOperator::new(n, spec.j_programmed());
    let dim = op.dim();
    let mut psi = op.basis_state(&initial_state(spec));
    let total_us = waveform.total_us();
    let dt_ns = total_us * 1e3 / slices as f64;

    // hold slices share s, so decompositions are cached by coefficient bits
    let mut cache: HashMap<(u64, u64), (DVector<f64>, DMatrix<f64>)> = HashMap::new();
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..slices {
        let t_mid = (k as f64 + 0.5) * total_us / slices as f64;
        let s = waveform.s_at(t_mid)?;
        let (a, b) = table.interpolate(s)?;
        let (vals, vecs) = cache.entry((a.to_bits(), b.to_bits())).or_insert_with(|| {
            let eig = op.dense(Coefficients::new(a, b)).symmetric_eigen();
            (eig.eigenvalues, eig.eigenvectors)
        });
        // ψ ← V e^{−i2πEΔt} Vᵀ ψ
        for m in 0..dim {
            let mut proj = Complex64::new(0.0, 0.0);
            for x in 0..dim {
                proj += psi[x] * vecs[(x, m)];
            }
            scratch[m] = proj * Complex64::from_polar(1.0, -2.0 * PI * vals[m] * dt_ns);
        }
        for x in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..dim {
                acc += scratch[m] * vecs[(x, m)];
            }
            psi[x] = acc;
        }
    }
    Ok(QuantumState::from_amplitudes(n, psi))
}
