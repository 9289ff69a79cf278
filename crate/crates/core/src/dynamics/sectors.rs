//! Exact propagation under a constant Hamiltonian by diagonalising it in the
//! momentum sectors of the ring's translation group.
//!
//! For an orbit representative `r` of period `p` and momentum
//! `k = 2πm/n` with `m·p ≡ 0 (mod n)`, the sector basis vector is
//! `|r,k⟩ = p^{-1/2} Σ_{l<p} e^{−ikl} Tˡ|r⟩`, where `T` shifts every spin
//! one site forward. A spin flip maps `Tˡ r` onto `T^{l'} r'`, which gives the
//! block element `−(a/2)·e^{ikl'}·√(p/p')`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::{Coefficients, RingOperator};

#[derive(Debug, Clone)]
struct Orbits {
    n: usize,
    reps: Vec<usize>,
    period: Vec<usize>,
    /// For every basis state: (orbit index, l) with x = Tˡ rep.
    member: Vec<(u32, u32)>,
}

fn translate(x: usize, n: usize) -> usize {
    let mask = (1usize << n) - 1;
    ((x << 1) | (x >> (n - 1))) & mask
}

impl Orbits {
    fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let mut member = vec![(u32::MAX, 0u32); dim];
        let mut reps = Vec::new();
        let mut period = Vec::new();
        for x in 0..dim {
            if member[x].0 != u32::MAX {
                continue;
            }
            let orbit = reps.len() as u32;
            let mut y = x;
            let mut l = 0u32;
            loop {
                member[y] = (orbit, l);
                y = translate(y, n);
                l += 1;
                if y == x {
                    break;
                }
            }
            reps.push(x);
            period.push(l as usize);
        }
        Orbits {
            n,
            reps,
            period,
            member,
        }
    }
}

struct Sector {
    momentum: f64,
    /// orbit index for each sector basis vector
    orbits: Vec<usize>,
    /// position of each orbit inside this sector (usize::MAX if absent)
    slot: Vec<usize>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

/// Spectral decomposition of one Hamiltonian, reusable for any duration.
pub struct SectorPropagator {
    orbits: Orbits,
    sectors: Vec<Sector>,
}

impl SectorPropagator {
    pub fn new(op: &RingOperator, c: Coefficients) -> Self {
        let n = op.n();
        let orbits = Orbits::new(n);
        let sectors = (0..n).map(|m| build_sector(op, &orbits, c, m)).collect();
        SectorPropagator { orbits, sectors }
    }

    /// Rough floating-point cost of [`SectorPropagator::new`], for choosing
    /// between this and the Chebyshev route.
    pub fn estimated_cost(n: usize) -> f64 {
        let d = (1usize << n) as f64 / n as f64;
        n as f64 * 60.0 * d * d * d
    }

    /// `psi ← exp(−i 2π H t_ns) psi`.
    pub fn evolve(&self, t_ns: f64, psi: &mut [Complex64]) {
        let n = self.orbits.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; psi.len()];
        for sector in &self.sectors {
            let k = sector.momentum;
            let dim = sector.orbits.len();
            let mut coeff = DVector::from_element(dim, zero);
            for (x, &amp) in psi.iter().enumerate() {
                if amp == zero {
                    continue;
                }
                let (orbit, l) = self.orbits.member[x];
                let slot = sector.slot[orbit as usize];
                if slot == usize::MAX {
                    continue;
                }
                let p = self.orbits.period[orbit as usize] as f64;
                coeff[slot] += Complex64::from_polar(1.0 / p.sqrt(), k * l as f64) * amp;
            }
            let v = &sector.eigenvectors;
            let mut rotated = v.ad_mul(&coeff);
            for (z, &e) in rotated.iter_mut().zip(sector.eigenvalues.iter()) {
                *z *= Complex64::from_polar(1.0, -2.0 * PI * e * t_ns);
            }
            let evolved = v * rotated;
            for (slot, &orbit) in sector.orbits.iter().enumerate() {
                let p = self.orbits.period[orbit];
                let mut y = self.orbits.reps[orbit];
                for l in 0..p {
                    out[y] += Complex64::from_polar(1.0 / (p as f64).sqrt(), -k * l as f64)
                        * evolved[slot];
                    y = translate(y, n);
                }
            }
        }
        psi.copy_from_slice(&out);
    }
}

fn build_sector(op: &RingOperator, orbits: &Orbits, c: Coefficients, m: usize) -> Sector {
    let n = op.n();
    let k = 2.0 * PI * m as f64 / n as f64;
    let mut slot = vec![usize::MAX; orbits.reps.len()];
    let mut members = Vec::new();
    for (o, &p) in orbits.period.iter().enumerate() {
        if (m * p).is_multiple_of(n) {
            slot[o] = members.len();
            members.push(o);
        }
    }
    let dim = members.len();
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (col, &o) in members.iter().enumerate() {
        let rep = orbits.reps[o];
        let p = orbits.period[o] as f64;
        h[(col, col)] += Complex64::new(op.diagonal(c.b, rep), 0.0);
        for i in 0..n {
            let flipped = rep ^ (1 << i);
            let (o2, l2) = orbits.member[flipped];
            let row = slot[o2 as usize];
            if row == usize::MAX {
                continue;
            }
            let p2 = orbits.period[o2 as usize] as f64;
            h[(row, col)] += Complex64::from_polar(-0.5 * c.a * (p / p2).sqrt(), k * l2 as f64);
        }
    }
    // symmetrise away rounding before the Hermitian solver
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    Sector {
        momentum: k,
        orbits: members,
        slot,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
    }
}
