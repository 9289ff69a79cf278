//! The ring Hamiltonian `H = b·(J/2) Σ σz σz − (a/2) Σ σx` in the Z basis.
//!
//! Basis index bit `i` set means site `i` points down. The diagonal depends
//! only on the wall count `w` of the configuration: `Σ σz σz = 2w − n`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ring::SpinConfig;

/// Sparse matrix-free representation of the ring Hamiltonian family.
#[derive(Debug, Clone)]
pub struct RingOperator {
    n: usize,
    j: f64,
    walls: Vec<u8>,
}

/// Coefficients of one member of the family, in GHz: `a` multiplies the
/// transverse part, `b` the coupling part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
}

impl Coefficients {
    pub fn new(a: f64, b: f64) -> Self {
        Coefficients { a, b }
    }

    pub fn scaled(self, w: f64) -> Self {
        Coefficients {
            a: self.a * w,
            b: self.b * w,
        }
    }

    pub fn plus(self, other: Coefficients) -> Self {
        Coefficients {
            a: self.a + other.a,
            b: self.b + other.b,
        }
    }
}

impl RingOperator {
    pub fn new(n: usize, j: f64) -> Self {
        assert!(n <= 30, "state-vector ring limited to 30 sites");
        let dim = 1usize << n;
        let mask = dim - 1;
        let walls = (0..dim)
            .map(|x| {
                // edge e aligned <=> bits e and e+1 equal
                let rot = ((x >> 1) | (x << (n - 1))) & mask;
                (n - (x ^ rot).count_ones() as usize) as u8
            })
            .collect();
        RingOperator { n, j, walls }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn wall_count(&self, x: usize) -> usize {
        self.walls[x] as usize
    }

    /// Diagonal energy of basis state `x` for coupling coefficient `b`.
    pub fn diagonal(&self, b: f64, x: usize) -> f64 {
        self.level(b, self.walls[x] as usize)
    }

    fn level(&self, b: f64, walls: usize) -> f64 {
        0.5 * b * self.j * (2.0 * walls as f64 - self.n as f64)
    }

    /// Interval guaranteed to contain the spectrum (Gershgorin on the
    /// transverse part, exact range of the diagonal).
    pub fn spectral_bounds(&self, c: Coefficients) -> (f64, f64) {
        let lo_level = self.level(c.b, 1);
        let hi_level = self.level(c.b, self.n);
        let (dmin, dmax) = if lo_level <= hi_level {
            (lo_level, hi_level)
        } else {
            (hi_level, lo_level)
        };
        let radius = 0.5 * c.a.abs() * self.n as f64;
        (dmin - radius, dmax + radius)
    }

    /// `out = H ψ`.
    pub fn apply(&self, c: Coefficients, psi: &[Complex64], out: &mut [Complex64]) {
        let half_a = 0.5 * c.a;
        flip_sum(self.n, psi, out);
        for (x, o) in out.iter_mut().enumerate() {
            *o = psi[x] * self.diagonal(c.b, x) - *o * half_a;
        }
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, c: Coefficients, psi: &[Complex64]) -> f64 {
        let mut h = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply(c, psi, &mut h);
        psi.iter().zip(&h).map(|(p, q)| (p.conj() * q).re).sum()
    }

    /// Dense real-symmetric matrix (small rings only).
    pub fn dense(&self, c: Coefficients) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            m[(x, x)] = self.diagonal(c.b, x);
            for i in 0..self.n {
                m[(x ^ (1 << i), x)] -= 0.5 * c.a;
            }
        }
        m
    }

    /// Product state |cfg⟩.
    pub fn basis_state(&self, cfg: &SpinConfig) -> Vec<Complex64> {
        let mut psi = vec![Complex64::new(0.0, 0.0); self.dim()];
        psi[cfg.basis_index() as usize] = Complex64::new(1.0, 0.0);
        psi
    }
}

/// `dst[x] = Σ_i src[x ^ 2^i]`, summed bit by bit over contiguous blocks.
pub(crate) fn flip_sum(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
    if n == 0 {
        dst.fill(Complex64::new(0.0, 0.0));
        return;
    }
    for (d, s) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
        d[0] = s[1];
        d[1] = s[0];
    }
    for i in 1..n {
        let h = 1 << i;
        for (d, s) in dst.chunks_exact_mut(2 * h).zip(src.chunks_exact(2 * h)) {
            let (d_lo, d_hi) = d.split_at_mut(h);
            let (s_lo, s_hi) = s.split_at(h);
            for (a, b) in d_lo.iter_mut().zip(s_hi) {
                *a += *b;
            }
            for (a, b) in d_hi.iter_mut().zip(s_lo) {
                *a += *b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::detect_walls;

    #[test]
    fn wall_table_matches_detection() {
        let op = RingOperator::new(7, 1.0);
        for x in 0..op.dim() {
            let cfg = SpinConfig::from_basis_index(x as u64, 7);
            assert_eq!(op.wall_count(x), detect_walls(&cfg).len());
        }
    }

    #[test]
    fn dense_matches_apply_and_is_symmetric() {
        let op = RingOperator::new(5, 0.7);
        let c = Coefficients::new(1.3, 2.1);
        let m = op.dense(c);
        assert_eq!(m.clone(), m.transpose());
        let psi: Vec<Complex64> = (0..32)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 32];
        op.apply(c, &psi, &mut out);
        for r in 0..32 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..32 {
                acc += psi[k] * m[(r, k)];
            }
            assert!((acc - out[r]).norm() < 1e-12);
        }
    }

    #[test]
    fn spectrum_inside_bounds() {
        let op = RingOperator::new(5, 1.0);
        for (a, b) in [(0.0, 10.0), (6.0, 0.0), (1.5, 2.5), (0.3, -0.2)] {
            let c = Coefficients::new(a, b);
            let (lo, hi) = op.spectral_bounds(c);
            let eig = op.dense(c).symmetric_eigen();
            for &e in eig.eigenvalues.iter() {
                assert!(e >= lo - 1e-9 && e <= hi + 1e-9, "{e} not in [{lo},{hi}]");
            }
        }
    }
}
