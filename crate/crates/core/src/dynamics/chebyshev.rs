//! Chebyshev expansion of `exp(−i 2π H t)` acting on a state vector.
//!
//! With the spectrum mapped onto `[−1, 1]` by `H = c + r·H̃`, the
//! Jacobi–Anger series `e^{−ix H̃} = Σ_k ε_k (−i)^k J_k(x) T_k(H̃)` converges
//! super-exponentially once `k` exceeds `x = 2π r t`, so a propagation costs
//! about `x` matrix-vector products regardless of how it is sliced.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::hamiltonian::{flip_sum, Coefficients, RingOperator};

/// Largest Bessel argument handled in one expansion; longer propagations are chunked.
const MAX_ARGUMENT: f64 = 2000.0;
const TRUNCATION: f64 = 1e-16;

/// `J_0(x) .. J_K(x)` for `x ≥ 0`, by Miller's downward recurrence normalised
/// with `J_0 + 2 Σ J_2k = 1`. `K` is chosen so the tail is below 1e−16.
pub fn bessel_sequence(x: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let kmax = (x + 12.0 * x.cbrt() + 30.0).ceil() as usize;
    let start = kmax + 20 + (kmax % 2);
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        let next = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        vals[k - 1] = next;
        if next.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm: f64 = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(kmax + 1);
    for v in vals.iter_mut() {
        *v /= norm;
    }
    while vals.len() > 1 && vals[vals.len() - 1].abs() < TRUNCATION {
        vals.pop();
    }
    vals
}

/// Reusable buffers for [`Propagator::step`].
pub struct Propagator<'a> {
    op: &'a RingOperator,
    prev: Vec<Complex64>,
    cur: Vec<Complex64>,
    acc: Vec<Complex64>,
    flips: Vec<Complex64>,
    diag: Vec<f64>,
    /// Total matrix-vector products performed so far.
    pub products: u64,
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a RingOperator) -> Self {
        let dim = op.dim();
        let zero = Complex64::new(0.0, 0.0);
        Propagator {
            op,
            prev: vec![zero; dim],
            cur: vec![zero; dim],
            acc: vec![zero; dim],
            flips: vec![zero; dim],
            diag: vec![0.0; dim],
            products: 0,
        }
    }

    /// `psi ← exp(−i 2π H(c) t_ns) psi`.
    pub fn step(&mut self, c: Coefficients, t_ns: f64, psi: &mut [Complex64]) {
        if t_ns == 0.0 {
            return;
        }
        let (lo, hi) = self.op.spectral_bounds(c);
        let center = 0.5 * (hi + lo);
        let radius = 0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-300;
        let total = 2.0 * PI * radius * t_ns.abs();
        let chunks = (total / MAX_ARGUMENT).ceil().max(1.0) as usize;
        let dt = t_ns / chunks as f64;
        for _ in 0..chunks {
            self.expand(c, center, radius, dt, psi);
        }
    }

    fn expand(
        &mut self,
        c: Coefficients,
        center: f64,
        radius: f64,
        t_ns: f64,
        psi: &mut [Complex64],
    ) {
        let op = self.op;
        let n = op.n();
        let x = 2.0 * PI * radius * t_ns.abs();
        let sign = t_ns.signum();
        let bessel = bessel_sequence(x);

        for (idx, d) in self.diag.iter_mut().enumerate() {
            *d = (op.diagonal(c.b, idx) - center) / radius;
        }
        let off = -0.5 * c.a / radius;

        // coefficient ε_k (−i·sign)^k J_k(x)
        let coef = |k: usize| -> Complex64 {
            let eps = if k == 0 { 1.0 } else { 2.0 };
            let phase = match k % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -sign),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, sign),
            };
            phase * (eps * bessel[k])
        };

        let c0 = coef(0);
        self.prev.copy_from_slice(psi);
        for (a, p) in self.acc.iter_mut().zip(psi.iter()) {
            *a = *p * c0;
        }
        if bessel.len() > 1 {
            let c1 = coef(1);
            let (prev, cur, acc, diag) = (&self.prev, &mut self.cur, &mut self.acc, &self.diag);
            flip_sum(n, prev, cur);
            for (((v, p), a), d) in cur
                .iter_mut()
                .zip(prev.iter())
                .zip(acc.iter_mut())
                .zip(diag)
            {
                *v = *p * *d + *v * off;
                *a += *v * c1;
            }
            self.products += 1;
        }
        for k in 2..bessel.len() {
            let ck = coef(k);
            // prev ← 2 H̃ cur − prev, then swap so cur holds T_k
            {
                let (prev, cur, acc, diag, flips) = (
                    &mut self.prev,
                    &self.cur,
                    &mut self.acc,
                    &self.diag,
                    &mut self.flips,
                );
                flip_sum(n, cur, flips);
                for ((((p, c), a), d), f) in prev
                    .iter_mut()
                    .zip(cur.iter())
                    .zip(acc.iter_mut())
                    .zip(diag)
                    .zip(flips.iter())
                {
                    let v = (*c * *d + *f * off) * 2.0 - *p;
                    *p = v;
                    *a += v * ck;
                }
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            self.products += 1;
        }
        let global = Complex64::from_polar(1.0, -2.0 * PI * center * t_ns);
        for (p, a) in psi.iter_mut().zip(&self.acc) {
            *p = *a * global;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_sequence(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_sequence(10.0);
        assert!((j[0] - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((j[5] - (-0.234_061_528_186_793_6)).abs() < 1e-14);
        assert_eq!(bessel_sequence(0.0), vec![1.0]);
    }

    #[test]
    fn bessel_square_sum_identity() {
        for x in [0.3, 7.0, 150.0, 1999.0] {
            let j = bessel_sequence(x);
            let s: f64 = j[0] * j[0] + 2.0 * j.iter().skip(1).map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
            assert!(j.len() as f64 > x);
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let op = RingOperator::new(5, 1.0);
        let c = Coefficients::new(1.7, 3.2);
        let t = 2.3;
        let eig = op.dense(c).symmetric_eigen();
        let dim = op.dim();
        let mut psi: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.5).cos()))
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|z| *z /= norm);

        let v = &eig.eigenvectors;
        let mut expect = vec![Complex64::new(0.0, 0.0); dim];
        for m in 0..dim {
            let mut proj = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                proj += psi[k] * v[(k, m)];
            }
            proj *= Complex64::from_polar(1.0, -2.0 * PI * eig.eigenvalues[m] * t);
            for k in 0..dim {
                expect[k] += proj * v[(k, m)];
            }
        }
        let mut prop = Propagator::new(&op);
        prop.step(c, t, &mut psi);
        for k in 0..dim {
            assert!((psi[k] - expect[k]).norm() < 1e-11, "{k}");
        }
    }

    #[test]
    fn backward_step_inverts_forward() {
        let op = RingOperator::new(7, 1.0);
        let c = Coefficients::new(0.9, 4.0);
        let mut psi = vec![Complex64::new(0.0, 0.0); op.dim()];
        psi[5] = Complex64::new(1.0, 0.0);
        let orig = psi.clone();
        let mut prop = Propagator::new(&op);
        prop.step(c, 40.0, &mut psi);
        prop.step(c, -40.0, &mut psi);
        for (a, b) in psi.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
