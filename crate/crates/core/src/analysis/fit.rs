//! Sigmoid fits, onset extraction and power-law scaling over sweep metrics.

use serde::Serialize;

use super::PointMetrics;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Abscissa used when fitting the entropy curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxis {
    /// `x = log10(Γ/J)`.
    #[default]
    LogGammaOverJ,
    /// `x = s_pause`.
    S,
}

/// `y = L / (1 + exp(−k (x − x0)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmoidFit<T> {
    pub l: T,
    pub x0: T,
    pub k: T,
    pub residual_rss: T,
    pub iterations: usize,
    pub converged: bool,
    /// The normal equations were singular, or the fitted amplitude vanished.
    pub degenerate: bool,
}

impl<T: Scalar> SigmoidFit<T> {
    pub fn eval(&self, x: T) -> T {
        sigmoid(self.l, self.x0, self.k, x)
    }
}

pub fn sigmoid<T: Scalar>(l: T, x0: T, k: T, x: T) -> T {
    l / (T::one() + (-k * (x - x0)).exp())
}

const MAX_ITERATIONS: usize = 500;

fn initial_guess<T: Scalar>(xs: &[T], ys: &[T], axis: FitAxis) -> [T; 3] {
    if axis == FitAxis::S {
        return [T::one(), T::lit(0.8), T::lit(-40.0)];
    }
    let l = ys.iter().fold(T::neg_infinity(), |m, &y| m.max(y));
    let half = l / T::lit(2.0);
    let nearest = ys
        .iter()
        .enumerate()
        .min_by(|a, b| (*a.1 - half).abs().partial_cmp(&(*b.1 - half).abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (lo, hi) = xs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = if hi > lo { hi - lo } else { T::one() };
    // rising or falling, from the ends of the data ordered by x
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let first = ys[order[0]];
    let last = ys[order[order.len() - 1]];
    let sign = if last >= first { T::one() } else { -T::one() };
    [l, xs[nearest], sign * T::lit(4.0) / range]
}

fn residuals<T: Scalar>(xs: &[T], ys: &[T], p: &[T; 3]) -> T {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - sigmoid(p[0], p[1], p[2], x);
            r * r
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Solves the symmetric 3×3 system by Gaussian elimination with pivoting.
fn solve3<T: Scalar>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() <= scale * T::epsilon() * T::lit(16.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, &p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *v = *v - f * p;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc = acc - a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Levenberg–Marquardt least squares of the logistic model, analytic Jacobian.
pub fn fit_sigmoid<T: Scalar>(xs: &[T], ys: &[T], axis: FitAxis) -> Result<SigmoidFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "sigmoid fit needs at least 4 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("sigmoid fit data must be finite".into()));
    }
    let mut p = initial_guess(xs, ys, axis);
    let mut rss = residuals(xs, ys, &p);
    let mut lambda = T::lit(1e-3);
    let mut converged = false;
    let mut degenerate = false;
    let mut iterations = 0;
    let tiny = T::epsilon() * T::epsilon();

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for (&x, &y) in xs.iter().zip(ys) {
            let e = (-p[2] * (x - p[1])).exp();
            let sig = T::one() / (T::one() + e);
            let dsig = sig * (T::one() - sig);
            let grad = [sig, -p[0] * p[2] * dsig, p[0] * (x - p[1]) * dsig];
            let r = y - p[0] * sig;
            for i in 0..3 {
                jtr[i] = jtr[i] + grad[i] * r;
                for j in 0..3 {
                    jtj[i][j] = jtj[i][j] + grad[i] * grad[j];
                }
            }
        }
        let gmax = jtr.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if rss <= tiny || gmax <= tiny {
            converged = true;
            break;
        }
        let mut stepped = false;
        while lambda < T::lit(1e16) {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = row[i] + lambda * jtj[i][i].max(T::epsilon());
            }
            let Some(delta) = solve3(a, jtr) else {
                lambda = lambda * T::lit(10.0);
                continue;
            };
            let trial = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
            let trial_rss = residuals(xs, ys, &trial);
            if trial_rss.is_finite() && trial_rss <= rss {
                let small = (0..3).all(|i| delta[i].abs() <= T::lit(1e-14) * (p[i].abs() + T::lit(1e-14)));
                let flat = rss - trial_rss <= T::lit(1e-15) * rss;
                p = trial;
                rss = trial_rss;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                stepped = true;
                if small || flat {
                    converged = true;
                }
                break;
            }
            lambda = lambda * T::lit(10.0);
        }
        if !stepped {
            // no descent direction left; accept if the gradient is negligible
            converged = gmax <= T::lit(1e-10) * (T::one() + rss);
            degenerate = solve3(jtj, jtr).is_none();
            break;
        }
        if converged {
            break;
        }
    }
    let ymax = ys.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if p[0].abs() <= T::lit(1e-9) * (T::one() + ymax) {
        degenerate = true;
    }
    if degenerate {
        converged = false;
    }
    Ok(SigmoidFit {
        l: p[0],
        x0: p[1],
        k: p[2],
        residual_rss: rss,
        iterations,
        converged,
        degenerate,
    })
}

/// Result of [`gamma_init`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Onset<T> {
    Found { gamma_ghz: T, gamma_over_j: T },
    NoOnset,
}

impl<T: Copy> Onset<T> {
    pub fn gamma_ghz(&self) -> Option<T> {
        match self {
            Onset::Found { gamma_ghz, .. } => Some(*gamma_ghz),
            Onset::NoOnset => None,
        }
    }
}

/// Points with a positive, finite Γ and Γ/J, in input order.
fn usable<T: Scalar>(points: &[PointMetrics<T>]) -> Vec<&PointMetrics<T>> {
    points
        .iter()
        .filter(|p| p.gamma_ghz > T::zero() && p.gamma_ghz.is_finite())
        .filter(|p| p.gamma_over_j.finite().is_some_and(|g| g > T::zero()))
        .collect()
}

/// First upward crossing of `h = threshold`, interpolated linearly in
/// `(log10 Γ, h)`. Points must be sorted by ascending Γ/J; points where Γ
/// or Γ/J is zero or infinite are skipped.
pub fn gamma_init<T: Scalar>(points: &[PointMetrics<T>], threshold: T) -> Onset<T> {
    let pts = usable(points);
    let Some(first) = pts.first() else {
        return Onset::NoOnset;
    };
    if first.entropy_h >= threshold {
        return Onset::NoOnset;
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.entropy_h < threshold && b.entropy_h >= threshold {
            let t = (threshold - a.entropy_h) / (b.entropy_h - a.entropy_h);
            let lerp = |u: T, v: T| {
                let (lu, lv) = (u.log10(), v.log10());
                T::lit(10.0).powf(lu + t * (lv - lu))
            };
            let ga = a.gamma_over_j.to_float();
            let gb = b.gamma_over_j.to_float();
            return Onset::Found {
                gamma_ghz: if t == T::one() { b.gamma_ghz } else { lerp(a.gamma_ghz, b.gamma_ghz) },
                gamma_over_j: if t == T::one() { gb } else { lerp(ga, gb) },
            };
        }
    }
    Onset::NoOnset
}

/// Extent of the window of partial memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Wpm<T> {
    Found {
        min_gamma_over_j: T,
        max_gamma_over_j: T,
        width_decades: T,
    },
    NoWpm,
}

/// Smallest and largest finite Γ/J with `lo < h < hi`.
pub fn wpm_bounds<T: Scalar>(points: &[PointMetrics<T>], lo: T, hi: T) -> Wpm<T> {
    let inside: Vec<T> = usable(points)
        .into_iter()
        .filter(|p| p.entropy_h > lo && p.entropy_h < hi)
        .map(|p| p.gamma_over_j.to_float())
        .collect();
    if inside.is_empty() {
        return Wpm::NoWpm;
    }
    let min = inside.iter().fold(T::infinity(), |m, &v| m.min(v));
    let max = inside.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    Wpm::Found {
        min_gamma_over_j: min,
        max_gamma_over_j: max,
        width_decades: (max / min).log10(),
    }
}

/// Straight line through `(log10 τ, log10 1/Γ_init)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn scaling_fit<T: Scalar>(pairs: &[(T, T)]) -> Result<ScalingFit<T>> {
    if pairs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "scaling fit needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(&(t, g)) = pairs.iter().find(|(t, g)| !(*t > T::zero() && *g > T::zero()) || !t.is_finite() || !g.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scaling fit needs positive finite values, got ({t}, {g})"
        )));
    }
    let xs: Vec<T> = pairs.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<T> = pairs.iter().map(|p| -p.1.log10()).collect();
    let m = T::count(pairs.len());
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / m;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / m;
    let sxx = xs.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    let sxy = xs.iter().zip(&ys).fold(T::zero(), |a, (&x, &y)| a + (x - mx) * (y - my));
    if sxx <= T::zero() {
        return Err(Error::InvalidParameter("scaling fit needs at least two distinct times".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = xs
        .iter()
        .zip(&ys)
        .fold(T::zero(), |a, (&x, &y)| a + (y - intercept - slope * x).powi(2));
    let ss_tot = ys.iter().fold(T::zero(), |a, &y| a + (y - my) * (y - my));
    let r_squared = if ss_tot > T::zero() { T::one() - ss_res / ss_tot } else { T::one() };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::GammaRatio;
    use proptest::prelude::*;

    fn point(gamma: f64, h: f64) -> PointMetrics<f64> {
        PointMetrics {
            s_pause: 0.5,
            gamma_over_j: GammaRatio::Finite(gamma),
            gamma_ghz: gamma,
            entropy_h: h,
            sdwp: 1.0,
            moved_sdwp: 0.0,
            mean_wall_count: 1.0,
        }
    }

    fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
    }

    #[test]
    fn recovers_model_parameters() {
        let xs = grid(-4.0, 3.0, 71);
        let ys: Vec<f64> = xs.iter().map(|&x| sigmoid(1.0, -1.3, 4.2, x)).collect();
        let fit = fit_sigmoid(&xs, &ys, FitAxis::LogGammaOverJ).unwrap();
        assert!(fit.converged);
        assert!((fit.l - 1.0).abs() < 1e-6);
        assert!((fit.x0 + 1.3).abs() < 1e-6 * 1.3);
        assert!((fit.k - 4.2).abs() < 1e-6 * 4.2);
        assert!((fit.eval(fit.x0) - fit.l / 2.0).abs() <= f64::EPSILON * fit.l);
    }

    #[test]
    fn recovers_on_s_axis_from_literal_initials() {
        let xs = grid(0.6, 1.0, 81);
        let ys: Vec<f64> = xs.iter().map(|&x| sigmoid(0.95, 0.83, -35.0, x)).collect();
        let fit = fit_sigmoid(&xs, &ys, FitAxis::S).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((fit.x0 - 0.83).abs() < 1e-8);
        assert!((fit.k + 35.0).abs() < 1e-6);
    }

    #[test]
    fn constant_zero_is_degenerate() {
        let xs = grid(-3.0, 3.0, 20);
        let ys = vec![0.0; 20];
        let fit = fit_sigmoid(&xs, &ys, FitAxis::LogGammaOverJ).unwrap();
        assert!(!fit.converged || (fit.l.abs() < 1e-9 && fit.degenerate));
        assert!(fit.degenerate);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_sigmoid(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0], FitAxis::S).is_err());
    }

    #[test]
    fn onset_examples() {
        let pts: Vec<_> = [(1.0, 0.0), (2.0, 0.0), (4.0, 0.05), (8.0, 1.0)]
            .iter()
            .map(|&(g, h)| point(g, h))
            .collect();
        assert_eq!(gamma_init(&pts, 0.05).gamma_ghz(), Some(4.0));
        let pts = vec![point(1.0, 0.0), point(10.0, 0.1)];
        let g = gamma_init(&pts, 0.05).gamma_ghz().unwrap();
        assert!((g - 10f64.sqrt()).abs() < 1e-12);
        let flat = vec![point(1.0, 0.0), point(2.0, 0.0)];
        assert_eq!(gamma_init(&flat, 0.05), Onset::NoOnset);
        let high = vec![point(1.0, 0.5), point(2.0, 0.9)];
        assert_eq!(gamma_init(&high, 0.05), Onset::NoOnset);
    }

    #[test]
    fn onset_skips_zero_and_infinite_points() {
        let mut pts = vec![point(0.0, 0.0), point(1.0, 0.0), point(10.0, 0.1)];
        pts[0].gamma_over_j = GammaRatio::Finite(0.0);
        let mut last = point(100.0, 1.0);
        last.gamma_over_j = GammaRatio::Infinite;
        pts.push(last);
        let g = gamma_init(&pts, 0.05).gamma_ghz().unwrap();
        assert!((g - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wpm_examples() {
        let xs = grid(-6.0, 4.0, 101);
        let (x0, k) = (-1.0, 2.0 * (19f64).ln() / 4.0);
        let pts: Vec<_> = xs.iter().map(|&x| point(10f64.powf(x), sigmoid(1.0, x0, k, x))).collect();
        match wpm_bounds(&pts, 0.05, 0.95) {
            Wpm::Found { width_decades, .. } => assert!((width_decades - 4.0).abs() <= 0.2 + 1e-9),
            Wpm::NoWpm => panic!("expected a window"),
        }
        let step: Vec<_> = xs.iter().map(|&x| point(10f64.powf(x), if x < 0.0 { 0.0 } else { 1.0 })).collect();
        assert_eq!(wpm_bounds(&step, 0.05, 0.95), Wpm::NoWpm);
        let ones: Vec<_> = xs.iter().map(|&x| point(10f64.powf(x), 1.0)).collect();
        assert_eq!(wpm_bounds(&ones, 0.05, 0.95), Wpm::NoWpm);
    }

    #[test]
    fn scaling_examples() {
        let pairs: Vec<(f64, f64)> = [2.0, 100.0, 2000.0].iter().map(|&t: &f64| (t, 0.3 * t.powf(-0.5))).collect();
        let fit = scaling_fit(&pairs).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let two = scaling_fit(&[(1.0f64, 1.0f64), (10.0, 0.01)]).unwrap();
        assert!((two.slope - 2.0).abs() < 1e-12);
        assert!(scaling_fit(&[(1.0, 1.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn f32_fit() {
        let xs: Vec<f32> = (0..40).map(|i| -2.0 + i as f32 * 0.1).collect();
        let ys: Vec<f32> = xs.iter().map(|&x| sigmoid(1.0f32, 0.3, 3.0, x)).collect();
        let fit = fit_sigmoid(&xs, &ys, FitAxis::LogGammaOverJ).unwrap();
        assert!((fit.x0 - 0.3).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn onset_monotone_in_threshold(
            hs in prop::collection::vec(0.0f64..1.0, 2..30),
            t1 in 0.01f64..0.99,
            dt in 0.0f64..0.5,
        ) {
            let pts: Vec<_> = hs.iter().enumerate().map(|(i, &h)| point(10f64.powf(i as f64 * 0.3 - 3.0), h)).collect();
            let t2 = (t1 + dt).min(0.999);
            // a higher threshold that starts above the first point has no onset by definition
            if let (Onset::Found { gamma_ghz: g1, .. }, Onset::Found { gamma_ghz: g2, .. }) =
                (gamma_init(&pts, t1), gamma_init(&pts, t2))
            {
                prop_assert!(g2 >= g1 * (1.0 - 1e-12));
            }
        }

        #[test]
        fn noiseless_recovery(x0 in -5.0f64..5.0, logk in (0.5f64).ln()..(50f64).ln(), falling in prop::bool::ANY) {
            let k = if falling { -logk.exp() } else { logk.exp() };
            let xs = grid(-10.0, 10.0, 201);
            let ys: Vec<f64> = xs.iter().map(|&x| sigmoid(1.0, x0, k, x)).collect();
            let fit = fit_sigmoid(&xs, &ys, FitAxis::LogGammaOverJ).unwrap();
            prop_assert!((fit.l - 1.0).abs() < 1e-6, "{:?}", fit);
            prop_assert!((fit.x0 - x0).abs() < 1e-6 * x0.abs().max(1.0), "{:?}", fit);
            prop_assert!((fit.k - k).abs() < 1e-6 * k.abs(), "{:?}", fit);
        }
    }
}
