//! Quadrature primitives shared by the spectral and Markov modules.
//!
//! * [`integrate`]: globally adaptive Gauss-Kronrod 7/15 on a finite interval
//!   with user breakpoints.
//! * [`integrate_half_line`]: the same on `[0, inf)` via `w = b / u` on the tail.
//! * [`fourier_half_line`]: `int_0^inf h(w) cos(wt) dw` (or `sin`) summed over
//!   half periods and accelerated with the Wynn epsilon algorithm.
//! * [`abel_limit`]: `eta -> 0+` Richardson extrapolation of Abel-damped
//!   integrals.
//!
//! Integrand values are anything implementing [`QuadValue`] so that complex
//! and matrix valued integrands share one pass over the nodes.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::lit;
use crate::{Error, Real, Result};

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue<T: Real>: Clone {
    /// Zero with the same shape as `self`.
    fn zero_like(&self) -> Self;
    /// `self += a * x`.
    fn add_scaled(&mut self, a: T, x: &Self);
    /// Max-abs norm.
    fn norm(&self) -> T;
    fn is_finite(&self) -> bool;
}

impl<T: Real> QuadValue<T> for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        *self += a * *x;
    }
    fn norm(&self) -> T {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        self.as_f64().is_finite()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero_like(&self) -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        self.re += a * x.re;
        self.im += a * x.im;
    }
    fn norm(&self) -> T {
        self.re.abs().max(self.im.abs())
    }
    fn is_finite(&self) -> bool {
        self.re.as_f64().is_finite() && self.im.as_f64().is_finite()
    }
}

impl<T: Real> QuadValue<T> for DMatrix<T> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += a * *v;
        }
    }
    fn norm(&self) -> T {
        self.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.as_f64().is_finite())
    }
}

/// Integral value with an absolute error estimate.
#[derive(Debug, Clone)]
pub struct Estimate<V, T> {
    pub value: V,
    pub error: T,
}

/// Stopping rule for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs: T::tol(abs, 4.0),
            rel: T::tol(rel, 50.0),
            max_intervals: 400,
        }
    }
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self::new(1e-14, 1e-12)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T, V, F>(f: &mut F, a: T, b: T) -> Result<(V, T)>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let half = (b - a) * lit::<T>(0.5);
    let center = a + half;
    let fc = f(center);
    if !fc.is_finite() {
        return Err(non_finite(center));
    }
    let mut kron = fc.zero_like();
    let mut gauss = fc.zero_like();
    kron.add_scaled(lit(WGK[7]), &fc);
    gauss.add_scaled(lit(WG[3]), &fc);
    let mut samples: Vec<(V, V)> = Vec::with_capacity(7);
    for j in 0..7 {
        let dx = half * lit::<T>(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(non_finite(center - dx));
        }
        let w = lit::<T>(WGK[j]);
        kron.add_scaled(w, &f1);
        kron.add_scaled(w, &f2);
        if j % 2 == 1 {
            let wg = lit::<T>(WG[j / 2]);
            gauss.add_scaled(wg, &f1);
            gauss.add_scaled(wg, &f2);
        }
        samples.push((f1, f2));
    }
    // QUADPACK-style error scaling against the mean deviation of the samples.
    let mut mean = kron.clone();
    mean.add_scaled(-lit::<T>(0.5), &kron);
    let mut resasc = {
        let mut d = fc.clone();
        d.add_scaled(-T::one(), &mean);
        lit::<T>(WGK[7]) * d.norm()
    };
    for (j, (f1, f2)) in samples.iter().enumerate() {
        let mut d1 = f1.clone();
        d1.add_scaled(-T::one(), &mean);
        let mut d2 = f2.clone();
        d2.add_scaled(-T::one(), &mean);
        resasc += lit::<T>(WGK[j]) * (d1.norm() + d2.norm());
    }
    let mut diff = kron.clone();
    diff.add_scaled(-T::one(), &gauss);
    let abs_half = half.abs();
    let mut err = diff.norm() * abs_half;
    resasc *= abs_half;
    if resasc > T::zero() && err > T::zero() {
        let scale = (lit::<T>(200.0) * err / resasc).powf(lit(1.5));
        err = if scale < T::one() {
            resasc * scale
        } else {
            resasc
        };
    }
    let mut value = kron.zero_like();
    value.add_scaled(half, &kron);
    let floor = lit::<T>(50.0) * T::eps() * value.norm();
    if err < floor {
        err = floor;
    }
    Ok((value, err))
}

fn non_finite<T: Real>(x: T) -> Error {
    Error::EvaluationFailure(format!("non-finite integrand near {:e}", x.as_f64()))
}

/// Globally adaptive integration over `[a, b]`, splitting first at
/// `breakpoints` that fall strictly inside.
pub fn integrate<T, V, F>(
    mut f: F,
    a: T,
    b: T,
    breakpoints: &[T],
    tol: Tolerance<T>,
) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let mut cuts = vec![a];
    let mut inner: Vec<T> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut intervals: Vec<(T, T, V, T)> = Vec::new();
    for w in cuts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1])?;
        intervals.push((w[0], w[1], v, e));
    }
    loop {
        let mut total = intervals[0].2.zero_like();
        let mut err = T::zero();
        let mut worst = 0;
        for (i, iv) in intervals.iter().enumerate() {
            total.add_scaled(T::one(), &iv.2);
            err += iv.3;
            if iv.3 > intervals[worst].3 {
                worst = i;
            }
        }
        let target = tol.abs.max(tol.rel * total.norm());
        if err <= target || intervals.len() >= tol.max_intervals {
            return Ok(Estimate {
                value: total,
                error: err,
            });
        }
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = (lo + hi) * lit::<T>(0.5);
        if !(mid > lo && mid < hi) {
            return Ok(Estimate {
                value: total,
                error: err,
            });
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `int_0^inf f(w) dw` for integrands decaying faster than `1/w`.
///
/// `[0, split]` is handled directly; the tail is mapped onto `(0, 1]` with
/// `w = split / u`.
pub fn integrate_half_line<T, V, F>(
    mut f: F,
    split: T,
    breakpoints: &[T],
    tol: Tolerance<T>,
) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let head = integrate(&mut f, T::zero(), split, breakpoints, tol)?;
    let mapped: Vec<T> = breakpoints
        .iter()
        .filter(|&&x| x > split)
        .map(|&x| split / x)
        .collect();
    let tail = integrate(
        |u: T| {
            let w = split / u;
            let mut v = f(w);
            let s = split / (u * u);
            let z = v.zero_like();
            let fv = v.clone();
            v = z;
            v.add_scaled(s, &fv);
            v
        },
        T::zero(),
        T::one(),
        &mapped,
        tol,
    )?;
    let mut value = head.value;
    value.add_scaled(T::one(), &tail.value);
    Ok(Estimate {
        value,
        error: head.error + tail.error,
    })
}

/// Which trigonometric factor multiplies the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// `int_0^inf h(w) trig(w t) dw` for `t != 0`.
///
/// With `support_end = Some(e)` the integrand vanishes beyond `e` and the
/// integral is finite. Otherwise partial sums over half periods are
/// extrapolated with the Wynn epsilon algorithm; for `h` tending to a
/// constant this yields the Abel-summed value.
pub fn fourier_half_line<T, F>(
    mut h: F,
    t: T,
    trig: Trig,
    breakpoints: &[T],
    support_end: Option<T>,
    tol: Tolerance<T>,
) -> Result<Estimate<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if t == T::zero() {
        return Err(Error::InvalidArgument(
            "fourier_half_line needs t != 0".into(),
        ));
    }
    let at = t.abs();
    let period = T::pi() / at;
    let mut g = |w: T| -> T {
        let x = w * t;
        let c = match trig {
            Trig::Cos => x.cos(),
            Trig::Sin => x.sin(),
        };
        h(w) * c
    };

    if let Some(end) = support_end {
        let mut cuts: Vec<T> = breakpoints.to_vec();
        let mut k = 1usize;
        loop {
            let x = period * lit::<T>(k as f64);
            if x >= end || k > 200_000 {
                break;
            }
            cuts.push(x);
            k += 1;
        }
        return integrate(&mut g, T::zero(), end, &cuts, tol);
    }

    // Head: up to the first half-period boundary past every breakpoint.
    let last_bp = breakpoints.iter().copied().fold(T::zero(), |m, x| m.max(x));
    let k0 = ((last_bp / period).floor().as_f64() as usize) + 1;
    let head_end = period * lit::<T>(k0 as f64);
    let mut head_cuts: Vec<T> = breakpoints.to_vec();
    for k in 1..k0 {
        head_cuts.push(period * lit::<T>(k as f64));
    }
    let head = integrate(&mut g, T::zero(), head_end, &head_cuts, tol)?;
    let mut err = head.error;
    let mut partial = vec![head.value];
    let mut extrap: Vec<T> = Vec::new();
    let max_panels = 4000usize;
    for k in 0..max_panels {
        let lo = head_end + period * lit::<T>(k as f64);
        let hi = lo + period;
        let panel = integrate(&mut g, lo, hi, &[], tol)?;
        err += panel.error;
        let s = *partial.last().unwrap() + panel.value;
        partial.push(s);
        let e = wynn_epsilon(&partial);
        extrap.push(e);
        let m = extrap.len();
        if m >= 4 {
            let scale = e.abs().max(head.value.abs());
            let thr = tol.abs.max(tol.rel * scale);
            let d1 = (extrap[m - 1] - extrap[m - 2]).abs();
            let d2 = (extrap[m - 2] - extrap[m - 3]).abs();
            if d1 <= thr && d2 <= thr {
                return Ok(Estimate {
                    value: e,
                    error: err + d1,
                });
            }
        }
    }
    Err(Error::DivergentIntegral(format!(
        "oscillatory tail did not converge after {max_panels} half periods"
    )))
}

/// Last even-column entry of the Wynn epsilon table for `seq`.
pub fn wynn_epsilon<T: Real>(seq: &[T]) -> T {
    let n = seq.len();
    let mut best = seq[n - 1];
    if n < 3 {
        return best;
    }
    let mut prev: Vec<T> = vec![T::zero(); n + 1];
    let mut cur: Vec<T> = seq.to_vec();
    for k in 1..n {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let d = cur[j + 1] - cur[j];
            if d == T::zero() || !d.as_f64().is_finite() {
                return best;
            }
            let v = prev[j + 1] + T::one() / d;
            if !v.as_f64().is_finite() {
                return best;
            }
            next.push(v);
        }
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            match cur.last() {
                Some(&v) => best = v,
                None => break,
            }
        }
        if cur.len() < 2 {
            break;
        }
    }
    best
}

/// Abel damping parameters used for oscillatory integrals whose integrand
/// does not decay.
pub const ABEL_ETAS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Failure threshold for the spread between successive extrapolants.
pub const ABEL_SPREAD_TOL: f64 = 1e-5;

/// `eta -> 0+` limit of `damped(eta)` from the three [`ABEL_ETAS`] values,
/// assuming a regular expansion in powers of `eta`. Returns the extrapolant
/// and the spread between the last two extrapolation levels.
pub fn abel_limit<T, V, F>(mut damped: F) -> Result<(V, T)>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> Result<V>,
{
    let f1 = damped(lit(ABEL_ETAS[0]))?;
    let f2 = damped(lit(ABEL_ETAS[1]))?;
    let f3 = damped(lit(ABEL_ETAS[2]))?;
    // Halving eta: first level removes O(eta), second O(eta^2).
    let mut r1a = f2.zero_like();
    r1a.add_scaled(lit(2.0), &f2);
    r1a.add_scaled(-T::one(), &f1);
    let mut r1b = f3.zero_like();
    r1b.add_scaled(lit(2.0), &f3);
    r1b.add_scaled(-T::one(), &f2);
    let mut r2 = r1b.zero_like();
    r2.add_scaled(lit(4.0 / 3.0), &r1b);
    r2.add_scaled(lit(-1.0 / 3.0), &r1a);
    let mut spread = r2.clone();
    spread.add_scaled(-T::one(), &r1b);
    let s = spread.norm();
    let thr = lit::<T>(ABEL_SPREAD_TOL) * T::one().max(r2.norm());
    if !(s <= thr) {
        return Err(Error::RegularizationFailure(s.as_f64()));
    }
    Ok((r2, s))
}

/// `int_0^inf f(w) exp(-eta w) dw` with panels no wider than half a period of
/// `tau` so the adaptive rule sees every oscillation.
pub fn integrate_damped<T, V, F>(
    mut f: F,
    tau: T,
    eta: T,
    breakpoints: &[T],
    tol: Tolerance<T>,
) -> Result<V>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let end = lit::<T>(46.0) / eta;
    let mut width = T::one() / eta;
    if tau != T::zero() {
        width = width.min(T::pi() / tau.abs());
    }
    let mut g = |w: T| {
        let v = f(w);
        let mut out = v.zero_like();
        out.add_scaled((-eta * w).exp(), &v);
        out
    };
    let mut lo = T::zero();
    let mut total: Option<V> = None;
    let mut bps: Vec<T> = breakpoints.to_vec();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    while lo < end {
        let hi = (lo + width).min(end);
        let inner: Vec<T> = bps.iter().copied().filter(|&x| x > lo && x < hi).collect();
        let est = integrate(&mut g, lo, hi, &inner, tol)?;
        match total.as_mut() {
            Some(t) => t.add_scaled(T::one(), &est.value),
            None => total = Some(est.value),
        }
        lo = hi;
    }
    Ok(total.expect("at least one panel"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let est = integrate(
            |x: f64| x * x * x - 2.0 * x,
            0.0,
            2.0,
            &[],
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(est.value, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn breakpoint_kink() {
        let est = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 2.5, epsilon = 1e-13);
    }

    #[test]
    fn half_line_lorentzian() {
        let est = integrate_half_line(|w: f64| 1.0 / (1.0 + w * w), 4.0, &[], Tolerance::default())
            .unwrap();
        assert_relative_eq!(est.value, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn fourier_lorentzian() {
        // int_0^inf cos(w t)/(1+w^2) dw = pi/2 e^{-t}
        for &t in &[0.3, 1.0, 5.0] {
            let est = fourier_half_line(
                |w: f64| 1.0 / (1.0 + w * w),
                t,
                Trig::Cos,
                &[],
                None,
                Tolerance::default(),
            )
            .unwrap();
            let exact = std::f64::consts::FRAC_PI_2 * (-t).exp();
            assert_relative_eq!(est.value, exact, epsilon = 1e-11);
        }
    }

    #[test]
    fn fourier_dirichlet_abel_sum() {
        // int_0^inf sin(w t)/w dw = pi/2 sign(t)
        let est = fourier_half_line(
            |w: f64| 1.0 / w,
            -2.0,
            Trig::Sin,
            &[],
            None,
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(est.value, -std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let seq: Vec<f64> = (1..=15)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert_relative_eq!(wynn_epsilon(&seq), 2f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn abel_limit_of_sine_integral() {
        // int_0^inf sin(w) e^{-eta w}/w dw = atan(1/eta) -> pi/2
        let (v, _) = abel_limit(|eta: f64| {
            integrate_damped(|w: f64| w.sin() / w, 1.0, eta, &[], Tolerance::default())
        })
        .unwrap();
        assert_relative_eq!(v, std::f64::consts::FRAC_PI_2, epsilon = 1e-6);
    }
}
