//! Line spectral densities and the kernels derived from them.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use crate::circuit::CircuitSpec;
use crate::quad::{fourier_half_line, integrate, integrate_half_line, Estimate, Tolerance, Trig};
use crate::scalar::lit;
use crate::{Error, Real, Result};

/// Spectral density `J(omega)` of one transmission line. Vanishes for
/// `omega <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity<T> {
    /// `J = r omega`, the memoryless line.
    Ohmic { r: T },
    /// `J = r omega omega_c^2 / (omega^2 + omega_c^2)`.
    Drude { r: T, omega_c: T },
    /// `J = r omega` for `omega <= omega_c`, zero above.
    CutoffOhmic { r: T, omega_c: T },
    /// Piecewise linear through `(omega[i], values[i])`, zero outside the grid.
    Tabulated { omega: Vec<T>, values: Vec<T> },
}

impl<T: Real> SpectralDensity<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Ohmic { .. } => "ohmic",
            Self::Drude { .. } => "drude",
            Self::CutoffOhmic { .. } => "cutoff_ohmic",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    /// Checks the parameters; the error string says what is wrong.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let pos = |x: T, name: &str| {
            if x > T::zero() && x.as_f64().is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite"))
            }
        };
        match self {
            Self::Ohmic { r } => pos(*r, "r"),
            Self::Drude { r, omega_c } | Self::CutoffOhmic { r, omega_c } => {
                pos(*r, "r")?;
                pos(*omega_c, "omega_c")
            }
            Self::Tabulated { omega, values } => {
                if omega.len() != values.len() {
                    return Err("omega and values differ in length".into());
                }
                if omega.len() < 2 {
                    return Err("need at least two grid points".into());
                }
                if !omega.iter().all(|w| w.as_f64().is_finite()) || omega[0] < T::zero() {
                    return Err("grid must be finite and non-negative".into());
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err("grid must be strictly ascending".into());
                }
                if !values
                    .iter()
                    .all(|v| *v >= T::zero() && v.as_f64().is_finite())
                {
                    return Err("values must be finite and non-negative".into());
                }
                if omega[0] == T::zero() && values[0] != T::zero() {
                    return Err("J(0) must vanish".into());
                }
                Ok(())
            }
        }
    }

    /// `J(omega)`.
    pub fn eval(&self, w: T) -> T {
        if !(w > T::zero()) {
            return T::zero();
        }
        match self {
            Self::Ohmic { r } => *r * w,
            Self::Drude { r, omega_c } => {
                let c2 = *omega_c * *omega_c;
                *r * w * c2 / (w * w + c2)
            }
            Self::CutoffOhmic { r, omega_c } => {
                if w <= *omega_c {
                    *r * w
                } else {
                    T::zero()
                }
            }
            Self::Tabulated { omega, values } => interpolate(omega, values, w),
        }
    }

    /// `J(omega) / omega` for `omega > 0`, extended by its limit at `0+`.
    pub fn j_over_omega(&self, w: T) -> T {
        if w < T::zero() {
            return T::zero();
        }
        match self {
            Self::Ohmic { r } => *r,
            Self::Drude { r, omega_c } => {
                let c2 = *omega_c * *omega_c;
                *r * c2 / (w * w + c2)
            }
            Self::CutoffOhmic { r, omega_c } => {
                if w <= *omega_c {
                    *r
                } else {
                    T::zero()
                }
            }
            Self::Tabulated { omega, values } => {
                if w > T::zero() {
                    return interpolate(omega, values, w) / w;
                }
                if omega[0] > T::zero() {
                    T::zero()
                } else {
                    values[1] / omega[1]
                }
            }
        }
    }

    /// Frequencies where `J` has a kink or a jump, plus the natural scale.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Self::Ohmic { .. } => vec![],
            Self::Drude { omega_c, .. } | Self::CutoffOhmic { omega_c, .. } => vec![*omega_c],
            Self::Tabulated { omega, .. } => omega.clone(),
        }
    }

    /// Characteristic frequency used to split half-line integrals.
    pub fn scale(&self) -> T {
        match self {
            Self::Ohmic { .. } => T::one(),
            Self::Drude { omega_c, .. } | Self::CutoffOhmic { omega_c, .. } => *omega_c,
            Self::Tabulated { omega, .. } => *omega.last().unwrap(),
        }
    }

    /// Upper end of the support, if finite.
    pub fn support_end(&self) -> Option<T> {
        match self {
            Self::CutoffOhmic { omega_c, .. } => Some(*omega_c),
            Self::Tabulated { omega, .. } => Some(*omega.last().unwrap()),
            _ => None,
        }
    }

    /// Exponent `p` of the large-frequency behaviour `J ~ omega^p`;
    /// `None` for finite support.
    pub fn tail_exponent(&self) -> Option<i32> {
        match self {
            Self::Ohmic { .. } => Some(1),
            Self::Drude { .. } => Some(-1),
            _ => None,
        }
    }

    /// True if `J` vanishes somewhere on `(0, inf)`.
    pub fn has_zero(&self) -> bool {
        !matches!(self, Self::Ohmic { .. } | Self::Drude { .. })
    }

    /// `omega` where `J` jumps, if any.
    fn jump(&self) -> Option<T> {
        match self {
            Self::CutoffOhmic { omega_c, .. } => Some(*omega_c),
            Self::Tabulated { omega, values } => {
                let last = *values.last().unwrap();
                (last > T::zero()).then(|| *omega.last().unwrap())
            }
            _ => None,
        }
    }

    /// Maximum of `J` over the tabulated or closed-form shape, used for
    /// absolute tolerances.
    fn magnitude(&self) -> T {
        match self {
            Self::Ohmic { r } | Self::Drude { r, .. } | Self::CutoffOhmic { r, .. } => *r,
            Self::Tabulated { omega, values } => {
                omega.iter().zip(values).fold(T::zero(), |m, (w, v)| {
                    if *w > T::zero() {
                        m.max(*v / *w)
                    } else {
                        m
                    }
                })
            }
        }
    }
}

fn interpolate<T: Real>(x: &[T], y: &[T], w: T) -> T {
    let n = x.len();
    if w < x[0] || w > x[n - 1] {
        return T::zero();
    }
    let i = match x.binary_search_by(|v| v.partial_cmp(&w).unwrap()) {
        Ok(i) => return y[i],
        Err(i) => i,
    };
    let (x0, x1, y0, y1) = (x[i - 1], x[i], y[i - 1], y[i]);
    y0 + (y1 - y0) * (w - x0) / (x1 - x0)
}

/// `J(omega)`; zero for `omega <= 0`.
pub fn eval_j<T: Real>(sd: &SpectralDensity<T>, omega: T) -> T {
    sd.eval(omega)
}

fn tol_for<T: Real>(sd: &SpectralDensity<T>) -> Tolerance<T> {
    let mut t = Tolerance::<T>::new(1e-15, 1e-11);
    t.abs *= T::one().max(sd.magnitude());
    t.max_intervals = 2000;
    t
}

const TWO_OVER_PI: f64 = std::f64::consts::FRAC_2_PI;

/// `(2/pi) int_0^inf J(w)/w dw`, with its error estimate.
fn kernel_at_zero<T: Real>(sd: &SpectralDensity<T>) -> Result<Estimate<T, T>> {
    if matches!(sd.tail_exponent(), Some(p) if p >= 0) {
        return Err(Error::DivergentIntegral(format!(
            "int J/omega diverges for the {} line",
            sd.kind()
        )));
    }
    let bps = sd.breakpoints();
    let est = match sd.support_end() {
        Some(end) => integrate(|w| sd.j_over_omega(w), T::zero(), end, &bps, tol_for(sd))?,
        None => integrate_half_line(|w| sd.j_over_omega(w), sd.scale(), &bps, tol_for(sd))?,
    };
    let c = lit::<T>(TWO_OVER_PI);
    Ok(Estimate {
        value: est.value * c,
        error: est.error * c,
    })
}

/// Memory kernel `Gamma(t) = (2/pi) int_0^inf J(w)/w cos(w t) dw` for `t > 0`
/// with the quadrature error estimate. Zero for `t < 0`.
///
/// The ohmic line is memoryless (`Gamma = 2 r delta`), so its kernel is zero
/// for `t > 0` and undefined at `t = 0`.
pub fn memory_kernel_estimate<T: Real>(sd: &SpectralDensity<T>, t: T) -> Result<Estimate<T, T>> {
    if t < T::zero() {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
        });
    }
    if t == T::zero() {
        return kernel_at_zero(sd);
    }
    if let SpectralDensity::Ohmic { .. } = sd {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let est = fourier_half_line(
        |w| sd.j_over_omega(w),
        t,
        Trig::Cos,
        &sd.breakpoints(),
        sd.support_end(),
        tol_for(sd),
    )?;
    let c = lit::<T>(TWO_OVER_PI);
    Ok(Estimate {
        value: est.value * c,
        error: est.error * c,
    })
}

/// Memory kernel value; see [`memory_kernel_estimate`].
pub fn memory_kernel<T: Real>(sd: &SpectralDensity<T>, t: T) -> Result<T> {
    memory_kernel_estimate(sd, t).map(|e| e.value)
}

/// Renormalization constant `(2/pi) int_0^inf J(w)/w dw`.
pub fn renormalization_k<T: Real>(sd: &SpectralDensity<T>) -> Result<T> {
    kernel_at_zero(sd).map(|e| e.value)
}

/// Memory kernels of several lines on a uniform grid `t_i = i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples<T> {
    pub t: Vec<T>,
    /// `values[k][i] = Gamma_k(t_i)`; `+inf` where the kernel has a delta.
    pub values: Vec<Vec<T>>,
    pub errors: Vec<Vec<T>>,
}

/// Samples `Gamma_k` on `0, dt, ..., <= t_max` for every line.
pub fn kernel_samples<T: Real>(
    lines: &[SpectralDensity<T>],
    t_max: T,
    dt: T,
) -> Result<KernelSamples<T>> {
    if !(dt > T::zero()) || !(t_max >= T::zero()) {
        return Err(Error::InvalidArgument("need dt > 0 and t_max >= 0".into()));
    }
    let steps = (t_max / dt + lit(1e-9)).floor().as_f64() as usize;
    let t: Vec<T> = (0..=steps).map(|i| dt * lit::<T>(i as f64)).collect();
    let mut values = Vec::with_capacity(lines.len());
    let mut errors = Vec::with_capacity(lines.len());
    for sd in lines {
        let col: Vec<Result<(T, T)>> = t
            .par_iter()
            .map(|&ti| match memory_kernel_estimate(sd, ti) {
                Ok(e) => Ok((e.value, e.error)),
                Err(Error::DivergentIntegral(_)) => Ok((lit(f64::INFINITY), T::zero())),
                Err(e) => Err(e),
            })
            .collect();
        let col = col.into_iter().collect::<Result<Vec<_>>>()?;
        values.push(col.iter().map(|p| p.0).collect());
        errors.push(col.iter().map(|p| p.1).collect());
    }
    Ok(KernelSamples { t, values, errors })
}

/// Boundary resistance `R(omega)`: `Re R = J/omega` and the imaginary part from
/// the Kramers-Kronig transform
/// `Im R = (2 omega/pi) PV int_0^inf J(u)/(u (omega^2 - u^2)) du`.
///
/// Negative frequencies use `R(-omega) = conj R(omega)`.
pub fn resistance_r<T: Real>(sd: &SpectralDensity<T>, omega: T) -> Result<Complex<T>> {
    if let SpectralDensity::Ohmic { r } = sd {
        return Ok(Complex::new(*r, T::zero()));
    }
    if omega < T::zero() {
        return resistance_r(sd, -omega).map(|z| z.conj());
    }
    if omega == T::zero() {
        return Ok(Complex::new(sd.j_over_omega(T::zero()), T::zero()));
    }
    if sd.jump() == Some(omega) {
        return Err(Error::DivergentIntegral(format!(
            "Hilbert transform diverges at the jump omega = {:e}",
            omega.as_f64()
        )));
    }
    let h0 = sd.j_over_omega(omega);
    let w2 = omega * omega;
    let tol = tol_for(sd);
    let mut bps = sd.breakpoints();
    bps.push(omega);
    let two_w = omega + omega;
    let head = integrate(
        |u: T| (sd.j_over_omega(u) - h0) / (w2 - u * u),
        T::zero(),
        two_w,
        &bps,
        tol,
    )?;
    // u = 2 omega / x on the tail.
    let mapped: Vec<T> = bps
        .iter()
        .filter(|&&b| b > two_w)
        .map(|&b| two_w / b)
        .collect();
    let tail = integrate(
        |x: T| {
            let u = two_w / x;
            sd.j_over_omega(u) * lit::<T>(2.0) / (omega * (x * x - lit(4.0)))
        },
        T::zero(),
        T::one(),
        &mapped,
        tol,
    )?;
    let pv = head.value + h0 * lit::<T>(3.0).ln() / two_w + tail.value;
    Ok(Complex::new(h0, omega * pv * lit::<T>(TWO_OVER_PI)))
}

/// Laplace transform of the memory kernel, `Re s > 0`.
pub fn laplace_gamma<T: Real>(sd: &SpectralDensity<T>, s: Complex<T>) -> Result<Complex<T>> {
    if !(s.re > T::zero()) {
        return Err(Error::OutOfDomain(s.re.as_f64()));
    }
    match sd {
        SpectralDensity::Ohmic { r } => Ok(Complex::new(*r, T::zero())),
        SpectralDensity::Drude { r, omega_c } => {
            Ok(Complex::new(*r * *omega_c, T::zero()) / (s + *omega_c))
        }
        _ => {
            let end = sd.support_end().expect("finite support");
            let mut bps = sd.breakpoints();
            bps.push(s.im.abs());
            let mut tol = tol_for(sd);
            tol.max_intervals = 4000;
            let s2 = s * s;
            let est = integrate(
                |w: T| Complex::new(sd.j_over_omega(w), T::zero()) * s / (s2 + w * w),
                T::zero(),
                end,
                &bps,
                tol,
            )?;
            Ok(est.value * lit::<T>(TWO_OVER_PI))
        }
    }
}

fn check_nonvanishing<T: Real>(sd: &SpectralDensity<T>, line: usize) -> Result<()> {
    if sd.has_zero() {
        return Err(Error::DivergentIntegral(format!(
            "1/J is not integrable: the {} density of line {line} vanishes on (0, inf)",
            sd.kind()
        )));
    }
    Ok(())
}

/// Input-field commutator kernel
/// `sigma(tau) = -(1/2 pi) int_0^inf sin(w tau)/J(w) dw`, Abel-regularized.
///
/// Only densities without zeros on `(0, inf)` qualify. For those,
/// `1/J = 1/(h0 w) + p(w)` with `h0 = J'(0)` and `p` a polynomial whose Abel
/// sum against `sin(w tau)` vanishes, leaving the Dirichlet integral.
pub fn commutator_sigma<T: Real>(sd: &SpectralDensity<T>, tau: T) -> Result<T> {
    check_nonvanishing(sd, 0)?;
    if tau == T::zero() {
        return Ok(T::zero());
    }
    let h0 = sd.j_over_omega(T::zero());
    let v = T::one() / (lit::<T>(4.0) * h0);
    Ok(if tau > T::zero() { -v } else { v })
}

/// In/out commutator kernel matrix
/// `g_jk(tau) = -(1/2 pi) int_0^inf Im{e^{i w tau} (G_kj(w) + delta_kj)} / sqrt(J_j J_k) dw`.
///
/// The identity part of `G` contributes the input-input term and is removed,
/// so `g` vanishes for `tau > 0`.
pub fn inout_commutator_g<T: Real>(spec: &CircuitSpec<T>, tau: T) -> Result<DMatrix<T>> {
    let n = spec.n;
    for (k, sd) in spec.lines.iter().enumerate() {
        check_nonvanishing(sd, k)?;
    }
    let mut bps: Vec<T> = spec.lines.iter().flat_map(|sd| sd.breakpoints()).collect();
    if let Ok(m) = crate::circuit::normal_modes(spec) {
        bps.extend(m.omegas);
    }
    let split = bps.iter().fold(T::one(), |m, &b| m.max(b));
    let tol = Tolerance::<T>::new(1e-15, 1e-11);
    // (G + I)_kj / sqrt(J_j J_k); the integrand decays like 1/w^2.
    let kernel = |w: T, j: usize, k: usize| -> Complex<T> {
        let g = match crate::freq::scattering_g(spec, w) {
            Ok(g) => g,
            Err(_) => return Complex::new(lit(f64::NAN), lit(f64::NAN)),
        };
        let mut gkj = g[(k, j)];
        if k == j {
            gkj += T::one();
        }
        gkj / (spec.lines[j].eval(w) * spec.lines[k].eval(w)).sqrt()
    };
    let scale = -T::one() / (lit::<T>(2.0) * T::pi());
    let mut out = DMatrix::zeros(n, n);
    if tau == T::zero() {
        let v = integrate_half_line(
            |w: T| {
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    for k in 0..n {
                        m[(j, k)] = kernel(w, j, k).im;
                    }
                }
                m
            },
            split,
            &bps,
            tol,
        )?;
        return Ok(v.value * scale);
    }
    // Im{e^{i w tau} x} = cos(w tau) Im x + sin(w tau) Re x
    for j in 0..n {
        for k in 0..n {
            let c = fourier_half_line(|w| kernel(w, j, k).im, tau, Trig::Cos, &bps, None, tol)?;
            let s = fourier_half_line(|w| kernel(w, j, k).re, tau, Trig::Sin, &bps, None, tol)?;
            out[(j, k)] = (c.value + s.value) * scale;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::DivergentIntegral(format!(
            "in/out commutator at tau = {}",
            tau.as_f64()
        )));
    }
    Ok(out)
}

/// Two-point force correlation of one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCorrelation<T> {
    /// `<F(t) F(t')>` with `tau = t - t'`.
    pub ordered: Complex<T>,
    /// `<{F(t), F(t')}>/2`, the real part of `ordered`.
    pub symmetrized: T,
}

/// `(hbar/pi) int_0^inf J(w) [coth(beta hbar w/2) cos(w tau) - i sin(w tau)] dw`.
/// `beta = None` is the vacuum.
pub fn force_correlation<T: Real>(
    sd: &SpectralDensity<T>,
    beta: Option<T>,
    tau: T,
    hbar: T,
) -> Result<ForceCorrelation<T>> {
    if let Some(b) = beta {
        if !(b > T::zero()) {
            return Err(Error::InvalidArgument("beta must be positive".into()));
        }
    }
    let coth = |w: T| -> T {
        match beta {
            None => T::one(),
            Some(b) => {
                let x = b * hbar * w / lit(2.0);
                T::one() / x.tanh()
            }
        }
    };
    let thermal = |w: T| -> T {
        // J coth -> 2 J/(beta hbar w) as w -> 0.
        if w > T::zero() {
            sd.eval(w) * coth(w)
        } else {
            match beta {
                None => T::zero(),
                Some(b) => sd.j_over_omega(T::zero()) * lit::<T>(2.0) / (b * hbar),
            }
        }
    };
    let bps = sd.breakpoints();
    let end = sd.support_end();
    let tol = tol_for(sd);
    let p = sd.tail_exponent();
    let diverge = |what: &str| {
        Error::DivergentIntegral(format!(
            "{what} of the force correlation diverges for the {} line",
            sd.kind()
        ))
    };
    let cos_part = if tau == T::zero() {
        if matches!(p, Some(p) if p >= -1) {
            return Err(diverge("equal-time value"));
        }
        match end {
            Some(e) => integrate(thermal, T::zero(), e, &bps, tol)?.value,
            None => integrate_half_line(thermal, sd.scale(), &bps, tol)?.value,
        }
    } else {
        if matches!(p, Some(p) if p >= 0) {
            return Err(diverge("cosine part"));
        }
        fourier_half_line(thermal, tau, Trig::Cos, &bps, end, tol)?.value
    };
    let sin_part = if tau == T::zero() {
        T::zero()
    } else {
        if matches!(p, Some(p) if p >= 0) {
            return Err(diverge("sine part"));
        }
        fourier_half_line(|w| sd.eval(w), tau, Trig::Sin, &bps, end, tol)?.value
    };
    let c = hbar / T::pi();
    Ok(ForceCorrelation {
        ordered: Complex::new(c * cos_part, -c * sin_part),
        symmetrized: c * cos_part,
    })
}
