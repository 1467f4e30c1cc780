//! Time-domain propagation, time-zero field data maps and energy functionals.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::circuit::{build_state_matrices, CircuitSpec};
use crate::scalar::lit;
use crate::spectral::{kernel_samples, SpectralDensity};
use crate::{Error, Real, Result};

/// Uniformly sampled vector series `values[:, i]` at `t0 + i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries<T: Real> {
    pub t0: T,
    pub dt: T,
    pub values: DMatrix<T>,
}

impl<T: Real> SampledSeries<T> {
    pub fn new(t0: T, dt: T, values: DMatrix<T>) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::NonuniformInput("step must be positive".into()));
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` on `t0, t0 + dt, ..., t0 + (len-1) dt`.
    pub fn from_fn<F: FnMut(T) -> DVector<T>>(t0: T, dt: T, len: usize, mut f: F) -> Result<Self> {
        let cols: Vec<DVector<T>> = (0..len).map(|i| f(t0 + dt * lit::<T>(i as f64))).collect();
        let n = cols.first().map_or(0, |c| c.len());
        let mut values = DMatrix::zeros(n, len);
        for (i, c) in cols.iter().enumerate() {
            values.set_column(i, c);
        }
        Self::new(t0, dt, values)
    }

    pub fn channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * lit::<T>(i as f64)
    }

    /// Sample `i`, zero outside the record.
    fn at(&self, i: isize) -> DVector<T> {
        if i < 0 || i as usize >= self.len() {
            DVector::zeros(self.channels())
        } else {
            self.values.column(i as usize).into_owned()
        }
    }
}

/// Time-zero field data `(f, g)` of every line on `tau = i dtau`, with `fdot`
/// from finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldData<T: Real> {
    pub dtau: T,
    pub f: DMatrix<T>,
    pub g: DMatrix<T>,
    pub fdot: DMatrix<T>,
}

impl<T: Real> FieldData<T> {
    pub fn new(dtau: T, f: DMatrix<T>, g: DMatrix<T>) -> Result<Self> {
        if !(dtau > T::zero()) {
            return Err(Error::NonuniformInput("step must be positive".into()));
        }
        if f.shape() != g.shape() {
            return Err(Error::DimensionMismatch {
                what: "field data samples",
                expected: f.ncols(),
                found: g.ncols(),
            });
        }
        if f.ncols() < 5 {
            return Err(Error::NonuniformInput("need at least five samples".into()));
        }
        let fdot = differentiate(&f, dtau);
        Ok(Self { dtau, f, g, fdot })
    }

    pub fn from_fn<F, G>(n: usize, dtau: T, t_data: T, mut f: F, mut g: G) -> Result<Self>
    where
        F: FnMut(T) -> DVector<T>,
        G: FnMut(T) -> DVector<T>,
    {
        let len = (t_data / dtau + lit(1e-9)).floor().as_f64() as usize + 1;
        let mut fm = DMatrix::zeros(n, len);
        let mut gm = DMatrix::zeros(n, len);
        for i in 0..len {
            let t = dtau * lit::<T>(i as f64);
            fm.set_column(i, &f(t));
            gm.set_column(i, &g(t));
        }
        Self::new(dtau, fm, gm)
    }

    pub fn channels(&self) -> usize {
        self.f.nrows()
    }

    pub fn len(&self) -> usize {
        self.f.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.f.ncols() == 0
    }

    pub fn t_data(&self) -> T {
        self.dtau * lit::<T>((self.len() - 1) as f64)
    }

    /// `q_in'(tau) = (g + f')/2` for `tau >= 0`.
    fn incoming(&self, i: usize) -> DVector<T> {
        (self.g.column(i) + self.fdot.column(i)) * lit::<T>(0.5)
    }

    /// `q_out'(-tau) = (g - f')/2` for `tau >= 0`.
    fn outgoing(&self, i: usize) -> DVector<T> {
        (self.g.column(i) - self.fdot.column(i)) * lit::<T>(0.5)
    }
}

/// Fourth order central differences inside, second order next to the ends and
/// one-sided second order at the ends.
fn differentiate<T: Real>(f: &DMatrix<T>, h: T) -> DMatrix<T> {
    let n = f.ncols();
    let mut d = DMatrix::zeros(f.nrows(), n);
    let c = |i: usize| f.column(i).into_owned();
    let two = lit::<T>(2.0);
    for i in 0..n {
        let col = if i == 0 {
            (c(0) * lit::<T>(-3.0) + c(1) * lit::<T>(4.0) - c(2)) / (two * h)
        } else if i == n - 1 {
            (c(n - 1) * lit::<T>(3.0) - c(n - 2) * lit::<T>(4.0) + c(n - 3)) / (two * h)
        } else if i == 1 || i == n - 2 {
            (c(i + 1) - c(i - 1)) / (two * h)
        } else {
            (c(i - 2) - c(i - 1) * lit::<T>(8.0) + c(i + 1) * lit::<T>(8.0) - c(i + 2))
                / (lit::<T>(12.0) * h)
        };
        d.set_column(i, &col);
    }
    d
}

/// Sampled solution of the circuit equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub t: Vec<T>,
    pub q: DMatrix<T>,
    pub i: DMatrix<T>,
    /// `i^T L i / 2 + q^T K q / 2`.
    pub energy: Vec<T>,
    pub input: Option<SampledSeries<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

fn component_energy<T: Real>(spec: &CircuitSpec<T>, q: &DVector<T>, i: &DVector<T>) -> T {
    (i.dot(&(&spec.l * i)) + q.dot(&(&spec.k * q))) * lit::<T>(0.5)
}

fn check_vec<T: Real>(v: &DVector<T>, n: usize, what: &'static str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

fn step_count<T: Real>(dt: T, t_max: T) -> Result<usize> {
    if !(dt > T::zero()) || !(t_max >= T::zero()) {
        return Err(Error::InvalidArgument("need dt > 0 and t_max >= 0".into()));
    }
    Ok((t_max / dt + lit(1e-9)).floor().as_f64() as usize)
}

fn check_input<T: Real>(s: &SampledSeries<T>, n: usize, dt: T) -> Result<()> {
    if s.channels() != n {
        return Err(Error::DimensionMismatch {
            what: "input channels",
            expected: n,
            found: s.channels(),
        });
    }
    if (s.dt - dt).abs() > lit::<T>(1e-9) * dt {
        return Err(Error::NonuniformInput(format!(
            "input step {:e} differs from the integration step {:e}",
            s.dt.as_f64(),
            dt.as_f64()
        )));
    }
    if s.t0.abs() > lit::<T>(1e-9) * dt {
        return Err(Error::NonuniformInput("input must start at t = 0".into()));
    }
    Ok(())
}

fn split_state<T: Real>(x: &DVector<T>, n: usize) -> (DVector<T>, DVector<T>) {
    (x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
}

/// Ohmic circuit driven by `q_in'`: exact `exp(A- dt)` steps with the trapezoid
/// rule on the forcing `2 r [0; L^-1 q_in']`. Input samples past the record
/// are zero.
pub fn propagate_ohmic<T: Real>(
    spec: &CircuitSpec<T>,
    r: T,
    q0: &DVector<T>,
    i0: &DVector<T>,
    qdot_in: Option<&SampledSeries<T>>,
    dt: T,
    t_max: T,
) -> Result<Trajectory<T>> {
    let n = spec.n;
    check_vec(q0, n, "q0")?;
    check_vec(i0, n, "i0")?;
    if let Some(s) = qdot_in {
        check_input(s, n, dt)?;
    }
    let steps = step_count(dt, t_max)?;
    let sm = build_state_matrices(spec, r)?;
    let a_norm = sm.a_minus.abs().row_sum().max();
    if dt * a_norm > T::one() {
        log::warn!(
            "step too large: dt * |A-| = {:.3} > 1",
            (dt * a_norm).as_f64()
        );
    }
    let e = (&sm.a_minus * dt).exp();
    let linv2r = spec.l_inverse() * (r + r);
    let forcing = |k: usize| -> DVector<T> {
        let mut b = DVector::zeros(2 * n);
        if let Some(s) = qdot_in {
            b.rows_mut(n, n).copy_from(&(&linv2r * s.at(k as isize)));
        }
        b
    };
    let half = dt * lit::<T>(0.5);
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(q0);
    x.rows_mut(n, n).copy_from(i0);
    let mut t = Vec::with_capacity(steps + 1);
    let mut q = DMatrix::zeros(n, steps + 1);
    let mut i = DMatrix::zeros(n, steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let mut b_prev = forcing(0);
    for k in 0..=steps {
        let (qk, ik) = split_state(&x, n);
        t.push(dt * lit::<T>(k as f64));
        energy.push(component_energy(spec, &qk, &ik));
        q.set_column(k, &qk);
        i.set_column(k, &ik);
        if k == steps {
            break;
        }
        let b_next = forcing(k + 1);
        x = &e * (&x + &b_prev * half) + &b_next * half;
        b_prev = b_next;
    }
    Ok(Trajectory {
        t,
        q,
        i,
        energy,
        input: qdot_in.cloned(),
    })
}

/// Generalized Langevin equation
/// `L q'' + D q' + int_0^t Gamma(t - s) q'(s) ds + K q = F`
/// with zero history before `t = 0`. Ohmic lines enter through the
/// instantaneous drag `D = diag(r_k)`, the others through their kernels.
///
/// Crank-Nicolson in time with trapezoid convolution quadrature.
pub fn simulate_memory<T: Real>(
    spec: &CircuitSpec<T>,
    f_ext: Option<&SampledSeries<T>>,
    q0: &DVector<T>,
    i0: &DVector<T>,
    dt: T,
    t_max: T,
) -> Result<Trajectory<T>> {
    let n = spec.n;
    check_vec(q0, n, "q0")?;
    check_vec(i0, n, "i0")?;
    if let Some(s) = f_ext {
        check_input(s, n, dt)?;
    }
    let steps = step_count(dt, t_max)?;
    let mut drag = DMatrix::zeros(n, n);
    let memory_lines: Vec<(usize, SpectralDensity<T>)> = spec
        .lines
        .iter()
        .enumerate()
        .filter_map(|(k, sd)| match sd {
            SpectralDensity::Ohmic { r } => {
                drag[(k, k)] = *r;
                None
            }
            _ => Some((k, sd.clone())),
        })
        .collect();
    let sds: Vec<SpectralDensity<T>> = memory_lines.iter().map(|p| p.1.clone()).collect();
    let samples = kernel_samples(&sds, dt * lit::<T>(steps as f64), dt).map_err(|e| match e {
        Error::DivergentIntegral(m) => Error::DivergentKernel(m),
        e => e,
    })?;
    for (m, (k, _)) in memory_lines.iter().enumerate() {
        if samples.values[m].iter().any(|v| !v.as_f64().is_finite()) {
            return Err(Error::DivergentKernel(format!(
                "kernel of line {k} is not finite"
            )));
        }
    }
    // (line index, kernel samples Gamma_k(m dt))
    let kern: Vec<(usize, &Vec<T>)> = memory_lines
        .iter()
        .zip(&samples.values)
        .map(|((k, _), g)| (*k, g))
        .collect();
    let force = |k: usize| -> DVector<T> {
        match f_ext {
            Some(s) => s.at(k as isize),
            None => DVector::zeros(n),
        }
    };

    let half = lit::<T>(0.5);
    let quarter_dt = dt * lit::<T>(0.25);
    let mut m = &spec.l / dt + &spec.k * quarter_dt + &drag * half;
    for &(k, g) in &kern {
        m[(k, k)] += quarter_dt * g[0];
    }
    let lu = m.lu();

    let mut qs: Vec<DVector<T>> = Vec::with_capacity(steps + 1);
    let mut vs: Vec<DVector<T>> = Vec::with_capacity(steps + 1);
    qs.push(q0.clone());
    vs.push(i0.clone());
    // c_n = int_0^{t_n} Gamma(t_n - s) v(s) ds by the trapezoid rule.
    let mut c_prev = DVector::zeros(n);
    for step in 0..steps {
        let (qn, vn) = (&qs[step], &vs[step]);
        // Explicit part of c_{n+1}: all samples except the new one.
        let mut c_part = DVector::zeros(n);
        for &(k, g) in &kern {
            let mut acc = g[step + 1] * vs[0][k] * half;
            for j in 1..=step {
                acc += g[step + 1 - j] * vs[j][k];
            }
            c_part[k] = acc * dt;
        }
        let fbar = (force(step) + force(step + 1)) * half;
        let rhs = &spec.l * vn / dt
            - &spec.k * qn
            - &spec.k * vn * quarter_dt
            - &drag * vn * half
            - (&c_prev + &c_part) * half
            + fbar;
        let v_next = lu.solve(&rhs).ok_or(Error::SingularMatrix)?;
        let q_next = qn + (vn + &v_next) * (dt * half);
        c_prev = c_part;
        for &(k, g) in &kern {
            c_prev[k] += g[0] * v_next[k] * dt * half;
        }
        qs.push(q_next);
        vs.push(v_next);
    }
    let mut q = DMatrix::zeros(n, steps + 1);
    let mut i = DMatrix::zeros(n, steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        q.set_column(k, &qs[k]);
        i.set_column(k, &vs[k]);
        energy.push(component_energy(spec, &qs[k], &vs[k]));
    }
    Ok(Trajectory {
        t: (0..=steps).map(|k| dt * lit::<T>(k as f64)).collect(),
        q,
        i,
        energy,
        input: f_ext.cloned(),
    })
}

/// Forward (`forward`) or backward run of the circuit from the time-zero data.
///
/// Forward: `x' = A- x + 2 r [0; L^-1 q_in']`, returns `i(tau_k)` for every data
/// sample. Backward in `sigma = -t`: `y' = -A+ y + 2 r [0; L^-1 q_out'(-sigma)]`.
fn run_from_data<T: Real>(
    spec: &CircuitSpec<T>,
    r: T,
    data: &FieldData<T>,
    forward: bool,
    upto: usize,
) -> Result<Vec<DVector<T>>> {
    let n = spec.n;
    if data.channels() != n {
        return Err(Error::DimensionMismatch {
            what: "field data channels",
            expected: n,
            found: data.channels(),
        });
    }
    let sm = build_state_matrices(spec, r)?;
    let a = if forward { sm.a_minus } else { -sm.a_plus };
    let h = data.dtau;
    let e = (a * h).exp();
    let linv2r = spec.l_inverse() * (r + r);
    let drive = |k: usize| -> DVector<T> {
        let u = if forward {
            data.incoming(k)
        } else {
            data.outgoing(k)
        };
        let mut b = DVector::zeros(2 * n);
        b.rows_mut(n, n).copy_from(&(&linv2r * u));
        b
    };
    let half = h * lit::<T>(0.5);
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&data.f.column(0));
    x.rows_mut(n, n).copy_from(&data.g.column(0));
    let mut out = Vec::with_capacity(upto + 1);
    let mut b_prev = drive(0);
    for k in 0..=upto {
        out.push(x.rows(n, n).into_owned());
        if k == upto {
            break;
        }
        let b_next = drive(k + 1);
        x = &e * (&x + &b_prev * half) + &b_next * half;
        b_prev = b_next;
    }
    Ok(out)
}

/// Time-domain input and output fields on `t = k dtau`, `|t| <= t_data`.
#[derive(Debug, Clone, PartialEq)]
pub struct InOutSeries<T: Real> {
    pub qdot_in: SampledSeries<T>,
    pub qdot_out: SampledSeries<T>,
}

/// `q_in'` and `q_out'` on the symmetric grid `-t_data..=t_data` implied by
/// the field data; the circuit runs forward for `t > 0` and backward for
/// `t < 0`.
pub fn in_out_series<T: Real>(
    spec: &CircuitSpec<T>,
    r: T,
    data: &FieldData<T>,
) -> Result<InOutSeries<T>> {
    let n = spec.n;
    let m = data.len() - 1;
    let fwd = run_from_data(spec, r, data, true, m)?;
    let bwd = run_from_data(spec, r, data, false, m)?;
    let mut qin = DMatrix::zeros(n, 2 * m + 1);
    let mut qout = DMatrix::zeros(n, 2 * m + 1);
    for k in 0..=m {
        // t = +k dtau
        let inc = data.incoming(k);
        qin.set_column(m + k, &inc);
        qout.set_column(m + k, &(&fwd[k] - &inc));
        if k > 0 {
            // t = -k dtau
            let out = data.outgoing(k);
            qout.set_column(m - k, &out);
            qin.set_column(m - k, &(&bwd[k] - &out));
        }
    }
    let t0 = -data.t_data();
    Ok(InOutSeries {
        qdot_in: SampledSeries::new(t0, data.dtau, qin)?,
        qdot_out: SampledSeries::new(t0, data.dtau, qout)?,
    })
}

fn grid_index<T: Real>(data: &FieldData<T>, t: T) -> Result<usize> {
    let x = t.abs() / data.dtau;
    let k = x.round();
    if (x - k).abs() > lit::<T>(1e-6) || k.as_f64() as usize > data.len() - 1 {
        return Err(Error::OutOfRange(t.as_f64()));
    }
    Ok(k.as_f64() as usize)
}

/// `q_out'(t)` at a grid time `t = k dtau`: `(g - f')(-t)/2` for `t <= 0`, and
/// `i(t) - q_in'(t)` from the forward run for `t > 0`.
pub fn output_from_data<T: Real>(
    spec: &CircuitSpec<T>,
    r: T,
    data: &FieldData<T>,
    t: T,
) -> Result<DVector<T>> {
    let k = grid_index(data, t)?;
    if t <= T::zero() {
        return Ok(data.outgoing(k));
    }
    let fwd = run_from_data(spec, r, data, true, k)?;
    Ok(&fwd[k] - data.incoming(k))
}

/// `q_in'(t)` at a grid time: `(g + f')(t)/2` for `t >= 0`, and
/// `i(t) - q_out'(t)` from the backward run for `t < 0`.
pub fn input_from_data<T: Real>(
    spec: &CircuitSpec<T>,
    r: T,
    data: &FieldData<T>,
    t: T,
) -> Result<DVector<T>> {
    let k = grid_index(data, t)?;
    if t >= T::zero() {
        return Ok(data.incoming(k));
    }
    let bwd = run_from_data(spec, r, data, false, k)?;
    Ok(&bwd[k] - data.outgoing(k))
}

fn trapezoid_sq<T: Real>(m: &DMatrix<T>, h: T) -> T {
    let n = m.ncols();
    let mut s = T::zero();
    for k in 0..n {
        let w = if k == 0 || k == n - 1 {
            lit::<T>(0.5)
        } else {
            T::one()
        };
        s += w * m.column(k).norm_squared();
    }
    s * h
}

/// `g(0)^T L g(0)/2 + f(0)^T K f(0)/2 + (r/2) int_0^T (g^T g + f'^T f') dtau`.
pub fn energy_norm<T: Real>(spec: &CircuitSpec<T>, r: T, data: &FieldData<T>) -> T {
    let g0 = data.g.column(0).into_owned();
    let f0 = data.f.column(0).into_owned();
    let lines = trapezoid_sq(&data.g, data.dtau) + trapezoid_sq(&data.fdot, data.dtau);
    component_energy(spec, &f0, &g0) + r * lines * lit::<T>(0.5)
}

/// `r int q'^T q' dt` by the trapezoid rule; the series must have decayed at
/// both ends.
pub fn energy_io<T: Real>(r: T, qdot: &SampledSeries<T>) -> Result<T> {
    if qdot.is_empty() {
        return Ok(T::zero());
    }
    let max = qdot.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if max == T::zero() {
        return Ok(T::zero());
    }
    let first = qdot.values.column(0).amax();
    let last = qdot.values.column(qdot.len() - 1).amax();
    let end = first.max(last);
    if end >= lit::<T>(1e-8) * max {
        return Err(Error::WindowTooShort(end.as_f64() / max.as_f64()));
    }
    Ok(r * trapezoid_sq(&qdot.values, qdot.dt))
}

/// Least-squares fit `y_k(t) ~ Re{c_k e^{-i omega t}}` over the samples with
/// `t >= t_from`.
pub fn fit_harmonic<T: Real>(
    t: &[T],
    y: &DMatrix<T>,
    omega: T,
    t_from: T,
) -> Result<Vec<Complex<T>>> {
    let (mut scc, mut scs, mut sss) = (T::zero(), T::zero(), T::zero());
    let n = y.nrows();
    let mut yc = vec![T::zero(); n];
    let mut ys = vec![T::zero(); n];
    let mut used = 0usize;
    for (k, &tk) in t.iter().enumerate() {
        if tk < t_from {
            continue;
        }
        used += 1;
        let (s, c) = (omega * tk).sin_cos();
        scc += c * c;
        scs += c * s;
        sss += s * s;
        for j in 0..n {
            yc[j] += y[(j, k)] * c;
            ys[j] += y[(j, k)] * s;
        }
    }
    let det = scc * sss - scs * scs;
    if used < 3 || !(det.abs() > T::eps() * scc * sss) {
        return Err(Error::InvalidArgument("fit window too short".into()));
    }
    Ok((0..n)
        .map(|j| {
            let a = (yc[j] * sss - ys[j] * scs) / det;
            let b = (ys[j] * scc - yc[j] * scs) / det;
            Complex::new(a, b)
        })
        .collect())
}
