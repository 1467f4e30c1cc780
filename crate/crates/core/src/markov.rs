//! Weak-coupling (van Hove) reduction to a Markovian linear
//! input-state-output model.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::circuit::{normal_modes, CircuitSpec, NormalModes};
use crate::quad::{integrate, Tolerance};
use crate::scalar::lit;
use crate::spectral::SpectralDensity;
use crate::{CMatrix, Error, Real, Result};

/// Default relative tolerance for treating two mode frequencies as equal.
pub const FREQ_TOL: f64 = 1e-9;

/// `PV int_0^inf J(u)/(u - omega) du`.
pub fn principal_value<T: Real>(sd: &SpectralDensity<T>, omega: T) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::InvalidArgument("frequency must be positive".into()));
    }
    if matches!(sd.tail_exponent(), Some(p) if p >= 0) {
        return Err(Error::DivergentIntegral(format!(
            "PV tail diverges for the {} line",
            sd.kind()
        )));
    }
    let j0 = sd.eval(omega);
    let discontinuous = match sd {
        SpectralDensity::CutoffOhmic { omega_c, .. } => *omega_c == omega,
        SpectralDensity::Tabulated {
            omega: grid,
            values,
        } => *grid.last().unwrap() == omega && *values.last().unwrap() > T::zero(),
        _ => false,
    };
    if discontinuous {
        return Err(Error::DivergentIntegral(format!(
            "J jumps at omega = {:e}",
            omega.as_f64()
        )));
    }
    let mut tol = Tolerance::<T>::new(1e-15, 1e-12);
    tol.max_intervals = 2000;
    let mut bps = sd.breakpoints();
    bps.push(omega);
    let two_w = omega + omega;
    // On [0, 2 omega] the subtracted log term is ln 1 = 0.
    let head = integrate(
        |u: T| (sd.eval(u) - j0) / (u - omega),
        T::zero(),
        two_w,
        &bps,
        tol,
    )?;
    let tail = match sd.support_end() {
        Some(end) if end <= two_w => T::zero(),
        Some(end) => integrate(|u: T| sd.eval(u) / (u - omega), two_w, end, &bps, tol)?.value,
        None => {
            // u = 2 omega / x
            let mapped: Vec<T> = bps
                .iter()
                .filter(|&&b| b > two_w)
                .map(|&b| two_w / b)
                .collect();
            integrate(
                |x: T| sd.eval(two_w / x) * lit::<T>(2.0) / (x * (lit::<T>(2.0) - x)),
                T::zero(),
                T::one(),
                &mapped,
                tol,
            )?
            .value
        }
    };
    Ok(head.value + tail)
}

/// `kappa = int J(w) dw / (2 pi i (w - omega - i0)) = J(omega)/2 - i PV/(2 pi)`.
pub fn kappa_coeff<T: Real>(sd: &SpectralDensity<T>, omega: T) -> Result<Complex<T>> {
    let pv = principal_value(sd, omega)?;
    Ok(Complex::new(
        sd.eval(omega) * lit::<T>(0.5),
        -pv / (lit::<T>(2.0) * T::pi()),
    ))
}

/// Damping and Lamb shift of a single LC mode on one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSummary<T> {
    pub omega: T,
    pub gamma: T,
    pub epsilon: T,
}

/// Single LC resonator (`omega = 1/sqrt(l c)`) coupled with `Y = 1/sqrt(Z0)`,
/// `Z0 = sqrt(l/c)`: `gamma = J(omega)/Z0`, `epsilon = PV/(2 pi Z0)`.
pub fn single_mode_summary<T: Real>(l: T, c: T, sd: &SpectralDensity<T>) -> Result<ModeSummary<T>> {
    if !(l > T::zero() && c > T::zero()) {
        return Err(Error::InvalidArgument("l and c must be positive".into()));
    }
    let omega = T::one() / (l * c).sqrt();
    let z0 = (l / c).sqrt();
    let pv = principal_value(sd, omega)?;
    Ok(ModeSummary {
        omega,
        gamma: sd.eval(omega) / z0,
        epsilon: pv / (lit::<T>(2.0) * T::pi() * z0),
    })
}

/// Noise channel: line `line` at mode frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel<T> {
    pub line: usize,
    pub omega: T,
    /// Ito weight `J_line(omega)`.
    pub weight: T,
}

/// Groups of mode indices whose frequencies agree within `freq_tol`.
pub fn frequency_clusters<T: Real>(omegas: &[T], freq_tol: T) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (j, &w) in omegas.iter().enumerate() {
        let hit = clusters.iter_mut().find(|cl| {
            let w0 = omegas[cl[0]];
            (w - w0).abs() <= freq_tol * w.max(w0)
        });
        match hit {
            Some(cl) => cl.push(j),
            None => clusters.push(vec![j]),
        }
    }
    clusters
}

/// Ordered by line, then by cluster.
fn channels_for<T: Real>(
    lines: &[SpectralDensity<T>],
    omegas: &[T],
    clusters: &[Vec<usize>],
) -> Vec<Channel<T>> {
    let mut out = Vec::new();
    for (k, sd) in lines.iter().enumerate() {
        for cl in clusters {
            let omega = omegas[cl[0]];
            out.push(Channel {
                line: k,
                omega,
                weight: sd.eval(omega),
            });
        }
    }
    out
}

/// `kappa[(k, j)]`, evaluated once per cluster so that equal frequencies share
/// exactly the same coefficient.
fn kappa_table<T: Real>(
    lines: &[SpectralDensity<T>],
    omegas: &[T],
    clusters: &[Vec<usize>],
) -> Result<CMatrix<T>> {
    let mut kappa = CMatrix::zeros(lines.len(), omegas.len());
    for (k, sd) in lines.iter().enumerate() {
        for cl in clusters {
            let v = kappa_coeff(sd, omegas[cl[0]])?;
            for &j in cl {
                kappa[(k, j)] = v;
            }
        }
    }
    Ok(kappa)
}

fn same_cluster(clusters: &[Vec<usize>]) -> impl Fn(usize, usize) -> bool + '_ {
    move |a, b| clusters.iter().any(|cl| cl.contains(&a) && cl.contains(&b))
}

fn check_modes<T: Real>(modes: &NormalModes<T>, spec: &CircuitSpec<T>) -> Result<()> {
    if modes.y.nrows() != spec.lines.len() {
        return Err(Error::DimensionMismatch {
            what: "mode coefficient rows",
            expected: spec.lines.len(),
            found: modes.y.nrows(),
        });
    }
    if modes.y.ncols() != modes.omegas.len() {
        return Err(Error::DimensionMismatch {
            what: "mode coefficient columns",
            expected: modes.omegas.len(),
            found: modes.y.ncols(),
        });
    }
    Ok(())
}

/// `K_{j j'} = -sum_k delta(Omega_j, Omega_j') kappa_kj Y_kj Y_kj'`.
pub fn build_generator<T: Real>(
    modes: &NormalModes<T>,
    spec: &CircuitSpec<T>,
    freq_tol: T,
) -> Result<CMatrix<T>> {
    check_modes(modes, spec)?;
    let clusters = frequency_clusters(&modes.omegas, freq_tol);
    let kappa = kappa_table(&spec.lines, &modes.omegas, &clusters)?;
    Ok(generator_from(&modes.y, &kappa, &clusters))
}

fn generator_from<T: Real>(
    y: &DMatrix<T>,
    kappa: &CMatrix<T>,
    clusters: &[Vec<usize>],
) -> CMatrix<T> {
    let m = y.ncols();
    let same = same_cluster(clusters);
    let mut g = CMatrix::zeros(m, m);
    for j in 0..m {
        for jp in 0..m {
            if !same(j, jp) {
                continue;
            }
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..y.nrows() {
                acc += kappa[(k, j)] * (y[(k, j)] * y[(k, jp)]);
            }
            g[(j, jp)] = -acc;
        }
    }
    g
}

/// State-space matrices of `da = A a dt + B dB`, `dB_out = C a dt + dB`.
#[derive(Debug, Clone, PartialEq)]
pub struct Abc<T: Real> {
    pub a: CMatrix<T>,
    pub b: CMatrix<T>,
    pub c: CMatrix<T>,
    pub channels: Vec<Channel<T>>,
}

/// `A_{jj'} = -sum_k delta kappa_kj Y*_kj Y_kj'`, `B[j, (k, Omega)] = -Y*_kj`,
/// `C[(k, Omega), j] = Y_kj`, the last two only for modes at `Omega`.
pub fn build_abc<T: Real>(
    modes: &NormalModes<T>,
    spec: &CircuitSpec<T>,
    freq_tol: T,
) -> Result<Abc<T>> {
    check_modes(modes, spec)?;
    let clusters = frequency_clusters(&modes.omegas, freq_tol);
    let kappa = kappa_table(&spec.lines, &modes.omegas, &clusters)?;
    Ok(abc_from(
        &modes.y,
        &kappa,
        &spec.lines,
        &modes.omegas,
        &clusters,
    ))
}

fn abc_from<T: Real>(
    y: &DMatrix<T>,
    kappa: &CMatrix<T>,
    lines: &[SpectralDensity<T>],
    omegas: &[T],
    clusters: &[Vec<usize>],
) -> Abc<T> {
    let m = y.ncols();
    // Y is real, so Y* Y' and Y Y' coincide.
    let a = generator_from(y, kappa, clusters);
    let channels = channels_for(lines, omegas, clusters);
    let mut b = CMatrix::zeros(m, channels.len());
    let mut c = CMatrix::zeros(channels.len(), m);
    for (ch, chan) in channels.iter().enumerate() {
        let cl = &clusters[ch % clusters.len()];
        for &j in cl {
            let v = y[(chan.line, j)];
            b[(j, ch)] = Complex::new(-v, T::zero());
            c[(ch, j)] = Complex::new(v, T::zero());
        }
    }
    Abc { a, b, c, channels }
}

/// Diagonal Ito weights `dB_ch dB*_ch' = delta_{ch ch'} J_k(Omega) dt`.
pub fn ito_table<T: Real>(channels: &[Channel<T>]) -> DMatrix<T> {
    let mut w = DMatrix::zeros(channels.len(), channels.len());
    for (i, ch) in channels.iter().enumerate() {
        w[(i, i)] = ch.weight;
    }
    w
}

/// `B diag(sqrt(J))`, the input matrix for unit-weight (standard) noises.
pub fn normalized_b<T: Real>(b: &CMatrix<T>, channels: &[Channel<T>]) -> CMatrix<T> {
    let mut out = b.clone();
    for (i, ch) in channels.iter().enumerate() {
        let s = ch.weight.max(T::zero()).sqrt();
        for j in 0..out.nrows() {
            out[(j, i)] *= Complex::new(s, T::zero());
        }
    }
    out
}

/// Complete weak-coupling model of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel<T: Real> {
    pub omegas: Vec<T>,
    pub y: DMatrix<T>,
    pub channels: Vec<Channel<T>>,
    /// `kappa[(k, j)]`.
    pub kappa: CMatrix<T>,
    pub generator: CMatrix<T>,
    pub a_mat: CMatrix<T>,
    pub b_mat: CMatrix<T>,
    pub c_mat: CMatrix<T>,
    /// `sum_k J_k(Omega_j) Y_kj^2`.
    pub gammas: Vec<T>,
    /// `Im A_jj`.
    pub epsilons: Vec<T>,
}

/// Normal modes plus the reduction of every line.
pub fn markov_model<T: Real>(spec: &CircuitSpec<T>, freq_tol: T) -> Result<MarkovModel<T>> {
    let modes = normal_modes(spec)?;
    let clusters = frequency_clusters(&modes.omegas, freq_tol);
    let kappa = kappa_table(&spec.lines, &modes.omegas, &clusters)?;
    let generator = generator_from(&modes.y, &kappa, &clusters);
    let abc = abc_from(&modes.y, &kappa, &spec.lines, &modes.omegas, &clusters);
    let m = modes.omegas.len();
    let gammas = (0..m)
        .map(|j| {
            spec.lines
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, sd)| {
                    acc + sd.eval(modes.omegas[j]) * modes.y[(k, j)] * modes.y[(k, j)]
                })
        })
        .collect();
    let epsilons = (0..m).map(|j| abc.a[(j, j)].im).collect();
    Ok(MarkovModel {
        omegas: modes.omegas,
        y: modes.y,
        channels: abc.channels,
        kappa,
        generator,
        a_mat: abc.a,
        b_mat: abc.b,
        c_mat: abc.c,
        gammas,
        epsilons,
    })
}
