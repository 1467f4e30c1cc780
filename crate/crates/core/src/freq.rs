//! Laplace and frequency domain transfer functions and the lossless
//! bounded-real / positive-real checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex;
use rayon::prelude::*;

use crate::circuit::{eigenvalues, CircuitSpec};
use crate::scalar::lit;
use crate::spectral::{laplace_gamma, resistance_r, SpectralDensity};
use crate::{CMatrix, Error, Real, Result};

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn complexify<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(c)
}

fn cinv<T: Real>(m: CMatrix<T>) -> Result<CMatrix<T>> {
    let scale = m.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
    let inv = m.try_inverse().ok_or(Error::SingularMatrix)?;
    let big = inv.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
    if !big.as_f64().is_finite() || big * scale > T::one() / (T::eps() * lit(16.0)) {
        return Err(Error::SingularMatrix);
    }
    Ok(inv)
}

/// Closed-form `L Gamma[s]` for the rational families, valid off the pole.
fn gamma_rational<T: Real>(sd: &SpectralDensity<T>, s: Complex<T>) -> Option<Complex<T>> {
    match sd {
        SpectralDensity::Ohmic { r } => Some(c(*r)),
        SpectralDensity::Drude { r, omega_c } => Some(c(*r * *omega_c) / (s + *omega_c)),
        _ => None,
    }
}

fn is_rational<T: Real>(spec: &CircuitSpec<T>) -> bool {
    spec.lines.iter().all(|sd| {
        matches!(
            sd,
            SpectralDensity::Ohmic { .. } | SpectralDensity::Drude { .. }
        )
    })
}

fn require_rhp<T: Real>(s: Complex<T>) -> Result<()> {
    if s.re > T::zero() {
        Ok(())
    } else {
        Err(Error::OutOfDomain(s.re.as_f64()))
    }
}

/// `diag(L Gamma_k[s])`.
pub fn gamma_matrix<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    let mut g = CMatrix::zeros(spec.n, spec.n);
    for (k, sd) in spec.lines.iter().enumerate() {
        g[(k, k)] = laplace_gamma(sd, s)?;
    }
    Ok(g)
}

/// Like [`gamma_matrix`] but evaluates rational families anywhere.
fn gamma_matrix_ext<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    let mut g = CMatrix::zeros(spec.n, spec.n);
    for (k, sd) in spec.lines.iter().enumerate() {
        g[(k, k)] = match gamma_rational(sd, s) {
            Some(v) => v,
            None => laplace_gamma(sd, s)?,
        };
    }
    Ok(g)
}

/// `L s^2 + K`.
fn lc_part<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> CMatrix<T> {
    complexify(&spec.l) * (s * s) + complexify(&spec.k)
}

fn chi_unchecked<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    let g = gamma_matrix_ext(spec, s)?;
    cinv(lc_part(spec, s) + g * s)
}

/// `chi[s] = (L s^2 + s L Gamma[s] + K)^-1` for `Re s > 0`.
pub fn chi_laplace<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    require_rhp(s)?;
    chi_unchecked(spec, s)
}

/// 2-norm condition number of `L s^2 + s L Gamma[s] + K`.
pub fn chi_condition<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<T> {
    require_rhp(s)?;
    let d = lc_part(spec, s) + gamma_matrix(spec, s)? * s;
    let sv = d.singular_values();
    let max = sv.iter().copied().fold(T::zero(), T::max);
    let min = sv.iter().copied().fold(T::max_value().unwrap(), T::min);
    Ok(if min > T::zero() {
        max / min
    } else {
        lit(f64::INFINITY)
    })
}

/// `diag(R_k(omega))`, the boundary value of `L Gamma` at `0+ - i omega`.
pub fn resistance_matrix<T: Real>(spec: &CircuitSpec<T>, omega: T) -> Result<CMatrix<T>> {
    let mut r = CMatrix::zeros(spec.n, spec.n);
    let s = Complex::new(T::zero(), -omega);
    for (k, sd) in spec.lines.iter().enumerate() {
        r[(k, k)] = match gamma_rational(sd, s) {
            Some(v) => v,
            None => resistance_r(sd, omega)?,
        };
    }
    Ok(r)
}

/// `alpha(omega) = [K - L omega^2 - i omega R(omega)]^-1`.
pub fn susceptibility<T: Real>(spec: &CircuitSpec<T>, omega: T) -> Result<CMatrix<T>> {
    let r = resistance_matrix(spec, omega)?;
    let base = complexify(&spec.k) - complexify(&spec.l) * c(omega * omega);
    cinv(base - r * Complex::new(T::zero(), omega))
}

fn s_unchecked<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    let g = gamma_matrix_ext(spec, s)? * s;
    let lc = lc_part(spec, s);
    let den = cinv(&lc + &g)?;
    Ok((lc - g) * den)
}

/// `S[s] = (L s^2 - s L Gamma + K)(L s^2 + s L Gamma + K)^-1`, `Re s > 0`.
pub fn scattering_s<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    require_rhp(s)?;
    s_unchecked(spec, s)
}

/// Real-frequency scattering matrix
/// `G(omega) = -(K - L omega^2 + i omega R*)(K - L omega^2 - i omega R)^-1`.
///
/// Unitary whenever `J(omega) > 0`. It equals `-S(0+ - i omega)` when the
/// resistance is real (ohmic lines).
pub fn scattering_g<T: Real>(spec: &CircuitSpec<T>, omega: T) -> Result<CMatrix<T>> {
    let r = resistance_matrix(spec, omega)?;
    let base = complexify(&spec.k) - complexify(&spec.l) * c(omega * omega);
    let iw = Complex::new(T::zero(), omega);
    let num = &base + r.adjoint() * iw;
    let den = cinv(base - r * iw)?;
    Ok(-(num * den))
}

/// `(I - X)(I + X)^-1`.
pub fn cayley<T: Real>(x: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = x.nrows();
    let id = CMatrix::<T>::identity(n, n);
    let inv = cinv(&id + x).map_err(|_| Error::CayleySingular)?;
    Ok((id - x) * inv)
}

fn sigma_unchecked<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    let g = gamma_matrix_ext(spec, s)? * s;
    let inv = cinv(lc_part(spec, s)).map_err(|_| Error::CayleySingular)?;
    Ok(g * inv)
}

/// Cayley transform of `S`: `Sigma[s] = s L Gamma[s] (L s^2 + K)^-1`.
pub fn cayley_sigma<T: Real>(spec: &CircuitSpec<T>, s: Complex<T>) -> Result<CMatrix<T>> {
    require_rhp(s)?;
    sigma_unchecked(spec, s)
}

/// Offset used for boundary values `0+ - i omega`.
pub fn boundary_epsilon<T: Real>(omega: T) -> T {
    lit::<T>(1e-8) * T::one().max(omega.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    S,
    Sigma,
    Chi,
    /// `diag(L Gamma_k)`.
    MemoryLaplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    RationalExact,
    Sampled,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RationalExact => "rational-exact",
            Self::Sampled => "sampled",
        })
    }
}

type Evaluator<T> = dyn Fn(Complex<T>) -> Result<CMatrix<T>> + Send + Sync;

/// Matrix-valued function of `s` with pole metadata.
///
/// For rational families `poles` is complete and the evaluator may be called
/// on the imaginary axis; otherwise it needs `Re s > 0`.
#[derive(Clone)]
pub struct AnalyticTransfer<T: Real> {
    evaluator: Arc<Evaluator<T>>,
    pub poles: Vec<Complex<T>>,
    pub poles_complete: bool,
    pub n: usize,
    pub kind: TransferKind,
}

impl<T: Real> fmt::Debug for AnalyticTransfer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticTransfer")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("poles", &self.poles)
            .field("poles_complete", &self.poles_complete)
            .finish()
    }
}

impl<T: Real> AnalyticTransfer<T> {
    pub fn new<F>(n: usize, kind: TransferKind, poles: Option<Vec<Complex<T>>>, f: F) -> Self
    where
        F: Fn(Complex<T>) -> Result<CMatrix<T>> + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            poles_complete: poles.is_some(),
            poles: poles.unwrap_or_default(),
            n,
            kind,
        }
    }

    /// Constant matrix.
    pub fn constant(m: CMatrix<T>, kind: TransferKind) -> Self {
        let n = m.nrows();
        Self::new(n, kind, Some(vec![]), move |_| Ok(m.clone()))
    }

    /// Scalar `num(s)/den(s)`; coefficients in ascending powers.
    pub fn scalar_rational(num: Vec<T>, den: Vec<T>, kind: TransferKind) -> Result<Self> {
        let poles = polynomial_roots(&den)?;
        Ok(Self::new(1, kind, Some(poles), move |s| {
            let d = horner(&den, s);
            if d == c(T::zero()) {
                return Err(Error::SingularMatrix);
            }
            Ok(CMatrix::from_element(1, 1, horner(&num, s) / d))
        }))
    }

    pub fn scattering(spec: &CircuitSpec<T>) -> Result<Self> {
        let poles = if is_rational(spec) {
            Some(system_poles(spec)?)
        } else {
            None
        };
        let sp = spec.clone();
        Ok(Self::new(spec.n, TransferKind::S, poles, move |s| {
            s_unchecked(&sp, s)
        }))
    }

    pub fn chi(spec: &CircuitSpec<T>) -> Result<Self> {
        let poles = if is_rational(spec) {
            Some(system_poles(spec)?)
        } else {
            None
        };
        let sp = spec.clone();
        Ok(Self::new(spec.n, TransferKind::Chi, poles, move |s| {
            chi_unchecked(&sp, s)
        }))
    }

    pub fn sigma(spec: &CircuitSpec<T>) -> Result<Self> {
        let poles = if is_rational(spec) {
            let mut p = lc_poles(spec)?;
            p.extend(drude_poles(spec));
            Some(p)
        } else {
            None
        };
        let sp = spec.clone();
        Ok(Self::new(spec.n, TransferKind::Sigma, poles, move |s| {
            sigma_unchecked(&sp, s)
        }))
    }

    /// `diag(L Gamma_k[s])`.
    pub fn memory_laplace(spec: &CircuitSpec<T>) -> Self {
        let poles = is_rational(spec).then(|| drude_poles(spec));
        let sp = spec.clone();
        Self::new(spec.n, TransferKind::MemoryLaplace, poles, move |s| {
            gamma_matrix_ext(&sp, s)
        })
    }

    /// Value at `s`, `Re s > 0`.
    pub fn eval(&self, s: Complex<T>) -> Result<CMatrix<T>> {
        require_rhp(s)?;
        (self.evaluator)(s)
    }

    /// Boundary value at `0+ - i omega`: exact for rational families,
    /// `s = eps - i omega` otherwise.
    pub fn eval_boundary(&self, omega: T) -> Result<CMatrix<T>> {
        let re = if self.poles_complete {
            T::zero()
        } else {
            boundary_epsilon(omega)
        };
        (self.evaluator)(Complex::new(re, -omega))
    }
}

fn horner<T: Real>(coef: &[T], s: Complex<T>) -> Complex<T> {
    coef.iter().rev().fold(c(T::zero()), |acc, &a| acc * s + a)
}

/// Roots of a real polynomial (ascending coefficients) via the companion matrix.
pub fn polynomial_roots<T: Real>(coef: &[T]) -> Result<Vec<Complex<T>>> {
    let mut coef = coef.to_vec();
    while coef.last() == Some(&T::zero()) {
        coef.pop();
    }
    let deg = coef.len().saturating_sub(1);
    if coef.is_empty() {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = coef[deg];
    let mut m = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = T::one();
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coef[i] / lead;
    }
    eigenvalues(&m)
}

fn drude_poles<T: Real>(spec: &CircuitSpec<T>) -> Vec<Complex<T>> {
    spec.lines
        .iter()
        .filter_map(|sd| match sd {
            SpectralDensity::Drude { omega_c, .. } => Some(c(-*omega_c)),
            _ => None,
        })
        .collect()
}

/// Zeros of `det(L s^2 + K)`: `+- i sqrt(eig(L^-1 K))`.
fn lc_poles<T: Real>(spec: &CircuitSpec<T>) -> Result<Vec<Complex<T>>> {
    let m = spec.l_inverse() * &spec.k;
    let mut out = Vec::new();
    for z in eigenvalues(&m)? {
        let w = z.re.max(T::zero()).sqrt();
        out.push(Complex::new(T::zero(), w));
        out.push(Complex::new(T::zero(), -w));
    }
    Ok(out)
}

/// Poles of `chi` and `S` for ohmic/Drude lines, from the realization on
/// `[q, v, y_drude]`:
/// `L v' = -K q - sum_ohmic r_k v_k e_k - sum_drude y_k e_k`,
/// `y_k' = -c_k y_k + r_k c_k v_k`.
pub fn system_poles<T: Real>(spec: &CircuitSpec<T>) -> Result<Vec<Complex<T>>> {
    let n = spec.n;
    let drude: Vec<(usize, T, T)> = spec
        .lines
        .iter()
        .enumerate()
        .filter_map(|(k, sd)| match sd {
            SpectralDensity::Drude { r, omega_c } => Some((k, *r, *omega_c)),
            _ => None,
        })
        .collect();
    let dim = 2 * n + drude.len();
    let linv = spec.l_inverse();
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..n {
        a[(i, n + i)] = T::one();
    }
    let lk = &linv * &spec.k;
    let mut damp = DMatrix::zeros(n, n);
    for (k, sd) in spec.lines.iter().enumerate() {
        if let SpectralDensity::Ohmic { r } = sd {
            damp[(k, k)] = *r;
        }
    }
    let ld = &linv * damp;
    for i in 0..n {
        for j in 0..n {
            a[(n + i, j)] = -lk[(i, j)];
            a[(n + i, n + j)] = -ld[(i, j)];
        }
    }
    for (m, &(k, r, wc)) in drude.iter().enumerate() {
        let y = 2 * n + m;
        for i in 0..n {
            a[(n + i, y)] = -linv[(i, k)];
        }
        a[(y, y)] = -wc;
        a[(y, n + k)] = r * wc;
    }
    eigenvalues(&a)
}

/// Grids used by the certification checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan<T> {
    /// Real parts of the right-half-plane grid.
    pub re: Vec<T>,
    /// Imaginary parts of the right-half-plane grid.
    pub im: Vec<T>,
    /// Frequencies of the boundary grid `0+ - i omega`.
    pub boundary: Vec<T>,
}

fn logspace<T: Real>(lo: f64, hi: f64, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lit(10f64.powf(lo))];
    }
    (0..n)
        .map(|i| lit(10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)))
        .collect()
}

impl<T: Real> SamplingPlan<T> {
    /// `re` log-spaced on `[1e-3, 1e3]`, `im` on `+-[1e-3, 1e3]` plus zero,
    /// boundary on `+-[1e-3, 1e3]`.
    pub fn log(n_re: usize, n_im: usize, n_boundary_half: usize) -> Self {
        let re = logspace(-3.0, 3.0, n_re);
        let pos: Vec<T> = logspace(-3.0, 3.0, n_im);
        let mut im: Vec<T> = pos.iter().rev().map(|&x| -x).collect();
        im.push(T::zero());
        im.extend(pos.iter().copied());
        let bp: Vec<T> = logspace(-3.0, 3.0, n_boundary_half);
        let mut boundary: Vec<T> = bp.iter().rev().map(|&x| -x).collect();
        boundary.extend(bp);
        Self { re, im, boundary }
    }

    fn rhp_points(&self) -> Vec<Complex<T>> {
        let mut pts = Vec::with_capacity(self.re.len() * self.im.len());
        for &x in &self.re {
            for &y in &self.im {
                pts.push(Complex::new(x, y));
            }
        }
        pts
    }
}

impl<T: Real> Default for SamplingPlan<T> {
    fn default() -> Self {
        Self::log(25, 12, 100)
    }
}

/// Outcome of [`check_lbr`] / [`check_lpr`].
#[derive(Debug, Clone, PartialEq)]
pub struct LbrVerdict<T> {
    pub analytic_ok: bool,
    /// LBR: `sigma_max(S) <= 1 + tol`; LPR: Hermitian part `>= -tol`.
    pub contractive_ok: bool,
    /// LBR: `||S* S - I|| <= tol`; LPR: boundary Hermitian part within tol of 0.
    pub boundary_lossless_ok: bool,
    /// `conj X(s) = X(conj s)`.
    pub symmetry_ok: bool,
    pub worst_point: Complex<T>,
    pub worst_value: T,
    pub certificate_kind: CertificateKind,
}

impl<T> LbrVerdict<T> {
    pub fn verdict(&self) -> bool {
        self.analytic_ok && self.contractive_ok && self.boundary_lossless_ok && self.symmetry_ok
    }
}

fn opnorm<T: Real>(m: &CMatrix<T>) -> T {
    if m.iter()
        .any(|z| !z.re.as_f64().is_finite() || !z.im.as_f64().is_finite())
    {
        return lit(f64::INFINITY);
    }
    m.singular_values().iter().copied().fold(T::zero(), T::max)
}

fn herm_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * c(lit::<T>(0.5))
}

fn min_herm_eig<T: Real>(m: &CMatrix<T>) -> T {
    let h = herm_part(m);
    if h.iter()
        .any(|z| !z.re.as_f64().is_finite() || !z.im.as_f64().is_finite())
    {
        return lit(f64::NEG_INFINITY);
    }
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(T::max_value().unwrap(), T::min)
}

/// Evaluates at a point; singular points count as infinite, other failures
/// are reported.
fn sample<T: Real>(
    t: &AnalyticTransfer<T>,
    s: Complex<T>,
    boundary: Option<T>,
) -> Result<Option<CMatrix<T>>> {
    let v = match boundary {
        Some(w) => t.eval_boundary(w),
        None => t.eval(s),
    };
    match v {
        Ok(m) => Ok(Some(m)),
        Err(Error::SingularMatrix | Error::CayleySingular) => Ok(None),
        Err(e) => Err(Error::EvaluationFailure(format!(
            "at s = {:e}{:+e}i: {e}",
            s.re.as_f64(),
            s.im.as_f64()
        ))),
    }
}

fn poles_ok<T: Real>(t: &AnalyticTransfer<T>) -> bool {
    t.poles
        .iter()
        .all(|p| p.re <= T::tol(1e-10, 64.0) * T::one().max(p.modulus()))
}

fn symmetry_residual<T: Real>(t: &AnalyticTransfer<T>, s: Complex<T>, m: &CMatrix<T>) -> Result<T> {
    Ok(match sample(t, s.conj(), None)? {
        Some(mc) => (m.map(|z| z.conj()) - mc)
            .iter()
            .fold(T::zero(), |a, z| a.max(z.modulus())),
        None => T::zero(),
    })
}

struct Sweep<T: Real> {
    /// Worst interior measure and where.
    interior: (T, Complex<T>),
    /// Worst boundary measure and where.
    boundary: (T, Complex<T>),
    symmetry: T,
    any_missing: bool,
}

fn sweep<T, FI, FB>(
    t: &AnalyticTransfer<T>,
    plan: &SamplingPlan<T>,
    interior: FI,
    boundary: FB,
) -> Result<Sweep<T>>
where
    T: Real,
    FI: Fn(&CMatrix<T>) -> T + Sync,
    FB: Fn(&CMatrix<T>) -> Option<T> + Sync,
{
    let inf: T = lit(f64::INFINITY);
    let pts = plan.rhp_points();
    let rows: Vec<Result<(T, T, bool)>> = pts
        .par_iter()
        .map(|&s| match sample(t, s, None)? {
            Some(m) => {
                let sym = symmetry_residual(t, s, &m)? / T::one().max(opnorm(&m));
                Ok((interior(&m), sym, false))
            }
            None => Ok((inf, T::zero(), true)),
        })
        .collect();
    let mut out = Sweep {
        interior: (lit(f64::NEG_INFINITY), Complex::new(T::zero(), T::zero())),
        boundary: (lit(f64::NEG_INFINITY), Complex::new(T::zero(), T::zero())),
        symmetry: T::zero(),
        any_missing: false,
    };
    for (s, r) in pts.iter().zip(rows) {
        let (v, sym, missing) = r?;
        out.any_missing |= missing;
        out.symmetry = out.symmetry.max(sym);
        if !(v <= out.interior.0) {
            out.interior = (v, *s);
        }
    }
    let brows: Vec<Result<(Option<T>, bool)>> = plan
        .boundary
        .par_iter()
        .map(
            |&w| match sample(t, Complex::new(T::zero(), -w), Some(w))? {
                Some(m) => Ok((boundary(&m), false)),
                None => Ok((None, true)),
            },
        )
        .collect();
    for (&w, r) in plan.boundary.iter().zip(brows) {
        let (v, _near_pole) = r?;
        if let Some(v) = v {
            if !(v <= out.boundary.0) {
                out.boundary = (v, Complex::new(T::zero(), -w));
            }
        }
    }
    Ok(out)
}

fn finish<T: Real>(
    t: &AnalyticTransfer<T>,
    sw: Sweep<T>,
    contractive_ok: bool,
    boundary_ok: bool,
    tol: T,
) -> LbrVerdict<T> {
    let analytic_ok = if t.poles_complete {
        poles_ok(t)
    } else {
        !sw.any_missing
    };
    let (worst_value, worst_point) = if sw.interior.0 >= sw.boundary.0 {
        sw.interior
    } else {
        sw.boundary
    };
    LbrVerdict {
        analytic_ok,
        contractive_ok,
        boundary_lossless_ok: boundary_ok,
        symmetry_ok: sw.symmetry <= tol,
        worst_point,
        worst_value,
        certificate_kind: if t.poles_complete {
            CertificateKind::RationalExact
        } else {
            CertificateKind::Sampled
        },
    }
}

/// Lossless bounded-real test of a scattering function.
///
/// `worst_value` is the largest of `sigma_max - 1` over the right half plane
/// and `||S* S - I||` over the boundary.
pub fn check_lbr<T: Real>(
    t: &AnalyticTransfer<T>,
    plan: &SamplingPlan<T>,
    tol: T,
) -> Result<LbrVerdict<T>> {
    let sw = sweep(
        t,
        plan,
        |m| opnorm(m) - T::one(),
        |m| {
            let n = m.nrows();
            Some(opnorm(&(m.adjoint() * m - CMatrix::<T>::identity(n, n))))
        },
    )?;
    let contractive_ok = sw.interior.0 <= tol;
    let boundary_ok = sw.boundary.0 <= tol;
    Ok(finish(t, sw, contractive_ok, boundary_ok, tol))
}

/// Norm above which a boundary sample is treated as sitting on a pole.
const NEAR_POLE: f64 = 1e8;

/// Lossless positive-real test of an immittance function.
///
/// `worst_value` is the largest of `-min eig(Re X)/max(1,||X||)` over the right
/// half plane and `||Re X||/max(1,||X||)` over the boundary.
pub fn check_lpr<T: Real>(
    t: &AnalyticTransfer<T>,
    plan: &SamplingPlan<T>,
    tol: T,
) -> Result<LbrVerdict<T>> {
    let sw = sweep(
        t,
        plan,
        |m| -min_herm_eig(m) / T::one().max(opnorm(m)),
        |m| {
            let nm = opnorm(m);
            if !(nm <= lit(NEAR_POLE)) {
                return None;
            }
            Some(opnorm(&herm_part(m)) / T::one().max(nm))
        },
    )?;
    let contractive_ok = sw.interior.0 <= tol;
    let boundary_ok = sw.boundary.0 <= tol;
    Ok(finish(t, sw, contractive_ok, boundary_ok, tol))
}
