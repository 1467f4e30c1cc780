//! The lumped n-terminal component and its ohmic state-space form.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::scalar::lit;
use crate::spectral::SpectralDensity;
use crate::{Error, Real, Result};

/// Component with `n` terminals, each attached to its own transmission line.
///
/// `l` is the inductance matrix, `k` the capacitor (inverse capacitance)
/// matrix and `lines[j]` the spectral density seen at terminal `j`. Units are
/// dimensionless; `hbar` defaults to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec<T: Real> {
    pub n: usize,
    pub l: DMatrix<T>,
    pub k: DMatrix<T>,
    pub lines: Vec<SpectralDensity<T>>,
    pub hbar: T,
}

impl<T: Real> CircuitSpec<T> {
    /// Builds and validates a spec.
    pub fn new(l: DMatrix<T>, k: DMatrix<T>, lines: Vec<SpectralDensity<T>>) -> Result<Self> {
        let n = l.nrows();
        validate_spec(&CircuitSpec {
            n,
            l,
            k,
            lines,
            hbar: T::one(),
        })
    }

    pub fn with_hbar(mut self, hbar: T) -> Result<Self> {
        self.hbar = hbar;
        validate_spec(&self)
    }

    /// Common resistance if every line is ohmic with the same `r`.
    pub fn common_ohmic_resistance(&self) -> Option<T> {
        let mut r0 = None;
        for sd in &self.lines {
            match sd {
                SpectralDensity::Ohmic { r } => match r0 {
                    None => r0 = Some(*r),
                    Some(x) if x == *r => {}
                    Some(_) => return None,
                },
                _ => return None,
            }
        }
        r0
    }

    pub fn l_inverse(&self) -> DMatrix<T> {
        // L is validated positive definite.
        self.l
            .clone()
            .try_inverse()
            .expect("validated L is invertible")
    }
}

fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |a, v| a.max(v.abs()))
}

fn symmetry_tolerance<T: Real>() -> T {
    T::tol(1e-12, 8.0)
}

fn check_symmetric<T: Real>(m: &DMatrix<T>, name: &'static str) -> Result<DMatrix<T>> {
    let scale = T::one().max(max_abs(m));
    let asym = max_abs(&(m - m.transpose()));
    if !(asym <= symmetry_tolerance::<T>() * scale) {
        return Err(Error::NotSymmetric(name));
    }
    Ok((m + m.transpose()) * lit::<T>(0.5))
}

/// Validates dimensions, symmetry, definiteness and the line spectral
/// densities. Symmetric parts are returned, so validation is idempotent.
pub fn validate_spec<T: Real>(raw: &CircuitSpec<T>) -> Result<CircuitSpec<T>> {
    let n = raw.n;
    if n == 0 {
        return Err(Error::DimensionMismatch {
            what: "terminal count",
            expected: 1,
            found: 0,
        });
    }
    for (what, m) in [("L", &raw.l), ("K", &raw.k)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: if m.nrows() != n { m.nrows() } else { m.ncols() },
            });
        }
        if !m.iter().all(|v| v.as_f64().is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{what} has non-finite entries"
            )));
        }
    }
    if raw.lines.len() != n {
        return Err(Error::DimensionMismatch {
            what: "lines",
            expected: n,
            found: raw.lines.len(),
        });
    }
    if !(raw.hbar > T::zero()) {
        return Err(Error::InvalidArgument("hbar must be positive".into()));
    }
    let l = check_symmetric(&raw.l, "L")?;
    let k = check_symmetric(&raw.k, "K")?;

    let tol = symmetry_tolerance::<T>();
    let l_eig = SymmetricEigen::new(l.clone()).eigenvalues;
    let l_norm = l_eig.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let l_min = l_eig.iter().copied().fold(T::max_value().unwrap(), T::min);
    if !(l_min > tol * l_norm) || l_norm == T::zero() {
        return Err(Error::NotPositiveDefinite("L"));
    }
    let k_eig = SymmetricEigen::new(k.clone()).eigenvalues;
    let k_norm = k_eig.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let k_min = k_eig.iter().copied().fold(T::max_value().unwrap(), T::min);
    if k_min < -tol * k_norm {
        return Err(Error::NotPositiveSemidefinite("K"));
    }
    for (line, sd) in raw.lines.iter().enumerate() {
        sd.validate()
            .map_err(|reason| Error::BadSpectralDensity { line, reason })?;
    }
    Ok(CircuitSpec {
        n,
        l,
        k,
        lines: raw.lines.clone(),
        hbar: raw.hbar,
    })
}

/// `A-` (forward, damped) and `A+` (backward) state matrices of the ohmic
/// circuit acting on `[q; i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrices<T: Real> {
    pub a_minus: DMatrix<T>,
    pub a_plus: DMatrix<T>,
    pub n: usize,
}

impl<T: Real> StateMatrices<T> {
    /// `(H_iq(t), H_ii(t))`: lower blocks of `exp(A t)` for `A = a_minus` when
    /// `forward`, else `a_plus`.
    pub fn current_blocks(&self, t: T, forward: bool) -> (DMatrix<T>, DMatrix<T>) {
        let a = if forward { &self.a_minus } else { &self.a_plus };
        let e = (a * t).exp();
        let n = self.n;
        (
            e.view((n, 0), (n, n)).into_owned(),
            e.view((n, n), (n, n)).into_owned(),
        )
    }
}

/// `A± = [[0, I], [-L^-1 K, ±r L^-1]]` for a common line resistance `r`.
pub fn build_state_matrices<T: Real>(spec: &CircuitSpec<T>, r: T) -> Result<StateMatrices<T>> {
    if !(r >= T::zero()) {
        return Err(Error::InvalidArgument(
            "resistance must be non-negative".into(),
        ));
    }
    let n = spec.n;
    let linv = spec.l_inverse();
    let lk = &linv * &spec.k;
    let mut a_minus = DMatrix::zeros(2 * n, 2 * n);
    a_minus
        .view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    a_minus.view_mut((n, 0), (n, n)).copy_from(&(-&lk));
    let mut a_plus = a_minus.clone();
    a_minus.view_mut((n, n), (n, n)).copy_from(&(&linv * (-r)));
    a_plus.view_mut((n, n), (n, n)).copy_from(&(&linv * r));
    Ok(StateMatrices { a_minus, a_plus, n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurwitzVerdict<T> {
    pub hurwitz: bool,
    /// `-max Re(lambda)`.
    pub margin: T,
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur =
        nalgebra::linalg::Schur::try_new(m.clone(), T::eps(), 10_000).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Hurwitz test: every eigenvalue has real part below `-tol`.
pub fn is_hurwitz<T: Real>(m: &DMatrix<T>, tol: T) -> Result<HurwitzVerdict<T>> {
    let ev = eigenvalues(m)?;
    let max_re = ev
        .iter()
        .map(|z| z.re)
        .fold(T::min_value().unwrap(), T::max);
    Ok(HurwitzVerdict {
        hurwitz: max_re < -tol,
        margin: -max_re,
    })
}

/// Normal modes of the lossless component.
///
/// `y[(k, j)]` expresses terminal charge `q_k` in mode `j`:
/// `q = sqrt(hbar/2) Y (a + a*)`, and `p = -i sqrt(hbar/2) P (a - a*)` with
/// `p_coeff = P`. Frequencies ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes<T: Real> {
    pub omegas: Vec<T>,
    pub y: DMatrix<T>,
    pub p_coeff: DMatrix<T>,
}

impl<T: Real> NormalModes<T> {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// `max |Y P^T - I|`; zero exactly when `[q_j, p_k] = i hbar delta_jk`.
    pub fn ccr_residual(&self) -> T {
        let n = self.y.nrows();
        max_abs(&(&self.y * self.p_coeff.transpose() - DMatrix::identity(n, n)))
    }
}

/// Relative gap below which two squared frequencies form one cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Modes from the symmetric problem `M = L^-1/2 K L^-1/2 = O diag(W^2) O^T`,
/// `Y = L^-1/2 O diag(W^-1/2)`.
pub fn normal_modes<T: Real>(spec: &CircuitSpec<T>) -> Result<NormalModes<T>> {
    let n = spec.n;
    let le = SymmetricEigen::new(spec.l.clone());
    let mut inv_sqrt = DMatrix::zeros(n, n);
    let mut sqrt = DMatrix::zeros(n, n);
    for i in 0..n {
        inv_sqrt[(i, i)] = T::one() / le.eigenvalues[i].sqrt();
        sqrt[(i, i)] = le.eigenvalues[i].sqrt();
    }
    let l_inv_half = &le.eigenvectors * inv_sqrt * le.eigenvectors.transpose();
    let l_half = &le.eigenvectors * sqrt * le.eigenvectors.transpose();
    let m = &l_inv_half * &spec.k * &l_inv_half;
    let m = (&m + m.transpose()) * lit::<T>(0.5);
    let me = SymmetricEigen::new(m.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        me.eigenvalues[a]
            .partial_cmp(&me.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let w2: Vec<T> = order.iter().map(|&i| me.eigenvalues[i]).collect();
    let mut o = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        o.set_column(c, &me.eigenvectors.column(i));
    }

    let scale = w2.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    for (j, &v) in w2.iter().enumerate() {
        if !(v > lit::<T>(1e-12) * scale) || scale == T::zero() {
            return Err(Error::ZeroMode(j));
        }
    }

    canonicalize_basis(&mut o, &w2);

    let mut y = DMatrix::zeros(n, n);
    let mut p = DMatrix::zeros(n, n);
    let omegas: Vec<T> = w2.iter().map(|v| v.sqrt()).collect();
    let lo = &l_inv_half * &o;
    let ho = &l_half * &o;
    for j in 0..n {
        let s = omegas[j].sqrt();
        for k in 0..n {
            y[(k, j)] = lo[(k, j)] / s;
            p[(k, j)] = ho[(k, j)] * s;
        }
    }
    let modes = NormalModes {
        omegas,
        y,
        p_coeff: p,
    };
    if !(modes.ccr_residual() <= T::tol(1e-10, 1e3)) {
        return Err(Error::EigenFailure);
    }
    Ok(modes)
}

/// Deterministic eigenbasis: inside each degenerate cluster, Gram-Schmidt of
/// the projected unit vectors in ascending index order; single vectors get
/// their largest-magnitude component made positive.
fn canonicalize_basis<T: Real>(o: &mut DMatrix<T>, w2: &[T]) {
    let n = w2.len();
    let scale = w2.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (w2[end] - w2[end - 1]) <= lit::<T>(DEGENERACY_GAP) * scale {
            end += 1;
        }
        let m = end - start;
        if m == 1 {
            let mut col = o.column(start).into_owned();
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() * (T::one() + lit::<T>(1e-12)) {
                    best = i;
                }
            }
            if col[best] < T::zero() {
                col = -col;
            }
            o.set_column(start, &col);
        } else {
            let v = o.columns(start, m).into_owned();
            let proj = &v * v.transpose();
            let mut basis: Vec<nalgebra::DVector<T>> = Vec::with_capacity(m);
            for i in 0..n {
                if basis.len() == m {
                    break;
                }
                let mut x = proj.column(i).into_owned();
                for b in &basis {
                    let c = b.dot(&x);
                    x -= b * c;
                }
                let nx = x.norm();
                if nx > lit::<T>(1e-6) {
                    basis.push(x / nx);
                }
            }
            for (c, b) in basis.iter().enumerate() {
                o.set_column(start + c, b);
            }
        }
        start = end;
    }
}
