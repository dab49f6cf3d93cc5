//! Spectra of evolution matrices and the rates derived from them.
//!
//! The rate of a map `T` is `τ = max{|λ| : |λ| < 1}` over its eigenvalues,
//! with unit-modulus eigenvalues (the consensus modes) excluded. When the
//! subdominant eigenvalue is defective, iterates can grow polynomially for a
//! while before decaying at rate `τ`; that transient is not modelled.
//!
//! Eigenvalues are always computed in `f64`, whatever the entry type of the
//! input matrix.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors, EvdParams};
use faer::{Auto, Par, Spec};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{to_f64_matrix, Scalar};

/// Default width of the band around modulus 1 treated as a unit eigenvalue.
pub const UNIT_TOL: f64 = 1e-9;

/// All eigenvalues, sorted by descending modulus (ties by real part, then
/// imaginary part, both descending).
pub fn spectrum<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let m = to_f64_matrix(m);
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(m.nrows()));
    }
    let mut eig = real_eigenvalues(&m)?;
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(m.nrows()));
    }
    sort_by_modulus(&mut eig);
    Ok(eig)
}

/// Eigenvalues through faer's unblocked double-shift QR. The blocked
/// multishift path (faer's default above 75 rows) can loop forever inside its
/// aggressive early deflation on some ADMM generators; the unblocked sweep
/// has an iteration cap and reports non-convergence instead.
fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    let dense = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let mut params: EvdParams = Auto::<f64>::auto();
    params.schur.blocking_threshold = usize::MAX;
    let params: Spec<EvdParams, f64> = params.into();
    let mut re = Diag::<f64>::zeros(n);
    let mut im = Diag::<f64>::zeros(n);
    let mut buf = MemBuffer::new(evd::evd_scratch::<f64>(n, ComputeEigenvectors::No, ComputeEigenvectors::No, Par::Seq, params));
    evd::evd_real(dense.as_ref(), re.as_mut(), im.as_mut(), None, None, Par::Seq, MemStack::new(&mut buf), params)
        .map_err(|_| Error::NumericalFailure(n))?;
    Ok(re.column_vector().iter().zip(im.column_vector().iter()).map(|(&a, &b)| Complex::new(a, b)).collect())
}

/// Eigenvalues of a symmetric matrix, descending. Uses a different solver
/// from [`spectrum`], so the two can check each other.
pub fn symmetric_spectrum<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput("symmetric eigensolver needs a square matrix".into()));
    }
    let m = to_f64_matrix(m);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(m.nrows()));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

pub(crate) fn sort_by_modulus(eig: &mut [Complex<f64>]) {
    eig.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex<f64>>,
    /// Eigenvalues whose modulus is within `unit_tol` of 1.
    pub unit_count: usize,
    pub tau: f64,
    /// True when some eigenvalue has modulus above `1 + unit_tol`.
    pub diverged: bool,
}

impl SpectrumReport {
    /// `(1 − τ)⁻¹`.
    pub fn r(&self) -> f64 {
        1.0 / (1.0 - self.tau)
    }

    /// Convergence time with `C = 1`, `None` if the map diverges.
    pub fn convergence_time(&self) -> Option<ConvergenceTime> {
        if self.diverged {
            return None;
        }
        convergence_time(self.tau, 1.0).ok()
    }

    pub fn record(&self) -> SpectrumRecord {
        let time = self.convergence_time();
        SpectrumRecord {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            unit_count: self.unit_count,
            tau: self.tau,
            diverged: self.diverged,
            r: if self.diverged { None } else { Some(self.r()) },
            convergence_time: time.map(|t| t.exact),
            convergence_time_approx: time.map(|t| t.approx),
            c_assumed: 1.0,
        }
    }
}

/// JSON form of a [`SpectrumReport`]; eigenvalues as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRecord {
    pub eigenvalues: Vec<[f64; 2]>,
    pub unit_count: usize,
    pub tau: f64,
    pub diverged: bool,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub convergence_time: Option<f64>,
    pub convergence_time_approx: Option<f64>,
    #[serde(rename = "C_assumed")]
    pub c_assumed: f64,
}

pub fn convergence_rate<T: Scalar>(m: &DMatrix<T>, unit_tol: f64) -> Result<SpectrumReport> {
    rate_from_eigenvalues(spectrum(m)?, unit_tol)
}

/// Classifies already computed eigenvalues; they are re-sorted. `tau` is NaN
/// when the map diverges and has no eigenvalue inside the unit band.
pub fn rate_from_eigenvalues(mut eigenvalues: Vec<Complex<f64>>, unit_tol: f64) -> Result<SpectrumReport> {
    sort_by_modulus(&mut eigenvalues);
    let one = 1.0;
    let unit_count = eigenvalues.iter().filter(|z| (z.norm() - one).abs() <= unit_tol).count();
    let diverged = eigenvalues.iter().any(|z| z.norm() > one + unit_tol);
    let tau = eigenvalues
        .iter()
        .map(|z| z.norm())
        .filter(|r| *r < one - unit_tol)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    match tau {
        Some(tau) => Ok(SpectrumReport { eigenvalues, unit_count, tau, diverged }),
        // nothing below the unit band: τ is undefined, which only counts as
        // degenerate when nothing lies above it either
        None if diverged => Ok(SpectrumReport { eigenvalues, unit_count, tau: f64::NAN, diverged }),
        None => Err(Error::DegenerateSpectrum),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceTime {
    /// `C / ln(1/τ)`
    pub exact: f64,
    /// `C / (1 − τ)`
    pub approx: f64,
    /// `(1 − τ)⁻¹`
    pub r: f64,
}

pub fn convergence_time(tau: f64, c: f64) -> Result<ConvergenceTime> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::NotConvergent(tau));
    }
    let gap = 1.0 - tau;
    // ln(1/0) is infinite, which sends the exact time to 0.
    let exact = if tau == 0.0 { 0.0 } else { c / -tau.ln() };
    Ok(ConvergenceTime { exact, approx: c / gap, r: 1.0 / gap })
}
