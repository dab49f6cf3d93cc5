//! Parameter tuning: the step size `α` for gradient descent and `(γ, ρ)` with
//! scalar `ρ` for ADMM, each minimizing the spectral rate `τ`.
//!
//! ADMM tuning relies on `T_A = I − γG` with `G = A + B − 2BA` independent of
//! `γ`. One eigensolve of `G` per `ρ` then gives `τ` for every `γ`, and for
//! fixed `ρ` the map `γ ↦ max |1 − γν|` is convex, so the best `γ` is found
//! by golden section search without further eigensolves.

use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::FactorGraph;
use crate::operators::{build_a, build_b, build_t_a, build_t_g, relaxation_generator, stacked_laplacian, AdmmParams};
use crate::scalar::Scalar;
use crate::spectral::{convergence_rate, rate_from_eigenvalues, spectrum, symmetric_spectrum, SpectrumReport, UNIT_TOL};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
/// Refinement trials without a `refine_tol` improvement before stopping.
/// Twenty golden section steps shrink the bracket about 15000-fold.
const STALL_WINDOW: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneStatus {
    Converged,
    /// The optimum sits on an edge of the search domain.
    Boundary,
    /// No convergent parameters were found.
    Failed,
}

impl fmt::Display for TuneStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TuneStatus::Converged => "converged",
            TuneStatus::Boundary => "boundary",
            TuneStatus::Failed => "failed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TunedParams {
    Gd { alpha: f64 },
    Admm { gamma: f64, rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub params: TunedParams,
    pub tau: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// Rate evaluations, each one value of `τ`.
    pub evaluations: usize,
    pub refinement_iterations: usize,
    pub status: TuneStatus,
}

impl TuneResult {
    fn new(params: TunedParams, tau: f64, evaluations: usize, refinement_iterations: usize, status: TuneStatus) -> Self {
        TuneResult { params, tau, r: 1.0 / (1.0 - tau), evaluations, refinement_iterations, status }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.params {
            TunedParams::Gd { alpha } => Some(alpha),
            TunedParams::Admm { .. } => None,
        }
    }

    pub fn gamma_rho(&self) -> Option<(f64, f64)> {
        match self.params {
            TunedParams::Admm { gamma, rho } => Some((gamma, rho)),
            TunedParams::Gd { .. } => None,
        }
    }
}

/// `τ` of a map, or `+∞` if it diverges or has unit eigenvalues beyond the
/// single consensus mode.
pub fn score(report: &SpectrumReport) -> f64 {
    if report.diverged || report.unit_count > 1 {
        f64::INFINITY
    } else {
        report.tau
    }
}

/// Nonzero spectrum bounds `(λ₂, λ_max)` of `SᵀQS`.
pub fn laplacian_bounds<T: Scalar>(fg: &FactorGraph<T>, weights: &[T]) -> Result<(f64, f64)> {
    let eig = symmetric_spectrum(&stacked_laplacian(fg, weights)?)?;
    let zeros = zero_modes(&eig);
    if zeros != 1 || eig.len() < 2 {
        return Err(Error::Disconnected(zeros));
    }
    let lmax = eig[0];
    let l2 = eig[eig.len() - 2];
    Ok((l2, lmax))
}

/// Eigenvalues of a Laplacian spectrum (sorted descending) that count as 0.
fn zero_modes(eig: &[f64]) -> usize {
    let zero_tol = 1e-9 * eig.first().copied().unwrap_or(0.0).max(1.0);
    eig.iter().filter(|l| l.abs() <= zero_tol).count()
}

/// `α* = 2/(λ_max + λ₂)` and `τ* = (λ_max − λ₂)/(λ_max + λ₂)`, exact because
/// `T_G` is symmetric.
pub fn tune_gd_closed_form<T: Scalar>(fg: &FactorGraph<T>, weights: &[T]) -> Result<TuneResult> {
    let (l2, lmax) = laplacian_bounds(fg, weights)?;
    let alpha = 2.0 / (lmax + l2);
    let tau = (lmax - l2) / (lmax + l2);
    Ok(TuneResult::new(TunedParams::Gd { alpha }, tau, 1, 0, TuneStatus::Converged))
}

/// Golden section search for `α` on `(0, 2/λ_max)` using full spectra of
/// `T_G`. Stops once the bracket is narrower than `tol` or after `budget`
/// evaluations.
pub fn tune_gd_search<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], tol: f64, budget: usize) -> Result<TuneResult> {
    if tol.is_nan() || tol <= 0.0 || budget < 2 {
        return Err(Error::InvalidParameter("search needs tol > 0 and a budget of at least 2".into()));
    }
    let (_, lmax) = laplacian_bounds(fg, weights)?;
    let mut evaluations = 0;
    let mut eval = |alpha: f64| -> Result<f64> {
        evaluations += 1;
        let t_g = build_t_g(fg, weights, T::from_f64_lossy(alpha))?;
        Ok(match convergence_rate(&t_g, UNIT_TOL) {
            Ok(report) => score(&report),
            Err(Error::DegenerateSpectrum) => f64::INFINITY,
            Err(e) => return Err(e),
        })
    };
    let (mut lo, mut hi) = (0.0, 2.0 / lmax);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    let mut iterations = 0;
    while hi - lo > tol && iterations + 2 < budget {
        iterations += 1;
        if fc <= fd {
            (hi, d, fd) = (d, c, fc);
            c = hi - INV_PHI * (hi - lo);
            fc = eval(c)?;
        } else {
            (lo, c, fc) = (c, d, fd);
            d = lo + INV_PHI * (hi - lo);
            fd = eval(d)?;
        }
    }
    let (alpha, tau) = if fc <= fd { (c, fc) } else { (d, fd) };
    let status = if tau.is_finite() { TuneStatus::Converged } else { TuneStatus::Failed };
    Ok(TuneResult::new(TunedParams::Gd { alpha }, tau, evaluations, iterations, status))
}

/// Search domain and budgets for [`tune_admm`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmmSearchSpec {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_points: usize,
    /// Refinement stops when the best `τ` improved by less than this over
    /// the last twenty refinement trials.
    pub refine_tol: f64,
    /// Maximum number of `ρ` values tried during refinement.
    pub refine_budget: usize,
}

impl Default for AdmmSearchSpec {
    fn default() -> Self {
        AdmmSearchSpec {
            gamma_min: 0.05,
            gamma_max: 1.95,
            gamma_points: 25,
            rho_min: 1e-3,
            rho_max: 1e3,
            rho_points: 41,
            refine_tol: 1e-8,
            refine_budget: 200,
        }
    }
}

impl AdmmSearchSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.gamma_min
            && self.gamma_min < self.gamma_max
            && self.gamma_max < 2.0
            && 0.0 < self.rho_min
            && self.rho_min < self.rho_max
            && self.rho_max.is_finite()
            && self.gamma_points >= 2
            && self.rho_points >= 2
            && self.refine_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "search domain needs 0 < gamma_min < gamma_max < 2, 0 < rho_min < rho_max and at least two points per axis: {self:?}"
            )))
        }
    }

    /// Overrides fields from `key = value` lines. Blank lines and `#`
    /// comments are ignored.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value.parse().map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
        }
        match key {
            "gamma_min" => self.gamma_min = num(key, value)?,
            "gamma_max" => self.gamma_max = num(key, value)?,
            "gamma_points" => self.gamma_points = num(key, value)?,
            "rho_min" => self.rho_min = num(key, value)?,
            "rho_max" => self.rho_max = num(key, value)?,
            "rho_points" => self.rho_points = num(key, value)?,
            "refine_tol" => self.refine_tol = num(key, value)?,
            "refine_budget" => self.refine_budget = num(key, value)?,
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        let step = (self.gamma_max - self.gamma_min) / (self.gamma_points - 1) as f64;
        (0..self.gamma_points)
            .map(|i| if i + 1 == self.gamma_points { self.gamma_max } else { self.gamma_min + step * i as f64 })
            .collect()
    }

    pub fn rho_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.rho_min.ln(), self.rho_max.ln());
        let step = (hi - lo) / (self.rho_points - 1) as f64;
        (0..self.rho_points)
            .map(|i| match i {
                0 => self.rho_min,
                _ if i + 1 == self.rho_points => self.rho_max,
                _ => (lo + step * i as f64).exp(),
            })
            .collect()
    }
}

impl FromStr for AdmmSearchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = AdmmSearchSpec::default();
        spec.apply_config(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Eigenvalues of `G = A + B − 2BA` for uniform `ρ`.
pub fn generator_spectrum<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], rho: f64) -> Result<Vec<Complex<f64>>> {
    let rho = vec![T::from_f64_lossy(rho); fg.num_ehat()];
    let a = build_a(fg, weights, &rho)?;
    let b = build_b(fg, &rho)?;
    spectrum(&relaxation_generator(&a, &b))
}

/// Score of `T_A = I − γG` from the eigenvalues `nu` of `G`.
pub fn admm_score_from_generator(nu: &[Complex<f64>], gamma: f64) -> f64 {
    let mapped = nu.iter().map(|z| Complex::new(1.0, 0.0) - z * gamma).collect();
    match rate_from_eigenvalues(mapped, UNIT_TOL) {
        Ok(report) => score(&report),
        Err(_) => f64::INFINITY,
    }
}

/// Best `γ` in `[lo, hi]` for fixed generator eigenvalues, with the number
/// of scores computed.
fn best_gamma(nu: &[Complex<f64>], lo: f64, hi: f64) -> (f64, f64, usize) {
    let f = |g: f64| admm_score_from_generator(nu, g);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut count = 2;
    while b - a > 1e-12 * (1.0 + b.abs()) {
        if fc <= fd {
            (b, d, fd) = (d, c, fc);
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        count += 1;
    }
    // the optimum may sit on the domain edge, which interior probes never hit
    let (fl, fh) = (f(lo), f(hi));
    count += 2;
    [(c, fc), (d, fd), (lo, fl), (hi, fh)]
        .into_iter()
        .fold((lo, f64::INFINITY, count), |best, (g, v)| if v < best.1 { (g, v, count) } else { best })
}

/// Coarse `(γ, ρ)` grid followed by local refinement around the best point.
///
/// Grid ties go to the smallest `ρ`, then the smallest `γ`. Refinement runs
/// a golden section search in `ln ρ` between the grid neighbours of the best
/// `ρ`, optimizing `γ` exactly for each trial `ρ`, and stops when `τ`
/// improved by less than `refine_tol` over twenty consecutive trials, the
/// bracket collapses, or the budget is spent. The reported `τ` comes from a final eigensolve of the
/// assembled `T_A`.
pub fn tune_admm<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], spec: &AdmmSearchSpec) -> Result<TuneResult> {
    spec.validate()?;
    let gammas = spec.gamma_grid();
    let rhos = spec.rho_grid();
    let rows: Vec<Vec<f64>> = rhos
        .par_iter()
        .map(|&rho| -> Result<Vec<f64>> {
            let nu = generator_spectrum(fg, weights, rho)?;
            Ok(gammas.iter().map(|&g| admm_score_from_generator(&nu, g)).collect())
        })
        .collect::<Result<_>>()?;
    let mut evaluations = gammas.len() * rhos.len();
    let mut best = (f64::INFINITY, 0, 0);
    for (i, row) in rows.iter().enumerate() {
        for (j, &tau) in row.iter().enumerate() {
            if tau < best.0 {
                best = (tau, i, j);
            }
        }
    }
    let (grid_tau, ri, gi) = best;
    if !grid_tau.is_finite() {
        let params = TunedParams::Admm { gamma: gammas[0], rho: rhos[0] };
        return Ok(TuneResult::new(params, f64::INFINITY, evaluations, 0, TuneStatus::Failed));
    }

    let mut best_point = (grid_tau, gammas[gi], rhos[ri]);
    let mut iterations = 0;
    if spec.refine_budget > 0 {
        let mut trial = |log_rho: f64| -> Result<(f64, f64)> {
            let nu = generator_spectrum(fg, weights, log_rho.exp())?;
            let (g, tau, count) = best_gamma(&nu, spec.gamma_min, spec.gamma_max);
            evaluations += count;
            Ok((tau, g))
        };
        let mut lo = rhos[ri.saturating_sub(1)].ln();
        let mut hi = rhos[(ri + 1).min(rhos.len() - 1)].ln();
        let mut history = vec![best_point.0];
        let consider = |tau: f64, g: f64, lr: f64, best_point: &mut (f64, f64, f64)| {
            if tau < best_point.0 {
                *best_point = (tau, g, lr.exp());
            }
        };
        // the grid point itself with γ freed from the grid
        let (t0, g0) = trial(rhos[ri].ln())?;
        iterations += 1;
        consider(t0, g0, rhos[ri].ln(), &mut best_point);
        history.push(best_point.0);
        let mut c = hi - INV_PHI * (hi - lo);
        let mut d = lo + INV_PHI * (hi - lo);
        let (mut fc, gc) = trial(c)?;
        let (mut fd, gd) = trial(d)?;
        iterations += 2;
        consider(fc, gc, c, &mut best_point);
        consider(fd, gd, d, &mut best_point);
        history.push(best_point.0);
        while iterations < spec.refine_budget && hi - lo > 1e-12 {
            if history.len() > STALL_WINDOW && history[history.len() - 1 - STALL_WINDOW] - best_point.0 < spec.refine_tol {
                break;
            }
            if fc <= fd {
                (hi, d, fd) = (d, c, fc);
                c = hi - INV_PHI * (hi - lo);
                let (v, g) = trial(c)?;
                fc = v;
                consider(v, g, c, &mut best_point);
            } else {
                (lo, c, fc) = (c, d, fd);
                d = lo + INV_PHI * (hi - lo);
                let (v, g) = trial(d)?;
                fd = v;
                consider(v, g, d, &mut best_point);
            }
            iterations += 1;
            history.push(best_point.0);
        }
    }

    let (_, gamma, rho) = best_point;
    let params = AdmmParams::uniform(T::from_f64_lossy(gamma), T::from_f64_lossy(rho), fg.num_ehat())?;
    let verified = score(&convergence_rate(&build_t_a(fg, weights, &params)?, UNIT_TOL)?);
    evaluations += 1;
    let edge = |v: f64, lo: f64, hi: f64| (v - lo).abs() <= 1e-9 * lo.abs().max(1.0) || (hi - v).abs() <= 1e-9 * hi.abs().max(1.0);
    let status = if !verified.is_finite() {
        TuneStatus::Failed
    } else if edge(gamma, spec.gamma_min, spec.gamma_max) || edge(rho, spec.rho_min, spec.rho_max) {
        TuneStatus::Boundary
    } else {
        TuneStatus::Converged
    };
    Ok(TuneResult::new(TunedParams::Admm { gamma, rho }, verified, evaluations, iterations, status))
}
