//! The five-variable ADMM recursion and the gradient descent recursion.
//!
//! [`admm_step`] applies the updates line by line rather than multiplying by
//! `T_A`, so comparing its output with `T_Aᵗ n⁰` is a real check.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graphs::FactorGraph;
use crate::operators::{build_a, build_b, build_t_g, AdmmParams};
use crate::scalar::{max_abs, max_of, Scalar};

/// Runs stop once any tracked vector exceeds this in absolute value.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// ADMM variables, all indexed by `Ê`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState<T: Scalar> {
    pub x: DVector<T>,
    pub m: DVector<T>,
    pub s: DVector<T>,
    pub u: DVector<T>,
    pub n: DVector<T>,
}

impl<T: Scalar> AdmmState<T> {
    /// State with given `s` and `u`, accepted only if `Bs = s` and `Bu = 0`
    /// within `tol`.
    pub fn from_parts(s: DVector<T>, u: DVector<T>, b: &DMatrix<T>, tol: T) -> Result<Self> {
        if s.len() != b.nrows() || u.len() != b.nrows() {
            return Err(Error::InvalidInput("state length differs from |Ê|".into()));
        }
        let off = max_of(max_abs(&(b * &s - &s)), max_abs(&(b * &u)));
        if off > tol {
            return Err(Error::InvalidInput(format!(
                "state is off the invariant manifold (deviation {})",
                off.to_f64_lossy()
            )));
        }
        let len = s.len();
        let n = &s - &u;
        Ok(AdmmState { x: DVector::zeros(len), m: DVector::zeros(len), s, u, n })
    }

    fn largest(&self) -> T {
        [&self.x, &self.m, &self.s, &self.u, &self.n]
            .into_iter()
            .map(|v| max_abs(v))
            .fold(T::zero(), max_of)
    }
}

/// `s⁰ = S z0`, `u⁰ = 0`, `n⁰ = s⁰`, with `x` and `m` zero.
pub fn admm_init<T: Scalar>(fg: &FactorGraph<T>, z0: &DVector<T>) -> Result<AdmmState<T>> {
    if z0.len() != fg.n() {
        return Err(Error::InvalidInput(format!("z0 has length {}, expected {}", z0.len(), fg.n())));
    }
    let s = fg.selection() * z0;
    let len = s.len();
    Ok(AdmmState { x: DVector::zeros(len), m: DVector::zeros(len), n: s.clone(), s, u: DVector::zeros(len) })
}

pub fn admm_step<T: Scalar>(state: &AdmmState<T>, a: &DMatrix<T>, b: &DMatrix<T>, gamma: T) -> AdmmState<T> {
    let relax = T::one() - gamma.clone();
    let x = a * &state.n;
    let m = &x * gamma.clone() + &state.u;
    let s = &state.s * relax.clone() + b * &m;
    let u = &state.u + &x * gamma + &state.s * relax - &s;
    let n = &s - &u;
    AdmmState { x, m, s, u, n }
}

/// Deviations from `Bn = s`, `Bu = 0`, `Bs = s` and `B⊥n = −u`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationResiduals<T> {
    pub bn_minus_s: T,
    pub bu: T,
    pub bs_minus_s: T,
    pub bperp_n_plus_u: T,
}

impl<T: Scalar> RelationResiduals<T> {
    pub fn max(&self) -> T {
        [&self.bn_minus_s, &self.bu, &self.bs_minus_s, &self.bperp_n_plus_u]
            .into_iter()
            .cloned()
            .fold(T::zero(), max_of)
    }
}

pub fn relation_residuals<T: Scalar>(state: &AdmmState<T>, b: &DMatrix<T>) -> RelationResiduals<T> {
    let bn = b * &state.n;
    let bperp_n = &state.n - &bn;
    RelationResiduals {
        bn_minus_s: max_abs(&(&bn - &state.s)),
        bu: max_abs(&(b * &state.u)),
        bs_minus_s: max_abs(&(b * &state.s - &state.s)),
        bperp_n_plus_u: max_abs(&(bperp_n + &state.u)),
    }
}

/// Vector a trajectory is summarized by: `n` for ADMM, `z` for GD.
pub trait TrackedVector<T: Scalar> {
    fn tracked(&self) -> &DVector<T>;
}

impl<T: Scalar> TrackedVector<T> for AdmmState<T> {
    fn tracked(&self) -> &DVector<T> {
        &self.n
    }
}

impl<T: Scalar> TrackedVector<T> for DVector<T> {
    fn tracked(&self) -> &DVector<T> {
        self
    }
}

/// States from `t = 0` on. Holds `steps + 1` entries unless the run diverged.
#[derive(Clone, Debug)]
pub struct Trajectory<S, T> {
    pub states: Vec<S>,
    /// [`fixed_point_residual`] of each tracked vector.
    pub residuals: Vec<T>,
    pub diverged: bool,
    /// Largest relation residual over the run (zero for GD).
    pub relation_residual: T,
    /// Largest gap between `s, u` and their reconstructions `Bn`, `−(I−B)n`
    /// (zero for GD).
    pub reconstruction_error: T,
}

impl<S: TrackedVector<T>, T: Scalar> Trajectory<S, T> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// CSV with columns `t,residual` and, if `with_state`, one column per
    /// entry of the tracked vector.
    pub fn write_csv<W: Write>(&self, out: W, with_state: bool) -> Result<()>
    where
        T: std::fmt::Display,
    {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "residual".to_string()];
        if with_state {
            let len = self.states.first().map_or(0, |s| s.tracked().len());
            header.extend((0..len).map(|i| format!("v{i}")));
        }
        w.write_record(&header)?;
        for (t, (state, r)) in self.states.iter().zip(&self.residuals).enumerate() {
            let mut row = vec![t.to_string(), r.to_string()];
            if with_state {
                row.extend(state.tracked().iter().map(|v| v.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_admm<T: Scalar>(
    fg: &FactorGraph<T>,
    weights: &[T],
    params: &AdmmParams<T>,
    z0: &DVector<T>,
    steps: usize,
) -> Result<Trajectory<AdmmState<T>, T>> {
    let init = admm_init(fg, z0)?;
    run_admm_from(fg, weights, params, init, steps)
}

/// Like [`run_admm`] from an explicit state, which must satisfy `Bs = s` and
/// `Bu = 0` (build it with [`AdmmState::from_parts`]).
pub fn run_admm_from<T: Scalar>(
    fg: &FactorGraph<T>,
    weights: &[T],
    params: &AdmmParams<T>,
    init: AdmmState<T>,
    steps: usize,
) -> Result<Trajectory<AdmmState<T>, T>> {
    let a = build_a(fg, weights, params.rho())?;
    let b = build_b(fg, params.rho())?;
    if init.n.len() != fg.num_ehat() {
        return Err(Error::InvalidInput("state length differs from |Ê|".into()));
    }
    let bound = T::from_f64_lossy(DIVERGENCE_BOUND);
    let mut states = vec![init];
    let mut residuals = vec![fixed_point_residual(&states[0].n)];
    let mut relation = relation_residuals(&states[0], &b).max();
    let mut reconstruction = T::zero();
    let mut diverged = false;
    for _ in 0..steps {
        let next = admm_step(states.last().unwrap(), &a, &b, params.gamma().clone());
        if next.largest() > bound {
            diverged = true;
            break;
        }
        relation = max_of(relation, relation_residuals(&next, &b).max());
        let s_rebuilt = &b * &next.n;
        let u_rebuilt = &s_rebuilt - &next.n;
        reconstruction = max_of(
            reconstruction,
            max_of(max_abs(&(s_rebuilt - &next.s)), max_abs(&(u_rebuilt - &next.u))),
        );
        residuals.push(fixed_point_residual(&next.n));
        states.push(next);
    }
    Ok(Trajectory { states, residuals, diverged, relation_residual: relation, reconstruction_error: reconstruction })
}

/// `zᵗ⁺¹ = T_G zᵗ`.
pub fn run_gd<T: Scalar>(
    fg: &FactorGraph<T>,
    weights: &[T],
    alpha: T,
    z0: &DVector<T>,
    steps: usize,
) -> Result<Trajectory<DVector<T>, T>> {
    if z0.len() != fg.n() {
        return Err(Error::InvalidInput(format!("z0 has length {}, expected {}", z0.len(), fg.n())));
    }
    let t_g = build_t_g(fg, weights, alpha)?;
    let bound = T::from_f64_lossy(DIVERGENCE_BOUND);
    let mut states = vec![z0.clone()];
    let mut residuals = vec![fixed_point_residual(z0)];
    let mut diverged = false;
    for _ in 0..steps {
        let next = &t_g * states.last().unwrap();
        if max_abs(&next) > bound {
            diverged = true;
            break;
        }
        residuals.push(fixed_point_residual(&next));
        states.push(next);
    }
    Ok(Trajectory { states, residuals, diverged, relation_residual: T::zero(), reconstruction_error: T::zero() })
}

/// `‖v − mean(v)·1‖_∞`, the distance to the consensus line.
pub fn fixed_point_residual<T: Scalar>(v: &DVector<T>) -> T {
    if v.is_empty() {
        return T::zero();
    }
    let mean = v.iter().fold(T::zero(), |acc, x| acc + x.clone()) / T::from_usize_exact(v.len());
    v.iter().map(|x| (x.clone() - mean.clone()).abs()).fold(T::zero(), max_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_cycle, factor_graph};
    use crate::operators::build_t_a;
    use crate::scalar::{rational, Rational};

    fn c4() -> FactorGraph<f64> {
        factor_graph(&build_cycle(4).unwrap())
    }

    #[test]
    fn init_cases() {
        let fg = c4();
        let zero = admm_init(&fg, &DVector::zeros(4)).unwrap();
        assert!(zero.n.iter().chain(zero.s.iter()).chain(zero.u.iter()).all(|v| *v == 0.0));
        let ones = admm_init(&fg, &DVector::from_element(4, 1.0)).unwrap();
        assert!(ones.n.iter().all(|v| *v == 1.0));
        let e1 = admm_init(&fg, &DVector::from_fn(4, |i, _| if i == 1 { 1.0 } else { 0.0 })).unwrap();
        let hot: Vec<usize> = (0..8).filter(|&i| e1.n[i] == 1.0).collect();
        assert_eq!(hot, fg.copies(1));
        assert!(admm_init(&fg, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn one_step_matches_t_a_exactly() {
        let fg = factor_graph(&build_cycle::<Rational>(4).unwrap());
        let params = AdmmParams::uniform(rational(3, 4), rational(2, 1), 8).unwrap();
        let a = build_a(&fg, fg.weights(), params.rho()).unwrap();
        let b = build_b(&fg, params.rho()).unwrap();
        let t_a = build_t_a(&fg, fg.weights(), &params).unwrap();
        let z0 = DVector::from_fn(4, |i, _| rational(i as i64 * i as i64 - 2, 3));
        let s0 = admm_init(&fg, &z0).unwrap();
        let s1 = admm_step(&s0, &a, &b, params.gamma().clone());
        assert_eq!(s1.n, &t_a * &s0.n);
        assert_eq!(relation_residuals(&s1, &b).max(), rational(0, 1));
    }

    #[test]
    fn consensus_is_fixed_and_zero_gamma_freezes() {
        let fg = c4();
        let params = AdmmParams::uniform(1.0, 1.0, 8).unwrap();
        let a = build_a(&fg, fg.weights(), params.rho()).unwrap();
        let b = build_b(&fg, params.rho()).unwrap();
        let c = admm_init(&fg, &DVector::from_element(4, 2.5)).unwrap();
        let next = admm_step(&c, &a, &b, 1.0);
        assert!(max_abs(&(&next.n - &c.n)) < 1e-14);
        let z0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let s = admm_init(&fg, &z0).unwrap();
        let frozen = admm_step(&s, &a, &b, 0.0);
        assert_eq!(frozen.n, s.n);
    }

    #[test]
    fn fifty_steps_match_matrix_power() {
        let fg = c4();
        let params = AdmmParams::uniform(1.0, 1.0, 8).unwrap();
        let z0 = DVector::from_vec(vec![0.3, -1.2, 2.0, 0.7]);
        let traj = run_admm(&fg, fg.weights(), &params, &z0, 50).unwrap();
        assert_eq!(traj.states.len(), 51);
        let t_a = build_t_a(&fg, fg.weights(), &params).unwrap();
        let expect = t_a.pow(50) * &traj.states[0].n;
        assert!(max_abs(&(&traj.last().n - expect)) < 1e-9);
        assert!(traj.relation_residual < 1e-10);
        assert!(traj.reconstruction_error < 1e-10);
    }

    #[test]
    fn zero_steps_keeps_init() {
        let fg = c4();
        let params = AdmmParams::uniform(1.0, 1.0, 8).unwrap();
        let z0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let traj = run_admm(&fg, fg.weights(), &params, &z0, 0).unwrap();
        assert_eq!(traj.states, vec![admm_init(&fg, &z0).unwrap()]);
        assert_eq!(traj.residuals, vec![0.75]);
    }

    #[test]
    fn off_manifold_states_are_rejected() {
        let fg = c4();
        let b = build_b(&fg, &[1.0; 8]).unwrap();
        let s = fg.selection() * DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let mut u = DVector::zeros(8);
        u[0] = 1.0;
        assert!(AdmmState::from_parts(s.clone(), u.clone(), &b, 1e-12).is_err());
        u[fg.copies(0)[1]] = -1.0;
        let ok = AdmmState::from_parts(s, u, &b, 1e-12).unwrap();
        assert!(relation_residuals(&ok, &b).max() < 1e-12);
    }

    #[test]
    fn gd_cases() {
        let fg = c4();
        let z0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let traj = run_gd(&fg, fg.weights(), 1.0 / 3.0, &z0, 200).unwrap();
        assert!(traj.last().iter().all(|v| (v - 0.25).abs() < 1e-12));
        for z in &traj.states {
            assert!((z.sum() - 1.0).abs() < 1e-12);
        }
        let flat = run_gd(&fg, fg.weights(), 0.2, &DVector::from_element(4, 3.0), 10).unwrap();
        assert!(flat.states.iter().all(|z| z.iter().all(|v| *v == 3.0)));
        // λ_max(L) = 4 on C₄
        let blow = run_gd(&fg, fg.weights(), 0.6, &z0, 5000).unwrap();
        assert!(blow.diverged);
        assert!(max_abs(blow.last()) > max_abs(&z0) * 1e6);
    }

    #[test]
    fn residual_examples() {
        assert_eq!(fixed_point_residual(&DVector::from_element(5, 2.0)), 0.0);
        assert_eq!(fixed_point_residual(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])), 0.75);
    }

    #[test]
    fn trajectory_csv() {
        let fg = c4();
        let traj = run_gd(&fg, fg.weights(), 0.25, &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), 2).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,residual,v0,v1,v2,v3");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0.75,1,0"));
    }
}
