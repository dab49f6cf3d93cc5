//! Lifting relation between the ADMM and GD matrices, the negative-entry
//! witness on `K₄` minus an edge, and finite Markov chain lifting.
//!
//! A chain `P̂` on lifted states lifts `P` through a 0/1 map `S` (one 1 per
//! row) when `π = Sᵀπ̂` and `D_π P = Sᵀ D_π̂ P̂ S`. [`verify_lifting`] checks the
//! same two identities for `(M_G, v_G)` and `(M_A, v_A)`.
//!
//! Lower bounds on how much lifting can shorten mixing times (roughly a square
//! root in general, nothing for reversible chains) come with unspecified
//! constants and are not asserted anywhere in this crate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::FactorGraph;
use crate::operators::LiftingPair;
use crate::scalar::{diag, inf_norm, max_abs, Scalar};

/// Entries below `-NEGATIVE_TOL` count as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LiftingCertificate<T> {
    /// `‖v_G − Sᵀv_A‖_∞`
    pub residual_vec: T,
    /// `‖D_{v_G}M_G − SᵀD_{v_A}M_A S‖_∞`
    pub residual_mat: T,
    pub alpha_used: T,
    pub gamma_used: T,
    pub rho_min: T,
    pub rho_max: T,
    pub min_entry_ma: T,
    pub min_entry_index: (usize, usize),
    pub is_markov_lifting: bool,
    pub tol: T,
}

impl<T: Scalar> LiftingCertificate<T> {
    pub fn passed(&self) -> bool {
        self.residual_vec <= self.tol && self.residual_mat <= self.tol
    }

    pub fn record(&self, graph: &str, n: usize) -> CertificateRecord {
        let rho = if self.rho_min == self.rho_max {
            serde_json::json!(self.rho_min.to_f64_lossy())
        } else {
            serde_json::json!({ "min": self.rho_min.to_f64_lossy(), "max": self.rho_max.to_f64_lossy() })
        };
        CertificateRecord {
            graph: graph.to_string(),
            n,
            gamma: self.gamma_used.to_f64_lossy(),
            rho,
            alpha: self.alpha_used.to_f64_lossy(),
            residual_vec: self.residual_vec.to_f64_lossy(),
            residual_mat: self.residual_mat.to_f64_lossy(),
            min_entry: self.min_entry_ma.to_f64_lossy(),
            is_markov_lifting: self.is_markov_lifting,
            tol: self.tol.to_f64_lossy(),
            passed: self.passed(),
        }
    }
}

/// JSON form of a [`LiftingCertificate`].
#[derive(Clone, Debug, Serialize)]
pub struct CertificateRecord {
    pub graph: String,
    pub n: usize,
    pub gamma: f64,
    pub rho: serde_json::Value,
    pub alpha: f64,
    pub residual_vec: f64,
    pub residual_mat: f64,
    pub min_entry: f64,
    pub is_markov_lifting: bool,
    pub tol: f64,
    pub passed: bool,
}

pub fn verify_lifting<T: Scalar>(
    pair: &LiftingPair<T>,
    fg: &FactorGraph<T>,
    tol: T,
) -> Result<LiftingCertificate<T>> {
    let (nv, ne) = (fg.n(), fg.num_ehat());
    let shapes_ok = pair.m_g.shape() == (nv, nv)
        && pair.m_a.shape() == (ne, ne)
        && pair.v_g.len() == nv
        && pair.v_a.len() == ne
        && pair.rho.len() == ne;
    if !shapes_ok {
        return Err(Error::InvalidInput(format!(
            "lifting pair dimensions do not match a graph with {nv} vertices and |Ê| = {ne}"
        )));
    }
    let s = fg.selection();
    let v_a = DVector::from_column_slice(&pair.v_a);
    let v_g = DVector::from_column_slice(&pair.v_g);
    let residual_vec = max_abs(&(v_g - s.transpose() * &v_a));
    let lhs = diag(&pair.v_g) * &pair.m_g;
    let rhs = s.transpose() * diag(&pair.v_a) * &pair.m_a * s;
    let residual_mat = inf_norm(&(lhs - rhs));
    let (min_entry_ma, row, col) = min_entry(&pair.m_a);
    let is_markov_lifting = min_entry_ma >= -T::from_f64_lossy(NEGATIVE_TOL);
    let rho_min = pair.rho.iter().cloned().reduce(|a, b| if b < a { b } else { a }).unwrap_or_else(T::zero);
    let rho_max = pair.rho.iter().cloned().reduce(|a, b| if b > a { b } else { a }).unwrap_or_else(T::zero);
    Ok(LiftingCertificate {
        residual_vec,
        residual_mat,
        alpha_used: pair.alpha.clone(),
        gamma_used: pair.gamma.clone(),
        rho_min,
        rho_max,
        min_entry_ma,
        min_entry_index: (row, col),
        is_markov_lifting,
        tol,
    })
}

/// Smallest entry and its `(row, col)`; first occurrence in row-major order.
pub fn min_entry<T: Scalar>(m: &DMatrix<T>) -> (T, usize, usize) {
    let mut best = (T::zero(), 0, 0);
    let mut first = true;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if first || m[(i, j)] < best.0 {
                best = (m[(i, j)].clone(), i, j);
                first = false;
            }
        }
    }
    best
}

/// Four entries of `T_A` on `K₄` minus an edge whose signs force a negative
/// entry into `M_A` for every diagonal normalization.
///
/// Labels follow the copies around a degree-2 vertex `b` with neighbours `u`
/// (edge `a₁`) and `w` (edge `a₂`): `1 = (a₁,u)`, `2 = (a₁,b)`, `3 = (a₂,b)`,
/// `4 = (a₂,w)`. `ehat` holds the `Ê` indices of labels 1 to 4.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessEntries<T> {
    pub t21: T,
    pub t24: T,
    pub t31: T,
    pub t34: T,
    pub ehat: [usize; 4],
}

impl<T: Scalar> WitnessEntries<T> {
    /// `t21·t34 ≤ 0`, `t24 > 0` and `t31 > 0`.
    pub fn opposite_signs(&self) -> bool {
        self.t21.clone() * self.t34.clone() <= T::zero() && self.t24 > T::zero() && self.t31 > T::zero()
    }

    /// `(row, col)` in `T_A` of `t21`, `t24`, `t31`, `t34`.
    pub fn positions(&self) -> [(usize, usize); 4] {
        let [l1, l2, l3, l4] = self.ehat;
        [(l2, l1), (l2, l4), (l3, l1), (l3, l4)]
    }
}

/// `Ê` indices of witness labels 1 to 4 on `K₄` minus an edge.
pub fn witness_labeling<T: Scalar>(fg: &FactorGraph<T>) -> Result<[usize; 4]> {
    let g = fg.base();
    if g.n() != 4 || g.num_edges() != 5 {
        return Err(Error::InvalidInput(format!(
            "witness needs K4 minus one edge, got n={} with {} edges",
            g.n(),
            g.num_edges()
        )));
    }
    let b = fg
        .degrees()
        .iter()
        .position(|&d| d == 2)
        .expect("K4 minus an edge has two degree-2 vertices");
    let (c1, c2) = (fg.copies(b)[0], fg.copies(b)[1]);
    Ok([fg.partner(c1), c1, c2, fg.partner(c2)])
}

/// Closed forms of the four witness entries for penalties `rho` on `Ê`.
pub fn opposite_signs_witness<T: Scalar>(fg: &FactorGraph<T>, rho: &[T], gamma: T) -> Result<WitnessEntries<T>> {
    let ehat = witness_labeling(fg)?;
    if rho.len() != fg.num_ehat() || rho.iter().any(|r| *r <= T::zero()) {
        return Err(Error::InvalidInput("rho must be positive with one entry per copy".into()));
    }
    if [ehat[0], ehat[3]].iter().any(|&i| !fg.weights()[fg.edge_of(i)].is_one()) {
        return Err(Error::InvalidInput("witness closed forms need unit weights on both edges".into()));
    }
    let [r11, r12, r22, r23] = ehat.map(|i| rho[i].clone());
    let one = T::one();
    let two = one.clone() + one.clone();
    let pair_sum = r12.clone() + r22.clone();
    let diff = r12.clone() - r22.clone();
    let t21 = gamma.clone() * r11.clone() * diff.clone()
        / (pair_sum.clone() * (r11.clone() + r12.clone() + r11.clone() * r12.clone()));
    let t24 = two.clone() * gamma.clone()
        / (pair_sum.clone() * (one.clone() + one.clone() / r22.clone() + one.clone() / r23.clone()));
    let t31 = two * gamma.clone()
        / (pair_sum.clone() * (one.clone() + one.clone() / r11 + one / r12));
    let t34 = -(gamma * r23.clone() * diff) / (pair_sum * (r22.clone() + r23.clone() + r22 * r23));
    Ok(WitnessEntries { t21, t24, t31, t34, ehat })
}

/// Row-stochastic transition matrix with a stationary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChain<T> {
    p: DMatrix<T>,
    pi: Vec<T>,
}

impl<T: Scalar> FiniteChain<T> {
    /// Checks non-negativity, unit row sums and `Σπ = 1` to within `1e-12`,
    /// and `πᵀP = πᵀ` to within `1e-10`.
    pub fn new(p: DMatrix<T>, pi: Vec<T>) -> Result<Self> {
        let tol = T::from_f64_lossy(ROW_SUM_TOL);
        if !p.is_square() || p.nrows() != pi.len() || pi.is_empty() {
            return Err(Error::InvalidInput("transition matrix and distribution sizes differ".into()));
        }
        if p.iter().any(|v| *v < T::zero()) {
            return Err(Error::InvalidInput("transition matrix has a negative entry".into()));
        }
        let ones = DVector::from_element(p.ncols(), T::one());
        if max_abs(&(&p * &ones - &ones)) > tol {
            return Err(Error::InvalidInput("transition matrix is not row stochastic".into()));
        }
        if pi.iter().any(|v| *v < T::zero()) {
            return Err(Error::InvalidInput("stationary vector has a negative entry".into()));
        }
        let total = pi.iter().fold(T::zero(), |acc, v| acc + v.clone());
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidInput("stationary vector does not sum to one".into()));
        }
        let piv = DVector::from_column_slice(&pi);
        if max_abs(&(p.tr_mul(&piv) - &piv)) > T::from_f64_lossy(STATIONARY_TOL) {
            return Err(Error::InvalidInput("distribution is not stationary".into()));
        }
        Ok(FiniteChain { p, pi })
    }

    pub fn transition(&self) -> &DMatrix<T> {
        &self.p
    }

    pub fn stationary(&self) -> &[T] {
        &self.pi
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }
}

/// Base chain `P = D_π⁻¹ SᵀD_π̂ P̂ S` with `π = Sᵀπ̂`.
pub fn collapse<T: Scalar>(lifted: &FiniteChain<T>, s: &DMatrix<T>) -> Result<FiniteChain<T>> {
    if s.nrows() != lifted.states() || s.ncols() == 0 {
        return Err(Error::InvalidInput("lifting map has the wrong number of rows".into()));
    }
    for row in s.row_iter() {
        let ones = row.iter().filter(|v| v.is_one()).count();
        let zeros = row.iter().filter(|v| v.is_zero()).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::InvalidInput("lifting map rows must hold a single 1 among zeros".into()));
        }
    }
    let pi_hat = DVector::from_column_slice(lifted.stationary());
    let pi: Vec<T> = (s.transpose() * &pi_hat).iter().cloned().collect();
    if let Some(i) = pi.iter().position(|v| v.is_zero()) {
        return Err(Error::DegenerateCollapse(i));
    }
    let flow = s.transpose() * diag(lifted.stationary()) * lifted.transition() * s;
    let inv: Vec<T> = pi.iter().map(|v| T::one() / v.clone()).collect();
    FiniteChain::new(diag(&inv) * flow, pi)
}

/// Direction-persistent walk on `2n` states lifting the cycle `C_n`.
///
/// State `d·n + i` sits at site `i` moving clockwise (`d = 0`) or
/// counterclockwise (`d = 1`). Each step keeps the direction and advances
/// with probability `1 − switch_prob`, or moves to the other copy of the same
/// site with probability `switch_prob`. These probabilities are a modelling
/// choice; the stationary distribution is uniform. For even `n` the walk is
/// periodic, so only threshold-style mixing times (such as [`mixing_time`])
/// are meaningful.
///
/// Returns the chain and the map `S` sending both copies of a site to it.
pub fn lift_cycle_chain<T: Scalar>(n: usize, switch_prob: T) -> Result<(FiniteChain<T>, DMatrix<T>)> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("lifted cycle needs n >= 3, got {n}")));
    }
    if switch_prob <= T::zero() || switch_prob >= T::one() {
        return Err(Error::InvalidParameter("switch probability must lie in (0, 1)".into()));
    }
    let stay = T::one() - switch_prob.clone();
    let mut p = DMatrix::zeros(2 * n, 2 * n);
    let mut s = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        let (cw, ccw) = (i, n + i);
        p[(cw, (i + 1) % n)] = stay.clone();
        p[(cw, ccw)] = switch_prob.clone();
        p[(ccw, n + (i + n - 1) % n)] = stay.clone();
        p[(ccw, cw)] = switch_prob.clone();
        s[(cw, i)] = T::one();
        s[(ccw, i)] = T::one();
    }
    let pi = vec![T::one() / T::from_usize_exact(2 * n); 2 * n];
    Ok((FiniteChain::new(p, pi)?, s))
}

/// Lazy walk on `C_n`: stay with probability `hold`, otherwise step to either
/// neighbour with equal probability.
pub fn lazy_cycle_chain<T: Scalar>(n: usize, hold: T) -> Result<FiniteChain<T>> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("cycle chain needs n >= 3, got {n}")));
    }
    if hold < T::zero() || hold > T::one() {
        return Err(Error::InvalidParameter("holding probability must lie in [0, 1]".into()));
    }
    let step = (T::one() - hold.clone()) / (T::one() + T::one());
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        p[(i, i)] += hold.clone();
        p[(i, (i + 1) % n)] += step.clone();
        p[(i, (i + n - 1) % n)] += step.clone();
    }
    FiniteChain::new(p, vec![T::one() / T::from_usize_exact(n); n])
}

/// Smallest `t ≤ t_max` with `max_{j,i} |(Pᵗ)_{ji} − π_i| < eps`.
///
/// The worst case over initial distributions is attained at a point mass,
/// so only the rows of `Pᵗ` need checking.
pub fn mixing_time<T: Scalar>(chain: &FiniteChain<T>, eps: T, t_max: usize) -> Result<usize> {
    let deviation = |x: &DMatrix<T>| {
        x.row_iter()
            .map(|row| max_abs(&(row - DVector::from_column_slice(chain.stationary()).transpose())))
            .fold(T::zero(), crate::scalar::max_of)
    };
    let mut x = DMatrix::identity(chain.states(), chain.states());
    for t in 0..=t_max {
        if deviation(&x) < eps {
            return Ok(t);
        }
        x = &x * chain.transition();
    }
    Err(Error::NotMixed(t_max))
}
