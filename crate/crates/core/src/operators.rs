//! Linear operators of distributed over-relaxed ADMM and gradient descent
//! on the consensus quadratic `½ Σ q_e (z_i − z_j)²`.
//!
//! Everything here is plain field arithmetic: `A` is assembled from its 2×2
//! closed-form blocks and `B` from weighted averages, so no generic matrix
//! inversion is needed and the builders run on exact rationals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graphs::FactorGraph;
use crate::scalar::{diag, Scalar};

/// Block-diagonal `Q`, one block `q_e·[[1,−1],[−1,1]]` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<T> {
    matrix: DMatrix<T>,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    /// `f(x) = ½ xᵀQx`.
    pub fn objective(&self, x: &DVector<T>) -> T {
        let qx = &self.matrix * x;
        x.dot(&qx) / (T::one() + T::one())
    }
}

/// Relaxation `γ ∈ (0, 2)` and one penalty `ρ_{e_i} > 0` per entry of `Ê`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmParams<T> {
    gamma: T,
    rho: Vec<T>,
}

impl<T: Scalar> AdmmParams<T> {
    pub fn new(gamma: T, rho: Vec<T>) -> Result<Self> {
        let two = T::one() + T::one();
        if gamma <= T::zero() || gamma >= two {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 2), got {}",
                gamma.to_f64_lossy()
            )));
        }
        validate_rho(&rho)?;
        Ok(AdmmParams { gamma, rho })
    }

    /// `ρ = rho·1` over `len` entries.
    pub fn uniform(gamma: T, rho: T, len: usize) -> Result<Self> {
        Self::new(gamma, vec![rho; len])
    }

    pub fn gamma(&self) -> &T {
        &self.gamma
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }
}

fn validate_rho<T: Scalar>(rho: &[T]) -> Result<()> {
    match rho.iter().position(|r| *r <= T::zero()) {
        Some(i) => Err(Error::InvalidParameter(format!("rho[{i}] must be positive"))),
        None => Ok(()),
    }
}

fn check_len<T>(fg: &FactorGraph<T>, len: usize, what: &str) -> Result<()>
where
    T: Scalar,
{
    if len != fg.num_ehat() {
        return Err(Error::InvalidInput(format!(
            "{what} has length {len}, expected |Ê| = {}",
            fg.num_ehat()
        )));
    }
    Ok(())
}

fn check_weights<T: Scalar>(fg: &FactorGraph<T>, weights: &[T]) -> Result<()> {
    if weights.len() != fg.base().num_edges() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} edges",
            weights.len(),
            fg.base().num_edges()
        )));
    }
    match weights.iter().position(|q| *q <= T::zero()) {
        Some(e) => Err(Error::InvalidParameter(format!("edge {e} has non-positive weight"))),
        None => Ok(()),
    }
}

pub fn build_q<T: Scalar>(fg: &FactorGraph<T>, weights: &[T]) -> Result<QuadraticForm<T>> {
    check_weights(fg, weights)?;
    let mut q = DMatrix::zeros(fg.num_ehat(), fg.num_ehat());
    for (e, w) in weights.iter().enumerate() {
        let (i, j) = (2 * e, 2 * e + 1);
        q[(i, i)] = w.clone();
        q[(j, j)] = w.clone();
        q[(i, j)] = -w.clone();
        q[(j, i)] = -w.clone();
    }
    Ok(QuadraticForm { matrix: q })
}

/// `A = (I + D_ρ⁻¹Q)⁻¹`, written as `I − FQ` with
/// `F_e = diag(ρ_j, ρ_i) / (ρ_iρ_j + q_e(ρ_i + ρ_j))` per edge.
///
/// `Q` already carries the factor `q_e`, so `F_e` must not repeat it; with
/// unit weights the two readings coincide.
pub fn build_a<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], rho: &[T]) -> Result<DMatrix<T>> {
    check_weights(fg, weights)?;
    check_len(fg, rho.len(), "rho")?;
    validate_rho(rho)?;
    let mut a = DMatrix::zeros(fg.num_ehat(), fg.num_ehat());
    for (e, q) in weights.iter().enumerate() {
        let (i, j) = (2 * e, 2 * e + 1);
        let (ri, rj) = (rho[i].clone(), rho[j].clone());
        let c = q.clone() / (ri.clone() * rj.clone() + q.clone() * (ri.clone() + rj.clone()));
        // (FQ) block = c·[[ρ_j, −ρ_j], [−ρ_i, ρ_i]]
        let fi = c.clone() * rj;
        let fj = c * ri;
        a[(i, i)] = T::one() - fi.clone();
        a[(i, j)] = fi;
        a[(j, j)] = T::one() - fj.clone();
        a[(j, i)] = fj;
    }
    Ok(a)
}

/// `B = S(SᵀD_ρS)⁻¹SᵀD_ρ`: each row replaces a copy by the ρ-weighted
/// average of all copies of the same vertex.
pub fn build_b<T: Scalar>(fg: &FactorGraph<T>, rho: &[T]) -> Result<DMatrix<T>> {
    check_len(fg, rho.len(), "rho")?;
    validate_rho(rho)?;
    let mut b = DMatrix::zeros(fg.num_ehat(), fg.num_ehat());
    for v in 0..fg.n() {
        let copies = fg.copies(v);
        let total = copies.iter().fold(T::zero(), |acc, &k| acc + rho[k].clone());
        for &row in copies {
            for &col in copies {
                b[(row, col)] = rho[col].clone() / total.clone();
            }
        }
    }
    Ok(b)
}

/// `SᵀQS`, the weighted graph Laplacian seen through the edge copies.
pub fn stacked_laplacian<T: Scalar>(fg: &FactorGraph<T>, weights: &[T]) -> Result<DMatrix<T>> {
    let q = build_q(fg, weights)?;
    let s = fg.selection();
    Ok(s.transpose() * q.matrix() * s)
}

/// `T_G = I − α SᵀQS`.
pub fn build_t_g<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], alpha: T) -> Result<DMatrix<T>> {
    if alpha < T::zero() {
        return Err(Error::InvalidParameter("alpha must be non-negative".into()));
    }
    let l = stacked_laplacian(fg, weights)?;
    Ok(DMatrix::identity(fg.n(), fg.n()) - l * alpha)
}

/// `G = A + B − 2BA`, so that `T_A = I − γG`.
pub fn relaxation_generator<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let ba = b * a;
    a + b - (&ba + &ba)
}

/// `T_A = I − γ(A + B − 2BA)` from prebuilt `A` and `B`; any `γ` accepted.
pub fn t_a_from_parts<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, gamma: T) -> DMatrix<T> {
    let dim = a.nrows();
    DMatrix::identity(dim, dim) - relaxation_generator(a, b) * gamma
}

pub fn build_t_a<T: Scalar>(
    fg: &FactorGraph<T>,
    weights: &[T],
    params: &AdmmParams<T>,
) -> Result<DMatrix<T>> {
    let a = build_a(fg, weights, params.rho())?;
    let b = build_b(fg, params.rho())?;
    Ok(t_a_from_parts(&a, &b, params.gamma().clone()))
}

/// `(D_A)_e = 1 − 1/(ρ_e|Ê|)`, which makes `v_A = (I − D_A)ρ` uniform.
pub fn default_d_a<T: Scalar>(fg: &FactorGraph<T>, rho: &[T]) -> Result<Vec<T>> {
    check_len(fg, rho.len(), "rho")?;
    validate_rho(rho)?;
    let size = T::from_usize_exact(fg.num_ehat());
    Ok(rho.iter().map(|r| T::one() - T::one() / (r.clone() * size.clone())).collect())
}

/// Diagonal `D_G` solving `SᵀD_ρ(I − D_A)S = I − D_G`.
pub fn solve_d_g<T: Scalar>(fg: &FactorGraph<T>, rho: &[T], d_a: &[T]) -> Result<Vec<T>> {
    check_len(fg, rho.len(), "rho")?;
    check_len(fg, d_a.len(), "D_A")?;
    validate_rho(rho)?;
    if let Some(i) = d_a.iter().position(|d| *d >= T::one()) {
        return Err(Error::InvalidParameter(format!("(D_A)[{i}] must be below 1")));
    }
    (0..fg.n())
        .map(|b| {
            let mass = fg
                .copies(b)
                .iter()
                .fold(T::zero(), |acc, &e| acc + rho[e].clone() * (T::one() - d_a[e].clone()));
            let d = T::one() - mass;
            if d >= T::one() {
                Err(Error::InfeasibleCoupling { vertex: b, value: d.to_f64_lossy() })
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// `M = (I − D)⁻¹(T − D)`.
pub fn build_m<T: Scalar>(t: &DMatrix<T>, d: &[T]) -> Result<DMatrix<T>> {
    if !t.is_square() || t.nrows() != d.len() {
        return Err(Error::InvalidInput(format!(
            "{}x{} matrix with a diagonal of length {}",
            t.nrows(),
            t.ncols(),
            d.len()
        )));
    }
    if let Some(index) = d.iter().position(|v| v.is_one()) {
        return Err(Error::SingularNormalization { index });
    }
    let mut m = t.clone();
    for (i, di) in d.iter().enumerate() {
        m[(i, i)] -= di.clone();
        let scale = T::one() / (T::one() - di.clone());
        m.row_mut(i).iter_mut().for_each(|v| *v *= scale.clone());
    }
    Ok(m)
}

/// Step size matching one edge: `γ ρ_iρ_j / (ρ_iρ_j + q(ρ_i + ρ_j))`.
///
/// This is `γ` times the diagonal of `D_ρF_e`, the condition under which the
/// ADMM and GD flows agree on that edge. For `q = 1` it equals
/// `γρ/(2 + ρ)` at uniform `ρ`.
pub fn alpha_from_edge<T: Scalar>(gamma: T, rho_i: T, rho_j: T, q: T) -> T {
    let prod = rho_i.clone() * rho_j.clone();
    gamma * prod.clone() / (prod + q * (rho_i + rho_j))
}

/// Common GD step size implied by every edge, or the edges that disagree
/// with edge 0 by more than `rel_tol` relative.
pub fn check_alpha_consistency<T: Scalar>(
    fg: &FactorGraph<T>,
    weights: &[T],
    params: &AdmmParams<T>,
    rel_tol: T,
) -> Result<T> {
    check_weights(fg, weights)?;
    check_len(fg, params.rho().len(), "rho")?;
    let rho = params.rho();
    let alphas: Vec<T> = weights
        .iter()
        .enumerate()
        .map(|(e, q)| {
            alpha_from_edge(params.gamma().clone(), rho[2 * e].clone(), rho[2 * e + 1].clone(), q.clone())
        })
        .collect();
    let reference = alphas[0].clone();
    let scale = alphas.iter().fold(T::zero(), |acc, a| crate::scalar::max_of(acc, a.abs()));
    let offending: Vec<usize> = alphas
        .iter()
        .enumerate()
        .filter(|(_, a)| ((*a).clone() - reference.clone()).abs() > rel_tol.clone() * scale.clone())
        .map(|(e, _)| e)
        .collect();
    if offending.is_empty() {
        return Ok(reference);
    }
    let lo = alphas.iter().fold(reference.clone(), |acc, a| if *a < acc { a.clone() } else { acc });
    let hi = alphas.iter().fold(reference, |acc, a| if *a > acc { a.clone() } else { acc });
    Err(Error::InconsistentAlpha {
        spread: ((hi - lo) / scale).to_f64_lossy(),
        edges: offending,
    })
}

/// Largest `α` for which `M_G` stays entrywise non-negative:
/// `min_b (1 − (D_G)_bb) / Σ_{e ∈ I_b} Q_ee`.
///
/// Off-diagonal entries of `T_G` are non-negative for every `α ≥ 0`, so only
/// the diagonal of `T_G − D_G` constrains `α`, and the bound is attained.
pub fn max_alpha_nonneg<T: Scalar>(fg: &FactorGraph<T>, weights: &[T], d_g: &[T]) -> Result<T> {
    check_weights(fg, weights)?;
    if d_g.len() != fg.n() {
        return Err(Error::InvalidInput(format!("D_G has length {}, expected {}", d_g.len(), fg.n())));
    }
    if let Some(b) = d_g.iter().position(|d| *d >= T::one()) {
        return Err(Error::InvalidParameter(format!("(D_G)[{b}] must be below 1")));
    }
    let bound = (0..fg.n())
        .map(|b| {
            let curvature = fg
                .copies(b)
                .iter()
                .fold(T::zero(), |acc, &e| acc + weights[fg.edge_of(e)].clone());
            (T::one() - d_g[b].clone()) / curvature
        })
        .reduce(|a, b| if b < a { b } else { a })
        .expect("graph has vertices");
    Ok(bound)
}

/// The two evolution matrices together with their normalizations.
#[derive(Clone, Debug)]
pub struct LiftingPair<T> {
    pub t_g: DMatrix<T>,
    pub t_a: DMatrix<T>,
    pub d_g: Vec<T>,
    pub d_a: Vec<T>,
    pub m_g: DMatrix<T>,
    pub m_a: DMatrix<T>,
    /// `(I − D_G)1`
    pub v_g: Vec<T>,
    /// `(I − D_A)ρ`
    pub v_a: Vec<T>,
    pub alpha: T,
    pub gamma: T,
    pub rho: Vec<T>,
}

impl<T: Scalar> LiftingPair<T> {
    /// Pair with `α` implied by the edges (must agree within `rel_tol`) and
    /// `D_A` defaulting to [`default_d_a`].
    pub fn build(fg: &FactorGraph<T>, params: &AdmmParams<T>, d_a: Option<Vec<T>>, rel_tol: T) -> Result<Self> {
        let alpha = check_alpha_consistency(fg, fg.weights(), params, rel_tol)?;
        Self::assemble(fg, params, alpha, d_a)
    }

    /// Pair with an explicit `α`, coupled or not.
    pub fn assemble(fg: &FactorGraph<T>, params: &AdmmParams<T>, alpha: T, d_a: Option<Vec<T>>) -> Result<Self> {
        let weights = fg.weights();
        let rho = params.rho();
        let d_a = match d_a {
            Some(d) => d,
            None => default_d_a(fg, rho)?,
        };
        let d_g = solve_d_g(fg, rho, &d_a)?;
        let t_g = build_t_g(fg, weights, alpha.clone())?;
        let t_a = build_t_a(fg, weights, params)?;
        let m_g = build_m(&t_g, &d_g)?;
        let m_a = build_m(&t_a, &d_a)?;
        let v_g = d_g.iter().map(|d| T::one() - d.clone()).collect();
        let v_a = d_a.iter().zip(rho).map(|(d, r)| (T::one() - d.clone()) * r.clone()).collect();
        Ok(LiftingPair {
            t_g,
            t_a,
            d_g,
            d_a,
            m_g,
            m_a,
            v_g,
            v_a,
            alpha,
            gamma: params.gamma().clone(),
            rho: rho.to_vec(),
        })
    }

    pub fn d_g_matrix(&self) -> DMatrix<T> {
        diag(&self.d_g)
    }

    pub fn d_a_matrix(&self) -> DMatrix<T> {
        diag(&self.d_a)
    }
}
