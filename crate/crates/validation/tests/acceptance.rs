//! End-to-end acceptance run. Prints one `[PASS]` or `[FAIL]` line per
//! criterion, with indented detail lines, and exits non-zero if any fail.

use std::process::ExitCode;
use std::time::Instant;

use liftlab::dynamics::run_admm;
use liftlab::experiments::{beta_hats, sweep, Differencing, Family, SweepRecord};
use liftlab::graphs::{build_barbell, build_complete_minus_edge, build_cycle, build_torus, factor_graph, Graph};
use liftlab::lifting::{collapse, lazy_cycle_chain, lift_cycle_chain, min_entry, mixing_time, opposite_signs_witness, verify_lifting};
use liftlab::operators::{build_m, build_t_a, build_t_g, default_d_a, max_alpha_nonneg, solve_d_g, AdmmParams, LiftingPair};
use liftlab::tuning::{tune_gd_closed_form, tune_gd_search, AdmmSearchSpec};
use liftlab::{rational, Rational};
use liftlab_validation::{named_graphs, random_vector, seeded_rng, sweep_plan, GAMMAS, RHOS};
use nalgebra::DVector;
use num_traits::{One, Zero};

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome { pass, summary: summary.into(), details: Vec::new() }
    }

    fn with(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }
}

/// Uniform-parameter pairs on the named graphs, with α implied by the edges.
fn uniform_pairs() -> Vec<(String, liftlab::FactorGraphF64, LiftingPair<f64>)> {
    let mut out = Vec::new();
    for (name, g) in named_graphs() {
        let fg = factor_graph(&g);
        for &gamma in &GAMMAS {
            for &rho in &RHOS {
                let params = AdmmParams::uniform(gamma, rho, fg.num_ehat()).unwrap();
                let pair = LiftingPair::build(&fg, &params, None, 1e-12).unwrap();
                out.push((format!("{name} γ={gamma} ρ={rho}"), fg.clone(), pair));
            }
        }
    }
    out
}

fn lifting_identity() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for (label, fg, pair) in uniform_pairs() {
        let cert = verify_lifting(&pair, &fg, 1e-10).unwrap();
        let r = cert.residual_vec.max(cert.residual_mat);
        if r >= worst.0 {
            worst = (r, label);
        }
        count += 1;
    }
    Outcome::new(
        worst.0 <= 1e-10,
        format!("{count} configurations, largest residual {:.2e} ({})", worst.0, worst.1),
    )
}

fn admm_is_linear() -> Outcome {
    let mut rng = seeded_rng();
    let grid: Vec<(f64, f64)> = GAMMAS.iter().flat_map(|&g| RHOS.iter().map(move |&r| (g, r))).collect();
    let (mut gap, mut relation) = (0.0f64, 0.0f64);
    for (_, g) in named_graphs() {
        let fg = factor_graph(&g);
        for start in 0..20 {
            let (gamma, rho) = grid[start % grid.len()];
            let params = AdmmParams::uniform(gamma, rho, fg.num_ehat()).unwrap();
            let t_a = build_t_a(&fg, fg.weights(), &params).unwrap();
            let z0 = random_vector(&mut rng, g.n());
            let traj = run_admm(&fg, fg.weights(), &params, &z0, 100).unwrap();
            relation = relation.max(traj.relation_residual);
            let mut linear = traj.states[0].n.clone();
            for state in &traj.states[1..] {
                linear = &t_a * linear;
                gap = gap.max((&state.n - &linear).amax());
            }
            if traj.states.len() != 101 {
                return Outcome::new(false, "a trajectory stopped before t = 100");
            }
        }
    }
    Outcome::new(
        gap < 1e-9 && relation < 1e-10,
        format!("max ‖nᵗ − T_Aᵗn⁰‖ = {gap:.2e}, max relation residual = {relation:.2e}"),
    )
}

fn gd_doubly_stochastic() -> Outcome {
    let graphs: [(&str, Graph<Rational>); 2] =
        [("cycle:4", build_cycle(4).unwrap()), ("torus:3", build_torus(3).unwrap())];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, g) in &graphs {
        let fg = factor_graph(g);
        for r in [rational(1, 10), rational(1, 1), rational(10, 1)] {
            let rho = vec![r.clone(); fg.num_ehat()];
            let d_g = solve_d_g(&fg, &rho, &default_d_a(&fg, &rho).unwrap()).unwrap();
            let bound = max_alpha_nonneg(&fg, fg.weights(), &d_g).unwrap();
            for j in 1..=10 {
                let alpha = bound.clone() * rational(j, 10);
                let m_g = build_m(&build_t_g(&fg, fg.weights(), alpha.clone()).unwrap(), &d_g).unwrap();
                let (low, _, _) = min_entry(&m_g);
                let rows = m_g.row_iter().all(|r| r.iter().cloned().sum::<Rational>().is_one());
                let cols = m_g.column_iter().all(|c| c.iter().cloned().sum::<Rational>().is_one());
                if low < Rational::zero() || !rows || !cols {
                    pass = false;
                    details.push(format!("{name}: fails at α = {alpha}"));
                }
            }
            details.push(format!("{name} ρ = {r}: bound α = {bound}"));
        }
    }
    Outcome::new(pass, "exact M_G non-negative with unit row and column sums up to the bound").with(details)
}

fn stationary_normalization() -> Outcome {
    let (mut rows, mut left) = (0.0f64, 0.0f64);
    for (_, _, pair) in uniform_pairs() {
        let ones = DVector::from_element(pair.m_a.ncols(), 1.0);
        rows = rows.max((&pair.m_a * ones).add_scalar(-1.0).amax());
        let v = DVector::from_column_slice(&pair.v_a);
        left = left.max((pair.m_a.tr_mul(&v) - &v).amax());
    }
    Outcome::new(
        rows <= 1e-10 && left <= 1e-10,
        format!("max |M_A·1 − 1| = {rows:.2e}, max |v_AᵀM_A − v_Aᵀ| = {left:.2e}"),
    )
}

fn opposite_signs() -> Outcome {
    let fg = factor_graph(&build_complete_minus_edge::<f64>(4).unwrap());
    let mut pass = true;
    let (mut highest_min, mut entry_gap) = (f64::NEG_INFINITY, 0.0f64);
    for &gamma in &GAMMAS {
        for &rho in &RHOS {
            let params = AdmmParams::uniform(gamma, rho, fg.num_ehat()).unwrap();
            let pair = LiftingPair::build(&fg, &params, None, 1e-12).unwrap();
            let (low, _, _) = min_entry(&pair.m_a);
            highest_min = highest_min.max(low);
            let w = opposite_signs_witness(&fg, params.rho(), gamma).unwrap();
            let closed = [w.t21, w.t24, w.t31, w.t34];
            for (value, (i, j)) in closed.iter().zip(w.positions()) {
                entry_gap = entry_gap.max((value - pair.t_a[(i, j)]).abs());
            }
            pass &= low < -1e-12 && w.t21 * w.t34 <= 0.0;
        }
    }
    Outcome::new(
        pass && entry_gap <= 1e-12,
        format!("largest min_entry(M_A) = {highest_min:.3e}, closed-form gap = {entry_gap:.2e}"),
    )
}

fn four_cycle_example() -> Outcome {
    let fg = factor_graph(&build_cycle::<Rational>(4).unwrap());
    let g = fg.base().clone();
    let adjacent = |i: usize, j: usize| g.edges().iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
    let mut pass = true;
    let mut hats_agree = true;
    for gamma in [rational(1, 4), rational(1, 2), rational(1, 1), rational(3, 2)] {
        for rho in [rational(1, 10), rational(1, 1), rational(10, 1)] {
            let params = AdmmParams::uniform(gamma.clone(), rho.clone(), fg.num_ehat()).unwrap();
            let pair = LiftingPair::build(&fg, &params, None, Rational::zero()).unwrap();
            let alpha = pair.alpha.clone();
            let x = Rational::one() - rational(8, 1) * alpha.clone();
            let y = rational(4, 1) * alpha;
            pass &= x.clone() + y.clone() * rational(2, 1) == Rational::one();
            for i in 0..4 {
                for j in 0..4 {
                    let expected = if i == j {
                        x.clone()
                    } else if adjacent(i, j) {
                        y.clone()
                    } else {
                        Rational::zero()
                    };
                    pass &= pair.m_g[(i, j)] == expected;
                }
            }
            pass &= pair.v_g.iter().all(|v| *v == rational(1, 4));
            pass &= pair.v_a.iter().all(|v| *v == rational(1, 8));

            let gr = gamma.clone() * rho.clone();
            let x_hat = Rational::one() - rational(4, 1) * gr.clone();
            let y_hat = rational(8, 1) * gr / (rho.clone() + rational(2, 1));
            for idx in 0..fg.num_ehat() {
                let v = fg.vertex_of(idx);
                let sibling = *fg.copies(v).iter().find(|&&c| c != idx).unwrap();
                hats_agree &= pair.m_a[(idx, idx)] == x_hat && pair.m_a[(idx, fg.partner(sibling))] == y_hat;
            }
        }
    }
    let hats = if hats_agree {
        "x̂ = 1 − 4γρ and ŷ = 8γρ/(2+ρ) agree with the constructive M_A"
    } else {
        "x̂, ŷ as stated disagree with the constructive M_A"
    };
    Outcome::new(pass, format!("exact M_G = [x y 0 y], v_G = ¼·1, v_A = ⅛·1; {hats}"))
}

fn gd_tuning_oracle() -> Outcome {
    let c4 = factor_graph(&build_cycle::<f64>(4).unwrap());
    let closed = tune_gd_closed_form(&c4, c4.weights()).unwrap();
    let alpha = closed.alpha().unwrap();
    let mut pass = (alpha - 1.0 / 3.0).abs() < 1e-12 && (closed.tau - 1.0 / 3.0).abs() < 1e-12;
    let details = vec![format!("C₄: α* = {alpha}, τ* = {}", closed.tau)];

    let mut graphs: Vec<Graph<f64>> = (3..=64).map(|n| build_cycle(n).unwrap()).collect();
    graphs.extend((3..=8).map(|k| build_torus(k).unwrap()));
    graphs.extend((3..=32).map(|k| build_barbell(k).unwrap()));
    let mut worst = 0.0f64;
    for g in &graphs {
        let fg = factor_graph(g);
        let closed = tune_gd_closed_form(&fg, fg.weights()).unwrap();
        let search = tune_gd_search(&fg, fg.weights(), 1e-12, 200).unwrap();
        worst = worst.max((closed.tau - search.tau).abs());
    }
    pass &= worst <= 1e-6;
    Outcome::new(pass, format!("{} graphs, max |Δτ| = {worst:.2e}", graphs.len())).with(details)
}

struct FamilySweep {
    family: Family,
    records: Vec<SweepRecord>,
    differencing: Differencing,
}

fn run_sweeps() -> Vec<FamilySweep> {
    let spec = AdmmSearchSpec::default();
    sweep_plan()
        .into_iter()
        .map(|(family, indices, differencing)| FamilySweep {
            family,
            records: sweep(family, &indices, &spec).unwrap(),
            differencing,
        })
        .collect()
}

fn beta_reproduction(sweeps: &[FamilySweep]) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for s in sweeps {
        let betas = beta_hats(&s.records, s.differencing).unwrap();
        let b1: Vec<f64> = betas.beta1.iter().map(|b| b.unwrap_or(f64::NAN)).collect();
        let last = *b1.last().unwrap();
        let tail = &b1[b1.len() - 3..];
        let rising = tail.windows(2).all(|w| w[0] <= w[1]);
        let b2 = betas.last_beta2().unwrap_or(f64::NAN);
        let in1 = (0.40..=0.55).contains(&last);
        let in2 = (0.35..=0.60).contains(&b2);
        pass &= in1 && rising && in2;
        details.push(format!(
            "{} {}: β̂₁ = {last:.4} {}, last three β̂₁ = [{:.4}, {:.4}, {:.4}] {}, β̂₂ = {b2:.4} {}",
            s.family,
            s.records.last().unwrap().index,
            if in1 { "in [0.40, 0.55]" } else { "OUT of [0.40, 0.55]" },
            tail[0],
            tail[1],
            tail[2],
            if rising { "non-decreasing" } else { "NOT non-decreasing" },
            if in2 { "in [0.35, 0.60]" } else { "OUT of [0.35, 0.60]" },
        ));
    }
    Outcome::new(pass, "β̂ estimators at the largest swept sizes").with(details)
}

fn dominance(sweeps: &[FamilySweep]) -> Outcome {
    let mut details = Vec::new();
    let mut total = 0;
    for r in sweeps.iter().flat_map(|s| &s.records) {
        total += 1;
        if r.failed() || !r.admm_dominates() {
            details.push(format!(
                "{} {}: τ*_A = {:.6} > τ*_G = {:.6}",
                r.family, r.index, r.tau_a_star, r.tau_g_star
            ));
        }
    }
    let failures = details.len();
    Outcome::new(failures == 0, format!("τ*_A ≤ τ*_G on {} of {total} records", total - failures)).with(details)
}

fn lifted_chain() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for n in [16, 32] {
        let (lifted, s) = lift_cycle_chain(n, 0.5).unwrap();
        let base = collapse(&lifted, &s).unwrap();
        let lazy = lazy_cycle_chain(n, 0.5).unwrap();
        let gap: f64 = (base.transition() - lazy.transition()).amax();
        let pi_gap = DVector::from_column_slice(base.stationary()) - DVector::from_column_slice(lazy.stationary());
        let t_lifted = mixing_time(&lifted, 0.25, 1_000_000).unwrap();
        let t_base = mixing_time(&base, 0.25, 1_000_000).unwrap();
        pass &= gap <= 1e-12 && pi_gap.amax() <= 1e-12 && t_lifted < t_base;
        details.push(format!("n = {n}: collapse gap {gap:.1e}, mixing time lifted {t_lifted} vs base {t_base}"));
    }
    Outcome::new(pass, "lifted cycle (switch ½) collapses to the lazy cycle and mixes faster").with(details)
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut outcomes: Vec<(&str, Outcome)> = vec![
        ("C1 lifting identity", lifting_identity()),
        ("C2 ADMM recursion is the linear map T_A", admm_is_linear()),
        ("C3 M_G doubly stochastic", gd_doubly_stochastic()),
        ("C4 M_A row sums and stationary vector", stationary_normalization()),
        ("C5 K₄ minus an edge is not a Markov lifting", opposite_signs()),
        ("C6 four-cycle worked example", four_cycle_example()),
        ("C7 GD tuning oracle", gd_tuning_oracle()),
    ];
    let sweep_started = Instant::now();
    let sweeps = run_sweeps();
    let sweep_secs = sweep_started.elapsed().as_secs_f64();
    outcomes.push(("C8 square-root scaling trend", beta_reproduction(&sweeps)));
    outcomes.push(("C9 ADMM dominates GD", dominance(&sweeps)));
    outcomes.push(("C10 lifted Markov chain", lifted_chain()));

    let mut failed = 0;
    for (name, o) in &outcomes {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("       {d}");
        }
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed (sweeps {sweep_secs:.1}s, total {:.1}s)",
        outcomes.len() - failed,
        started.elapsed().as_secs_f64()
    );
    // keep the rows of the sweep visible when a criterion fails
    if failed > 0 {
        for s in &sweeps {
            for r in &s.records {
                println!(
                    "       {} {}: R_G = {:.4}, R_A = {:.4}, γ* = {:.4}, ρ* = {:.4}",
                    r.family, r.index, r.r_g, r.r_a, r.gamma_star, r.rho_star
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
