mod common;

use common::{family_graphs, random_vector, rng};
use liftlab::dynamics::{run_admm, run_gd};
use liftlab::graphs::factor_graph;
use liftlab::operators::{build_t_a, AdmmParams};
use liftlab::tuning::{tune_admm, AdmmSearchSpec};

#[test]
fn admm_recursion_equals_linear_map() {
    let mut rng = rng();
    for (name, g) in family_graphs() {
        let fg = factor_graph(&g);
        let params = AdmmParams::uniform(1.0, 1.0, fg.num_ehat()).unwrap();
        let t_a = build_t_a(&fg, fg.weights(), &params).unwrap();
        for _ in 0..20 {
            let z0 = random_vector(&mut rng, g.n());
            let traj = run_admm(&fg, fg.weights(), &params, &z0, 100).unwrap();
            assert_eq!(traj.states.len(), 101);
            assert!(traj.relation_residual < 1e-10, "{name}: relations {}", traj.relation_residual);
            assert!(traj.reconstruction_error < 1e-10);
            let mut linear = traj.states[0].n.clone();
            for state in &traj.states[1..] {
                linear = &t_a * linear;
                let gap = (&state.n - &linear).amax();
                assert!(gap < 1e-9, "{name}: gap {gap}");
            }
        }
    }
}

#[test]
fn gd_preserves_the_mean() {
    let mut rng = rng();
    for (name, g) in family_graphs() {
        let fg = factor_graph(&g);
        let z0 = random_vector(&mut rng, g.n());
        let mean0 = z0.mean();
        let traj = run_gd(&fg, fg.weights(), 0.1, &z0, 200).unwrap();
        assert!(!traj.diverged);
        for z in &traj.states {
            assert!((z.mean() - mean0).abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn tuned_admm_reaches_consensus() {
    let mut rng = rng();
    let spec = AdmmSearchSpec::default();
    for (name, g) in family_graphs() {
        let fg = factor_graph(&g);
        let tuned = tune_admm(&fg, fg.weights(), &spec).unwrap();
        let (gamma, rho) = tuned.gamma_rho().unwrap();
        let params = AdmmParams::uniform(gamma, rho, fg.num_ehat()).unwrap();
        for _ in 0..5 {
            let z0 = random_vector(&mut rng, g.n());
            // ln(r0 / 1e-6) time constants for the asymptotic decay, plus
            // 10 R_A steps for the transient of defective modes
            let r0 = liftlab::dynamics::fixed_point_residual(&z0);
            let steps = (tuned.r * ((r0 / 1e-6).ln() + 10.0)).ceil() as usize;
            let traj = run_admm(&fg, fg.weights(), &params, &z0, steps).unwrap();
            let last = *traj.residuals.last().unwrap();
            assert!(last < 1e-6, "{name}: residual {last} after {steps} steps (R_A = {})", tuned.r);
        }
    }
}
