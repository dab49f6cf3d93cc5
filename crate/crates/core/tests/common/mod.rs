#![allow(dead_code)]

use liftlab::graphs::{build_barbell, build_complete_minus_edge, build_cycle, build_torus, Graph};
use proptest::prelude::*;

/// Named graphs shared by the identity and dynamics checks.
pub fn family_graphs() -> Vec<(String, Graph<f64>)> {
    let mut out = Vec::new();
    for n in [4, 8, 16, 32] {
        out.push((format!("cycle:{n}"), build_cycle(n).unwrap()));
    }
    for k in [3, 4, 5] {
        out.push((format!("torus:{k}"), build_torus(k).unwrap()));
    }
    for k in [3, 4, 5] {
        out.push((format!("barbell:{k}"), build_barbell(k).unwrap()));
    }
    out.push(("k4minus".to_string(), build_complete_minus_edge(4).unwrap()));
    out
}

pub const GAMMAS: [f64; 4] = [0.25, 0.5, 1.0, 1.5];
pub const RHOS: [f64; 3] = [0.1, 1.0, 10.0];

/// Connected graph on 3 to 8 vertices: a random spanning tree plus extra
/// edges, with weights in [0.2, 5].
pub fn arb_graph() -> impl Strategy<Value = Graph<f64>> {
    (3usize..=8)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
            let extra = proptest::collection::vec((0..n, 0..n), 0..n);
            (Just(n), parents, extra)
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.into_iter().enumerate().map(|(i, p)| (p, i + 1)).collect();
            for (a, b) in extra {
                let e = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == e) {
                    edges.push(e);
                }
            }
            (n, edges)
        })
        .prop_flat_map(|(n, edges)| {
            let m = edges.len();
            (Just(n), Just(edges), proptest::collection::vec(0.2f64..5.0, m))
        })
        .prop_map(|(n, edges, w)| Graph::new(n, edges, w).unwrap())
}

/// Per-copy penalties with a common edge step `α_e = ratio·γ`: the first
/// copy of each edge is free, the second is solved for.
pub fn consistent_rho(g: &Graph<f64>, ratio: f64, free: &[f64]) -> Vec<f64> {
    let mut rho = Vec::with_capacity(2 * g.num_edges());
    for (e, &q) in g.weights().iter().enumerate() {
        // ρ_j = c q ρ_i / (ρ_i (1 − c) − c q), which needs ρ_i > c q / (1 − c)
        let c = ratio;
        let floor = c * q / (1.0 - c);
        let rho_i = floor * (1.0 + free[e % free.len()]);
        let rho_j = c * q * rho_i / (rho_i * (1.0 - c) - c * q);
        rho.push(rho_i);
        rho.push(rho_j);
    }
    rho
}

/// Seeded generator for random starts; `LIFTLAB_SEED` overrides the default.
pub fn rng() -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let seed = std::env::var("LIFTLAB_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024);
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut rand_chacha::ChaCha8Rng, len: usize) -> nalgebra::DVector<f64> {
    use rand::Rng;
    nalgebra::DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0))
}
