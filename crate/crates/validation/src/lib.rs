//! Fixtures shared by the acceptance run: the named test graphs, the
//! parameter grid and the family sweep plan.

use liftlab::experiments::{Differencing, Family};
use liftlab::graphs::{build_barbell, build_complete_minus_edge, build_cycle, build_torus, Graph};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GAMMAS: [f64; 4] = [0.25, 0.5, 1.0, 1.5];
pub const RHOS: [f64; 3] = [0.1, 1.0, 10.0];

/// Cycles of 4 to 32 vertices, small tori and barbells, and `K₄` minus an edge.
pub fn named_graphs() -> Vec<(String, Graph<f64>)> {
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

/// Family, swept indices and the differencing used for β̂₂. Torus indices
/// alternate between odd and even side lengths, so they are differenced
/// within a parity class.
pub fn sweep_plan() -> Vec<(Family, Vec<usize>, Differencing)> {
    vec![
        (Family::Cycle, (8..=128).step_by(8).collect(), Differencing::Consecutive),
        (Family::Torus, (3..=10).collect(), Differencing::SameParity),
        (Family::Barbell, (3..=12).collect(), Differencing::Consecutive),
    ]
}

/// Generator seeded from `LIFTLAB_SEED`, default 2024.
pub fn seeded_rng() -> ChaCha8Rng {
    let seed = std::env::var("LIFTLAB_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024);
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[−1, 1)`.
pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0))
}
