//! Seeded random generation of trees, vectors and processes.
//!
//! All randomness in the crate flows through [`rng`] so a seed fully
//! determines every sampled object. Trial `k` of a check derives its own
//! generator with [`trial_seed`], which keeps trials independent of the
//! order in which they run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::space::{child_id, AdaptedProcess, AdaptedVector, AtomSpec, ScenarioTree};

/// The generator type used throughout the crate.
pub type CrateRng = ChaCha8Rng;

/// Sampled values are rounded to this grid so witnesses print compactly.
pub const VALUE_GRID: f64 = 1e-6;

pub fn rng(seed: u64) -> CrateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splitmix64 step applied to `seed ^ stream`, giving well-spread seeds for
/// consecutive stream indices.
pub fn trial_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rounds to the sampling grid.
pub fn round_value(v: f64) -> f64 {
    (v / VALUE_GRID).round() * VALUE_GRID
}

/// Uniform draw from `[lo, hi]`, rounded to the sampling grid.
pub fn uniform_value(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    round_value(rng.gen_range(lo..=hi))
}

/// Conditional probabilities for `n` siblings, bounded away from zero and
/// summing to one within `1e-15`.
pub fn random_probabilities(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

/// A random tree of the given horizon where every non-terminal atom has
/// between `min_branching` and `max_branching` children.
pub fn random_tree(
    rng: &mut impl Rng,
    horizon: usize,
    min_branching: usize,
    max_branching: usize,
) -> ScenarioTree {
    assert!(horizon >= 1 && min_branching >= 1 && min_branching <= max_branching);
    let mut atoms = vec![AtomSpec {
        id: "r".to_string(),
        time: 0,
        parent: None,
        prob: 1.0,
    }];
    let mut frontier = vec!["r".to_string()];
    for t in 1..=horizon {
        let mut next = Vec::new();
        for parent in &frontier {
            let n = rng.gen_range(min_branching..=max_branching);
            let probs = random_probabilities(rng, n);
            for (k, p) in probs.into_iter().enumerate() {
                let id = child_id(parent, k, n);
                atoms.push(AtomSpec {
                    id: id.clone(),
                    time: t,
                    parent: Some(parent.clone()),
                    prob: p,
                });
                next.push(id);
            }
        }
        frontier = next;
    }
    ScenarioTree::new(horizon, atoms).expect("generated tree is valid")
}

/// A random vector at time `t` with values in `[lo, hi]`.
pub fn random_vector(
    rng: &mut impl Rng,
    tree: &ScenarioTree,
    t: usize,
    lo: f64,
    hi: f64,
) -> AdaptedVector {
    let values = (0..tree.width(t))
        .map(|_| uniform_value(rng, lo, hi))
        .collect();
    AdaptedVector::from_parts(t, values)
}

/// A random process with `X_0 = 0` and later values in `[lo, hi]`.
pub fn random_process(rng: &mut impl Rng, tree: &ScenarioTree, lo: f64, hi: f64) -> AdaptedProcess {
    let mut parts = vec![AdaptedVector::zeros(tree, 0)];
    for t in 1..=tree.horizon() {
        parts.push(random_vector(rng, tree, t, lo, hi));
    }
    AdaptedProcess::from_parts(parts)
}
