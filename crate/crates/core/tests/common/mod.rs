//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use captrans::setfun::{
    maxplus_inverse, mobius_inverse, validate_capacity, Capacity, SetVector, TransformKind,
    Universe,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn universe(n: usize) -> Universe {
    Universe::new(n).unwrap()
}

/// Random nonnegative weights summing to 1, about a third of them zero.
fn sparse_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.35) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 1e-3 {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Belief function from a random basic probability assignment.
pub fn random_belief(rng: &mut ChaCha8Rng, n: usize) -> Capacity {
    let size = 1usize << n;
    let mut masses = vec![0.0];
    masses.extend(sparse_simplex(rng, size - 1));
    let m = SetVector::new(universe(n), masses, TransformKind::Bpa).unwrap();
    mobius_inverse(&m).unwrap()
}

/// Probability measure with random singleton weights.
pub fn random_additive(rng: &mut ChaCha8Rng, n: usize) -> Capacity {
    let w = sparse_simplex(rng, n);
    Capacity::additive(universe(n), &w).unwrap()
}

/// Normalized capacity from a random nonnegative (max,+)-transform.
pub fn random_capacity(rng: &mut ChaCha8Rng, n: usize) -> Capacity {
    let size = 1usize << n;
    let mut tau = vec![0.0];
    tau.extend(sparse_simplex(rng, size - 1));
    let t = SetVector::new(universe(n), tau, TransformKind::MaxPlus).unwrap();
    let mu = maxplus_inverse(&t).unwrap();
    let top = mu.total();
    let values = mu.values().iter().map(|v| v / top).collect();
    validate_capacity(values, universe(n)).unwrap()
}
