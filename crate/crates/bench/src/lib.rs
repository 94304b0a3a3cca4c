//! Shared fixtures for the criterion benchmarks.

use forward_ec::geometry::sample_direction;
use forward_ec::DirectionLaw;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gradient with coordinates of mixed magnitude, never zero.
pub fn gradient(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|i| (1.0 + i as f64 / dim as f64) * rng.random_range(0.5..1.5)).collect()
}

pub fn direction(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    sample_direction(DirectionLaw::UniformSphere, &mut y, rng);
    y
}

pub const DIMS: [usize; 3] = [10, 100, 1000];
