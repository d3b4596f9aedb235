//! Helpers shared by unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::WaveformSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Waveform with i.i.d. entries uniform in the unit square.
pub fn random_waveform(mt: usize, n: usize, seed: u64) -> WaveformSet {
    let mut g = rng(seed);
    WaveformSet::from_fn(mt, n, |_, _| Complex64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0))).unwrap()
}

pub fn random_complex(g: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(g.random_range(-scale..scale), g.random_range(-scale..scale))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
