#![allow(dead_code)]

use kdv2_core::spectral::{Grid, GridField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random real field whose modes `1..=max_mode` carry coefficients of size
/// about `amp / (1 + m)^2`, plus a random mean of size `mean`.
pub fn smooth_field(grid: &Grid, max_mode: usize, amp: f64, mean: f64, seed: u64) -> GridField {
    let n = grid.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[0] = Complex64::new(mean * rng.random_range(-1.0..1.0), 0.0);
    for m in 1..=max_mode.min(n / 2 - 1) {
        let s = amp / (1.0 + m as f64).powi(2);
        let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s;
        c[m] = z;
        c[n - m] = z.conj();
    }
    GridField::spectral(grid.clone(), c).into_physical()
}

/// Uniform random samples in `[-1, 1)`; not smooth.
pub fn rough_field(grid: &Grid, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.n_points()).map(|_| rng.random_range(-1.0..1.0)).collect();
    GridField::physical(grid.clone(), v)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn two_pi_grid(n: usize) -> Grid {
    Grid::new(n, 2.0 * std::f64::consts::PI).unwrap()
}
