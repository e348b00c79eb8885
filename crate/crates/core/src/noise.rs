//! Additive noise `Phi dW` with `Phi` diagonal in the Fourier basis.
//!
//! An increment over `dt` has independent complex Gaussian coefficients,
//! Hermitian-paired, with `E|c_k|^2 = phi_k^2 dt`. The Nyquist mode carries
//! no noise; the mean mode carries noise only when `include_mean_mode` is set.
//!
//! Draws come from ChaCha8 keyed by the model seed, with the step index as
//! the stream id. Within a step the modes are drawn in increasing order of
//! `|m|` (mean mode first), so a given `(seed, step)` produces the same low
//! modes on every grid that shares the domain length.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, GridField, SpectralMultiplier};
use crate::trajectory::Trajectory;

/// Name of the generator behind every increment.
pub const RNG_ALGORITHM: &str = "chacha8 (key = seed, stream = step index)";

/// Spectral diagonal of `Phi`, as a function of the wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiProfile {
    /// `phi_k = amp (1 + k^2)^(-decay/2)`.
    Algebraic { amp: f64, decay: f64 },
    /// `phi = amp` on the listed positive mode numbers and their negatives.
    Modes { amp: f64, modes: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub profile: PhiProfile,
    pub include_mean_mode: bool,
    pub seed: u64,
}

impl NoiseModel {
    pub fn algebraic(amp: f64, decay: f64, seed: u64) -> Self {
        Self { profile: PhiProfile::Algebraic { amp, decay }, include_mean_mode: false, seed }
    }

    pub fn zero() -> Self {
        Self::algebraic(0.0, 0.0, 0)
    }

    pub fn with_mean_mode(mut self, on: bool) -> Self {
        self.include_mean_mode = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn amp(&self) -> f64 {
        match &self.profile {
            PhiProfile::Algebraic { amp, .. } | PhiProfile::Modes { amp, .. } => *amp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let amp = self.amp();
        if !(amp >= 0.0 && amp.is_finite()) {
            return Err(Error::Usage(format!("noise amplitude must be >= 0, got {amp}")));
        }
        if let PhiProfile::Algebraic { decay, .. } = self.profile {
            if !decay.is_finite() {
                return Err(Error::Usage("noise decay must be finite".into()));
            }
            if decay == 0.0 && amp > 0.0 {
                log::warn!("decay = 0 is space-time white noise, outside the trace-class setting");
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.amp() == 0.0
    }

    /// `phi` per FFT index of `grid`.
    pub fn phi(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.n_points();
        let nyq = grid.nyquist_index();
        let mut phi = vec![0.0; n];
        for (j, p) in phi.iter_mut().enumerate() {
            if j == nyq || (j == 0 && !self.include_mean_mode) {
                continue;
            }
            *p = match &self.profile {
                PhiProfile::Algebraic { amp, decay } => {
                    let k = grid.wavenumbers()[j];
                    amp * (1.0 + k * k).powf(-decay / 2.0)
                }
                PhiProfile::Modes { amp, modes } => {
                    let m = grid.mode_number(j).unsigned_abs();
                    if modes.iter().any(|&q| q as u64 == m) {
                        *amp
                    } else {
                        0.0
                    }
                }
            };
        }
        phi
    }

    /// Coefficients of `Phi (W(t_{n+1}) - W(t_n))` for step `step_index`.
    pub fn increment_coeffs(&self, grid: &Grid, phi: &[f64], dt: f64, step_index: u64) -> Vec<Complex64> {
        let n = grid.n_points();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        if self.is_zero() {
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step_index);
        let z0: f64 = StandardNormal.sample(&mut rng);
        out[0] = Complex64::new(phi[0] * dt.sqrt() * z0, 0.0);
        let s = (0.5 * dt).sqrt();
        for m in 1..n / 2 {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = Complex64::new(re, im) * (phi[m] * s);
            out[m] = c;
            out[n - m] = c.conj();
        }
        out
    }

    /// One increment as a spectral field; replayable from `(seed, step_index)`.
    pub fn sample_increment(&self, grid: &Grid, dt: f64, step_index: u64) -> Result<GridField> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Usage(format!("dt must be positive, got {dt}")));
        }
        let phi = self.phi(grid);
        Ok(GridField::spectral(grid.clone(), self.increment_coeffs(grid, &phi, dt, step_index)))
    }
}

/// Squared Hilbert-Schmidt norm `sum_k (1 + k^2)^sigma phi_k^2` over the
/// grid's noise-carrying modes.
pub fn hs_norm(model: &NoiseModel, sigma: f64, grid: &Grid) -> f64 {
    model
        .phi(grid)
        .iter()
        .zip(grid.wavenumbers())
        .map(|(p, k)| (1.0 + k * k).powf(sigma) * p * p)
        .sum()
}

/// Relative change of [`hs_norm`] from `coarse` to `fine`.
pub fn hs_norm_refinement_change(model: &NoiseModel, sigma: f64, coarse: &Grid, fine: &Grid) -> f64 {
    let a = hs_norm(model, sigma, coarse);
    let b = hs_norm(model, sigma, fine);
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

/// A stored sequence of increments.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub grid: Grid,
    pub dt: f64,
    pub seed: u64,
    pub increments: Vec<Vec<Complex64>>,
}

impl NoisePath {
    pub fn generate(model: &NoiseModel, grid: &Grid, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Usage(format!("dt must be positive, got {dt}")));
        }
        let phi = model.phi(grid);
        let increments =
            (0..n_steps as u64).map(|n| model.increment_coeffs(grid, &phi, dt, n)).collect();
        Ok(Self { grid: grid.clone(), dt, seed: model.seed, increments })
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }
}

/// Left-point accumulation `W_{n+1} = V(dt) [W_n + Phi dW_n]` of the
/// stochastic convolution, snapshots every `stride` steps and at the end.
///
/// `generator` is the linear generator of the propagator; `None` selects the
/// Airy group.
pub fn stochastic_convolution(
    path: &NoisePath,
    generator: Option<&[Complex64]>,
    stride: usize,
) -> Trajectory {
    let grid = &path.grid;
    let step = match generator {
        Some(g) => SpectralMultiplier::exponential(g, path.dt),
        None => SpectralMultiplier::airy(grid, path.dt),
    };
    let stride = stride.max(1);
    let mut w = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    let mut traj = Trajectory::new(GridField::spectral(grid.clone(), w.clone()));
    let n = path.n_steps();
    for (i, inc) in path.increments.iter().enumerate() {
        for (a, b) in w.iter_mut().zip(inc) {
            *a += b;
        }
        step.apply_in_place(&mut w);
        let done = i + 1;
        if done % stride == 0 || done == n {
            traj.push(done as f64 * path.dt, GridField::spectral(grid.clone(), w.clone()));
        }
    }
    traj
}

/// `W_V(t_final)` coefficients under the Airy group, without storing a path.
pub fn convolution_endpoint(model: &NoiseModel, grid: &Grid, dt: f64, n_steps: usize) -> Vec<Complex64> {
    let phi = model.phi(grid);
    let step = SpectralMultiplier::airy(grid, dt);
    let mut w = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    for n in 0..n_steps as u64 {
        let inc = model.increment_coeffs(grid, &phi, dt, n);
        for (a, b) in w.iter_mut().zip(&inc) {
            *a += b;
        }
        step.apply_in_place(&mut w);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(64, 20.0).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let g = grid();
        let m = NoiseModel::algebraic(0.0, 2.0, 7);
        assert_eq!(m.sample_increment(&g, 0.1, 3).unwrap().sup_norm(), 0.0);
        assert_eq!(hs_norm(&m, 1.0, &g), 0.0);
        let path = NoisePath::generate(&m, &g, 0.1, 20).unwrap();
        let w = stochastic_convolution(&path, None, 1);
        assert!(w.snapshots.iter().all(|s| s.sup_norm() == 0.0));
    }

    #[test]
    fn hs_norm_two_mode_sum() {
        let g = Grid::new(64, 12.0).unwrap();
        let m = NoiseModel { profile: PhiProfile::Modes { amp: 1.0, modes: vec![1] }, include_mean_mode: false, seed: 0 };
        let k1 = 2.0 * PI / 12.0;
        assert!((hs_norm(&m, 1.0, &g) - 2.0 * (1.0 + k1 * k1)).abs() < 1e-13);
    }

    #[test]
    fn hs_norm_converges_for_fast_decay() {
        let m = NoiseModel::algebraic(1.0, 4.0, 0);
        let l = 64.0 * PI;
        let c = hs_norm_refinement_change(&m, 1.0, &Grid::new(256, l).unwrap(), &Grid::new(512, l).unwrap());
        assert!(c <= 0.05, "change {c}");
    }

    #[test]
    fn replay_is_bit_identical() {
        let g = grid();
        let m = NoiseModel::algebraic(0.7, 1.5, 99);
        let a = m.sample_increment(&g, 0.01, 42).unwrap();
        let b = m.sample_increment(&g, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let (g, m) = (g.clone(), m.clone());
                std::thread::spawn(move || m.sample_increment(&g, 0.01, 42).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), a);
        }
        assert_ne!(m.sample_increment(&g, 0.01, 43).unwrap(), a);
    }

    #[test]
    fn increments_are_real_fields() {
        let g = grid();
        let m = NoiseModel::algebraic(1.0, 1.0, 5).with_mean_mode(true);
        let c = m.sample_increment(&g, 0.1, 0).unwrap().spectral_coefficients();
        for j in 1..32 {
            assert_eq!(c[j], c[64 - j].conj());
        }
        assert_eq!(c[0].im, 0.0);
        assert_eq!(c[32], Complex64::new(0.0, 0.0));
        let mut buf = c.clone();
        use rustfft::FftPlanner;
        FftPlanner::new().plan_fft_inverse(64).process(&mut buf);
        let scale = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert!(buf.iter().all(|z| z.im.abs() <= 1e-12 * scale.max(1.0)));
    }

    #[test]
    fn low_modes_do_not_depend_on_resolution() {
        let m = NoiseModel::algebraic(1.0, 2.0, 11);
        let a = m.increment_coeffs(&Grid::new(64, 30.0).unwrap(), &m.phi(&Grid::new(64, 30.0).unwrap()), 0.1, 5);
        let fine = Grid::new(256, 30.0).unwrap();
        let b = m.increment_coeffs(&fine, &m.phi(&fine), 0.1, 5);
        for j in 1..31 {
            assert_eq!(a[j], b[j]);
        }
    }

    #[test]
    fn mean_mode_excluded_by_default() {
        let g = grid();
        let m = NoiseModel::algebraic(1.0, 1.0, 5);
        for s in 0..10 {
            let inc = m.sample_increment(&g, 0.1, s).unwrap();
            assert_eq!(inc.coefficients().unwrap()[0], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn convolution_endpoint_matches_trajectory() {
        let g = grid();
        let m = NoiseModel::algebraic(0.5, 1.0, 3);
        let path = NoisePath::generate(&m, &g, 0.05, 30).unwrap();
        let traj = stochastic_convolution(&path, None, 7);
        assert_eq!(traj.times.len(), 1 + 4 + 1);
        let end = convolution_endpoint(&m, &g, 0.05, 30);
        let last = traj.last().unwrap().coefficients().unwrap();
        for (a, b) in end.iter().zip(last) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let m = NoiseModel::algebraic(1.0, 1.0, 0);
        assert!(m.sample_increment(&grid(), 0.0, 0).is_err());
        assert!(NoisePath::generate(&m, &grid(), -1.0, 3).is_err());
    }
}
