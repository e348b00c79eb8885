use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::norms::{hs_sigma_norm, xsigma_norms};
use crate::equations::{CoefficientSet, RhsEvaluator};
use crate::error::{Error, Result};
use crate::integrators::StepConfig;
use crate::noise::{stochastic_convolution, NoiseModel, NoisePath};
use crate::spectral::{GridField, SpectralMultiplier};
use crate::trajectory::Trajectory;

/// Relative floor below which successive differences count as converged.
const CONVERGED: f64 = 1e-13;

/// The Duhamel map
/// `T(u)(t_n) = V(t_n) u0 + sum_{m<n} V(t_n - t_m) dt N(u(t_m)) + W_V(t_n)`
/// on the time nodes `t_n = n dt`, computed with the recursion
/// `D_n = V(dt) (D_{n-1} + dt N(u_{n-1}))`.
pub struct PicardMap {
    rhs: RhsEvaluator,
    step: SpectralMultiplier,
    dt: f64,
    times: Vec<f64>,
    /// `V(t_n) u0 + W_V(t_n)` per node.
    base: Vec<Vec<Complex64>>,
    w_v: Trajectory,
}

impl PicardMap {
    pub fn new(u0: &GridField, set: &CoefficientSet, model: &NoiseModel, cfg: &StepConfig) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        let grid = u0.grid().clone();
        let rhs = RhsEvaluator::new(&grid, set);
        let step = SpectralMultiplier::exponential(rhs.generator(), cfg.dt);
        let n_steps = cfg.n_steps();
        let path = NoisePath::generate(model, &grid, cfg.dt, n_steps)?;
        let w_v = stochastic_convolution(&path, Some(rhs.generator()), 1);
        let mut base = Vec::with_capacity(n_steps + 1);
        let mut free = u0.spectral_coefficients();
        for (n, w) in w_v.snapshots.iter().enumerate() {
            if n > 0 {
                step.apply_in_place(&mut free);
            }
            let w = w.spectral_coefficients();
            base.push(free.iter().zip(&w).map(|(a, b)| a + b).collect());
        }
        let times = w_v.times.clone();
        Ok(Self { rhs, step, dt: cfg.dt, times, base, w_v })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// The stochastic convolution on the map's nodes.
    pub fn stochastic_convolution(&self) -> &Trajectory {
        &self.w_v
    }

    /// `u^(0) = V(t) u0 + W_V(t)`.
    pub fn initial(&self) -> Vec<Vec<Complex64>> {
        self.base.clone()
    }

    pub fn apply(&self, u: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        assert_eq!(u.len(), self.base.len(), "iterate has the wrong number of nodes");
        let nl: Vec<Vec<Complex64>> =
            u[..u.len() - 1].par_iter().map(|c| self.rhs.nonlinear_coeffs(c)).collect();
        let mut d = vec![Complex64::new(0.0, 0.0); self.base[0].len()];
        let mut out = Vec::with_capacity(u.len());
        out.push(self.base[0].clone());
        for (n, nlc) in nl.iter().enumerate() {
            for (a, b) in d.iter_mut().zip(nlc) {
                *a += b * self.dt;
            }
            self.step.apply_in_place(&mut d);
            out.push(self.base[n + 1].iter().zip(&d).map(|(a, b)| a + b).collect());
        }
        out
    }

    pub fn to_trajectory(&self, u: &[Vec<Complex64>]) -> Trajectory {
        let grid = self.rhs.grid();
        Trajectory::from_parts(
            self.times.clone(),
            u.iter().map(|c| GridField::spectral(grid.clone(), c.clone()).into_physical()).collect(),
        )
    }

    fn x_norm(&self, u: &[Vec<Complex64>], sigma: f64) -> Result<f64> {
        Ok(xsigma_norms(&self.spectral_trajectory(u), sigma)?.total())
    }

    fn spectral_trajectory(&self, u: &[Vec<Complex64>]) -> Trajectory {
        let grid = self.rhs.grid();
        Trajectory::from_parts(
            self.times.clone(),
            u.iter().map(|c| GridField::spectral(grid.clone(), c.clone())).collect(),
        )
    }

    fn x_distance(&self, u: &[Vec<Complex64>], v: &[Vec<Complex64>], sigma: f64) -> Result<f64> {
        let d: Vec<Vec<Complex64>> =
            u.iter().zip(v).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        self.x_norm(&d, sigma)
    }

    /// `|u_2x|_X / |u|_X` for one iterate; `None` for a zero iterate.
    fn m_ratio(&self, u: &[Vec<Complex64>], sigma: f64) -> Result<Option<f64>> {
        let base = self.x_norm(u, sigma)?;
        if base == 0.0 {
            return Ok(None);
        }
        let d2 = SpectralMultiplier::derivative(self.rhs.grid(), 2);
        let uxx: Vec<Vec<Complex64>> = u.iter().map(|c| d2.apply_coeffs(c)).collect();
        Ok(Some(self.x_norm(&uxx, sigma)? / base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub n_iter: usize,
    pub sigma: f64,
    pub kappa: f64,
    /// Ball radius; by default the smallest `R` allowed by condition (i).
    pub radius: Option<f64>,
}

impl PicardSettings {
    pub fn new(n_iter: usize, sigma: f64) -> Self {
        Self { n_iter, sigma, kappa: 2.0, radius: None }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

/// Ball and contraction inequalities evaluated with the empirical constant.
/// Diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallConditions {
    pub radius_r: f64,
    pub c_hat: f64,
    pub measured_m: f64,
    pub kappa: f64,
    pub u0_hsigma: f64,
    pub wv_xsigma: f64,
    pub condition_i_satisfied: bool,
    pub condition_ii_satisfied: bool,
}

/// `C |u0|_{H^sigma} + |W_V|_X <= R` with `4 R C T^{1/2} (1 + 2M) <= 1` for
/// (i), and `kappa 4 R C T^{1/2} (1 + 2M) <= 1` for (ii).
pub fn ball_conditions(
    u0: &GridField,
    w_v: &Trajectory,
    sigma: f64,
    kappa: f64,
    c_hat: f64,
    measured_m: f64,
    radius: Option<f64>,
) -> Result<BallConditions> {
    if !(kappa > 1.0) {
        return Err(Error::Usage(format!("kappa must be > 1, got {kappa}")));
    }
    if !(c_hat >= 0.0 && measured_m >= 0.0) {
        return Err(Error::Usage("C and M surrogates must be nonnegative".into()));
    }
    let u0_hs = hs_sigma_norm(u0, sigma);
    let wv = xsigma_norms(w_v, sigma)?.total();
    let lower = c_hat * u0_hs + wv;
    let r = radius.unwrap_or(lower);
    if !(r >= 0.0) {
        return Err(Error::Usage(format!("radius must be nonnegative, got {r}")));
    }
    let t = w_v.horizon();
    let q = 4.0 * r * c_hat * t.sqrt() * (1.0 + 2.0 * measured_m);
    Ok(BallConditions {
        radius_r: r,
        c_hat,
        measured_m,
        kappa,
        u0_hsigma: u0_hs,
        wv_xsigma: wv,
        condition_i_satisfied: lower <= r && q <= 1.0,
        condition_ii_satisfied: kappa * q <= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub iterates: usize,
    /// `|u^(m+1) - u^(m)|_X`.
    pub successive_diffs: Vec<f64>,
    /// Geometric-fit ratio of the differences; reported even when >= 1.
    pub contraction_ratio: f64,
    pub radius_r: f64,
    pub condition_i_satisfied: bool,
    pub condition_ii_satisfied: bool,
    pub measured_m: f64,
    pub kappa: f64,
    pub c_hat: f64,
    pub diverged: bool,
    pub t_horizon: f64,
}

/// `exp` of the least-squares slope of `ln d_m` over the differences above
/// the convergence floor.
fn geometric_ratio(diffs: &[f64], floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > floor)
        .map(|(i, &d)| (i as f64, d.ln()))
        .collect();
    match pts.len() {
        0 => 0.0,
        1 => {
            // one difference, then convergence to the floor
            if diffs.len() > 1 { diffs[1].min(floor) / diffs[0] } else { 0.0 }
        }
        n => {
            let n = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            (sxy / sxx).exp()
        }
    }
}

/// Iterates the Duhamel map from `V(t) u0 + W_V(t)` on one fixed noise path.
///
/// Stops after `n_iter` applications, on convergence to round-off, or after
/// three consecutive increases of the successive difference.
pub fn picard_iterate(
    u0: &GridField,
    set: &CoefficientSet,
    model: &NoiseModel,
    cfg: &StepConfig,
    settings: &PicardSettings,
) -> Result<(ContractionReport, Trajectory)> {
    if settings.n_iter < 2 {
        return Err(Error::Usage(format!("picard needs at least 2 iterations, got {}", settings.n_iter)));
    }
    if !(settings.kappa > 1.0) {
        return Err(Error::Usage(format!("kappa must be > 1, got {}", settings.kappa)));
    }
    let sigma = settings.sigma;
    let map = PicardMap::new(u0, set, model, cfg)?;
    let t_horizon = map.times().last().copied().unwrap_or(0.0);

    let mut u = map.initial();
    let mut norm_u = map.x_norm(&u, sigma)?;
    let mut m_hat = map.m_ratio(&u, sigma)?.unwrap_or(0.0);
    let mut diffs: Vec<f64> = Vec::new();
    let mut pair_norms: Vec<f64> = Vec::new();
    let mut increases = 0;
    let mut diverged = false;
    for _ in 0..settings.n_iter {
        let next = map.apply(&u);
        let d = map.x_distance(&next, &u, sigma)?;
        let norm_next = map.x_norm(&next, sigma)?;
        if let Some(r) = map.m_ratio(&next, sigma)? {
            m_hat = m_hat.max(r);
        }
        pair_norms.push(norm_u + norm_next);
        if let Some(&prev) = diffs.last() {
            increases = if d > prev { increases + 1 } else { 0 };
        }
        diffs.push(d);
        u = next;
        norm_u = norm_next;
        if !d.is_finite() || increases >= 3 {
            diverged = true;
            log::warn!("picard iteration diverging after {} iterates", diffs.len());
            break;
        }
        if d <= CONVERGED * norm_u.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let floor = CONVERGED * norm_u;
    let ratio = geometric_ratio(&diffs, floor);

    // C surrogate over the pairs (u^(m), u^(m-1)) whose images are (u^(m+1), u^(m))
    let sqrt_t = t_horizon.sqrt();
    let mut c_hat: f64 = 0.0;
    for m in 1..diffs.len() {
        let den = sqrt_t * diffs[m - 1] * pair_norms[m - 1] * (2.0 * m_hat + 1.0);
        if diffs[m - 1] > floor && den > 0.0 {
            c_hat = c_hat.max(diffs[m] / den);
        }
    }
    let ball = ball_conditions(
        u0,
        map.stochastic_convolution(),
        sigma,
        settings.kappa,
        c_hat,
        m_hat,
        settings.radius,
    )?;
    let report = ContractionReport {
        iterates: diffs.len(),
        successive_diffs: diffs,
        contraction_ratio: ratio,
        radius_r: ball.radius_r,
        condition_i_satisfied: ball.condition_i_satisfied,
        condition_ii_satisfied: ball.condition_ii_satisfied,
        measured_m: m_hat,
        kappa: settings.kappa,
        c_hat,
        diverged,
        t_horizon,
    };
    Ok((report, map.to_trajectory(&u)))
}
