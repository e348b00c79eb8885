use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{GridField, SpectralMultiplier};
use crate::trajectory::Trajectory;

/// The four seminorms making up the `X_sigma(T)` norm of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XSigmaNorms {
    /// `sup_t |u(t)|_{H^sigma}`.
    pub linf_t_hsigma: f64,
    /// `| sup_t |u| |_{L^2_x}`.
    pub l2x_linf_t: f64,
    /// `sup_x | D^sigma u_x |_{L^2_t}`.
    pub linf_x_l2t_dsigma_dx: f64,
    /// `| sup_x |u_x| |_{L^4_t}`.
    pub l4t_linf_x_dx: f64,
    pub sigma: f64,
    pub t_horizon: f64,
}

impl XSigmaNorms {
    pub fn components(&self) -> [f64; 4] {
        [self.linf_t_hsigma, self.l2x_linf_t, self.linf_x_l2t_dsigma_dx, self.l4t_linf_x_dx]
    }

    /// Full norm, the sum of the four components.
    pub fn total(&self) -> f64 {
        self.components().iter().sum()
    }

    /// The three components of the hatted space (no `H^sigma` part).
    pub fn xhat(&self) -> [f64; 3] {
        [self.l2x_linf_t, self.linf_x_l2t_dsigma_dx, self.l4t_linf_x_dx]
    }

    pub fn xhat_total(&self) -> f64 {
        self.xhat().iter().sum()
    }
}

/// `(L sum_k (1 + k^2)^sigma |c_k|^2)^{1/2}`; equals the `L^2` norm at `sigma = 0`.
pub fn hs_sigma_norm(f: &GridField, sigma: f64) -> f64 {
    let g = f.grid();
    let c = f.spectral_coefficients();
    let s: f64 = c
        .iter()
        .zip(g.wavenumbers())
        .map(|(z, k)| (1.0 + k * k).powf(sigma) * z.norm_sqr())
        .sum();
    (g.length() * s).sqrt()
}

/// Trapezoid weights for the given nodes.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

pub fn xsigma_norms(traj: &Trajectory, sigma: f64) -> Result<XSigmaNorms> {
    if traj.is_empty() {
        return Err(Error::Usage("X_sigma norm of an empty trajectory".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma <= 0.75 || sigma >= 1.0 {
        log::debug!("sigma = {sigma} lies outside the (3/4, 1) window of the theory");
    }
    let grid = traj.snapshots[0].grid().clone();
    let n = grid.n_points();
    let d1 = SpectralMultiplier::derivative(&grid, 1);
    let ds_d1 = SpectralMultiplier::fractional(&grid, sigma)?.compose(&d1);
    let w = trapezoid_weights(&traj.times);

    let mut hs_sup: f64 = 0.0;
    let mut sup_t = vec![0.0f64; n];
    let mut l2t = vec![0.0f64; n];
    let mut l4 = 0.0;
    for (snap, &wt) in traj.snapshots.iter().zip(&w) {
        let c = snap.spectral_coefficients();
        hs_sup = hs_sup.max(hs_sigma_norm(snap, sigma));
        let u = grid.inverse(&c);
        for (s, v) in sup_t.iter_mut().zip(&u) {
            *s = s.max(v.abs());
        }
        let ds = grid.inverse(&ds_d1.apply_coeffs(&c));
        for (acc, v) in l2t.iter_mut().zip(&ds) {
            *acc += wt * v * v;
        }
        let ux = grid.inverse(&d1.apply_coeffs(&c));
        let m = ux.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        l4 += wt * m.powi(4);
    }
    let dx = grid.dx();
    Ok(XSigmaNorms {
        linf_t_hsigma: hs_sup,
        l2x_linf_t: (dx * sup_t.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        linf_x_l2t_dsigma_dx: l2t.iter().fold(0.0f64, |a, v| a.max(*v)).sqrt(),
        l4t_linf_x_dx: l4.powf(0.25),
        sigma,
        t_horizon: traj.horizon(),
    })
}

/// Largest ratio `|u_2x|_X / |u|_X` over time-constant samples held on
/// `[0, horizon]`. Zero-norm samples are skipped; `0` if none remain.
pub fn measured_m(samples: &[GridField], sigma: f64, horizon: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Usage("measured_m needs at least one sample".into()));
    }
    let mut best: f64 = 0.0;
    for s in samples {
        let base = xsigma_norms(&Trajectory::constant(s.clone(), horizon), sigma)?.total();
        if base == 0.0 {
            continue;
        }
        let d2 = SpectralMultiplier::derivative(s.grid(), 2).apply(s);
        let top = xsigma_norms(&Trajectory::constant(d2, horizon), sigma)?.total();
        best = best.max(top / base);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_closed_form() {
        let l = 20.0;
        let g = Grid::new(64, l).unwrap();
        let k = 2.0 * PI / l * 3.0;
        let f = g.sample(|x| (k * x).sin());
        let t = 0.8;
        let sigma = 0.85;
        let nrm = xsigma_norms(&Trajectory::constant(f.clone(), t), sigma).unwrap();
        let l2 = (l / 2.0).sqrt();
        assert!((nrm.linf_t_hsigma - (1.0 + k * k).powf(sigma / 2.0) * l2).abs() < 1e-12);
        assert!((nrm.l4t_linf_x_dx - t.powf(0.25) * k).abs() < 1e-12);
        assert!((nrm.linf_x_l2t_dsigma_dx - k.powf(sigma + 1.0) * t.sqrt()).abs() < 1e-12);
        // sup_t |sin| = |sin| on the grid
        assert!((nrm.l2x_linf_t - l2).abs() < 1e-12);
        assert_eq!(nrm.t_horizon, t);
    }

    #[test]
    fn zero_and_empty() {
        let g = Grid::new(32, 10.0).unwrap();
        let z = xsigma_norms(&Trajectory::constant(GridField::zeros(g.clone()), 1.0), 0.8).unwrap();
        assert_eq!(z.components(), [0.0; 4]);
        let mut t = Trajectory::constant(GridField::zeros(g), 1.0);
        t.snapshots.clear();
        t.times.clear();
        assert!(xsigma_norms(&t, 0.8).is_err());
    }

    #[test]
    fn measured_m_single_mode() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let f = g.sample(|x| (4.0 * x).cos());
        let m = measured_m(&[f, GridField::zeros(g)], 0.8, 0.5).unwrap();
        assert!((m - 16.0).abs() < 1e-10);
    }
}
