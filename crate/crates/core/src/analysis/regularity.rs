use rayon::prelude::*;
use serde::Serialize;

use super::norms::xsigma_norms;
use crate::error::{Error, Result};
use crate::noise::{hs_norm_refinement_change, stochastic_convolution, NoiseModel, NoisePath};
use crate::spectral::{Grid, GridField, SpectralMultiplier};
use crate::trajectory::Trajectory;

/// Largest relative change of the `sigma~ + 5/2` Hilbert-Schmidt norm
/// between the two finest grids for which the study still runs.
pub const HS_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WvStudyConfig {
    pub length: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Index `sigma` of the hatted space; defaults to the midpoint of
    /// `(3/4, min(sigma~, 1))`.
    pub xhat_sigma: Option<f64>,
}

impl Default for WvStudyConfig {
    fn default() -> Self {
        Self { length: 8.0 * std::f64::consts::PI, dt: 2e-3, t_final: 1.0, xhat_sigma: None }
    }
}

/// Monte Carlo means for one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WvRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// `E sup_x int_0^T |D^{sigma~ - eps} d_x^3 W_V|^2 dt`.
    pub norm_a: f64,
    /// `E (int_0^T sup_x |d_x^3 W_V|^4 dt)^{1/2}`.
    pub norm_b: f64,
    /// Means of the three hatted components of `d_x^2 W_V`.
    pub xhat: [f64; 3],
}

impl WvRow {
    pub fn values(&self) -> [f64; 5] {
        [self.norm_a, self.norm_b, self.xhat[0], self.xhat[1], self.xhat[2]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WvStudyTable {
    pub rows: Vec<WvRow>,
    pub sigma_tilde: f64,
    pub epsilon: f64,
    pub xhat_sigma: f64,
    pub n_paths: usize,
    /// Relative change of the `sigma~ + 5/2` norm between the two finest grids.
    pub hs_change: f64,
}

impl WvStudyTable {
    /// Per-quantity relative change between the two finest grids.
    pub fn finest_changes(&self) -> [f64; 5] {
        let n = self.rows.len();
        let a = self.rows[n - 2].values();
        let b = self.rows[n - 1].values();
        let mut out = [0.0; 5];
        for i in 0..5 {
            let scale = a[i].abs().max(b[i].abs());
            out[i] = if scale == 0.0 { 0.0 } else { (b[i] - a[i]).abs() / scale };
        }
        out
    }

    pub fn is_stable(&self, tol: f64) -> bool {
        self.finest_changes().iter().all(|&c| c <= tol)
    }
}

fn path_norms(
    model: &NoiseModel,
    grid: &Grid,
    cfg: &WvStudyConfig,
    sigma_tilde: f64,
    epsilon: f64,
    xsig: f64,
) -> Result<[f64; 5]> {
    let n_steps = ((cfg.t_final / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let path = NoisePath::generate(model, grid, cfg.dt, n_steps)?;
    let w = stochastic_convolution(&path, None, 1);
    let d2 = SpectralMultiplier::derivative(grid, 2);
    let d3 = SpectralMultiplier::derivative(grid, 3);
    let frac = SpectralMultiplier::fractional(grid, sigma_tilde - epsilon)?.compose(&d3);

    let n = grid.n_points();
    let mut l2t = vec![0.0f64; n];
    let mut l4 = 0.0;
    let times = &w.times;
    let mut wxx = Vec::with_capacity(w.len());
    for (i, s) in w.snapshots.iter().enumerate() {
        let c = s.spectral_coefficients();
        let wt = match (i, times.len()) {
            (_, 1) => 0.0,
            (0, _) => 0.5 * (times[1] - times[0]),
            (i, len) if i == len - 1 => 0.5 * (times[i] - times[i - 1]),
            (i, _) => 0.5 * (times[i + 1] - times[i - 1]),
        };
        let a = grid.inverse(&frac.apply_coeffs(&c));
        for (acc, v) in l2t.iter_mut().zip(&a) {
            *acc += wt * v * v;
        }
        let b = grid.inverse(&d3.apply_coeffs(&c));
        let sup = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        l4 += wt * sup.powi(4);
        wxx.push(GridField::spectral(grid.clone(), d2.apply_coeffs(&c)));
    }
    let norm_a = l2t.iter().fold(0.0f64, |m, v| m.max(*v));
    let norm_b = l4.sqrt();
    let xh = xsigma_norms(&Trajectory::from_parts(times.clone(), wxx), xsig)?.xhat();
    Ok([norm_a, norm_b, xh[0], xh[1], xh[2]])
}

/// Monte Carlo study of `d_x^2 W_V` on each grid of `grids` (increasing
/// `N`, shared domain length). Path `p` uses seed `model.seed + p`, so the
/// low modes of a path coincide across grids.
///
/// Refuses with a hypothesis error when the `sigma~ + 5/2` Hilbert-Schmidt
/// norm changes by more than 5% between the two finest grids.
pub fn wv_regularity_study(
    model: &NoiseModel,
    sigma_tilde: f64,
    epsilon: f64,
    n_paths: usize,
    grids: &[usize],
    cfg: &WvStudyConfig,
) -> Result<WvStudyTable> {
    model.validate()?;
    if n_paths == 0 {
        return Err(Error::Usage("the study needs at least one path".into()));
    }
    if grids.len() < 2 || grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("the study needs at least two increasing grid sizes".into()));
    }
    if !(cfg.dt > 0.0 && cfg.t_final > 0.0 && cfg.length > 0.0) {
        return Err(Error::Usage("length, dt and t_final must be positive".into()));
    }
    if !(sigma_tilde > 0.75) {
        return Err(Error::Hypothesis(format!("sigma~ must exceed 3/4, got {sigma_tilde}")));
    }
    if !(epsilon > 0.0 && epsilon < sigma_tilde.min(2.0)) {
        return Err(Error::Hypothesis(format!(
            "epsilon must lie in (0, min(sigma~, 2)), got {epsilon}"
        )));
    }
    let xsig = cfg.xhat_sigma.unwrap_or(0.5 * (0.75 + sigma_tilde.min(1.0)));
    let g: Vec<Grid> = grids.iter().map(|&n| Grid::new(n, cfg.length)).collect::<Result<_>>()?;
    let k = g.len();
    let hs_change = hs_norm_refinement_change(model, sigma_tilde + 2.5, &g[k - 2], &g[k - 1]);
    if hs_change > HS_TOLERANCE {
        return Err(Error::Hypothesis(format!(
            "noise operator norm of order {} changes by {:.1}% from N = {} to N = {}",
            sigma_tilde + 2.5,
            100.0 * hs_change,
            grids[k - 2],
            grids[k - 1]
        )));
    }

    let mut rows = Vec::with_capacity(k);
    for grid in &g {
        let sums = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let m = model.clone().with_seed(model.seed.wrapping_add(p as u64));
                path_norms(&m, grid, cfg, sigma_tilde, epsilon, xsig)
            })
            .try_reduce(|| [0.0; 5], |a, b| {
                let mut s = a;
                for i in 0..5 {
                    s[i] += b[i];
                }
                Ok(s)
            })?;
        let mean = sums.map(|v| v / n_paths as f64);
        rows.push(WvRow {
            n: grid.n_points(),
            norm_a: mean[0],
            norm_b: mean[1],
            xhat: [mean[2], mean[3], mean[4]],
        });
    }
    Ok(WvStudyTable { rows, sigma_tilde, epsilon, xhat_sigma: xsig, n_paths, hs_change })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> WvStudyConfig {
        WvStudyConfig { dt: 1e-2, t_final: 0.2, ..Default::default() }
    }

    #[test]
    fn zero_noise_gives_zero_norms() {
        let t = wv_regularity_study(&NoiseModel::zero(), 0.9, 0.5, 3, &[32, 64], &quick()).unwrap();
        for r in &t.rows {
            assert_eq!(r.values(), [0.0; 5]);
        }
        assert!(t.is_stable(0.0));
    }

    #[test]
    fn hypotheses_are_checked() {
        let m = NoiseModel::algebraic(1.0, 4.9, 1);
        let c = quick();
        assert!(matches!(wv_regularity_study(&m, 0.7, 0.5, 2, &[32, 64], &c), Err(Error::Hypothesis(_))));
        assert!(matches!(wv_regularity_study(&m, 0.9, 0.95, 2, &[32, 64], &c), Err(Error::Hypothesis(_))));
        assert!(matches!(wv_regularity_study(&m, 0.9, 0.5, 0, &[32, 64], &c), Err(Error::Usage(_))));
        assert!(matches!(wv_regularity_study(&m, 0.9, 0.5, 2, &[64, 32], &c), Err(Error::Usage(_))));
        let rough = NoiseModel::algebraic(1.0, 3.0, 1);
        assert!(matches!(
            wv_regularity_study(&rough, 0.9, 0.5, 2, &[128, 256, 512], &c),
            Err(Error::Hypothesis(_))
        ));
    }
}
