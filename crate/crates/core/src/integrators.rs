//! Exponential time stepping in Fourier space.
//!
//! The linear part of the equation (transport, third and fifth derivative)
//! is a diagonal generator `lambda(k)` and is integrated exactly; only the
//! dealiased nonlinear part is approximated.
//!
//! * `Etd1`: left-point exponential Euler, `u+ = E (u + h N(u))`.
//! * `Etd4`: Cox-Matthews ETDRK4.
//! * `StochEulerMild`: `u+ = E (u + h N(u) + Phi dW)`, the mild form with the
//!   noise increment inside the propagator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equations::{CoefficientSet, RhsEvaluator};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::spectral::{Grid, GridField};
use crate::trajectory::{BlowUpRecord, Trajectory};

/// Contour points used for the ETD coefficients.
pub const CONTOUR_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "etd4")]
    Etd4,
    #[serde(rename = "etd1")]
    Etd1,
    #[serde(rename = "stoch-euler-mild")]
    StochEulerMild,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Etd4 => "etd4",
            Scheme::Etd1 => "etd1",
            Scheme::StochEulerMild => "stoch-euler-mild",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "etd4" => Ok(Scheme::Etd4),
            "etd1" => Ok(Scheme::Etd1),
            "stoch-euler-mild" => Ok(Scheme::StochEulerMild),
            _ => Err(Error::Usage(format!(
                "unknown scheme `{s}` (expected etd4, etd1 or stoch-euler-mild)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub blowup_threshold: f64,
}

impl StepConfig {
    pub fn new(dt: f64, t_final: f64, scheme: Scheme) -> Self {
        Self { dt, t_final, scheme, snapshot_stride: 1, blowup_threshold: 1e6 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Usage(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Usage("snapshot stride must be at least 1".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Usage("blow-up threshold must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps; `t_final` is rounded to a multiple of `dt`.
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn warn_resolution(&self, u0: &GridField) {
        let sup = u0.sup_norm();
        if sup > 0.0 && self.dt > 0.1 / sup {
            log::warn!("dt = {} exceeds 0.1/|u0|_inf = {}", self.dt, 0.1 / sup);
        }
    }
}

/// `(1/M) sum f(z + exp(i theta_j))` over an `M`-point circle.
fn contour_mean(z: Complex64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let m = CONTOUR_POINTS;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let theta = PI * (j as f64 + 0.5) / m as f64 * 2.0;
        acc += f(z + Complex64::from_polar(1.0, theta));
    }
    acc / m as f64
}

/// `phi_1(z) = (e^z - 1)/z` via contour averaging.
pub fn phi1(z: Complex64) -> Complex64 {
    contour_mean(z, |w| (w.exp() - 1.0) / w)
}

/// Per-mode ETDRK4 coefficients for step `h`.
#[derive(Debug, Clone)]
struct Etd4Coefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Etd4Coefficients {
    fn new(generator: &[Complex64], h: f64) -> Self {
        let n = generator.len();
        let mut s = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in generator {
            let z = l * h;
            s.e.push(z.exp());
            s.e2.push((z * 0.5).exp());
            s.q.push(contour_mean(z, |w| ((w * 0.5).exp() - 1.0) / w) * h);
            s.f1.push(
                contour_mean(z, |w| (-4.0 - w + w.exp() * (4.0 - 3.0 * w + w * w)) / (w * w * w)) * h,
            );
            s.f2.push(contour_mean(z, |w| (2.0 + w + w.exp() * (w - 2.0)) / (w * w * w)) * h);
            s.f3.push(
                contour_mean(z, |w| (-4.0 - 3.0 * w - w * w + w.exp() * (4.0 - w)) / (w * w * w)) * h,
            );
        }
        s
    }
}

enum Kernel {
    Euler { e: Vec<Complex64> },
    Etd4(Etd4Coefficients),
}

/// Advances spectral coefficients one step at a time.
pub struct Stepper {
    rhs: RhsEvaluator,
    kernel: Kernel,
    dt: f64,
    scheme: Scheme,
}

impl Stepper {
    pub fn new(grid: &Grid, set: &CoefficientSet, dt: f64, scheme: Scheme) -> Self {
        let rhs = RhsEvaluator::new(grid, set);
        let kernel = match scheme {
            Scheme::Etd4 => Kernel::Etd4(Etd4Coefficients::new(rhs.generator(), dt)),
            Scheme::Etd1 | Scheme::StochEulerMild => {
                Kernel::Euler { e: rhs.generator().iter().map(|l| (l * dt).exp()).collect() }
            }
        };
        Self { rhs, kernel, dt, scheme }
    }

    pub fn evaluator(&self) -> &RhsEvaluator {
        &self.rhs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; `noise` is added inside the propagator (mild form).
    pub fn step(&self, u: &[Complex64], noise: Option<&[Complex64]>) -> Vec<Complex64> {
        match &self.kernel {
            Kernel::Euler { e } => {
                let nl = self.rhs.nonlinear_coeffs(u);
                let mut out: Vec<Complex64> =
                    u.iter().zip(&nl).map(|(c, n)| c + n * self.dt).collect();
                if let Some(w) = noise {
                    for (o, d) in out.iter_mut().zip(w) {
                        *o += d;
                    }
                }
                for (o, ej) in out.iter_mut().zip(e) {
                    *o *= ej;
                }
                out
            }
            Kernel::Etd4(c) => {
                debug_assert!(noise.is_none(), "ETD4 is deterministic");
                let nu = self.rhs.nonlinear_coeffs(u);
                let a: Vec<Complex64> =
                    (0..u.len()).map(|j| c.e2[j] * u[j] + c.q[j] * nu[j]).collect();
                let na = self.rhs.nonlinear_coeffs(&a);
                let b: Vec<Complex64> =
                    (0..u.len()).map(|j| c.e2[j] * u[j] + c.q[j] * na[j]).collect();
                let nb = self.rhs.nonlinear_coeffs(&b);
                let cc: Vec<Complex64> = (0..u.len())
                    .map(|j| c.e2[j] * a[j] + c.q[j] * (nb[j] * 2.0 - nu[j]))
                    .collect();
                let nc = self.rhs.nonlinear_coeffs(&cc);
                (0..u.len())
                    .map(|j| {
                        c.e[j] * u[j]
                            + c.f1[j] * nu[j]
                            + c.f2[j] * (na[j] + nb[j]) * 2.0
                            + c.f3[j] * nc[j]
                    })
                    .collect()
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
}

fn run(
    u0: &GridField,
    set: &CoefficientSet,
    noise: Option<&NoiseModel>,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    cfg.warn_resolution(u0);
    let grid = u0.grid().clone();
    let stepper = Stepper::new(&grid, set, cfg.dt, cfg.scheme);
    let phi = noise.map(|m| m.phi(&grid));
    let n_steps = cfg.n_steps();

    let mut traj = Trajectory::new(u0.clone());
    let mut u = u0.spectral_coefficients();
    for n in 0..n_steps {
        let inc = match (noise, &phi) {
            (Some(m), Some(p)) if !m.is_zero() => {
                Some(m.increment_coeffs(&grid, p, cfg.dt, n as u64))
            }
            _ => None,
        };
        u = stepper.step(&u, inc.as_deref());
        let t = (n + 1) as f64 * cfg.dt;
        let field = GridField::spectral(grid.clone(), u.clone()).into_physical();
        let sup = field.sup_norm();
        if !field.is_finite() || !sup.is_finite() || sup > cfg.blowup_threshold {
            traj.terminated_early = Some(BlowUpRecord { time: t, step: n + 1, sup_norm: sup });
            log::info!("trajectory left the sup-norm guard at t = {t}");
            break;
        }
        if (n + 1) % cfg.snapshot_stride == 0 || n + 1 == n_steps {
            traj.push(t, field);
        }
    }
    Ok(traj)
}

/// Deterministic run with `Etd1` or `Etd4`.
pub fn evolve_deterministic(u0: &GridField, set: &CoefficientSet, cfg: &StepConfig) -> Result<Trajectory> {
    if cfg.scheme == Scheme::StochEulerMild {
        return Err(Error::Usage("evolve_deterministic needs etd1 or etd4".into()));
    }
    run(u0, set, None, cfg)
}

/// Stochastic mild-Euler run driven by `model`.
pub fn evolve_stochastic(
    u0: &GridField,
    set: &CoefficientSet,
    model: &NoiseModel,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    if cfg.scheme != Scheme::StochEulerMild {
        return Err(Error::Usage("evolve_stochastic needs the stoch-euler-mild scheme".into()));
    }
    model.validate()?;
    run(u0, set, Some(model), cfg)
}

/// Runs either flavour according to `cfg.scheme`.
pub fn evolve(
    u0: &GridField,
    set: &CoefficientSet,
    model: &NoiseModel,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    match cfg.scheme {
        Scheme::StochEulerMild => evolve_stochastic(u0, set, model, cfg),
        _ => evolve_deterministic(u0, set, cfg),
    }
}
