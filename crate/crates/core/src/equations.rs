//! Coefficient sets and right-hand sides of the KdV family.
//!
//! Every equation handled here has the form
//!
//! ```text
//! eta_t = -[ c_ux eta_x + c_uux eta eta_x + c_u3x eta_3x + c_u2ux eta^2 eta_x
//!          + c_uxu2x eta_x eta_2x + c_uu3x eta eta_3x + c_u5x eta_5x ]
//! ```
//!
//! Each coefficient is a rational number times a fixed monomial in the
//! small parameters: `1` for `c_ux`, `alpha` for `c_uux`, `beta` for
//! `c_u3x`, `alpha^2` for `c_u2ux`, `alpha beta` for the two mixed terms and
//! `beta^2` for `c_u5x`. Keeping the rational part separate lets the presets
//! and the near-identity algebra be compared exactly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{zero_aliased, Grid, GridField, SpectralMultiplier};

pub type Rational = Ratio<i64>;

fn r(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

/// Rational parts of the seven coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalTable {
    pub ux: Rational,
    pub uux: Rational,
    pub u3x: Rational,
    pub u2ux: Rational,
    pub uxu2x: Rational,
    pub uu3x: Rational,
    pub u5x: Rational,
}

impl RationalTable {
    pub fn zero() -> Self {
        let z = r(0, 1);
        Self { ux: z, uux: z, u3x: z, u2ux: z, uxu2x: z, uu3x: z, u5x: z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "kdv")]
    Kdv,
    #[serde(rename = "kdv2-full")]
    Kdv2Full,
    #[serde(rename = "kdv2-moving")]
    Kdv2Moving,
    #[serde(rename = "kdv2a")]
    Kdv2a,
    #[serde(rename = "nl1")]
    Nl1,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::Kdv, Preset::Kdv2Full, Preset::Kdv2Moving, Preset::Kdv2a, Preset::Nl1];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Kdv => "kdv",
            Preset::Kdv2Full => "kdv2-full",
            Preset::Kdv2Moving => "kdv2-moving",
            Preset::Kdv2a => "kdv2a",
            Preset::Nl1 => "nl1",
        }
    }

    pub fn table(self) -> RationalTable {
        let mut t = RationalTable::zero();
        match self {
            Preset::Kdv => {
                t.ux = r(1, 1);
                t.uux = r(3, 2);
                t.u3x = r(1, 6);
            }
            Preset::Kdv2Moving | Preset::Kdv2Full => {
                t.uux = r(3, 2);
                t.u3x = r(1, 6);
                t.u2ux = r(-3, 8);
                t.uxu2x = r(23, 24);
                t.uu3x = r(5, 12);
                if self == Preset::Kdv2Full {
                    t.ux = r(1, 1);
                    t.u5x = r(19, 360);
                }
            }
            Preset::Kdv2a => {
                t.uux = r(3, 2);
                t.u3x = r(1, 6);
                t.uxu2x = r(5, 12) * 2;
                t.uu3x = r(5, 12);
            }
            Preset::Nl1 => {
                t.u3x = r(1, 1);
                t.uux = r(1, 1);
                t.uu3x = r(1, 1);
                t.uxu2x = r(1, 1);
            }
        }
        t
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown preset `{s}` (expected one of kdv, kdv2-full, kdv2-moving, kdv2a, nl1)"
                ))
            })
    }
}

/// Floating-point coefficients actually used by the evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub c_ux: f64,
    pub c_uux: f64,
    pub c_u3x: f64,
    pub c_u2ux: f64,
    pub c_uxu2x: f64,
    pub c_uu3x: f64,
    pub c_u5x: f64,
}

impl Coefficients {
    pub fn has_nonlinearity(&self) -> bool {
        self.c_uux != 0.0 || self.c_u2ux != 0.0 || self.c_uxu2x != 0.0 || self.c_uu3x != 0.0
    }
}

/// Coefficients of one evolution equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub table: RationalTable,
    pub alpha: f64,
    pub beta: f64,
    /// Whether the `eta_5x` term is active. Off by default.
    pub fifth_order: bool,
    pub preset: Option<Preset>,
}

impl CoefficientSet {
    /// Builds a named preset. The `nl1` preset ignores `alpha` and `beta`
    /// and uses unit values.
    pub fn preset(preset: Preset, alpha: f64, beta: f64) -> Result<Self> {
        let (alpha, beta) = match preset {
            Preset::Nl1 => (1.0, 1.0),
            _ => {
                if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::Usage(format!(
                        "alpha and beta must be finite and nonnegative, got {alpha}, {beta}"
                    )));
                }
                (alpha, beta)
            }
        };
        Ok(Self { table: preset.table(), alpha, beta, fifth_order: false, preset: Some(preset) })
    }

    pub fn custom(table: RationalTable, alpha: f64, beta: f64) -> Self {
        Self { table, alpha, beta, fifth_order: false, preset: None }
    }

    /// `u_t + 6 u u_x + u_3x = 0`, the classical normalization whose
    /// traveling wave is [`soliton`].
    pub fn kdv0() -> Self {
        let mut t = RationalTable::zero();
        t.uux = r(6, 1);
        t.u3x = r(1, 1);
        Self::custom(t, 1.0, 1.0)
    }

    pub fn with_fifth_order(mut self, on: bool) -> Self {
        self.fifth_order = on;
        self
    }

    pub fn values(&self) -> Coefficients {
        let f = |q: Rational| *q.numer() as f64 / *q.denom() as f64;
        let (a, b) = (self.alpha, self.beta);
        Coefficients {
            c_ux: f(self.table.ux),
            c_uux: f(self.table.uux) * a,
            c_u3x: f(self.table.u3x) * b,
            c_u2ux: f(self.table.u2ux) * a * a,
            c_uxu2x: f(self.table.uxu2x) * a * b,
            c_uu3x: f(self.table.uu3x) * a * b,
            c_u5x: if self.fifth_order { f(self.table.u5x) * b * b } else { 0.0 },
        }
    }

    /// Copy with every nonlinear coefficient removed.
    pub fn linear_only(&self) -> Self {
        let mut s = *self;
        s.table.uux = r(0, 1);
        s.table.u2ux = r(0, 1);
        s.table.uxu2x = r(0, 1);
        s.table.uu3x = r(0, 1);
        s.preset = None;
        s
    }
}

/// Per-mode generator `lambda(k)` of the linear part, so the linear flow is
/// `c_hat(t) = exp(lambda t) c_hat(0)`.
pub fn linear_generator(grid: &Grid, coeffs: &Coefficients) -> Vec<Complex64> {
    grid.odd_wavenumbers()
        .iter()
        .map(|&k| {
            // (ik) = ik, (ik)^3 = -ik^3, (ik)^5 = ik^5
            let odd = coeffs.c_ux * k - coeffs.c_u3x * k * k * k + coeffs.c_u5x * k.powi(5);
            Complex64::new(0.0, -odd)
        })
        .collect()
}

/// Precomputed evaluator for one grid and coefficient set.
#[derive(Debug, Clone)]
pub struct RhsEvaluator {
    grid: Grid,
    coeffs: Coefficients,
    generator: Vec<Complex64>,
    d1: SpectralMultiplier,
    d2: SpectralMultiplier,
    d3: SpectralMultiplier,
}

impl RhsEvaluator {
    pub fn new(grid: &Grid, set: &CoefficientSet) -> Self {
        let coeffs = set.values();
        Self {
            grid: grid.clone(),
            coeffs,
            generator: linear_generator(grid, &coeffs),
            d1: SpectralMultiplier::derivative(grid, 1),
            d2: SpectralMultiplier::derivative(grid, 2),
            d3: SpectralMultiplier::derivative(grid, 3),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn generator(&self) -> &[Complex64] {
        &self.generator
    }

    pub fn linear_coeffs(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        u_hat.iter().zip(&self.generator).map(|(c, l)| c * l).collect()
    }

    /// Dealiased spectral coefficients of the nonlinear part of `u_t`.
    pub fn nonlinear_coeffs(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let c = &self.coeffs;
        if !c.has_nonlinearity() {
            return vec![Complex64::new(0.0, 0.0); n];
        }
        let g = &self.grid;
        let u = g.inverse(u_hat);
        let ux = g.inverse(&self.d1.apply_coeffs(u_hat));
        let needs_2x = c.c_uxu2x != 0.0;
        let needs_3x = c.c_uu3x != 0.0;
        let u2x = if needs_2x { g.inverse(&self.d2.apply_coeffs(u_hat)) } else { Vec::new() };
        let u3x = if needs_3x { g.inverse(&self.d3.apply_coeffs(u_hat)) } else { Vec::new() };

        let mut pointwise = vec![0.0; n];
        for m in 0..n {
            let mut s = c.c_uux * u[m] * ux[m];
            if needs_2x {
                s += c.c_uxu2x * ux[m] * u2x[m];
            }
            if needs_3x {
                s += c.c_uu3x * u[m] * u3x[m];
            }
            pointwise[m] = -s;
        }
        let mut out = g.forward(&pointwise);
        zero_aliased(g, &mut out);

        if c.c_u2ux != 0.0 {
            // eta^2 eta_x = (eta^3 / 3)_x, built from two dealiased products
            let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
            let mut sq_hat = g.forward(&sq);
            zero_aliased(g, &mut sq_hat);
            let sq = g.inverse(&sq_hat);
            let cube: Vec<f64> = sq.iter().zip(&u).map(|(a, b)| a * b).collect();
            let mut cube_hat = g.forward(&cube);
            zero_aliased(g, &mut cube_hat);
            let flux = self.d1.apply_coeffs(&cube_hat);
            let w = -c.c_u2ux / 3.0;
            for (o, f) in out.iter_mut().zip(&flux) {
                *o += f * w;
            }
        }
        // every term is an exact derivative, so the mean mode is untouched
        out[0] = Complex64::new(0.0, 0.0);
        out
    }

    pub fn rhs_coeffs(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.nonlinear_coeffs(u_hat);
        for ((o, c), l) in out.iter_mut().zip(u_hat).zip(&self.generator) {
            *o += c * l;
        }
        out
    }
}

fn check_finite(f: GridField, time: f64) -> Result<GridField> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::BlowUp { time, reason: "non-finite right-hand side".into() })
    }
}

fn require_physical(f: &GridField, op: &str) -> Result<()> {
    if f.values().is_none() {
        return Err(Error::Usage(format!("{op} expects a physical field")));
    }
    Ok(())
}

/// `eta_t` for the given equation, evaluated at time stamp `time`.
pub fn rhs_at(f: &GridField, set: &CoefficientSet, time: f64) -> Result<GridField> {
    require_physical(f, "rhs")?;
    let ev = RhsEvaluator::new(f.grid(), set);
    let c = ev.rhs_coeffs(&f.spectral_coefficients());
    check_finite(GridField::spectral(f.grid().clone(), c).into_physical(), time)
}

pub fn rhs(f: &GridField, set: &CoefficientSet) -> Result<GridField> {
    rhs_at(f, set, 0.0)
}

/// The `c_ux`, `c_u3x` and `c_u5x` terms of `eta_t`.
pub fn linear_part(f: &GridField, set: &CoefficientSet) -> Result<GridField> {
    require_physical(f, "linear_part")?;
    let ev = RhsEvaluator::new(f.grid(), set);
    let c = ev.linear_coeffs(&f.spectral_coefficients());
    check_finite(GridField::spectral(f.grid().clone(), c).into_physical(), 0.0)
}

/// The nonlinear terms of `eta_t`.
pub fn nonlinear_part(f: &GridField, set: &CoefficientSet) -> Result<GridField> {
    require_physical(f, "nonlinear_part")?;
    let ev = RhsEvaluator::new(f.grid(), set);
    let c = ev.nonlinear_coeffs(&f.spectral_coefficients());
    check_finite(GridField::spectral(f.grid().clone(), c).into_physical(), 0.0)
}

/// Signed distance from `x0` to `x` on the periodic domain.
pub fn periodic_offset(x: f64, x0: f64, length: f64) -> f64 {
    (x - x0 + 0.5 * length).rem_euclid(length) - 0.5 * length
}

/// Traveling wave of `u_t + 6 u u_x + u_3x = 0` with speed `c`:
/// `u = (c/2) sech^2(sqrt(c) (x - x0) / 2)`.
pub fn soliton(grid: &Grid, c: f64, x0: f64) -> Result<GridField> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Usage(format!("soliton speed must be positive, got {c}")));
    }
    let width = 2.0 / c.sqrt();
    if width >= grid.length() / 8.0 {
        log::warn!(
            "soliton width {width:.3} is not small against L = {:.3}; periodic images overlap",
            grid.length()
        );
    }
    let l = grid.length();
    Ok(grid.sample(|x| {
        let s = 1.0 / (0.5 * c.sqrt() * periodic_offset(x, x0, l)).cosh();
        0.5 * c * s * s
    }))
}
