//! Near-identity transformation `eta = eta' + s (alpha a eta'^2 + beta b eta'_xx)`
//! between the second-order KdV equation in the moving frame and its
//! integrable equivalent.

use rayon::prelude::*;
use serde::Serialize;

use crate::equations::{CoefficientSet, Preset, Rational, RationalTable};
use crate::error::{Error, Result};
use crate::integrators::{evolve_deterministic, Scheme, StepConfig};
use crate::spectral::{dealiased_product, derivative, GridField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitParams {
    pub a: Rational,
    pub b: Rational,
    /// `+1` or `-1`.
    pub sign: i8,
    pub alpha: f64,
    pub beta: f64,
}

impl NitParams {
    /// `a = 1/4`, `b = 1/8`, sign `+`.
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { a: Rational::new(1, 4), b: Rational::new(1, 8), sign: 1, alpha, beta }
    }

    pub fn with_ab(mut self, a: Rational, b: Rational) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_sign(mut self, sign: i8) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::Usage(format!("NIT sign must be +1 or -1, got {}", self.sign)));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::Usage("NIT alpha and beta must be finite".into()));
        }
        Ok(())
    }

    fn signed(&self) -> (Rational, Rational) {
        let s = Rational::from_integer(self.sign as i64);
        (self.a * s, self.b * s)
    }
}

fn as_f64(q: Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `f + s (alpha a f^2 + beta b f_xx)` with `s = +1` forward, `-1` inverse.
fn apply(f: &GridField, p: &NitParams, direction: f64) -> GridField {
    let f = f.clone().into_physical();
    let s = p.sign as f64 * direction;
    let ca = s * p.alpha * as_f64(p.a);
    let cb = s * p.beta * as_f64(p.b);
    let mut out = f.clone();
    if ca != 0.0 {
        out = out.axpby(1.0, &dealiased_product(&f, &f), ca);
    }
    if cb != 0.0 {
        let fxx = derivative(&f, 2).expect("order 2 is valid").into_physical();
        out = out.axpby(1.0, &fxx, cb);
    }
    out
}

/// `eta = eta' + s (alpha a eta'^2 + beta b eta'_xx)`.
pub fn nit_forward(f: &GridField, p: &NitParams) -> GridField {
    apply(f, p, 1.0)
}

/// First-order inverse `eta' = eta - s (alpha a eta^2 + beta b eta_xx)`.
pub fn nit_inverse(f: &GridField, p: &NitParams) -> GridField {
    apply(f, p, -1.0)
}

/// Coefficients of the transformed equation, in exact arithmetic.
///
/// Only the `eta^2 eta_x` and `eta_x eta_2x` coefficients change:
/// `-3/8 + (3/2) a` and `23/24 + a - 3 b`. The `beta^2 b eta_5x` term the
/// substitution also produces is of the neglected order and dropped.
pub fn transformed_coefficients(p: &NitParams, source: &CoefficientSet) -> Result<CoefficientSet> {
    p.validate()?;
    let moving = Preset::Kdv2Moving.table();
    let full = Preset::Kdv2Full.table();
    if source.table != moving && source.table != full {
        return Err(Error::Usage(
            "the near-identity transformation applies to the kdv2-moving (or kdv2-full) equation".into(),
        ));
    }
    let (a, b) = p.signed();
    let mut t = source.table;
    t.u2ux = moving.u2ux + Rational::new(3, 2) * a;
    t.uxu2x = moving.uxu2x + a - Rational::from_integer(3) * b;
    let preset = Preset::ALL.into_iter().find(|q| q.table() == t);
    Ok(CoefficientSet { table: t, alpha: p.alpha, beta: p.beta, fifth_order: source.fifth_order, preset })
}

/// Exact `(a, b)` that remove the cubic term and set the mixed coefficient
/// to twice the `eta eta_3x` one.
pub fn integrable_choice() -> (Rational, Rational) {
    let moving: RationalTable = Preset::Kdv2Moving.table();
    // -3/8 + 3a/2 = 0
    let a = -moving.u2ux * Rational::new(2, 3);
    // 23/24 + a - 3b = 2 * (5/12)
    let b = (moving.uxu2x + a - moving.uu3x * 2) / 3;
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub alpha: f64,
    pub beta: f64,
    pub error_sup: f64,
}

/// Least-squares slope of `log y` against `log x`; pairs with a
/// nonpositive entry are skipped. `None` with fewer than two usable pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// For each `alpha` (with `beta = alpha`): evolve `u0` under kdv2-moving and
/// `nit_inverse(u0)` under kdv2a, then compare the first with the forward
/// transform of the second at `t_final`.
pub fn equivalence_experiment(
    u0: &GridField,
    alphas: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Vec<EquivalenceRow>> {
    let cfg = StepConfig::new(dt, t_final, Scheme::Etd4).with_stride(usize::MAX);
    cfg.validate()?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let beta = alpha;
            let p = NitParams::new(alpha, beta);
            let source = CoefficientSet::preset(Preset::Kdv2Moving, alpha, beta)?;
            let target = transformed_coefficients(&p, &source)?;
            let eta = evolve_deterministic(u0, &source, &cfg)?;
            let eta_p = evolve_deterministic(&nit_inverse(u0, &p), &target, &cfg)?;
            for t in [&eta, &eta_p] {
                if let Some(rec) = t.terminated_early {
                    return Err(Error::BlowUp {
                        time: rec.time,
                        reason: format!("equivalence run at alpha = {alpha} left the sup-norm guard"),
                    });
                }
            }
            let mapped = nit_forward(eta_p.last().expect("nonempty"), &p);
            let error_sup = eta.last().expect("nonempty").sub(&mapped).sup_norm();
            Ok(EquivalenceRow { alpha, beta, error_sup })
        })
        .collect()
}
