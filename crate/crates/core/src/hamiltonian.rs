//! Hamiltonian structure of the integrable second-order equation,
//! `eta_t = d/dx (dH/d eta)` with
//! `H = int -(1/4) alpha eta^3 + (1/12) beta eta_x^2 + (5/24) alpha beta eta eta_x^2 dx`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{derivative, zero_aliased, GridField};
use crate::trajectory::Trajectory;

fn dealiased(f: &GridField, values: Vec<f64>) -> GridField {
    let g = f.grid();
    let mut c = g.forward(&values);
    zero_aliased(g, &mut c);
    GridField::physical(g.clone(), g.inverse(&c))
}

fn d(f: &GridField, order: u32) -> Vec<f64> {
    derivative(f, order).expect("positive order").physical_values()
}

/// Pointwise density, products dealiased.
pub fn hamiltonian_density(f: &GridField, alpha: f64, beta: f64) -> GridField {
    let u = f.physical_values();
    let ux = d(f, 1);
    let vals = u
        .iter()
        .zip(&ux)
        .map(|(&u, &ux)| -0.25 * alpha * u * u * u + beta / 12.0 * ux * ux + 5.0 / 24.0 * alpha * beta * u * ux * ux)
        .collect();
    dealiased(f, vals)
}

/// `H = int density dx`.
pub fn hamiltonian(f: &GridField, alpha: f64, beta: f64) -> f64 {
    hamiltonian_density(f, alpha, beta).integral()
}

/// `-(3/4) a eta^2 - (1/6) b eta_2x - (5/24) a b eta_x^2 - (5/12) a b eta eta_2x`.
pub fn variational_derivative(f: &GridField, alpha: f64, beta: f64) -> GridField {
    let u = f.physical_values();
    let ux = d(f, 1);
    let uxx = d(f, 2);
    let ab = alpha * beta;
    let vals = (0..u.len())
        .map(|j| {
            -0.75 * alpha * u[j] * u[j] - beta / 6.0 * uxx[j] - 5.0 / 24.0 * ab * ux[j] * ux[j]
                - 5.0 / 12.0 * ab * u[j] * uxx[j]
        })
        .collect();
    dealiased(f, vals)
}

/// `d/dx` of the variational derivative.
pub fn hamiltonian_flow_rhs(f: &GridField, alpha: f64, beta: f64) -> GridField {
    derivative(&variational_derivative(f, alpha, beta), 1)
        .expect("positive order")
        .into_physical()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub t: f64,
    pub mass: f64,
    /// `int eta^2 dx`.
    pub l2: f64,
    pub hamiltonian: f64,
    pub mass_drift: f64,
    pub l2_drift: f64,
    pub h_drift: f64,
}

/// Relative change against `x0`; absolute when `x0 = 0`.
fn drift(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        x - x0
    } else {
        (x - x0) / x0.abs()
    }
}

/// Mass, `int eta^2` and `H` for every snapshot, with drifts against `t = 0`.
pub fn invariant_report(traj: &Trajectory, alpha: f64, beta: f64) -> Result<Vec<InvariantReport>> {
    if traj.is_empty() {
        return Err(Error::Usage("invariant report of an empty trajectory".into()));
    }
    let raw: Vec<(f64, f64, f64)> = traj
        .snapshots
        .par_iter()
        .map(|s| {
            let p = s.clone().into_physical();
            let sq = p.l2_norm();
            (p.integral(), sq * sq, hamiltonian(&p, alpha, beta))
        })
        .collect();
    let (m0, l0, h0) = raw[0];
    Ok(traj
        .times
        .iter()
        .zip(&raw)
        .map(|(&t, &(m, l, h))| InvariantReport {
            t,
            mass: m,
            l2: l,
            hamiltonian: h,
            mass_drift: drift(m, m0),
            l2_drift: drift(l, l0),
            h_drift: drift(h, h0),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn zero_and_constant_fields() {
        let g = Grid::new(32, 10.0).unwrap();
        let z = GridField::zeros(g.clone());
        assert_eq!(hamiltonian_density(&z, 0.3, 0.2).sup_norm(), 0.0);
        assert_eq!(variational_derivative(&z, 0.3, 0.2).sup_norm(), 0.0);
        assert_eq!(hamiltonian_flow_rhs(&z, 0.3, 0.2).sup_norm(), 0.0);
        let c = GridField::constant(g, 2.0);
        let dens = hamiltonian_density(&c, 0.3, 0.2);
        assert!(dens.physical_values().iter().all(|v| (v + 0.25 * 0.3 * 8.0).abs() < 1e-14));
        let vd = variational_derivative(&c, 0.3, 0.2);
        assert!(vd.physical_values().iter().all(|v| (v + 0.75 * 0.3 * 4.0).abs() < 1e-14));
    }

    #[test]
    fn cosine_hamiltonian() {
        let g = Grid::new(8192, 2.0 * PI).unwrap();
        let f = g.sample(f64::cos);
        let (a, b) = (0.7, 0.4);
        assert!((hamiltonian(&f, a, b) - PI * b / 12.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_has_no_drift() {
        let g = Grid::new(64, 20.0).unwrap();
        let f = g.sample(|x| (-(x - 10.0) * (x - 10.0)).exp());
        let r = invariant_report(&Trajectory::constant(f, 3.0), 0.1, 0.1).unwrap();
        assert_eq!(r.len(), 2);
        for row in &r {
            assert_eq!((row.mass_drift, row.l2_drift, row.h_drift), (0.0, 0.0, 0.0));
        }
    }
}
