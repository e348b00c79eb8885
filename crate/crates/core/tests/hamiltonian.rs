mod common;

use std::f64::consts::PI;

use common::{max_abs_diff, smooth_field, sup, two_pi_grid};
use kdv2_core::equations::{periodic_offset, rhs, CoefficientSet, Preset};
use kdv2_core::hamiltonian::{
    hamiltonian, hamiltonian_density, hamiltonian_flow_rhs, invariant_report, variational_derivative,
};
use kdv2_core::integrators::{evolve_deterministic, Scheme, StepConfig};
use kdv2_core::spectral::{Grid, GridField};
use kdv2_core::trajectory::Trajectory;
use proptest::prelude::*;

fn relative_flow_error(f: &GridField, alpha: f64, beta: f64) -> f64 {
    let set = CoefficientSet::preset(Preset::Kdv2a, alpha, beta).unwrap();
    let r = rhs(f, &set).unwrap().physical_values();
    let h = hamiltonian_flow_rhs(f, alpha, beta).physical_values();
    max_abs_diff(&h, &r) / sup(&r)
}

#[test]
fn hamiltonian_flow_is_kdv2a_on_random_fields() {
    let g = Grid::new(256, 20.0).unwrap();
    for seed in 0..50 {
        let f = smooth_field(&g, 32, 1.0, 0.5, 1000 + seed);
        let e = relative_flow_error(&f, 0.2, 0.3);
        assert!(e <= 1e-10, "seed {seed}: {e}");
    }
}

#[test]
fn hamiltonian_flow_of_a_sine() {
    let g = two_pi_grid(64);
    let e = relative_flow_error(&g.sample(f64::sin), 0.5, 0.5);
    assert!(e <= 1e-10, "{e}");
}

#[test]
fn closed_form_values() {
    let g = two_pi_grid(8192);
    let beta = 0.4;
    let h = hamiltonian(&g.sample(f64::cos), 0.3, beta);
    assert!((h - PI * beta / 12.0).abs() < 1e-12, "{h}");

    let c = GridField::constant(Grid::new(32, 3.0).unwrap(), -0.7);
    let d = hamiltonian_density(&c, 0.3, 0.2).physical_values();
    assert!(d.iter().all(|v| (v + 0.25 * 0.3 * (-0.7f64).powi(3)).abs() < 1e-15));
    let vd = variational_derivative(&c, 0.3, 0.2).physical_values();
    assert!(vd.iter().all(|v| (v + 0.75 * 0.3 * 0.49).abs() < 1e-15));
    assert_eq!(hamiltonian_flow_rhs(&GridField::zeros(two_pi_grid(16)), 1.0, 1.0).sup_norm(), 0.0);
}

#[test]
fn gateaux_derivative() {
    // fields limited to N/6 keep all dealiased cubic products exact
    let g = Grid::new(128, 2.0 * PI).unwrap();
    let (alpha, beta) = (0.4, 0.3);
    for seed in 0..5 {
        let f = smooth_field(&g, 10, 1.0, 0.5, seed);
        let dir = smooth_field(&g, 10, 1.0, 0.5, 100 + seed);
        let exact = g.integrate(
            &variational_derivative(&f, alpha, beta)
                .physical_values()
                .iter()
                .zip(dir.physical_values())
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
        let mut errs = Vec::new();
        for eps in [1e-3, 1e-4] {
            let hp = hamiltonian(&f.axpby(1.0, &dir, eps), alpha, beta);
            let hm = hamiltonian(&f.axpby(1.0, &dir, -eps), alpha, beta);
            errs.push(((hp - hm) / (2.0 * eps) - exact).abs());
        }
        let scale = exact.abs().max(1.0);
        assert!(errs[0] <= 10.0 * 1e-6 * scale, "{errs:?}");
        assert!(errs[1] <= 10.0 * 1e-8 * scale, "{errs:?}");
    }
}

#[test]
fn invariants_along_kdv2a() {
    let l = 40.0;
    let g = Grid::new(256, l).unwrap();
    let u0 = g.sample(|x| (-(periodic_offset(x, l / 2.0, l) / 2.0).powi(2)).exp());
    let (alpha, beta) = (0.1, 0.1);
    let set = CoefficientSet::preset(Preset::Kdv2a, alpha, beta).unwrap();
    let cfg = StepConfig::new(1e-3, 10.0, Scheme::Etd4).with_stride(1000);
    let traj = evolve_deterministic(&u0, &set, &cfg).unwrap();
    let rep = invariant_report(&traj, alpha, beta).unwrap();
    assert_eq!(rep.len(), 11);
    assert_eq!((rep[0].mass_drift, rep[0].l2_drift, rep[0].h_drift), (0.0, 0.0, 0.0));
    let last = rep.last().unwrap();
    assert!((last.t - 10.0).abs() < 1e-9);
    assert!(last.h_drift.abs() <= 1e-6, "{}", last.h_drift);
    assert!(last.mass_drift.abs() <= 1e-12);

    // the same functional is not conserved by the moving-frame equation; its
    // drift is only required to be finite
    let moving = CoefficientSet::preset(Preset::Kdv2Moving, alpha, beta).unwrap();
    let traj = evolve_deterministic(&u0, &moving, &cfg).unwrap();
    let rep = invariant_report(&traj, alpha, beta).unwrap();
    assert!(rep.iter().all(|r| r.h_drift.is_finite() && r.l2_drift.is_finite()));
}

#[test]
fn report_of_a_constant_trajectory() {
    let g = Grid::new(64, 10.0).unwrap();
    let f = smooth_field(&g, 10, 1.0, 1.0, 3);
    let rep = invariant_report(&Trajectory::constant(f.clone(), 2.0), 0.1, 0.1).unwrap();
    for r in &rep {
        assert_eq!((r.mass_drift, r.l2_drift, r.h_drift), (0.0, 0.0, 0.0));
    }
    let sq = f.l2_norm().powi(2);
    assert!((rep[0].l2 - sq).abs() < 1e-14 * sq);
    let empty = Trajectory { times: vec![], snapshots: vec![], diagnostics: vec![], terminated_early: None };
    assert!(invariant_report(&empty, 0.1, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_consistency_for_any_parameters(seed in any::<u64>(), alpha in 0.0f64..1.0, beta in 0.0f64..1.0) {
        let g = Grid::new(256, 30.0).unwrap();
        let f = smooth_field(&g, 40, 1.0, 1.0, seed);
        let set = CoefficientSet::preset(Preset::Kdv2a, alpha, beta).unwrap();
        let r = rhs(&f, &set).unwrap().physical_values();
        let h = hamiltonian_flow_rhs(&f, alpha, beta).physical_values();
        prop_assert!(max_abs_diff(&h, &r) <= 1e-10 * sup(&r).max(1e-300));
    }
}
