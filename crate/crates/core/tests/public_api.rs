use std::f64::consts::PI;

use contact_hj::diagnostics::{fit_rate, RateKind};
use contact_hj::evolve::{check_semigroup_props, evolve_to, EvolveConfig, Scheme};
use contact_hj::flow::{energy_profile, integrate, FlowState};
use contact_hj::jets::{default_corner_tol, extract_jets, hausdorff};
use contact_hj::models::{shared, Mechanical, Shifted};
use contact_hj::stationary::{solve_discounted, solve_longtime, DiscountedParams};
use contact_hj::{ContactModel, GridFn, LabError, TorusGrid};
use proptest::prelude::*;

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(n).unwrap()
}

fn trig(g: TorusGrid, c: &[f64]) -> GridFn {
    GridFn::from_fn(g, |x| {
        c.iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * PI * (k + 1) as f64 * x).sin())
            .sum()
    })
}

#[test]
fn csv_round_trip_is_exact() {
    let f = trig(grid(64), &[0.7, -0.2, 1e-7]);
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let back = GridFn::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, f);
}

#[test]
fn csv_rejects_off_grid_nodes() {
    let text = "x,value\n0,1\n0.3,2\n0.5,3\n0.75,4\n";
    assert!(GridFn::read_csv(text.as_bytes()).is_err());
    let bad_header = "u,value\n0,1\n";
    assert!(GridFn::read_csv(bad_header.as_bytes()).is_err());
}

#[test]
fn quad_decays_to_zero_like_exp_minus_t() {
    let g = grid(128);
    let phi = GridFn::constant(g, 1.0);
    let m = Mechanical::quad(1.0);
    let cfg = EvolveConfig::new(Scheme::LaxFriedrichs);
    let series: Vec<(f64, f64)> = [1.0, 2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|&t| (t, evolve_to(&m, &phi, t, &cfg).unwrap().sup_norm()))
        .collect();
    for &(t, e) in &series {
        assert!((e - (-t).exp()).abs() < 1e-3, "t = {t}: {e}");
    }
    let fit = fit_rate(&series, (0.5, 5.5), Some(RateKind::Exponential)).unwrap();
    assert!((fit.exponent + 1.0).abs() < 0.02, "{fit:?}");
}

#[test]
fn shifting_h_shifts_the_stationary_solution() {
    // for H = u + p^2/2 + c the stationary solution is u = -c
    let g = grid(64);
    let c = 0.4;
    let m = Shifted::new(shared(Mechanical::quad(1.0)), c);
    assert_eq!(m.h(0.1, 0.2, 0.3), Mechanical::quad(1.0).h(0.1, 0.2, 0.3) + c);
    let cfg = EvolveConfig::new(Scheme::LaxFriedrichs);
    let res = solve_longtime(&m, &GridFn::constant(g, 0.0), &cfg, 1e-9, 100.0).unwrap();
    assert!(res.u_minus.values().iter().all(|v| (v + c).abs() < 1e-8));
}

#[test]
fn discounted_and_longtime_agree_on_mechanical() {
    let g = grid(128);
    let m = Mechanical::mechanical(1.0, 0.3);
    let bellman = solve_discounted(&m, g, &DiscountedParams::default()).unwrap();
    let cfg = EvolveConfig::new(Scheme::SemiLagrangian);
    let long = solve_longtime(&m, &GridFn::constant(g, 0.0), &cfg, 1e-9, 200.0).unwrap();
    let gap = bellman.u_minus.sup_dist(&long.u_minus).unwrap();
    assert!(gap < 10.0 * g.h(), "gap {gap}");
}

#[test]
fn longtime_reports_non_convergence() {
    let g = grid(64);
    let m = Mechanical::mechanical(1.0, 0.3);
    let cfg = EvolveConfig::new(Scheme::LaxFriedrichs);
    let err = solve_longtime(&m, &trig(g, &[1.0]), &cfg, 1e-14, 2.0).unwrap_err();
    assert!(matches!(err, LabError::NotConverged { .. }), "{err}");
}

#[test]
fn quad_energy_decays_exactly() {
    let m = Mechanical::quad(1.0);
    let traj = integrate(&m, FlowState::new(0.25, 0.0, 1.0), (0.0, 5.0), 1e-3).unwrap();
    let prof = energy_profile(&m, &traj, 1e-8);
    assert!(prof.sandwich_ok());
    for &(t, e) in &prof.series {
        assert!((e - 0.5 * (-t).exp()).abs() < 1e-9);
    }
}

#[test]
fn jets_of_smooth_functions_are_close_for_close_data() {
    let g = grid(256);
    let a = trig(g, &[0.5]);
    let b = trig(g, &[0.5 + 1e-3]);
    let ja = extract_jets(&a, default_corner_tol(&a));
    let jb = extract_jets(&b, default_corner_tol(&b));
    let d = hausdorff(&ja, &jb).unwrap();
    // slopes differ by 2 pi * 1e-3 at most, values by 1e-3
    assert!(d > 0.0 && d < 1e-2, "{d}");
    assert_eq!(hausdorff(&ja, &ja).unwrap(), 0.0);
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lf_step_is_monotone_and_contracts(a in coeffs(), b in coeffs(), lift in 0.0..0.5f64) {
        let g = grid(64);
        let phi = trig(g, &a);
        let psi = trig(g, &b).map(|_, v| v.max(phi.max()) + lift).unwrap();
        let m = Mechanical::mechanical(1.0, 0.3);
        let rep = check_semigroup_props(&m, &phi, &psi, 0.5, &EvolveConfig::new(Scheme::LaxFriedrichs)).unwrap();
        prop_assert!(rep.ordered);
        prop_assert!(rep.monotone());
        prop_assert!(rep.nonexpansive());
        prop_assert!(rep.contraction_ratio() <= (-0.5f64).exp() + 5.0 * g.h());
        prop_assert!(rep.composition_residual < 1e-12);
    }

    #[test]
    fn adding_constants_commutes_for_quad(a in coeffs(), k in -2.0..2.0f64) {
        // T_t(phi + k) = T_t(phi) + k e^{-t} when H = u + p^2/2
        let g = grid(64);
        let phi = trig(g, &a);
        let lifted = phi.map(|_, v| v + k).unwrap();
        let m = Mechanical::quad(1.0);
        let cfg = EvolveConfig::new(Scheme::LaxFriedrichs).with_dt(0.5 / 3200.0).with_dissipation(40.0);
        let t = 0.5;
        let base = evolve_to(&m, &phi, t, &cfg).unwrap();
        let up = evolve_to(&m, &lifted, t, &cfg).unwrap();
        let shift = up.values().iter().zip(base.values()).map(|(u, b)| u - b);
        // the discrete scheme decays constants at rate (1 - dt)^steps
        let expected = k * (1.0f64 - 0.5 / 3200.0).powi(3200);
        for s in shift {
            prop_assert!((s - expected).abs() < 1e-10, "{} vs {}", s, expected);
        }
    }
}
