use std::f64::consts::PI;

use proptest::prelude::*;
use scatmap::model::{Pendulum, PotentialSpec, RotatorSpec, Sign};
use scatmap::verify::{
    gronwall_experiment, identity_suite, integrator_order, order_fit, selftest, CheckRecord,
    GronwallConfig, Report, SuiteConfig, REPORT_SCHEMA,
};
use scatmap::{Error, ExtendedState, PerturbationField, SystemSpec};

proptest! {
    #[test]
    fn order_fit_recovers_power_laws(slope in 0.5f64..3.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = [1e-2, 3e-3, 1e-3, 3e-4].iter().map(|&e: &f64| (e, c * e.powf(slope))).collect();
        let fit = order_fit(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }
}

#[test]
fn order_fit_needs_two_usable_points() {
    assert!(order_fit(&[(1e-2, 1e-4)]).is_err());
    assert!(order_fit(&[(1e-2, 0.0), (1e-3, 0.0)]).is_err());
}

fn damping_setup() -> (SystemSpec, PerturbationField, ExtendedState) {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let field = PerturbationField::dissipation(1, 1, 1.0, 1.0);
    let z0 = ExtendedState::new(&[0.1], &[0.3], &[0.4], &[0.0], 0.0).unwrap();
    (spec, field, z0)
}

#[test]
fn damped_orbits_stay_within_the_gronwall_bound() {
    let (spec, field, z0) = damping_setup();
    let cfg = GronwallConfig::default();
    let mut pts = Vec::new();
    for eps in [1e-2, 3e-3, 1e-3, 3e-4] {
        let r = gronwall_experiment(&spec, &field, &z0, eps, &cfg).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.horizon - cfg.k * (1.0 / eps).ln()).abs() < 1e-12);
        pts.push((eps, r.max_deviation));
    }
    assert!(order_fit(&pts).unwrap().slope >= cfg.rho0);
}

#[test]
fn gronwall_constants_are_validated() {
    let (spec, field, z0) = damping_setup();
    let long = GronwallConfig {
        k: 0.9,
        ..GronwallConfig::default()
    };
    assert!(matches!(
        gronwall_experiment(&spec, &field, &z0, 1e-3, &long),
        Err(Error::InvalidArgument(_))
    ));
    let r = gronwall_experiment(&spec, &field, &z0, 0.0, &GronwallConfig::default()).unwrap();
    assert_eq!(r.max_deviation, 0.0);
}

#[test]
fn integrator_is_high_order() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    assert!(integrator_order(&spec).unwrap() >= 6.5);
}

#[test]
fn selftest_passes_on_admissible_systems() {
    for spec in [
        SystemSpec::standard(1, 1, Sign::Plus),
        SystemSpec::standard(2, 2, Sign::Minus),
    ] {
        let r = selftest(&spec, &SuiteConfig::default());
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.schema, REPORT_SCHEMA);
        for id in [
            "energy_conservation",
            "action_conservation",
            "chart_determinant",
            "integrator_order",
        ] {
            assert!(r.get(id).is_some_and(|c| c.pass), "{id}");
        }
    }
}

#[test]
fn suite_flags_a_potential_without_a_saddle() {
    // V''(0) = +1: the origin is a centre and the separatrix does not exist.
    let centre = PotentialSpec::trig(vec![-1.0 / (4.0 * PI * PI)], vec![0.0]);
    let spec = SystemSpec::new_unchecked(
        RotatorSpec::standard(1),
        vec![Pendulum::new(centre, Sign::Plus)],
    )
    .unwrap();
    let r = identity_suite(&spec, &SuiteConfig::default());
    assert!(!r.pass);
    for id in ["rates", "sigma0_identity", "separatrix_residual"] {
        let c = r.get(id).unwrap();
        assert!(!c.pass && c.note.is_some(), "{id}: {c:?}");
    }
}

#[test]
fn reports_serialise_and_aggregate() {
    let mut r = Report::new();
    r.push(CheckRecord::at_most(
        "small",
        serde_json::json!({}),
        1e-12,
        1e-9,
    ));
    assert!(r.pass);
    r.push(CheckRecord::at_least("order", serde_json::json!({}), 5.0, 6.5).with_note("too low"));
    assert!(!r.pass);
    assert_eq!(r.failures().count(), 1);
    let back: Report = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
