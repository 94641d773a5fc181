use std::f64::consts::PI;

use proptest::prelude::*;
use scatmap::exprs::parse;
use scatmap::flow::{Separatrix, SeparatrixMode};
use scatmap::melnikov::{
    delta_action_first_order, delta_angle_first_order, integration_by_parts_check, melnikov,
    splitting_integral, splitting_zero, AngleDomain, HomoclinicData, QuadConfig,
};
use scatmap::model::{hamiltonian_to_field, Sign};
use scatmap::{Error, PerturbationField, SystemSpec};

fn system() -> (SystemSpec, Separatrix) {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    (spec, sep)
}

fn field(spec: &SystemSpec, h1: &str) -> PerturbationField {
    hamiltonian_to_field(spec, &parse(h1, spec.layout()).unwrap()).unwrap()
}

/// First-order action change for `H1 = cos(2 pi q) cos(2 pi theta)` with the
/// builtin cosine pendulum and `h0 = I^2 / 2`, from
/// `int sech^2(u) cos(a u) du = pi a / sinh(pi a / 2)`.
fn closed_form_delta_action(tau: f64, action: f64, angle: f64) -> f64 {
    let a = 2.0 * PI * action;
    let f = if a == 0.0 {
        2.0
    } else {
        PI * a / (0.5 * PI * a).sinh()
    };
    -4.0 * PI * (2.0 * PI * (angle - action * tau)).sin() * f
}

#[test]
fn frozen_closed_form_value() {
    assert!((closed_form_delta_action(0.37, 0.61, 0.23) - -0.019853884844450).abs() < 1e-14);
}

#[test]
fn action_change_matches_the_closed_form() {
    let (spec, sep) = system();
    let numeric = Separatrix::new(&spec, SeparatrixMode::ForceNumeric).unwrap();
    let f = field(&spec, "cos(2*pi*q) * cos(2*pi*theta)");
    let cfg = QuadConfig::with_tol(1e-12);
    for (tau, i, th) in [
        (0.37, 0.61, 0.23),
        (-1.2, 0.05, 0.8),
        (2.0, -0.4, 0.41),
        (0.0, 0.0, 0.1),
    ] {
        let h = HomoclinicData::new(&[tau], &[i], &[th], 0.3);
        let exact = closed_form_delta_action(tau, i, th);
        let got = delta_action_first_order(&spec, &sep, &f, &h, &cfg)
            .unwrap()
            .value[0];
        assert!(
            (got - exact).abs() <= 1e-9 * exact.abs().max(1e-3),
            "{got} vs {exact}"
        );
        let got = delta_action_first_order(&spec, &numeric, &f, &h, &cfg)
            .unwrap()
            .value[0];
        assert!(
            (got - exact).abs() <= 1e-7 * exact.abs().max(1e-3),
            "numeric separatrix: {got} vs {exact}"
        );
    }
}

#[test]
fn shared_and_separate_evaluations_agree() {
    let (spec, sep) = system();
    let f = field(&spec, scatmap::verify::TEST_HAMILTONIAN);
    let cfg = QuadConfig::default();
    let h = HomoclinicData::new(&[0.4], &[0.3], &[0.1], 0.2);
    let all = melnikov(&spec, &sep, &f, &h, &cfg).unwrap();
    let s = splitting_integral(&spec, &sep, &f, &h, &cfg).unwrap();
    let a = delta_action_first_order(&spec, &sep, &f, &h, &cfg).unwrap();
    let full = delta_angle_first_order(&spec, &sep, &f, &h, AngleDomain::FullLine, &cfg).unwrap();
    let half = delta_angle_first_order(&spec, &sep, &f, &h, AngleDomain::HalfLine, &cfg).unwrap();
    assert_eq!(all.splitting, s.value);
    assert_eq!(all.delta_action, a.value);
    assert!((all.delta_angle[0] - full.value[0]).abs() < 1e-12);
    assert!((all.delta_angle_half_line[0] - half.value[0]).abs() < 1e-12);
}

#[test]
fn splitting_zero_is_a_zero() {
    let (spec, sep) = system();
    let f = field(&spec, scatmap::verify::TEST_HAMILTONIAN);
    let cfg = QuadConfig::default();
    let tau = splitting_zero(&spec, &sep, &f, &[0.3], &[0.1], 0.2, &[0.0], &cfg).unwrap();
    assert!((tau[0] - 0.29039).abs() < 1e-4, "{tau:?}");
    let h = HomoclinicData::new(&tau, &[0.3], &[0.1], 0.2);
    assert!(splitting_integral(&spec, &sep, &f, &h, &cfg).unwrap().value[0].abs() < 1e-9);
}

#[test]
fn integration_by_parts_identity_holds() {
    let (spec, sep) = system();
    let f = field(&spec, scatmap::verify::TEST_HAMILTONIAN);
    let h = HomoclinicData::new(&[0.2], &[0.3], &[0.1], 0.2);
    let r = integration_by_parts_check(&spec, &sep, &f, &h, &QuadConfig::with_tol(1e-10)).unwrap();
    assert!(r < 1e-8, "{r}");
}

#[test]
fn doubling_the_tails_changes_nothing() {
    let (spec, sep) = system();
    let f = field(&spec, scatmap::verify::TEST_HAMILTONIAN);
    let h = HomoclinicData::new(&[0.2], &[0.3], &[0.1], 0.2);
    let tol = 1e-10;
    let base = QuadConfig::with_tol(tol);
    let doubled = QuadConfig {
        cutoff_scale: 2.0,
        ..base
    };
    let a = melnikov(&spec, &sep, &f, &h, &base).unwrap();
    let b = melnikov(&spec, &sep, &f, &h, &doubled).unwrap();
    let pairs = [
        (a.splitting[0], b.splitting[0]),
        (a.delta_action[0], b.delta_action[0]),
        (a.delta_angle[0], b.delta_angle[0]),
    ];
    for (x, y) in pairs {
        assert!((x - y).abs() < 10.0 * tol, "{x} vs {y}");
    }
}

#[test]
fn angle_independent_perturbations_do_not_change_the_action() {
    let spec = SystemSpec::standard(2, 2, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let f = field(&spec, "cos(2*pi*q1) * cos(2*pi*q2) * (I1 + I2^2)");
    let h = HomoclinicData::new(&[0.1, -0.3], &[0.2, 0.5], &[0.0, 0.7], 0.0);
    let m = melnikov(&spec, &sep, &f, &h, &QuadConfig::default()).unwrap();
    assert!(
        m.delta_action.iter().all(|v| v.abs() < 1e-12),
        "{:?}",
        m.delta_action
    );
    assert!(
        m.delta_angle.iter().any(|v| v.abs() > 1e-3),
        "{:?}",
        m.delta_angle
    );
}

#[test]
fn bad_homoclinic_data_is_rejected() {
    let (spec, sep) = system();
    let f = field(&spec, "cos(2*pi*q)");
    let h = HomoclinicData::new(&[0.0, 1.0], &[0.3], &[0.1], 0.2);
    assert!(matches!(
        melnikov(&spec, &sep, &f, &h, &QuadConfig::default()),
        Err(Error::Dimension { .. })
    ));
    let h = HomoclinicData::new(&[f64::NAN], &[0.3], &[0.1], 0.2);
    assert!(melnikov(&spec, &sep, &f, &h, &QuadConfig::default()).is_err());
}

#[test]
fn non_decaying_differences_are_reported() {
    // H1 = q I is not periodic in q: X1 theta = q tends to 1 along the
    // homoclinic orbit and stays 0 on the cylinder.
    let (spec, sep) = system();
    let f = field(&spec, "q * I");
    let h = HomoclinicData::new(&[0.0], &[0.3], &[0.1], 0.2);
    assert!(melnikov(&spec, &sep, &f, &h, &QuadConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn predictions_are_linear_in_the_field(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        tau in -1.0f64..1.0,
        theta in 0.0f64..1.0,
    ) {
        let (spec, sep) = system();
        let f = field(&spec, "cos(2*pi*q) * cos(2*pi*theta)");
        let g = field(&spec, "sin(2*pi*q) * sin(2*pi*(theta - 0.5*t)) * I");
        let combo = f.scaled(a).plus(&g.scaled(b));
        let h = HomoclinicData::new(&[tau], &[0.3], &[theta], 0.2);
        let cfg = QuadConfig::default();
        let (mf, mg, mc) = (
            melnikov(&spec, &sep, &f, &h, &cfg).unwrap(),
            melnikov(&spec, &sep, &g, &h, &cfg).unwrap(),
            melnikov(&spec, &sep, &combo, &h, &cfg).unwrap(),
        );
        let lin = |x: f64, y: f64| a * x + b * y;
        let scale = 1.0 + mc.delta_angle[0].abs();
        prop_assert!((mc.splitting[0] - lin(mf.splitting[0], mg.splitting[0])).abs() < 1e-9 * scale);
        prop_assert!((mc.delta_action[0] - lin(mf.delta_action[0], mg.delta_action[0])).abs() < 1e-9 * scale);
        prop_assert!((mc.delta_angle[0] - lin(mf.delta_angle[0], mg.delta_angle[0])).abs() < 1e-9 * scale);
    }
}
