use std::f64::consts::PI;

use proptest::prelude::*;
use scatmap::exprs::parse;
use scatmap::flow::{
    flow_perturbed, flow_unperturbed_exact, homoclinic_point, integrate_to, IntegratorConfig,
    Separatrix, SeparatrixMode,
};
use scatmap::geometry::rates;
use scatmap::model::{
    angle_distance, hamiltonian_to_field, pendulum_energy, wrap_angle, Pendulum, PotentialSpec,
    RotatorSpec, Sign,
};
use scatmap::{Error, ExtendedState, PerturbationField, SystemSpec};

fn cubic_rotator() -> RotatorSpec {
    // Fully symmetric 2x2x2 tensor.
    let t = vec![0.6, 0.2, 0.2, -0.1, 0.2, -0.1, -0.1, 0.3];
    RotatorSpec::new(
        vec![0.5, -0.2],
        vec![vec![1.0, 0.3], vec![0.3, 2.0]],
        Some(t),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn frequency_is_the_gradient_of_the_rotator_energy(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let r = cubic_rotator();
        let w = r.frequency(&[a, b]);
        let hess = r.hessian(&[a, b]);
        let h = 1e-5;
        for k in 0..2 {
            let mut up = [a, b];
            let mut dn = [a, b];
            up[k] += h;
            dn[k] -= h;
            let fd = (r.energy(&up) - r.energy(&dn)) / (2.0 * h);
            prop_assert!((w[k] - fd).abs() < 1e-8);
            let (wu, wd) = (r.frequency(&up), r.frequency(&dn));
            for j in 0..2 {
                prop_assert!((hess[j][k] - (wu[j] - wd[j]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn potential_derivatives_match_differences(q in -1.0f64..1.0) {
        let pots = [
            PotentialSpec::BuiltinCosine,
            PotentialSpec::trig(vec![-0.03, 0.004], vec![0.0, 0.002]),
        ];
        let h = 1e-5;
        for v in &pots {
            prop_assert!((v.deriv(q) - (v.value(q + h) - v.value(q - h)) / (2.0 * h)).abs() < 1e-8);
            prop_assert!((v.second_deriv(q) - (v.deriv(q + h) - v.deriv(q - h)) / (2.0 * h)).abs() < 1e-7);
            prop_assert!((v.value(q + 1.0) - v.value(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapped_angles_lie_in_the_unit_interval(x in -1e6f64..1e6) {
        let w = wrap_angle(x);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(angle_distance(w, x) < 1e-9);
    }

    #[test]
    fn separatrix_has_zero_energy(tau in -15.0f64..15.0) {
        let spec = SystemSpec::standard(1, 1, Sign::Minus);
        for mode in [SeparatrixMode::Auto, SeparatrixMode::ForceNumeric] {
            let sep = Separatrix::new(&spec, mode).unwrap();
            let (p, q) = sep.point(0, tau).unwrap();
            prop_assert!(spec.pendula[0].energy(p, q).abs() < 1e-10);
        }
    }
}

#[test]
fn builtin_cosine_has_unit_exponent() {
    let v = PotentialSpec::BuiltinCosine;
    assert_eq!(v.value(0.0), 0.0);
    assert!((v.second_deriv(0.0) + 1.0).abs() < 1e-15);
    assert!((v.saddle_exponent().unwrap() - 1.0).abs() < 1e-15);
    assert!(v.is_builtin_cosine());
}

#[test]
fn potentials_without_a_saddle_are_rejected() {
    // V''(0) = +1: a centre, not a saddle.
    let centre = PotentialSpec::trig(vec![-1.0 / (4.0 * PI * PI)], vec![]);
    let r = SystemSpec::new(
        RotatorSpec::standard(1),
        vec![Pendulum::new(centre.clone(), Sign::Plus)],
    );
    assert!(matches!(r, Err(Error::InvalidSystem(_))));
    assert!(SystemSpec::new_unchecked(
        RotatorSpec::standard(1),
        vec![Pendulum::new(centre, Sign::Plus)]
    )
    .is_ok());
    assert!(Sign::from_value(0.5).is_err());
    assert!(RotatorSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.1], vec![0.0, 1.0]], None).is_err());
}

#[test]
fn states_check_their_dimensions() {
    let spec = SystemSpec::standard(1, 2, Sign::Plus);
    let z = ExtendedState::new(&[0.1], &[0.2], &[0.3], &[0.4], 0.0).unwrap();
    assert!(matches!(spec.check_state(&z), Err(Error::Dimension { .. })));
    assert!(
        !ExtendedState::new(&[f64::NAN], &[0.2], &[0.3], &[0.4], 0.0)
            .unwrap()
            .is_finite()
    );
}

#[test]
fn closed_form_separatrix_values() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    assert!(sep.is_closed_form(0));
    let (p, q) = sep.point(0, 0.0).unwrap();
    assert!((q - 0.5).abs() < 1e-15);
    assert!((p - 1.0 / PI).abs() < 1e-15);
    let tau = sep.time_of_q(0, 0.8).unwrap();
    assert!((sep.point(0, tau).unwrap().1 - 0.8).abs() < 1e-14);
    assert!(sep.time_of_q(0, 1.0).is_err());
}

#[test]
fn numeric_separatrix_matches_the_closed_form() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let exact = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let numeric = Separatrix::new(&spec, SeparatrixMode::ForceNumeric).unwrap();
    assert!(!numeric.is_closed_form(0));
    for k in -40..=40 {
        let tau = f64::from(k) * 0.3;
        let (pe, qe) = exact.point(0, tau).unwrap();
        let (pn, qn) = numeric.point(0, tau).unwrap();
        assert!(
            (pe - pn).abs() < 1e-11 && (qe - qn).abs() < 1e-11,
            "tau {tau}: {pe} {qe} vs {pn} {qn}"
        );
    }
}

#[test]
fn separatrix_is_an_orbit() {
    let spec = SystemSpec::standard(2, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let z = homoclinic_point(&spec, &sep, &[-0.7, 1.3], &[0.4], &[0.1], 0.0).unwrap();
    let ds = 2.5;
    let w = flow_unperturbed_exact(&spec, &z, ds, &IntegratorConfig::default()).unwrap();
    let target = homoclinic_point(
        &spec,
        &sep,
        &[-0.7 + ds, 1.3 + ds],
        &[0.4],
        &[0.1 + 0.4 * ds],
        ds,
    )
    .unwrap();
    assert!(w.distance(&target) < 1e-10, "{}", w.distance(&target));
}

#[test]
fn unperturbed_flow_conserves_energy_and_action() {
    let spec = SystemSpec::new(
        cubic_rotator(),
        vec![Pendulum::cosine(Sign::Plus), Pendulum::cosine(Sign::Minus)],
    )
    .unwrap();
    let zero = PerturbationField::zero(2, 2);
    let z =
        ExtendedState::new(&[0.05, -0.02], &[0.3, 0.6], &[0.2, -0.4], &[0.1, 0.7], 0.0).unwrap();
    let w = flow_perturbed(&spec, &zero, &z, 7.0, 0.0, &IntegratorConfig::default()).unwrap();
    assert!((spec.hamiltonian(&w) - spec.hamiltonian(&z)).abs() < 1e-11);
    assert_eq!(w.action(), z.action());
    let e0 = pendulum_energy(&spec, &z);
    let e1 = pendulum_energy(&spec, &w);
    for i in 0..2 {
        assert!((e0[i] - e1[i]).abs() < 1e-11);
    }
}

#[test]
fn autonomous_hamiltonian_perturbation_conserves_the_total_energy() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let h1 = parse("cos(2*pi*q) * cos(2*pi*theta) + 0.3 * I * p", spec.layout()).unwrap();
    let field = hamiltonian_to_field(&spec, &h1).unwrap();
    let prog = field.hamiltonian().unwrap().clone();
    let eps = 0.05;
    let total = |z: &ExtendedState| {
        let mut vars = z.phase().to_vec();
        vars.extend([z.t(), eps]);
        spec.hamiltonian(z) + eps * prog.eval(&vars).unwrap()
    };
    let z = ExtendedState::new(&[0.08], &[0.2], &[0.5], &[0.3], 0.0).unwrap();
    let w = flow_perturbed(&spec, &field, &z, 10.0, eps, &IntegratorConfig::default()).unwrap();
    assert!(
        (total(&w) - total(&z)).abs() < 1e-10,
        "{}",
        total(&w) - total(&z)
    );
}

#[test]
fn integrator_handles_a_linear_system() {
    // y' = A y with rotation generator: exact solution is a rotation.
    let rhs = |_t: f64, y: &[f64], out: &mut [f64]| -> scatmap::Result<()> {
        out[0] = -y[1];
        out[1] = y[0];
        Ok(())
    };
    let mut y = [1.0, 0.0];
    integrate_to(rhs, 0.0, &mut y, 10.0, &IntegratorConfig::default()).unwrap();
    assert!((y[0] - 10f64.cos()).abs() < 1e-10 && (y[1] - 10f64.sin()).abs() < 1e-10);
}

#[test]
fn eps_bound_is_enforced() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let field = PerturbationField::dissipation(1, 1, 1.0, 1.0).with_eps_max(0.1);
    let z = ExtendedState::new(&[0.0], &[0.1], &[0.0], &[0.0], 0.0).unwrap();
    let r = flow_perturbed(&spec, &field, &z, 1.0, 0.2, &IntegratorConfig::default());
    assert!(matches!(r, Err(Error::EpsOutOfRange { .. })));
}

#[test]
fn fields_combine_linearly() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let a = hamiltonian_to_field(&spec, &parse("sin(2*pi*q) * I", spec.layout()).unwrap()).unwrap();
    let b = PerturbationField::dissipation(1, 1, 0.7, 0.2);
    let c = a.scaled(2.0).plus(&b.scaled(-3.0));
    let z = ExtendedState::new(&[0.1], &[0.3], &[0.4], &[0.2], 0.5).unwrap();
    let (va, vb, vc) = (
        a.eval(&z, 0.0).unwrap(),
        b.eval(&z, 0.0).unwrap(),
        c.eval(&z, 0.0).unwrap(),
    );
    for k in 0..4 {
        let expected = 2.0 * va.as_slice()[k] - 3.0 * vb.as_slice()[k];
        assert!((vc.as_slice()[k] - expected).abs() < 1e-15);
    }
}

#[test]
fn rate_bundle_is_ordered() {
    let spec = SystemSpec::standard(2, 1, Sign::Plus);
    let r = rates(&spec, 0.1, 1.0).unwrap();
    assert!(r.is_ordered(), "{r:?}");
    assert_eq!(r.lambdas, vec![1.0, 1.0]);
}
