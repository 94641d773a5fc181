use proptest::prelude::*;
use scatmap::exprs::parse;
use scatmap::flow::{homoclinic_point, Separatrix, SeparatrixMode};
use scatmap::geometry::{
    chart_jacobian_det, chart_to_pq, find_homoclinic_x, footpoint_horizon, footpoint_minus,
    footpoint_plus, pq_to_chart, scattering_map_numeric, stable_graph_y, unstable_graph_y,
    FootpointConfig, GeometryConfig,
};
use scatmap::model::{hamiltonian_to_field, Pendulum, Sign};
use scatmap::verify::TEST_HAMILTONIAN;
use scatmap::{Error, ExtendedState, PerturbationField, SystemSpec};

fn test_system() -> (SystemSpec, Separatrix, PerturbationField) {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let f = hamiltonian_to_field(&spec, &parse(TEST_HAMILTONIAN, spec.layout()).unwrap()).unwrap();
    (spec, sep, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_round_trip(y in -0.02f64..0.02, x in -1.5f64..1.5, minus in any::<bool>()) {
        let pend = Pendulum::cosine(if minus { Sign::Minus } else { Sign::Plus });
        let (p, q) = chart_to_pq(&pend, y, x, None).unwrap();
        prop_assert!((pend.energy(p, q) - y).abs() < 1e-13);
        let (y2, x2) = pq_to_chart(&pend, p, q, 1e-13).unwrap();
        prop_assert!((y2 - y).abs() < 1e-12 && (x2 - x).abs() < 1e-9, "({y}, {x}) -> ({y2}, {x2})");
    }

    #[test]
    fn chart_is_symplectic(y in -0.005f64..0.005, x in -1.5f64..1.5) {
        let pend = Pendulum::cosine(Sign::Plus);
        let (p, q) = chart_to_pq(&pend, y, x, None).unwrap();
        let det = chart_jacobian_det(&pend, p, q, 1e-3).unwrap();
        prop_assert!((det - 1.0).abs() < 1e-9, "{det}");
    }
}

#[test]
fn chart_domain_is_enforced() {
    let pend = Pendulum::cosine(Sign::Plus);
    assert!(pq_to_chart(&pend, -0.1, 0.3, 1e-12).is_err());
    assert!(chart_to_pq(&pend, -0.2, 0.0, None).is_err());
}

#[test]
fn horizon_grows_with_log_one_over_eps() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let cfg = FootpointConfig::default();
    let t0 = footpoint_horizon(&spec, 0.0, &cfg).unwrap();
    assert!((t0 - (cfg.rate_constant / cfg.delta).ln()).abs() < 1e-12);
    let (a, b) = (
        footpoint_horizon(&spec, 1e-6, &cfg).unwrap(),
        footpoint_horizon(&spec, 1e-9, &cfg).unwrap(),
    );
    assert!(a > t0 && b >= a && b <= cfg.horizon_cap);
    let fixed = FootpointConfig {
        horizon: Some(3.0),
        ..cfg
    };
    assert_eq!(footpoint_horizon(&spec, 1e-3, &fixed).unwrap(), 3.0);
    let tight = FootpointConfig {
        delta: 1e-12,
        horizon_cap: 5.0,
        ..cfg
    };
    assert!(footpoint_horizon(&spec, 1e-3, &tight).is_err());
}

#[test]
fn unperturbed_footpoints_are_the_rotator_state() {
    let spec = SystemSpec::standard(2, 2, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let zero = PerturbationField::zero(2, 2);
    let z = homoclinic_point(&spec, &sep, &[0.3, -0.2], &[0.4, -0.1], &[0.2, 0.9], 1.0).unwrap();
    let cfg = GeometryConfig::default();
    for fp in [
        footpoint_plus(&spec, &zero, &z, 0.0, &cfg),
        footpoint_minus(&spec, &zero, &z, 0.0, &cfg),
    ] {
        let fp = fp.unwrap();
        for j in 0..2 {
            assert!((fp.action[j] - z.action()[j]).abs() < 1e-12);
            assert!((fp.angle[j] - z.angle()[j]).abs() < 1e-10, "{:?}", fp.angle);
        }
    }
}

#[test]
fn footpoints_reject_points_off_the_band_or_off_the_manifold() {
    let (spec, _, f) = test_system();
    let cfg = GeometryConfig::default();
    let far = ExtendedState::new(&[0.5], &[0.5], &[0.3], &[0.1], 0.0).unwrap();
    assert!(matches!(
        footpoint_plus(&spec, &f, &far, 1e-3, &cfg),
        Err(Error::InvalidArgument(_))
    ));
    // On the band, but the energy is off the separatrix.
    let (p, q) = chart_to_pq(&spec.pendula[0], 0.01, 0.0, None).unwrap();
    let off = ExtendedState::new(&[p], &[q], &[0.3], &[0.1], 0.0).unwrap();
    assert!(matches!(
        footpoint_plus(&spec, &f, &off, 0.0, &cfg),
        Err(Error::NoConvergence(_))
    ));
}

#[test]
fn cylinder_must_be_invariant() {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let leaky =
        hamiltonian_to_field(&spec, &parse("q * cos(2*pi*theta)", spec.layout()).unwrap()).unwrap();
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let z = homoclinic_point(&spec, &sep, &[0.0], &[0.3], &[0.1], 0.0).unwrap();
    assert!(footpoint_plus(&spec, &leaky, &z, 1e-3, &GeometryConfig::default()).is_err());
}

#[test]
fn graphs_are_exact_without_perturbation() {
    let (spec, _, f) = test_system();
    let cfg = GeometryConfig::default();
    let s = stable_graph_y(&spec, &f, &[0.2], &[0.3], &[0.1], 0.2, 0.0, None, &cfg).unwrap();
    let u = unstable_graph_y(&spec, &f, &[0.2], &[0.3], &[0.1], 0.2, 0.0, None, &cfg).unwrap();
    assert!(s.exact_unperturbed && u.exact_unperturbed);
    assert_eq!((s.y[0], u.y[0]), (0.0, 0.0));
    assert!(matches!(
        find_homoclinic_x(&spec, &f, &[0.3], &[0.1], 0.2, 0.0, &[0.0], &cfg),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn perturbed_graphs_split_and_intersect() {
    let (spec, _, f) = test_system();
    let cfg = GeometryConfig::default();
    let eps = 1e-3;
    let root = find_homoclinic_x(&spec, &f, &[0.3], &[0.1], 0.2, eps, &[0.29], &cfg).unwrap();
    assert!(root.gap[0].abs() < cfg.root_tol, "{:?}", root.gap);
    assert!((root.x[0] - 0.29039).abs() < 0.05, "{:?}", root.x);
    assert!(root.slope.abs() > cfg.degeneracy_threshold);
    assert!(root.y[0].abs() < 10.0 * eps);
    // The homoclinic point has both footpoints.
    let z = root.state(&spec, &[0.3], &[0.1], 0.2).unwrap();
    footpoint_plus(&spec, &f, &z, eps, &cfg).unwrap();
    footpoint_minus(&spec, &f, &z, eps, &cfg).unwrap();
}

#[test]
fn longer_horizons_do_not_move_the_footpoints() {
    let (spec, _, f) = test_system();
    let eps = 1e-3;
    let cfg = GeometryConfig::default();
    let root = find_homoclinic_x(&spec, &f, &[0.3], &[0.1], 0.2, eps, &[0.29], &cfg).unwrap();
    let z = root.state(&spec, &[0.3], &[0.1], 0.2).unwrap();
    let base = footpoint_horizon(&spec, eps, &cfg.footpoint).unwrap();
    let at = |h: f64| {
        let mut c = cfg;
        c.footpoint.horizon = Some(h);
        c.footpoint.horizon_cap = 40.0;
        footpoint_plus(&spec, &f, &z, eps, &c).unwrap()
    };
    let (a, b) = (at(base), at(1.5 * base));
    assert!(
        (a.action[0] - b.action[0]).abs() < 1e-7,
        "{} vs {}",
        a.action[0],
        b.action[0]
    );
    assert!(
        (a.angle[0] - b.angle[0]).abs() < 1e-6,
        "{} vs {}",
        a.angle[0],
        b.angle[0]
    );
}

#[test]
fn scattering_map_is_the_identity_without_perturbation() {
    let (spec, sep, f) = test_system();
    for (i, th, x) in [(0.3, 0.1, 0.29), (-0.7, 0.55, -1.0), (1.2, 0.9, 2.0)] {
        let s = scattering_map_numeric(
            &spec,
            &sep,
            &f,
            &[i],
            &[th],
            0.4,
            0.0,
            &[x],
            &GeometryConfig::default(),
        )
        .unwrap();
        assert!(
            (s.action_plus[0] - i).abs() < 1e-9 && (s.angle_plus[0] - th).abs() < 1e-9,
            "{s:?}"
        );
        assert_eq!(s.x_star, vec![x]);
    }
}

#[test]
fn scattering_map_inverts_the_backward_footpoint() {
    let (spec, sep, f) = test_system();
    let cfg = GeometryConfig::default();
    let s =
        scattering_map_numeric(&spec, &sep, &f, &[0.3], &[0.1], 0.2, 1e-3, &[0.29], &cfg).unwrap();
    assert!(s.newton_residual <= cfg.newton_tol);
    let minus = footpoint_minus(&spec, &f, &s.homoclinic, 1e-3, &cfg).unwrap();
    assert!((minus.action[0] - 0.3).abs() < 1e-8 && (minus.angle[0] - 0.1).abs() < 1e-8);
    assert!(matches!(
        scattering_map_numeric(
            &spec,
            &sep,
            &f,
            &[0.3, 0.1],
            &[0.1],
            0.2,
            1e-3,
            &[0.29],
            &cfg
        ),
        Err(Error::Dimension { .. })
    ));
}
