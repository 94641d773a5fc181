//! End-to-end acceptance checks. Run with
//! `cargo test -p scatmap --test acceptance -- --nocapture` to see one
//! PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use scatmap::exprs::parse;
use scatmap::flow::{Separatrix, SeparatrixMode};
use scatmap::geometry::{
    find_homoclinic_x, scattering_map_numeric, stable_graph_y, unstable_graph_y, GeometryConfig,
};
use scatmap::hamgen::{hamiltonian_of, script_l, GeneratingConfig};
use scatmap::melnikov::{
    delta_action_first_order, melnikov, splitting_zero, HomoclinicData, QuadConfig,
};
use scatmap::model::{hamiltonian_to_field, Sign};
use scatmap::verify::{
    gronwall_experiment, identity_suite, order_fit, selftest, GronwallConfig, OrderFit,
    SuiteConfig, TEST_HAMILTONIAN,
};
use scatmap::{ExtendedState, PerturbationField, SystemSpec};

const EPS_GRID: [f64; 4] = [1e-2, 3e-3, 1e-3, 3e-4];
const SAMPLE: (f64, f64, f64) = (0.3, 0.1, 0.2);

fn verdict(id: u32, title: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let pass = pass && elapsed <= limit;
    println!(
        "[acceptance] criterion {id} {title}: {} ({detail}; {:.2} s of {} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn setup(h1: &str) -> (SystemSpec, Separatrix, PerturbationField) {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto).unwrap();
    let field = hamiltonian_to_field(&spec, &parse(h1, spec.layout()).unwrap()).unwrap();
    (spec, sep, field)
}

fn fit_ok(f: &OrderFit, slope: f64) -> bool {
    f.slope >= slope && f.r_squared >= 0.95
}

#[test]
fn criterion_1_unperturbed_identity() {
    let start = Instant::now();
    let (spec, sep, field) = setup(TEST_HAMILTONIAN);
    let cfg = GeometryConfig::default();
    let points = [
        (0.3, 0.1, 0.2, 0.29),
        (-0.5, 0.7, 1.0, -0.4),
        (1.1, 0.35, -2.0, 1.5),
        (0.0, 0.0, 0.0, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (i, th, t, x) in points {
        let s =
            scattering_map_numeric(&spec, &sep, &field, &[i], &[th], t, 0.0, &[x], &cfg).unwrap();
        worst = worst
            .max((s.action_plus[0] - i).abs())
            .max((s.angle_plus[0] - th).abs());
    }
    verdict(
        1,
        "unperturbed scattering map is the identity",
        worst <= 1e-9,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("max deviation {worst:.2e} <= 1e-9"),
    );
}

/// Action change for `H1 = cos(2 pi q) cos(2 pi theta)`, `h0 = I^2/2`,
/// builtin cosine pendulum, from
/// `int sech^2(u) cos(a u) du = pi a / sinh(pi a / 2)`.
fn closed_form(tau: f64, action: f64, angle: f64) -> f64 {
    let a = 2.0 * PI * action;
    let f = if a == 0.0 {
        2.0
    } else {
        PI * a / (0.5 * PI * a).sinh()
    };
    -4.0 * PI * (2.0 * PI * (angle - action * tau)).sin() * f
}

#[test]
fn criterion_2_closed_form_oracle() {
    let start = Instant::now();
    assert!((closed_form(0.37, 0.61, 0.23) - -0.019853884844450).abs() < 1e-14);
    let (spec, sep, field) = setup("cos(2*pi*q) * cos(2*pi*theta)");
    let cfg = QuadConfig::with_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (tau, i, th, t) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        let exact = closed_form(tau, i, th);
        let h = HomoclinicData::new(&[tau], &[i], &[th], t);
        let got = delta_action_first_order(&spec, &sep, &field, &h, &cfg)
            .unwrap()
            .value[0];
        // Relative error, guarded near the zeros of the sine factor.
        worst = worst.max((got - exact).abs() / exact.abs().max(1e-3));
    }
    verdict(
        2,
        "action change matches the closed form",
        worst <= 1e-8,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("max relative error {worst:.2e} <= 1e-8 at 10 points"),
    );
}

#[test]
fn criterion_3_order_of_validity() {
    let start = Instant::now();
    let (spec, sep, field) = setup(TEST_HAMILTONIAN);
    let (i0, th0, t0) = SAMPLE;
    let quad = QuadConfig::default();
    let tau = splitting_zero(&spec, &sep, &field, &[i0], &[th0], t0, &[0.0], &quad).unwrap();
    let h = HomoclinicData::new(&tau, &[i0], &[th0], t0);
    let m = melnikov(&spec, &sep, &field, &h, &quad).unwrap();
    // Negative control: a sign-flipped perturbation predicts the wrong map.
    let mutant = melnikov(&spec, &sep, &field.scaled(-1.0), &h, &quad).unwrap();
    let cfg = GeometryConfig::default();
    let runs: Vec<_> = EPS_GRID
        .par_iter()
        .map(|&eps| {
            scattering_map_numeric(&spec, &sep, &field, &[i0], &[th0], t0, eps, &tau, &cfg).unwrap()
        })
        .collect();
    let err = |pred: f64, eps: f64, delta: f64| (delta - eps * pred).abs();
    let mut e_i = Vec::new();
    let mut e_th = Vec::new();
    let mut e_half = Vec::new();
    let mut e_mut = Vec::new();
    for (s, &eps) in runs.iter().zip(&EPS_GRID) {
        let di = s.action_plus[0] - s.action_minus[0];
        let dth = s.angle_plus[0] - s.angle_minus[0];
        e_i.push((eps, err(m.delta_action[0], eps, di)));
        e_th.push((eps, err(m.delta_angle[0], eps, dth)));
        e_half.push((eps, err(m.delta_angle_half_line[0], eps, dth)));
        e_mut.push((eps, err(mutant.delta_action[0], eps, di)));
    }
    let (fi, fth, fhalf, fmut) = (
        order_fit(&e_i).unwrap(),
        order_fit(&e_th).unwrap(),
        order_fit(&e_half).unwrap(),
        order_fit(&e_mut).unwrap(),
    );
    println!(
        "[acceptance] criterion 3 detail: action slope {:.3} (R2 {:.4}), angle slope {:.3} (R2 {:.4}), \
         half-line angle slope {:.3} (rejected), sign-flipped control slope {:.3}",
        fi.slope, fi.r_squared, fth.slope, fth.r_squared, fhalf.slope, fmut.slope
    );
    let pass = fit_ok(&fi, 1.2) && fit_ok(&fth, 1.2) && !fit_ok(&fhalf, 1.2) && !fit_ok(&fmut, 1.2);
    verdict(
        3,
        "first-order predictions are O(eps^(1+rho))",
        pass,
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "slopes {:.2} / {:.2} >= 1.2, controls {:.2} / {:.2} < 1.2",
            fi.slope, fth.slope, fhalf.slope, fmut.slope
        ),
    );
}

#[test]
fn criterion_4_splitting_transversality() {
    let start = Instant::now();
    let (spec, sep, field) = setup(TEST_HAMILTONIAN);
    let (i0, th0, t0) = SAMPLE;
    let quad = QuadConfig::default();
    let cfg = GeometryConfig::default();
    let tau = splitting_zero(&spec, &sep, &field, &[i0], &[th0], t0, &[0.0], &quad).unwrap();
    // Splitting away from the zero, where M_y is of order one.
    let x = 0.9;
    let h = HomoclinicData::new(&[x], &[i0], &[th0], t0);
    let m_y = melnikov(&spec, &sep, &field, &h, &quad).unwrap().splitting[0];
    let rows: Vec<_> = EPS_GRID
        .par_iter()
        .map(|&eps| {
            let ys =
                stable_graph_y(&spec, &field, &[x], &[i0], &[th0], t0, eps, None, &cfg).unwrap();
            let yu =
                unstable_graph_y(&spec, &field, &[x], &[i0], &[th0], t0, eps, None, &cfg).unwrap();
            let root =
                find_homoclinic_x(&spec, &field, &[i0], &[th0], t0, eps, &tau, &cfg).unwrap();
            (eps, yu.y[0] - ys.y[0], root.x[0])
        })
        .collect();
    let gap_err: Vec<_> = rows
        .iter()
        .map(|&(eps, gap, _)| (eps, (gap - eps * m_y).abs()))
        .collect();
    let shift: Vec<_> = rows
        .iter()
        .map(|&(eps, _, xs)| (eps, (xs - tau[0]).abs()))
        .collect();
    let fg = order_fit(&gap_err).unwrap();
    let fx = order_fit(&shift).unwrap();
    let ratio = shift.iter().map(|(e, d)| d / e).fold(0.0_f64, f64::max);
    println!(
        "[acceptance] criterion 4 detail: M_y({x}) = {m_y:.6}, gap error slope {:.3} (R2 {:.4}), \
         |x* - tau*| slope {:.3}, max |x* - tau*|/eps {ratio:.2}",
        fg.slope, fg.r_squared, fx.slope
    );
    verdict(
        4,
        "manifold splitting matches eps M_y",
        fit_ok(&fg, 1.2) && fx.slope >= 0.8 && ratio <= 10.0,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "gap slope {:.2} >= 1.2, x* within {ratio:.1} eps of the zero",
            fg.slope
        ),
    );
}

#[test]
fn criterion_5_hamiltonian_triangle() {
    let start = Instant::now();
    let (spec, sep, field) = setup(TEST_HAMILTONIAN);
    let h1 = hamiltonian_of(&field).unwrap();
    let cfg = GeneratingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<[f64; 4]> = (0..20)
        .map(|_| {
            [
                rng.gen_range(-0.7..0.7),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(-2.0..2.0),
            ]
        })
        .collect();
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&[i, th, t, sigma]| {
            let g = script_l(&spec, &sep, h1, &[i], &[th], t, None, &cfg).unwrap();
            let h = HomoclinicData::new(&g.tau_star.tau, &[i], &[th], t);
            let m = melnikov(&spec, &sep, &field, &h, &cfg.quad).unwrap();
            let tri = (m.delta_action[0] - g.d_angle[0])
                .abs()
                .max((m.delta_angle[0] + g.d_action[0]).abs());
            let guess = [g.tau_star.tau[0] - sigma];
            let shifted = script_l(
                &spec,
                &sep,
                h1,
                &[i],
                &[th - i * sigma],
                t - sigma,
                Some(&guess),
                &cfg,
            )
            .unwrap();
            (tri, (shifted.value - g.value).abs())
        })
        .collect();
    let tri = results.iter().map(|r| r.0).fold(0.0_f64, f64::max);
    let inv = results.iter().map(|r| r.1).fold(0.0_f64, f64::max);
    verdict(
        5,
        "generating function reproduces the first-order map",
        tri <= 1e-7 && inv <= 1e-8,
        start.elapsed(),
        Duration::from_secs(180),
        &format!("triangle {tri:.2e} <= 1e-7, invariance {inv:.2e} <= 1e-8 at 20 points"),
    );
}

#[test]
fn criterion_6_master_operators() {
    let start = Instant::now();
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let suite = identity_suite(&spec, &SuiteConfig::default());
    let lin = suite.get("master_linearity").unwrap();
    let report = selftest(&spec, &SuiteConfig::default());
    let diff = report.get("difference_identity").unwrap();
    let (_, sep, field) = setup(TEST_HAMILTONIAN);
    let tol = 1e-10;
    let base = QuadConfig::with_tol(tol);
    let doubled = QuadConfig {
        cutoff_scale: 2.0,
        ..base
    };
    let mut worst: f64 = 0.0;
    for (tau, i, th, t) in [
        (0.2, 0.3, 0.1, 0.2),
        (-1.0, 0.6, 0.4, 1.3),
        (2.0, -0.2, 0.9, 0.0),
    ] {
        let h = HomoclinicData::new(&[tau], &[i], &[th], t);
        let a = melnikov(&spec, &sep, &field, &h, &base).unwrap();
        let b = melnikov(&spec, &sep, &field, &h, &doubled).unwrap();
        for (x, y) in [
            (a.splitting[0], b.splitting[0]),
            (a.delta_action[0], b.delta_action[0]),
            (a.delta_angle[0], b.delta_angle[0]),
        ] {
            worst = worst.max((x - y).abs());
        }
    }
    verdict(
        6,
        "master operators are linear, exact at eps = 0 and tail-stable",
        lin.pass && diff.pass && worst < 10.0 * tol,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "linearity {} (bound {}), difference identity {} (bound {}), tail doubling {worst:.2e} < {:.0e}",
            lin.measured,
            lin.bound,
            diff.measured,
            diff.bound,
            10.0 * tol
        ),
    );
}

#[test]
fn criterion_7_gronwall_horizon() {
    let start = Instant::now();
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let field = PerturbationField::dissipation(1, 1, 1.0, 1.0);
    let z0 = ExtendedState::new(&[0.1], &[0.3], &[0.4], &[0.0], 0.0).unwrap();
    let cfg = GronwallConfig::default();
    let reports: Vec<_> = EPS_GRID
        .iter()
        .map(|&eps| gronwall_experiment(&spec, &field, &z0, eps, &cfg).unwrap())
        .collect();
    let all = reports.iter().all(|r| r.pass);
    let pts: Vec<_> = reports.iter().map(|r| (r.eps, r.max_deviation)).collect();
    let fit = order_fit(&pts).unwrap();
    verdict(
        7,
        "damped orbits stay eps^rho0-close over k ln(1/eps)",
        all && fit.slope >= cfg.rho0,
        start.elapsed(),
        Duration::from_secs(120),
        &format!(
            "bound K eps^rho0 with K = {}, rho0 = {}, k = {} held: {all}; deviation slope {:.3} >= {}",
            reports[0].big_k, cfg.rho0, cfg.k, fit.slope, cfg.rho0
        ),
    );
}

#[test]
fn criterion_8_infrastructure() {
    let start = Instant::now();
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let r = identity_suite(&spec, &SuiteConfig::default());
    let ids = [
        "integrator_order",
        "chart_determinant",
        "separatrix_residual",
        "action_conservation",
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for id in ids {
        let c = r.get(id).unwrap();
        pass &= c.pass;
        detail.push(format!("{id} {} (bound {})", c.measured, c.bound));
    }
    let bounds_ok = r.get("integrator_order").unwrap().bound.as_f64() == Some(6.5)
        && r.get("chart_determinant").unwrap().bound.as_f64() == Some(1e-9)
        && r.get("separatrix_residual").unwrap().bound.as_f64() == Some(1e-10)
        && r.get("action_conservation").unwrap().bound.as_f64() == Some(0.0);
    verdict(
        8,
        "integrator, chart, separatrix and action checks",
        pass && bounds_ok,
        start.elapsed(),
        Duration::from_secs(60),
        &detail.join(", "),
    );
}
