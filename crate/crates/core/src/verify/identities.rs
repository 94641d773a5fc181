use serde::{Deserialize, Serialize};
use serde_json::json;

use super::fit::order_fit;
use super::report::{CheckRecord, Report};
use crate::exprs::Program;
use crate::flow::{flow_perturbed, integrate_fixed, pendulum_rhs, Separatrix, SeparatrixMode};
use crate::geometry::{
    chart_jacobian_det, chart_to_pq, rates, scattering_map_numeric, GeometryConfig,
};
use crate::melnikov::quadrature::QuadConfig;
use crate::melnikov::{
    master_minus, master_plus, orbit_decay, CylinderOrbit, HomoclinicOrbit, Orbit,
};
use crate::model::field::bind;
use crate::model::{eval_unperturbed, ExtendedState, PerturbationField, SystemSpec};
use crate::Result;

/// Upper bounds of the unperturbed identity suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteTolerances {
    /// `|sigma_0(I, theta) - (I, theta)|`.
    pub identity: f64,
    /// Drift of the unperturbed energies over the test flows.
    pub energy: f64,
    /// `|det - 1|` of the symplectic chart.
    pub chart: f64,
    /// Energy of the separatrix parametrisation.
    pub separatrix: f64,
    /// `|J(aF + bG) - a J(F) - b J(G)|`.
    pub linearity: f64,
    /// Smallest admissible fitted order of the fixed-step integrator.
    pub integrator_order: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            energy: 1e-9,
            chart: 1e-9,
            separatrix: 1e-10,
            linearity: 1e-12,
            integrator_order: 6.5,
        }
    }
}

impl SuiteTolerances {
    /// Every absolute tolerance set to `tol`; the order threshold is kept.
    pub fn uniform(tol: f64) -> Self {
        Self {
            identity: tol,
            energy: tol,
            chart: tol,
            separatrix: tol,
            linearity: tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub tolerances: SuiteTolerances,
    pub geometry: GeometryConfig,
    pub quad: QuadConfig,
    /// Band points per pendulum for the chart determinant.
    pub chart_samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            tolerances: SuiteTolerances::default(),
            geometry: GeometryConfig::default(),
            quad: QuadConfig::default(),
            chart_samples: 100,
        }
    }
}

/// Deterministic sample of `(I, theta, t)` for the suite.
fn samples(d: usize) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    [(0.3, 0.1, 0.0), (0.45, 0.7, 1.3), (-0.2, 0.35, -0.8)]
        .iter()
        .enumerate()
        .map(|(k, &(i0, th0, t0))| {
            let action = (0..d).map(|j| i0 + 0.05 * j as f64).collect();
            let angle = (0..d).map(|j| th0 + 0.21 * (j + k) as f64).collect();
            (action, angle, t0)
        })
        .collect()
}

fn guard(id: &str, inputs: serde_json::Value, r: Result<CheckRecord>) -> CheckRecord {
    r.unwrap_or_else(|e| CheckRecord::failed(id, inputs, e.to_string()))
}

fn check_rates(spec: &SystemSpec, cfg: &SuiteConfig) -> CheckRecord {
    let mu_c = cfg.geometry.mu_c;
    let inputs = json!({ "mu_c": mu_c });
    match rates(spec, mu_c, cfg.geometry.footpoint.rate_constant) {
        Ok(b) => CheckRecord {
            id: "rates".into(),
            inputs,
            measured: json!({
                "lambda_minus": b.lambda_minus,
                "lambda_plus": b.lambda_plus,
                "mu_minus": b.mu_minus,
                "mu_plus": b.mu_plus,
            }),
            bound: json!("lambda- <= lambda+ < -mu_c < 0 < mu_c < mu- <= mu+"),
            pass: b.is_ordered(),
            note: None,
        },
        Err(e) => CheckRecord::failed("rates", inputs, format!("no hyperbolic rates: {e}")),
    }
}

fn check_sigma0(spec: &SystemSpec, sep: &Separatrix, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let zero = PerturbationField::zero(spec.n(), spec.d());
    let x = vec![0.3; spec.n()];
    let mut worst: f64 = 0.0;
    for (action, angle, t) in samples(spec.d()) {
        let s =
            scattering_map_numeric(spec, sep, &zero, &action, &angle, t, 0.0, &x, &cfg.geometry)?;
        for j in 0..spec.d() {
            worst = worst
                .max((s.action_plus[j] - action[j]).abs())
                .max((s.angle_plus[j] - angle[j]).abs());
        }
    }
    Ok(CheckRecord::at_most(
        "sigma0_identity",
        json!({ "samples": samples(spec.d()).len(), "x": x }),
        worst,
        cfg.tolerances.identity,
    ))
}

fn test_states(spec: &SystemSpec) -> Result<Vec<ExtendedState>> {
    let (n, d) = (spec.n(), spec.d());
    [(0.05, 0.2), (-0.1, 0.6), (0.25, 0.45)]
        .iter()
        .map(|&(p, q)| {
            ExtendedState::new(
                &(0..n).map(|i| p + 0.01 * i as f64).collect::<Vec<_>>(),
                &(0..n).map(|i| q - 0.05 * i as f64).collect::<Vec<_>>(),
                &(0..d).map(|j| 0.3 + 0.1 * j as f64).collect::<Vec<_>>(),
                &(0..d).map(|j| 0.2 * j as f64).collect::<Vec<_>>(),
                0.0,
            )
        })
        .collect()
}

fn check_energy(spec: &SystemSpec, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let zero = PerturbationField::zero(spec.n(), spec.d());
    let horizon = 10.0;
    let mut worst: f64 = 0.0;
    for z in test_states(spec)? {
        let w = flow_perturbed(spec, &zero, &z, horizon, 0.0, &cfg.geometry.integrator)?;
        for (i, pend) in spec.pendula.iter().enumerate() {
            let e0 = pend.energy(z.p()[i], z.q()[i]);
            let e1 = pend.energy(w.p()[i], w.q()[i]);
            worst = worst.max((e1 - e0).abs());
        }
        worst =
            worst.max((spec.rotator.energy(w.action()) - spec.rotator.energy(z.action())).abs());
    }
    Ok(CheckRecord::at_most(
        "energy_conservation",
        json!({ "horizon": horizon }),
        worst,
        cfg.tolerances.energy,
    ))
}

fn check_action(spec: &SystemSpec, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let zero = PerturbationField::zero(spec.n(), spec.d());
    let mut worst: f64 = 0.0;
    for z in test_states(spec)? {
        let x0 = eval_unperturbed(spec, &z)?;
        worst = x0.action().iter().fold(worst, |m, v| m.max(v.abs()));
        let w = flow_perturbed(spec, &zero, &z, 5.0, 0.0, &cfg.geometry.integrator)?;
        for (a, b) in w.action().iter().zip(z.action()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckRecord::at_most(
        "action_conservation",
        json!({ "horizon": 5.0 }),
        worst,
        0.0,
    ))
}

fn check_chart(spec: &SystemSpec, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let m = cfg.chart_samples.max(1);
    let mut worst: f64 = 0.0;
    for pend in &spec.pendula {
        for k in 0..m {
            // Low-discrepancy points of the band |y| <= 0.005, |x| <= 1.5,
            // inside the chart for both energy signs.
            let u = (k as f64 + 0.5) / m as f64;
            let v = (k as f64 * 0.618_033_988_749_895).fract();
            let (p, q) = chart_to_pq(pend, 0.01 * (v - 0.5), 3.0 * (u - 0.5), None)?;
            let det = chart_jacobian_det(pend, p, q, 1e-3)?;
            worst = worst.max((det - 1.0).abs());
        }
    }
    Ok(CheckRecord::at_most(
        "chart_determinant",
        json!({ "samples_per_pendulum": m, "band": 0.005, "x_range": 1.5 }),
        worst,
        cfg.tolerances.chart,
    ))
}

fn check_separatrix(spec: &SystemSpec, sep: &Separatrix, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    for (i, pend) in spec.pendula.iter().enumerate() {
        for k in 0..=80 {
            let tau = -10.0 + 0.25 * k as f64;
            let (p, q) = sep.point(i, tau)?;
            worst = worst.max(pend.energy(p, q).abs());
        }
    }
    Ok(CheckRecord::at_most(
        "separatrix_residual",
        json!({ "tau_range": [-10.0, 10.0] }),
        worst,
        cfg.tolerances.separatrix,
    ))
}

fn check_linearity(spec: &SystemSpec, sep: &Separatrix, cfg: &SuiteConfig) -> Result<CheckRecord> {
    let (a, b) = (1.7, -0.45);
    let tau = vec![0.2; spec.n()];
    let action = vec![0.3; spec.d()];
    let angle = vec![0.1; spec.d()];
    let hom = HomoclinicOrbit::new(spec, sep, &tau, &action, &angle, 0.0);
    let cyl = CylinderOrbit::new(spec, &action, &angle, 0.0);
    let obs = |z: &ExtendedState, out: &mut [f64]| -> Result<()> {
        // Both observables are 1-periodic in q, so they agree at the two
        // ends of the separatrix.
        let two_pi_q = 2.0 * std::f64::consts::PI * z.q()[0];
        let f = two_pi_q.cos() + z.angle()[0].sin();
        let g = z.p()[0] * z.p()[0] + z.action()[0] * two_pi_q.sin();
        out[0] = f;
        out[1] = g;
        out[2] = a * f + b * g;
        Ok(())
    };
    let decay = orbit_decay(spec, 0)?;
    let mut worst: f64 = 0.0;
    for r in [
        master_plus(3, obs, &hom, &cyl, decay, &cfg.quad)?,
        master_minus(3, obs, &hom, &cyl, decay, &cfg.quad)?,
    ] {
        worst = worst.max((r.value[2] - a * r.value[0] - b * r.value[1]).abs());
    }
    Ok(CheckRecord::at_most(
        "master_linearity",
        json!({ "a": a, "b": b }),
        worst,
        cfg.tolerances.linearity,
    ))
}

/// Fitted order of the fixed-step integrator on the first pendulum.
pub fn integrator_order(spec: &SystemSpec) -> Result<f64> {
    let rhs = || pendulum_rhs(&spec.pendula[0]);
    let (t1, y0) = (4.0, [0.15, 0.3]);
    let mut reference = y0;
    integrate_fixed(rhs(), 0.0, &mut reference, t1, 4096)?;
    let mut pts = Vec::new();
    for steps in [8usize, 12, 16, 24, 32] {
        let mut y = y0;
        integrate_fixed(rhs(), 0.0, &mut y, t1, steps)?;
        let err = (y[0] - reference[0]).abs().max((y[1] - reference[1]).abs());
        pts.push((t1 / steps as f64, err));
    }
    Ok(order_fit(&pts)?.slope)
}

fn check_integrator(spec: &SystemSpec, cfg: &SuiteConfig) -> Result<CheckRecord> {
    Ok(CheckRecord::at_least(
        "integrator_order",
        json!({ "steps": [8, 12, 16, 24, 32], "horizon": 4.0 }),
        integrator_order(spec)?,
        cfg.tolerances.integrator_order,
    ))
}

/// Checks that must hold for the unperturbed system: `sigma_0 = Id`,
/// conservation laws, the symplectic chart, the separatrix, linearity of
/// the master operators, the rate ordering and the integrator order.
/// Failures are reported, never raised.
pub fn identity_suite(spec: &SystemSpec, cfg: &SuiteConfig) -> Report {
    let mut report = Report::new();
    report.push(check_rates(spec, cfg));
    let sep = Separatrix::new(spec, SeparatrixMode::Auto);
    let none = json!({});
    report.push(guard(
        "energy_conservation",
        none.clone(),
        check_energy(spec, cfg),
    ));
    report.push(guard(
        "action_conservation",
        none.clone(),
        check_action(spec, cfg),
    ));
    report.push(guard(
        "chart_determinant",
        none.clone(),
        check_chart(spec, cfg),
    ));
    report.push(guard(
        "integrator_order",
        none.clone(),
        check_integrator(spec, cfg),
    ));
    match &sep {
        Ok(sep) => {
            report.push(guard(
                "sigma0_identity",
                none.clone(),
                check_sigma0(spec, sep, cfg),
            ));
            report.push(guard(
                "separatrix_residual",
                none.clone(),
                check_separatrix(spec, sep, cfg),
            ));
            report.push(guard(
                "master_linearity",
                none,
                check_linearity(spec, sep, cfg),
            ));
        }
        Err(e) => {
            for id in ["sigma0_identity", "separatrix_residual", "master_linearity"] {
                report.push(CheckRecord::failed(
                    id,
                    none.clone(),
                    format!("no separatrix: {e}"),
                ));
            }
        }
    }
    report
}

/// `(X0 F)(z)`: derivative of `F` along the unperturbed field, including
/// the explicit time dependence.
pub fn lie_derivative(spec: &SystemSpec, f: &Program, z: &ExtendedState) -> Result<f64> {
    let x0 = eval_unperturbed(spec, z)?;
    let vars = bind(z.as_ref(), 0.0);
    let mut dir = x0.as_slice().to_vec();
    dir.push(1.0);
    dir.push(0.0);
    Ok(f.eval_dual(&vars, &dir)?.d)
}

/// Residual of the unperturbed difference identities
/// `F(z+) - F(z) = -J+(X0 F)` and `F(z-) - F(z) = J-(X0 F)` for a
/// homoclinic point `z` and its footpoints `z+ = z-` on the cylinder.
#[allow(clippy::too_many_arguments)]
pub fn difference_identity_residual(
    spec: &SystemSpec,
    sep: &Separatrix,
    f: &Program,
    tau: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let hom = HomoclinicOrbit::new(spec, sep, tau, action, angle, t);
    let cyl = CylinderOrbit::new(spec, action, angle, t);
    let value = |z: &ExtendedState| -> Result<f64> { Ok(f.eval(&bind(z.as_ref(), 0.0))?) };
    let lhs = value(&cyl.at(0.0)?)? - value(&hom.at(0.0)?)?;
    let obs = |z: &ExtendedState, out: &mut [f64]| -> Result<()> {
        out[0] = lie_derivative(spec, f, z)?;
        Ok(())
    };
    let decay = orbit_decay(spec, 0)?;
    let plus = master_plus(1, obs, &hom, &cyl, decay, cfg)?.value[0];
    let minus = master_minus(1, obs, &hom, &cyl, decay, cfg)?.value[0];
    Ok((lhs + plus).abs().max((lhs - minus).abs()))
}
