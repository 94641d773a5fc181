//! Generating function of the first-order scattering map for Hamiltonian
//! perturbations.
//!
//! `L(tau, I, theta, t)` is the Melnikov potential of `H1` along the
//! homoclinic orbit through separatrix times `tau`. Its critical point
//! `tau*` in `tau` selects the homoclinic channel, and the reduced function
//! `script L(I, theta, t) = L(tau*, I, theta, t)` generates the first-order
//! change of `(I, theta)`: `Delta I = d script L / d theta` and
//! `Delta theta = -d script L / d I`. The generating function is
//! `S = -script L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exprs::{Program, Var};
use crate::flow::Separatrix;
use crate::melnikov::quadrature::{integrate_line, Decay, FnIntegrand, QuadConfig};
use crate::melnikov::{CylinderOrbit, HomoclinicOrbit, Orbit};
use crate::model::field::bind;
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratingConfig {
    pub quad: QuadConfig,
    /// Newton stops once `|dL/dtau| <= gradient_tol`.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Smallest admissible `|det D^2_tau L|` at `tau*`.
    pub degeneracy_threshold: f64,
    /// Step of the central differences of `dL/dtau`.
    pub hessian_step: f64,
    /// The starting grid covers `|tau_i| <= scan_half_width`.
    pub scan_half_width: f64,
    /// Grid points per pendulum.
    pub scan_points: usize,
    /// Grid points tried as Newton seeds, best first.
    pub scan_candidates: usize,
}

impl Default for GeneratingConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::with_tol(1e-12),
            gradient_tol: 1e-10,
            max_iterations: 50,
            degeneracy_threshold: 1e-8,
            hessian_step: 1e-4,
            scan_half_width: 3.0,
            scan_points: 25,
            scan_candidates: 6,
        }
    }
}

/// `L` and its analytic first derivatives at one `(tau, I, theta, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LGradient {
    pub value: f64,
    pub d_tau: Vec<f64>,
    pub d_action: Vec<f64>,
    pub d_angle: Vec<f64>,
    pub tail_estimate: f64,
}

/// Nondegenerate critical point of `tau -> L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauStar {
    pub tau: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_det: f64,
    /// `|dL/dtau(tau*)|`.
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Reduced function `script L` with its gradients and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratingEval {
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
    pub t: f64,
    /// `script L = L(tau*)`.
    pub value: f64,
    pub tau_star: TauStar,
    /// `d script L / d theta`, equal to `dL/dtheta` at `tau*`.
    pub d_angle: Vec<f64>,
    /// `d script L / d I`, equal to `dL/dI` at `tau*`.
    pub d_action: Vec<f64>,
    /// `|d script L/dI - dL/dI(tau*)| = |dL/dtau| |d tau*/dI|`.
    pub envelope_residual: f64,
    pub tail_estimate: f64,
}

/// Generating function `S = -script L` and its gradient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratingFunction {
    pub value: f64,
    pub d_action: Vec<f64>,
    pub d_angle: Vec<f64>,
}

impl GeneratingFunction {
    /// First-order change `(Delta I, Delta theta) = J grad S`, i.e.
    /// `(-dS/dtheta, dS/dI)`.
    pub fn symplectic_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.d_angle.iter().map(|v| -v).collect(),
            self.d_action.clone(),
        )
    }
}

/// The compiled `H1` of a Hamiltonian perturbation field.
pub fn hamiltonian_of(field: &PerturbationField) -> Result<&Program> {
    field.hamiltonian().ok_or_else(|| {
        Error::InvalidArgument("the perturbation is not given by a Hamiltonian".into())
    })
}

fn check_program(spec: &SystemSpec, h1: &Program) -> Result<()> {
    if h1.layout() != spec.layout() {
        return Err(Error::InvalidArgument(format!(
            "H1 compiled for n = {}, d = {} but the system has n = {}, d = {}",
            h1.layout().n,
            h1.layout().d,
            spec.n(),
            spec.d()
        )));
    }
    Ok(())
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            what,
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// Slots of `H1` differentiated along the orbits: `p, q, theta, I`.
struct Slots {
    p: Vec<usize>,
    q: Vec<usize>,
    angle: Vec<usize>,
    action: Vec<usize>,
}

impl Slots {
    fn new(spec: &SystemSpec) -> Self {
        let layout = spec.layout();
        Self {
            p: (0..spec.n()).map(|i| layout.slot(Var::P(i))).collect(),
            q: (0..spec.n()).map(|i| layout.slot(Var::Q(i))).collect(),
            angle: (0..spec.d()).map(|j| layout.slot(Var::Angle(j))).collect(),
            action: (0..spec.d()).map(|j| layout.slot(Var::Action(j))).collect(),
        }
    }

    fn all(&self) -> Vec<usize> {
        [&self.p, &self.q, &self.angle, &self.action]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

/// Packs `[H1, dH1/dp, dH1/dq, dH1/dtheta, dH1/dI]` at `z` with `eps = 0`.
fn jet(h1: &Program, slots: &[usize], z: &ExtendedState, out: &mut [f64]) -> Result<()> {
    let vars = bind(z.as_ref(), 0.0);
    out[0] = h1.gradient(&vars, slots, &mut out[1..])?;
    Ok(())
}

/// Core interval and decay model shared by the `L` integrals.
fn window(spec: &SystemSpec, tau: &[f64]) -> Result<(f64, f64, Decay)> {
    let lo = tau.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    let hi = tau.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    let rate = spec.lambdas()?.into_iter().fold(f64::INFINITY, f64::min);
    Ok((
        lo,
        hi,
        Decay {
            rate,
            poly_degree: 1,
        },
    ))
}

/// `L = -int (H1(homoclinic(s)) - H1(cylinder(s))) ds` with both orbits
/// through `(I, theta, t)` at `s = 0` and the homoclinic one at separatrix
/// times `tau + s`.
#[allow(clippy::too_many_arguments)]
pub fn l_value(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    tau: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &GeneratingConfig,
) -> Result<f64> {
    check_program(spec, h1)?;
    check_len("tau", tau, spec.n())?;
    check_len("action", action, spec.d())?;
    check_len("angle", angle, spec.d())?;
    let hom = HomoclinicOrbit::new(spec, sep, tau, action, angle, t);
    let cyl = CylinderOrbit::new(spec, action, angle, t);
    let (lo, hi, decay) = window(spec, tau)?;
    let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
        let vars_h = bind(hom.at(s)?.as_ref(), 0.0);
        let vars_c = bind(cyl.at(s)?.as_ref(), 0.0);
        out[0] = -(h1.eval(&vars_h)? - h1.eval(&vars_c)?);
        Ok(())
    });
    Ok(integrate_line(&mut f, lo, hi, decay, &cfg.quad)?.value[0])
}

/// `L` with its derivatives in `tau`, `theta` and `I`, differentiated under
/// the integral sign. The `I` derivative carries the drift of the angle
/// `theta + omega(I) s` through `s D omega`.
#[allow(clippy::too_many_arguments)]
pub fn l_gradient(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    tau: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &GeneratingConfig,
) -> Result<LGradient> {
    check_program(spec, h1)?;
    check_len("tau", tau, spec.n())?;
    check_len("action", action, spec.d())?;
    check_len("angle", angle, spec.d())?;
    let (n, d) = (spec.n(), spec.d());
    let slots = Slots::new(spec).all();
    let hess = spec.rotator.hessian(action);
    let hom = HomoclinicOrbit::new(spec, sep, tau, action, angle, t);
    let cyl = CylinderOrbit::new(spec, action, angle, t);
    let (lo, hi, decay) = window(spec, tau)?;
    // Jet layout: [H, H_p (n), H_q (n), H_theta (d), H_I (d)].
    let (ip, iq, ith, ii) = (1, 1 + n, 1 + 2 * n, 1 + 2 * n + d);
    let width = 1 + 2 * n + 2 * d;
    // Output layout: [L, L_tau (n), L_theta (d), L_I (d)].
    let dim = 1 + n + 2 * d;
    let mut f = FnIntegrand::new(dim, |s: f64, out: &mut [f64]| {
        let zh = hom.at(s)?;
        let zc = cyl.at(s)?;
        let mut jh = vec![0.0; width];
        let mut jc = vec![0.0; width];
        jet(h1, &slots, &zh, &mut jh)?;
        jet(h1, &slots, &zc, &mut jc)?;
        out[0] = -(jh[0] - jc[0]);
        for (i, pend) in spec.pendula.iter().enumerate() {
            let (dp, dq) = pend.field(zh.p()[i], zh.q()[i]);
            out[1 + i] = -(jh[ip + i] * dp + jh[iq + i] * dq);
        }
        for j in 0..d {
            let dth = jh[ith + j] - jc[ith + j];
            out[1 + n + j] = -dth;
            let drift: f64 = (0..d)
                .map(|k| (jh[ith + k] - jc[ith + k]) * hess[k][j])
                .sum();
            out[1 + n + d + j] = -(jh[ii + j] - jc[ii + j]) - s * drift;
        }
        Ok(())
    });
    let r = integrate_line(&mut f, lo, hi, decay, &cfg.quad)?;
    Ok(LGradient {
        value: r.value[0],
        d_tau: r.value[1..1 + n].to_vec(),
        d_angle: r.value[1 + n..1 + n + d].to_vec(),
        d_action: r.value[1 + n + d..].to_vec(),
        tail_estimate: r.tail_estimate,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Symmetrised central-difference Jacobian of `dL/dtau` in `tau`.
#[allow(clippy::too_many_arguments)]
fn tau_hessian(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    tau: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &GeneratingConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = spec.n();
    let h = cfg.hessian_step;
    let mut m = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut tp = tau.to_vec();
        let mut tm = tau.to_vec();
        tp[k] += h;
        tm[k] -= h;
        let gp = l_gradient(spec, sep, h1, &tp, action, angle, t, cfg)?.d_tau;
        let gm = l_gradient(spec, sep, h1, &tm, action, angle, t, cfg)?.d_tau;
        for i in 0..n {
            m[i][k] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for k in 0..i {
            let avg = 0.5 * (m[i][k] + m[k][i]);
            m[i][k] = avg;
            m[k][i] = avg;
        }
    }
    Ok(m)
}

/// Starting points ordered by `|dL/dtau|` on a uniform grid.
#[allow(clippy::too_many_arguments)]
fn scan(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &GeneratingConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = spec.n();
    let m = cfg.scan_points.max(2);
    let w = cfg.scan_half_width;
    let total = m.pow(n as u32);
    let grid: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let k = idx % m;
                    idx /= m;
                    -w + 2.0 * w * k as f64 / (m - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut scored: Vec<(f64, Vec<f64>)> = grid
        .into_par_iter()
        .map(|tau| {
            let g = l_gradient(spec, sep, h1, &tau, action, angle, t, cfg)?;
            Ok((norm(&g.d_tau), tau))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(scored
        .into_iter()
        .take(cfg.scan_candidates.max(1))
        .map(|(_, tau)| tau)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn newton(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    start: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    cfg: &GeneratingConfig,
) -> Result<TauStar> {
    let mut tau = start.to_vec();
    let mut g = l_gradient(spec, sep, h1, &tau, action, angle, t, cfg)?.d_tau;
    for iter in 0..=cfg.max_iterations {
        let hessian = tau_hessian(spec, sep, h1, &tau, action, angle, t, cfg)?;
        let det = crate::linalg::determinant(&hessian);
        if det.abs() < cfg.degeneracy_threshold {
            return Err(Error::Degenerate(format!(
                "degenerate Hessian of L in tau: |det| = {:e} at tau = {tau:?}",
                det.abs()
            )));
        }
        let gn = norm(&g);
        if gn <= cfg.gradient_tol {
            return Ok(TauStar {
                tau,
                hessian,
                hessian_det: det,
                gradient_norm: gn,
                iterations: iter,
            });
        }
        if iter == cfg.max_iterations {
            break;
        }
        let step = crate::linalg::solve(&hessian, &g)
            .ok_or_else(|| Error::Degenerate("degenerate Hessian of L in tau".into()))?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = tau
                .iter()
                .zip(&step)
                .map(|(a, b)| a - damping * b)
                .collect();
            let gt = l_gradient(spec, sep, h1, &trial, action, angle, t, cfg)?.d_tau;
            if norm(&gt) < gn || damping < 1e-3 {
                tau = trial;
                g = gt;
                break;
            }
            damping *= 0.5;
        }
    }
    Err(Error::NoConvergence(format!(
        "critical point of L: |dL/dtau| = {:e} after {} Newton steps",
        norm(&g),
        cfg.max_iterations
    )))
}

/// Nondegenerate critical point `tau*` of `tau -> L(tau, I, theta, t)`,
/// by Newton from `guess` or, without one, from the best points of a grid
/// scan.
#[allow(clippy::too_many_arguments)]
pub fn tau_star(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    action: &[f64],
    angle: &[f64],
    t: f64,
    guess: Option<&[f64]>,
    cfg: &GeneratingConfig,
) -> Result<TauStar> {
    check_program(spec, h1)?;
    if let Some(g) = guess {
        check_len("tau guess", g, spec.n())?;
        return newton(spec, sep, h1, g, action, angle, t, cfg);
    }
    let mut last = None;
    for start in scan(spec, sep, h1, action, angle, t, cfg)? {
        match newton(spec, sep, h1, &start, action, angle, t, cfg) {
            Ok(r) => return Ok(r),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NoConvergence("critical point of L: empty scan".into())))
}

/// `script L(I, theta, t) = L(tau*(I, theta, t), I, theta, t)` with its
/// gradients taken from the analytic `L` gradient at `tau*`.
#[allow(clippy::too_many_arguments)]
pub fn script_l(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    action: &[f64],
    angle: &[f64],
    t: f64,
    guess: Option<&[f64]>,
    cfg: &GeneratingConfig,
) -> Result<GeneratingEval> {
    let ts = tau_star(spec, sep, h1, action, angle, t, guess, cfg)?;
    let g = l_gradient(spec, sep, h1, &ts.tau, action, angle, t, cfg)?;
    // d tau*/dI = -H^{-1} d(dL/dtau)/dI, by central differences in I.
    let d = spec.d();
    let h = cfg.hessian_step;
    let mut sensitivity: f64 = 0.0;
    for j in 0..d {
        let mut ap = action.to_vec();
        let mut am = action.to_vec();
        ap[j] += h;
        am[j] -= h;
        let gp = l_gradient(spec, sep, h1, &ts.tau, &ap, angle, t, cfg)?.d_tau;
        let gm = l_gradient(spec, sep, h1, &ts.tau, &am, angle, t, cfg)?.d_tau;
        let mixed: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let dtau = crate::linalg::solve(&ts.hessian, &mixed)
            .ok_or_else(|| Error::Degenerate("degenerate Hessian of L in tau".into()))?;
        sensitivity = sensitivity.max(norm(&dtau));
    }
    Ok(GeneratingEval {
        action: action.to_vec(),
        angle: angle.to_vec(),
        t,
        value: g.value,
        envelope_residual: norm(&g.d_tau) * sensitivity,
        tau_star: ts,
        d_angle: g.d_angle,
        d_action: g.d_action,
        tail_estimate: g.tail_estimate,
    })
}

/// `S = -script L` and its gradient.
#[allow(clippy::too_many_arguments)]
pub fn generating_s(
    spec: &SystemSpec,
    sep: &Separatrix,
    h1: &Program,
    action: &[f64],
    angle: &[f64],
    t: f64,
    guess: Option<&[f64]>,
    cfg: &GeneratingConfig,
) -> Result<GeneratingFunction> {
    let e = script_l(spec, sep, h1, action, angle, t, guess, cfg)?;
    Ok(GeneratingFunction::from(&e))
}

impl From<&GeneratingEval> for GeneratingFunction {
    fn from(e: &GeneratingEval) -> Self {
        Self {
            value: -e.value,
            d_action: e.d_action.iter().map(|v| -v).collect(),
            d_angle: e.d_angle.iter().map(|v| -v).collect(),
        }
    }
}
