//! Master integral operators and the first-order change of the pendulum
//! energy, the actions and the angles along a homoclinic excursion.

mod orbits;
pub mod quadrature;

pub use orbits::{CylinderOrbit, FlowOrbit, HomoclinicOrbit, Orbit};
pub use quadrature::{Decay, FnIntegrand, QuadConfig, QuadResult};

use serde::{Deserialize, Serialize};

use crate::flow::Separatrix;
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};
use quadrature::{integrate_half_line, integrate_line, integrate_tail};

/// Point of the unperturbed homoclinic manifold: separatrix times `tau`,
/// rotator `(I, theta)` and time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicData {
    pub tau: Vec<f64>,
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
    pub t: f64,
}

impl HomoclinicData {
    pub fn new(tau: &[f64], action: &[f64], angle: &[f64], t: f64) -> Self {
        Self {
            tau: tau.to_vec(),
            action: action.to_vec(),
            angle: angle.to_vec(),
            t,
        }
    }

    fn check(&self, spec: &SystemSpec) -> Result<()> {
        let dims = [
            ("tau", spec.n(), self.tau.len()),
            ("I", spec.d(), self.action.len()),
            ("theta", spec.d(), self.angle.len()),
        ];
        for (what, expected, got) in dims {
            if expected != got {
                return Err(Error::Dimension {
                    what,
                    expected,
                    got,
                });
            }
        }
        let finite = self
            .tau
            .iter()
            .chain(&self.action)
            .chain(&self.angle)
            .all(|x| x.is_finite());
        if !finite || !self.t.is_finite() {
            return Err(Error::InvalidArgument(
                "homoclinic data is not finite".into(),
            ));
        }
        Ok(())
    }

    /// Core window `[min(-tau), max(-tau)]` where the pendula pass their
    /// midpoints.
    fn core(&self) -> (f64, f64) {
        let lo = self.tau.iter().map(|t| -t).fold(f64::INFINITY, f64::min);
        let hi = self
            .tau
            .iter()
            .map(|t| -t)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Which domain the `s`-weighted action integral of the angle formula uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleDomain {
    #[default]
    FullLine,
    HalfLine,
}

/// An integral value with its quadrature diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Integral {
    pub value: Vec<f64>,
    pub tail_estimate: f64,
    pub error_estimate: f64,
    pub window: (f64, f64),
}

impl From<QuadResult> for Integral {
    fn from(r: QuadResult) -> Self {
        Self {
            value: r.value,
            tail_estimate: r.tail_estimate,
            error_estimate: r.error_estimate,
            window: r.window,
        }
    }
}

/// Leading-order Melnikov predictions at one homoclinic point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MelnikovResult {
    pub data: HomoclinicData,
    /// `M_y`, so that `y^u - y^s = eps M_y + ...`.
    pub splitting: Vec<f64>,
    /// Coefficient of `eps` in `I+ - I-`.
    pub delta_action: Vec<f64>,
    /// Coefficient of `eps` in `theta+ - theta-`, full-line weighted term.
    pub delta_angle: Vec<f64>,
    /// Same with the weighted term over `[0, inf)` only.
    pub delta_angle_half_line: Vec<f64>,
    pub tail_estimate: f64,
    pub windows: Vec<(f64, f64)>,
}

/// Decay model shared by all integrands along a homoclinic orbit.
pub fn orbit_decay(spec: &SystemSpec, poly_degree: u32) -> Result<Decay> {
    let rate = spec.lambdas()?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(Decay { rate, poly_degree })
}

/// `J+(F) = int_0^inf (F(Phi^s z+) - F(Phi^s z)) ds` for a vector
/// observable of dimension `dim`.
pub fn master_plus<F>(
    dim: usize,
    observable: F,
    homoclinic: &dyn Orbit,
    footpoint: &dyn Orbit,
    decay: Decay,
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(&ExtendedState, &mut [f64]) -> Result<()>,
{
    master(dim, observable, homoclinic, footpoint, 1.0, decay, cfg)
}

/// `J-(F) = int_{-inf}^0 (F(Phi^s z-) - F(Phi^s z)) ds`.
pub fn master_minus<F>(
    dim: usize,
    observable: F,
    homoclinic: &dyn Orbit,
    footpoint: &dyn Orbit,
    decay: Decay,
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(&ExtendedState, &mut [f64]) -> Result<()>,
{
    master(dim, observable, homoclinic, footpoint, -1.0, decay, cfg)
}

fn master<F>(
    dim: usize,
    observable: F,
    homoclinic: &dyn Orbit,
    footpoint: &dyn Orbit,
    direction: f64,
    decay: Decay,
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(&ExtendedState, &mut [f64]) -> Result<()>,
{
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let mut f = FnIntegrand::new(dim, |s: f64, out: &mut [f64]| {
        observable(&footpoint.at(s)?, &mut a)?;
        observable(&homoclinic.at(s)?, &mut b)?;
        for k in 0..dim {
            out[k] = a[k] - b[k];
        }
        Ok(())
    });
    integrate_half_line(&mut f, 0.0, direction, 0.0, decay, cfg)
}

/// Like [`master_plus`] / [`master_minus`] but truncated at a fixed
/// `cutoff`, for numerically integrated orbits that are only trustworthy on
/// a finite horizon.
pub fn master_truncated<F>(
    dim: usize,
    observable: F,
    homoclinic: &dyn Orbit,
    footpoint: &dyn Orbit,
    direction: f64,
    cutoff: f64,
    tol: f64,
) -> Result<QuadResult>
where
    F: Fn(&ExtendedState, &mut [f64]) -> Result<()>,
{
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let mut f = FnIntegrand::new(dim, |s: f64, out: &mut [f64]| {
        observable(&footpoint.at(s)?, &mut a)?;
        observable(&homoclinic.at(s)?, &mut b)?;
        for k in 0..dim {
            out[k] = a[k] - b[k];
        }
        Ok(())
    });
    let (lo, hi) = if direction > 0.0 {
        (0.0, cutoff)
    } else {
        (-cutoff, 0.0)
    };
    quadrature::integrate_interval(&mut f, lo, hi, tol, 4000)
}

/// Differences `X1(homoclinic) - X1(cylinder)` along the unperturbed orbits,
/// packed as `[X1 y_1..n, X1 I_1..d, X1 theta_1..d]`.
struct Differences<'a> {
    spec: &'a SystemSpec,
    field: &'a PerturbationField,
    homoclinic: HomoclinicOrbit<'a>,
    cylinder: CylinderOrbit,
}

impl<'a> Differences<'a> {
    fn new(
        spec: &'a SystemSpec,
        sep: &'a Separatrix,
        field: &'a PerturbationField,
        h: &HomoclinicData,
    ) -> Result<Self> {
        h.check(spec)?;
        field.check_system(spec)?;
        Ok(Self {
            spec,
            field,
            homoclinic: HomoclinicOrbit::new(spec, sep, &h.tau, &h.action, &h.angle, h.t),
            cylinder: CylinderOrbit::new(spec, &h.action, &h.angle, h.t),
        })
    }

    fn dim(&self) -> usize {
        self.spec.n() + 2 * self.spec.d()
    }

    fn energy_rates(&self, z: &ExtendedState, x: &crate::model::Tangent, out: &mut [f64]) {
        for (i, pend) in self.spec.pendula.iter().enumerate() {
            let (p, q) = (z.p()[i], z.q()[i]);
            out[i] = pend.s() * (p * x.p()[i] + pend.potential.deriv(q) * x.q()[i]);
        }
    }

    fn eval(&self, s: f64, out: &mut [f64]) -> Result<()> {
        let (n, d) = (self.spec.n(), self.spec.d());
        let zh = self.homoclinic.at(s)?;
        let zc = self.cylinder.at(s)?;
        let xh = self.field.eval(&zh, 0.0)?;
        let xc = self.field.eval(&zc, 0.0)?;
        let mut yh = vec![0.0; n];
        let mut yc = vec![0.0; n];
        self.energy_rates(&zh, &xh, &mut yh);
        self.energy_rates(&zc, &xc, &mut yc);
        for i in 0..n {
            out[i] = yh[i] - yc[i];
        }
        for j in 0..d {
            out[n + j] = xh.action()[j] - xc.action()[j];
            out[n + d + j] = xh.angle()[j] - xc.angle()[j];
        }
        Ok(())
    }
}

fn line_integral(
    spec: &SystemSpec,
    diffs: &Differences<'_>,
    h: &HomoclinicData,
    weighted: bool,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let (lo, hi) = h.core();
    let decay = orbit_decay(spec, u32::from(weighted))?;
    let mut f = FnIntegrand::new(diffs.dim(), |s: f64, out: &mut [f64]| {
        diffs.eval(s, out)?;
        if weighted {
            out.iter_mut().for_each(|v| *v *= s);
        }
        Ok(())
    });
    integrate_line(&mut f, lo, hi, decay, cfg)
}

/// `M_y = int (X1 y(homoclinic) - X1 y(cylinder)) ds` over the whole line,
/// with `X1 y_i = s_i (p_i X1 p_i + V_i'(q_i) X1 q_i)`.
pub fn splitting_integral(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    h: &HomoclinicData,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let diffs = Differences::new(spec, sep, field, h)?;
    let r = line_integral(spec, &diffs, h, false, cfg)?;
    let mut out = Integral::from(r);
    out.value.truncate(spec.n());
    Ok(out)
}

/// Coefficient of `eps` in `I+ - I-`:
/// `-int (X1 I(cylinder) - X1 I(homoclinic)) ds`.
pub fn delta_action_first_order(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    h: &HomoclinicData,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let diffs = Differences::new(spec, sep, field, h)?;
    let r = line_integral(spec, &diffs, h, false, cfg)?;
    let n = spec.n();
    let mut out = Integral::from(r);
    out.value = out.value[n..n + spec.d()].to_vec();
    Ok(out)
}

/// Weighted action integral `int s (X1 I(cylinder) - X1 I(homoclinic)) ds`
/// over the chosen domain.
fn weighted_action_integral(
    spec: &SystemSpec,
    diffs: &Differences<'_>,
    h: &HomoclinicData,
    domain: AngleDomain,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let (n, d) = (spec.n(), spec.d());
    let mut r = match domain {
        AngleDomain::FullLine => line_integral(spec, diffs, h, true, cfg)?,
        AngleDomain::HalfLine => {
            let (_, hi) = h.core();
            let decay = orbit_decay(spec, 1)?;
            let mut f = FnIntegrand::new(diffs.dim(), |s: f64, out: &mut [f64]| {
                diffs.eval(s, out)?;
                out.iter_mut().for_each(|v| *v *= s);
                Ok(())
            });
            integrate_half_line(&mut f, 0.0, 1.0, hi.max(0.0), decay, cfg)?
        }
    };
    // The differences are homoclinic minus cylinder; flip to cylinder minus
    // homoclinic.
    r.value = r.value[n..n + d].iter().map(|v| -v).collect();
    Ok(r)
}

fn combine_angle(
    spec: &SystemSpec,
    h: &HomoclinicData,
    direct: &[f64],
    weighted: &[f64],
) -> Vec<f64> {
    let d = spec.d();
    let n = spec.n();
    let hess = spec.rotator.hessian(&h.action);
    (0..d)
        .map(|k| {
            let mut v = direct[n + d + k];
            for j in 0..d {
                v += weighted[j] * hess[j][k];
            }
            v
        })
        .collect()
}

/// Coefficient of `eps` in `theta+ - theta-`:
/// `-int (X1 theta(cylinder) - X1 theta(homoclinic)) ds
///  + [int s (X1 I(cylinder) - X1 I(homoclinic)) ds] . D^2 h0(I)`.
pub fn delta_angle_first_order(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    h: &HomoclinicData,
    domain: AngleDomain,
    cfg: &QuadConfig,
) -> Result<Integral> {
    let diffs = Differences::new(spec, sep, field, h)?;
    let direct = line_integral(spec, &diffs, h, false, cfg)?;
    let weighted = weighted_action_integral(spec, &diffs, h, domain, cfg)?;
    Ok(Integral {
        value: combine_angle(spec, h, &direct.value, &weighted.value),
        tail_estimate: direct.tail_estimate.max(weighted.tail_estimate),
        error_estimate: direct.error_estimate + weighted.error_estimate,
        window: (
            direct.window.0.min(weighted.window.0),
            direct.window.1.max(weighted.window.1),
        ),
    })
}

/// All first-order predictions at one homoclinic point, sharing the
/// unweighted integral between them.
pub fn melnikov(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    h: &HomoclinicData,
    cfg: &QuadConfig,
) -> Result<MelnikovResult> {
    let diffs = Differences::new(spec, sep, field, h)?;
    let (n, d) = (spec.n(), spec.d());
    let direct = line_integral(spec, &diffs, h, false, cfg)?;
    let full = weighted_action_integral(spec, &diffs, h, AngleDomain::FullLine, cfg)?;
    let half = weighted_action_integral(spec, &diffs, h, AngleDomain::HalfLine, cfg)?;
    Ok(MelnikovResult {
        data: h.clone(),
        splitting: direct.value[..n].to_vec(),
        delta_action: direct.value[n..n + d].to_vec(),
        delta_angle: combine_angle(spec, h, &direct.value, &full.value),
        delta_angle_half_line: combine_angle(spec, h, &direct.value, &half.value),
        tail_estimate: direct
            .tail_estimate
            .max(full.tail_estimate)
            .max(half.tail_estimate),
        windows: vec![direct.window, full.window, half.window],
    })
}

/// Residual of the integration-by-parts identity used for the angle formula:
/// `| -int_0^inf A(s) ds - int_0^inf s D(s) ds |` with
/// `D = X1 I(cylinder) - X1 I(homoclinic)` and `A(s) = -int_s^inf D`.
/// Both sides are computed independently; the left one by nested
/// quadrature. Returns the largest residual over the action components.
pub fn integration_by_parts_check(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    h: &HomoclinicData,
    cfg: &QuadConfig,
) -> Result<f64> {
    let diffs = Differences::new(spec, sep, field, h)?;
    let (n, d) = (spec.n(), spec.d());
    let decay0 = orbit_decay(spec, 0)?;
    let decay1 = orbit_decay(spec, 1)?;
    let (_, hi) = h.core();
    let core = hi.max(0.0);
    let action_diff = |s: f64, out: &mut [f64]| -> Result<()> {
        let mut all = vec![0.0; diffs.dim()];
        diffs.eval(s, &mut all)?;
        for j in 0..d {
            out[j] = -all[n + j];
        }
        Ok(())
    };
    let mut weighted = FnIntegrand::new(d, |s: f64, out: &mut [f64]| {
        action_diff(s, out)?;
        out.iter_mut().for_each(|v| *v *= s);
        Ok(())
    });
    let rhs = integrate_half_line(&mut weighted, 0.0, 1.0, core, decay1, cfg)?;
    let inner_cfg = QuadConfig {
        tol: cfg.tol * 1e-2,
        ..*cfg
    };
    let mut antiderivative = FnIntegrand::new(d, |s: f64, out: &mut [f64]| {
        let mut inner = FnIntegrand::new(d, |u: f64, o: &mut [f64]| action_diff(u, o));
        let tail = integrate_tail(&mut inner, s, 1.0, decay0, inner_cfg.tol, &inner_cfg)?;
        for j in 0..d {
            out[j] = -tail.value[j];
        }
        Ok(())
    });
    let lhs = integrate_half_line(&mut antiderivative, 0.0, 1.0, core, decay0, cfg)?;
    Ok((0..d)
        .map(|j| (-lhs.value[j] - rhs.value[j]).abs())
        .fold(0.0, f64::max))
}

/// Zero of the splitting vector in `tau` near `guess`: secant iteration for
/// one pendulum, Newton with a finite-difference Jacobian otherwise.
pub fn splitting_zero(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    action: &[f64],
    angle: &[f64],
    t: f64,
    guess: &[f64],
    cfg: &QuadConfig,
) -> Result<Vec<f64>> {
    let n = spec.n();
    let eval = |tau: &[f64]| -> Result<Vec<f64>> {
        let h = HomoclinicData::new(tau, action, angle, t);
        Ok(splitting_integral(spec, sep, field, &h, cfg)?.value)
    };
    let mut tau = guess.to_vec();
    let mut m = eval(&tau)?;
    let step = 1e-4;
    for _ in 0..60 {
        let norm = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if norm <= 10.0 * cfg.tol {
            return Ok(tau);
        }
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            let mut tp = tau.clone();
            let mut tm = tau.clone();
            tp[k] += step;
            tm[k] -= step;
            let (mp, mm) = (eval(&tp)?, eval(&tm)?);
            for i in 0..n {
                jac[i][k] = (mp[i] - mm[i]) / (2.0 * step);
            }
        }
        let delta = crate::linalg::solve(&jac, &m)
            .ok_or_else(|| Error::Degenerate("splitting Jacobian is singular".into()))?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = tau
                .iter()
                .zip(&delta)
                .map(|(a, b)| a - damping * b)
                .collect();
            let mt = eval(&trial)?;
            let nt = mt.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if nt < norm || damping < 1e-3 {
                tau = trial;
                m = mt;
                break;
            }
            damping *= 0.5;
        }
        if delta.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * damping < 1e-13 {
            return Ok(tau);
        }
    }
    Err(Error::NoConvergence(
        "splitting zero: Newton iteration did not converge".into(),
    ))
}
