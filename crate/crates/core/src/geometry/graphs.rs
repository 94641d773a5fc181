use serde::Serialize;

use super::chart::chart_to_pq;
use super::GeometryConfig;
use crate::flow::{integrate, Control, SystemRhs};
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Over,
    Back,
    Undecided,
}

/// Energies `y` of the stable or unstable graph over one `(x, I, theta, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphValue {
    pub y: Vec<f64>,
    /// Orbits flowed while bisecting.
    pub shots: usize,
    /// Half-width of the final bracket (0 for the exact unperturbed answer).
    pub bracket: f64,
    /// True when the value was decided by the unperturbed identity `y = 0`.
    pub exact_unperturbed: bool,
}

/// State with pendulum `i` at chart coordinates `(y_i, x_i)`.
pub(crate) fn chart_state(
    spec: &SystemSpec,
    y: &[f64],
    x: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
) -> Result<ExtendedState> {
    let n = spec.n();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let (pi, qi) = chart_to_pq(&spec.pendula[i], y[i], x[i], None)?;
        p[i] = pi;
        q[i] = qi;
    }
    ExtendedState::new(&p, &q, action, angle, t)
}

/// Flows `z` forward (direction +1, towards the saddle at `q = 1`) or
/// backward (towards `q = 0`) and reports, per pendulum, whether the orbit
/// passes the saddle or turns back.
fn classify(
    spec: &SystemSpec,
    field: &PerturbationField,
    eps: f64,
    z: &ExtendedState,
    direction: f64,
    cfg: &GeometryConfig,
) -> Result<Vec<Side>> {
    let n = spec.n();
    let signs: Vec<f64> = spec.pendula.iter().map(|p| p.s()).collect();
    let th = cfg.escape_threshold;
    let mut sides = vec![Side::Undecided; n];
    let mut y = z.phase().to_vec();
    let t0 = z.t();
    let res = integrate(
        SystemRhs::new(spec, Some(field), eps),
        t0,
        &mut y,
        t0 + direction * cfg.max_time,
        &cfg.integrator,
        |_, state| {
            let mut open = false;
            for i in 0..n {
                if sides[i] != Side::Undecided {
                    continue;
                }
                let (p, q) = (state[i], state[n + i]);
                let passed = if direction > 0.0 {
                    q - 1.0 > th
                } else {
                    q < -th
                };
                // Short of the target saddle with the forward velocity
                // `s p` reversed: the orbit has turned back.
                let short = if direction > 0.0 {
                    q < 1.0 - th
                } else {
                    q > th
                };
                if passed {
                    sides[i] = Side::Over;
                } else if short && signs[i] * p < 0.0 {
                    sides[i] = Side::Back;
                } else {
                    open = true;
                }
            }
            if open {
                Control::Continue
            } else {
                Control::Stop
            }
        },
    );
    match res {
        Ok(_) => Ok(sides),
        Err(e) => Err(e.into()),
    }
}

fn graph(
    spec: &SystemSpec,
    field: &PerturbationField,
    x: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
    direction: f64,
    hint: Option<&[f64]>,
    cfg: &GeometryConfig,
) -> Result<GraphValue> {
    let n = spec.n();
    field.check_system(spec)?;
    field.check_eps(eps)?;
    if x.len() != n {
        return Err(Error::Dimension {
            what: "x",
            expected: n,
            got: x.len(),
        });
    }
    if eps == 0.0 {
        return Ok(GraphValue {
            y: vec![0.0; n],
            shots: 0,
            bracket: 0.0,
            exact_unperturbed: true,
        });
    }
    let mut y = match hint {
        Some(h) => h.to_vec(),
        None => vec![0.0; n],
    };
    let mut shots = 0;
    let mut last_bracket: f64 = 0.0;
    let max_sweeps = if n == 1 { 1 } else { 30 };
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let side_at = |yi: f64, shots: &mut usize| -> Result<Side> {
                let mut trial = y.clone();
                trial[i] = yi;
                let z = chart_state(spec, &trial, x, action, angle, t)?;
                *shots += 1;
                Ok(classify(spec, field, eps, &z, direction, cfg)?[i])
            };
            let base = cfg.window_factor * eps.abs();
            let mut w = if hint.is_some() {
                (base * 1e-4).max(1e-9)
            } else {
                base
            }
            .min(cfg.window_max);
            let centre = y[i];
            let (mut lo, mut hi, s_lo) = loop {
                let (lo, hi) = (centre - w, centre + w);
                let (a, b) = (side_at(lo, &mut shots)?, side_at(hi, &mut shots)?);
                if a == Side::Undecided || b == Side::Undecided {
                    let root = if a == Side::Undecided { lo } else { hi };
                    break (root, root, Side::Undecided);
                }
                if a != b {
                    break (lo, hi, a);
                }
                if w >= cfg.window_max {
                    return Err(Error::NoConvergence(format!(
                        "bracket failure for pendulum {} at x = {:?}: no change of side within |y - {centre}| <= {w}; \
                         the perturbation may have destroyed the intersection",
                        i + 1,
                        x
                    )));
                }
                w = (w * 8.0).min(cfg.window_max);
            };
            if s_lo != Side::Undecided {
                while hi - lo > cfg.bisection_tol {
                    let mid = 0.5 * (lo + hi);
                    match side_at(mid, &mut shots)? {
                        Side::Undecided => {
                            lo = mid;
                            hi = mid;
                        }
                        s if s == s_lo => lo = mid,
                        _ => hi = mid,
                    }
                }
            }
            let new = 0.5 * (lo + hi);
            change = change.max((new - y[i]).abs());
            last_bracket = last_bracket.max(0.5 * (hi - lo));
            y[i] = new;
        }
        if n == 1 || change <= cfg.bisection_tol {
            return Ok(GraphValue {
                y,
                shots,
                bracket: last_bracket,
                exact_unperturbed: false,
            });
        }
    }
    Err(Error::NoConvergence(
        "component-wise graph iteration did not settle".into(),
    ))
}

/// Energies `y^s` such that the forward orbit from chart point `(y, x)`
/// converges to the cylinder.
#[allow(clippy::too_many_arguments)]
pub fn stable_graph_y(
    spec: &SystemSpec,
    field: &PerturbationField,
    x: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
    hint: Option<&[f64]>,
    cfg: &GeometryConfig,
) -> Result<GraphValue> {
    graph(spec, field, x, action, angle, t, eps, 1.0, hint, cfg)
}

/// Energies `y^u` such that the backward orbit from chart point `(y, x)`
/// converges to the cylinder.
#[allow(clippy::too_many_arguments)]
pub fn unstable_graph_y(
    spec: &SystemSpec,
    field: &PerturbationField,
    x: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
    hint: Option<&[f64]>,
    cfg: &GeometryConfig,
) -> Result<GraphValue> {
    graph(spec, field, x, action, angle, t, eps, -1.0, hint, cfg)
}

/// Transverse intersection of the perturbed stable and unstable graphs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomoclinicRoot {
    pub x: Vec<f64>,
    /// Common energy `y^s(x*)` of the homoclinic point.
    pub y: Vec<f64>,
    /// `y^u - y^s` at `x*`.
    pub gap: Vec<f64>,
    /// Determinant of `d(y^u - y^s)/dx` at the root.
    pub slope: f64,
    pub iterations: usize,
    pub shots: usize,
}

impl HomoclinicRoot {
    pub fn state(
        &self,
        spec: &SystemSpec,
        action: &[f64],
        angle: &[f64],
        t: f64,
    ) -> Result<ExtendedState> {
        chart_state(spec, &self.y, &self.x, action, angle, t)
    }
}

struct Gap {
    value: Vec<f64>,
    ys: Vec<f64>,
    yu: Vec<f64>,
    shots: usize,
}

#[allow(clippy::too_many_arguments)]
fn gap_at(
    spec: &SystemSpec,
    field: &PerturbationField,
    x: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
    hints: Option<(&[f64], &[f64])>,
    cfg: &GeometryConfig,
) -> Result<Gap> {
    let (hs, hu) = match hints {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let s = stable_graph_y(spec, field, x, action, angle, t, eps, hs, cfg)?;
    let u = unstable_graph_y(spec, field, x, action, angle, t, eps, hu, cfg)?;
    Ok(Gap {
        value: u.y.iter().zip(&s.y).map(|(a, b)| a - b).collect(),
        shots: s.shots + u.shots,
        ys: s.y,
        yu: u.y,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Root `x*` of `x -> y^u(x) - y^s(x)` near `x_guess`, by a Broyden
/// iteration (the secant method for one pendulum) started from a
/// finite-difference Jacobian.
#[allow(clippy::too_many_arguments)]
pub fn find_homoclinic_x(
    spec: &SystemSpec,
    field: &PerturbationField,
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
    x_guess: &[f64],
    cfg: &GeometryConfig,
) -> Result<HomoclinicRoot> {
    let n = spec.n();
    if eps == 0.0 {
        return Err(Error::Degenerate("unperturbed: manifolds coincide".into()));
    }
    if x_guess.len() != n {
        return Err(Error::Dimension {
            what: "x guess",
            expected: n,
            got: x_guess.len(),
        });
    }
    let mut shots = 0;
    let mut x = x_guess.to_vec();
    let mut g = gap_at(spec, field, &x, action, angle, t, eps, None, cfg)?;
    shots += g.shots;
    let h = 0.02;
    let mut jac = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut xk = x.clone();
        xk[k] += h;
        let gk = gap_at(
            spec,
            field,
            &xk,
            action,
            angle,
            t,
            eps,
            Some((&g.ys, &g.yu)),
            cfg,
        )?;
        shots += gk.shots;
        for i in 0..n {
            jac[i][k] = (gk.value[i] - g.value[i]) / h;
        }
    }
    let max_step = 0.5;
    for iter in 0..cfg.max_root_iterations {
        let det = crate::linalg::determinant(&jac);
        if max_abs(&g.value) <= cfg.root_tol {
            if det.abs() < cfg.degeneracy_threshold.powi(n as i32) {
                return Err(Error::Degenerate(format!(
                    "splitting derivative {det:e} below the degeneracy threshold"
                )));
            }
            return Ok(HomoclinicRoot {
                x,
                y: g.ys,
                gap: g.value,
                slope: det,
                iterations: iter,
                shots,
            });
        }
        let mut dx = crate::linalg::solve(&jac, &g.value)
            .ok_or_else(|| Error::Degenerate("singular splitting Jacobian".into()))?;
        dx.iter_mut().for_each(|v| *v = -*v);
        let len = max_abs(&dx);
        if len > max_step {
            dx.iter_mut().for_each(|v| *v *= max_step / len);
        }
        let x_new: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let g_new = gap_at(
            spec,
            field,
            &x_new,
            action,
            angle,
            t,
            eps,
            Some((&g.ys, &g.yu)),
            cfg,
        )?;
        shots += g_new.shots;
        // Broyden rank-one update J += (dg - J dx) dx^T / |dx|^2.
        let dx2: f64 = dx.iter().map(|v| v * v).sum();
        if dx2 > 0.0 {
            for i in 0..n {
                let jdx: f64 = (0..n).map(|k| jac[i][k] * dx[k]).sum();
                let r = (g_new.value[i] - g.value[i]) - jdx;
                for k in 0..n {
                    jac[i][k] += r * dx[k] / dx2;
                }
            }
        }
        x = x_new;
        g = g_new;
        if dx2.sqrt() < 1e-14 && max_abs(&g.value) <= 10.0 * cfg.root_tol {
            break;
        }
    }
    if max_abs(&g.value) <= 10.0 * cfg.root_tol {
        let det = crate::linalg::determinant(&jac);
        return Ok(HomoclinicRoot {
            x,
            y: g.ys,
            gap: g.value,
            slope: det,
            iterations: cfg.max_root_iterations,
            shots,
        });
    }
    Err(Error::NoConvergence(format!(
        "homoclinic root: |y^u - y^s| = {:e} after {} iterations",
        max_abs(&g.value),
        cfg.max_root_iterations
    )))
}
