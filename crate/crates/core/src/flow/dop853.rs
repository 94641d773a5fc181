use serde::{Deserialize, Serialize};

use super::tableau::{A, B, C, E3, E5, STAGES};
use super::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub max_step: f64,
    pub first_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 2_000_000,
            max_step: f64::INFINITY,
            first_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.max_step > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(FlowError::InvalidInput(format!(
                "bad integrator configuration {self:?}"
            )))
        }
    }
}

/// Observer verdict after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub t: f64,
    pub stopped: bool,
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// Right-hand side `f(t, y, out)`.
pub trait Rhs {
    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> crate::Result<()>;
}

impl<F> Rhs for F
where
    F: FnMut(f64, &[f64], &mut [f64]) -> crate::Result<()>,
{
    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> crate::Result<()> {
        self(t, y, out)
    }
}

struct Workspace {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: vec![vec![0.0; n]; STAGES + 1],
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

fn call<R: Rhs>(
    rhs: &mut R,
    t: f64,
    y: &[f64],
    out: &mut [f64],
    evals: &mut usize,
) -> Result<(), FlowError> {
    *evals += 1;
    rhs.eval(t, y, out).map_err(|e| FlowError::Field {
        t,
        state: y.to_vec(),
        message: e.to_string(),
    })
}

/// One DOP853 step of size `h` from `(t, y)`; `ws.k[0]` must hold `f(t, y)`.
/// Leaves the new state in `ws.y_new` and `f(t + h, y_new)` in `ws.k[12]`.
fn step<R: Rhs>(
    rhs: &mut R,
    t: f64,
    y: &[f64],
    h: f64,
    ws: &mut Workspace,
    evals: &mut usize,
) -> Result<(), FlowError> {
    let n = y.len();
    for s in 1..STAGES {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * ws.k[j][i];
            }
            ws.tmp[i] = y[i] + h * acc;
        }
        call(rhs, t + C[s] * h, &ws.tmp, &mut ws.k[s], evals)?;
    }
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..STAGES {
            acc += B[j] * ws.k[j][i];
        }
        ws.y_new[i] = y[i] + h * acc;
    }
    call(rhs, t + h, &ws.y_new, &mut ws.k[STAGES], evals)?;
    Ok(())
}

fn error_norm(ws: &Workspace, y: &[f64], h: f64, cfg: &IntegratorConfig) -> f64 {
    let n = y.len();
    let mut e5 = 0.0;
    let mut e3 = 0.0;
    for i in 0..n {
        let scale = cfg.atol + y[i].abs().max(ws.y_new[i].abs()) * cfg.rtol;
        let mut a5 = 0.0;
        let mut a3 = 0.0;
        for j in 0..=STAGES {
            a5 += ws.k[j][i] * E5[j];
            a3 += ws.k[j][i] * E3[j];
        }
        e5 += (a5 / scale).powi(2);
        e3 += (a3 / scale).powi(2);
    }
    if e5 == 0.0 && e3 == 0.0 {
        return 0.0;
    }
    let denom = e5 + 0.01 * e3;
    h.abs() * e5 / (denom * n as f64).sqrt()
}

fn rms_scaled(v: &[f64], y: &[f64], cfg: &IntegratorConfig) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (cfg.atol + b.abs() * cfg.rtol)).powi(2))
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<R: Rhs>(
    rhs: &mut R,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    direction: f64,
    cfg: &IntegratorConfig,
    evals: &mut usize,
) -> Result<f64, FlowError> {
    let d0 = rms_scaled(y0, y0, cfg);
    let d1 = rms_scaled(f0, y0, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0
        .iter()
        .zip(f0)
        .map(|(y, f)| y + h0 * direction * f)
        .collect();
    let mut f1 = vec![0.0; y0.len()];
    call(rhs, t0 + h0 * direction, &y1, &mut f1, evals)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y0, cfg) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    Ok((100.0 * h0).min(h1))
}

/// Adaptive DOP853 from `t0` to `t1` (either direction), updating `y` in
/// place. The observer sees every accepted step and may stop the run early;
/// on a stop `y` holds the state at the returned time.
pub fn integrate<R, O>(
    mut rhs: R,
    t0: f64,
    y: &mut [f64],
    t1: f64,
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<Outcome, FlowError>
where
    R: Rhs,
    O: FnMut(f64, &[f64]) -> Control,
{
    cfg.validate()?;
    if !t0.is_finite() || !t1.is_finite() {
        return Err(FlowError::InvalidInput(format!(
            "non-finite time span [{t0}, {t1}]"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::InvalidInput("non-finite initial state".into()));
    }
    let mut out = Outcome {
        t: t0,
        stopped: false,
        steps: 0,
        rejected: 0,
        evaluations: 0,
    };
    if t0 == t1 {
        return Ok(out);
    }
    let n = y.len();
    let direction = (t1 - t0).signum();
    let mut ws = Workspace::new(n);
    call(&mut rhs, t0, y, &mut ws.k[0], &mut out.evaluations)?;
    let mut h_abs = match cfg.first_step {
        Some(h) => h.abs(),
        None => {
            let f0 = ws.k[0].clone();
            initial_step(&mut rhs, t0, y, &f0, direction, cfg, &mut out.evaluations)?
        }
    }
    .min(cfg.max_step)
    .min((t1 - t0).abs());
    let mut t = t0;
    let mut rejected_last = false;
    loop {
        let min_step = 10.0 * (next_toward(t, direction) - t).abs();
        if h_abs < min_step {
            return Err(FlowError::StepUnderflow {
                t,
                state: y.to_vec(),
            });
        }
        h_abs = h_abs.min(cfg.max_step);
        let mut h = h_abs * direction;
        let mut t_new = t + h;
        if direction * (t_new - t1) >= 0.0 {
            t_new = t1;
        }
        h = t_new - t;
        let trial = step(&mut rhs, t, y, h, &mut ws, &mut out.evaluations);
        let err = match trial {
            Ok(()) if ws.y_new.iter().all(|v| v.is_finite()) => error_norm(&ws, y, h, cfg),
            Ok(()) => f64::INFINITY,
            Err(FlowError::Field { .. }) if h.abs() > 100.0 * min_step => f64::INFINITY,
            Err(FlowError::Field { message, .. }) => {
                return Err(FlowError::NonFinite {
                    t,
                    last_good: y.to_vec(),
                    message,
                })
            }
            Err(e) => return Err(e),
        };
        if !err.is_finite() || err >= 1.0 {
            if !err.is_finite() && h.abs() <= 100.0 * min_step {
                return Err(FlowError::NonFinite {
                    t,
                    last_good: y.to_vec(),
                    message: "step produced a non-finite state".into(),
                });
            }
            let factor = if err.is_finite() {
                (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR)
            } else {
                MIN_FACTOR
            };
            h_abs = h.abs() * factor;
            rejected_last = true;
            out.rejected += 1;
            continue;
        }
        let mut factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
        };
        if rejected_last {
            factor = factor.min(1.0);
        }
        rejected_last = false;
        h_abs = h.abs() * factor;
        t = t_new;
        y.copy_from_slice(&ws.y_new);
        let (first, rest) = ws.k.split_at_mut(1);
        first[0].copy_from_slice(&rest[STAGES - 1]);
        out.steps += 1;
        out.t = t;
        if observer(t, y) == Control::Stop {
            out.stopped = true;
            return Ok(out);
        }
        if t == t1 {
            return Ok(out);
        }
        if out.steps >= cfg.max_steps {
            return Err(FlowError::StepLimit {
                t,
                state: y.to_vec(),
                steps: out.steps,
            });
        }
    }
}

/// Adaptive integration without an observer.
pub fn integrate_to<R: Rhs>(
    rhs: R,
    t0: f64,
    y: &mut [f64],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Outcome, FlowError> {
    integrate(rhs, t0, y, t1, cfg, |_, _| Control::Continue)
}

/// `steps` equal DOP853 steps from `t0` to `t1` without error control.
pub fn integrate_fixed<R: Rhs>(
    mut rhs: R,
    t0: f64,
    y: &mut [f64],
    t1: f64,
    steps: usize,
) -> Result<(), FlowError> {
    if steps == 0 {
        return Err(FlowError::InvalidInput(
            "fixed-step integration needs at least one step".into(),
        ));
    }
    let mut ws = Workspace::new(y.len());
    let mut evals = 0;
    let h = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        call(&mut rhs, t, y, &mut ws.k[0], &mut evals)?;
        step(&mut rhs, t, y, h, &mut ws, &mut evals)?;
        y.copy_from_slice(&ws.y_new);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite {
                t: t + h,
                last_good: y.to_vec(),
                message: "fixed step produced a non-finite state".into(),
            });
        }
    }
    Ok(())
}

fn next_toward(t: f64, direction: f64) -> f64 {
    let bits = t.to_bits();
    if t == 0.0 {
        return direction * f64::from_bits(1);
    }
    let up = (t > 0.0) == (direction > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}
