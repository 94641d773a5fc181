//! Flows of the unperturbed and perturbed systems, the unperturbed
//! separatrices and homoclinic points.

mod dop853;
mod separatrix;
mod tableau;

pub use dop853::{
    integrate, integrate_fixed, integrate_to, Control, IntegratorConfig, Outcome, Rhs,
};
pub(crate) use separatrix::pendulum_rhs;
pub use separatrix::{PendulumSeparatrix, Separatrix, SeparatrixMode};

use thiserror::Error;

use crate::model::{ExtendedState, PerturbationField, PhaseRef, SystemSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("step limit reached after {steps} steps at t = {t}")]
    StepLimit {
        t: f64,
        state: Vec<f64>,
        steps: usize,
    },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    #[error("non-finite state after t = {t}: {message}")]
    NonFinite {
        t: f64,
        last_good: Vec<f64>,
        message: String,
    },
    #[error("field evaluation failed at t = {t}: {message}")]
    Field {
        t: f64,
        state: Vec<f64>,
        message: String,
    },
    #[error("{0}")]
    InvalidInput(String),
}

/// Right-hand side `X0 + eps X1` on the flat phase vector.
pub struct SystemRhs<'a> {
    spec: &'a SystemSpec,
    field: Option<&'a PerturbationField>,
    eps: f64,
    scratch: Vec<f64>,
}

impl<'a> SystemRhs<'a> {
    pub fn new(spec: &'a SystemSpec, field: Option<&'a PerturbationField>, eps: f64) -> Self {
        Self {
            spec,
            field,
            eps,
            scratch: vec![0.0; spec.dim()],
        }
    }
}

impl Rhs for SystemRhs<'_> {
    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let z = PhaseRef {
            n: self.spec.n(),
            d: self.spec.d(),
            phase: y,
            t,
        };
        match self.field {
            Some(f) => crate::model::field::perturbed_into(
                self.spec,
                f,
                z,
                self.eps,
                &mut self.scratch,
                out,
            ),
            None => {
                crate::model::field::unperturbed_into(self.spec, z, out);
                Ok(())
            }
        }
    }
}

/// Flow of `X0 + eps X1` for time `ds` (negative for backward flow).
pub fn flow_perturbed(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: &ExtendedState,
    ds: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<ExtendedState> {
    spec.check_state(z)?;
    field.check_system(spec)?;
    field.check_eps(eps)?;
    let mut y = z.phase().to_vec();
    let t1 = z.t() + ds;
    integrate_to(
        SystemRhs::new(spec, Some(field), eps),
        z.t(),
        &mut y,
        t1,
        cfg,
    )?;
    Ok(ExtendedState::from_phase(spec.n(), spec.d(), &y, t1))
}

/// Unperturbed flow: the rotator is advanced in closed form and the pendula
/// by the adaptive integrator.
pub fn flow_unperturbed_exact(
    spec: &SystemSpec,
    z: &ExtendedState,
    ds: f64,
    cfg: &IntegratorConfig,
) -> Result<ExtendedState> {
    spec.check_state(z)?;
    let n = spec.n();
    let mut out = z.clone();
    let omega = spec.rotator.frequency(z.action());
    for (a, w) in out.angle_mut().iter_mut().zip(&omega) {
        *a += w * ds;
    }
    out.set_t(z.t() + ds);
    let at_rest = z.p().iter().chain(z.q()).all(|x| *x == 0.0);
    if !at_rest && ds != 0.0 {
        let mut y: Vec<f64> = z.p().iter().chain(z.q()).copied().collect();
        let rhs = |_t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
            for (i, pend) in spec.pendula.iter().enumerate() {
                let (dp, dq) = pend.field(y[i], y[n + i]);
                out[i] = dp;
                out[n + i] = dq;
            }
            Ok(())
        };
        integrate_to(rhs, 0.0, &mut y, ds, cfg)?;
        out.p_mut().copy_from_slice(&y[..n]);
        out.q_mut().copy_from_slice(&y[n..]);
    }
    Ok(out)
}

/// Flow restricted to the cylinder `p = q = 0`:
/// `dI = eps X1_I(0, 0, I, theta, t)`, `dtheta = omega(I) + eps X1_theta`.
///
/// Only meaningful when the cylinder is invariant, i.e. the pendulum
/// components of `X1` vanish on it; `check_cylinder_invariance` tests that.
pub fn flow_on_cylinder(
    spec: &SystemSpec,
    field: &PerturbationField,
    action: &[f64],
    angle: &[f64],
    t: f64,
    ds: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, d) = (spec.n(), spec.d());
    let mut y: Vec<f64> = action.iter().chain(angle).copied().collect();
    let mut phase = vec![0.0; 2 * n + 2 * d];
    let mut full = vec![0.0; 2 * n + 2 * d];
    let mut scratch = vec![0.0; 2 * n + 2 * d];
    let rhs = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        phase[2 * n..].copy_from_slice(y);
        let z = PhaseRef {
            n,
            d,
            phase: &phase,
            t,
        };
        crate::model::field::perturbed_into(spec, field, z, eps, &mut scratch, &mut full)?;
        out.copy_from_slice(&full[2 * n..]);
        Ok(())
    };
    integrate_to(rhs, t, &mut y, t + ds, cfg)?;
    Ok((y[..d].to_vec(), y[d..].to_vec()))
}

/// Largest pendulum component of `X1` on the cylinder at the given point.
pub fn cylinder_leak(
    spec: &SystemSpec,
    field: &PerturbationField,
    action: &[f64],
    angle: &[f64],
    t: f64,
    eps: f64,
) -> Result<f64> {
    let z = ExtendedState::on_cylinder(spec.n(), action, angle, t)?;
    let x = field.eval(&z, eps)?;
    Ok(x.p()
        .iter()
        .chain(x.q())
        .fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Unperturbed homoclinic point: pendulum `i` on its separatrix at time
/// `tau[i]`, rotator at `(I, theta)`.
pub fn homoclinic_point(
    spec: &SystemSpec,
    sep: &Separatrix,
    tau: &[f64],
    action: &[f64],
    angle: &[f64],
    t: f64,
) -> Result<ExtendedState> {
    let n = spec.n();
    if tau.len() != n {
        return Err(crate::Error::Dimension {
            what: "tau",
            expected: n,
            got: tau.len(),
        });
    }
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let (pi, qi) = sep.point(i, tau[i])?;
        p[i] = pi;
        q[i] = qi;
    }
    let z = ExtendedState::new(&p, &q, action, angle, t)?;
    spec.check_state(&z)?;
    Ok(z)
}
