use std::f64::consts::PI;

use super::{integrate, integrate_to, Control, IntegratorConfig};
use crate::model::{Pendulum, SystemSpec};
use crate::{Error, Result};

/// How to represent a separatrix whose potential has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatrixMode {
    #[default]
    Auto,
    ForceNumeric,
}

/// Upper branch of the separatrix of one pendulum, parametrised so that
/// `q(tau)` runs from the saddle at 0 (tau -> -inf) to the saddle at 1
/// (tau -> +inf) with `q(0) = 1/2`.
#[derive(Debug, Clone)]
pub enum PendulumSeparatrix {
    /// `q = (2/pi) atan(e^tau)`, `p = s sech(tau) / pi`.
    Cosine {
        sign: f64,
    },
    Numeric(Box<NumericBranch>),
}

#[derive(Debug, Clone)]
pub struct NumericBranch {
    pendulum: Pendulum,
    lambda: f64,
    spacing: f64,
    /// States at `tau = -k * spacing`, `k = 0, 1, ...`.
    unstable_nodes: Vec<(f64, f64)>,
    unstable_seed_tau: f64,
    unstable_seed: (f64, f64),
    /// States at `tau = k * spacing`, stored as `(p, q - 1)` so that the
    /// approach to the saddle at 1 keeps full relative precision.
    stable_nodes: Vec<(f64, f64)>,
    stable_seed_tau: f64,
    stable_seed: (f64, f64),
    cfg: IntegratorConfig,
}

const SEED_OFFSET: f64 = 1e-8;
const NODE_SPACING: f64 = 1.0 / 16.0;

impl NumericBranch {
    fn build(pendulum: &Pendulum) -> Result<Self> {
        let lambda = pendulum.lambda()?;
        let s = pendulum.s();
        let cfg = IntegratorConfig {
            rtol: 1e-13,
            atol: 1e-20,
            ..IntegratorConfig::default()
        };
        let level_p = |q: f64| -> Result<f64> {
            let v = pendulum.potential.value(q);
            if v >= 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "V({q}) = {v} >= 0 on the separatrix seed"
                )));
            }
            Ok(s * (-2.0 * v).sqrt())
        };
        let unstable_seed = (level_p(SEED_OFFSET)?, SEED_OFFSET);
        // The potential is 1-periodic, so the stable branch is integrated in
        // the shifted coordinate `q - 1`.
        let stable_seed = (level_p(-SEED_OFFSET)?, -SEED_OFFSET);
        let t_u = time_to_midpoint(pendulum, unstable_seed, 0.5, 1.0, &cfg)?;
        let t_s = time_to_midpoint(pendulum, stable_seed, -0.5, -1.0, &cfg)?;
        let unstable_nodes = tabulate(pendulum, unstable_seed, t_u, 1.0, &cfg)?;
        let stable_nodes = tabulate(pendulum, stable_seed, t_s, -1.0, &cfg)?;
        Ok(Self {
            pendulum: pendulum.clone(),
            lambda,
            spacing: NODE_SPACING,
            unstable_nodes,
            unstable_seed_tau: -t_u,
            unstable_seed,
            stable_nodes,
            stable_seed_tau: t_s,
            stable_seed,
            cfg,
        })
    }

    fn advance(&self, state: (f64, f64), dt: f64) -> Result<(f64, f64)> {
        if dt == 0.0 {
            return Ok(state);
        }
        let mut y = [state.0, state.1];
        integrate_to(pendulum_rhs(&self.pendulum), 0.0, &mut y, dt, &self.cfg)?;
        Ok((y[0], y[1]))
    }

    fn point(&self, tau: f64) -> Result<(f64, f64)> {
        let h = self.spacing;
        if tau <= 0.0 {
            if tau <= self.unstable_seed_tau {
                let g = (self.lambda * (tau - self.unstable_seed_tau)).exp();
                return Ok((self.unstable_seed.0 * g, self.unstable_seed.1 * g));
            }
            let k = ((-tau) / h).ceil() as usize;
            let (start_tau, start) = if k < self.unstable_nodes.len() {
                (-(k as f64) * h, self.unstable_nodes[k])
            } else {
                (self.unstable_seed_tau, self.unstable_seed)
            };
            self.advance(start, tau - start_tau)
        } else {
            if tau >= self.stable_seed_tau {
                let g = (-self.lambda * (tau - self.stable_seed_tau)).exp();
                return Ok((self.stable_seed.0 * g, 1.0 + self.stable_seed.1 * g));
            }
            let k = (tau / h).ceil() as usize;
            let (start_tau, start) = if k < self.stable_nodes.len() {
                (k as f64 * h, self.stable_nodes[k])
            } else {
                (self.stable_seed_tau, self.stable_seed)
            };
            let (p, u) = self.advance(start, tau - start_tau)?;
            Ok((p, 1.0 + u))
        }
    }
}

pub(crate) fn pendulum_rhs(p: &Pendulum) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    move |_t, y, out| {
        let (dp, dq) = p.field(y[0], y[1]);
        out[0] = dp;
        out[1] = dq;
        Ok(())
    }
}

/// Time for the branch seeded at `seed` to reach `q = target`, flowing in
/// `direction` (+1 forward, -1 backward).
fn time_to_midpoint(
    p: &Pendulum,
    seed: (f64, f64),
    target: f64,
    direction: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let mut y = [seed.0, seed.1];
    let crossed = |q: f64| {
        if direction > 0.0 {
            q >= target
        } else {
            q <= target
        }
    };
    let horizon = direction * 200.0 / p.lambda()?;
    let out = integrate(pendulum_rhs(p), 0.0, &mut y, horizon, cfg, |_, y| {
        if crossed(y[1]) {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    if !out.stopped {
        return Err(Error::NoConvergence(
            "separatrix branch never reached q = 1/2".into(),
        ));
    }
    let mut t = out.t;
    for _ in 0..8 {
        let (_, dq) = p.field(y[0], y[1]);
        let dt = (target - y[1]) / dq;
        if dt.abs() < 1e-14 {
            break;
        }
        integrate_to(pendulum_rhs(p), t, &mut y, t + dt, cfg)?;
        t += dt;
    }
    Ok(t.abs())
}

/// Node states at `tau = -direction * k * spacing` measured from the midpoint,
/// computed by flowing from the seed (at `-direction * t_mid`) in `direction`.
fn tabulate(
    p: &Pendulum,
    seed: (f64, f64),
    t_mid: f64,
    direction: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>> {
    let k_max = (t_mid / NODE_SPACING).floor() as usize;
    let mut nodes = vec![(0.0, 0.0); k_max + 1];
    let mut y = [seed.0, seed.1];
    let mut elapsed = 0.0;
    for k in (0..=k_max).rev() {
        let target = t_mid - k as f64 * NODE_SPACING;
        integrate_to(
            pendulum_rhs(p),
            direction * elapsed,
            &mut y,
            direction * target,
            cfg,
        )?;
        elapsed = target;
        nodes[k] = (y[0], y[1]);
    }
    Ok(nodes)
}

/// Separatrices of all pendula of a system.
#[derive(Debug, Clone)]
pub struct Separatrix {
    branches: Vec<PendulumSeparatrix>,
    lambdas: Vec<f64>,
}

impl Separatrix {
    pub fn new(spec: &SystemSpec, mode: SeparatrixMode) -> Result<Self> {
        let mut branches = Vec::with_capacity(spec.n());
        for pend in &spec.pendula {
            pend.potential.validate()?;
            let b = if pend.potential.is_builtin_cosine() && mode == SeparatrixMode::Auto {
                PendulumSeparatrix::Cosine { sign: pend.s() }
            } else {
                PendulumSeparatrix::Numeric(Box::new(NumericBranch::build(pend)?))
            };
            branches.push(b);
        }
        Ok(Self {
            branches,
            lambdas: spec.lambdas()?,
        })
    }

    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambdas[i]
    }

    pub fn is_closed_form(&self, i: usize) -> bool {
        matches!(self.branches[i], PendulumSeparatrix::Cosine { .. })
    }

    /// `(p, q)` of pendulum `i` at separatrix time `tau`.
    pub fn point(&self, i: usize, tau: f64) -> Result<(f64, f64)> {
        if !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "separatrix time {tau} is not finite"
            )));
        }
        match &self.branches[i] {
            PendulumSeparatrix::Cosine { sign } => Ok(cosine_point(*sign, tau)),
            PendulumSeparatrix::Numeric(b) => b.point(tau),
        }
    }

    /// Separatrix time at which pendulum `i` passes through `q` in `(0, 1)`.
    pub fn time_of_q(&self, i: usize, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "q = {q} is not on the open branch (0, 1)"
            )));
        }
        if let PendulumSeparatrix::Cosine { .. } = self.branches[i] {
            return Ok((0.5 * PI * q).tan().ln());
        }
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.point(i, lo)?.1 > q {
            lo *= 2.0;
            if lo < -1e3 {
                return Err(Error::NoConvergence("separatrix time bracket".into()));
            }
        }
        while self.point(i, hi)?.1 < q {
            hi *= 2.0;
            if hi > 1e3 {
                return Err(Error::NoConvergence("separatrix time bracket".into()));
            }
        }
        while hi - lo > 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if self.point(i, mid)?.1 < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub(crate) fn cosine_point(sign: f64, tau: f64) -> (f64, f64) {
    let q = 2.0 / PI * tau.exp().atan();
    let p = sign * crate::exprs::Scalar::sech(tau) / PI;
    (p, q)
}
