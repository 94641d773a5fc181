use serde::{Deserialize, Serialize};

use crate::flow::{integrate_to, IntegratorConfig, SystemRhs};
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

/// Declared constants of the logarithmic-horizon estimate
/// `|z_eps(t) - z_0(t)| <= K eps^rho0` for `0 <= t - t0 <= k ln(1/eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallConfig {
    /// Lipschitz constant `C0` of `X0` on the region visited.
    pub c0: f64,
    /// Bound `C1` of `|X1|` on the region visited.
    pub c1: f64,
    /// Initial offset is at most `c eps`.
    pub c: f64,
    /// Horizon factor; must satisfy `k <= (1 - rho0) / C0`.
    pub k: f64,
    pub rho0: f64,
    pub samples: usize,
    /// Horizon used at `eps = 0`, where `k ln(1/eps)` is unbounded.
    pub max_horizon: f64,
    pub integrator: IntegratorConfig,
}

impl Default for GronwallConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c: 0.0,
            k: 0.5,
            rho0: 0.5,
            samples: 200,
            max_horizon: 60.0,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub eps: f64,
    pub horizon: f64,
    pub max_deviation: f64,
    /// Time of the largest deviation, relative to the start.
    pub argmax: f64,
    pub c0: f64,
    pub c1: f64,
    pub c: f64,
    pub k: f64,
    pub rho0: f64,
    /// `K = c + C1 / C0`.
    pub big_k: f64,
    /// `K eps^rho0`.
    pub bound: f64,
    pub pass: bool,
}

/// Flows `z0` under `X0` and `X0 + eps X1` from identical starts and records
/// the largest max-norm deviation of the (unwrapped) phase on a uniform grid
/// over the horizon.
pub fn gronwall_experiment(
    spec: &SystemSpec,
    field: &PerturbationField,
    z0: &ExtendedState,
    eps: f64,
    cfg: &GronwallConfig,
) -> Result<GronwallReport> {
    spec.check_state(z0)?;
    field.check_system(spec)?;
    field.check_eps(eps)?;
    if !(cfg.c0 > 0.0 && cfg.c1 >= 0.0 && cfg.c >= 0.0 && cfg.rho0 > 0.0 && cfg.rho0 < 1.0) {
        return Err(Error::InvalidArgument(
            "Gronwall constants need C0 > 0, C1 >= 0, c >= 0 and 0 < rho0 < 1".into(),
        ));
    }
    if cfg.k <= 0.0 || cfg.k > (1.0 - cfg.rho0) / cfg.c0 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "horizon factor k = {} must lie in (0, (1 - rho0)/C0 = {}]",
            cfg.k,
            (1.0 - cfg.rho0) / cfg.c0
        )));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument(
            "Gronwall experiment needs at least one sample".into(),
        ));
    }
    let horizon = if eps == 0.0 {
        cfg.max_horizon
    } else {
        (cfg.k * (1.0 / eps.abs()).ln()).min(cfg.max_horizon)
    };
    let t0 = z0.t();
    let mut a = z0.phase().to_vec();
    let mut b = z0.phase().to_vec();
    let mut t = t0;
    let mut max_deviation: f64 = 0.0;
    let mut argmax = 0.0;
    for k in 1..=cfg.samples {
        let t1 = t0 + horizon * k as f64 / cfg.samples as f64;
        integrate_to(
            SystemRhs::new(spec, Some(field), eps),
            t,
            &mut a,
            t1,
            &cfg.integrator,
        )?;
        integrate_to(
            SystemRhs::new(spec, None, 0.0),
            t,
            &mut b,
            t1,
            &cfg.integrator,
        )?;
        t = t1;
        let dev = a
            .iter()
            .zip(&b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        if dev > max_deviation {
            max_deviation = dev;
            argmax = t1 - t0;
        }
    }
    let big_k = cfg.c + cfg.c1 / cfg.c0;
    let bound = big_k * eps.abs().powf(cfg.rho0);
    Ok(GronwallReport {
        eps,
        horizon,
        max_deviation,
        argmax,
        c0: cfg.c0,
        c1: cfg.c1,
        c: cfg.c,
        k: cfg.k,
        rho0: cfg.rho0,
        big_k,
        bound,
        pass: max_deviation <= bound,
    })
}
