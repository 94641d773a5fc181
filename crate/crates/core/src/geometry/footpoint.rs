use serde::{Deserialize, Serialize};

use super::GeometryConfig;
use crate::flow::{cylinder_leak, flow_on_cylinder, flow_perturbed};
use crate::model::{pendulum_energy, ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FootpointConfig {
    /// Admissible pendulum distance from the saddle after the horizon.
    pub delta: f64,
    /// Constant `C` of the convergence estimate `C e^{-mu T}`.
    pub rate_constant: f64,
    /// Horizon `factor * ln(1/eps) / mu-` before clamping.
    pub horizon_factor: f64,
    pub horizon_cap: f64,
    /// Fixed horizon overriding the rule above.
    pub horizon: Option<f64>,
    /// Largest admissible `|y_i|` of the input point.
    pub band: f64,
    /// Largest admissible pendulum component of `X1` on `p = q = 0`.
    pub invariance_tol: f64,
}

impl Default for FootpointConfig {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            rate_constant: 4.0,
            horizon_factor: 1.5,
            horizon_cap: 16.0,
            horizon: None,
            band: 0.04,
            invariance_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootpointResult {
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
    pub t: f64,
    pub horizon: f64,
    /// Pendulum distance from the saddle after the horizon.
    pub residual: f64,
}

/// Horizon `T = max(ln(C/delta), factor ln(1/|eps|)) / mu-`, capped.
pub fn footpoint_horizon(spec: &SystemSpec, eps: f64, cfg: &FootpointConfig) -> Result<f64> {
    if let Some(t) = cfg.horizon {
        return Ok(t);
    }
    let mu = spec.lambdas()?.into_iter().fold(f64::INFINITY, f64::min);
    let t_min = (cfg.rate_constant / cfg.delta).ln() / mu;
    let t_eps = if eps == 0.0 {
        0.0
    } else {
        cfg.horizon_factor * (1.0 / eps.abs()).ln() / mu
    };
    if t_min > cfg.horizon_cap {
        return Err(Error::InvalidArgument(format!(
            "horizon needed for delta = {} is {t_min}, above the cap {}",
            cfg.delta, cfg.horizon_cap
        )));
    }
    Ok(t_min.max(t_eps).min(cfg.horizon_cap))
}

/// Distance of the pendulum coordinates from the nearest saddle `(0, k)`.
fn saddle_distance(z: &ExtendedState) -> f64 {
    let mut r: f64 = 0.0;
    for (p, q) in z.p().iter().zip(z.q()) {
        r = r.max(p.abs()).max((q - q.round()).abs());
    }
    r
}

fn footpoint(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: &ExtendedState,
    eps: f64,
    direction: f64,
    cfg: &GeometryConfig,
) -> Result<FootpointResult> {
    spec.check_state(z)?;
    field.check_system(spec)?;
    field.check_eps(eps)?;
    let fc = &cfg.footpoint;
    let y = pendulum_energy(spec, z);
    if let Some(bad) = y.iter().find(|v| v.abs() > fc.band) {
        return Err(Error::InvalidArgument(format!(
            "pendulum energy {bad} is outside the band |y| <= {}",
            fc.band
        )));
    }
    let mut horizon = footpoint_horizon(spec, eps, fc)?;
    let mut far = flow_perturbed(spec, field, z, direction * horizon, eps, &cfg.integrator)?;
    let mut residual = saddle_distance(&far);
    // Points far from the core need longer to reach the saddle; extend by
    // the decay time still missing, within the cap. A fixed horizon is
    // taken as given.
    if cfg.footpoint.horizon.is_none() {
        let mu = spec.lambdas()?.into_iter().fold(f64::INFINITY, f64::min);
        while residual > fc.delta && residual < fc.band && horizon < fc.horizon_cap {
            let extra = ((residual / fc.delta).ln() / mu + 0.5).min(fc.horizon_cap - horizon);
            far = flow_perturbed(spec, field, &far, direction * extra, eps, &cfg.integrator)?;
            horizon += extra;
            residual = saddle_distance(&far);
        }
    }
    if residual > fc.delta {
        return Err(Error::NoConvergence(format!(
            "point is not on the {} manifold to tolerance: pendulum distance {residual:e} from the saddle after time {horizon}",
            if direction > 0.0 { "stable" } else { "unstable" }
        )));
    }
    if eps != 0.0 {
        let leak = cylinder_leak(spec, field, far.action(), far.angle(), far.t(), eps)?;
        if leak > fc.invariance_tol {
            return Err(Error::InvalidArgument(format!(
                "the cylinder p = q = 0 is not invariant under the perturbation (pendulum component {leak:e})"
            )));
        }
    }
    let (action, angle) = flow_on_cylinder(
        spec,
        field,
        far.action(),
        far.angle(),
        far.t(),
        -direction * horizon,
        eps,
        &cfg.integrator,
    )?;
    Ok(FootpointResult {
        action,
        angle,
        t: z.t(),
        horizon,
        residual,
    })
}

/// Footpoint `Omega+(z)` on the cylinder of a point on its stable manifold.
pub fn footpoint_plus(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: &ExtendedState,
    eps: f64,
    cfg: &GeometryConfig,
) -> Result<FootpointResult> {
    footpoint(spec, field, z, eps, 1.0, cfg)
}

/// Footpoint `Omega-(z)` of a point on the unstable manifold.
pub fn footpoint_minus(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: &ExtendedState,
    eps: f64,
    cfg: &GeometryConfig,
) -> Result<FootpointResult> {
    footpoint(spec, field, z, eps, -1.0, cfg)
}
