use serde::Serialize;

use super::footpoint::{footpoint_minus, footpoint_plus};
use super::graphs::find_homoclinic_x;
use super::GeometryConfig;
use crate::flow::{homoclinic_point, Separatrix};
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

/// One brute-force evaluation `(I-, theta-, t) -> (I+, theta+)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringSample {
    pub eps: f64,
    pub t: f64,
    pub action_minus: Vec<f64>,
    pub angle_minus: Vec<f64>,
    pub action_plus: Vec<f64>,
    pub angle_plus: Vec<f64>,
    /// Chart coordinate of the homoclinic point.
    pub x_star: Vec<f64>,
    pub homoclinic: ExtendedState,
    /// `|y^u - y^s|` at the homoclinic point.
    pub gap: f64,
    /// Residual of the backward footpoint condition.
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub horizon_plus: f64,
    pub horizon_minus: f64,
    pub saddle_residual_plus: f64,
    pub saddle_residual_minus: f64,
}

fn stage<T>(what: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::NoConvergence(m) => Error::NoConvergence(format!("{what}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{what}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{what}: {m}")),
        other => other,
    })
}

/// Brute-force scattering map: finds the homoclinic point whose backward
/// footpoint is `(I-, theta-, t)` and returns its forward footpoint. At
/// `eps = 0` the homoclinic point is taken on the unperturbed separatrix at
/// `x_guess`.
#[allow(clippy::too_many_arguments)]
pub fn scattering_map_numeric(
    spec: &SystemSpec,
    sep: &Separatrix,
    field: &PerturbationField,
    action_minus: &[f64],
    angle_minus: &[f64],
    t: f64,
    eps: f64,
    x_guess: &[f64],
    cfg: &GeometryConfig,
) -> Result<ScatteringSample> {
    let d = spec.d();
    field.check_system(spec)?;
    field.check_eps(eps)?;
    if action_minus.len() != d || angle_minus.len() != d {
        return Err(Error::Dimension {
            what: "(I-, theta-)",
            expected: d,
            got: action_minus.len().min(angle_minus.len()),
        });
    }
    if eps == 0.0 {
        let z = homoclinic_point(spec, sep, x_guess, action_minus, angle_minus, t)?;
        let minus = stage(
            "backward footpoint",
            footpoint_minus(spec, field, &z, 0.0, cfg),
        )?;
        let plus = stage(
            "forward footpoint",
            footpoint_plus(spec, field, &z, 0.0, cfg),
        )?;
        let residual = residual_norm(&minus.action, &minus.angle, action_minus, angle_minus);
        return Ok(ScatteringSample {
            eps,
            t,
            action_minus: action_minus.to_vec(),
            angle_minus: angle_minus.to_vec(),
            action_plus: plus.action,
            angle_plus: plus.angle,
            x_star: x_guess.to_vec(),
            homoclinic: z,
            gap: 0.0,
            newton_residual: residual,
            newton_iterations: 0,
            horizon_plus: plus.horizon,
            horizon_minus: minus.horizon,
            saddle_residual_plus: plus.residual,
            saddle_residual_minus: minus.residual,
        });
    }

    // Unknown: (I, theta) of the homoclinic point at time t.
    let mut u: Vec<f64> = action_minus.iter().chain(angle_minus).copied().collect();
    let target = u.clone();
    let mut x = x_guess.to_vec();
    let eval = |u: &[f64],
                x: &mut Vec<f64>|
     -> Result<(Vec<f64>, ExtendedState, f64, super::FootpointResult)> {
        let root = stage(
            "homoclinic root",
            find_homoclinic_x(spec, field, &u[..d], &u[d..], t, eps, x, cfg),
        )?;
        *x = root.x.clone();
        let z = root.state(spec, &u[..d], &u[d..], t)?;
        let minus = stage(
            "backward footpoint",
            footpoint_minus(spec, field, &z, eps, cfg),
        )?;
        let r: Vec<f64> = minus
            .action
            .iter()
            .chain(&minus.angle)
            .zip(&target)
            .map(|(a, b)| a - b)
            .collect();
        let gap = root.gap.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok((r, z, gap, minus))
    };
    let mut jac_inv = identity(2 * d);
    let (mut r, mut z, mut gap, mut minus) = eval(&u, &mut x)?;
    let mut iterations = 0;
    while max_abs(&r) > cfg.newton_tol {
        if iterations >= cfg.max_newton_iterations {
            return Err(Error::NoConvergence(format!(
                "scattering map: backward footpoint residual {:e} after {iterations} iterations",
                max_abs(&r)
            )));
        }
        iterations += 1;
        let du: Vec<f64> = mat_vec(&jac_inv, &r).into_iter().map(|v| -v).collect();
        let u_new: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        let (r_new, z_new, gap_new, minus_new) = eval(&u_new, &mut x)?;
        // Good Broyden update of the inverse Jacobian.
        let dr: Vec<f64> = r_new.iter().zip(&r).map(|(a, b)| a - b).collect();
        let h_dr = mat_vec(&jac_inv, &dr);
        let denom: f64 = du.iter().zip(&h_dr).map(|(a, b)| a * b).sum();
        if denom.abs() > 1e-300 {
            let num: Vec<f64> = du.iter().zip(&h_dr).map(|(a, b)| a - b).collect();
            let du_h = vec_mat(&du, &jac_inv);
            for i in 0..2 * d {
                for k in 0..2 * d {
                    jac_inv[i][k] += num[i] * du_h[k] / denom;
                }
            }
        }
        u = u_new;
        r = r_new;
        z = z_new;
        gap = gap_new;
        minus = minus_new;
    }
    let plus = stage(
        "forward footpoint",
        footpoint_plus(spec, field, &z, eps, cfg),
    )?;
    Ok(ScatteringSample {
        eps,
        t,
        action_minus: action_minus.to_vec(),
        angle_minus: angle_minus.to_vec(),
        action_plus: plus.action,
        angle_plus: plus.angle,
        x_star: x,
        homoclinic: z,
        gap,
        newton_residual: max_abs(&r),
        newton_iterations: iterations,
        horizon_plus: plus.horizon,
        horizon_minus: minus.horizon,
        saddle_residual_plus: plus.residual,
        saddle_residual_minus: minus.residual,
    })
}

fn residual_norm(a: &[f64], th: &[f64], a0: &[f64], th0: &[f64]) -> f64 {
    a.iter()
        .chain(th)
        .zip(a0.iter().chain(th0))
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.first().map_or(0, Vec::len);
    (0..n)
        .map(|k| v.iter().zip(m).map(|(a, row)| a * row[k]).sum())
        .collect()
}
