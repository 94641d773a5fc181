use crate::flow::{integrate_to, IntegratorConfig};
use crate::melnikov::quadrature::{integrate_interval, FnIntegrand};
use crate::model::Pendulum;
use crate::{Error, Result};

fn chart_integrator() -> IntegratorConfig {
    IntegratorConfig {
        rtol: 1e-14,
        atol: 1e-15,
        ..IntegratorConfig::default()
    }
}

/// Speed `|p|` on the level set `y` at position `q`.
fn level_speed(pend: &Pendulum, y: f64, q: f64) -> Result<f64> {
    let kinetic = pend.s() * y - pend.potential.value(q);
    if kinetic <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "energy y = {y} does not reach q = {q} on the rotating branch"
        )));
    }
    Ok((2.0 * kinetic).sqrt())
}

/// Chart `(y, x) -> (p, q)`: start on the section `q = 1/2` with energy `y`
/// moving towards increasing `q`, then flow the unperturbed pendulum for
/// time `x`.
pub fn chart_to_pq(
    pend: &Pendulum,
    y: f64,
    x: f64,
    cfg: Option<&IntegratorConfig>,
) -> Result<(f64, f64)> {
    let p0 = pend.s() * level_speed(pend, y, 0.5)?;
    if x == 0.0 {
        return Ok((p0, 0.5));
    }
    let default = chart_integrator();
    let cfg = cfg.unwrap_or(&default);
    let mut state = [p0, 0.5];
    integrate_to(crate::flow::pendulum_rhs(pend), 0.0, &mut state, x, cfg)?;
    Ok((state[0], state[1]))
}

/// Inverse chart `(p, q) -> (y, x)` on the rotating branch `s p > 0`,
/// `q` in `(0, 1)`: `x = int_{1/2}^{q} dq' / |p(q', y)|`.
pub fn pq_to_chart(pend: &Pendulum, p: f64, q: f64, tol: f64) -> Result<(f64, f64)> {
    if pend.s() * p <= 0.0 || !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "(p, q) = ({p}, {q}) is outside the chart domain"
        )));
    }
    let y = pend.energy(p, q);
    let mut f = FnIntegrand::new(1, |u: f64, out: &mut [f64]| {
        out[0] = 1.0 / level_speed(pend, y, u)?;
        Ok(())
    });
    let r = integrate_interval(&mut f, 0.5_f64.min(q), 0.5_f64.max(q), tol, 2000)?;
    let x = if q >= 0.5 { r.value[0] } else { -r.value[0] };
    Ok((y, x))
}

/// Determinant of the Jacobian of `(p, q) -> (y, x)`, with `dy` analytic and
/// `dx` from five-point central differences of step `h`.
pub fn chart_jacobian_det(pend: &Pendulum, p: f64, q: f64, h: f64) -> Result<f64> {
    let tol = 1e-15;
    let x_at = |pp: f64, qq: f64| -> Result<f64> { Ok(pq_to_chart(pend, pp, qq, tol)?.1) };
    let five = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        Ok((-f(2.0 * h)? + 8.0 * f(h)? - 8.0 * f(-h)? + f(-2.0 * h)?) / (12.0 * h))
    };
    let x_p = five(&|dp| x_at(p + dp, q))?;
    let x_q = five(&|dq| x_at(p, q + dq))?;
    let y_p = pend.s() * p;
    let y_q = pend.s() * pend.potential.deriv(q);
    Ok(y_p * x_q - y_q * x_p)
}
