use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig, Sample};
use crate::output::{blanks, indexed, nums, Cell, Table, Writer};
use scatmap::flow::Separatrix;
use scatmap::geometry::scattering_map_numeric;
use scatmap::hamgen::{hamiltonian_of, script_l, GeneratingFunction};
use scatmap::melnikov::{melnikov, splitting_zero, HomoclinicData, MelnikovResult};
use scatmap::verify::{gronwall_experiment, order_fit, selftest, OrderFit};
use scatmap::{Error, PerturbationField, SystemSpec};

/// Files written and the number of rows or checks that failed numerically.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

/// Stable short code for a failed row.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::InvalidSystem(_) => "invalid_system",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Dimension { .. } => "dimension",
        Error::EpsOutOfRange { .. } => "eps_out_of_range",
        Error::NonFiniteField { .. } => "non_finite_field",
        Error::Expr(_) => "expression",
        Error::Flow(_) => "integration",
        Error::Quadrature(_) => "quadrature",
        Error::NoConvergence(_) => "no_convergence",
        Error::Degenerate(_) => "degenerate",
    }
}

struct Context {
    spec: SystemSpec,
    field: PerturbationField,
    sep: Separatrix,
}

fn context(cfg: &RunConfig) -> anyhow::Result<Context> {
    let spec = cfg.system()?;
    cfg.check_samples(&spec)?;
    let field = cfg.field(&spec)?;
    let sep = Separatrix::new(&spec, cfg.separatrix_mode())?;
    Ok(Context { spec, field, sep })
}

fn sample_tau(ctx: &Context, cfg: &RunConfig, s: &Sample) -> scatmap::Result<Vec<f64>> {
    let guess = s.tau.clone().unwrap_or_else(|| vec![0.0; ctx.spec.n()]);
    if cfg.experiment.locate_zero {
        splitting_zero(
            &ctx.spec,
            &ctx.sep,
            &ctx.field,
            &s.action,
            &s.angle,
            s.t,
            &guess,
            &cfg.numeric.quad,
        )
    } else {
        Ok(guess)
    }
}

fn first_order(ctx: &Context, cfg: &RunConfig, s: &Sample) -> scatmap::Result<MelnikovResult> {
    let tau = sample_tau(ctx, cfg, s)?;
    let h = HomoclinicData::new(&tau, &s.action, &s.angle, s.t);
    melnikov(&ctx.spec, &ctx.sep, &ctx.field, &h, &cfg.numeric.quad)
}

fn status(r: &Result<(), &Error>) -> Option<Cell> {
    Some(Cell::Text(match r {
        Ok(()) => "ok".into(),
        Err(e) => error_code(e).into(),
    }))
}

fn message(r: &Result<(), &Error>) -> Option<Cell> {
    match r {
        Ok(()) => None,
        Err(e) => Some(Cell::Text(e.to_string())),
    }
}

pub fn cmd_melnikov(cfg: &RunConfig, out: &Writer) -> anyhow::Result<Outcome> {
    let ctx = context(cfg)?;
    let (n, d) = (ctx.spec.n(), ctx.spec.d());
    let mut header = vec![];
    header.extend(indexed("I", d));
    header.extend(indexed("theta", d));
    header.push("t".into());
    header.extend(indexed("tau", n));
    header.extend(indexed("M_y", n));
    header.extend(indexed("dI1_", d));
    header.extend(indexed("dtheta1_", d));
    header.push("tail_est".into());
    header.extend(indexed("dtheta1_half_", d));
    header.push("status".into());
    header.push("message".into());
    let results: Vec<_> = cfg
        .experiment
        .samples
        .par_iter()
        .map(|s| first_order(&ctx, cfg, s))
        .collect();
    let mut table = Table::new(header);
    let mut failures = 0;
    for (s, r) in cfg.experiment.samples.iter().zip(&results) {
        let mut row = nums(&s.action);
        row.extend(nums(&s.angle));
        row.push(Some(Cell::Num(s.t)));
        match r {
            Ok(m) => {
                row.extend(nums(&m.data.tau));
                row.extend(nums(&m.splitting));
                row.extend(nums(&m.delta_action));
                row.extend(nums(&m.delta_angle));
                row.push(Some(Cell::Num(m.tail_estimate)));
                row.extend(nums(&m.delta_angle_half_line));
            }
            Err(_) => {
                failures += 1;
                row.extend(blanks(2 * n + 3 * d + 1));
            }
        }
        let st = r.as_ref().map(|_| ());
        row.push(status(&st));
        row.push(message(&st));
        table.push(row);
    }
    let summary = json!({ "rows": table.rows.len(), "failures": failures });
    Ok(Outcome {
        files: out.emit("melnikov", cfg, Some(&table), summary)?,
        failures,
    })
}

fn fit_json(points: &[(f64, f64)]) -> Value {
    match order_fit(points) {
        Ok(OrderFit {
            slope,
            intercept,
            r_squared,
            adequate,
            excluded,
            ..
        }) => json!({
            "slope": slope, "intercept": intercept, "r_squared": r_squared,
            "adequate": adequate, "excluded": excluded,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn cmd_scatter(cfg: &RunConfig, out: &Writer) -> anyhow::Result<Outcome> {
    let ctx = context(cfg)?;
    let (n, d) = (ctx.spec.n(), ctx.spec.d());
    let mut eps_grid = vec![0.0];
    eps_grid.extend(cfg.experiment.eps.iter().copied().filter(|e| *e != 0.0));
    let predictions: Vec<_> = cfg
        .experiment
        .samples
        .par_iter()
        .map(|s| first_order(&ctx, cfg, s))
        .collect();
    let jobs: Vec<(usize, f64)> = (0..cfg.experiment.samples.len())
        .flat_map(|k| eps_grid.iter().map(move |&e| (k, e)))
        .collect();
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(k, eps)| {
            let s = &cfg.experiment.samples[k];
            let m = predictions[k].as_ref().ok()?;
            Some(scattering_map_numeric(
                &ctx.spec,
                &ctx.sep,
                &ctx.field,
                &s.action,
                &s.angle,
                s.t,
                eps,
                &m.data.tau,
                &cfg.numeric.geometry,
            ))
        })
        .collect();
    let mut header: Vec<String> = vec!["sample".into(), "eps".into()];
    header.extend(indexed("I_minus", d));
    header.extend(indexed("theta_minus", d));
    header.push("t".into());
    header.extend(indexed("I_plus", d));
    header.extend(indexed("theta_plus", d));
    header.extend(indexed("x_star", n));
    header.extend(["gap", "newton_iterations", "horizon_minus", "horizon_plus"].map(String::from));
    header.extend(indexed("dI_pred", d));
    header.extend(indexed("dtheta_pred", d));
    header.extend(["err_I", "err_theta", "err_theta_half"].map(String::from));
    header.push("status".into());
    header.push("message".into());
    let mut table = Table::new(header);
    let mut failures = 0;
    // Per sample: (eps, error) points of the action, angle and half-line
    // angle predictions.
    type Points = Vec<(f64, f64)>;
    let mut fits: Vec<(Points, Points, Points)> =
        vec![Default::default(); cfg.experiment.samples.len()];
    for (&(k, eps), run) in jobs.iter().zip(&runs) {
        let s = &cfg.experiment.samples[k];
        let mut row = vec![Some(Cell::Int(k as i64)), Some(Cell::Num(eps))];
        row.extend(nums(&s.action));
        row.extend(nums(&s.angle));
        row.push(Some(Cell::Num(s.t)));
        match (run, &predictions[k]) {
            (Some(Ok(r)), Ok(m)) => {
                row.extend(nums(&r.action_plus));
                row.extend(nums(&r.angle_plus));
                row.extend(nums(&r.x_star));
                row.push(Some(Cell::Num(r.gap)));
                row.push(Some(Cell::Int(r.newton_iterations as i64)));
                row.push(Some(Cell::Num(r.horizon_minus)));
                row.push(Some(Cell::Num(r.horizon_plus)));
                let di: Vec<f64> = m.delta_action.iter().map(|v| eps * v).collect();
                let dth: Vec<f64> = m.delta_angle.iter().map(|v| eps * v).collect();
                row.extend(nums(&di));
                row.extend(nums(&dth));
                let max_err = |pred: &[f64], plus: &[f64], minus: &[f64]| {
                    (0..d).fold(0.0_f64, |a, j| a.max((plus[j] - minus[j] - pred[j]).abs()))
                };
                let half: Vec<f64> = m.delta_angle_half_line.iter().map(|v| eps * v).collect();
                let e_i = max_err(&di, &r.action_plus, &r.action_minus);
                let e_th = max_err(&dth, &r.angle_plus, &r.angle_minus);
                let e_half = max_err(&half, &r.angle_plus, &r.angle_minus);
                row.extend(nums(&[e_i, e_th, e_half]));
                if eps != 0.0 {
                    fits[k].0.push((eps, e_i));
                    fits[k].1.push((eps, e_th));
                    fits[k].2.push((eps, e_half));
                }
            }
            _ => {
                failures += 1;
                row.extend(blanks(4 * d + n + 4 + 2 * d + 3));
            }
        }
        let err = match (run, &predictions[k]) {
            (_, Err(e)) | (Some(Err(e)), _) => Err(e),
            _ => Ok(()),
        };
        row.push(status(&err));
        row.push(message(&err));
        table.push(row);
    }
    let summary = json!({
        "rows": table.rows.len(),
        "failures": failures,
        "fits": fits.iter().enumerate().map(|(k, (a, b, c))| json!({
            "sample": k,
            "err_I": fit_json(a),
            "err_theta": fit_json(b),
            "err_theta_half": fit_json(c),
        })).collect::<Vec<_>>(),
    });
    let mut files = out.emit("scatter", cfg, Some(&table), summary)?;
    if cfg.output.gnuplot {
        let script = "set logscale xy\nset key left top\nset xlabel 'eps'\nset ylabel 'error'\n\
             set datafile separator ','\n\
             plot 'scatter.csv' using 'eps':'err_I' with linespoints title 'action', \\\n     \
             '' using 'eps':'err_theta' with linespoints title 'angle', \\\n     \
             '' using 'eps':'err_theta_half' with linespoints title 'angle (half line)'\n";
        files.push(out.write_text("scatter.gp", script)?);
    }
    Ok(Outcome { files, failures })
}

pub fn cmd_hamgen(cfg: &RunConfig, out: &Writer) -> anyhow::Result<Outcome> {
    let ctx = context(cfg)?;
    let h1 = hamiltonian_of(&ctx.field).map_err(|e| ConfigError(e.to_string()))?;
    let (n, d) = (ctx.spec.n(), ctx.spec.d());
    let mut header = vec![];
    header.extend(indexed("I", d));
    header.extend(indexed("theta", d));
    header.push("t".into());
    header.extend(indexed("tau_star", n));
    header.extend(["script_L", "hessian_det", "S"].map(String::from));
    header.extend(indexed("dL_dtheta", d));
    header.extend(indexed("dL_dI", d));
    header.extend(indexed("dI1_", d));
    header.extend(indexed("dtheta1_", d));
    header.extend(["triangle_I", "triangle_theta", "envelope_residual"].map(String::from));
    header.push("status".into());
    header.push("message".into());
    let results: Vec<_> = cfg
        .experiment
        .samples
        .par_iter()
        .map(|s| {
            let g = script_l(
                &ctx.spec,
                &ctx.sep,
                h1,
                &s.action,
                &s.angle,
                s.t,
                s.tau.as_deref(),
                &cfg.numeric.generating,
            )?;
            let h = HomoclinicData::new(&g.tau_star.tau, &s.action, &s.angle, s.t);
            let m = melnikov(
                &ctx.spec,
                &ctx.sep,
                &ctx.field,
                &h,
                &cfg.numeric.generating.quad,
            )?;
            Ok((g, m))
        })
        .collect::<Vec<scatmap::Result<_>>>();
    let mut table = Table::new(header);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for (s, r) in cfg.experiment.samples.iter().zip(&results) {
        let mut row = nums(&s.action);
        row.extend(nums(&s.angle));
        row.push(Some(Cell::Num(s.t)));
        match r {
            Ok((g, m)) => {
                let sfun = GeneratingFunction::from(g);
                row.extend(nums(&g.tau_star.tau));
                row.extend(nums(&[g.value, g.tau_star.hessian_det, sfun.value]));
                row.extend(nums(&g.d_angle));
                row.extend(nums(&g.d_action));
                row.extend(nums(&m.delta_action));
                row.extend(nums(&m.delta_angle));
                let ti = (0..d).fold(0.0_f64, |a, j| {
                    a.max((m.delta_action[j] - g.d_angle[j]).abs())
                });
                let tt = (0..d).fold(0.0_f64, |a, j| {
                    a.max((m.delta_angle[j] + g.d_action[j]).abs())
                });
                worst = worst.max(ti).max(tt);
                row.extend(nums(&[ti, tt, g.envelope_residual]));
            }
            Err(_) => {
                failures += 1;
                row.extend(blanks(n + 3 + 4 * d + 3));
            }
        }
        let st = r.as_ref().map(|_| ());
        row.push(status(&st));
        row.push(message(&st));
        table.push(row);
    }
    let summary =
        json!({ "rows": table.rows.len(), "failures": failures, "max_triangle_residual": worst });
    Ok(Outcome {
        files: out.emit("hamgen", cfg, Some(&table), summary)?,
        failures,
    })
}

pub fn cmd_gronwall(cfg: &RunConfig, out: &Writer) -> anyhow::Result<Outcome> {
    let spec = cfg.system()?;
    let field = cfg.field(&spec)?;
    let z0 = cfg.gronwall_start(&spec)?;
    let g = &cfg.experiment.gronwall;
    let runs: Vec<_> = cfg
        .experiment
        .eps
        .par_iter()
        .map(|&eps| gronwall_experiment(&spec, &field, &z0, eps, g))
        .collect();
    if let Some(Err(e @ (Error::InvalidArgument(_) | Error::EpsOutOfRange { .. }))) =
        runs.iter().find(|r| r.is_err())
    {
        return Err(ConfigError(e.to_string()).into());
    }
    let header = [
        "eps",
        "horizon",
        "max_deviation",
        "argmax",
        "K",
        "bound",
        "pass",
        "status",
        "message",
    ]
    .map(String::from)
    .to_vec();
    let mut table = Table::new(header);
    let mut failures = 0;
    let mut points = Vec::new();
    for (&eps, r) in cfg.experiment.eps.iter().zip(&runs) {
        let mut row = vec![Some(Cell::Num(eps))];
        match r {
            Ok(rep) => {
                row.extend(nums(&[
                    rep.horizon,
                    rep.max_deviation,
                    rep.argmax,
                    rep.big_k,
                    rep.bound,
                ]));
                row.push(Some(Cell::Text(rep.pass.to_string())));
                if !rep.pass {
                    failures += 1;
                }
                points.push((eps, rep.max_deviation));
            }
            Err(_) => {
                failures += 1;
                row.extend(blanks(6));
            }
        }
        let st = r.as_ref().map(|_| ());
        row.push(status(&st));
        row.push(message(&st));
        table.push(row);
    }
    let fit = fit_json(&points);
    let slope_ok = fit
        .get("slope")
        .and_then(Value::as_f64)
        .is_some_and(|s| s >= g.rho0);
    let summary = json!({
        "rows": table.rows.len(),
        "failures": failures,
        "deviation_fit": fit,
        "slope_at_least_rho0": slope_ok,
    });
    let mut files = out.emit("gronwall", cfg, Some(&table), summary)?;
    if cfg.output.gnuplot {
        let script = "set logscale xy\nset key left top\nset xlabel 'eps'\nset ylabel 'deviation'\n\
             set datafile separator ','\n\
             plot 'gronwall.csv' using 'eps':'max_deviation' with linespoints title 'max deviation', \\\n     \
             '' using 'eps':'bound' with lines title 'K eps^rho0'\n";
        files.push(out.write_text("gronwall.gp", script)?);
    }
    Ok(Outcome { files, failures })
}

pub fn cmd_selftest(cfg: &RunConfig, out: &Writer) -> anyhow::Result<Outcome> {
    let spec = cfg.system_unchecked()?;
    let report = selftest(&spec, &cfg.numeric.suite);
    let failures = report.failures().count();
    let summary = serde_json::to_value(&report)?;
    Ok(Outcome {
        files: out.emit("selftest", cfg, None, summary)?,
        failures,
    })
}
