//! Adaptive Gauss-Kronrod quadrature on finite panels and on exponentially
//! decaying tails.
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Absolute tolerance per integral, shared between panels and tails.
    pub tol: f64,
    pub max_panels: usize,
    /// Multiplies every tail cutoff; 2 doubles the truncation length.
    pub cutoff_scale: f64,
    pub max_extensions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_panels: 4000,
            cutoff_scale: 1.0,
            max_extensions: 6,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0
            && self.tol.is_finite()
            && self.cutoff_scale >= 1.0
            && self.max_panels > 0)
        {
            return Err(Error::InvalidArgument(format!(
                "bad quadrature configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Vector integral together with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error_estimate: f64,
    /// Estimated magnitude of the truncated tails.
    pub tail_estimate: f64,
    /// Integration window actually used.
    pub window: (f64, f64),
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Vector integrand `f(s, out)`.
pub trait Integrand {
    fn dim(&self) -> usize;
    fn eval(&mut self, s: f64, out: &mut [f64]) -> Result<()>;
}

pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(f64, &mut [f64]) -> Result<()>> FnIntegrand<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(f64, &mut [f64]) -> Result<()>> Integrand for FnIntegrand<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&mut self, s: f64, out: &mut [f64]) -> Result<()> {
        (self.f)(s, out)
    }
}

fn checked_eval<I: Integrand>(f: &mut I, s: f64, out: &mut [f64], evals: &mut usize) -> Result<()> {
    *evals += 1;
    f.eval(s, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!(
            "integrand is not finite at s = {s}"
        )));
    }
    Ok(())
}

fn gk15<I: Integrand>(f: &mut I, a: f64, b: f64, evals: &mut usize) -> Result<(Vec<f64>, f64)> {
    let m = f.dim();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; m];
    let mut gauss = vec![0.0; m];
    let mut buf = vec![0.0; m];
    checked_eval(f, c, &mut buf, evals)?;
    for k in 0..m {
        kron[k] = WGK[7] * buf[k];
        gauss[k] = WG[3] * buf[k];
    }
    let mut buf2 = vec![0.0; m];
    for j in 0..7 {
        let x = h * XGK[j];
        checked_eval(f, c - x, &mut buf, evals)?;
        checked_eval(f, c + x, &mut buf2, evals)?;
        for k in 0..m {
            let s = buf[k] + buf2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..m {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    Ok((kron, err))
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_interval<I: Integrand>(
    f: &mut I,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    let mut evals = 0;
    if a == b {
        return Ok(QuadResult {
            value: vec![0.0; f.dim()],
            error_estimate: 0.0,
            tail_estimate: 0.0,
            window: (a, b),
            evaluations: 0,
        });
    }
    let (value, err) = gk15(f, a, b, &mut evals)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, err });
    let mut total_err = err;
    while total_err > tol {
        if heap.len() >= max_panels {
            return Err(Error::Quadrature(format!(
                "panel limit {max_panels} reached on [{a}, {b}] with error {total_err:e}"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid, &mut evals)?;
        let (v2, e2) = gk15(f, mid, worst.b, &mut evals)?;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    let m = f.dim();
    let mut value = vec![0.0; m];
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut error_estimate = 0.0;
    for p in &panels {
        for k in 0..m {
            value[k] += p.value[k];
        }
        error_estimate += p.err;
    }
    Ok(QuadResult {
        value,
        error_estimate,
        tail_estimate: 0.0,
        window: (a, b),
        evaluations: evals,
    })
}

/// Describes the decay `|f(start + u)| <~ C u^k e^{-rate u}` of an
/// integrand away from `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub rate: f64,
    pub poly_degree: u32,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Integral over the half line from `start` in `direction` (+1 for
/// `[start, inf)`, -1 for `(-inf, start]`), truncated where the decay model
/// puts the tail below the tolerance.
pub fn integrate_tail<I: Integrand>(
    f: &mut I,
    start: f64,
    direction: f64,
    decay: Decay,
    tol: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(decay.rate > 0.0 && decay.rate.is_finite()) {
        return Err(Error::Quadrature(format!(
            "decay rate {} is not positive",
            decay.rate
        )));
    }
    let r = decay.rate;
    let m = f.dim();
    let mut buf = vec![0.0; m];
    let mut evals = 0;
    let mut envelope: f64 = 0.0;
    for u in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let s = start + direction * u / r;
        checked_eval(f, s, &mut buf, &mut evals)?;
        envelope = envelope.max(max_norm(&buf) * u.exp());
    }
    let budget = 0.5 * tol;
    let mut length = if envelope > 0.0 {
        ((envelope / budget).ln() / r).max(2.0 / r)
    } else {
        2.0 / r
    };
    if decay.poly_degree > 0 {
        length += f64::from(decay.poly_degree) * length.max(1.0).ln() / r;
    }
    length *= cfg.cutoff_scale;
    let mut total = vec![0.0; m];
    let mut error_estimate = 0.0;
    let mut covered = 0.0;
    for _ in 0..=cfg.max_extensions {
        let (a, b) = (start + direction * covered, start + direction * length);
        let piece = integrate_interval(f, a.min(b), a.max(b), 0.5 * budget, cfg.max_panels)?;
        evals += piece.evaluations;
        for k in 0..m {
            total[k] += piece.value[k];
        }
        error_estimate += piece.error_estimate;
        covered = length;
        let end = start + direction * length;
        // Three samples guard against an oscillating integrand that happens
        // to vanish at the cutoff.
        let mut at_end: f64 = 0.0;
        for back in [0.0, 0.5, 1.0] {
            checked_eval(f, end - direction * back / r, &mut buf, &mut evals)?;
            at_end = at_end.max(max_norm(&buf) * (-back).exp());
        }
        let poly = 1.0 + f64::from(decay.poly_degree) / (r * length);
        let tail = at_end * poly / r;
        if tail <= budget {
            return Ok(QuadResult {
                value: total,
                error_estimate,
                tail_estimate: tail,
                window: if direction > 0.0 {
                    (start, end)
                } else {
                    (end, start)
                },
                evaluations: evals,
            });
        }
        length += ((tail / budget).ln() + 1.0) / r;
    }
    Err(Error::Quadrature(format!(
        "integrand does not decay at the assumed rate {r} beyond s = {}",
        start + direction * covered
    )))
}

/// Integral over the whole line, with a finite core `[lo, hi]` and
/// exponentially decaying tails on both sides.
pub fn integrate_line<I: Integrand>(
    f: &mut I,
    lo: f64,
    hi: f64,
    decay: Decay,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    let tol = cfg.tol;
    let core = integrate_interval(f, lo, hi, tol / 3.0, cfg.max_panels)?;
    let left = integrate_tail(f, lo, -1.0, decay, tol / 3.0, cfg)?;
    let right = integrate_tail(f, hi, 1.0, decay, tol / 3.0, cfg)?;
    let value = (0..f.dim())
        .map(|k| core.value[k] + left.value[k] + right.value[k])
        .collect();
    Ok(QuadResult {
        value,
        error_estimate: core.error_estimate + left.error_estimate + right.error_estimate,
        tail_estimate: left.tail_estimate + right.tail_estimate,
        window: (left.window.0, right.window.1),
        evaluations: core.evaluations + left.evaluations + right.evaluations,
    })
}

/// Integral over `[start, inf)` (direction +1) or `(-inf, start]`
/// (direction -1), with a finite core of length `core` next to `start`.
pub fn integrate_half_line<I: Integrand>(
    f: &mut I,
    start: f64,
    direction: f64,
    core: f64,
    decay: Decay,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    let tol = cfg.tol;
    let edge = start + direction * core.max(0.0);
    let c = integrate_interval(
        f,
        start.min(edge),
        start.max(edge),
        0.5 * tol,
        cfg.max_panels,
    )?;
    let t = integrate_tail(f, edge, direction, decay, 0.5 * tol, cfg)?;
    let value = (0..f.dim()).map(|k| c.value[k] + t.value[k]).collect();
    Ok(QuadResult {
        value,
        error_estimate: c.error_estimate + t.error_estimate,
        tail_estimate: t.tail_estimate,
        window: if direction > 0.0 {
            (start, t.window.1)
        } else {
            (t.window.0, start)
        },
        evaluations: c.evaluations + t.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk15_exact_on_degree_22() {
        let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
            out[0] = s.powi(22) + 3.0 * s.powi(7);
            Ok(())
        });
        let mut evals = 0;
        let (v, _) = gk15(&mut f, -1.0, 1.0, &mut evals).unwrap();
        assert!((v[0] - 2.0 / 23.0).abs() < 1e-15);
        assert_eq!(evals, 15);
    }

    #[test]
    fn gauss_rule_exact_on_degree_13() {
        // With the Gauss rule exact, the embedded error estimate vanishes.
        let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
            out[0] = s.powi(13) + s.powi(12);
            Ok(())
        });
        let mut evals = 0;
        let (v, err) = gk15(&mut f, -1.0, 1.0, &mut evals).unwrap();
        assert!((v[0] - 2.0 / 13.0).abs() < 1e-15);
        assert!(err < 1e-15);
    }

    #[test]
    fn sech_squared_over_the_line() {
        let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
            let c = s.cosh();
            out[0] = 1.0 / (c * c);
            Ok(())
        });
        let decay = Decay {
            rate: 2.0,
            poly_degree: 0,
        };
        let r = integrate_line(&mut f, -1.0, 1.0, decay, &QuadConfig::with_tol(1e-12)).unwrap();
        assert!((r.value[0] - 2.0).abs() < 1e-12, "{}", r.value[0]);
    }

    #[test]
    fn weighted_tail() {
        // int_0^inf s e^{-s} ds = 1
        let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
            out[0] = s * (-s).exp();
            Ok(())
        });
        let decay = Decay {
            rate: 1.0,
            poly_degree: 1,
        };
        let r = integrate_half_line(&mut f, 0.0, 1.0, 0.0, decay, &QuadConfig::with_tol(1e-11))
            .unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-11, "{}", r.value[0]);
    }

    #[test]
    fn left_tail_keeps_its_orientation() {
        // int_{-inf}^0 e^s ds = 1
        let mut f = FnIntegrand::new(1, |s: f64, out: &mut [f64]| {
            out[0] = s.exp();
            Ok(())
        });
        let decay = Decay {
            rate: 1.0,
            poly_degree: 0,
        };
        let cfg = QuadConfig::with_tol(1e-12);
        let r = integrate_tail(&mut f, 0.0, -1.0, decay, 1e-12, &cfg).unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-12, "{}", r.value[0]);
        let r = integrate_half_line(&mut f, 0.0, -1.0, 3.0, decay, &cfg).unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-12, "{}", r.value[0]);
        assert!(r.window.1 == 0.0 && r.window.0 < -3.0);
    }

    #[test]
    fn non_decaying_integrand_is_rejected() {
        let mut f = FnIntegrand::new(1, |_s: f64, out: &mut [f64]| {
            out[0] = 1.0;
            Ok(())
        });
        let decay = Decay {
            rate: 1.0,
            poly_degree: 0,
        };
        assert!(integrate_tail(&mut f, 0.0, 1.0, decay, 1e-10, &QuadConfig::default()).is_err());
    }
}
