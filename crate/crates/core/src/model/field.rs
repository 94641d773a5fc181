use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{ExtendedState, PhaseRef, SystemSpec, Tangent};
use crate::exprs::{Expr, Program, Var, VarLayout};
use crate::{Error, Result};

/// Evaluator for `X1(z; eps)`: writes `(dp, dq, dI, dtheta)` into `out`.
pub type FieldFn = dyn Fn(PhaseRef<'_>, f64, &mut [f64]) -> Result<()> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Zero,
    Hamiltonian {
        source: String,
    },
    Direct {
        components: Vec<String>,
    },
    Dissipation {
        pendulum_rate: f64,
        action_rate: f64,
    },
    Closure {
        label: String,
    },
    Sum(Vec<Provenance>),
    Scaled {
        factor: f64,
        inner: Box<Provenance>,
    },
}

impl Provenance {
    pub fn is_hamiltonian(&self) -> bool {
        match self {
            Provenance::Zero | Provenance::Hamiltonian { .. } => true,
            Provenance::Sum(parts) => parts.iter().all(Provenance::is_hamiltonian),
            Provenance::Scaled { inner, .. } => inner.is_hamiltonian(),
            _ => false,
        }
    }
}

/// Perturbation vector field `X1` of `X0 + eps X1`.
#[derive(Clone)]
pub struct PerturbationField {
    n: usize,
    d: usize,
    eval: Arc<FieldFn>,
    provenance: Provenance,
    hamiltonian: Option<Arc<Program>>,
    c1: Option<f64>,
    eps_max: f64,
}

impl fmt::Debug for PerturbationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationField")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("provenance", &self.provenance)
            .field("c1", &self.c1)
            .field("eps_max", &self.eps_max)
            .finish()
    }
}

pub const DEFAULT_EPS_MAX: f64 = 0.5;

impl PerturbationField {
    pub fn from_fn<F>(n: usize, d: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(PhaseRef<'_>, f64, &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        Self {
            n,
            d,
            eval: Arc::new(f),
            provenance: Provenance::Closure {
                label: label.into(),
            },
            hamiltonian: None,
            c1: None,
            eps_max: DEFAULT_EPS_MAX,
        }
    }

    pub fn zero(n: usize, d: usize) -> Self {
        let mut f = Self::from_fn(n, d, "zero", |_, _, out| {
            out.fill(0.0);
            Ok(())
        });
        f.provenance = Provenance::Zero;
        f.c1 = Some(0.0);
        f
    }

    /// `X1 = (-a p, 0, -b I, 0)`.
    pub fn dissipation(n: usize, d: usize, pendulum_rate: f64, action_rate: f64) -> Self {
        let mut f = Self::from_fn(n, d, "dissipation", move |z, _, out| {
            out.fill(0.0);
            for (o, p) in out[..z.n].iter_mut().zip(z.p()) {
                *o = -pendulum_rate * p;
            }
            let off = 2 * z.n;
            for (o, a) in out[off..off + z.d].iter_mut().zip(z.action()) {
                *o = -action_rate * a;
            }
            Ok(())
        });
        f.provenance = Provenance::Dissipation {
            pendulum_rate,
            action_rate,
        };
        f.c1 = Some(pendulum_rate.abs().max(action_rate.abs()));
        f
    }

    /// Field given component-wise by `2n + 2d` expressions in the order
    /// `(dp, dq, dI, dtheta)`.
    pub fn direct(layout: VarLayout, components: &[Expr]) -> Result<Self> {
        let dim = 2 * layout.n + 2 * layout.d;
        if components.len() != dim {
            return Err(Error::Dimension {
                what: "direct field components",
                expected: dim,
                got: components.len(),
            });
        }
        let programs: Vec<Program> = components.iter().map(|e| e.compile(layout)).collect();
        let sources = components.iter().map(|e| e.to_string()).collect();
        let mut f = Self::from_fn(layout.n, layout.d, "direct", move |z, eps, out| {
            let vars = bind(z, eps);
            for (o, prog) in out.iter_mut().zip(&programs) {
                *o = prog.eval(&vars)?;
            }
            Ok(())
        });
        f.provenance = Provenance::Direct {
            components: sources,
        };
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    /// The generating perturbation Hamiltonian, when the field came from one.
    pub fn hamiltonian(&self) -> Option<&Program> {
        self.hamiltonian.as_deref()
    }
    /// Declared Lipschitz constant of `X1`.
    pub fn c1(&self) -> Option<f64> {
        self.c1
    }
    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = Some(c1);
        self
    }

    pub fn with_eps_max(mut self, eps_max: f64) -> Self {
        self.eps_max = eps_max;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        if let Provenance::Closure { .. } = self.provenance {
            self.provenance = Provenance::Closure {
                label: label.into(),
            };
        }
        self
    }

    pub fn check_eps(&self, eps: f64) -> Result<()> {
        if !eps.is_finite() || eps.abs() > self.eps_max {
            return Err(Error::EpsOutOfRange {
                eps,
                max: self.eps_max,
            });
        }
        Ok(())
    }

    pub fn check_system(&self, spec: &SystemSpec) -> Result<()> {
        if self.n != spec.n() || self.d != spec.d() {
            return Err(Error::Dimension {
                what: "perturbation field dimension (2n + 2d)",
                expected: spec.dim(),
                got: 2 * self.n + 2 * self.d,
            });
        }
        Ok(())
    }

    /// Raw evaluation into `out`, rejecting non-finite results.
    pub fn eval_into(&self, z: PhaseRef<'_>, eps: f64, out: &mut [f64]) -> Result<()> {
        (self.eval)(z, eps, out)?;
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteField { t: z.t });
        }
        Ok(())
    }

    pub fn eval(&self, z: &ExtendedState, eps: f64) -> Result<Tangent> {
        let mut out = Tangent::zeros(self.n, self.d);
        self.eval_into(z.as_ref(), eps, out.as_mut_slice())?;
        Ok(out)
    }

    /// `self + other`.
    pub fn plus(&self, other: &PerturbationField) -> Self {
        assert_eq!((self.n, self.d), (other.n, other.d), "field dimensions");
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::from_fn(self.n, self.d, "sum", move |z, eps, out| {
            a(z, eps, out)?;
            let mut tmp = vec![0.0; out.len()];
            b(z, eps, &mut tmp)?;
            for (o, t) in out.iter_mut().zip(tmp) {
                *o += t;
            }
            Ok(())
        });
        out.provenance = Provenance::Sum(vec![self.provenance.clone(), other.provenance.clone()]);
        out.c1 = match (self.c1, other.c1) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        out.eps_max = self.eps_max.min(other.eps_max);
        out
    }

    /// `factor * self`.
    pub fn scaled(&self, factor: f64) -> Self {
        let a = self.eval.clone();
        let mut out = Self::from_fn(self.n, self.d, "scaled", move |z, eps, out| {
            a(z, eps, out)?;
            for o in out.iter_mut() {
                *o *= factor;
            }
            Ok(())
        });
        out.provenance = Provenance::Scaled {
            factor,
            inner: Box::new(self.provenance.clone()),
        };
        out.c1 = self.c1.map(|c| c * factor.abs());
        out.eps_max = self.eps_max;
        out
    }
}

/// Variable bindings `(p, q, I, theta, t, eps)` for compiled expressions.
pub(crate) fn bind(z: PhaseRef<'_>, eps: f64) -> Vec<f64> {
    let mut vars = Vec::with_capacity(z.phase.len() + 2);
    vars.extend_from_slice(z.phase);
    vars.push(z.t);
    vars.push(eps);
    vars
}

/// Hamiltonian vector field of `H1` with respect to `dp^dq + dI^dtheta`:
/// `X1 = (-dH1/dq, dH1/dp, -dH1/dtheta, dH1/dI)`, derivatives by forward
/// mode differentiation.
pub fn hamiltonian_to_field(spec: &SystemSpec, h1: &Expr) -> Result<PerturbationField> {
    let layout = spec.layout();
    let program = Arc::new(h1.compile(layout));
    let (n, d) = (spec.n(), spec.d());
    // (slot to differentiate, output index, sign)
    let mut plan = Vec::new();
    for i in 0..n {
        plan.push((layout.slot(Var::Q(i)), i, -1.0));
        plan.push((layout.slot(Var::P(i)), n + i, 1.0));
    }
    for j in 0..d {
        plan.push((layout.slot(Var::Angle(j)), 2 * n + j, -1.0));
        plan.push((layout.slot(Var::Action(j)), 2 * n + d + j, 1.0));
    }
    let vars_used: Vec<usize> = h1.free_vars().iter().map(|v| layout.slot(*v)).collect();
    plan.retain(|(slot, _, _)| vars_used.contains(slot));
    let prog = program.clone();
    let mut f = PerturbationField::from_fn(n, d, "hamiltonian", move |z, eps, out| {
        out.fill(0.0);
        let vars = bind(z, eps);
        for &(slot, idx, sign) in &plan {
            out[idx] = sign * prog.partial(&vars, slot)?.d;
        }
        Ok(())
    });
    f.provenance = Provenance::Hamiltonian {
        source: h1.to_string(),
    };
    f.hamiltonian = Some(program);
    Ok(f)
}

/// Writes the unperturbed field `X0` at `z` into `out`.
pub(crate) fn unperturbed_into(spec: &SystemSpec, z: PhaseRef<'_>, out: &mut [f64]) {
    let (n, d) = (z.n, z.d);
    for (i, pend) in spec.pendula.iter().enumerate() {
        let (dp, dq) = pend.field(z.phase[i], z.phase[n + i]);
        out[i] = dp;
        out[n + i] = dq;
    }
    out[2 * n..2 * n + d].fill(0.0);
    spec.rotator
        .frequency_into(z.action(), &mut out[2 * n + d..2 * n + 2 * d]);
}

pub fn eval_unperturbed(spec: &SystemSpec, z: &ExtendedState) -> Result<Tangent> {
    spec.check_state(z)?;
    let mut out = Tangent::zeros(spec.n(), spec.d());
    unperturbed_into(spec, z.as_ref(), out.as_mut_slice());
    Ok(out)
}

/// `X0(z) + eps X1(z; eps)`; at `eps = 0` the result is `X0(z)` exactly
/// and the perturbation is not evaluated.
pub fn eval_perturbed(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: &ExtendedState,
    eps: f64,
) -> Result<Tangent> {
    field.check_system(spec)?;
    field.check_eps(eps)?;
    let mut out = eval_unperturbed(spec, z)?;
    if eps != 0.0 {
        let pert = field.eval(z, eps)?;
        for (o, x) in out.as_mut_slice().iter_mut().zip(pert.as_slice()) {
            *o += eps * x;
        }
    }
    Ok(out)
}

/// Full right-hand side `X0 + eps X1` into `out`, for integrators.
pub(crate) fn perturbed_into(
    spec: &SystemSpec,
    field: &PerturbationField,
    z: PhaseRef<'_>,
    eps: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    unperturbed_into(spec, z, out);
    if eps != 0.0 {
        field.eval_into(z, eps, scratch)?;
        for (o, x) in out.iter_mut().zip(scratch.iter()) {
            *o += eps * x;
        }
    }
    Ok(())
}
