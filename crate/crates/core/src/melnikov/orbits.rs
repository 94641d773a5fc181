use crate::flow::{integrate_to, IntegratorConfig, Separatrix, SystemRhs};
use crate::model::{ExtendedState, PerturbationField, SystemSpec};
use crate::{Error, Result};

/// A trajectory `s -> Phi^s(z)` that can be sampled at arbitrary times.
pub trait Orbit: Sync {
    fn at(&self, s: f64) -> Result<ExtendedState>;
}

/// Unperturbed motion on the cylinder `p = q = 0`.
#[derive(Debug, Clone)]
pub struct CylinderOrbit {
    n: usize,
    action: Vec<f64>,
    angle: Vec<f64>,
    omega: Vec<f64>,
    t: f64,
}

impl CylinderOrbit {
    pub fn new(spec: &SystemSpec, action: &[f64], angle: &[f64], t: f64) -> Self {
        Self {
            n: spec.n(),
            action: action.to_vec(),
            angle: angle.to_vec(),
            omega: spec.rotator.frequency(action),
            t,
        }
    }
}

impl Orbit for CylinderOrbit {
    fn at(&self, s: f64) -> Result<ExtendedState> {
        let angle: Vec<f64> = self
            .angle
            .iter()
            .zip(&self.omega)
            .map(|(a, w)| a + w * s)
            .collect();
        ExtendedState::on_cylinder(self.n, &self.action, &angle, self.t + s)
    }
}

/// Unperturbed homoclinic orbit through the separatrix point at times
/// `tau`, with the rotator at `(I, theta)` and time `t` at `s = 0`.
#[derive(Debug, Clone)]
pub struct HomoclinicOrbit<'a> {
    sep: &'a Separatrix,
    tau: Vec<f64>,
    action: Vec<f64>,
    angle: Vec<f64>,
    omega: Vec<f64>,
    t: f64,
}

impl<'a> HomoclinicOrbit<'a> {
    pub fn new(
        spec: &SystemSpec,
        sep: &'a Separatrix,
        tau: &[f64],
        action: &[f64],
        angle: &[f64],
        t: f64,
    ) -> Self {
        Self {
            sep,
            tau: tau.to_vec(),
            action: action.to_vec(),
            angle: angle.to_vec(),
            omega: spec.rotator.frequency(action),
            t,
        }
    }
}

impl Orbit for HomoclinicOrbit<'_> {
    fn at(&self, s: f64) -> Result<ExtendedState> {
        let n = self.tau.len();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for i in 0..n {
            let (pi, qi) = self.sep.point(i, self.tau[i] + s)?;
            p[i] = pi;
            q[i] = qi;
        }
        let angle: Vec<f64> = self
            .angle
            .iter()
            .zip(&self.omega)
            .map(|(a, w)| a + w * s)
            .collect();
        ExtendedState::new(&p, &q, &self.action, &angle, self.t + s)
    }
}

/// Numerically integrated orbit of `X0 + eps X1` on `[0, horizon]` (or
/// `[-horizon, 0]`), tabulated at unit spacing and refined by integrating
/// from the nearest node on the side of the base point.
pub struct FlowOrbit<'a> {
    spec: &'a SystemSpec,
    field: &'a PerturbationField,
    eps: f64,
    direction: f64,
    horizon: f64,
    nodes: Vec<ExtendedState>,
    cfg: IntegratorConfig,
}

const FLOW_NODE_SPACING: f64 = 0.5;

impl<'a> FlowOrbit<'a> {
    pub fn new(
        spec: &'a SystemSpec,
        field: &'a PerturbationField,
        eps: f64,
        base: &ExtendedState,
        direction: f64,
        horizon: f64,
        cfg: IntegratorConfig,
    ) -> Result<Self> {
        spec.check_state(base)?;
        let count = (horizon / FLOW_NODE_SPACING).ceil() as usize;
        let mut nodes = Vec::with_capacity(count + 1);
        nodes.push(base.clone());
        let mut y = base.phase().to_vec();
        let mut t = base.t();
        for _ in 0..count {
            let t1 = t + direction * FLOW_NODE_SPACING;
            integrate_to(SystemRhs::new(spec, Some(field), eps), t, &mut y, t1, &cfg)?;
            t = t1;
            nodes.push(ExtendedState::from_phase(spec.n(), spec.d(), &y, t));
        }
        Ok(Self {
            spec,
            field,
            eps,
            direction,
            horizon,
            nodes,
            cfg,
        })
    }
}

impl Orbit for FlowOrbit<'_> {
    fn at(&self, s: f64) -> Result<ExtendedState> {
        let u = s * self.direction;
        if !(0.0..=self.horizon).contains(&u) {
            return Err(Error::InvalidArgument(format!(
                "orbit sampled at s = {s}, outside its horizon {}",
                self.horizon
            )));
        }
        let k = ((u / FLOW_NODE_SPACING).floor() as usize).min(self.nodes.len() - 1);
        let node = &self.nodes[k];
        let mut y = node.phase().to_vec();
        let t1 = self.nodes[0].t() + s;
        integrate_to(
            SystemRhs::new(self.spec, Some(self.field), self.eps),
            node.t(),
            &mut y,
            t1,
            &self.cfg,
        )?;
        Ok(ExtendedState::from_phase(
            self.spec.n(),
            self.spec.d(),
            &y,
            t1,
        ))
    }
}
