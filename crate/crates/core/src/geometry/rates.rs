use serde::Serialize;

use crate::model::SystemSpec;
use crate::{Error, Result};

/// Hyperbolic and centre rates of the unperturbed cylinder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBundle {
    /// Per-pendulum exponents `sqrt(-V_i''(0))`.
    pub lambdas: Vec<f64>,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub lambda_c: f64,
    pub mu_c: f64,
    pub constant: f64,
}

impl RateBundle {
    /// `lambda- <= lambda+ < lambda_c < 0 < mu_c < mu- <= mu+`.
    pub fn is_ordered(&self) -> bool {
        self.lambda_minus <= self.lambda_plus
            && self.lambda_plus < self.lambda_c
            && self.lambda_c < 0.0
            && 0.0 < self.mu_c
            && self.mu_c < self.mu_minus
            && self.mu_minus <= self.mu_plus
    }
}

pub fn rates(spec: &SystemSpec, mu_c: f64, constant: f64) -> Result<RateBundle> {
    let lambdas = spec
        .pendula
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.potential
                .saddle_exponent()
                .map_err(|e| Error::InvalidSystem(format!("pendulum {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mu_minus = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_plus = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bundle = RateBundle {
        lambda_minus: -mu_plus,
        lambda_plus: -mu_minus,
        mu_minus,
        mu_plus,
        lambda_c: -mu_c,
        mu_c,
        constant,
        lambdas,
    };
    if !bundle.is_ordered() {
        return Err(Error::InvalidArgument(format!(
            "centre rate mu_c = {mu_c} must lie in (0, {mu_minus})"
        )));
    }
    Ok(bundle)
}
