use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 1-periodic pendulum potential with `V(0) = 0`.
///
/// `TrigPolynomial` is `sum_k a_k (cos 2 pi k q - 1) + b_k sin 2 pi k q`
/// with `k` starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    BuiltinCosine,
    TrigPolynomial { cos: Vec<f64>, sin: Vec<f64> },
}

const TWO_PI: f64 = 2.0 * PI;

impl PotentialSpec {
    pub fn trig(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        PotentialSpec::TrigPolynomial { cos, sin }
    }

    pub fn value(&self, q: f64) -> f64 {
        match self {
            PotentialSpec::BuiltinCosine => ((TWO_PI * q).cos() - 1.0) / (4.0 * PI * PI),
            PotentialSpec::TrigPolynomial { cos, sin } => {
                let mut v = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    v += a * ((TWO_PI * (k + 1) as f64 * q).cos() - 1.0);
                }
                for (k, b) in sin.iter().enumerate() {
                    v += b * (TWO_PI * (k + 1) as f64 * q).sin();
                }
                v
            }
        }
    }

    pub fn deriv(&self, q: f64) -> f64 {
        match self {
            PotentialSpec::BuiltinCosine => -(TWO_PI * q).sin() / TWO_PI,
            PotentialSpec::TrigPolynomial { cos, sin } => {
                let mut v = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    let w = TWO_PI * (k + 1) as f64;
                    v -= a * w * (w * q).sin();
                }
                for (k, b) in sin.iter().enumerate() {
                    let w = TWO_PI * (k + 1) as f64;
                    v += b * w * (w * q).cos();
                }
                v
            }
        }
    }

    pub fn second_deriv(&self, q: f64) -> f64 {
        match self {
            PotentialSpec::BuiltinCosine => -(TWO_PI * q).cos(),
            PotentialSpec::TrigPolynomial { cos, sin } => {
                let mut v = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    let w = TWO_PI * (k + 1) as f64;
                    v -= a * w * w * (w * q).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    let w = TWO_PI * (k + 1) as f64;
                    v -= b * w * w * (w * q).sin();
                }
                v
            }
        }
    }

    pub fn is_builtin_cosine(&self) -> bool {
        matches!(self, PotentialSpec::BuiltinCosine)
    }

    /// Lyapunov exponent `sqrt(-V''(0))` of the saddle at the origin.
    pub fn saddle_exponent(&self) -> Result<f64> {
        let c = self.second_deriv(0.0);
        if c < 0.0 && c.is_finite() {
            Ok((-c).sqrt())
        } else {
            Err(Error::InvalidSystem(format!(
                "V''(0) = {c} is not negative: the origin is not a hyperbolic saddle"
            )))
        }
    }

    /// Checks the hypotheses the separatrix construction relies on:
    /// `V'(0) = 0`, a hyperbolic saddle at 0, and `V < 0` on a sampled
    /// interior of `(0, 1)` so that the origin is the unique maximum.
    pub fn validate(&self) -> Result<()> {
        if let PotentialSpec::TrigPolynomial { cos, sin } = self {
            if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                return Err(Error::InvalidSystem(
                    "non-finite potential coefficient".into(),
                ));
            }
        }
        let slope = self.deriv(0.0);
        if slope.abs() > 1e-12 {
            return Err(Error::InvalidSystem(format!(
                "V'(0) = {slope}: the origin is not a critical point"
            )));
        }
        self.saddle_exponent()?;
        const SAMPLES: usize = 512;
        for k in 1..SAMPLES {
            let q = k as f64 / SAMPLES as f64;
            if self.value(q) >= 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "V({q}) = {} >= 0: the saddle at 0 is not the unique maximum",
                    self.value(q)
                )));
            }
        }
        Ok(())
    }
}
