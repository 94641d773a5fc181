use serde::{Deserialize, Serialize};

use super::{ExtendedState, PotentialSpec, RotatorSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(s: f64) -> Result<Sign> {
        if s == 1.0 {
            Ok(Sign::Plus)
        } else if s == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(Error::InvalidSystem(format!(
                "pendulum sign must be +1 or -1, got {s}"
            )))
        }
    }
}

/// One pendulum `s (p^2/2 + V(q))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pendulum {
    pub potential: PotentialSpec,
    pub sign: Sign,
}

impl Pendulum {
    pub fn new(potential: PotentialSpec, sign: Sign) -> Self {
        Self { potential, sign }
    }

    pub fn cosine(sign: Sign) -> Self {
        Self::new(PotentialSpec::BuiltinCosine, sign)
    }

    pub fn s(&self) -> f64 {
        self.sign.value()
    }

    pub fn energy(&self, p: f64, q: f64) -> f64 {
        self.s() * (0.5 * p * p + self.potential.value(q))
    }

    /// Unperturbed pendulum vector field `(dp, dq)`.
    pub fn field(&self, p: f64, q: f64) -> (f64, f64) {
        let s = self.s();
        (-s * self.potential.deriv(q), s * p)
    }

    pub fn lambda(&self) -> Result<f64> {
        self.potential.saddle_exponent()
    }
}

/// `H0 = h0(I) + sum_i s_i (p_i^2/2 + V_i(q_i))` with `n` pendula and a
/// `d`-dimensional rotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub rotator: RotatorSpec,
    pub pendula: Vec<Pendulum>,
}

impl SystemSpec {
    /// Builds a system after checking the saddle hypotheses of every
    /// potential.
    pub fn new(rotator: RotatorSpec, pendula: Vec<Pendulum>) -> Result<Self> {
        let spec = Self::new_unchecked(rotator, pendula)?;
        for (i, pend) in spec.pendula.iter().enumerate() {
            pend.potential
                .validate()
                .map_err(|e| Error::InvalidSystem(format!("pendulum {}: {e}", i + 1)))?;
        }
        Ok(spec)
    }

    /// Builds a system checking only dimensions. Used for negative controls
    /// whose potentials violate the saddle hypotheses on purpose.
    pub fn new_unchecked(rotator: RotatorSpec, pendula: Vec<Pendulum>) -> Result<Self> {
        if pendula.is_empty() {
            return Err(Error::InvalidSystem(
                "at least one pendulum is required".into(),
            ));
        }
        Ok(Self { rotator, pendula })
    }

    /// `n` builtin-cosine pendula with `h0 = |I|^2 / 2`.
    pub fn standard(n: usize, d: usize, sign: Sign) -> Self {
        Self::new(RotatorSpec::standard(d), vec![Pendulum::cosine(sign); n])
            .expect("builtin cosine system is valid")
    }

    pub fn n(&self) -> usize {
        self.pendula.len()
    }

    pub fn d(&self) -> usize {
        self.rotator.d()
    }

    /// Dimension of the phase space without time.
    pub fn dim(&self) -> usize {
        2 * self.n() + 2 * self.d()
    }

    pub fn layout(&self) -> crate::exprs::VarLayout {
        crate::exprs::VarLayout::new(self.n(), self.d())
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        self.pendula.iter().map(Pendulum::lambda).collect()
    }

    pub fn check_state(&self, z: &ExtendedState) -> Result<()> {
        if z.n() != self.n() {
            return Err(Error::Dimension {
                what: "pendulum count of state",
                expected: self.n(),
                got: z.n(),
            });
        }
        if z.d() != self.d() {
            return Err(Error::Dimension {
                what: "rotator dimension of state",
                expected: self.d(),
                got: z.d(),
            });
        }
        if !z.is_finite() {
            return Err(Error::InvalidArgument(
                "state has non-finite coordinates".into(),
            ));
        }
        Ok(())
    }

    pub fn hamiltonian(&self, z: &ExtendedState) -> f64 {
        let mut h = self.rotator.energy(z.action());
        for (i, pend) in self.pendula.iter().enumerate() {
            h += pend.energy(z.p()[i], z.q()[i]);
        }
        h
    }
}

/// Pendulum energies `y_i = s_i (p_i^2/2 + V_i(q_i))`.
pub fn pendulum_energy(spec: &SystemSpec, z: &ExtendedState) -> Vec<f64> {
    spec.pendula
        .iter()
        .enumerate()
        .map(|(i, pend)| pend.energy(z.p()[i], z.q()[i]))
        .collect()
}
