use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Polynomial rotator energy
/// `h0(I) = g.I + (1/2) I^T A I + (1/6) T[I, I, I]`
/// with symmetric `A` and fully symmetric `T` (stored flat, `T[i][j][k]`
/// at `(i * d + j) * d + k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatorSpec {
    linear: Vec<f64>,
    quadratic: Vec<Vec<f64>>,
    cubic: Option<Vec<f64>>,
}

impl RotatorSpec {
    pub fn new(
        linear: Vec<f64>,
        quadratic: Vec<Vec<f64>>,
        cubic: Option<Vec<f64>>,
    ) -> Result<Self> {
        let d = linear.len();
        if d == 0 {
            return Err(Error::InvalidSystem(
                "rotator needs at least one action".into(),
            ));
        }
        if quadratic.len() != d || quadratic.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidSystem(format!(
                "quadratic rotator coefficients must be {d}x{d}"
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if (quadratic[i][j] - quadratic[j][i]).abs() > 1e-14 {
                    return Err(Error::InvalidSystem(
                        "quadratic rotator matrix is not symmetric".into(),
                    ));
                }
            }
        }
        if let Some(t) = &cubic {
            if t.len() != d * d * d {
                return Err(Error::InvalidSystem(format!(
                    "cubic rotator tensor must have {} entries",
                    d * d * d
                )));
            }
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let a = t[(i * d + j) * d + k];
                        let perms = [
                            t[(i * d + k) * d + j],
                            t[(j * d + i) * d + k],
                            t[(k * d + j) * d + i],
                        ];
                        if perms.iter().any(|b| (a - b).abs() > 1e-14) {
                            return Err(Error::InvalidSystem(
                                "cubic rotator tensor is not symmetric".into(),
                            ));
                        }
                    }
                }
            }
        }
        let all_finite = linear
            .iter()
            .chain(quadratic.iter().flatten())
            .chain(cubic.iter().flatten())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidSystem(
                "non-finite rotator coefficient".into(),
            ));
        }
        Ok(Self {
            linear,
            quadratic,
            cubic,
        })
    }

    /// `h0(I) = sum_j c_j I_j^2 / 2`.
    pub fn diagonal(c: &[f64]) -> Result<Self> {
        let d = c.len();
        let mut a = vec![vec![0.0; d]; d];
        for (j, cj) in c.iter().enumerate() {
            a[j][j] = *cj;
        }
        Self::new(vec![0.0; d], a, None)
    }

    /// `h0(I) = |I|^2 / 2`.
    pub fn standard(d: usize) -> Self {
        Self::diagonal(&vec![1.0; d]).expect("valid diagonal rotator")
    }

    pub fn d(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, action: &[f64]) -> f64 {
        let d = self.d();
        let mut h = 0.0;
        for i in 0..d {
            h += self.linear[i] * action[i];
            for j in 0..d {
                h += 0.5 * self.quadratic[i][j] * action[i] * action[j];
            }
        }
        if let Some(t) = &self.cubic {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        h += t[(i * d + j) * d + k] * action[i] * action[j] * action[k] / 6.0;
                    }
                }
            }
        }
        h
    }

    /// Frequency vector `omega(I) = grad h0(I)` written into `out`.
    pub fn frequency_into(&self, action: &[f64], out: &mut [f64]) {
        let d = self.d();
        for i in 0..d {
            let mut w = self.linear[i];
            for j in 0..d {
                w += self.quadratic[i][j] * action[j];
            }
            if let Some(t) = &self.cubic {
                for j in 0..d {
                    for k in 0..d {
                        w += 0.5 * t[(i * d + j) * d + k] * action[j] * action[k];
                    }
                }
            }
            out[i] = w;
        }
    }

    pub fn frequency(&self, action: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.frequency_into(action, &mut out);
        out
    }

    /// Hessian `d omega / d I` as a row-major `d x d` matrix.
    pub fn hessian(&self, action: &[f64]) -> Vec<Vec<f64>> {
        let d = self.d();
        let mut h = self.quadratic.clone();
        if let Some(t) = &self.cubic {
            for (i, row) in h.iter_mut().enumerate() {
                for (j, hij) in row.iter_mut().enumerate() {
                    for k in 0..d {
                        *hij += t[(i * d + j) * d + k] * action[k];
                    }
                }
            }
        }
        h
    }
}
