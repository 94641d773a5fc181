use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Point `(p, q, I, theta, t)` of the extended phase space, stored flat in
/// that order. Angles are not reduced; callers compare them modulo 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl ExtendedState {
    pub fn new(p: &[f64], q: &[f64], action: &[f64], angle: &[f64], t: f64) -> Result<Self> {
        let (n, d) = (p.len(), action.len());
        if q.len() != n {
            return Err(Error::Dimension {
                what: "q",
                expected: n,
                got: q.len(),
            });
        }
        if angle.len() != d {
            return Err(Error::Dimension {
                what: "theta",
                expected: d,
                got: angle.len(),
            });
        }
        let mut data = Vec::with_capacity(2 * n + 2 * d + 1);
        data.extend_from_slice(p);
        data.extend_from_slice(q);
        data.extend_from_slice(action);
        data.extend_from_slice(angle);
        data.push(t);
        Ok(Self { n, d, data })
    }

    /// Point of the unperturbed invariant cylinder `p = q = 0`.
    pub fn on_cylinder(n: usize, action: &[f64], angle: &[f64], t: f64) -> Result<Self> {
        Self::new(&vec![0.0; n], &vec![0.0; n], action, angle, t)
    }

    pub fn from_phase(n: usize, d: usize, phase: &[f64], t: f64) -> Self {
        assert_eq!(phase.len(), 2 * n + 2 * d, "phase vector length");
        let mut data = Vec::with_capacity(phase.len() + 1);
        data.extend_from_slice(phase);
        data.push(t);
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> &[f64] {
        &self.data[..self.n]
    }
    pub fn q(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }
    pub fn action(&self) -> &[f64] {
        &self.data[2 * self.n..2 * self.n + self.d]
    }
    pub fn angle(&self) -> &[f64] {
        &self.data[2 * self.n + self.d..2 * self.n + 2 * self.d]
    }
    pub fn t(&self) -> f64 {
        self.data[2 * self.n + 2 * self.d]
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.n]
    }
    pub fn q_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.data[n..2 * n]
    }
    pub fn action_mut(&mut self) -> &mut [f64] {
        let (n, d) = (self.n, self.d);
        &mut self.data[2 * n..2 * n + d]
    }
    pub fn angle_mut(&mut self) -> &mut [f64] {
        let (n, d) = (self.n, self.d);
        &mut self.data[2 * n + d..2 * n + 2 * d]
    }
    pub fn set_t(&mut self, t: f64) {
        let k = 2 * self.n + 2 * self.d;
        self.data[k] = t;
    }

    /// `(p, q, I, theta)` without the time coordinate.
    pub fn phase(&self) -> &[f64] {
        &self.data[..2 * self.n + 2 * self.d]
    }
    pub fn phase_mut(&mut self) -> &mut [f64] {
        let k = 2 * self.n + 2 * self.d;
        &mut self.data[..k]
    }

    /// Flat `(p, q, I, theta, t)`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_ref(&self) -> PhaseRef<'_> {
        PhaseRef {
            n: self.n,
            d: self.d,
            phase: self.phase(),
            t: self.t(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Max-norm distance with angles compared modulo 1.
    pub fn distance(&self, other: &ExtendedState) -> f64 {
        let mut m: f64 = 0.0;
        for (k, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            let is_angle = k >= 2 * self.n + self.d && k < 2 * self.n + 2 * self.d;
            let diff = if is_angle {
                angle_distance(*a, *b)
            } else {
                (a - b).abs()
            };
            m = m.max(diff);
        }
        m
    }
}

/// Borrowed view of a phase point used by field evaluators.
#[derive(Debug, Clone, Copy)]
pub struct PhaseRef<'a> {
    pub n: usize,
    pub d: usize,
    pub phase: &'a [f64],
    pub t: f64,
}

impl<'a> PhaseRef<'a> {
    pub fn p(&self) -> &'a [f64] {
        &self.phase[..self.n]
    }
    pub fn q(&self) -> &'a [f64] {
        &self.phase[self.n..2 * self.n]
    }
    pub fn action(&self) -> &'a [f64] {
        &self.phase[2 * self.n..2 * self.n + self.d]
    }
    pub fn angle(&self) -> &'a [f64] {
        &self.phase[2 * self.n + self.d..]
    }
}

/// Vector field value `(dp, dq, dI, dtheta)` at a point. The time
/// component is always 1 and is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Tangent {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: vec![0.0; 2 * n + 2 * d],
        }
    }

    pub fn from_vec(n: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), 2 * n + 2 * d, "tangent length");
        Self { n, d, data }
    }

    pub fn p(&self) -> &[f64] {
        &self.data[..self.n]
    }
    pub fn q(&self) -> &[f64] {
        &self.data[self.n..2 * self.n]
    }
    pub fn action(&self) -> &[f64] {
        &self.data[2 * self.n..2 * self.n + self.d]
    }
    pub fn angle(&self) -> &[f64] {
        &self.data[2 * self.n + self.d..]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Representative of `x` modulo 1 in `[0, 1)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the unit circle `R / Z`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(1.0);
    r.min(1.0 - r)
}
