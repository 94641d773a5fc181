use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate a compiled program.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    fn sech(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn pow(self, e: Self) -> Self;
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sech(self) -> Self {
        sech(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn pow(self, e: Self) -> Self {
        pow_f64(self, e)
    }
}

pub(crate) fn sech(x: f64) -> f64 {
    // cosh overflows near |x| = 710 while sech is still representable as 0.
    let ax = x.abs();
    if ax > 20.0 {
        2.0 * (-ax).exp()
    } else {
        1.0 / ax.cosh()
    }
}

fn integer_exponent(e: f64) -> Option<i32> {
    (e.fract() == 0.0 && e.abs() < 2_147_483_647.0).then_some(e as i32)
}

fn pow_f64(b: f64, e: f64) -> f64 {
    match integer_exponent(e) {
        Some(k) => b.powi(k),
        None => b.powf(e),
    }
}

/// Forward-mode dual number: value and one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }

    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn constant(x: f64) -> Self {
        Dual::new(x, 0.0)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Dual::new(s, c * self.d)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Dual::new(c, -s * self.d)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, e * self.d)
    }
    fn tanh(self) -> Self {
        let th = self.v.tanh();
        Dual::new(th, (1.0 - th * th) * self.d)
    }
    fn sech(self) -> Self {
        let s = sech(self.v);
        Dual::new(s, -s * self.v.tanh() * self.d)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Dual::new(r, self.d / (2.0 * r))
    }
    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Dual::new(1.0, 0.0);
        }
        let lower = self.v.powi(k - 1);
        Dual::new(lower * self.v, f64::from(k) * lower * self.d)
    }
    fn pow(self, e: Self) -> Self {
        if e.d == 0.0 {
            if let Some(k) = integer_exponent(e.v) {
                return self.powi(k);
            }
            let lower = self.v.powf(e.v - 1.0);
            return Dual::new(lower * self.v, e.v * lower * self.d);
        }
        let val = self.v.powf(e.v);
        Dual::new(val, val * (e.d * self.v.ln() + e.v * self.d / self.v))
    }
}
