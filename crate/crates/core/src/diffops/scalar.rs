use std::ops::{Add, Mul, Neg, Sub};

use super::jet::Jet4;
use crate::error::{Error, Result};

/// Numeric type that potentials, log-densities and expressions are evaluated
/// on: either plain `f64` or a [`Jet4`] carrying derivatives.
///
/// Operations with a restricted domain return [`Error::Domain`] instead of
/// producing NaN.
pub trait Scalar:
    Clone + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant of the same shape as `self` (same jet dimension).
    fn constant_like(&self, value: f64) -> Self;
    fn real(&self) -> f64;
    fn exp(&self) -> Self;
    fn try_ln(&self) -> Result<Self>;
    fn try_sqrt(&self) -> Result<Self>;
    fn try_recip(&self) -> Result<Self>;
    fn try_powi(&self, n: i32) -> Result<Self>;
    fn try_powf(&self, exponent: f64) -> Result<Self>;

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.clone() * rhs.try_recip()?)
    }

    /// Real powers dispatch to the integer rule when the exponent is integral,
    /// so negative bases are accepted there.
    fn try_pow(&self, exponent: f64) -> Result<Self> {
        if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
            self.try_powi(exponent as i32)
        } else {
            self.try_powf(exponent)
        }
    }
}

fn check(op: &'static str, input: f64, out: f64) -> Result<f64> {
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::domain(op, input))
    }
}

impl Scalar for f64 {
    fn constant_like(&self, value: f64) -> Self {
        value
    }

    fn real(&self) -> f64 {
        *self
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn try_ln(&self) -> Result<Self> {
        if *self <= 0.0 || !self.is_finite() {
            return Err(Error::domain("log", *self));
        }
        Ok(self.ln())
    }

    fn try_sqrt(&self) -> Result<Self> {
        if *self <= 0.0 || !self.is_finite() {
            return Err(Error::domain("sqrt", *self));
        }
        Ok(self.sqrt())
    }

    fn try_recip(&self) -> Result<Self> {
        if *self == 0.0 {
            return Err(Error::domain("division", *self));
        }
        check("division", *self, 1.0 / *self)
    }

    fn try_powi(&self, n: i32) -> Result<Self> {
        if n < 0 && *self == 0.0 {
            return Err(Error::domain("pow", *self));
        }
        check("pow", *self, self.powi(n))
    }

    fn try_powf(&self, exponent: f64) -> Result<Self> {
        if *self <= 0.0 {
            return Err(Error::domain("pow", *self));
        }
        check("pow", *self, self.powf(exponent))
    }
}

/// `F^(k)(x)` for `F(x) = x^e`, `k = 0..=4`.
fn power_derivatives(x: f64, e: f64, integral: Option<i32>) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut falling = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        let remaining = e - k as f64;
        *slot = if falling == 0.0 {
            0.0
        } else {
            match integral {
                Some(n) => falling * x.powi(n - k as i32),
                None => falling * x.powf(remaining),
            }
        };
        falling *= remaining;
    }
    out
}

impl Scalar for Jet4 {
    fn constant_like(&self, value: f64) -> Self {
        Jet4::constant_like(self, value)
    }

    fn real(&self) -> f64 {
        self.value()
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; 5])
    }

    fn try_ln(&self) -> Result<Self> {
        let x = self.value();
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::domain("log", x));
        }
        let r = 1.0 / x;
        Ok(self.compose(&[x.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    fn try_sqrt(&self) -> Result<Self> {
        let x = self.value();
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::domain("sqrt", x));
        }
        Ok(self.compose(&power_derivatives(x, 0.5, None)))
    }

    fn try_recip(&self) -> Result<Self> {
        let x = self.value();
        if x == 0.0 || !x.is_finite() {
            return Err(Error::domain("division", x));
        }
        let r = 1.0 / x;
        let r2 = r * r;
        Ok(self.compose(&[r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2, 24.0 * r2 * r2 * r]))
    }

    fn try_powi(&self, n: i32) -> Result<Self> {
        let x = self.value();
        // falling factorials vanish past n for n ≥ 0, so only negative powers of 0 blow up
        let derivs = power_derivatives(x, n as f64, Some(n));
        if derivs.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("pow", x));
        }
        Ok(self.compose(&derivs))
    }

    fn try_powf(&self, exponent: f64) -> Result<Self> {
        let x = self.value();
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::domain("pow", x));
        }
        Ok(self.compose(&power_derivatives(x, exponent, None)))
    }
}
