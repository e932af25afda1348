//! Forward-mode dual numbers carrying two tangents at once: ∂/∂a and
//! ∂/∂b of the Jacobi weight exponents. Every recurrence coefficient and
//! norm flows through this type when basis derivatives are requested, so
//! the chain rule is applied mechanically instead of by hand-derived
//! formulas.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualReal {
    pub value: f64,
    pub da: f64,
    pub db: f64,
}

impl DualReal {
    pub const fn constant(value: f64) -> Self {
        DualReal { value, da: 0.0, db: 0.0 }
    }

    pub const fn new(value: f64, da: f64, db: f64) -> Self {
        DualReal { value, da, db }
    }

    /// The variable `a`: unit tangent in the first slot.
    pub const fn var_a(value: f64) -> Self {
        DualReal { value, da: 1.0, db: 0.0 }
    }

    /// The variable `b`: unit tangent in the second slot.
    pub const fn var_b(value: f64) -> Self {
        DualReal { value, da: 0.0, db: 1.0 }
    }

    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        let scale = 0.5 / r;
        DualReal {
            value: r,
            da: scale * self.da,
            db: scale * self.db,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        DualReal {
            value: e,
            da: e * self.da,
            db: e * self.db,
        }
    }

    pub fn ln(self) -> Self {
        DualReal {
            value: self.value.ln(),
            da: self.da / self.value,
            db: self.db / self.value,
        }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        let neg_inv2 = -inv * inv;
        DualReal {
            value: inv,
            da: neg_inv2 * self.da,
            db: neg_inv2 * self.db,
        }
    }

    pub fn is_finite(self) -> bool {
        self.value.is_finite() && self.da.is_finite() && self.db.is_finite()
    }
}

impl From<f64> for DualReal {
    fn from(value: f64) -> Self {
        DualReal::constant(value)
    }
}

impl Add for DualReal {
    type Output = DualReal;
    fn add(self, rhs: DualReal) -> DualReal {
        DualReal {
            value: self.value + rhs.value,
            da: self.da + rhs.da,
            db: self.db + rhs.db,
        }
    }
}

impl Sub for DualReal {
    type Output = DualReal;
    fn sub(self, rhs: DualReal) -> DualReal {
        DualReal {
            value: self.value - rhs.value,
            da: self.da - rhs.da,
            db: self.db - rhs.db,
        }
    }
}

impl Mul for DualReal {
    type Output = DualReal;
    fn mul(self, rhs: DualReal) -> DualReal {
        DualReal {
            value: self.value * rhs.value,
            da: self.da * rhs.value + self.value * rhs.da,
            db: self.db * rhs.value + self.value * rhs.db,
        }
    }
}

impl Div for DualReal {
    type Output = DualReal;
    fn div(self, rhs: DualReal) -> DualReal {
        let inv = 1.0 / rhs.value;
        let q = self.value * inv;
        DualReal {
            value: q,
            da: (self.da - q * rhs.da) * inv,
            db: (self.db - q * rhs.db) * inv,
        }
    }
}

impl Neg for DualReal {
    type Output = DualReal;
    fn neg(self) -> DualReal {
        DualReal {
            value: -self.value,
            da: -self.da,
            db: -self.db,
        }
    }
}

impl Add<f64> for DualReal {
    type Output = DualReal;
    fn add(self, rhs: f64) -> DualReal {
        DualReal { value: self.value + rhs, ..self }
    }
}

impl Sub<f64> for DualReal {
    type Output = DualReal;
    fn sub(self, rhs: f64) -> DualReal {
        DualReal { value: self.value - rhs, ..self }
    }
}

impl Mul<f64> for DualReal {
    type Output = DualReal;
    fn mul(self, rhs: f64) -> DualReal {
        DualReal {
            value: self.value * rhs,
            da: self.da * rhs,
            db: self.db * rhs,
        }
    }
}

impl Div<f64> for DualReal {
    type Output = DualReal;
    fn div(self, rhs: f64) -> DualReal {
        DualReal {
            value: self.value / rhs,
            da: self.da / rhs,
            db: self.db / rhs,
        }
    }
}

impl Mul<DualReal> for f64 {
    type Output = DualReal;
    fn mul(self, rhs: DualReal) -> DualReal {
        rhs * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Finite-difference oracle for a two-argument scalar function.
    fn fd_grad(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, h: f64) -> (f64, f64) {
        let da = (f(a + h, b) - f(a - h, b)) / (2.0 * h);
        let db = (f(a, b + h) - f(a, b - h)) / (2.0 * h);
        (da, db)
    }

    fn eval(a: f64, b: f64) -> DualReal {
        // Mixed expression exercising +, -, *, /, sqrt, exp, ln, recip.
        let x = DualReal::var_a(a);
        let y = DualReal::var_b(b);
        let t = (x * y + x * 2.0 - y / 3.0 + 1.5) * (x + y + 4.0).recip();
        (t * t + 2.0).sqrt().ln().exp() + t
    }

    #[test]
    fn tangents_match_finite_differences() {
        let points = [(0.3, -0.2), (1.7, 0.9), (-0.4, 1.1)];
        for (a, b) in points {
            let d = eval(a, b);
            let (fa, fb) = fd_grad(|a, b| eval(a, b).value, a, b, 1e-6);
            assert!((d.da - fa).abs() <= 1e-7 * fa.abs().max(1.0), "da at ({a},{b})");
            assert!((d.db - fb).abs() <= 1e-7 * fb.abs().max(1.0), "db at ({a},{b})");
        }
    }

    #[test]
    fn product_and_quotient_rules_exact() {
        let x = DualReal::new(3.0, 1.0, 0.5);
        let y = DualReal::new(-2.0, 0.25, 1.0);
        let p = x * y;
        assert_eq!(p.da, 1.0 * -2.0 + 3.0 * 0.25);
        assert_eq!(p.db, 0.5 * -2.0 + 3.0 * 1.0);
        let q = x / y;
        let want_da = (1.0 * -2.0 - 3.0 * 0.25) / 4.0;
        assert!((q.da - want_da).abs() < 1e-15);
    }
}
