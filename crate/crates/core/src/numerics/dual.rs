//! Complex dual numbers `v + d·ε` with `ε² = 0`.
//!
//! Evaluating an expression on `Dual::variable(z)` yields `f(z)` in `value`
//! and `f'(z)` in `deriv`; the chain rule falls out of the arithmetic.

use std::ops::{Add, Mul, Neg};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: Complex64,
    pub deriv: Complex64,
}

impl Dual {
    pub fn new(value: Complex64, deriv: Complex64) -> Self {
        Dual { value, deriv }
    }

    pub fn variable(z: Complex64) -> Self {
        Dual::new(z, Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Dual::new(c, Complex64::new(0.0, 0.0))
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, e * self.deriv)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.deriv.is_finite()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.value * rhs.value, self.deriv * rhs.value + self.value * rhs.deriv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Dual::variable(Complex64::new(3.0, 1.0));
        let y = x * x + Dual::constant(Complex64::new(2.0, 0.0)) * x;
        assert_eq!(y.value, Complex64::new(3.0, 1.0).powu(2) + Complex64::new(6.0, 2.0));
        assert_eq!(y.deriv, Complex64::new(8.0, 2.0));
    }

    #[test]
    fn exp_chain() {
        let x = Dual::variable(Complex64::new(0.0, 0.0));
        let y = x.exp().exp();
        assert!((y.deriv - Complex64::new(std::f64::consts::E, 0.0)).norm() < 1e-15);
    }
}
