//! Forward-mode dual numbers over the complex field.
//!
//! `Dual<T>` carries a value and one directional derivative. Nesting
//! (`Dual<Dual<Complex>>`) yields mixed second partials: seed the inner
//! infinitesimal along `e_b` and the outer along `e_a`, and the `eps.eps`
//! slot of the result is `∂²F/∂φ_a∂φ_b`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::Complex;

/// Arithmetic needed to evaluate a holomorphic expression.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: Complex) -> Self;
    /// The underlying complex value with every infinitesimal dropped.
    fn value(&self) -> Complex;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    /// Principal logarithm.
    fn ln(self) -> Self;
    fn recip(self) -> Self {
        Self::constant(Complex::new(1.0, 0.0)) / self
    }
}

impl Scalar for Complex {
    #[inline]
    fn constant(c: Complex) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> Complex {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        Complex::exp(self)
    }
    #[inline]
    fn sin(self) -> Self {
        Complex::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        Complex::cos(self)
    }
    #[inline]
    fn ln(self) -> Self {
        Complex::ln(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// A variable seeded with unit derivative.
    #[inline]
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::constant(Complex::new(1.0, 0.0)) }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Dual::new(q, (self.eps - q * rhs.eps) / rhs.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn constant(c: Complex) -> Self {
        Dual::new(T::constant(c), T::constant(Complex::new(0.0, 0.0)))
    }
    #[inline]
    fn value(&self) -> Complex {
        self.re.value()
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
}

/// Integer power by repeated squaring. Negative exponents go through one
/// reciprocal at the end.
pub fn powi<T: Scalar>(base: T, exp: i64) -> T {
    let mut acc = T::constant(Complex::new(1.0, 0.0));
    let mut sq = base;
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq * sq;
        }
    }
    if exp < 0 {
        acc.recip()
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn product_rule() {
        let x = Dual::variable(c64(2.0, 1.0));
        let y = Dual::constant(c64(3.0, 0.0));
        let p = x * x * y;
        assert_eq!(p.re, c64(2.0, 1.0) * c64(2.0, 1.0) * 3.0);
        assert_eq!(p.eps, c64(2.0, 1.0) * 6.0);
    }

    #[test]
    fn nested_second_derivative_of_cube() {
        // d²/dx² x³ = 6x
        let x0 = c64(0.5, -1.5);
        let inner = Dual::variable(x0);
        let x = Dual::new(inner, Dual::constant(c64(1.0, 0.0)));
        let r = powi(x, 3);
        assert_eq!(r.re.re, x0 * x0 * x0);
        assert!((r.eps.eps - x0 * 6.0).norm() < 1e-14);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let z = c64(0.7, 0.3);
        let mut m = c64(1.0, 0.0);
        for e in 0..12 {
            assert!((powi(z, e) - m).norm() < 1e-14, "exponent {e}");
            m *= z;
        }
        assert!((powi(z, -2) - 1.0 / (z * z)).norm() < 1e-14);
    }

    #[test]
    fn transcendental_derivatives() {
        let z = c64(0.3, 0.4);
        let d = Dual::variable(z);
        assert!((d.exp().eps - z.exp()).norm() < 1e-15);
        assert!((d.sin().eps - z.cos()).norm() < 1e-15);
        assert!((d.cos().eps + z.sin()).norm() < 1e-15);
        assert!((d.ln().eps - 1.0 / z).norm() < 1e-15);
    }
}
