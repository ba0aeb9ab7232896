//! Truncated Taylor arithmetic for scalar and matrix functions of `x`.
//!
//! A jet of order `K` at `x0` stores `f^(k)(x0) / k!` for `k = 0..=K`.
//! Binary operations truncate to the smaller order.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    x: T,
    coeffs: Vec<C<T>>,
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * T::of_usize(i))
}

impl<T: Real> Jet<T> {
    /// Builds a jet from Taylor coefficients `f^(k)/k!`.
    pub fn from_taylor(x: T, coeffs: Vec<C<T>>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least a value");
        Jet { x, coeffs }
    }

    /// Builds a jet from the value and successive derivatives.
    pub fn from_derivatives(x: T, derivs: &[C<T>]) -> Self {
        let coeffs = derivs.iter().enumerate().map(|(k, d)| *d / factorial::<T>(k)).collect();
        Self::from_taylor(x, coeffs)
    }

    pub fn constant(x: T, v: C<T>, order: usize) -> Self {
        let mut coeffs = vec![C::<T>::zero(); order + 1];
        coeffs[0] = v;
        Jet { x, coeffs }
    }

    /// The independent variable `x` itself.
    pub fn variable(x: T, order: usize) -> Self {
        let mut j = Self::constant(x, C::new(x, T::zero()), order);
        if order >= 1 {
            j.coeffs[1] = C::<T>::one();
        }
        j
    }

    pub fn point(&self) -> T {
        self.x
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> C<T> {
        self.coeffs[0]
    }

    pub fn taylor(&self) -> &[C<T>] {
        &self.coeffs
    }

    /// The `d`-th derivative at the base point.
    pub fn derivative(&self, d: usize) -> Result<C<T>> {
        self.coeffs
            .get(d)
            .map(|c| *c * factorial::<T>(d))
            .ok_or(Error::InsufficientJetOrder { needed: d, available: self.order() })
    }

    /// Jet of `f'`, one order lower.
    pub fn differentiate(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::InsufficientJetOrder { needed: 1, available: 0 });
        }
        let coeffs = (1..self.coeffs.len()).map(|k| self.coeffs[k] * T::of_usize(k)).collect();
        Ok(Jet { x: self.x, coeffs })
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = (order + 1).min(self.coeffs.len());
        Jet { x: self.x, coeffs: self.coeffs[..n].to_vec() }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Jet { x: self.x, coeffs: self.coeffs.iter().map(|c| *c * s).collect() }
    }

    pub fn add_const(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + s;
        out
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::Singular("reciprocal of a jet with zero value".into()));
        }
        let inv0 = C::<T>::one() / a0;
        let mut b: Vec<C<T>> = Vec::with_capacity(self.coeffs.len());
        b.push(inv0);
        for k in 1..self.coeffs.len() {
            let s = (1..=k).fold(C::<T>::zero(), |acc, j| acc + self.coeffs[j] * b[k - j]);
            b.push(-s * inv0);
        }
        Ok(Jet { x: self.x, coeffs: b })
    }

    /// Principal-branch complex power `f^s`.
    pub fn powc(&self, s: C<T>) -> Result<Self> {
        let f0 = self.coeffs[0];
        if f0.is_zero() {
            return Err(Error::Singular("power of a jet with zero value".into()));
        }
        let mut g: Vec<C<T>> = Vec::with_capacity(self.coeffs.len());
        g.push(f0.powc(s));
        let s1 = s + C::<T>::one();
        for k in 1..self.coeffs.len() {
            let kt = T::of_usize(k);
            let acc = (1..=k).fold(C::<T>::zero(), |acc, j| {
                let w = s1 * T::of_usize(j) - C::new(kt, T::zero());
                acc + w * self.coeffs[j] * g[k - j]
            });
            g.push(acc / (f0 * kt));
        }
        Ok(Jet { x: self.x, coeffs: g })
    }

    pub fn powf(&self, s: T) -> Result<Self> {
        self.powc(C::new(s, T::zero()))
    }

    /// Jet of `lambda + x^alpha` at `x > 0`, exact in every coefficient.
    pub fn potential(alpha: T, lambda: C<T>, x: T, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut binom = T::one();
        for k in 0..=order {
            if k > 0 {
                binom = binom * (alpha - T::of_usize(k - 1)) / T::of_usize(k);
            }
            coeffs.push(C::new(binom * x.powf(alpha - T::of_usize(k)), T::zero()));
        }
        coeffs[0] = coeffs[0] + lambda;
        Jet { x, coeffs }
    }
}

fn zip_min<T: Real>(a: &[C<T>], b: &[C<T>], f: impl Fn(C<T>, C<T>) -> C<T>) -> Vec<C<T>> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &Jet<T>) -> Jet<T> {
        Jet { x: self.x, coeffs: zip_min(&self.coeffs, &rhs.coeffs, |a, b| a + b) }
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &Jet<T>) -> Jet<T> {
        Jet { x: self.x, coeffs: zip_min(&self.coeffs, &rhs.coeffs, |a, b| a - b) }
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet { x: self.x, coeffs: self.coeffs.iter().map(|a| -*a).collect() }
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| (0..=k).fold(C::<T>::zero(), |acc, j| acc + self.coeffs[j] * rhs.coeffs[k - j]))
            .collect();
        Jet { x: self.x, coeffs }
    }
}

/// Taylor jet of an `n x n` complex matrix function.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJet<T> {
    x: T,
    coeffs: Vec<CMat<T>>,
}

impl<T: Real> MatrixJet<T> {
    pub fn zeros(n: usize, x: T, order: usize) -> Self {
        MatrixJet { x, coeffs: vec![CMat::zeros(n); order + 1] }
    }

    pub fn identity(n: usize, x: T, order: usize) -> Self {
        Self::constant(CMat::identity(n), x, order)
    }

    pub fn constant(m: CMat<T>, x: T, order: usize) -> Self {
        let n = m.dim();
        let mut coeffs = vec![CMat::zeros(n); order + 1];
        coeffs[0] = m;
        MatrixJet { x, coeffs }
    }

    pub fn from_taylor(x: T, coeffs: Vec<CMat<T>>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least a value");
        MatrixJet { x, coeffs }
    }

    /// Scalar jet times a constant matrix.
    pub fn scalar_times(s: &Jet<T>, m: &CMat<T>) -> Self {
        MatrixJet { x: s.point(), coeffs: s.taylor().iter().map(|c| m.scale(*c)).collect() }
    }

    pub fn point(&self) -> T {
        self.x
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> &CMat<T> {
        &self.coeffs[0]
    }

    pub fn taylor(&self) -> &[CMat<T>] {
        &self.coeffs
    }

    pub fn derivative(&self, d: usize) -> Result<CMat<T>> {
        self.coeffs
            .get(d)
            .map(|c| c.scale_real(factorial::<T>(d)))
            .ok_or(Error::InsufficientJetOrder { needed: d, available: self.order() })
    }

    /// Jet of the entrywise derivative, one order lower.
    pub fn differentiate(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::InsufficientJetOrder { needed: 1, available: 0 });
        }
        let coeffs = (1..self.coeffs.len()).map(|k| self.coeffs[k].scale_real(T::of_usize(k))).collect();
        Ok(MatrixJet { x: self.x, coeffs })
    }

    /// Scalar jet `(i, j)` entry.
    pub fn entry(&self, i: usize, j: usize) -> Jet<T> {
        Jet::from_taylor(self.x, self.coeffs.iter().map(|m| m[(i, j)]).collect())
    }

    pub fn map_coeffs(&self, f: impl Fn(&CMat<T>) -> CMat<T>) -> Self {
        MatrixJet { x: self.x, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn dg(&self) -> Self {
        self.map_coeffs(CMat::dg)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map_coeffs(|m| m.scale(s))
    }

    pub fn mul_scalar(&self, s: &Jet<T>) -> Self {
        let n = self.coeffs.len().min(s.taylor().len());
        let sc = s.taylor();
        let coeffs = (0..n)
            .map(|k| (0..=k).fold(CMat::zeros(self.dim()), |acc, j| &acc + &self.coeffs[k - j].scale(sc[j])))
            .collect();
        MatrixJet { x: self.x, coeffs }
    }

    /// Series inverse; fails if the value is singular.
    pub fn inverse(&self) -> Result<Self> {
        let a0inv = self.coeffs[0].inverse().ok_or_else(|| Error::Singular("matrix jet value".into()))?;
        let mut b: Vec<CMat<T>> = Vec::with_capacity(self.coeffs.len());
        b.push(a0inv.clone());
        for k in 1..self.coeffs.len() {
            let s = (1..=k).fold(CMat::zeros(self.dim()), |acc, j| &acc + &(&self.coeffs[j] * &b[k - j]));
            b.push(-&(&a0inv * &s));
        }
        Ok(MatrixJet { x: self.x, coeffs: b })
    }

    /// Largest entry modulus over all stored Taylor coefficients of the value.
    pub fn max_abs(&self) -> T {
        self.coeffs[0].max_abs()
    }
}

impl<T: Real> Add for &MatrixJet<T> {
    type Output = MatrixJet<T>;
    fn add(self, rhs: &MatrixJet<T>) -> MatrixJet<T> {
        MatrixJet { x: self.x, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &MatrixJet<T> {
    type Output = MatrixJet<T>;
    fn sub(self, rhs: &MatrixJet<T>) -> MatrixJet<T> {
        MatrixJet { x: self.x, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl<T: Real> Neg for &MatrixJet<T> {
    type Output = MatrixJet<T>;
    fn neg(self) -> MatrixJet<T> {
        self.map_coeffs(|m| -m)
    }
}

impl<T: Real> Mul for &MatrixJet<T> {
    type Output = MatrixJet<T>;
    fn mul(self, rhs: &MatrixJet<T>) -> MatrixJet<T> {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| (0..=k).fold(CMat::zeros(self.dim()), |acc, j| &acc + &(&self.coeffs[j] * &rhs.coeffs[k - j])))
            .collect();
        MatrixJet { x: self.x, coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type C64 = C<f64>;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn linear_potential_jet() {
        let q = Jet::potential(1.0, c(0.0, 0.0), 1.0, 2);
        assert_eq!(q.taylor(), &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn potential_derivatives_are_falling_factorials() {
        let (alpha, x) = (4.0 / 3.0, 10.0);
        let q = Jet::potential(alpha, c(0.0, 1.0), x, 4);
        let mut fall = 1.0;
        for j in 1..=4 {
            fall *= alpha - (j - 1) as f64;
            let expect = fall * x.powf(alpha - j as f64);
            assert!(close(q.derivative(j).unwrap(), c(expect, 0.0), 1e-14));
        }
    }

    #[test]
    fn power_matches_closed_form() {
        // (lambda + x)^(-1/4): derivative -(1/4)(lambda+x)^(-5/4), second (5/16)(lambda+x)^(-9/4)
        let lam = c(0.3, 1.0);
        let x = 2.5;
        let q = Jet::potential(1.0, lam, x, 3);
        let g = q.powf(-0.25).unwrap();
        let z: C64 = lam + x;
        assert!(close(g.derivative(1).unwrap(), z.powf(-1.25) * -0.25, 1e-14));
        assert!(close(g.derivative(2).unwrap(), z.powf(-2.25) * (5.0 / 16.0), 1e-14));
        assert!(close(g.derivative(3).unwrap(), z.powf(-3.25) * (-45.0 / 64.0), 1e-14));
    }

    #[test]
    fn recip_times_self_is_one() {
        let q = Jet::potential(0.5, c(-0.5, 2.0), 3.0, 6);
        let r = q.recip().unwrap();
        let one = &q * &r;
        assert!(close(one.value(), c(1.0, 0.0), 1e-15));
        for k in 1..=6 {
            assert!(one.taylor()[k].norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_order_is_checked() {
        let q = Jet::potential(1.0, c(0.0, 1.0), 1.0, 2);
        assert!(q.derivative(3).is_err());
        assert_eq!(q.differentiate().unwrap().order(), 1);
    }

    #[test]
    fn matrix_inverse_series() {
        let x = 2.0;
        let s = Jet::potential(1.0, c(0.0, 1.0), x, 4).powf(-1.25).unwrap();
        let m = CMat::from_fn(3, |i, j| c((i + 2 * j) as f64 * 0.1, (i as f64) - (j as f64)));
        let a = &MatrixJet::identity(3, x, 4) + &MatrixJet::scalar_times(&s, &m);
        let b = a.inverse().unwrap();
        let prod = &a * &b;
        assert!(prod.value().max_abs_diff(&CMat::identity(3)) < 1e-14);
        for k in 1..=4 {
            assert!(prod.taylor()[k].max_abs() < 1e-14);
        }
    }

    #[test]
    fn leibniz_for_matrix_products() {
        let x = 1.7;
        let s = Jet::potential(1.0, c(0.2, 1.0), x, 3).powf(-0.25).unwrap();
        let t = Jet::potential(0.5, c(0.0, 0.5), x, 3).powf(0.75).unwrap();
        let a = MatrixJet::scalar_times(&s, &CMat::from_fn(2, |i, j| c(1.0 + i as f64, j as f64)));
        let b = MatrixJet::scalar_times(&t, &CMat::from_fn(2, |i, j| c(j as f64, 2.0 - i as f64)));
        let ab = &a * &b;
        let lhs = ab.derivative(1).unwrap();
        let rhs = &(&a.derivative(1).unwrap() * b.value()) + &(a.value() * &b.derivative(1).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }
}
