//! Matrix polynomials in `q = Q^{-1/n}` and the derivatives of `p = q'`.
//!
//! Every polynomial atom of the diagonalization is a finite sum of scalar
//! monomials `q^j p^{(r_1)} ... p^{(r_s)}` with constant matrix coefficients.
//! The representation is closed under products, diagonal extraction and
//! differentiation (`q' = p`, `(p^{(r)})' = p^{(r+1)}`), which makes both
//! pointwise evaluation and envelope bounding straightforward.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::cmat::CMat;
use crate::scalar::{Real, C};

/// Scalar monomial `q^q_pow * prod_i p^{(derivs_i)}` with `derivs` sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub q_pow: u32,
    pub derivs: Vec<u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn q() -> Self {
        Monomial { q_pow: 1, derivs: vec![] }
    }

    /// `p^{(r)}`.
    pub fn p(r: u32) -> Self {
        Monomial { q_pow: 0, derivs: vec![r] }
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        let mut derivs = self.derivs.clone();
        derivs.extend_from_slice(&other.derivs);
        derivs.sort_unstable();
        Monomial { q_pow: self.q_pow + other.q_pow, derivs }
    }

    /// Derivative as an integer combination of monomials.
    pub fn differentiate(&self) -> Vec<(i64, Monomial)> {
        let mut out = Vec::new();
        if self.q_pow > 0 {
            let mut derivs = self.derivs.clone();
            derivs.push(0);
            derivs.sort_unstable();
            out.push((self.q_pow as i64, Monomial { q_pow: self.q_pow - 1, derivs }));
        }
        for i in 0..self.derivs.len() {
            let mut derivs = self.derivs.clone();
            derivs[i] += 1;
            derivs.sort_unstable();
            out.push((1, Monomial { q_pow: self.q_pow, derivs }));
        }
        out
    }

    /// Value from `q` and `p_derivs[r] = p^{(r)}`.
    pub fn eval<T: Real>(&self, q: C<T>, p_derivs: &[C<T>]) -> C<T> {
        let mut v = q.powu(self.q_pow);
        for r in &self.derivs {
            v = v * p_derivs[*r as usize];
        }
        v
    }

    pub fn max_deriv(&self) -> Option<u32> {
        self.derivs.last().copied()
    }
}

/// Sum of monomials with constant `n x n` complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly<T> {
    n: usize,
    terms: BTreeMap<Monomial, CMat<T>>,
}

impl<T: Real> MatPoly<T> {
    pub fn zero(n: usize) -> Self {
        MatPoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(m: CMat<T>) -> Self {
        Self::monomial(Monomial::one(), m)
    }

    pub fn monomial(mono: Monomial, m: CMat<T>) -> Self {
        let mut out = Self::zero(m.dim());
        out.push(mono, m);
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &CMat<T>)> {
        self.terms.iter()
    }

    fn push(&mut self, mono: Monomial, m: CMat<T>) {
        let slot = self.terms.entry(mono.clone()).or_insert_with(|| CMat::zeros(self.n));
        *slot = &*slot + &m;
        if slot.max_abs() == T::zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        MatPoly { n: self.n, terms: self.terms.iter().map(|(k, v)| (k.clone(), v.scale_real(s))).collect() }
    }

    pub fn dg(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.push(k.clone(), v.dg());
        }
        out
    }

    /// Applies `f` to every coefficient matrix.
    pub fn map_coeffs(&self, f: impl Fn(&CMat<T>) -> CMat<T>) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.push(k.clone(), f(v));
        }
        out
    }

    /// Multiplies every monomial by a scalar monomial.
    pub fn times_monomial(&self, mono: &Monomial) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.push(k.times(mono), v.clone());
        }
        out
    }

    pub fn differentiate(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            for (c, m) in k.differentiate() {
                out.push(m, v.scale_real(T::lit(c as f64)));
            }
        }
        out
    }

    /// Largest `r` with `p^{(r)}` present.
    pub fn max_deriv(&self) -> Option<u32> {
        self.terms.keys().filter_map(Monomial::max_deriv).max()
    }

    pub fn eval(&self, q: C<T>, p_derivs: &[C<T>]) -> CMat<T> {
        self.terms.iter().fold(CMat::zeros(self.n), |acc, (k, v)| &acc + &v.scale(k.eval(q, p_derivs)))
    }
}

impl<T: Real> Add for &MatPoly<T> {
    type Output = MatPoly<T>;
    fn add(self, rhs: &MatPoly<T>) -> MatPoly<T> {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.push(k.clone(), v.clone());
        }
        out
    }
}

impl<T: Real> Sub for &MatPoly<T> {
    type Output = MatPoly<T>;
    fn sub(self, rhs: &MatPoly<T>) -> MatPoly<T> {
        self + &(-rhs)
    }
}

impl<T: Real> Neg for &MatPoly<T> {
    type Output = MatPoly<T>;
    fn neg(self) -> MatPoly<T> {
        self.map_coeffs(|m| -m)
    }
}

impl<T: Real> Mul for &MatPoly<T> {
    type Output = MatPoly<T>;
    fn mul(self, rhs: &MatPoly<T>) -> MatPoly<T> {
        let mut out = MatPoly::zero(self.n);
        for (ka, va) in &self.terms {
            for (kb, vb) in &rhs.terms {
                out.push(ka.times(kb), va * vb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn monomial_derivative_rules() {
        let m = Monomial { q_pow: 2, derivs: vec![0, 1] };
        let d = m.differentiate();
        assert_eq!(d.len(), 3);
        assert!(d.contains(&(2, Monomial { q_pow: 1, derivs: vec![0, 0, 1] })));
        assert!(d.contains(&(1, Monomial { q_pow: 2, derivs: vec![1, 1] })));
        assert!(d.contains(&(1, Monomial { q_pow: 2, derivs: vec![0, 2] })));
    }

    #[test]
    fn cancellation_drops_terms() {
        let a: MatPoly<f64> = MatPoly::monomial(Monomial::p(0), CMat::identity(2));
        assert!((&a - &a).is_empty());
    }

    #[test]
    fn product_is_noncommutative() {
        let a: MatPoly<f64> = MatPoly::constant(CMat::from_fn(2, |i, j| c((i * 2 + j) as f64, 0.0)));
        let b: MatPoly<f64> = MatPoly::monomial(Monomial::q(), CMat::from_fn(2, |i, _| c(i as f64, 1.0)));
        let (q, pd) = (c(0.5, 0.1), vec![c(0.2, 0.0)]);
        let ab = (&a * &b).eval(q, &pd);
        let ba = (&b * &a).eval(q, &pd);
        assert!(ab.max_abs_diff(&ba) > 1e-3);
        assert!(ab.max_abs_diff(&(&a.eval(q, &pd) * &b.eval(q, &pd))) < 1e-15);
    }
}
