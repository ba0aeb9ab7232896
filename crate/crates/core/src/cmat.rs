//! Small dense complex matrices (n = 2 or 4 in practice).

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{Real, C};

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    n: usize,
    data: Vec<C<T>>,
}

pub type CMat64 = CMat<f64>;

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C::<T>::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C::<T>::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMat { n, data }
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn diagonal(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn scale(&self, s: C<T>) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|v| *v * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|v| *v * s).collect() }
    }

    /// Diagonal part, off-diagonal entries zeroed.
    pub fn dg(&self) -> Self {
        Self::from_fn(self.n, |i, j| if i == j { self[(i, i)] } else { C::<T>::zero() })
    }

    pub fn diag_entries(&self) -> Vec<C<T>> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    /// Sup norm: largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn max_abs_diag(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc.max(self[(i, i)].norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        (0..self.n)
            .map(|i| (0..self.n).fold(C::<T>::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs();
        if !(scale > T::zero()) || !scale.is_finite() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r1, &r2| a[(r1, col)].norm().partial_cmp(&a[(r2, col)].norm()).unwrap())
                .unwrap();
            if a[(piv, col)].norm() <= tiny {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = C::<T>::one() / a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] * d;
                inv[(col, j)] = inv[(col, j)] * d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(r, j)] = a[(r, j)] - f * ac;
                    inv[(r, j)] = inv[(r, j)] - f * ic;
                }
            }
        }
        Some(inv)
    }

    /// Determinant by LU elimination.
    pub fn det(&self) -> C<T> {
        let n = self.n;
        let mut a = self.clone();
        let mut det = C::<T>::one();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r1, &r2| a[(r1, col)].norm().partial_cmp(&a[(r2, col)].norm()).unwrap())
                .unwrap();
            if a[(piv, col)].is_zero() {
                return C::<T>::zero();
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det = det * p;
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] = a[(r, j)] - f * v;
                }
            }
        }
        det
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &CMat<T>) -> CMat<T> {
        debug_assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect() }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &CMat<T>) -> CMat<T> {
        debug_assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect() }
    }
}

impl<T: Real> Neg for &CMat<T> {
    type Output = CMat<T>;
    fn neg(self) -> CMat<T> {
        CMat { n: self.n, data: self.data.iter().map(|a| -*a).collect() }
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &CMat<T>) -> CMat<T> {
        let n = self.n;
        debug_assert_eq!(n, rhs.n);
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: CMat<T>) -> CMat<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: CMat<T>) -> CMat<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul for CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: CMat<T>) -> CMat<T> {
        &self * &rhs
    }
}
