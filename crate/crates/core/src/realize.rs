//! Numeric realization of transcript expressions at a point `x`.
//!
//! The evaluator walks transcript definitions bottom-up and memoizes every
//! atom. It is generic over a [`LevelAlgebra`], so the same walk produces
//! either Taylor jets of the matrices ([`JetAlgebra`]) or exact matrix
//! polynomials in `Q^{-1/n}` and the derivatives of `p` ([`PolyAlgebra`]).

use std::collections::HashMap;

use serde::Serialize;

use num_traits::{One, Zero};

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::jet::{Jet, MatrixJet};
use crate::matpoly::{MatPoly, Monomial};
use crate::ncalg::{Atom, NCExpr};
use crate::recur::Transcript;
use crate::scalar::{Real, C};

/// Constant matrices of the leading-order problem for order `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseMatrices<T> {
    pub n: usize,
    /// Roots of unity `omega_k = exp(2 pi i (k - 1) / n)`.
    pub omega: Vec<C<T>>,
    pub d: CMat<T>,
    pub omega_mat: CMat<T>,
    pub omega_inv: CMat<T>,
    /// `V_1 = p * v_template`.
    pub v_template: CMat<T>,
}

impl<T: Real> BaseMatrices<T> {
    pub fn new(n: usize) -> Self {
        let omega: Vec<C<T>> = (0..n)
            .map(|k| {
                // exact values for the quarter turns keep n = 4 free of roundoff
                match (4 * k) % n == 0 && n % 4 == 0 {
                    true => [C::<T>::one(), C::<T>::i(), -C::<T>::one(), -C::<T>::i()][(4 * k / n) % 4],
                    false => C::from_polar(T::one(), T::TAU() * T::of_usize(k) / T::of_usize(n)),
                }
            })
            .collect();
        let nt = T::of_usize(n);
        let omega_mat = CMat::from_fn(n, |j, k| omega[k].powu(j as u32));
        let omega_inv = CMat::from_fn(n, |j, k| omega[j].powu(k as u32).inv() / nt);
        let ramp: Vec<C<T>> = (0..n).map(|r| C::new(T::of_usize(r), T::zero())).collect();
        let shift = (nt - T::one()) / T::lit(2.0);
        let v_template =
            &(&(&omega_inv * &CMat::diagonal(&ramp)) * &omega_mat) - &CMat::identity(n).scale_real(shift);
        BaseMatrices { n, d: CMat::diagonal(&omega), omega, omega_mat, omega_inv, v_template }
    }

    /// Coefficient of `p I` in `D_1`.
    pub fn d1_shift(&self) -> T {
        (T::of_usize(self.n) - T::one()) / T::lit(2.0)
    }

    /// Solves `P D - D P = V` for `P` with zero diagonal.
    pub fn solve_commutator(&self, v: &CMat<T>) -> CMat<T> {
        CMat::from_fn(self.n, |i, j| if i == j { C::<T>::zero() } else { v[(i, j)] / (self.omega[j] - self.omega[i]) })
    }
}

/// Scalar jets of the potential and its derived quantities at one point.
#[derive(Clone, Debug)]
pub struct ScalarContext<T> {
    pub alpha: T,
    pub lambda: C<T>,
    pub n: usize,
    pub x: T,
    /// `Q = lambda + x^alpha`.
    pub q: Jet<T>,
    /// `Q^{1/n}`.
    pub q_root: Jet<T>,
    /// `Q^{-1/n}`.
    pub q_inv_root: Jet<T>,
    /// `p = -(1/n) Q' Q^{-1-1/n}`.
    pub p: Jet<T>,
}

/// Context for `n = 4` with jets of order `order`.
pub fn make_context<T: Real>(alpha: T, lambda: C<T>, x: T, order: usize) -> Result<ScalarContext<T>> {
    make_context_n(alpha, lambda, x, order, 4)
}

pub fn make_context_n<T: Real>(alpha: T, lambda: C<T>, x: T, order: usize, n: usize) -> Result<ScalarContext<T>> {
    if !(x > T::zero()) {
        return Err(Error::InvalidInput(format!("evaluation point must be positive, got {x}")));
    }
    if !(alpha > T::zero()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if order < 1 {
        return Err(Error::InvalidInput("jet order must be at least 1".into()));
    }
    let nt = T::of_usize(n);
    let q_ext = Jet::potential(alpha, lambda, x, order + 1);
    let q_inv_ext = q_ext.powf(-T::one() / nt)?;
    let p = q_inv_ext.differentiate()?;
    Ok(ScalarContext {
        alpha,
        lambda,
        n,
        x,
        q: q_ext.truncate(order),
        q_root: q_ext.truncate(order).powf(T::one() / nt)?,
        q_inv_root: q_inv_ext.truncate(order),
        p,
    })
}

impl<T: Real> ScalarContext<T> {
    pub fn order(&self) -> usize {
        self.q.order()
    }

    /// `[p, p', ..., p^{(order)}]` at the base point.
    pub fn p_derivs(&self) -> Vec<C<T>> {
        (0..=self.p.order()).map(|r| self.p.derivative(r).expect("within order")).collect()
    }
}

/// Operations the transcript evaluator needs from a matrix representation.
pub trait LevelAlgebra {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn identity(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, k: i64) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn dg(&self, a: &Self::Elem) -> Self::Elem;
    /// `D_1 = D + (n-1)/2 p I`.
    fn d1(&self) -> Self::Elem;
    /// The level-one perturbation `V_{1,1}`.
    fn v11(&self) -> Self::Elem;
    /// `P` with `P D - D P = V`; `V` must have zero diagonal.
    fn solve_commutator(&self, v: &Self::Elem) -> Result<Self::Elem>;
    /// `-Q^{-1/n} P'`.
    fn dp_composite(&self, p: &Self::Elem) -> Result<Self::Elem>;
    /// `(I + P)^{-1}`.
    fn inv_identity_plus(&self, p: &Self::Elem) -> Result<Self::Elem>;
}

/// Taylor-jet realization at a single point.
#[derive(Clone, Debug)]
pub struct JetAlgebra<T> {
    pub ctx: ScalarContext<T>,
    pub base: BaseMatrices<T>,
}

impl<T: Real> JetAlgebra<T> {
    pub fn new(ctx: ScalarContext<T>) -> Self {
        let base = BaseMatrices::new(ctx.n);
        JetAlgebra { ctx, base }
    }

    fn order(&self) -> usize {
        self.ctx.order()
    }
}

fn check_zero_diagonal<T: Real>(coeffs: &[&CMat<T>]) -> Result<()> {
    let scale = coeffs.iter().fold(T::zero(), |a, m| a.max(m.max_abs()));
    let diag = coeffs.iter().fold(T::zero(), |a, m| a.max(m.max_abs_diag()));
    if diag > T::lit(1e3) * T::epsilon() * scale.max(T::min_positive_value()) {
        return Err(Error::NonzeroDiagonal(diag.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

impl<T: Real> LevelAlgebra for JetAlgebra<T> {
    type Elem = MatrixJet<T>;

    fn zero(&self) -> MatrixJet<T> {
        MatrixJet::zeros(self.base.n, self.ctx.x, self.order())
    }

    fn identity(&self) -> MatrixJet<T> {
        MatrixJet::identity(self.base.n, self.ctx.x, self.order())
    }

    fn add(&self, a: &MatrixJet<T>, b: &MatrixJet<T>) -> MatrixJet<T> {
        a + b
    }

    fn scale(&self, a: &MatrixJet<T>, k: i64) -> MatrixJet<T> {
        a.map_coeffs(|m| m.scale_real(T::lit(k as f64)))
    }

    fn mul(&self, a: &MatrixJet<T>, b: &MatrixJet<T>) -> MatrixJet<T> {
        a * b
    }

    fn dg(&self, a: &MatrixJet<T>) -> MatrixJet<T> {
        a.dg()
    }

    fn d1(&self) -> MatrixJet<T> {
        let shift = CMat::identity(self.base.n).scale_real(self.base.d1_shift());
        &MatrixJet::constant(self.base.d.clone(), self.ctx.x, self.order())
            + &MatrixJet::scalar_times(&self.ctx.p, &shift)
    }

    fn v11(&self) -> MatrixJet<T> {
        realize_level1_v(&self.ctx, &self.base)
    }

    fn solve_commutator(&self, v: &MatrixJet<T>) -> Result<MatrixJet<T>> {
        realize_p_with(&self.base, v)
    }

    fn dp_composite(&self, p: &MatrixJet<T>) -> Result<MatrixJet<T>> {
        Ok(-&p.differentiate()?.mul_scalar(&self.ctx.q_inv_root))
    }

    fn inv_identity_plus(&self, p: &MatrixJet<T>) -> Result<MatrixJet<T>> {
        (&MatrixJet::identity(self.base.n, self.ctx.x, p.order()) + p).inverse()
    }
}

/// Exact symbolic realization as matrix polynomials.
#[derive(Clone, Debug)]
pub struct PolyAlgebra<T> {
    pub base: BaseMatrices<T>,
}

impl<T: Real> PolyAlgebra<T> {
    pub fn new(n: usize) -> Self {
        PolyAlgebra { base: BaseMatrices::new(n) }
    }
}

impl<T: Real> LevelAlgebra for PolyAlgebra<T> {
    type Elem = MatPoly<T>;

    fn zero(&self) -> MatPoly<T> {
        MatPoly::zero(self.base.n)
    }

    fn identity(&self) -> MatPoly<T> {
        MatPoly::constant(CMat::identity(self.base.n))
    }

    fn add(&self, a: &MatPoly<T>, b: &MatPoly<T>) -> MatPoly<T> {
        a + b
    }

    fn scale(&self, a: &MatPoly<T>, k: i64) -> MatPoly<T> {
        a.scale_real(T::lit(k as f64))
    }

    fn mul(&self, a: &MatPoly<T>, b: &MatPoly<T>) -> MatPoly<T> {
        a * b
    }

    fn dg(&self, a: &MatPoly<T>) -> MatPoly<T> {
        a.dg()
    }

    fn d1(&self) -> MatPoly<T> {
        let shift = CMat::identity(self.base.n).scale_real(self.base.d1_shift());
        &MatPoly::constant(self.base.d.clone()) + &MatPoly::monomial(Monomial::p(0), shift)
    }

    fn v11(&self) -> MatPoly<T> {
        MatPoly::monomial(Monomial::p(0), self.base.v_template.clone())
    }

    fn solve_commutator(&self, v: &MatPoly<T>) -> Result<MatPoly<T>> {
        let coeffs: Vec<&CMat<T>> = v.terms().map(|(_, m)| m).collect();
        check_zero_diagonal(&coeffs)?;
        Ok(v.map_coeffs(|m| self.base.solve_commutator(m)))
    }

    fn dp_composite(&self, p: &MatPoly<T>) -> Result<MatPoly<T>> {
        Ok(-&p.differentiate().times_monomial(&Monomial::q()))
    }

    fn inv_identity_plus(&self, _p: &MatPoly<T>) -> Result<MatPoly<T>> {
        Err(Error::NotPolynomial("(I + P)^{-1}".into()))
    }
}

/// `D_1` and `V_1` as matrix jets.
pub fn realize_level1<T: Real>(ctx: &ScalarContext<T>) -> (MatrixJet<T>, MatrixJet<T>) {
    let alg = JetAlgebra::new(ctx.clone());
    (alg.d1(), alg.v11())
}

fn realize_level1_v<T: Real>(ctx: &ScalarContext<T>, base: &BaseMatrices<T>) -> MatrixJet<T> {
    MatrixJet::scalar_times(&ctx.p, &base.v_template)
}

/// `P` with `P D - D P = V`, entry `v_ij / (omega_j - omega_i)`.
pub fn realize_p<T: Real>(v: &MatrixJet<T>) -> Result<MatrixJet<T>> {
    realize_p_with(&BaseMatrices::new(v.dim()), v)
}

fn realize_p_with<T: Real>(base: &BaseMatrices<T>, v: &MatrixJet<T>) -> Result<MatrixJet<T>> {
    let coeffs: Vec<&CMat<T>> = v.taylor().iter().collect();
    check_zero_diagonal(&coeffs)?;
    Ok(v.map_coeffs(|m| base.solve_commutator(m)))
}

/// Memoizing evaluator of transcript expressions over a [`LevelAlgebra`].
pub struct Evaluator<'t, A: LevelAlgebra> {
    alg: A,
    transcript: &'t Transcript,
    memo: HashMap<Atom, A::Elem>,
}

impl<'t, A: LevelAlgebra> Evaluator<'t, A> {
    pub fn new(alg: A, transcript: &'t Transcript) -> Self {
        Evaluator { alg, transcript, memo: HashMap::new() }
    }

    pub fn algebra(&self) -> &A {
        &self.alg
    }

    pub fn transcript(&self) -> &Transcript {
        self.transcript
    }

    pub fn eval(&mut self, e: &NCExpr) -> Result<A::Elem> {
        let mut acc = self.alg.zero();
        for (factors, coeff) in e.terms() {
            let mut prod: Option<A::Elem> = None;
            for f in factors {
                let v = self.atom(f)?;
                prod = Some(match prod {
                    None => v,
                    Some(p) => self.alg.mul(&p, &v),
                });
            }
            let prod = prod.unwrap_or_else(|| self.alg.identity());
            acc = self.alg.add(&acc, &self.alg.scale(&prod, coeff));
        }
        Ok(acc)
    }

    pub fn atom(&mut self, a: &Atom) -> Result<A::Elem> {
        if let Some(v) = self.memo.get(a) {
            return Ok(v.clone());
        }
        let v = self.compute(a)?;
        self.memo.insert(a.clone(), v.clone());
        Ok(v)
    }

    fn definition(&self, a: &Atom) -> Result<&'t NCExpr> {
        let t = self.transcript;
        let def = match a {
            Atom::S(m) => t.s(*m),
            Atom::V(j, m) => t.v(*j, *m),
            Atom::E { m, .. } => t.e(*m),
            _ => None,
        };
        def.ok_or_else(|| Error::UndefinedAtom(a.to_string()))
    }

    fn compute(&mut self, a: &Atom) -> Result<A::Elem> {
        match a {
            Atom::D1 => Ok(self.alg.d1()),
            Atom::V(1, 1) => Ok(self.alg.v11()),
            Atom::S(_) | Atom::V(_, _) | Atom::E { .. } => {
                let def = self.definition(a)?;
                self.eval(def)
            }
            Atom::P(m) => {
                let v = self.atom(&Atom::V(1, *m))?;
                self.alg.solve_commutator(&v)
            }
            Atom::DP(m) => {
                let p = self.atom(&Atom::P(*m))?;
                self.alg.dp_composite(&p)
            }
            Atom::T(m) => {
                let delta = self.delta(*m)?;
                let p = self.atom(&Atom::P(*m))?;
                let dp = self.alg.mul(&delta, &p);
                let pd = self.alg.mul(&p, &delta);
                Ok(self.alg.add(&dp, &self.alg.scale(&pd, -1)))
            }
            Atom::Inv(m) => {
                let p = self.atom(&Atom::P(*m))?;
                self.alg.inv_identity_plus(&p)
            }
            Atom::IdP(m) => {
                let p = self.atom(&Atom::P(*m))?;
                Ok(self.alg.add(&self.alg.identity(), &p))
            }
            Atom::Dg(e) => {
                let v = self.eval(e)?;
                Ok(self.alg.dg(&v))
            }
        }
    }

    /// `Delta_m = sum_{j=2..m} dg S_j` (zero for `m = 1`).
    pub fn delta(&mut self, m: u32) -> Result<A::Elem> {
        let mut acc = self.alg.zero();
        for j in 2..=m {
            let s = self.atom(&Atom::S(j))?;
            acc = self.alg.add(&acc, &self.alg.dg(&s));
        }
        Ok(acc)
    }

    /// `I + P` with `P` the ordered product `prod_{m=1}^{depth-1} (I + P_m)` minus `I`.
    pub fn transfer_product(&mut self) -> Result<A::Elem> {
        let mut acc = self.alg.identity();
        for m in 1..self.transcript.depth() {
            let f = self.atom(&Atom::IdP(m))?;
            acc = self.alg.mul(&acc, &f);
        }
        Ok(acc)
    }
}

/// Realizes `e` as a matrix jet at the context point.
pub fn realize_expr<T: Real>(e: &NCExpr, ctx: &ScalarContext<T>, transcript: &Transcript) -> Result<MatrixJet<T>> {
    Evaluator::new(JetAlgebra::new(ctx.clone()), transcript).eval(e)
}

/// Realizes `e` as an exact matrix polynomial; fails on inverse atoms.
pub fn realize_poly<T: Real>(e: &NCExpr, transcript: &Transcript) -> Result<MatPoly<T>> {
    Evaluator::new(PolyAlgebra::new(4), transcript).eval(e)
}

/// `F_m = D_1 + Delta_m + sum_j V_{j,m} + E_m`, with `F_M = D_1 + Delta_{M-1} + E_M`.
pub fn level_matrix<A: LevelAlgebra + Clone>(ev: &mut Evaluator<A>, m: u32) -> Result<A::Elem> {
    let t = ev.transcript();
    let big = t.depth();
    let buckets = if m < big { t.bucket_indices(m) } else { Vec::new() };
    let remainder = if m > 1 { t.e(m).cloned() } else { None };
    let alg = ev.algebra().clone();
    let mut f = alg.add(&alg.d1(), &ev.delta(if m == big { big - 1 } else { m })?);
    for j in buckets {
        f = alg.add(&f, &ev.atom(&Atom::V(j, m))?);
    }
    if let Some(e) = remainder {
        f = alg.add(&f, &ev.eval(&e)?);
    }
    Ok(f)
}

/// Relative defects of the per-level identities at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCheck {
    pub m: u32,
    /// `F_{m+1}` against `(I + P_m)^{-1} (F_m (I + P_m) + DP_m)`.
    pub transform: f64,
    /// `P_m D - D P_m` against `V_{1,m}`.
    pub commutator: f64,
    /// `max |dg V_{1,m}| / max |V_{1,m}|`.
    pub diagonal: f64,
}

/// Checks every level `m = 1..M-1` of `transcript` at `x`.
pub fn check_levels(alpha: f64, lambda: C<f64>, x: f64, transcript: &Transcript) -> Result<Vec<LevelCheck>> {
    let big = transcript.depth();
    let ctx = make_context(alpha, lambda, x, big as usize + 2)?;
    let alg = JetAlgebra::new(ctx);
    let d = alg.base.d.clone();
    let mut ev = Evaluator::new(alg, transcript);
    let mut out = Vec::new();
    for m in 1..big {
        let fm = level_matrix(&mut ev, m)?;
        let fn1 = level_matrix(&mut ev, m + 1)?;
        let inv = ev.atom(&Atom::Inv(m))?;
        let idp = ev.atom(&Atom::IdP(m))?;
        let dp = ev.atom(&Atom::DP(m))?;
        let rhs = &inv * &(&(&fm * &idp) + &dp);
        let transform = fn1.value().max_abs_diff(rhs.value()) / rhs.value().max_abs();
        let p = ev.atom(&Atom::P(m))?.value().clone();
        let v = ev.atom(&Atom::V(1, m))?.value().clone();
        let comm = &(&p * &d) - &(&d * &p);
        let scale = v.max_abs().max(f64::MIN_POSITIVE);
        out.push(LevelCheck {
            m,
            transform,
            commutator: comm.max_abs_diff(&v) / scale,
            diagonal: v.max_abs_diag() / scale,
        });
    }
    Ok(out)
}

/// Max-entry norms of `P_m` and `V_{j,m}` at `x`, keyed by display name.
pub fn level_norms(alpha: f64, lambda: C<f64>, x: f64, transcript: &Transcript) -> Result<Vec<(Atom, f64)>> {
    let big = transcript.depth();
    let ctx = make_context(alpha, lambda, x, big as usize + 2)?;
    let mut ev = Evaluator::new(JetAlgebra::new(ctx), transcript);
    let mut out = Vec::new();
    for m in 1..big {
        let a = Atom::P(m);
        out.push((a.clone(), ev.atom(&a)?.value().max_abs()));
        let mut js = transcript.bucket_indices(m);
        if !js.contains(&1) {
            js.insert(0, 1);
        }
        for j in js {
            let a = Atom::V(j, m);
            out.push((a.clone(), ev.atom(&a)?.value().max_abs()));
        }
    }
    Ok(out)
}
