//! Power-law envelopes on `[X, inf)` and the certified error bound `eps(X)`.
//!
//! Every polynomial atom is bounded through its exact matrix-polynomial
//! form: each monomial `q^j prod p^{(r_i)}` has an envelope built from a
//! lower bound on `|Q|` and exact derivatives of `x^alpha`. Inverse atoms
//! are bounded by Neumann series. All envelopes are valid on the whole
//! half-line, which is what the tail integral needs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::matpoly::{MatPoly, Monomial};
use crate::ncalg::{Atom, NCExpr};
use crate::realize::{make_context, Evaluator, JetAlgebra, PolyAlgebra};
use crate::recur::Transcript;
use crate::C64;

/// `|f(x)| <= c x^(-e)` for all `x >= x0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerEnvelope {
    pub c: f64,
    pub e: f64,
    pub x0: f64,
}

impl PowerEnvelope {
    pub fn new(c: f64, e: f64, x0: f64) -> Self {
        PowerEnvelope { c, e, x0 }
    }

    pub fn zero(x0: f64) -> Self {
        PowerEnvelope { c: 0.0, e: f64::INFINITY, x0 }
    }

    pub fn constant(c: f64, x0: f64) -> Self {
        PowerEnvelope { c, e: 0.0, x0 }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0
    }

    pub fn at(&self, x: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.c * x.powf(-self.e)
        }
    }

    /// Value at the anchor, which is the supremum on `[x0, inf)` when `e >= 0`.
    pub fn sup(&self) -> f64 {
        self.at(self.x0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.x0);
        }
        PowerEnvelope { c: self.c * o.c, e: self.e + o.e, x0: self.x0.max(o.x0) }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.x0);
        }
        PowerEnvelope { c: self.c * s.abs(), ..*self }
    }

    /// Re-expresses the envelope with a smaller exponent `e`.
    fn aligned(&self, e: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.c * self.x0.powf(e - self.e)
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return *o;
        }
        if o.is_zero() {
            return *self;
        }
        let x0 = self.x0.max(o.x0);
        let e = self.e.min(o.e);
        let (a, b) = (Self { x0, ..*self }, Self { x0, ..*o });
        PowerEnvelope { c: a.aligned(e) + b.aligned(e), e, x0 }
    }

    /// Pointwise maximum, aligned to the smaller exponent.
    pub fn max(&self, o: &Self) -> Self {
        if self.is_zero() {
            return *o;
        }
        if o.is_zero() {
            return *self;
        }
        let x0 = self.x0.max(o.x0);
        let e = self.e.min(o.e);
        let (a, b) = (Self { x0, ..*self }, Self { x0, ..*o });
        PowerEnvelope { c: a.aligned(e).max(b.aligned(e)), e, x0 }
    }

    /// The tighter of two envelopes for the same function.
    pub fn tighter(&self, o: &Self) -> Self {
        let dominated = |a: &Self, b: &Self| a.e >= b.e && a.sup() <= b.sup();
        if dominated(o, self) {
            *o
        } else {
            *self
        }
    }

    /// `int_{x0}^inf c t^(-e) dt`.
    pub fn tail_integral(&self) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if self.e <= 1.0 {
            return Err(Error::InvalidBound(format!("tail integral diverges for exponent {}", self.e)));
        }
        Ok(self.c * self.x0.powf(1.0 - self.e) / (self.e - 1.0))
    }
}

/// `k = (1 - X^{-alpha})^{-1}`, so `|Q(x)| >= x^alpha / k` on `[X, inf)` for any `Re lambda >= -1`.
pub fn q_lower_bound(alpha: f64, x0: f64) -> Result<f64> {
    if !(x0 > 1.0) {
        return Err(Error::InvalidInput(format!("anchor X must exceed 1, got {x0}")));
    }
    Ok(1.0 / (1.0 - x0.powf(-alpha)))
}

/// Smallest `k` with `|lambda + t| >= t / k` for all `t >= X^alpha`.
pub fn q_lower_bound_for(alpha: f64, lambda: C64, x0: f64) -> Result<f64> {
    if !(x0 > 1.0) {
        return Err(Error::InvalidInput(format!("anchor X must exceed 1, got {x0}")));
    }
    if lambda.re < -1.0 {
        return Err(Error::InvalidInput(format!("Re lambda must be >= -1, got {}", lambda.re)));
    }
    let (a, b) = (lambda.re, lambda.im);
    let t_min = x0.powf(alpha);
    if a >= 0.0 {
        return Ok(1.0);
    }
    if t_min + a <= 0.0 {
        return Err(Error::InvalidBound("Q may vanish on [X, inf)".into()));
    }
    let f = |t: f64| t * t / ((t + a) * (t + a) + b * b);
    let t_star = (a * a + b * b) / (-a);
    let k = f(t_star.max(t_min)).sqrt();
    // never looser than the uniform bound
    Ok(k.min(q_lower_bound(alpha, x0)?))
}

fn falling(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a - i as f64))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Partial Bell polynomials `B_{n,j}(x_1, ..., x_{n-j+1})` for `j = 0..=n`.
fn bell_row(n: usize, xs: &[f64]) -> Vec<f64> {
    let mut b = vec![vec![0.0; n + 1]; n + 1];
    b[0][0] = 1.0;
    for m in 1..=n {
        for j in 1..=m {
            b[m][j] = (1..=m - j + 1).map(|i| binom(m - 1, i - 1) * xs[i - 1] * b[m - i][j - 1]).sum();
        }
    }
    b[n].clone()
}

/// Envelope of `|p^{(r)}|` on `[X, inf)`, exponent `1 + alpha/4 + r`.
///
/// `p^{(r)}` is the `(r+1)`-th derivative of `Q^{-1/4}`; Faa di Bruno writes
/// it through exact derivatives of `x^alpha` and powers `Q^{-1/4-j}`, each
/// bounded with `|Q| >= x^alpha / k`.
pub fn bound_p_derivative(alpha: f64, x0: f64, k: f64, r: u32) -> PowerEnvelope {
    let n = r as usize + 1;
    let xs: Vec<f64> = (1..=n).map(|i| falling(alpha, i).abs()).collect();
    let bell = bell_row(n, &xs);
    let c = (1..=n).map(|j| falling(-0.25, j).abs() * k.powf(0.25 + j as f64) * bell[j]).sum();
    PowerEnvelope::new(c, 1.0 + alpha / 4.0 + r as f64, x0)
}

/// Grid diagnostics of the dichotomy and integrability conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    /// `(j, k, constant_sign)` for every ordered pair `j != k` (1-based).
    pub pairs: Vec<(usize, usize, bool)>,
    /// Decay exponent of `|Q^{1/4}| ||E_M||` exceeds 1.
    pub integrable: bool,
    pub grid: (f64, f64, usize),
    pub passed: bool,
}

/// Per-atom entry of the envelope table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomBound {
    pub atom: String,
    pub envelope: PowerEnvelope,
    /// Max-entry value of the realized matrix at `X`, for comparison.
    pub realized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub alpha: f64,
    pub lambda: (f64, f64),
    pub x_large: f64,
    pub depth: u32,
    /// Lower-bound constant for `|Q|`.
    pub k: f64,
    /// `None` when `n I >= 1`.
    pub epsilon: Option<f64>,
    /// Bound on `int_X^inf |Q^{1/4}| ||E_M|| dt`.
    pub integral: f64,
    pub remainder: PowerEnvelope,
    pub atoms: Vec<AtomBound>,
    /// Max-entry bound of `P_m` at `X` for `m = 1..M-1`.
    pub p_norms: Vec<f64>,
    pub p_norms_ok: bool,
    pub n_integral_ok: bool,
    pub dichotomy: Option<DichotomyReport>,
    pub valid: bool,
}

/// Envelope machinery for one `(alpha, lambda, X)`.
pub struct Bounder<'t> {
    pub alpha: f64,
    pub lambda: C64,
    pub x0: f64,
    pub k: f64,
    /// `|Q| <= q_upper x^alpha` on `[X, inf)`.
    pub q_upper: f64,
    p_env: Vec<PowerEnvelope>,
    poly: Evaluator<'t, PolyAlgebra<f64>>,
}

const N: usize = 4;
const NF: f64 = N as f64;

fn is_scalar_atom(a: &Atom) -> bool {
    matches!(a, Atom::Inv(_) | Atom::IdP(_))
}

impl<'t> Bounder<'t> {
    pub fn new(alpha: f64, lambda: C64, x0: f64, transcript: &'t Transcript) -> Result<Self> {
        let k = q_lower_bound_for(alpha, lambda, x0)?;
        let q_upper = 1.0 + lambda.norm() * x0.powf(-alpha);
        let max_r = 2 * transcript.depth() + 2;
        let p_env = (0..=max_r).map(|r| bound_p_derivative(alpha, x0, k, r)).collect();
        Ok(Bounder {
            alpha,
            lambda,
            x0,
            k,
            q_upper,
            p_env,
            poly: Evaluator::new(PolyAlgebra::new(N), transcript),
        })
    }

    /// Envelope of `|Q^{1/4}|`, a growing power (negative exponent).
    pub fn q_root_envelope(&self) -> PowerEnvelope {
        PowerEnvelope::new(self.q_upper.powf(0.25), -self.alpha / 4.0, self.x0)
    }

    pub fn monomial_envelope(&self, m: &Monomial) -> PowerEnvelope {
        let q = PowerEnvelope::new(self.k.powf(m.q_pow as f64 / 4.0), m.q_pow as f64 * self.alpha / 4.0, self.x0);
        m.derivs.iter().fold(q, |acc, r| acc.mul(&self.p_env[*r as usize]))
    }

    fn entry_envelopes(&self, poly: &MatPoly<f64>) -> Vec<Vec<PowerEnvelope>> {
        let n = poly.dim();
        let mut out = vec![vec![PowerEnvelope::zero(self.x0); n]; n];
        for (mono, coeff) in poly.terms() {
            let env = self.monomial_envelope(mono);
            for (i, row) in out.iter_mut().enumerate() {
                for (j, slot) in row.iter_mut().enumerate() {
                    let a = coeff[(i, j)].norm();
                    if a > 0.0 {
                        *slot = slot.add(&env.scale(a));
                    }
                }
            }
        }
        out
    }

    /// Envelope of the largest entry modulus.
    pub fn poly_max_entry(&self, poly: &MatPoly<f64>) -> PowerEnvelope {
        self.entry_envelopes(poly)
            .iter()
            .flatten()
            .fold(PowerEnvelope::zero(self.x0), |acc, e| acc.max(e))
    }

    /// Envelope of the largest absolute row sum (the induced infinity norm).
    pub fn poly_row_sum(&self, poly: &MatPoly<f64>) -> PowerEnvelope {
        self.entry_envelopes(poly)
            .iter()
            .map(|row| row.iter().fold(PowerEnvelope::zero(self.x0), |acc, e| acc.add(e)))
            .fold(PowerEnvelope::zero(self.x0), |acc, e| acc.max(&e))
    }

    pub fn atom_poly(&mut self, a: &Atom) -> Result<MatPoly<f64>> {
        self.poly.atom(a)
    }

    pub fn expr_poly(&mut self, e: &NCExpr) -> Result<MatPoly<f64>> {
        self.poly.eval(e)
    }

    /// Max-entry envelope value of `P_m` at `X`.
    pub fn p_norm(&mut self, m: u32) -> Result<f64> {
        let p = self.atom_poly(&Atom::P(m))?;
        Ok(self.poly_max_entry(&p).sup())
    }

    fn p_row_norm(&mut self, m: u32) -> Result<f64> {
        let p = self.atom_poly(&Atom::P(m))?;
        Ok(self.poly_row_sum(&p).sup())
    }

    /// `(max-entry, row-sum)` constant bounds for `(I + P_m)^{-1}` or `I + P_m`.
    fn scalar_atom_bounds(&mut self, a: &Atom) -> Result<(f64, f64)> {
        match a {
            Atom::Inv(m) => {
                let b = self.p_norm(*m)?;
                if b >= 1.0 / NF {
                    return Err(Error::InvalidBound(format!("||P_{m}|| bound {b:.3e} >= 1/4 at X = {}", self.x0)));
                }
                let beta = self.p_row_norm(*m)?.min((NF - 1.0) * b);
                Ok((1.0 + b / (1.0 - NF * b), 1.0 / (1.0 - beta)))
            }
            Atom::IdP(m) => {
                let b = self.p_norm(*m)?;
                let beta = self.p_row_norm(*m)?.min((NF - 1.0) * b);
                Ok((b.max(1.0), 1.0 + beta))
            }
            _ => unreachable!("only inverse and identity-plus atoms are scalar-bounded"),
        }
    }

    /// Max-entry envelope of an expression on `[X, inf)`.
    ///
    /// Terms are grouped by their leading and trailing runs of `(I+P_m)^{-1}`
    /// and `I+P_m` factors; the polynomial middles of a group are summed
    /// exactly before bounding. Each group takes the tighter of the
    /// max-entry chain (`||AB|| <= n ||A|| ||B||`) and the row-sum chain.
    pub fn bound_expr_norm(&mut self, e: &NCExpr) -> Result<PowerEnvelope> {
        let mut groups: BTreeMap<(Vec<Atom>, Vec<Atom>), NCExpr> = BTreeMap::new();
        let mut loose = PowerEnvelope::zero(self.x0);
        for (factors, coeff) in e.terms() {
            let lead = factors.iter().take_while(|a| is_scalar_atom(a)).count();
            let trail = factors[lead..].iter().rev().take_while(|a| is_scalar_atom(a)).count();
            let middle = &factors[lead..factors.len() - trail];
            if middle.iter().any(|a| is_scalar_atom(a) || matches!(a, Atom::E { .. })) {
                loose = loose.add(&self.bound_term(factors)?.scale(coeff as f64));
                continue;
            }
            let key = (factors[..lead].to_vec(), factors[factors.len() - trail..].to_vec());
            groups.entry(key).or_default().push(coeff, middle.to_vec());
        }
        let mut total = loose;
        for ((lead, trail), middle) in groups {
            total = total.add(&self.bound_group(&lead, &middle, &trail)?);
        }
        Ok(total)
    }

    fn bound_group(&mut self, lead: &[Atom], middle: &NCExpr, trail: &[Atom]) -> Result<PowerEnvelope> {
        let w = self.expr_poly(middle)?;
        let mut max_chain = self.poly_max_entry(&w);
        let mut row_chain = self.poly_row_sum(&w);
        let mut pieces = if *middle == NCExpr::one() { 0 } else { 1 };
        for a in lead.iter().chain(trail) {
            let (mx, row) = self.scalar_atom_bounds(a)?;
            max_chain = max_chain.scale(mx);
            row_chain = row_chain.scale(row);
            pieces += 1;
        }
        max_chain = max_chain.scale(NF.powi((pieces - 1).max(0)));
        Ok(max_chain.tighter(&row_chain))
    }

    /// Bound of a single product of atoms, segment by segment.
    fn bound_term(&mut self, factors: &[Atom]) -> Result<PowerEnvelope> {
        let mut max_chain = PowerEnvelope::constant(1.0, self.x0);
        let mut row_chain = PowerEnvelope::constant(1.0, self.x0);
        let mut pieces = 0;
        let mut run: Vec<Atom> = Vec::new();
        let flush = |s: &mut Self, run: &mut Vec<Atom>, mx: &mut PowerEnvelope, row: &mut PowerEnvelope, n: &mut i32| -> Result<()> {
            if run.is_empty() {
                return Ok(());
            }
            let w = s.expr_poly(&NCExpr::product(run.drain(..)))?;
            *mx = mx.mul(&s.poly_max_entry(&w));
            *row = row.mul(&s.poly_row_sum(&w));
            *n += 1;
            Ok(())
        };
        for a in factors {
            match a {
                Atom::Inv(_) | Atom::IdP(_) => {
                    flush(self, &mut run, &mut max_chain, &mut row_chain, &mut pieces)?;
                    let (mx, row) = self.scalar_atom_bounds(a)?;
                    max_chain = max_chain.scale(mx);
                    row_chain = row_chain.scale(row);
                    pieces += 1;
                }
                Atom::E { m, .. } => {
                    flush(self, &mut run, &mut max_chain, &mut row_chain, &mut pieces)?;
                    let def = self.poly.transcript().e(*m).ok_or_else(|| Error::UndefinedAtom(a.to_string()))?.clone();
                    let env = self.bound_expr_norm(&def)?;
                    // a max-entry bound gives a row-sum bound after a factor n
                    max_chain = max_chain.mul(&env);
                    row_chain = row_chain.mul(&env.scale(NF));
                    pieces += 1;
                }
                _ => run.push(a.clone()),
            }
        }
        flush(self, &mut run, &mut max_chain, &mut row_chain, &mut pieces)?;
        max_chain = max_chain.scale(NF.powi((pieces - 1).max(0)));
        Ok(max_chain.tighter(&row_chain))
    }
}

/// Max-entry envelope of `e` on `[X, inf)`.
pub fn bound_expr_norm(e: &NCExpr, transcript: &Transcript, alpha: f64, lambda: C64, x0: f64) -> Result<PowerEnvelope> {
    Bounder::new(alpha, lambda, x0, transcript)?.bound_expr_norm(e)
}

/// Checks the sign conditions of the asymptotic theorem on a log-spaced grid.
pub fn check_dichotomy(
    alpha: f64,
    lambda: C64,
    x0: f64,
    transcript: &Transcript,
    grid: (f64, f64, usize),
) -> Result<DichotomyReport> {
    let big = transcript.depth();
    let (lo, hi, count) = grid;
    let lo = lo.max(x0);
    let count = count.max(2);
    let mut signs: BTreeMap<(usize, usize), (bool, bool)> = BTreeMap::new();
    let omega = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    for s in 0..count {
        let x = lo * (hi / lo).powf(s as f64 / (count - 1) as f64);
        let ctx = make_context(alpha, lambda, x, big as usize + 2)?;
        let q_root = ctx.q_root.value();
        let mut ev = Evaluator::new(JetAlgebra::new(ctx), transcript);
        let delta: CMat<f64> = ev.delta(big - 1)?.value().clone();
        for j in 0..N {
            for k in 0..N {
                if j == k {
                    continue;
                }
                let v = ((omega[j] - omega[k] + delta[(j, j)] - delta[(k, k)]) * q_root).re;
                let tol = 1e-13 * q_root.norm();
                let slot = signs.entry((j + 1, k + 1)).or_insert((false, false));
                if v > tol {
                    slot.0 = true;
                } else if v < -tol {
                    slot.1 = true;
                }
            }
        }
    }
    let pairs: Vec<(usize, usize, bool)> = signs.into_iter().map(|((j, k), (pos, neg))| (j, k, !(pos && neg))).collect();
    let a = 1.0 + alpha / 4.0;
    let integrable = big as f64 * a - alpha / 4.0 > 1.0;
    let passed = integrable && pairs.iter().all(|p| p.2);
    Ok(DichotomyReport { pairs, integrable, grid: (lo, hi, count), passed })
}

/// Certified bound `eps(X)` on the perturbation `eta` of the asymptotic solutions.
pub fn epsilon_of_x(alpha: f64, lambda: C64, x0: f64, transcript: &Transcript) -> Result<EpsilonReport> {
    let big = transcript.depth();
    let mut b = Bounder::new(alpha, lambda, x0, transcript)?;
    let ctx = make_context(alpha, lambda, x0, big as usize + 2)?;
    let mut ev = Evaluator::new(JetAlgebra::new(ctx), transcript);

    let mut p_norms = Vec::new();
    let mut atoms = Vec::new();
    for m in 1..big {
        let bm = b.p_norm(m)?;
        p_norms.push(bm);
        for a in [Atom::P(m), Atom::DP(m), Atom::T(m)] {
            let poly = b.atom_poly(&a)?;
            let envelope = b.poly_max_entry(&poly);
            let realized = ev.atom(&a)?.value().max_abs();
            atoms.push(AtomBound { atom: a.to_string(), envelope, realized });
        }
        for j in transcript.bucket_indices(m) {
            if m == 1 {
                continue;
            }
            let a = Atom::V(j, m);
            let poly = b.atom_poly(&a)?;
            let envelope = b.poly_max_entry(&poly);
            let realized = ev.atom(&a)?.value().max_abs();
            atoms.push(AtomBound { atom: a.to_string(), envelope, realized });
        }
    }
    let p_norms_ok = p_norms.iter().all(|v| *v < 1.0 / NF);
    let base = EpsilonReport {
        alpha,
        lambda: (lambda.re, lambda.im),
        x_large: x0,
        depth: big,
        k: b.k,
        epsilon: None,
        integral: f64::INFINITY,
        remainder: PowerEnvelope::zero(x0),
        atoms,
        p_norms,
        p_norms_ok,
        n_integral_ok: false,
        dichotomy: None,
        valid: false,
    };
    if !p_norms_ok {
        return Ok(base);
    }
    let remainder = b.bound_expr_norm(transcript.remainder())?;
    let integrand = b.q_root_envelope().mul(&remainder);
    let integral = integrand.tail_integral()?;
    let n_integral_ok = NF * integral < 1.0;
    let epsilon = n_integral_ok.then(|| integral / (1.0 - NF * integral));
    Ok(EpsilonReport { epsilon, integral, remainder, n_integral_ok, valid: n_integral_ok, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recur::generate_transcript;
    use crate::realize::make_context;

    #[test]
    fn envelope_algebra() {
        let a = PowerEnvelope::new(2.0, 1.5, 10.0);
        let b = PowerEnvelope::new(3.0, 2.5, 10.0);
        let m = a.mul(&b);
        assert_eq!((m.c, m.e), (6.0, 4.0));
        let s = a.add(&b);
        assert_eq!(s.e, 1.5);
        assert!((s.c - (2.0 + 3.0 * 0.1)).abs() < 1e-15);
        for x in [10.0, 20.0, 1e3] {
            assert!(s.at(x) >= a.at(x) + b.at(x) - 1e-15);
        }
        assert!((a.tail_integral().unwrap() - 2.0 * 10f64.powf(-0.5) / 0.5).abs() < 1e-15);
        assert!(PowerEnvelope::new(1.0, 1.0, 10.0).tail_integral().is_err());
    }

    #[test]
    fn uniform_k() {
        assert!((q_lower_bound(1.0, 10.0).unwrap() - 10.0 / 9.0).abs() < 1e-15);
        assert!((q_lower_bound(1.0, 11.0).unwrap() - 1.1).abs() < 1e-15);
        assert!((q_lower_bound(1.0, 1e12).unwrap() - 1.0).abs() < 1e-11);
        assert!(q_lower_bound(1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_k_is_sound() {
        for lam in [C64::new(-1.0, 0.01), C64::new(-0.5, 2.0), C64::new(0.3, 1.0), C64::new(-0.9, 10.0)] {
            let k = q_lower_bound_for(1.0, lam, 10.0).unwrap();
            for i in 0..2000 {
                let t = 10.0 * (1.0f64 + 0.01 * i as f64).powi(3);
                assert!((lam + t).norm() * k >= t * (1.0 - 1e-14), "{lam} t={t}");
            }
        }
    }

    #[test]
    fn p_envelope_exact_at_lambda_zero() {
        let env = bound_p_derivative(1.0, 10.0, 1.0, 0);
        assert!((env.c - 0.25).abs() < 1e-15 && (env.e - 1.25).abs() < 1e-15);
    }

    #[test]
    fn p_envelopes_dominate_samples() {
        for (alpha, lam) in [(1.0, C64::new(0.0, 1.0)), (0.5, C64::new(-1.0, 0.5)), (4.0 / 3.0, C64::new(10.0, 10.0))] {
            let x0 = 10.0;
            let k = q_lower_bound_for(alpha, lam, x0).unwrap();
            let envs: Vec<_> = (0..5).map(|r| bound_p_derivative(alpha, x0, k, r)).collect();
            assert!((envs[0].c - k.powf(1.25) * alpha / 4.0).abs() < 1e-14);
            assert!((envs[1].e - (2.0 + alpha / 4.0)).abs() < 1e-15);
            for i in 0..200 {
                let x = x0 * 1e4f64.powf(i as f64 / 199.0);
                let ctx = make_context(alpha, lam, x, 5).unwrap();
                for (r, env) in envs.iter().enumerate() {
                    let v = ctx.p.derivative(r).unwrap().norm();
                    assert!(v <= env.at(x) * (1.0 + 1e-12), "alpha={alpha} r={r} x={x}");
                }
            }
        }
    }

    #[test]
    fn inverse_atom_bound_formula() {
        let t = generate_transcript(4).unwrap();
        let lam = C64::new(0.0, 1.0);
        let mut b = Bounder::new(1.0, lam, 10.0, &t).unwrap();
        let p1 = b.p_norm(1).unwrap();
        let inv = bound_expr_norm(&NCExpr::atom(Atom::Inv(1)), &t, 1.0, lam, 10.0).unwrap();
        assert!(inv.sup() <= 1.0 + p1 / (1.0 - 4.0 * p1) + 1e-15);
        assert!(bound_expr_norm(&NCExpr::atom(Atom::Inv(1)), &t, 1.0, lam, 1.01).is_err() || b.p_norm(1).unwrap() < 0.25);
    }

    #[test]
    fn remainder_exponent_is_graded() {
        let t = generate_transcript(6).unwrap();
        let env = bound_expr_norm(t.remainder(), &t, 1.0, C64::new(0.0, 1.0), 10.0).unwrap();
        assert!((env.e - 7.5).abs() < 1e-12);
    }

    #[test]
    fn dichotomy_for_lambda_i() {
        let t = generate_transcript(6).unwrap();
        let r = check_dichotomy(1.0, C64::new(0.0, 1.0), 10.0, &t, (10.0, 1000.0, 40)).unwrap();
        assert!(r.integrable);
        let p23 = r.pairs.iter().find(|p| p.0 == 2 && p.1 == 3).unwrap();
        assert!(p23.2);
        assert!(r.pairs.iter().all(|p| p.0 != p.1));
    }
}
