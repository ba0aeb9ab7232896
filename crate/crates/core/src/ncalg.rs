//! Graded non-commutative term algebra.
//!
//! Expressions are integer combinations of ordered products of symbolic
//! [`Atom`]s. Every atom carries an exact integer order counting multiples of
//! the decay quantum `a = 1 + alpha/n`; the order of a product is the sum of
//! the orders of its factors.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Symbolic matrix-valued building block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `D_1 = D + (n-1)/2 p I`.
    D1,
    /// Corrector `P_m`, order `m`.
    P(u32),
    /// Composite `-Q^{-1/n} P'_m`, order `m + 1`.
    DP(u32),
    /// Perturbation bucket `V_{j,m}`, order `m + j - 1`.
    V(u32, u32),
    /// `T_m = Delta_m P_m - P_m Delta_m`, order `m + 2`.
    T(u32),
    /// Dominant group `S_m`, order `m`.
    S(u32),
    /// Remainder `E_m`; `floor` is the accuracy order it was generated for.
    E { m: u32, floor: u32 },
    /// `(I + P_m)^{-1}`, order 0.
    Inv(u32),
    /// `I + P_m`, order 0.
    IdP(u32),
    /// Diagonal part of a sub-expression.
    Dg(Box<NCExpr>),
}

impl Atom {
    pub fn order(&self) -> u32 {
        match self {
            Atom::D1 | Atom::Inv(_) | Atom::IdP(_) => 0,
            Atom::P(m) | Atom::S(m) => *m,
            Atom::DP(m) => m + 1,
            Atom::V(j, m) => m + j - 1,
            Atom::T(m) => m + 2,
            Atom::E { floor, .. } => *floor,
            Atom::Dg(e) => e.min_order().unwrap_or(0),
        }
    }

    /// True for atoms whose matrix value is a polynomial in `Q^{1/n}`, `p` and
    /// derivatives of `p` (everything except the inverse and remainder atoms).
    pub fn is_polynomial(&self) -> bool {
        match self {
            Atom::Inv(_) | Atom::E { .. } => false,
            Atom::Dg(e) => e.terms.keys().all(|fs| fs.iter().all(Atom::is_polynomial)),
            _ => true,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::D1 => write!(f, "D1"),
            Atom::P(m) => write!(f, "P{m}"),
            Atom::DP(m) => write!(f, "DP{m}"),
            Atom::V(j, m) => write!(f, "V{j},{m}"),
            Atom::T(m) => write!(f, "T{m}"),
            Atom::S(m) => write!(f, "S{m}"),
            Atom::E { m, .. } => write!(f, "E{m}"),
            Atom::Inv(m) => write!(f, "A{m}"),
            Atom::IdP(m) => write!(f, "(I+P{m})"),
            Atom::Dg(e) => write!(f, "dg({})", e.inline()),
        }
    }
}

/// A single signed product of atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: i64,
    pub factors: Vec<Atom>,
}

impl Term {
    pub fn new(coeff: i64, factors: Vec<Atom>) -> Self {
        Term { coeff, factors }
    }

    pub fn order(&self) -> u32 {
        factors_order(&self.factors)
    }
}

pub fn factors_order(factors: &[Atom]) -> u32 {
    factors.iter().map(Atom::order).sum()
}

/// Normalized integer combination of factor sequences.
///
/// Identical factor sequences are merged and zero coefficients dropped on
/// every operation, so structural equality is expression equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NCExpr {
    terms: BTreeMap<Vec<Atom>, i64>,
}

impl NCExpr {
    pub fn zero() -> Self {
        NCExpr::default()
    }

    /// The multiplicative identity (empty product).
    pub fn one() -> Self {
        Self::from_term(1, vec![])
    }

    pub fn atom(a: Atom) -> Self {
        Self::from_term(1, vec![a])
    }

    pub fn from_term(coeff: i64, factors: Vec<Atom>) -> Self {
        let mut e = NCExpr::zero();
        e.push(coeff, factors);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut e = NCExpr::zero();
        for t in terms {
            e.push(t.coeff, t.factors);
        }
        e
    }

    /// Product of atoms with coefficient one.
    pub fn product(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Self::from_term(1, atoms.into_iter().collect())
    }

    pub fn push(&mut self, coeff: i64, factors: Vec<Atom>) {
        if coeff == 0 {
            return;
        }
        match self.terms.entry(factors) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Atom], i64)> + '_ {
        self.terms.iter().map(|(k, c)| (k.as_slice(), *c))
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms.iter().map(|(k, c)| Term::new(*c, k.clone())).collect()
    }

    pub fn coeff_of(&self, factors: &[Atom]) -> i64 {
        self.terms.get(factors).copied().unwrap_or(0)
    }

    pub fn min_order(&self) -> Option<u32> {
        self.terms.keys().map(|k| factors_order(k)).min()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.terms.keys().map(|k| factors_order(k)).max()
    }

    /// `Some(k)` when every term has order `k`.
    pub fn uniform_order(&self) -> Option<u32> {
        let lo = self.min_order()?;
        (self.max_order() == Some(lo)).then_some(lo)
    }

    pub fn scale(&self, k: i64) -> NCExpr {
        let mut out = NCExpr::zero();
        for (f, c) in self.terms() {
            out.push(c * k, f.to_vec());
        }
        out
    }

    /// Number of atom occurrences across all terms.
    pub fn atom_count(&self) -> usize {
        self.terms.keys().map(Vec::len).sum()
    }

    /// Every distinct atom appearing at top level.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.terms.keys().flat_map(|k| k.iter().cloned()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Single-line rendering, e.g. `DP1 + V1,1 P1`.
    pub fn inline(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (f, c)) in self.terms().enumerate() {
            match (i, c < 0) {
                (0, false) => {}
                (0, true) => s.push('-'),
                (_, false) => s.push_str(" + "),
                (_, true) => s.push_str(" - "),
            }
            let body: Vec<String> = f.iter().map(|a| a.to_string()).collect();
            if c.abs() != 1 || f.is_empty() {
                s.push_str(&c.abs().to_string());
                if !f.is_empty() {
                    s.push(' ');
                }
            }
            s.push_str(&body.join(" "));
        }
        s
    }

    /// One term per line: `sign coefficient [atom atom ...] order=k`.
    pub fn dump(&self, indent: &str) -> String {
        let mut out = String::new();
        for (f, c) in self.terms() {
            let body: Vec<String> = f.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!(
                "{indent}{} {} [{}] order={}\n",
                if c < 0 { '-' } else { '+' },
                c.abs(),
                body.join(" "),
                factors_order(f)
            ));
        }
        out
    }
}

/// Non-commutative product: concatenation of factor sequences.
pub fn nc_mul(lhs: &NCExpr, rhs: &NCExpr) -> NCExpr {
    let mut out = NCExpr::zero();
    for (fa, ca) in lhs.terms() {
        for (fb, cb) in rhs.terms() {
            let mut f = Vec::with_capacity(fa.len() + fb.len());
            f.extend_from_slice(fa);
            f.extend_from_slice(fb);
            out.push(ca * cb, f);
        }
    }
    out
}

pub fn nc_add(lhs: &NCExpr, rhs: &NCExpr) -> NCExpr {
    let mut out = lhs.clone();
    for (f, c) in rhs.terms() {
        out.push(c, f.to_vec());
    }
    out
}

/// Terms split by exact order, with everything of order `>= max_order`
/// collected separately.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderBuckets {
    pub buckets: BTreeMap<u32, NCExpr>,
    pub remainder: NCExpr,
}

pub fn collect_by_order(e: &NCExpr, max_order: u32) -> OrderBuckets {
    let mut out = OrderBuckets::default();
    for (f, c) in e.terms() {
        let k = factors_order(f);
        let slot = if k < max_order { out.buckets.entry(k).or_default() } else { &mut out.remainder };
        slot.push(c, f.to_vec());
    }
    out
}

/// Power `x^r` of an expression (`r = 0` gives the identity).
pub fn nc_pow(e: &NCExpr, r: u32) -> NCExpr {
    (0..r).fold(NCExpr::one(), |acc, _| nc_mul(&acc, e))
}

/// Greedily folds occurrences of `L . def . R` back into `L . name . R`.
///
/// A fold is applied only when every term of `def`, sandwiched by the same
/// `L`, `R` and scaled by the same integer, is present with exactly that
/// coefficient, so each fold strictly reduces the term count. Definitions are
/// tried in the given order and the pass repeats until nothing folds.
pub fn compress(e: &NCExpr, defs: &[(Atom, NCExpr)]) -> NCExpr {
    let mut cur = e.clone();
    'outer: loop {
        for (name, def) in defs {
            if let Some(next) = fold_once(&cur, name, def) {
                cur = next;
                continue 'outer;
            }
        }
        return cur;
    }
}

fn fold_once(e: &NCExpr, name: &Atom, def: &NCExpr) -> Option<NCExpr> {
    if def.len() < 2 {
        return None;
    }
    let def_terms = def.to_terms();
    // Anchor on the longest definition term for fewer false starts.
    let anchor = def_terms.iter().max_by_key(|t| t.factors.len()).unwrap();
    let alen = anchor.factors.len();
    for (fs, c) in e.terms() {
        if fs.len() < alen || c % anchor.coeff != 0 {
            continue;
        }
        let k = c / anchor.coeff;
        for i in 0..=fs.len() - alen {
            if fs[i..i + alen] != anchor.factors[..] {
                continue;
            }
            let (left, right) = (&fs[..i], &fs[i + alen..]);
            let sandwich = |inner: &[Atom]| {
                let mut v = Vec::with_capacity(left.len() + inner.len() + right.len());
                v.extend_from_slice(left);
                v.extend_from_slice(inner);
                v.extend_from_slice(right);
                v
            };
            let all_present = def_terms.iter().all(|t| e.coeff_of(&sandwich(&t.factors)) == k * t.coeff);
            if !all_present {
                continue;
            }
            let mut out = e.clone();
            for t in &def_terms {
                out.push(-k * t.coeff, sandwich(&t.factors));
            }
            out.push(k, sandwich(std::slice::from_ref(name)));
            return Some(out);
        }
    }
    None
}

impl Add for &NCExpr {
    type Output = NCExpr;
    fn add(self, rhs: &NCExpr) -> NCExpr {
        nc_add(self, rhs)
    }
}

impl Sub for &NCExpr {
    type Output = NCExpr;
    fn sub(self, rhs: &NCExpr) -> NCExpr {
        nc_add(self, &rhs.scale(-1))
    }
}

impl Mul for &NCExpr {
    type Output = NCExpr;
    fn mul(self, rhs: &NCExpr) -> NCExpr {
        nc_mul(self, rhs)
    }
}

impl Neg for &NCExpr {
    type Output = NCExpr;
    fn neg(self) -> NCExpr {
        self.scale(-1)
    }
}

impl Add for NCExpr {
    type Output = NCExpr;
    fn add(self, rhs: NCExpr) -> NCExpr {
        nc_add(&self, &rhs)
    }
}

impl Sub for NCExpr {
    type Output = NCExpr;
    fn sub(self, rhs: NCExpr) -> NCExpr {
        &self - &rhs
    }
}

impl Mul for NCExpr {
    type Output = NCExpr;
    fn mul(self, rhs: NCExpr) -> NCExpr {
        nc_mul(&self, &rhs)
    }
}

impl Neg for NCExpr {
    type Output = NCExpr;
    fn neg(self) -> NCExpr {
        self.scale(-1)
    }
}

impl From<Atom> for NCExpr {
    fn from(a: Atom) -> Self {
        NCExpr::atom(a)
    }
}

impl fmt::Display for NCExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.inline())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(x: Atom) -> NCExpr {
        NCExpr::atom(x)
    }

    #[test]
    fn product_is_graded() {
        let e = &a(Atom::P(1)) * &a(Atom::S(2));
        let terms = e.to_terms();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].factors, vec![Atom::P(1), Atom::S(2)]);
        assert_eq!(terms[0].order(), 3);
    }

    #[test]
    fn cancellation_gives_empty() {
        let x = &a(Atom::T(1)) + &a(Atom::P(2));
        let diff = &x - &x;
        assert!((&diff * &a(Atom::S(2))).is_zero());
    }

    #[test]
    fn additive_identity_and_inverse() {
        let e = &a(Atom::DP(1)) + &(&a(Atom::V(1, 1)) * &a(Atom::P(1)));
        assert_eq!(&e + &NCExpr::zero(), e);
        assert!((&e + &e.scale(-1)).is_zero());
    }

    #[test]
    fn s2_from_primitives() {
        // -Q^{-1/n}P'_1 + V_1 P_1
        let s2 = nc_add(&a(Atom::DP(1)), &nc_mul(&a(Atom::V(1, 1)), &a(Atom::P(1))));
        let expected = NCExpr::from_terms([Term::new(1, vec![Atom::DP(1)]), Term::new(1, vec![Atom::V(1, 1), Atom::P(1)])]);
        assert_eq!(s2, expected);
        assert_eq!(s2.uniform_order(), Some(2));
    }

    #[test]
    fn uniform_order_three_bucket() {
        let e = &a(Atom::T(1)) - &(&a(Atom::P(1)) * &a(Atom::S(2)));
        assert_eq!(e.len(), 2);
        assert_eq!(e.uniform_order(), Some(3));
    }

    #[test]
    fn expansion_of_inverse_collects_by_order() {
        // (I+P1)^{-1} S2 = S2 - P1 S2 + P1^2 S2 - A1 P1^3 S2
        let p = a(Atom::P(1));
        let s = a(Atom::S(2));
        let mut e = NCExpr::zero();
        for r in 0..=2u32 {
            let sign = if r % 2 == 0 { 1 } else { -1 };
            e = &e + &(&nc_pow(&p, r) * &s).scale(sign);
        }
        e = &e - &(&(&a(Atom::Inv(1)) * &nc_pow(&p, 3)) * &s);
        let b = collect_by_order(&e, 5);
        assert_eq!(b.buckets.len(), 3);
        assert_eq!(b.buckets[&2], s);
        assert_eq!(b.buckets[&3], (&p * &s).scale(-1));
        assert_eq!(b.buckets[&4], &(&p * &p) * &s);
        assert_eq!(b.remainder, NCExpr::from_term(-1, vec![Atom::Inv(1), Atom::P(1), Atom::P(1), Atom::P(1), Atom::S(2)]));
    }

    #[test]
    fn boundary_and_empty_collect() {
        let t = NCExpr::product([Atom::P(2), Atom::S(3)]);
        let b = collect_by_order(&t, 5);
        assert!(b.buckets.is_empty());
        assert_eq!(b.remainder, t);
        let b = collect_by_order(&NCExpr::zero(), 5);
        assert!(b.buckets.is_empty() && b.remainder.is_zero());
    }

    #[test]
    fn zero_order_atoms_keep_position() {
        let e = NCExpr::product([Atom::Inv(1), Atom::P(1), Atom::IdP(2)]);
        let f = NCExpr::product([Atom::P(1), Atom::Inv(1), Atom::IdP(2)]);
        assert_ne!(e, f);
        assert_eq!(e.min_order(), Some(1));
    }

    #[test]
    fn compress_folds_sandwiched_definition() {
        let s2 = &a(Atom::DP(1)) + &(&a(Atom::V(1, 1)) * &a(Atom::P(1)));
        let p = a(Atom::P(1));
        let e = &(&(&p * &s2).scale(-1) + &a(Atom::T(1))) + &NCExpr::zero();
        let c = compress(&e, &[(Atom::S(2), s2)]);
        let expected = &a(Atom::T(1)) - &NCExpr::product([Atom::P(1), Atom::S(2)]);
        assert_eq!(c, expected);
    }

    #[test]
    fn compress_ignores_partial_matches() {
        let s2 = &a(Atom::DP(1)) + &(&a(Atom::V(1, 1)) * &a(Atom::P(1)));
        let e = NCExpr::product([Atom::P(1), Atom::DP(1)]);
        assert_eq!(compress(&e, &[(Atom::S(2), s2)]), e);
    }

    #[test]
    fn dump_format() {
        let e = NCExpr::from_term(-2, vec![Atom::P(1), Atom::S(2)]);
        assert_eq!(e.dump("  "), "  - 2 [P1 S2] order=3\n");
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        prop_oneof![
            (1u32..4).prop_map(Atom::P),
            (1u32..4).prop_map(Atom::DP),
            (1u32..4).prop_map(Atom::T),
            (2u32..5).prop_map(Atom::S),
            (1u32..4).prop_map(Atom::Inv),
            (1u32..3, 1u32..4).prop_map(|(j, m)| Atom::V(j, m)),
        ]
    }

    fn arb_expr() -> impl Strategy<Value = NCExpr> {
        prop::collection::vec((-3i64..4, prop::collection::vec(arb_atom(), 0..4)), 0..5)
            .prop_map(|ts| NCExpr::from_terms(ts.into_iter().map(|(c, f)| Term::new(c, f))))
    }

    proptest! {
        #[test]
        fn mul_is_associative(x in arb_expr(), y in arb_expr(), z in arb_expr()) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        }

        #[test]
        fn mul_distributes(x in arb_expr(), y in arb_expr(), z in arb_expr()) {
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&(&y + &z) * &x, &(&y * &x) + &(&z * &x));
        }

        #[test]
        fn grading_is_additive(x in prop::collection::vec(arb_atom(), 1..4), y in prop::collection::vec(arb_atom(), 1..4)) {
            let ex = NCExpr::product(x.clone());
            let ey = NCExpr::product(y.clone());
            let prod = &ex * &ey;
            prop_assert_eq!(prod.min_order().unwrap(), factors_order(&x) + factors_order(&y));
        }

        #[test]
        fn normalization_is_canonical(x in arb_expr()) {
            let rebuilt = NCExpr::from_terms(x.to_terms());
            prop_assert_eq!(&rebuilt, &x);
            prop_assert!(x.terms().all(|(_, c)| c != 0));
        }
    }
}
