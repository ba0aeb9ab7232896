//! Symbolic recurrence generator for the repeated diagonalization.
//!
//! Starting from `Z_1' = Q^{1/n}(D_1 + V_1) Z_1`, each level applies
//! `Z_m = (I + P_m) Z_{m+1}`, expands `(I + P_m)^{-1}` as a finite geometric
//! series with an exact remainder, and regroups the result by order into the
//! dominant part `S_{m+1}`, the buckets `V_{j,m+1}` and the remainder `E_{m+1}`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ncalg::{collect_by_order, compress, nc_pow, Atom, NCExpr, Term};

/// Number of series terms `nu` so that `P_m^{nu+1} U` reaches order `max_order`.
///
/// Returns the smallest `nu >= 0` with `m (nu + 1) + order_u >= max_order`.
pub fn nu_for(order_u: u32, m: u32, max_order: u32) -> u32 {
    assert!(m >= 1, "level index starts at 1");
    if order_u >= max_order {
        return 0;
    }
    let gap = max_order - order_u;
    gap.div_ceil(m) - 1
}

/// One operand `U` on which `(I + P_m)^{-1}` acts.
#[derive(Clone, Debug, PartialEq)]
pub struct UOperand {
    pub label: String,
    pub expr: NCExpr,
    pub order: u32,
    /// `None` when `U` is already of remainder order and goes to `E` whole.
    pub nu: Option<u32>,
}

/// The operand list of one level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct USet {
    pub m: u32,
    pub operands: Vec<UOperand>,
}

/// Per-level output of the generator.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub m: u32,
    /// Number of `V` buckets present at this level.
    pub mu: u32,
    pub uset: USet,
}

/// Full set of recurrence definitions for a fixed depth `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    depth: u32,
    s: BTreeMap<u32, NCExpr>,
    v: BTreeMap<(u32, u32), NCExpr>,
    e: BTreeMap<u32, NCExpr>,
    levels: Vec<LevelRecord>,
}

impl Transcript {
    /// The depth `M`: number of transformations plus one, and the order of `E_M`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Definition of `S_m` for `2 <= m <= M - 1`.
    pub fn s(&self, m: u32) -> Option<&NCExpr> {
        self.s.get(&m)
    }

    /// Definition of `V_{j,m}` for `m >= 2`.
    ///
    /// `V_{1,m}` is stored as `S_m - dg S_m`; `V_{1,1}` is primitive and absent.
    pub fn v(&self, j: u32, m: u32) -> Option<&NCExpr> {
        self.v.get(&(j, m))
    }

    /// Remainder `E_m` for `1 <= m <= M` (`E_1 = 0`).
    pub fn e(&self, m: u32) -> Option<&NCExpr> {
        self.e.get(&m)
    }

    /// The final remainder `E_M`.
    pub fn remainder(&self) -> &NCExpr {
        &self.e[&self.depth]
    }

    pub fn levels(&self) -> &[LevelRecord] {
        &self.levels
    }

    /// Bucket indices `j` with a stored `V_{j,m}` (including `j = 1`).
    pub fn bucket_indices(&self, m: u32) -> Vec<u32> {
        if m == 1 {
            return vec![1];
        }
        self.v.keys().filter(|(_, mm)| *mm == m).map(|(j, _)| *j).collect()
    }

    /// `(S_j, definition)` pairs used to compress expressions, ascending in `j`.
    pub fn s_definitions(&self) -> Vec<(Atom, NCExpr)> {
        self.s.iter().map(|(m, e)| (Atom::S(*m), e.clone())).collect()
    }

    /// Indented text dump, one term per line.
    pub fn dump(&self) -> String {
        let mut out = format!("transcript M={}\n", self.depth);
        for lvl in &self.levels {
            out.push_str(&format!("level m={} mu={}\n", lvl.m, lvl.mu));
            for u in &lvl.uset.operands {
                let nu = u.nu.map_or("-".to_string(), |v| v.to_string());
                out.push_str(&format!("  U {} order={} nu={}\n", u.label, u.order, nu));
            }
        }
        for (m, e) in &self.s {
            out.push_str(&format!("S{m}:\n"));
            out.push_str(&e.dump("  "));
        }
        for ((j, m), e) in &self.v {
            out.push_str(&format!("V{j},{m}:\n"));
            out.push_str(&e.dump("  "));
        }
        for (m, e) in &self.e {
            out.push_str(&format!("E{m}: {} terms\n", e.len()));
            out.push_str(&e.dump("  "));
        }
        out
    }
}

/// Runs the recurrence generator to depth `M` (`M >= 2`).
pub fn generate_transcript(depth: u32) -> Result<Transcript> {
    if depth < 2 {
        return Err(Error::InvalidInput(format!("transcript depth M must be >= 2, got {depth}")));
    }
    let big_m = depth;
    let mut s_defs: BTreeMap<u32, NCExpr> = BTreeMap::new();
    let mut v_defs: BTreeMap<(u32, u32), NCExpr> = BTreeMap::new();
    let mut e_defs: BTreeMap<u32, NCExpr> = BTreeMap::new();
    let mut levels = Vec::new();
    e_defs.insert(1, NCExpr::zero());

    for m in 1..big_m {
        let p = NCExpr::atom(Atom::P(m));
        let inv = NCExpr::atom(Atom::Inv(m));

        let mut operands = vec![
            operand(format!("DP{m}"), NCExpr::atom(Atom::DP(m))),
            operand(format!("T{m}"), NCExpr::atom(Atom::T(m))),
            operand(format!("V1,{m} P{m}"), NCExpr::product([Atom::V(1, m), Atom::P(m)])),
        ];
        // V_{j,m} for 2 <= j <= M - m, substituted by their definitions.
        let mut mu = 1;
        for j in 2..=big_m - m {
            if let Some(vjm) = v_defs.get(&(j, m)).filter(|e| !e.is_zero()) {
                mu = j;
                operands.push(operand(format!("V{j},{m}"), vjm.clone()));
                operands.push(operand(format!("V{j},{m} P{m}"), vjm * &p));
            }
        }

        let prev_e = e_defs[&m].clone();
        let mut e_next = &(&inv * &prev_e) * &NCExpr::atom(Atom::IdP(m));
        let mut buckets: BTreeMap<u32, NCExpr> = BTreeMap::new();

        for u in operands.iter_mut() {
            if u.order >= big_m {
                u.nu = None;
                e_next = &e_next + &(&inv * &u.expr);
                continue;
            }
            let nu = nu_for(u.order, m, big_m);
            u.nu = Some(nu);
            let mut series = NCExpr::zero();
            for r in 0..=nu {
                let sign = if r % 2 == 0 { 1 } else { -1 };
                series = &series + &(&nc_pow(&p, r) * &u.expr).scale(sign);
            }
            let split = collect_by_order(&series, big_m);
            debug_assert!(split.remainder.is_zero());
            for (order, part) in split.buckets {
                let slot = buckets.entry(order - m).or_default();
                *slot = &*slot + &part;
            }
            let sign = if (nu + 1) % 2 == 0 { 1 } else { -1 };
            let rem = &(&inv * &nc_pow(&p, nu + 1)) * &u.expr;
            e_next = &e_next + &rem.scale(sign);
        }

        let next = m + 1;
        for (j, part) in buckets {
            if j == 1 {
                let defs: Vec<(Atom, NCExpr)> = s_defs.iter().map(|(k, e)| (Atom::S(*k), e.clone())).collect();
                let s_next = compress(&part, &defs);
                s_defs.insert(next, s_next.clone());
                let v1 = &NCExpr::atom(Atom::S(next)) - &NCExpr::atom(Atom::Dg(Box::new(NCExpr::atom(Atom::S(next)))));
                v_defs.insert((1, next), v1);
            } else {
                v_defs.insert((j, next), part);
            }
        }
        // Buckets store expanded forms; compress only after S_{m+1} is known.
        let defs: Vec<(Atom, NCExpr)> = s_defs.iter().map(|(k, e)| (Atom::S(*k), e.clone())).collect();
        for j in 2..=big_m {
            if let Some(v) = v_defs.get_mut(&(j, next)) {
                *v = compress(v, &defs);
            }
        }
        e_defs.insert(next, compress(&e_next, &defs));

        levels.push(LevelRecord { m, mu, uset: USet { m, operands } });
    }

    Ok(Transcript { depth: big_m, s: s_defs, v: v_defs, e: e_defs, levels })
}

fn operand(label: String, expr: NCExpr) -> UOperand {
    let order = expr.min_order().unwrap_or(0);
    UOperand { label, expr, order, nu: None }
}

/// Hand transcriptions of the printed reference expressions.
///
/// Single-index `V_k` in the printed displays denotes `V_{1,k}`. In the
/// remainder `E_5`, the second and third groups use `S_3` and `S_4` where the
/// printed display shows `S_2`; with `S_2` those groups would contain terms of
/// order 4, below the remainder order 5.
pub fn reference_expressions() -> BTreeMap<&'static str, NCExpr> {
    use Atom::*;
    let t = |c: i64, f: Vec<Atom>| Term::new(c, f);
    let mut out = BTreeMap::new();

    out.insert("S2", NCExpr::from_terms([t(1, vec![DP(1)]), t(1, vec![V(1, 1), P(1)])]));
    out.insert("S3", NCExpr::from_terms([t(1, vec![DP(2)]), t(1, vec![T(1)]), t(-1, vec![P(1), S(2)])]));
    out.insert(
        "S4",
        NCExpr::from_terms([
            t(1, vec![DP(3)]),
            t(1, vec![T(2)]),
            t(-1, vec![P(1), T(1)]),
            t(1, vec![V(1, 2), P(2)]),
            t(1, vec![P(1), P(1), S(2)]),
        ]),
    );

    // S6 = DP5 + T4 + (-P1 T1 + P1^2 S2) P2 - P2 (-P1 T1 + V2 P2 + P1^2 S2 + T2)
    //      - P1^3 T1 + P1^4 S2 + V3 P3
    let e = |f: Vec<Atom>| NCExpr::product(f);
    let inner_left = &e(vec![P(1), P(1), S(2)]) - &e(vec![P(1), T(1)]);
    let inner_right = &(&(&e(vec![V(1, 2), P(2)]) + &inner_left) + &e(vec![T(2)])) + &NCExpr::zero();
    let s6 = [
        e(vec![DP(5)]),
        e(vec![T(4)]),
        &inner_left * &e(vec![P(2)]),
        -(&e(vec![P(2)]) * &inner_right),
        -e(vec![P(1), P(1), P(1), T(1)]),
        e(vec![P(1), P(1), P(1), P(1), S(2)]),
        e(vec![V(1, 3), P(3)]),
    ]
    .into_iter()
    .fold(NCExpr::zero(), |acc, x| &acc + &x);
    out.insert("S6", s6);

    let prod = |v: Vec<NCExpr>| v.into_iter().fold(NCExpr::one(), |acc, x| &acc * &x);
    let a = |m| e(vec![Inv(m)]);
    let ip = |m| e(vec![IdP(m)]);
    let g1 = &e(vec![P(1), P(1), T(1)]) - &e(vec![P(1), P(1), P(1), S(2)]);
    let g2_left = [
        -e(vec![P(1), T(1)]),
        e(vec![P(1), P(1), S(2)]),
        -e(vec![P(1), S(2)]),
        e(vec![T(1)]),
    ]
    .into_iter()
    .fold(NCExpr::zero(), |acc, x| &acc + &x);
    let g2_right = [
        e(vec![S(3)]),
        -e(vec![P(1), T(1)]),
        e(vec![P(1), P(1), S(2)]),
        e(vec![T(2)]),
        e(vec![V(1, 2), P(2)]),
    ]
    .into_iter()
    .fold(NCExpr::zero(), |acc, x| &acc + &x);
    let g2 = &(&g2_left * &e(vec![P(2)])) - &(&e(vec![P(2)]) * &g2_right);
    let g3_paren = [-e(vec![P(1), T(1)]), e(vec![P(1), P(1), S(2)]), e(vec![V(1, 2), P(2)]), e(vec![T(2)])]
        .into_iter()
        .fold(NCExpr::zero(), |acc, x| &acc + &x);
    let g3 = [e(vec![T(3)]), -e(vec![P(3), S(4)]), e(vec![V(1, 3), P(3)]), &g3_paren * &e(vec![P(3)])]
        .into_iter()
        .fold(NCExpr::zero(), |acc, x| &acc + &x);
    let g4 = [e(vec![DP(4)]), e(vec![T(4)]), e(vec![V(1, 4), P(4)])].into_iter().fold(NCExpr::zero(), |acc, x| &acc + &x);
    let e5 = [
        prod(vec![a(4), a(3), a(2), a(1), g1, ip(2), ip(3), ip(4)]),
        prod(vec![a(4), a(3), a(2), g2, ip(3), ip(4)]),
        prod(vec![a(4), a(3), g3, ip(4)]),
        prod(vec![a(4), g4]),
    ]
    .into_iter()
    .fold(NCExpr::zero(), |acc, x| &acc + &x);
    out.insert("E5", e5);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_examples() {
        assert_eq!(nu_for(3, 1, 5), 1);
        assert_eq!(nu_for(2, 1, 5), 2);
        for m in 1..6 {
            assert_eq!(nu_for(6, m, 7), 0);
        }
        // smallest nu with m(nu+1) + order >= M
        for m in 1..5u32 {
            for o in 1..8u32 {
                for big in (o + 1)..10u32 {
                    let nu = nu_for(o, m, big);
                    assert!(m * (nu + 1) + o >= big);
                    assert!(nu == 0 || m * nu + o < big);
                }
            }
        }
    }

    #[test]
    fn rejects_small_depth() {
        assert!(generate_transcript(1).is_err());
        let t = generate_transcript(2).unwrap();
        assert!(t.s(2).is_none());
        assert_eq!(t.levels().len(), 1);
    }

    #[test]
    fn depth_four_matches_printed_s3() {
        let t = generate_transcript(4).unwrap();
        let r = reference_expressions();
        assert_eq!(t.s(2).unwrap(), &r["S2"]);
        assert_eq!(t.s(3).unwrap(), &r["S3"]);
        assert!(t.s(4).is_none());
    }

    #[test]
    fn depth_five_matches_printed_s4() {
        let t = generate_transcript(5).unwrap();
        let r = reference_expressions();
        assert_eq!(t.s(4).unwrap(), &r["S4"]);
    }

    #[test]
    fn depth_seven_matches_printed_s6() {
        let t = generate_transcript(7).unwrap();
        let r = reference_expressions();
        assert_eq!(t.s(6).unwrap(), &r["S6"]);
    }

    #[test]
    fn e5_remainder_terms_match_printed_signs() {
        let t = generate_transcript(5).unwrap();
        let e5 = t.remainder();
        assert!(e5.min_order().unwrap() >= 5);
        let first_group_t1 = vec![
            Atom::Inv(4), Atom::Inv(3), Atom::Inv(2), Atom::Inv(1), Atom::P(1), Atom::P(1), Atom::T(1),
            Atom::IdP(2), Atom::IdP(3), Atom::IdP(4),
        ];
        assert_eq!(e5.coeff_of(&first_group_t1), 1);
        let first_group_s2 = vec![
            Atom::Inv(4), Atom::Inv(3), Atom::Inv(2), Atom::Inv(1), Atom::P(1), Atom::P(1), Atom::P(1), Atom::S(2),
            Atom::IdP(2), Atom::IdP(3), Atom::IdP(4),
        ];
        assert_eq!(e5.coeff_of(&first_group_s2), -1);
    }

    #[test]
    fn bucket_grading_and_mu() {
        let big = 7;
        let t = generate_transcript(big).unwrap();
        for lvl in t.levels() {
            if lvl.m >= 2 {
                assert!(lvl.mu <= big - lvl.m);
            }
        }
        for m in 2..big {
            for j in t.bucket_indices(m) {
                let v = t.v(j, m).unwrap();
                if j == 1 {
                    continue;
                }
                assert_eq!(v.uniform_order(), Some(m + j - 1), "V{j},{m}");
            }
            if let Some(s) = t.s(m) {
                assert_eq!(s.uniform_order(), Some(m));
            }
        }
        for m in 2..=big {
            if let Some(e) = t.e(m) {
                if !e.is_zero() {
                    assert!(e.min_order().unwrap() >= big, "E{m}");
                }
            }
        }
    }

    #[test]
    fn mu_is_depth_minus_level() {
        let big = 6;
        let t = generate_transcript(big).unwrap();
        for m in 2..big {
            let max_j = t.bucket_indices(m).into_iter().max().unwrap();
            assert_eq!(max_j, big - m, "level {m}");
        }
    }

    #[test]
    fn dump_contains_orders() {
        let t = generate_transcript(4).unwrap();
        let d = t.dump();
        assert!(d.contains("S3:"));
        assert!(d.contains("[P1 S2] order=3"));
    }
}
