use lgdiag::ncalg::{Atom, NCExpr};
use lgdiag::realize::{make_context, Evaluator, JetAlgebra, LevelAlgebra};
use lgdiag::recur::reference_expressions;
use lgdiag::{generate_transcript, CMat64, MatrixJet64, Transcript, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `F_m = D_1 + Delta_m + sum_j V_{j,m} + E_m`, with `F_M = D_1 + Delta_{M-1} + E_M`.
fn level_matrix(ev: &mut Evaluator<JetAlgebra<f64>>, t: &Transcript, m: u32) -> MatrixJet64 {
    let big = t.depth();
    let alg = ev.algebra().clone();
    let mut f = alg.d1();
    let delta_level = if m == big { big - 1 } else { m };
    f = alg.add(&f, &ev.delta(delta_level).unwrap());
    if m < big {
        for j in t.bucket_indices(m) {
            f = alg.add(&f, &ev.atom(&Atom::V(j, m)).unwrap());
        }
    }
    if m > 1 {
        f = alg.add(&f, &ev.eval(t.e(m).unwrap()).unwrap());
    }
    f
}

fn rel_err(a: &CMat64, b: &CMat64) -> f64 {
    a.max_abs_diff(b) / b.max_abs()
}

#[test]
fn exact_transformation_identity() {
    let big = 6;
    let t = generate_transcript(big).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for alpha in [0.5, 1.0, 4.0 / 3.0] {
        for _ in 0..4 {
            let x = rng.gen_range(5.0..100.0);
            let lam = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.1..2.0));
            let ctx = make_context(alpha, lam, x, big as usize + 2).unwrap();
            let mut ev = Evaluator::new(JetAlgebra::new(ctx), &t);
            for m in 1..big {
                let fm = level_matrix(&mut ev, &t, m);
                let fn1 = level_matrix(&mut ev, &t, m + 1);
                let inv = ev.atom(&Atom::Inv(m)).unwrap();
                let idp = ev.atom(&Atom::IdP(m)).unwrap();
                let dp = ev.atom(&Atom::DP(m)).unwrap();
                let rhs = &inv * &(&(&fm * &idp) + &dp);
                let err = rel_err(fn1.value(), rhs.value());
                assert!(err < 1e-10, "alpha={alpha} x={x} m={m}: {err:e}");
            }
        }
    }
}

#[test]
fn generated_e5_matches_reference() {
    let t = generate_transcript(5).unwrap();
    let reference = reference_expressions();
    let lam = C64::new(0.3, 1.1);
    let ctx = make_context(1.0, lam, 7.5, 7).unwrap();
    let mut ev = Evaluator::new(JetAlgebra::new(ctx), &t);
    let gen = ev.eval(t.remainder()).unwrap();
    let refd = ev.eval(&reference["E5"]).unwrap();
    assert!(rel_err(gen.value(), refd.value()) < 1e-10);
    let _ = NCExpr::zero();
}
