//! Acceptance report: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Runs without the libtest harness so the report prints in order; the
//! process exits nonzero when any gating criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use lgdiag::airy::{airy_frame_contour, airy_m_matrix, AiryFrame};
use lgdiag::asymsol::{solution_frame, SolutionFrame};
use lgdiag::bounds::epsilon_of_x;
use lgdiag::pipeline::{component_counts, grading_fits, matrix_sig_figs, rescale_frame, run_m_matrix_with, RunConfig};
use lgdiag::realize::{check_levels, make_context, Evaluator, JetAlgebra};
use lgdiag::recur::reference_expressions;
use lgdiag::riccati::{integrate_linear_oracle, integrate_riccati, m_from_frame, m_from_riccati, m_matrix};
use lgdiag::{generate_transcript, CMat, CMat64, Transcript, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Row = ((f64, f64), [(f64, f64); 3]);

/// `lambda` and reference `(m11, m12, m22)` at `alpha = 1`.
const ALPHA_ONE: [Row; 5] = [
    ((0.0, 1.0), [(-0.1844321489, 1.8220405579), (-0.6613801122, 1.1030735970), (-1.4291142225, 0.8401392698)]),
    ((0.5, 1.0), [(0.1935073882, 2.0560526848), (-0.5871452689, 1.2561461926), (-1.4407042265, 0.9327853918)]),
    ((10.0, 10.0), [(2.0868480206, 10.2971620560), (-1.4532939196, 3.5441000462), (-2.3046081066, 1.5476453304)]),
    ((1.0, 0.001), [(1.0726006031, 1.6053582430), (-0.2162801623, 1.3155398369), (-1.2967267036, 1.0783087015)]),
    ((0.0, 0.01), [(0.3271814883, 1.0330723524), (-0.3127440214, 0.9515559077), (-1.2149009705, 0.8802024126)]),
];

/// Reference values at `alpha = 1/2`.
const ALPHA_HALF: [Row; 5] = [
    ((0.0, 1.0), [(0.0091688652, 1.8079411983), (-0.5696548223, 1.1018460989), (-1.3599216938, 0.8523176312)]),
    ((0.5, 1.0), [(0.3899112046, 2.0596635342), (-0.4997293651, 1.2700277567), (-1.3820117712, 0.9563996792)]),
    ((10.0, 10.0), [(2.2008070946, 10.3476095200), (-1.4308696985, 3.5664336681), (-2.2991588116, 1.5578293800)]),
    ((1.0, 0.001), [(1.2971330881, 1.6384627819), (-0.1199851707, 1.3626530170), (-1.2458260059, 1.1335541010)]),
    ((0.0, 0.01), [(0.5758281350, 1.0167049170), (-0.1757378578, 0.9719497561), (-1.1166948080, 0.9334350824)]),
];

/// Reference values at `alpha = 4/3`.
const ALPHA_FOUR_THIRDS: [Row; 5] = [
    ((0.0, 1.0), [(-0.2790325582, 1.8323447704), (-0.7153936028, 1.1025729179), (-1.4712435007, 0.8293465972)]),
    ((0.5, 1.0), [(0.0974698886, 2.0557093620), (-0.6384261250, 1.2467917204), (-1.4768083096, 0.9157238603)]),
    ((10.0, 10.0), [(2.0430564880, 10.2711343765), (-1.4629243612, 3.5318126678), (-2.3070857525, 1.5415457487)]),
    ((1.0, 0.001), [(0.9584534168, 1.5867842436), (-0.2741018832, 1.2855821848), (-1.3294038773, 1.0418083668)]),
    ((0.0, 0.01), [(0.2010058761, 1.0459299088), (-0.3926285803, 0.9405522943), (-1.2738007307, 0.8492208123)]),
];

/// Published bounds for `alpha = 1`, `M = 6` at `X = 10` and `X = 20`.
const EPS_REF: [(f64, f64); 2] = [(10.0, 2.036696e-6), (20.0, 1.038152e-8)];

fn c(p: (f64, f64)) -> C64 {
    C64::new(p.0, p.1)
}

fn reference_matrix(r: &[(f64, f64); 3]) -> CMat64 {
    CMat::from_rows(&[vec![c(r[0]), c(r[1])], vec![c(r[1]), c(r[2])]])
}

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, passed: bool, text: String) {
        println!("{id} {} {text}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed.push(id.to_string());
        }
    }

    fn soft(&mut self, id: &str, met: bool, text: String) {
        println!("{id} {} {text}", if met { "SOFT-MET" } else { "SOFT-MISSED" });
    }
}

fn detail(text: String) {
    println!("    {text}");
}

fn config(alpha: f64, lambda: C64, x_large: f64, depth: u32) -> RunConfig {
    RunConfig { alpha, lambda: lambda.into(), x_large, depth, ..RunConfig::default() }
}

/// Pipeline `M` per row with timing; panics only on pipeline errors.
fn run_table(alpha: f64, rows: &[Row], t: &Transcript) -> Vec<(C64, CMat64, f64, f64)> {
    rows.iter()
        .map(|(l, _)| {
            let start = Instant::now();
            let rec = run_m_matrix_with(&config(alpha, c(*l), 10.0, 6), t).expect("pipeline run");
            (c(*l), rec.m(), start.elapsed().as_secs_f64(), rec.symmetry_defect)
        })
        .collect()
}

/// Largest ratio of least-squares frame residual to the certified radius over both columns.
fn certify(frame: &SolutionFrame, oracle: &AiryFrame<f64>) -> f64 {
    let o = oracle.values();
    let norm = |v: &[C64; 4]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let a: Vec<[C64; 4]> = o.iter().map(|col| col.map(|z| z / norm(col))).collect();
    let radius = [frame.sigma_radius[0], frame.sigma_radius[1], frame.tau_radius[1], frame.tau_radius[0]];
    let bound = radius.iter().map(|r| r * r).sum::<f64>().sqrt();
    let dot = |u: &[C64; 4], v: &[C64; 4]| (0..4).map(|i| u[i].conj() * v[i]).sum::<C64>();
    let g = [[dot(&a[0], &a[0]), dot(&a[0], &a[1])], [dot(&a[1], &a[0]), dot(&a[1], &a[1])]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    (0..2)
        .map(|k| {
            let y = frame.column(k);
            let h = [dot(&a[0], &y), dot(&a[1], &y)];
            let c0 = (g[1][1] * h[0] - g[0][1] * h[1]) / det;
            let c1 = (g[0][0] * h[1] - g[1][0] * h[0]) / det;
            let res: [C64; 4] = std::array::from_fn(|i| y[i] - a[0][i] * c0 - a[1][i] * c1);
            norm(&res) / bound
        })
        .fold(0.0, f64::max)
}

fn random_lambda(rng: &mut ChaCha8Rng) -> C64 {
    loop {
        let u = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if u.norm() < 1.0 {
            return u + C64::new(0.0, 1.0);
        }
    }
}

fn main() -> ExitCode {
    let mut rep = Report { failed: Vec::new() };
    let t6 = generate_transcript(6).expect("depth-6 transcript");

    // C1: alpha = 1 reference values
    let runs = run_table(1.0, &ALPHA_ONE, &t6);
    let mut ok = true;
    let mut worst_time = 0.0f64;
    let mut lines = Vec::new();
    for (i, ((l, want), (_, m, secs, _))) in ALPHA_ONE.iter().zip(&runs).enumerate() {
        let sf = matrix_sig_figs(m, &reference_matrix(want));
        let need = if i < 3 { 7.0 } else { 6.0 };
        ok &= sf >= need;
        worst_time = worst_time.max(*secs);
        lines.push(format!("lambda = {}: {sf:.2} sf (need {need})", c(*l)));
    }
    ok &= worst_time < 60.0;
    rep.line("C1", ok, format!("alpha = 1, X = 10, M = 6 against 10-digit references; slowest lambda {worst_time:.3} s"));
    lines.into_iter().for_each(detail);

    // C2: series oracle agreement
    let mut pipe_ok = true;
    let mut table_ok = true;
    let mut lines = Vec::new();
    for ((l, want), (_, m, _, _)) in ALPHA_ONE.iter().zip(&runs) {
        let o = airy_m_matrix(c(*l)).expect("oracle");
        let sp = matrix_sig_figs(m, &o.m);
        let st = matrix_sig_figs(&o.m, &reference_matrix(want));
        pipe_ok &= sp >= 7.0;
        table_ok &= st >= 9.0;
        lines.push(format!("lambda = {}: pipeline vs oracle {sp:.2} sf (need 7), oracle vs reference {st:.2} sf (need 9)", c(*l)));
    }
    rep.line("C2", pipe_ok && table_ok, format!("series oracle: pipeline agreement {pipe_ok}, reference agreement {table_ok}"));
    lines.into_iter().for_each(detail);

    // C3: alpha = 1/2 and alpha = 4/3 reference values
    let half = run_table(0.5, &ALPHA_HALF, &t6);
    let four = run_table(4.0 / 3.0, &ALPHA_FOUR_THIRDS, &t6);
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, rows, res) in [("1/2", &ALPHA_HALF, &half), ("4/3", &ALPHA_FOUR_THIRDS, &four)] {
        for ((l, want), (_, m, _, _)) in rows.iter().zip(res.iter()) {
            let sf = matrix_sig_figs(m, &reference_matrix(want));
            ok &= sf >= 6.0;
            lines.push(format!("alpha = {name}, lambda = {}: {sf:.2} sf (need 6)", c(*l)));
        }
    }
    rep.line("C3", ok, "alpha = 1/2 and 4/3 against 10-digit references".into());
    lines.into_iter().for_each(detail);

    // C4: eps(X) magnitude, certification and monotonicity
    let lam_i = C64::new(0.0, 1.0);
    let mut ok = true;
    let mut lines = Vec::new();
    for (x, want) in EPS_REF {
        let e = epsilon_of_x(1.0, lam_i, x, &t6).expect("bound").epsilon;
        let ratio = e.map(|e| e / want).unwrap_or(f64::INFINITY);
        ok &= (0.01..=100.0).contains(&ratio);
        lines.push(format!("eps({x}) = {:.4e}, published {want:.6e}, ratio {ratio:.3}", e.unwrap_or(f64::NAN)));
    }
    let mut worst_cert = 0.0f64;
    for (l, _) in &ALPHA_ONE {
        for x in [10.0, 20.0] {
            let frame = solution_frame(1.0, c(*l), x, &t6).expect("frame");
            let oracle = airy_frame_contour(c(*l), x).expect("oracle frame");
            let r = certify(&frame, &oracle);
            worst_cert = worst_cert.max(r);
            lines.push(format!("lambda = {}, X = {x}: frame residual / certified radius {r:.3e}", c(*l)));
        }
    }
    ok &= worst_cert <= 1.0;
    let mut grid = Vec::new();
    for depth in [4u32, 5, 6] {
        let t = generate_transcript(depth).expect("transcript");
        let row: Vec<f64> = [10.0, 15.0, 20.0]
            .iter()
            .map(|x| epsilon_of_x(1.0, lam_i, *x, &t).ok().and_then(|r| r.epsilon).unwrap_or(f64::INFINITY))
            .collect();
        grid.push(row);
    }
    let dec_x = grid.iter().all(|r| r.windows(2).all(|w| w[1] < w[0]));
    let dec_m = (0..3).all(|j| grid.windows(2).all(|w| w[1][j] < w[0][j]));
    ok &= dec_x && dec_m && grid[0][0] > grid[2][0];
    rep.line(
        "C4",
        ok,
        format!("eps within factor 100, certified (worst ratio {worst_cert:.3}), decreasing in X {dec_x} and in M {dec_m}"),
    );
    lines.into_iter().for_each(detail);
    for (depth, row) in [4, 5, 6].iter().zip(&grid) {
        detail(format!("M = {depth}: eps(10, 15, 20) = {:.3e}, {:.3e}, {:.3e}", row[0], row[1], row[2]));
    }

    // C5: generated expressions against hand-entered references
    let refs = reference_expressions();
    let t5 = generate_transcript(5).expect("depth-5 transcript");
    let t7 = generate_transcript(7).expect("depth-7 transcript");
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let mut worst = 0.0f64;
    let mut structural = true;
    let cases: [(&str, &Transcript); 5] = [("S2", &t5), ("S3", &t5), ("S4", &t5), ("S6", &t7), ("E5", &t5)];
    for (name, t) in cases {
        let generated = if name == "E5" { t.remainder().clone() } else { t.s(name[1..].parse().unwrap()).expect("defined").clone() };
        structural &= generated == refs[name];
        for _ in 0..5 {
            let x = rng.gen_range(5.0..50.0);
            let lam = random_lambda(&mut rng);
            let ctx = make_context(1.0, lam, x, t.depth() as usize + 2).expect("context");
            let mut ev = Evaluator::new(JetAlgebra::new(ctx), t);
            let g = ev.eval(&generated).expect("generated");
            let r = ev.eval(&refs[name]).expect("reference");
            worst = worst.max(g.value().max_abs_diff(r.value()) / r.value().max_abs());
        }
    }
    rep.line("C5", worst < 1e-10, format!("S2, S3, S4, S6, E5 realized at 5 random points: max relative error {worst:.2e} (structurally equal: {structural})"));

    // C6: exact transformation identity
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut levels = 0;
    for alpha in [0.5, 1.0, 4.0 / 3.0] {
        for _ in 0..10 {
            let x = rng.gen_range(5.0..100.0);
            let lam = random_lambda(&mut rng);
            for lc in check_levels(alpha, lam, x, &t6).expect("levels") {
                worst = worst.max(lc.transform);
                levels += 1;
            }
        }
    }
    rep.line("C6", worst < 1e-10, format!("F(m+1) = (I+P)^-1 (F(m) (I+P) - P'): {levels} level checks, max relative defect {worst:.2e}"));

    // C7: structural invariants and grading
    let mut comm = 0.0f64;
    let mut diag = 0.0f64;
    let mut dev = 0.0f64;
    let mut worst_fit = String::new();
    for alpha in [0.5, 1.0, 4.0 / 3.0] {
        for x in [5.0, 20.0, 80.0] {
            for lc in check_levels(alpha, lam_i, x, &t6).expect("levels") {
                comm = comm.max(lc.commutator);
                diag = diag.max(lc.diagonal);
            }
        }
        for f in grading_fits(alpha, lam_i, &t6).expect("fits") {
            let d = (f.fitted - f.expected).abs();
            if d >= dev {
                dev = d;
                worst_fit = format!("{} at alpha = {alpha}: {:.4} vs {:.4}", f.atom, f.fitted, f.expected);
            }
        }
    }
    rep.line(
        "C7",
        comm < 1e-13 && diag < 1e-14 && dev <= 0.1,
        format!("commutator {comm:.2e}, diagonal {diag:.2e}, worst grading deviation {dev:.4} ({worst_fit})"),
    );

    // C8: integration robustness
    let mut dual = f64::INFINITY;
    let mut rescale = 0.0f64;
    for (l, _) in &ALPHA_ONE {
        let frame = solution_frame(1.0, c(*l), 10.0, &t6).expect("frame");
        let eps = frame.epsilon.epsilon;
        let r = integrate_riccati(&frame, 1e-10).and_then(|s| m_from_riccati(&s, 1e-10, eps));
        let lin = integrate_linear_oracle(&frame, 1e-10).and_then(|(s, tau, st)| m_from_frame(&s, &tau, 1e-10, eps, st));
        match (r, lin) {
            (Ok(r), Ok(lin)) => dual = dual.min(matrix_sig_figs(&r.m, &lin.m)),
            _ => dual = f64::NEG_INFINITY,
        }
        let a = m_matrix(&frame, 1e-10).expect("m");
        let b = m_matrix(&rescale_frame(&frame, [C64::new(2.5, -1.0), C64::new(-0.3, 0.7)]), 1e-10).expect("m");
        rescale = rescale.max(a.m.max_abs_diff(&b.m) / a.m.max_abs());
    }
    let sym = runs.iter().chain(&half).chain(&four).map(|r| r.3).fold(0.0, f64::max);
    rep.line(
        "C8",
        dual >= 7.0 && rescale < 1e-12 && sym < 1e-6,
        format!("Riccati vs linear min {dual:.2} sf, column rescaling {rescale:.2e}, symmetry defect max {sym:.2e}"),
    );

    // C9: expression sizes (not gating)
    let t8 = generate_transcript(8).expect("depth-8 transcript");
    let t9 = generate_transcript(9).expect("depth-9 transcript");
    let e6 = component_counts("E6", t6.remainder(), &t6);
    let s8 = component_counts("S8", t9.s(8).expect("S8"), &t9);
    let e8 = component_counts("E8", t8.remainder(), &t8);
    let near = |v: f64, target: f64| (v - target).abs() <= 0.3 * target;
    let conventions = |cc: &lgdiag::pipeline::ComponentCounts, ok: &dyn Fn(f64) -> bool| -> Vec<&'static str> {
        [("terms", cc.terms as f64), ("atoms", cc.atoms as f64), ("substituted", cc.expanded as f64)]
            .into_iter()
            .filter(|(_, v)| ok(*v))
            .map(|(n, _)| n)
            .collect()
    };
    let checks = [
        (&e6, conventions(&e6, &|v| v > 250.0)),
        (&s8, conventions(&s8, &|v| near(v, 60.0))),
        (&e8, conventions(&e8, &|v| near(v, 700.0))),
    ];
    let single = ["terms", "atoms", "substituted"].iter().any(|n| checks.iter().all(|(_, m)| m.contains(n)));
    rep.soft(
        "C9",
        single,
        "sizes as terms / atom occurrences / substituted terms; targets E6 > 250, S8 ~ 60, E8 ~ 700 (+-30%) under one convention".into(),
    );
    for (cc, met) in &checks {
        detail(format!("{}: {} / {} / {} (met under: {})", cc.name, cc.terms, cc.atoms, cc.expanded, if met.is_empty() { "none".to_string() } else { met.join(", ") }));
    }

    if rep.failed.is_empty() {
        println!("acceptance: all gating criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {}", rep.failed.join(", "));
        ExitCode::FAILURE
    }
}
