//! End-to-end runs: configuration, orchestration, verification and output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airy::airy_m_matrix;
use crate::asymsol::{solution_frame, FrameSummary, SolutionFrame};
use crate::bounds::{bound_expr_norm, epsilon_of_x, EpsilonReport};
use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::ncalg::{Atom, NCExpr};
use crate::ode::OdeStats;
use crate::realize::{check_levels, level_norms, make_context, realize_expr};
use crate::recur::{generate_transcript, Transcript};
use crate::riccati::{integrate_linear_oracle, integrate_riccati, m_from_frame, m_from_riccati, m_matrix, MResult, PathKind};
use crate::{CMat64, C64};

/// Upper end of the limit-point range of `alpha`.
pub const ALPHA_MAX: f64 = 4.0 / 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::InvalidInput(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub lambda: ComplexRecord,
    pub x_large: f64,
    /// Number of diagonalization levels `M`.
    pub depth: u32,
    pub ode_tol: f64,
    pub oracle: bool,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 1.0,
            lambda: ComplexRecord { re: 0.0, im: 1.0 },
            x_large: 10.0,
            depth: 6,
            ode_tol: 1e-10,
            oracle: false,
            format: OutputFormat::Table,
        }
    }
}

impl RunConfig {
    pub fn lambda(&self) -> C64 {
        self.lambda.into()
    }

    /// Checks shared by every run: positive `alpha`, `Re lambda >= -1`, `X > 1`, `M >= 2`.
    pub fn validate_common(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.lambda.re >= -1.0) || !self.lambda.im.is_finite() {
            return bad(format!("Re lambda must be >= -1, got {}", self.lambda.re));
        }
        if !(self.x_large > 1.0) || !self.x_large.is_finite() {
            return bad(format!("X must exceed 1, got {}", self.x_large));
        }
        if !(2..=9).contains(&self.depth) {
            return bad(format!("iterations M must lie in 2..=9, got {}", self.depth));
        }
        if !(self.ode_tol > 0.0 && self.ode_tol < 1e-2) {
            return bad(format!("ode tolerance must lie in (0, 1e-2), got {}", self.ode_tol));
        }
        Ok(())
    }

    /// Spectral runs additionally need `alpha <= 4/3` and `Im lambda > 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.alpha > ALPHA_MAX * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 4/3] for a spectral run, got {}", self.alpha)));
        }
        if !(self.lambda.im > 0.0) {
            return Err(Error::InvalidInput(format!("Im lambda must be positive, got {}", self.lambda.im)));
        }
        if self.oracle && !is_airy(self.alpha) {
            return Err(Error::InvalidInput(format!("the series oracle needs alpha = 1, got {}", self.alpha)));
        }
        Ok(())
    }
}

fn is_airy(alpha: f64) -> bool {
    (alpha - 1.0).abs() < 1e-12
}

/// Parses `a+bi`, `a-bi`, `bi`, `a` or `i` (also `j`), ignoring spaces.
pub fn parse_lambda(s: &str) -> Result<C64> {
    let bad = || Error::InvalidInput(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let num = |p: &str| -> Result<f64> { p.parse::<f64>().map_err(|_| bad()) };
    let imag = |p: &str| -> Result<f64> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(p),
        }
    };
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(num(&t)?, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(C64::new(num(&body[..k])?, imag(&body[k..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexRecord {
    fn from(z: C64) -> Self {
        ComplexRecord { re: z.re, im: z.im }
    }
}

impl From<ComplexRecord> for C64 {
    fn from(z: ComplexRecord) -> Self {
        C64::new(z.re, z.im)
    }
}

/// Significant figures of agreement, `-log10(|a - b| / |b|)`, capped at 17.
pub fn sig_figs(a: C64, b: C64) -> f64 {
    let d = (a - b).norm();
    if d == 0.0 {
        return 17.0;
    }
    (-(d / b.norm()).log10()).min(17.0)
}

/// Smallest [`sig_figs`] over `m11`, `m12` and `m22`.
pub fn matrix_sig_figs(a: &CMat64, b: &CMat64) -> f64 {
    [(0, 0), (0, 1), (1, 1)].iter().map(|&ij| sig_figs(a[ij], b[ij])).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub m11: ComplexRecord,
    pub m12: ComplexRecord,
    pub m22: ComplexRecord,
    /// Smallest agreement over the three entries.
    pub sig_figs: f64,
    pub tail: f64,
}

/// One spectral run. The JSON layout is stable: field order and names below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub config: RunConfig,
    pub m11: ComplexRecord,
    pub m12: ComplexRecord,
    pub m21: ComplexRecord,
    pub m22: ComplexRecord,
    pub epsilon: Option<f64>,
    pub symmetry_defect: f64,
    pub dichotomy_passed: bool,
    pub path: PathKind,
    pub stats: OdeStats,
    pub oracle: Option<OracleComparison>,
}

impl OutputRecord {
    pub fn m(&self) -> CMat64 {
        CMat::from_rows(&[vec![self.m11.into(), self.m12.into()], vec![self.m21.into(), self.m22.into()]])
    }
}

/// Full pipeline: transcript, frame at `X` with `eps(X)`, backward integration, `M`.
pub fn run_m_matrix(config: &RunConfig) -> Result<OutputRecord> {
    config.validate()?;
    let transcript = generate_transcript(config.depth).map_err(|e| e.at("transcript"))?;
    run_m_matrix_with(config, &transcript)
}

/// [`run_m_matrix`] with a prebuilt transcript of depth `config.depth`.
pub fn run_m_matrix_with(config: &RunConfig, transcript: &Transcript) -> Result<OutputRecord> {
    config.validate()?;
    if transcript.depth() != config.depth {
        return Err(Error::InvalidInput(format!("transcript depth {} != M = {}", transcript.depth(), config.depth)));
    }
    let lambda = config.lambda();
    let frame = solution_frame(config.alpha, lambda, config.x_large, transcript).map_err(|e| e.at("frame"))?;
    let res = m_matrix(&frame, config.ode_tol).map_err(|e| e.at("riccati"))?;
    let oracle = if config.oracle {
        let o = airy_m_matrix(lambda).map_err(|e| e.at("oracle"))?;
        Some(OracleComparison {
            m11: o.m[(0, 0)].into(),
            m12: o.m[(0, 1)].into(),
            m22: o.m[(1, 1)].into(),
            sig_figs: matrix_sig_figs(&res.m, &o.m),
            tail: o.tol,
        })
    } else {
        None
    };
    Ok(record(config, &frame, &res, oracle))
}

fn record(config: &RunConfig, frame: &SolutionFrame, res: &MResult, oracle: Option<OracleComparison>) -> OutputRecord {
    OutputRecord {
        config: config.clone(),
        m11: res.m[(0, 0)].into(),
        m12: res.m[(0, 1)].into(),
        m21: res.m[(1, 0)].into(),
        m22: res.m[(1, 1)].into(),
        epsilon: res.epsilon,
        symmetry_defect: res.symmetry_defect,
        dichotomy_passed: frame.dichotomy.passed,
        path: res.path,
        stats: res.stats,
        oracle,
    }
}

/// Runs every `lambda` with the same settings; results keep input order.
pub fn run_sweep(config: &RunConfig, lambdas: &[C64]) -> Result<Vec<Result<OutputRecord>>> {
    config.validate_common()?;
    let transcript = generate_transcript(config.depth).map_err(|e| e.at("transcript"))?;
    Ok(lambdas
        .par_iter()
        .map(|l| {
            let c = RunConfig { lambda: (*l).into(), ..config.clone() };
            run_m_matrix_with(&c, &transcript)
        })
        .collect())
}

/// `eps(X)` report with the dichotomy check attached.
pub fn run_epsilon(config: &RunConfig) -> Result<EpsilonReport> {
    config.validate_common()?;
    let transcript = generate_transcript(config.depth).map_err(|e| e.at("transcript"))?;
    let lambda = config.lambda();
    let mut rep = epsilon_of_x(config.alpha, lambda, config.x_large, &transcript).map_err(|e| e.at("bounds"))?;
    let grid = (config.x_large, 100.0 * config.x_large, 60);
    rep.dichotomy = Some(crate::bounds::check_dichotomy(config.alpha, lambda, config.x_large, &transcript, grid)?);
    Ok(rep)
}

/// Frame at `X` for the configured run.
pub fn run_frame(config: &RunConfig) -> Result<FrameSummary> {
    config.validate()?;
    let transcript = generate_transcript(config.depth).map_err(|e| e.at("transcript"))?;
    Ok(solution_frame(config.alpha, config.lambda(), config.x_large, &transcript).map_err(|e| e.at("frame"))?.summary())
}

/// Size of a symbolic expression under three conventions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentCounts {
    pub name: String,
    /// Distinct terms after compression by the `S_j` definitions.
    pub terms: usize,
    /// Atom occurrences over all compressed terms.
    pub atoms: usize,
    /// Terms after substituting every `S`, `V` and `E` definition, without cancellation.
    pub expanded: u128,
}

fn expanded_count(e: &NCExpr, t: &Transcript, memo: &mut HashMap<Atom, u128>) -> u128 {
    e.terms()
        .map(|(fs, _)| fs.iter().fold(1u128, |acc, a| acc.saturating_mul(expanded_atom(a, t, memo))))
        .fold(0u128, u128::saturating_add)
}

fn expanded_atom(a: &Atom, t: &Transcript, memo: &mut HashMap<Atom, u128>) -> u128 {
    if let Some(v) = memo.get(a) {
        return *v;
    }
    let def = match a {
        Atom::S(m) => t.s(*m).cloned(),
        Atom::V(j, m) if (*j, *m) != (1, 1) => t.v(*j, *m).cloned(),
        Atom::E { m, .. } => t.e(*m).cloned(),
        Atom::Dg(e) => Some((**e).clone()),
        _ => None,
    };
    let v = match def {
        Some(e) => expanded_count(&e, t, memo),
        None => 1,
    };
    memo.insert(a.clone(), v);
    v
}

pub fn component_counts(name: &str, e: &NCExpr, t: &Transcript) -> ComponentCounts {
    let atoms = e.terms().map(|(fs, _)| fs.len()).sum();
    ComponentCounts { name: name.to_string(), terms: e.len(), atoms, expanded: expanded_count(e, t, &mut HashMap::new()) }
}

/// Counts for every `S_m`, `V_{j,m}` and the remainder of `t`.
pub fn transcript_counts(t: &Transcript) -> Vec<ComponentCounts> {
    let mut out = Vec::new();
    for m in 2..=t.depth() {
        if let Some(s) = t.s(m) {
            out.push(component_counts(&format!("S{m}"), s, t));
        }
    }
    for m in 2..=t.depth() {
        if let Some(e) = t.e(m) {
            out.push(component_counts(&format!("E{m}"), e, t));
        }
    }
    out
}

/// Norms of the realized level quantities at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizeRecord {
    pub alpha: f64,
    pub lambda: ComplexRecord,
    pub x: f64,
    pub depth: u32,
    /// `(atom, max |entry|)` for every `P_m` and `V_{j,m}`.
    pub norms: Vec<(String, f64)>,
    pub remainder_norm: f64,
    /// `I + P` at `x`, row-major.
    pub transfer: Vec<Vec<ComplexRecord>>,
}

pub fn run_realize(config: &RunConfig, x: f64) -> Result<RealizeRecord> {
    config.validate_common()?;
    let t = generate_transcript(config.depth).map_err(|e| e.at("transcript"))?;
    let lambda = config.lambda();
    let norms = level_norms(config.alpha, lambda, x, &t)?.into_iter().map(|(a, v)| (a.to_string(), v)).collect();
    let ctx = make_context(config.alpha, lambda, x, config.depth as usize + 2)?;
    let remainder_norm = realize_expr(t.remainder(), &ctx, &t)?.value().max_abs();
    let ip = crate::asymsol::transfer_product(config.alpha, lambda, x, &t)?;
    let transfer = (0..4).map(|i| (0..4).map(|j| ip[(i, j)].into()).collect()).collect();
    Ok(RealizeRecord { alpha: config.alpha, lambda: config.lambda, x, depth: config.depth, norms, remainder_norm, transfer })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub items: Vec<CheckItem>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.items.push(CheckItem { name: name.to_string(), passed, detail });
    }

    fn push_result(&mut self, name: &str, r: Result<(bool, String)>) {
        match r {
            Ok((p, d)) => self.push(name, p, d),
            Err(e) => self.push(name, false, format!("error: {e}")),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for i in &self.items {
            let _ = writeln!(s, "[{}] {:<28} {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail);
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradingFit {
    pub atom: String,
    pub fitted: f64,
    pub expected: f64,
}

/// Fitted decay exponents of `P_m` and `V_{j,m}` on `x in [1e3, 1e5]`.
pub fn grading_fits(alpha: f64, lambda: C64, t: &Transcript) -> Result<Vec<GradingFit>> {
    let xs: Vec<f64> = (0..9).map(|i| 1e3 * 10f64.powf(i as f64 / 4.0)).collect();
    let per_x: Vec<Vec<(Atom, f64)>> = xs.iter().map(|x| level_norms(alpha, lambda, *x, t)).collect::<Result<_>>()?;
    let a = 1.0 + alpha / 4.0;
    let mut out = Vec::new();
    for (i, (atom, _)) in per_x[0].iter().enumerate() {
        let ys: Vec<f64> = per_x.iter().map(|row| row[i].1).collect();
        if ys.iter().any(|y| *y == 0.0) {
            continue;
        }
        let expected = -(atom.order() as f64) * a;
        out.push(GradingFit { atom: atom.to_string(), fitted: log_slope(&xs, &ys), expected });
    }
    Ok(out)
}

/// Invariant suites for the configured `alpha`, `lambda`, `X`, `M`.
pub fn run_verify(config: &RunConfig) -> Result<VerifyReport> {
    config.validate()?;
    let mut rep = VerifyReport::default();
    let t = match generate_transcript(config.depth) {
        Ok(t) => t,
        Err(e) => {
            rep.push("transcript", false, e.to_string());
            return Ok(rep);
        }
    };
    let (alpha, lambda, x_large) = (config.alpha, config.lambda(), config.x_large);
    let xs = [x_large.max(5.0), 2.0 * x_large.max(5.0), 10.0 * x_large.max(5.0)];

    rep.push_result("transformation identity", (|| {
        let worst = xs.iter().map(|x| check_levels(alpha, lambda, *x, &t)).collect::<Result<Vec<_>>>()?;
        let w = worst.iter().flatten().map(|c| c.transform).fold(0.0, f64::max);
        Ok((w < 1e-10, format!("max relative defect {w:.2e}")))
    })());
    rep.push_result("commutator identity", (|| {
        let lv = check_levels(alpha, lambda, xs[0], &t)?;
        let c = lv.iter().map(|c| c.commutator).fold(0.0, f64::max);
        let d = lv.iter().map(|c| c.diagonal).fold(0.0, f64::max);
        Ok((c < 1e-13 && d < 1e-14, format!("commutator {c:.2e}, diagonal {d:.2e}")))
    })());
    rep.push_result("grading exponents", (|| {
        let fits = grading_fits(alpha, lambda, &t)?;
        let worst = fits.iter().max_by(|a, b| (a.fitted - a.expected).abs().total_cmp(&(b.fitted - b.expected).abs()));
        let dev = worst.map(|f| (f.fitted - f.expected).abs()).unwrap_or(0.0);
        let name = worst.map(|f| f.atom.clone()).unwrap_or_default();
        Ok((dev < 0.1, format!("{} fits, worst {name} off by {dev:.3}", fits.len())))
    })());

    let eps = epsilon_of_x(alpha, lambda, x_large, &t);
    rep.push_result("envelope validity", eps.clone().map(|e| {
        let p = e.p_norms.iter().fold(0.0f64, |a, b| a.max(*b));
        (e.valid, format!("max |P_m| bound {p:.3e}, n I = {:.3e}, eps = {:?}", 4.0 * e.integral, e.epsilon))
    }));
    rep.push_result("envelope soundness", (|| {
        let e = eps.clone()?;
        let mut worst = 0.0f64;
        for ab in &e.atoms {
            if ab.envelope.at(x_large) > 0.0 {
                worst = worst.max(ab.realized / ab.envelope.at(x_large));
            }
        }
        if e.p_norms_ok {
            let env = bound_expr_norm(t.remainder(), &t, alpha, lambda, x_large)?;
            for x in xs.iter().chain([&(100.0 * x_large)]) {
                let ctx = make_context(alpha, lambda, *x, config.depth as usize + 2)?;
                let v = realize_expr(t.remainder(), &ctx, &t)?.value().max_abs();
                worst = worst.max(v / env.at(*x));
            }
        }
        Ok((worst <= 1.0, format!("max realized / envelope {worst:.3}")))
    })());

    let frame = match solution_frame(alpha, lambda, x_large, &t) {
        Ok(f) => f,
        Err(e) => {
            rep.push("frame", false, e.to_string());
            return Ok(rep);
        }
    };
    rep.push("dichotomy", frame.dichotomy.passed, format!("{} pairs checked", frame.dichotomy.pairs.len()));
    let tol = config.ode_tol;
    let ric = integrate_riccati(&frame, tol).and_then(|s| m_from_riccati(&s, tol, frame.epsilon.epsilon));
    let lin = integrate_linear_oracle(&frame, tol).and_then(|(s, tau, st)| m_from_frame(&s, &tau, tol, frame.epsilon.epsilon, st));
    match (&ric, &lin) {
        (Ok(r), Ok(l)) => {
            let sf = matrix_sig_figs(&r.m, &l.m);
            rep.push("dual path", sf >= 7.0, format!("Riccati vs linear {sf:.2} sf"));
        }
        (Err(e), _) | (_, Err(e)) => rep.push("dual path", false, format!("error: {e}")),
    }
    rep.push_result("column rescaling", (|| {
        let scaled = rescale_frame(&frame, [C64::new(2.5, -1.0), C64::new(-0.3, 0.7)]);
        let a = m_matrix(&frame, tol)?;
        let b = m_matrix(&scaled, tol)?;
        let rel = a.m.max_abs_diff(&b.m) / a.m.max_abs();
        Ok((rel < 1e-12, format!("relative change {rel:.2e}")))
    })());
    let best = ric.as_ref().or(lin.as_ref());
    if let Ok(r) = best {
        rep.push("symmetry", r.symmetry_defect < 1e-6, format!("defect {:.2e}", r.symmetry_defect));
        if is_airy(alpha) {
            rep.push_result("oracle agreement", airy_m_matrix(lambda).map(|o| {
                let sf = matrix_sig_figs(&r.m, &o.m);
                (sf >= 7.0, format!("{sf:.2} sf against the series oracle"))
            }));
        }
    }
    Ok(rep)
}

/// Frame with its two solution columns multiplied by `scales`.
pub fn rescale_frame(frame: &SolutionFrame, scales: [C64; 2]) -> SolutionFrame {
    let mut f = frame.clone();
    for (c, s) in crate::asymsol::L2_COLUMNS.iter().zip(scales) {
        for r in 0..4 {
            f.full[(r, *c)] *= s;
        }
    }
    let d = CMat::diagonal(&scales);
    f.sigma = &frame.sigma * &d;
    f.tau = &frame.tau * &d;
    f
}

fn fmt_c(z: ComplexRecord) -> String {
    format!("{:.10} {} {:.10} i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
}

/// Serializes records deterministically.
pub fn emit_output(records: &[OutputRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let v = if records.len() == 1 {
                serde_json::to_string_pretty(&records[0])
            } else {
                serde_json::to_string_pretty(records)
            };
            v.expect("records serialize") + "\n"
        }
        OutputFormat::Csv => {
            let mut s = String::from("alpha,lambda_re,lambda_im,x_large,depth,entry,re,im,epsilon\n");
            for r in records {
                let c = &r.config;
                let eps = r.epsilon.map(|e| format!("{e:e}")).unwrap_or_default();
                for (name, z) in [("m11", r.m11), ("m12", r.m12), ("m21", r.m21), ("m22", r.m22)] {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{name},{:e},{:e},{eps}",
                        c.alpha, c.lambda.re, c.lambda.im, c.x_large, c.depth, z.re, z.im
                    );
                }
            }
            s
        }
        OutputFormat::Table => {
            let mut s = String::new();
            for r in records {
                let c = &r.config;
                let eps = r.epsilon.map(|e| format!("{e:.6e}")).unwrap_or_else(|| "n/a".into());
                let _ = writeln!(s, "alpha = {}  X = {}  M = {}  eps(X) = {eps}", c.alpha, c.x_large, c.depth);
                let _ = writeln!(s, "lambda = {}", fmt_c(c.lambda));
                let _ = writeln!(s, "  m11  {}", fmt_c(r.m11));
                let _ = writeln!(s, "  m12  {}", fmt_c(r.m12));
                let _ = writeln!(s, "  m22  {}", fmt_c(r.m22));
                let _ = writeln!(
                    s,
                    "  symmetry defect {:.2e}  dichotomy {}  path {:?}  steps {}",
                    r.symmetry_defect,
                    if r.dichotomy_passed { "ok" } else { "FAILED" },
                    r.path,
                    r.stats.steps
                );
                if let Some(o) = &r.oracle {
                    let _ = writeln!(s, "  oracle m11 {}  agreement {:.2} sf", fmt_c(o.m11), o.sig_figs);
                }
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_literals() {
        let cases = [
            ("0+1i", (0.0, 1.0)),
            ("0.5+1i", (0.5, 1.0)),
            ("10+10i", (10.0, 10.0)),
            ("1+0.001i", (1.0, 0.001)),
            ("0+0.01i", (0.0, 0.01)),
            ("i", (0.0, 1.0)),
            ("-i", (0.0, -1.0)),
            ("2.5", (2.5, 0.0)),
            ("1e-3-2e+1i", (1e-3, -20.0)),
            (" -0.5 + 2 j", (-0.5, 2.0)),
            ("3i", (0.0, 3.0)),
        ];
        for (s, (re, im)) in cases {
            assert_eq!(parse_lambda(s).unwrap(), C64::new(re, im), "{s}");
        }
        for s in ["", "abc", "1+", "1+2k", "1,5+2i"] {
            assert!(parse_lambda(s).is_err(), "{s}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let with = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(with(|c| c.alpha = 2.0).is_err());
        assert!(with(|c| c.alpha = 0.0).is_err());
        assert!(with(|c| c.alpha = 1.3333333333).is_ok());
        assert!(with(|c| c.lambda.im = 0.0).is_err());
        assert!(with(|c| c.lambda.re = -1.5).is_err());
        assert!(with(|c| c.x_large = 1.0).is_err());
        assert!(with(|c| c.depth = 1).is_err());
        assert!(with(|c| {
            c.alpha = 0.5;
            c.oracle = true;
        })
        .is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.5)).collect();
        assert!((log_slope(&xs, &ys) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn sig_figs_scale() {
        assert!((sig_figs(C64::new(1.0 + 1e-7, 0.0), C64::new(1.0, 0.0)) - 7.0).abs() < 1e-6);
        assert_eq!(sig_figs(C64::new(1.0, 0.0), C64::new(1.0, 0.0)), 17.0);
    }

    #[test]
    fn counts_of_small_transcript() {
        let t = generate_transcript(3).unwrap();
        let counts = transcript_counts(&t);
        assert!(counts.iter().any(|c| c.name == "S2" && c.terms > 0));
        assert!(counts.iter().all(|c| c.expanded >= c.terms as u128 || c.terms == 0));
    }
}
