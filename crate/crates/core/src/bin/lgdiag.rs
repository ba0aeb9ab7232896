use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lgdiag::airy::airy_m_extended;
use lgdiag::pipeline::{
    emit_output, parse_lambda, run_epsilon, run_frame, run_m_matrix, run_realize, run_sweep, run_verify, transcript_counts,
    ComplexRecord, OutputFormat, RunConfig,
};
use lgdiag::{generate_transcript, Error, C64};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PIPELINE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => OutputFormat::Table,
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

/// Spectral matrix of y'''' - (lambda + x^alpha) y = 0 on [0, inf) by repeated asymptotic diagonalization.
#[derive(Debug, Parser)]
#[command(name = "lgdiag", version)]
struct Cli {
    #[arg(long, global = true, default_value_t = 1.0)]
    alpha: f64,
    /// Spectral parameter as `a+bi`.
    #[arg(long, global = true, default_value = "0+1i", allow_hyphen_values = true)]
    lambda: String,
    /// Matching point X.
    #[arg(long, global = true, default_value_t = 10.0)]
    x_large: f64,
    /// Number of diagonalization levels M.
    #[arg(long, global = true, default_value_t = 6)]
    iterations: u32,
    #[arg(long, global = true, default_value_t = 1e-10)]
    ode_tol: f64,
    /// Compare with the series oracle (alpha = 1 only).
    #[arg(long, global = true)]
    oracle: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dirichlet spectral matrix M(lambda).
    MMatrix,
    /// Certified bound eps(X) with its diagnostics.
    Epsilon,
    /// Series oracle M(lambda) and solution values at 0 (alpha = 1).
    Oracle,
    /// Symbolic transcript of the recurrence with component counts.
    SymbolicDump,
    /// Norms of the realized level quantities at a point.
    Realize {
        #[arg(long)]
        at: f64,
    },
    /// Invariant suites; exits with a distinct code on failure.
    Verify,
    /// Concurrent runs over a list or grid of lambda values.
    Sweep {
        /// Comma-separated lambda values.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        lambdas: Vec<String>,
        /// Real-part grid `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        re: Option<String>,
        /// Imaginary-part grid `start:stop:count`.
        #[arg(long)]
        im: Option<String>,
        /// Worker threads (1 gives a sequential run).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Asymptotic solution frame at X with error radii.
    Frame,
}

enum Failure {
    Validation(String),
    Pipeline(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => Failure::Validation(m),
            other => Failure::Pipeline(other.to_string()),
        }
    }
}

fn grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Validation(format!("grid must be start:stop:count, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct OracleOutput {
    lambda: ComplexRecord,
    m11: ComplexRecord,
    m12: ComplexRecord,
    m21: ComplexRecord,
    m22: ComplexRecord,
    symmetry_defect: f64,
    terms: usize,
    relative_tail: f64,
    /// `psi_k^{(d)}(0)` for `k = 1, 2`, `d = 0..3`.
    psi: Vec<Vec<ComplexRecord>>,
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let lambda = parse_lambda(&cli.lambda)?;
    let config = RunConfig {
        alpha: cli.alpha,
        lambda: lambda.into(),
        x_large: cli.x_large,
        depth: cli.iterations,
        ode_tol: cli.ode_tol,
        oracle: cli.oracle,
        format: cli.format.into(),
    };
    let format = config.format;
    match &cli.command {
        Command::MMatrix => Ok(emit_output(&[run_m_matrix(&config)?], format)),
        Command::Epsilon => {
            let rep = run_epsilon(&config)?;
            Ok(match format {
                OutputFormat::Json => json(&rep),
                OutputFormat::Csv => format!(
                    "alpha,lambda_re,lambda_im,x_large,depth,k,integral,epsilon,valid\n{},{},{},{},{},{:e},{:e},{},{}\n",
                    rep.alpha,
                    rep.lambda.0,
                    rep.lambda.1,
                    rep.x_large,
                    rep.depth,
                    rep.k,
                    rep.integral,
                    rep.epsilon.map(|e| format!("{e:e}")).unwrap_or_default(),
                    rep.valid
                ),
                OutputFormat::Table => {
                    let mut s = format!(
                        "alpha = {}  lambda = {}{:+}i  X = {}  M = {}\n",
                        rep.alpha, rep.lambda.0, rep.lambda.1, rep.x_large, rep.depth
                    );
                    s += &format!("  k = {:.6e}  integral = {:.6e}\n", rep.k, rep.integral);
                    s += &format!("  P_m bounds: {:?}  ok = {}\n", rep.p_norms.iter().map(|p| format!("{p:.3e}")).collect::<Vec<_>>(), rep.p_norms_ok);
                    s += &format!("  remainder envelope: {:.4e} x^-{:.4}\n", rep.remainder.c, rep.remainder.e);
                    if let Some(d) = &rep.dichotomy {
                        s += &format!("  dichotomy: {}\n", if d.passed { "ok" } else { "FAILED" });
                    }
                    match rep.epsilon {
                        Some(e) => s += &format!("  eps(X) = {e:.6e}\n"),
                        None => s += "  eps(X) not available: bound conditions fail\n",
                    }
                    s
                }
            })
        }
        Command::Oracle => {
            if !(lambda.im > 0.0) {
                return Err(Failure::Validation(format!("Im lambda must be positive, got {}", lambda.im)));
            }
            let o = airy_m_extended(lambda)?;
            let m = &o.result.m;
            let out = OracleOutput {
                lambda: lambda.into(),
                m11: m[(0, 0)].into(),
                m12: m[(0, 1)].into(),
                m21: m[(1, 0)].into(),
                m22: m[(1, 1)].into(),
                symmetry_defect: o.result.symmetry_defect,
                terms: o.frame.terms,
                relative_tail: o.frame.rel_tail,
                psi: o.frame.values().iter().map(|col| col.iter().map(|z| (*z).into()).collect()).collect(),
            };
            Ok(match format {
                OutputFormat::Table => {
                    let c = |z: ComplexRecord| format!("{:.12} {:+.12} i", z.re, z.im);
                    format!(
                        "series oracle, lambda = {}\n  m11  {}\n  m12  {}\n  m22  {}\n  terms {}  relative tail {:.2e}  symmetry defect {:.2e}\n",
                        c(out.lambda),
                        c(out.m11),
                        c(out.m12),
                        c(out.m22),
                        out.terms,
                        out.relative_tail,
                        out.symmetry_defect
                    )
                }
                _ => json(&out),
            })
        }
        Command::SymbolicDump => {
            config.validate_common()?;
            let t = generate_transcript(config.depth)?;
            let counts = transcript_counts(&t);
            Ok(match format {
                OutputFormat::Json => {
                    let defs: Vec<(String, String)> = t.s_definitions().iter().map(|(a, e)| (a.to_string(), e.to_string())).collect();
                    json(&serde_json::json!({
                        "depth": t.depth(),
                        "definitions": defs,
                        "remainder": t.remainder().to_string(),
                        "counts": counts,
                    }))
                }
                _ => {
                    let mut s = t.dump();
                    s += "\ncomponent counts (terms / atom occurrences / expanded terms):\n";
                    for c in counts {
                        s += &format!("  {:<4} {:>6} {:>8} {:>10}\n", c.name, c.terms, c.atoms, c.expanded);
                    }
                    s
                }
            })
        }
        Command::Realize { at } => {
            if !(*at > 0.0) {
                return Err(Failure::Validation(format!("--at must be positive, got {at}")));
            }
            let r = run_realize(&config, *at)?;
            Ok(match format {
                OutputFormat::Table => {
                    let mut s = format!("x = {}  alpha = {}  M = {}\n", r.x, r.alpha, r.depth);
                    for (a, v) in &r.norms {
                        s += &format!("  {a:<8} {v:.6e}\n");
                    }
                    s += &format!("  E{:<7} {:.6e}\n", r.depth, r.remainder_norm);
                    s
                }
                _ => json(&r),
            })
        }
        Command::Verify => {
            let rep = run_verify(&config)?;
            let text = match format {
                OutputFormat::Table => rep.render(),
                _ => json(&rep),
            };
            if rep.passed() {
                Ok(text)
            } else {
                Err(Failure::Verify(text))
            }
        }
        Command::Sweep { lambdas, re, im, threads } => {
            let mut points: Vec<C64> = lambdas.iter().map(|s| parse_lambda(s)).collect::<Result<_, _>>()?;
            if re.is_some() || im.is_some() {
                let res = grid(re.as_deref().unwrap_or("0:0:1"))?;
                let ims = grid(im.as_deref().unwrap_or("1:1:1"))?;
                for r in &res {
                    for i in &ims {
                        points.push(C64::new(*r, *i));
                    }
                }
            }
            if points.is_empty() {
                points.push(lambda);
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Failure::Pipeline(e.to_string()))?;
            let results = pool.install(|| run_sweep(&config, &points))?;
            let mut records = Vec::new();
            let mut errors = Vec::new();
            for (p, r) in points.iter().zip(results) {
                match r {
                    Ok(rec) => records.push(rec),
                    Err(e) => errors.push(format!("lambda = {p}: {e}")),
                }
            }
            let text = emit_output(&records, format);
            if errors.is_empty() {
                Ok(text)
            } else {
                Err(Failure::Pipeline(format!("{text}{}", errors.join("\n"))))
            }
        }
        Command::Frame => {
            let f = run_frame(&config)?;
            Ok(match format {
                OutputFormat::Table => {
                    let row = |r: [(f64, f64); 2]| format!("{:+.10e}{:+.10e}i  {:+.10e}{:+.10e}i", r[0].0, r[0].1, r[1].0, r[1].1);
                    format!(
                        "sigma  {}\n       {}\ntau    {}\n       {}\nradii  sigma {:?}  tau {:?}\neps = {:?}  dichotomy {}\n",
                        row(f.sigma[0]),
                        row(f.sigma[1]),
                        row(f.tau[0]),
                        row(f.tau[1]),
                        f.sigma_radius,
                        f.tau_radius,
                        f.epsilon,
                        f.dichotomy_passed
                    )
                }
                _ => json(&f),
            })
        }
    }
}

fn write_out(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => match write_out(&cli, &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_PIPELINE)
            }
        },
        Err(Failure::Validation(m)) => {
            eprintln!("invalid configuration: {m}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Pipeline(m)) => {
            eprintln!("pipeline failure: {m}");
            ExitCode::from(EXIT_PIPELINE)
        }
        Err(Failure::Verify(text)) => {
            let _ = write_out(&cli, &text);
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
