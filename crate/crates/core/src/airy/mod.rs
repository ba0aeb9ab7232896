//! Series oracle for `alpha = 1`: the equation `y'''' = z y`.
//!
//! `y = sum_r c_r z^r f_r(z)` with `f_r(z) = sum_k a_{r,k} z^{5k}`. The
//! distinguished combination `J` decays along the positive real axis, and for
//! `Im lambda > 0` the two square-integrable solutions on `[0, inf)` are
//! `psi_1(x) = J(x + lambda)` and `psi_2(x) = J(omega (x + lambda))` with
//! `omega = exp(-2 pi i / 5)`. The series runs in double-double; [`contour`]
//! evaluates the same `J` from its integral representation in double
//! precision, which stays accurate at arguments where the series cancels.

pub mod contour;
pub mod dd;

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Num, One, Zero};

pub use contour::{airy_frame_contour, recessive_contour};
pub use dd::{DoubleDouble, DD};

use crate::error::{Error, Result};
use crate::riccati::{symmetry_defect, MResult, PathKind};
use crate::{CMat64, C64};

/// Real scalar usable by the series: `f64` for quick checks, [`DD`] for the oracle.
pub trait AiryScalar: Copy + Num + Neg<Output = Self> + PartialOrd + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self;
    fn approx(self) -> f64;
    fn sqrt(self) -> Self;
    /// Decimal literal, parsed at full precision.
    fn lit(s: &str) -> Self;
    /// Unit roundoff.
    fn epsilon() -> f64;
}

impl AiryScalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn approx(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn lit(s: &str) -> Self {
        s.parse().expect("valid literal")
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
}

impl AiryScalar for DD {
    fn of(v: f64) -> Self {
        DD::from_f64(v)
    }
    fn approx(self) -> f64 {
        self.to_f64()
    }
    fn sqrt(self) -> Self {
        DD::sqrt(self)
    }
    fn lit(s: &str) -> Self {
        s.parse().expect("valid literal")
    }
    fn epsilon() -> f64 {
        1.0e-32
    }
}

pub type Cx<S> = Complex<S>;

fn cabs<S: AiryScalar>(z: Cx<S>) -> f64 {
    z.norm_sqr().approx().sqrt()
}

fn cx<S: AiryScalar>(z: C64) -> Cx<S> {
    Cx::new(S::of(z.re), S::of(z.im))
}

fn to_c64<S: AiryScalar>(z: Cx<S>) -> C64 {
    C64::new(z.re.approx(), z.im.approx())
}

/// `Gamma(j/5)` for `j = 1..4`.
const GAMMA_FIFTHS: [&str; 4] = [
    "4.59084371199880305320475827592915200343411",
    "2.21815954375768822305905402190767945077057",
    "1.48919224881281710239433338832134228132060",
    "1.16422971372530337363632093826845869314196",
];

const PI: &str = "3.14159265358979323846264338327950288419717";

/// Default and escalated truncation counts.
pub const TERM_LADDER: [usize; 3] = [20, 40, 80];

/// Relative tail tolerance that triggers escalation.
pub const TAIL_TOL: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryConstants<S> {
    pub c: [S; 4],
    /// `Gamma(j/5)`, `j = 1..4`.
    pub gamma: [S; 4],
    /// `Gamma(-j/5)`, `j = 1..3`.
    pub gamma_neg: [S; 3],
    pub pi: S,
}

fn fifth_root<S: AiryScalar>(v: S) -> S {
    let mut r = S::of(v.approx().powf(0.2));
    for _ in 0..3 {
        let r4 = r * r * r * r;
        r = r - (r4 * r - v) / (S::of(5.0) * r4);
    }
    r
}

/// `sin(pi/5)` and `sin(2 pi/5)` in closed form.
fn sines<S: AiryScalar>() -> (S, S) {
    let five = S::of(5.0);
    let s5 = five.sqrt();
    (((five - s5) / S::of(8.0)).sqrt(), ((five + s5) / S::of(8.0)).sqrt())
}

/// `omega = exp(-2 pi i / 5)`.
pub fn omega<S: AiryScalar>() -> Cx<S> {
    let cos = (S::of(5.0).sqrt() - S::one()) / S::of(4.0);
    Cx::new(cos, -sines::<S>().1)
}

pub fn airy_constants<S: AiryScalar>() -> AiryConstants<S> {
    let g = GAMMA_FIFTHS.map(S::lit);
    let pi = S::lit(PI);
    let (sin1, sin2) = sines::<S>();
    // Gamma(-x) Gamma(1 + x) = -pi / sin(pi x), Gamma(1 + x) = x Gamma(x)
    let neg = |j: f64, gx: S, sx: S| -pi / (sx * (S::of(j) / S::of(5.0)) * gx);
    let gm = [neg(1.0, g[0], sin1), neg(2.0, g[1], sin2), neg(3.0, g[2], sin2)];
    let r = fifth_root(S::of(5.0));
    let r4 = r * r * r * r;
    let c = [
        g[0] * g[1] * g[2],
        gm[0] * g[0] * g[1] / r4,
        gm[1] * gm[0] * g[0] / (r4 * r4),
        gm[2] * gm[1] * gm[0] / (r4 * r4 * r4),
    ];
    AiryConstants { c, gamma: g, gamma_neg: gm, pi }
}

/// `f_r` truncated to `terms` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AirySeries<S> {
    pub r: usize,
    coeffs: Vec<S>,
    /// `ln a_{r,k}` for `k = 0..=terms`, the last being the first dropped term.
    ln_coeffs: Vec<f64>,
}

/// Derivatives `0..=4` of `z^r f_r(z)` with per-order tail estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesValue<S> {
    pub derivs: [Cx<S>; 5],
    /// Magnitude of the first dropped term of each derivative series.
    pub tail: [f64; 5],
    /// Largest term magnitude of each derivative series.
    pub peak: [f64; 5],
}

fn denom(k: usize, r: usize) -> f64 {
    let n = (5 * k + r) as f64;
    n * (n - 1.0) * (n - 2.0) * (n - 3.0)
}

fn falling(n: usize, d: usize) -> f64 {
    (0..d).map(|i| n as f64 - i as f64).product()
}

impl<S: AiryScalar> AirySeries<S> {
    pub fn new(r: usize, terms: usize) -> Result<Self> {
        if r > 3 || terms == 0 {
            return Err(Error::InvalidInput(format!("series index r = {r}, terms = {terms}")));
        }
        let mut coeffs = vec![S::one()];
        let mut ln_coeffs = vec![0.0];
        for k in 1..=terms {
            let d = denom(k, r);
            if k < terms {
                let prev = coeffs[k - 1];
                coeffs.push(prev / S::of(d));
            }
            ln_coeffs.push(ln_coeffs[k - 1] - d.ln());
        }
        Ok(AirySeries { r, coeffs, ln_coeffs })
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, k: usize) -> S {
        self.coeffs[k]
    }

    /// `f_r(z)`.
    pub fn eval_f(&self, z: Cx<S>) -> Cx<S> {
        let z5 = z * z * z * z * z;
        let mut acc = Cx::zero();
        for a in self.coeffs.iter().rev() {
            acc = acc * z5 + Cx::new(*a, S::zero());
        }
        acc
    }

    /// `d^d/dz^d [z^r f_r(z)]` for `d = 0..=4`.
    pub fn eval(&self, z: Cx<S>) -> SeriesValue<S> {
        let r = self.r;
        let mut pows = [Cx::<S>::one(); 10];
        for i in 1..10 {
            pows[i] = pows[i - 1] * z;
        }
        let z5 = pows[5];
        let mut derivs = [Cx::<S>::zero(); 5];
        let mut peak = [0.0f64; 5];
        // k = 0: z^r
        for d in 0..=r.min(4) {
            let t = pows[r - d] * S::of(falling(r, d));
            peak[d] = peak[d].max(cabs(t));
            derivs[d] = derivs[d] + t;
        }
        // k >= 1: a_k z^{5(k-1)} times falling(5k + r, d) z^{5 + r - d}
        let mut w = Cx::<S>::zero();
        for k in 1..self.terms() {
            w = if k == 1 { Cx::new(self.coeffs[1], S::zero()) } else { w * z5 * (S::one() / S::of(denom(k, r))) };
            let n = 5 * k + r;
            for d in 0..5 {
                let t = w * pows[5 + r - d] * S::of(falling(n, d));
                peak[d] = peak[d].max(cabs(t));
                derivs[d] = derivs[d] + t;
            }
        }
        let big_n = self.terms();
        let n = 5 * big_n + r;
        let lnz = cabs(z).ln();
        let tail = std::array::from_fn(|d| {
            if cabs(z) == 0.0 {
                0.0
            } else {
                (self.ln_coeffs[big_n] + falling(n, d).ln() + (n - d) as f64 * lnz).exp()
            }
        });
        SeriesValue { derivs, tail, peak }
    }
}

/// `J^{(d)}(z)` for `d = 0..=4`.
#[derive(Clone, Debug, PartialEq)]
pub struct JValue<S> {
    pub derivs: [Cx<S>; 5],
    /// Tail estimate of each derivative, relative to its value.
    pub rel_tail: [f64; 5],
    /// Largest term over the computed value: roundoff amplification from cancellation.
    pub cancellation: [f64; 5],
}

/// Bundled series and constants for evaluating `J`.
#[derive(Clone, Debug)]
pub struct AiryJ<S> {
    pub constants: AiryConstants<S>,
    pub series: [AirySeries<S>; 4],
}

impl<S: AiryScalar> AiryJ<S> {
    pub fn new(terms: usize) -> Result<Self> {
        let series = [
            AirySeries::new(0, terms)?,
            AirySeries::new(1, terms)?,
            AirySeries::new(2, terms)?,
            AirySeries::new(3, terms)?,
        ];
        Ok(AiryJ { constants: airy_constants(), series })
    }

    pub fn terms(&self) -> usize {
        self.series[0].terms()
    }

    pub fn eval(&self, z: Cx<S>) -> JValue<S> {
        let mut derivs = [Cx::<S>::zero(); 5];
        let mut tail = [0.0f64; 5];
        let mut peak = [0.0f64; 5];
        for (s, c) in self.series.iter().zip(self.constants.c) {
            let v = s.eval(z);
            let ca = c.approx().abs();
            for d in 0..5 {
                derivs[d] = derivs[d] + v.derivs[d] * c;
                tail[d] += ca * v.tail[d];
                peak[d] = peak[d].max(ca * v.peak[d]);
            }
        }
        let rel = |x: f64, d: usize| {
            let m = cabs(derivs[d]);
            if m > 0.0 {
                x / m
            } else if x == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        JValue {
            rel_tail: std::array::from_fn(|d| rel(tail[d], d)),
            cancellation: std::array::from_fn(|d| rel(peak[d], d)),
            derivs,
        }
    }
}

/// `psi_1, psi_2` and their first three derivatives at one `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AiryFrame<S> {
    pub lambda: C64,
    pub x: f64,
    /// `psi[k][d]`: derivative `d` of `psi_{k+1}`.
    pub psi: [[Cx<S>; 4]; 2],
    pub terms: usize,
    /// Largest relative tail over both solutions and all derivative orders.
    pub rel_tail: f64,
    /// Estimated relative roundoff from cancellation in the series.
    pub roundoff: f64,
}

impl<S: AiryScalar> AiryFrame<S> {
    /// Frame as `f64` values.
    pub fn values(&self) -> [[C64; 4]; 2] {
        self.psi.map(|col| col.map(to_c64))
    }

    /// `M = tau sigma^{-1}`, `sigma = (psi, psi')`, `tau = (-psi''', psi'')`.
    pub fn m_extended(&self) -> Result<[[Cx<S>; 2]; 2]> {
        let [p, q] = self.psi;
        let (s00, s01, s10, s11) = (p[0], q[0], p[1], q[1]);
        let (t00, t01, t10, t11) = (-p[3], -q[3], p[2], q[2]);
        let det = s00 * s11 - s01 * s10;
        if det.is_zero() {
            return Err(Error::Singular("oracle sigma(0)".into()));
        }
        let inv = [[s11 / det, -s01 / det], [-s10 / det, s00 / det]];
        let t = [[t00, t01], [t10, t11]];
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| t[i][0] * inv[0][j] + t[i][1] * inv[1][j])))
    }
}

/// Frame at `x` with a fixed number of terms and no escalation.
pub fn airy_frame_with<S: AiryScalar>(lambda: C64, x: f64, terms: usize) -> Result<AiryFrame<S>> {
    if !(lambda.im > 0.0) {
        return Err(Error::InvalidInput(format!("Im lambda must be positive, got {}", lambda.im)));
    }
    let j = AiryJ::<S>::new(terms)?;
    let w = omega::<S>();
    let z = cx::<S>(lambda + x);
    let v1 = j.eval(z);
    let v2 = j.eval(w * z);
    let mut wd = Cx::<S>::one();
    let mut psi2 = [Cx::<S>::zero(); 4];
    for (d, p) in psi2.iter_mut().enumerate() {
        *p = v2.derivs[d] * wd;
        wd = wd * w;
    }
    let psi1 = [v1.derivs[0], v1.derivs[1], v1.derivs[2], v1.derivs[3]];
    let worst = |v: &JValue<S>, f: fn(&JValue<S>) -> &[f64; 5]| f(v)[..4].iter().copied().fold(0.0, f64::max);
    let rel_tail = worst(&v1, |v| &v.rel_tail).max(worst(&v2, |v| &v.rel_tail));
    let cancel = worst(&v1, |v| &v.cancellation).max(worst(&v2, |v| &v.cancellation));
    Ok(AiryFrame { lambda, x, psi: [psi1, psi2], terms, rel_tail, roundoff: cancel * S::epsilon() })
}

/// Frame at `x`, escalating the term count along [`TERM_LADDER`] until the tail is below [`TAIL_TOL`].
pub fn airy_frame(lambda: C64, x: f64) -> Result<AiryFrame<DD>> {
    let mut last = None;
    for terms in TERM_LADDER {
        let f = airy_frame_with::<DD>(lambda, x, terms)?;
        if f.rel_tail <= TAIL_TOL {
            return Ok(f);
        }
        last = Some(f);
    }
    let f = last.expect("non-empty ladder");
    Err(Error::SeriesTail { tail: f.rel_tail, terms: f.terms })
}

/// Oracle spectral matrix with its series diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct AiryM {
    pub m: [[Cx<DD>; 2]; 2],
    pub frame: AiryFrame<DD>,
    pub result: MResult,
}

/// Oracle `M(lambda)` in double-double.
pub fn airy_m_extended(lambda: C64) -> Result<AiryM> {
    let frame = airy_frame(lambda, 0.0)?;
    let m = frame.m_extended()?;
    let mat = CMat64::from_fn(2, |i, j| to_c64(m[i][j]));
    let scale = m.iter().flatten().map(|z| cabs(*z)).fold(0.0, f64::max);
    let defect = cabs(m[0][1] - m[1][0]) / scale;
    let result = MResult {
        symmetry_defect: defect,
        m: mat,
        epsilon: None,
        tol: frame.rel_tail.max(frame.roundoff),
        path: PathKind::Series,
        stats: Default::default(),
    };
    debug_assert!((symmetry_defect(&result.m) - defect).abs() < 1e-12);
    Ok(AiryM { m, frame, result })
}

/// Oracle `M(lambda)` for `alpha = 1`.
pub fn airy_m_matrix(lambda: C64) -> Result<MResult> {
    airy_m_extended(lambda).map(|a| a.result)
}
