//! Integral representation of the recessive solution.
//!
//! `J(z) = K * int_G t^d exp(z t - t^5 / 5) dt` for `d = 0`, with `G` running
//! from the valley at `arg t = 6 pi / 5` to the valley at `arg t = 4 pi / 5`
//! and `K = -2 pi i 5^{3/10}`. The path goes through the saddle
//! `t_s = -z^{1/4}` along its steepest-descent direction, so the quadrature
//! sees no cancellation where the series loses every digit.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::C64;

use super::{AiryFrame, Cx};

/// Gauss-Legendre degree per panel.
const DEGREE: usize = 20;
/// Panels per path piece.
const PANELS: usize = 40;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let g = GaussLegendre::new(NonZeroUsize::new(DEGREE).expect("nonzero degree"));
        g.nodes().copied().zip(g.weights().copied()).collect()
    })
}

/// `K` in `J = K * int_G exp(z t - t^5 / 5) dt`.
pub fn normalization() -> C64 {
    C64::new(0.0, -2.0 * PI * 5f64.powf(0.3))
}

/// `J^{(d)}(z)` for `d = 0..=4` from the integral.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourValue {
    pub derivs: [C64; 5],
    /// `int |integrand| |dt| / |J|`; roundoff is this times machine epsilon.
    pub cancellation: f64,
}

/// Vertices of the integration path from the lower to the upper valley.
pub fn path(z: C64) -> [C64; 5] {
    let ts = -z.powf(0.25);
    let f2 = -4.0 * ts * ts * ts;
    let phi = (PI - f2.arg()) / 2.0;
    let mut d = C64::from_polar(1.0, phi);
    if d.im < 0.0 {
        d = -d;
    }
    let len = 0.5 * ts.norm() + 0.5;
    let (up, dn) = (ts + d * len, ts - d * len);
    let reach = 6.0 + ts.norm();
    let end_up = up + C64::from_polar(reach, 4.0 * PI / 5.0);
    let end_dn = dn + C64::from_polar(reach, -4.0 * PI / 5.0);
    [end_dn, dn, ts, up, end_up]
}

pub fn recessive_contour(z: C64) -> Result<ContourValue> {
    if !z.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite argument {z}")));
    }
    let nodes = rule();
    let mut sums = [C64::new(0.0, 0.0); 5];
    let mut abs0 = 0.0;
    for w in path(z).windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (b - a) / PANELS as f64;
        for k in 0..PANELS {
            let mid = a + h * (k as f64 + 0.5);
            for (x, wt) in nodes {
                let t = mid + h * (0.5 * x);
                let t2 = t * t;
                let e = (z * t - t2 * t2 * t / 5.0).exp() * (0.5 * wt) * h;
                let mut tp = e;
                for s in sums.iter_mut() {
                    *s += tp;
                    tp *= t;
                }
                abs0 += e.norm();
            }
        }
    }
    let k = normalization();
    let derivs = sums.map(|s| s * k);
    let cancellation = abs0 * k.norm() / derivs[0].norm();
    Ok(ContourValue { derivs, cancellation })
}

/// Frame at `x` from the integral representation, in double precision.
pub fn airy_frame_contour(lambda: C64, x: f64) -> Result<AiryFrame<f64>> {
    if !(lambda.im > 0.0) {
        return Err(Error::InvalidInput(format!("Im lambda must be positive, got {}", lambda.im)));
    }
    let w = C64::from_polar(1.0, -2.0 * PI / 5.0);
    let z = lambda + x;
    let v1 = recessive_contour(z)?;
    let v2 = recessive_contour(w * z)?;
    let psi1: [Cx<f64>; 4] = std::array::from_fn(|d| v1.derivs[d]);
    let psi2: [Cx<f64>; 4] = std::array::from_fn(|d| v2.derivs[d] * w.powu(d as u32));
    Ok(AiryFrame {
        lambda,
        x,
        psi: [psi1, psi2],
        terms: 0,
        rel_tail: 0.0,
        roundoff: v1.cancellation.max(v2.cancellation) * f64::EPSILON,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{airy_frame_with, AiryJ, DD};
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matches_series_where_both_are_accurate() {
        let j = AiryJ::<DD>::new(40).unwrap();
        for z in [c(0.3, 0.0), c(0.0, 1.0), c(2.0, 1.0), c(-1.0, 2.0), c(4.0, -3.0), c(6.0, 0.5)] {
            let s = j.eval(super::super::cx(z));
            let q = recessive_contour(z).unwrap();
            for d in 0..5 {
                let sv = super::super::to_c64(s.derivs[d]);
                assert!((sv - q.derivs[d]).norm() < 1e-12 * sv.norm().max(1e-300), "z={z} d={d}: {sv} vs {}", q.derivs[d]);
            }
            assert!(q.cancellation < 10.0);
        }
    }

    #[test]
    fn solves_the_equation() {
        for z in [c(20.0, 10.0), c(15.0, -8.0), c(0.5, 0.5)] {
            let q = recessive_contour(z).unwrap();
            let res = q.derivs[4] - z * q.derivs[0];
            assert!(res.norm() < 1e-12 * (z * q.derivs[0]).norm());
        }
    }

    #[test]
    fn large_argument_without_cancellation() {
        let q = recessive_contour(c(20.0, 10.0)).unwrap();
        assert!(q.cancellation < 10.0);
        // recessive along the positive axis
        assert!(q.derivs[0].norm() < 1e-10);
    }

    #[test]
    fn frame_matches_series_frame_at_origin() {
        let lam = c(0.5, 1.0);
        let a = airy_frame_contour(lam, 0.0).unwrap().m_extended().unwrap();
        let b = airy_frame_with::<DD>(lam, 0.0, 20).unwrap().m_extended().unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let bv = super::super::to_c64(b[i][k]);
                assert!((a[i][k] - bv).norm() < 1e-12 * bv.norm());
            }
        }
    }
}
