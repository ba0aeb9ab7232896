//! Backward integration of the frame to `x = 0` and the spectral matrix.
//!
//! The Riccati path carries `xi = sigma tau^{-1}` from `X` to 0 and returns
//! `M = xi(0)^{-1}`. The linear path integrates `y'''' = Q y` for both frame
//! columns with periodic re-orthonormalization and returns
//! `M = tau(0) sigma(0)^{-1}`; the two are independent cross-checks.

use serde::{Deserialize, Serialize};

use crate::asymsol::SolutionFrame;
use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::{CMat64, C64};

/// Which integration produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Riccati,
    Linear,
    /// Series oracle (no integration).
    Series,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiccatiState {
    pub x: f64,
    pub xi: CMat64,
    pub stats: OdeStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MResult {
    pub m: CMat64,
    /// `|m_12 - m_21| / max |m_ij|`.
    pub symmetry_defect: f64,
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub path: PathKind,
    pub stats: OdeStats,
}

/// Norm cap on `xi`; beyond it the Riccati path is treated as hitting a pole.
pub const XI_CAP: f64 = 1e8;

fn potential(alpha: f64, lambda: C64, x: f64) -> C64 {
    lambda + x.max(0.0).powf(alpha)
}

/// `B1 xi + B2 - xi C1 xi - xi C2` for the matrix Riccati equation of `sigma tau^{-1}`.
pub fn riccati_rhs(xi: &CMat64, q: C64) -> CMat64 {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let b1 = CMat::from_rows(&[vec![z, one], vec![z, z]]);
    let b2 = CMat::from_rows(&[vec![z, z], vec![z, one]]);
    let c1 = CMat::from_rows(&[vec![-q, z], vec![z, z]]);
    let c2 = CMat::from_rows(&[vec![z, z], vec![-one, z]]);
    let lin = &(&b1 * xi) + &b2;
    let quad = &(&(xi * &c1) * xi) + &(xi * &c2);
    &lin - &quad
}

pub(crate) fn symmetry_defect(m: &CMat64) -> f64 {
    (m[(0, 1)] - m[(1, 0)]).norm() / m.max_abs()
}

/// Carries `xi = sigma tau^{-1}` from `X` to 0.
pub fn integrate_riccati(frame: &SolutionFrame, tol: f64) -> Result<RiccatiState> {
    let tau_inv = frame.tau.inverse().ok_or_else(|| Error::Singular("tau(X)".into()))?;
    let xi0 = &frame.sigma * &tau_inv;
    integrate_riccati_from(frame.alpha, frame.lambda, frame.x_large, &xi0, 0.0, tol)
}

/// Carries `xi` from `x_from` to `x_to`.
pub fn integrate_riccati_from(alpha: f64, lambda: C64, x_from: f64, xi0: &CMat64, x_to: f64, tol: f64) -> Result<RiccatiState> {
    let y0: Vec<C64> = xi0.as_slice().to_vec();
    let opts = OdeOptions::with_tol(tol);
    let (y, stats) = integrate(
        |x, y, d| {
            let xi = CMat::from_fn(2, |i, j| y[2 * i + j]);
            let r = riccati_rhs(&xi, potential(alpha, lambda, x));
            d.copy_from_slice(r.as_slice());
        },
        x_from,
        x_to,
        &y0,
        &opts,
        |x, y| {
            let norm = y.iter().fold(0.0f64, |a, v| a.max(v.norm()));
            if norm > XI_CAP {
                Err(Error::Integrator(format!("Riccati variable exceeds {XI_CAP:e} near x = {x:.4}")))
            } else {
                Ok(())
            }
        },
    )?;
    Ok(RiccatiState { x: x_to, xi: CMat::from_fn(2, |i, j| y[2 * i + j]), stats })
}

/// Length of the segments between re-orthonormalizations on the linear path.
const SEGMENT: f64 = 0.5;

fn orthonormalize(cols: &mut [[C64; 4]; 2]) {
    let norm = |v: &[C64; 4]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&cols[0]);
    for z in cols[0].iter_mut() {
        *z /= n0;
    }
    let proj: C64 = (0..4).map(|i| cols[0][i].conj() * cols[1][i]).sum();
    for i in 0..4 {
        let c0 = cols[0][i];
        cols[1][i] -= c0 * proj;
    }
    let n1 = norm(&cols[1]);
    for z in cols[1].iter_mut() {
        *z /= n1;
    }
}

/// Frame at 0 from the linear system `y'''' = Q y`, both columns at once.
///
/// Columns are re-orthonormalized every [`SEGMENT`]; `M` is invariant under
/// the implied right multiplication by a constant 2x2 matrix.
pub fn integrate_linear_oracle(frame: &SolutionFrame, tol: f64) -> Result<(CMat64, CMat64, OdeStats)> {
    let mut cols = [frame.column(0), frame.column(1)];
    let (alpha, lambda) = (frame.alpha, frame.lambda);
    let opts = OdeOptions::with_tol(tol);
    let mut stats = OdeStats::default();
    let mut x = frame.x_large;
    orthonormalize(&mut cols);
    while x > 0.0 {
        let x_next = (x - SEGMENT).max(0.0);
        let y0: Vec<C64> = cols.iter().flatten().copied().collect();
        let (y, st) = integrate(
            |t, y, d| {
                let q = potential(alpha, lambda, t);
                for c in 0..2 {
                    let o = 4 * c;
                    d[o] = y[o + 1];
                    d[o + 1] = y[o + 2];
                    d[o + 2] = y[o + 3];
                    d[o + 3] = q * y[o];
                }
            },
            x,
            x_next,
            &y0,
            &opts,
            |_, _| Ok(()),
        )?;
        stats.merge(&st);
        for c in 0..2 {
            cols[c].copy_from_slice(&y[4 * c..4 * c + 4]);
        }
        orthonormalize(&mut cols);
        x = x_next;
    }
    let sigma = CMat::from_rows(&[vec![cols[0][0], cols[1][0]], vec![cols[0][1], cols[1][1]]]);
    let tau = CMat::from_rows(&[vec![-cols[0][3], -cols[1][3]], vec![cols[0][2], cols[1][2]]]);
    Ok((sigma, tau, stats))
}

/// `M = xi(0)^{-1}`.
pub fn m_from_riccati(state: &RiccatiState, tol: f64, epsilon: Option<f64>) -> Result<MResult> {
    let m = state.xi.inverse().ok_or_else(|| Error::Singular("xi(0)".into()))?;
    Ok(MResult { symmetry_defect: symmetry_defect(&m), m, epsilon, tol, path: PathKind::Riccati, stats: state.stats })
}

/// `M = tau(0) sigma(0)^{-1}`.
pub fn m_from_frame(sigma: &CMat64, tau: &CMat64, tol: f64, epsilon: Option<f64>, stats: OdeStats) -> Result<MResult> {
    let s_inv = sigma.inverse().ok_or_else(|| Error::Singular("sigma(0)".into()))?;
    let m = tau * &s_inv;
    Ok(MResult { symmetry_defect: symmetry_defect(&m), m, epsilon, tol, path: PathKind::Linear, stats })
}

/// Spectral matrix from a frame: the Riccati path, or the linear path if it hits a pole.
pub fn m_matrix(frame: &SolutionFrame, tol: f64) -> Result<MResult> {
    let eps = frame.epsilon.epsilon;
    match integrate_riccati(frame, tol) {
        Ok(state) => m_from_riccati(&state, tol, eps),
        Err(Error::Integrator(_)) | Err(Error::Singular(_)) => {
            let (s, t, st) = integrate_linear_oracle(frame, tol)?;
            m_from_frame(&s, &t, tol, eps, st)
        }
        Err(e) => Err(e),
    }
}

/// Neumann spectral matrix `M_N = -M_D^{-1}`.
pub fn neumann_from_dirichlet(m: &CMat64) -> Result<CMat64> {
    Ok(-&m.inverse().ok_or_else(|| Error::Singular("Dirichlet matrix".into()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rhs_at_identity_and_zero() {
        let r = riccati_rhs(&CMat::identity(2), c(0.0, 0.0));
        let expect = CMat::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]]);
        assert!(r.max_abs_diff(&expect) < 1e-16);
        let r0 = riccati_rhs(&CMat::zeros(2), c(3.0, 1.0));
        let b2 = CMat::from_rows(&[vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        assert!(r0.max_abs_diff(&b2) < 1e-16);
    }

    #[test]
    fn neumann_involution() {
        let m = CMat::identity(2).scale(c(0.0, 1.0));
        assert!(neumann_from_dirichlet(&m).unwrap().max_abs_diff(&m) < 1e-16);
        let a = CMat::from_rows(&[vec![c(1.0, 2.0), c(0.3, 0.1)], vec![c(0.3, 0.1), c(-1.0, 0.5)]]);
        let back = neumann_from_dirichlet(&neumann_from_dirichlet(&a).unwrap()).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn zero_length_riccati_is_identity() {
        let xi = CMat::from_rows(&[vec![c(1.0, 2.0), c(0.3, 0.1)], vec![c(0.2, 0.1), c(-1.0, 0.5)]]);
        let s = integrate_riccati_from(1.0, c(0.0, 1.0), 5.0, &xi, 5.0, 1e-10).unwrap();
        assert_eq!(s.xi, xi);
    }

    #[test]
    fn constant_potential_closed_form() {
        // Q = lambda: the decaying solutions are exp(mu x) with mu^4 = lambda, Re mu < 0.
        let lam = c(0.3, 1.2);
        let roots: Vec<C64> = (0..4).map(|k| lam.powf(0.25) * C64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * k as f64)).collect();
        let mut dec: Vec<C64> = roots.into_iter().filter(|m| m.re < 0.0).collect();
        dec.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let (m1, m2) = (dec[0], dec[1]);
        // sigma = [[1,1],[m1,m2]], tau = [[-m1^3, -m2^3],[m1^2, m2^2]] at any x, after column scaling
        let sigma = CMat::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![m1, m2]]);
        let tau = CMat::from_rows(&[vec![-m1 * m1 * m1, -m2 * m2 * m2], vec![m1 * m1, m2 * m2]]);
        let xi0 = &sigma * &tau.inverse().unwrap();
        // integrate Riccati with Q = lambda (alpha -> huge makes x^alpha vanish on [0, 1))
        let s = integrate_riccati_from(200.0, lam, 0.9, &xi0, 0.0, 1e-11).unwrap();
        let m = s.xi.inverse().unwrap();
        let exact = &tau * &sigma.inverse().unwrap();
        assert!(m.max_abs_diff(&exact) < 1e-8 * exact.max_abs());
        // m12 = m21 for this closed form as well
        assert!(symmetry_defect(&exact) < 1e-12);
    }
}
