//! Asymptotic solution frame at the anchor point `X`.
//!
//! At `x = X` the exponential factor of the asymptotic solutions is 1, so
//! column `k` of the 4-vector `(y, y', y'', y''')` is
//! `dg(1, Q^{1/4}, Q^{1/2}, Q^{3/4}) Omega (I + P) e_k`, with
//! `I + P = prod_{m=1}^{M-1} (I + P_m)`.

use serde::Serialize;

use crate::bounds::{check_dichotomy, epsilon_of_x, DichotomyReport, EpsilonReport};
use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::realize::{make_context, BaseMatrices, Evaluator, JetAlgebra};
use crate::recur::Transcript;
use crate::{CMat64, C64};

/// Columns of the frame: `omega_2 = i` and `omega_3 = -1` (0-based 1 and 2).
pub const L2_COLUMNS: [usize; 2] = [1, 2];

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFrame {
    pub alpha: f64,
    pub lambda: C64,
    pub x_large: f64,
    pub depth: u32,
    /// Rows `(psi, psi')`, columns the two square-integrable solutions.
    pub sigma: CMat64,
    /// Rows `(-psi''', psi'')`.
    pub tau: CMat64,
    /// Error radius per row of `sigma` (same for both columns).
    pub sigma_radius: [f64; 2],
    /// Error radius per row of `tau`.
    pub tau_radius: [f64; 2],
    /// `dg(1, Q^{1/4}, Q^{1/2}, Q^{3/4}) Omega (I + P)`.
    pub full: CMat64,
    pub epsilon: EpsilonReport,
    pub dichotomy: DichotomyReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameSummary {
    pub sigma: [[(f64, f64); 2]; 2],
    pub tau: [[(f64, f64); 2]; 2],
    pub sigma_radius: [f64; 2],
    pub tau_radius: [f64; 2],
    pub epsilon: Option<f64>,
    pub dichotomy_passed: bool,
}

impl SolutionFrame {
    /// Derivative rows `(y, y', y'', y''')` of frame column `c` (0 or 1).
    pub fn column(&self, c: usize) -> [C64; 4] {
        let k = L2_COLUMNS[c];
        [self.full[(0, k)], self.full[(1, k)], self.full[(2, k)], self.full[(3, k)]]
    }

    pub fn summary(&self) -> FrameSummary {
        let pairs = |m: &CMat64| [[(m[(0, 0)].re, m[(0, 0)].im), (m[(0, 1)].re, m[(0, 1)].im)], [(m[(1, 0)].re, m[(1, 0)].im), (m[(1, 1)].re, m[(1, 1)].im)]];
        FrameSummary {
            sigma: pairs(&self.sigma),
            tau: pairs(&self.tau),
            sigma_radius: self.sigma_radius,
            tau_radius: self.tau_radius,
            epsilon: self.epsilon.epsilon,
            dichotomy_passed: self.dichotomy.passed,
        }
    }
}

/// `prod_{m=1}^{M-1} (I + P_m)` at `x`, in level order.
pub fn transfer_product(alpha: f64, lambda: C64, x: f64, transcript: &Transcript) -> Result<CMat64> {
    let ctx = make_context(alpha, lambda, x, transcript.depth() as usize + 2)?;
    let mut ev = Evaluator::new(JetAlgebra::new(ctx), transcript);
    Ok(ev.transfer_product()?.value().clone())
}

/// `dg(1, Q^{1/4}, Q^{1/2}, Q^{3/4}) Omega (I + P)` at `x`.
pub fn frame_matrix(alpha: f64, lambda: C64, x: f64, transcript: &Transcript) -> Result<CMat64> {
    let ctx = make_context(alpha, lambda, x, transcript.depth() as usize + 2)?;
    let q4 = ctx.q_root.value();
    let scale = CMat::diagonal(&[C64::new(1.0, 0.0), q4, q4 * q4, q4 * q4 * q4]);
    let base = BaseMatrices::<f64>::new(4);
    let ip = transfer_product(alpha, lambda, x, transcript)?;
    Ok(&(&scale * &base.omega_mat) * &ip)
}

/// Frame of the two square-integrable solutions at `x = X`.
pub fn solution_frame(alpha: f64, lambda: C64, x_large: f64, transcript: &Transcript) -> Result<SolutionFrame> {
    if !(lambda.im > 0.0) {
        return Err(Error::InvalidInput(format!("Im lambda must be positive, got {}", lambda.im)));
    }
    if !(x_large > 1.0) {
        return Err(Error::InvalidInput(format!("X must exceed 1, got {x_large}")));
    }
    let mut epsilon = epsilon_of_x(alpha, lambda, x_large, transcript).map_err(|e| e.at("bounds"))?;
    let dichotomy = check_dichotomy(alpha, lambda, x_large, transcript, (x_large, 100.0 * x_large, 60))?;
    epsilon.dichotomy = Some(dichotomy.clone());
    let eps = epsilon
        .epsilon
        .ok_or_else(|| Error::InvalidBound(format!("n I = {:e} >= 1 at X = {x_large}", 4.0 * epsilon.integral)))?;
    let full = frame_matrix(alpha, lambda, x_large, transcript)?;
    let row_l1: Vec<f64> = (0..4).map(|r| (0..4).map(|j| full[(r, j)].norm()).sum::<f64>() * eps).collect();
    let [c0, c1] = L2_COLUMNS;
    let sigma = CMat::from_rows(&[vec![full[(0, c0)], full[(0, c1)]], vec![full[(1, c0)], full[(1, c1)]]]);
    let tau = CMat::from_rows(&[vec![-full[(3, c0)], -full[(3, c1)]], vec![full[(2, c0)], full[(2, c1)]]]);
    Ok(SolutionFrame {
        alpha,
        lambda,
        x_large,
        depth: transcript.depth(),
        sigma,
        tau,
        sigma_radius: [row_l1[0], row_l1[1]],
        tau_radius: [row_l1[3], row_l1[2]],
        full,
        epsilon,
        dichotomy,
    })
}
