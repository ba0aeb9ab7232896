//! Adaptive Dormand-Prince 5(4) integrator for complex first-order systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; `None` picks one from the interval length.
    pub h_init: Option<T>,
    pub h_min: T,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    /// Equal relative and absolute tolerance `tol`.
    pub fn with_tol(tol: T) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            h_init: None,
            h_min: T::lit(1e-14),
            h_max: T::infinity(),
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub min_step: f64,
    pub max_step: f64,
}

impl OdeStats {
    pub fn merge(&mut self, o: &OdeStats) {
        let first = self.steps == 0;
        self.steps += o.steps;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
        self.min_step = if first { o.min_step } else { self.min_step.min(o.min_step) };
        self.max_step = self.max_step.max(o.max_step);
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn combo<T: Real>(y: &[C<T>], h: T, terms: &[(f64, &[C<T>])]) -> Vec<C<T>> {
    let mut out = y.to_vec();
    for (w, k) in terms {
        let s = h * T::lit(*w);
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o = *o + *ki * s;
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// `f(x, y, dy)` writes the derivative into `dy`. `check(x, y)` runs after
/// every accepted step and may abort the integration.
pub fn integrate<T, F, G>(
    mut f: F,
    x0: T,
    x1: T,
    y0: &[C<T>],
    opts: &OdeOptions<T>,
    mut check: G,
) -> Result<(Vec<C<T>>, OdeStats)>
where
    T: Real,
    F: FnMut(T, &[C<T>], &mut [C<T>]),
    G: FnMut(T, &[C<T>]) -> Result<()>,
{
    let mut stats = OdeStats { min_step: f64::INFINITY, ..Default::default() };
    let mut y = y0.to_vec();
    let span = x1 - x0;
    if span == T::zero() {
        stats.min_step = 0.0;
        return Ok((y, stats));
    }
    let dir = span.signum();
    let n = y.len();
    let mut x = x0;
    let mut h = opts.h_init.unwrap_or_else(|| span.abs() * T::lit(1e-3)).min(opts.h_max).max(opts.h_min);
    let mut k1 = vec![C::new(T::zero(), T::zero()); n];
    f(x, &y, &mut k1);
    stats.evaluations += 1;
    let eval = |f: &mut F, x: T, y: &[C<T>], st: &mut OdeStats| {
        let mut d = vec![C::new(T::zero(), T::zero()); n];
        f(x, y, &mut d);
        st.evaluations += 1;
        d
    };
    let mut factor_prev = T::lit(1e-4);
    while (x1 - x) * dir > T::zero() {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::Integrator(format!("step budget {} exhausted at x = {x}", opts.max_steps)));
        }
        let last = (x + dir * h - x1) * dir >= T::zero();
        let hs = if last { x1 - x } else { dir * h };
        let k2 = eval(&mut f, x + hs * T::lit(C2), &combo(&y, hs, &[(A21, &k1)]), &mut stats);
        let k3 = eval(&mut f, x + hs * T::lit(C3), &combo(&y, hs, &[(A31, &k1), (A32, &k2)]), &mut stats);
        let k4 = eval(&mut f, x + hs * T::lit(C4), &combo(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut stats);
        let k5 = eval(
            &mut f,
            x + hs * T::lit(C5),
            &combo(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut stats,
        );
        let k6 = eval(
            &mut f,
            x + hs,
            &combo(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            &mut stats,
        );
        let y_new = combo(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = eval(&mut f, x + hs, &y_new, &mut stats);

        let mut err = T::zero();
        for i in 0..n {
            let e = (k1[i] * T::lit(E1) + k3[i] * T::lit(E3) + k4[i] * T::lit(E4) + k5[i] * T::lit(E5)
                + k6[i] * T::lit(E6)
                + k7[i] * T::lit(E7))
                * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / sc);
        }
        if !err.is_finite() {
            return Err(Error::Integrator(format!("non-finite state near x = {x}")));
        }
        if err <= T::one() {
            let ha = hs.abs().to_f64().unwrap_or(f64::NAN);
            stats.steps += 1;
            stats.min_step = stats.min_step.min(ha);
            stats.max_step = stats.max_step.max(ha);
            x = if last { x1 } else { x + hs };
            y = y_new;
            k1 = k7;
            check(x, &y)?;
            // PI step-size control
            let fac = T::lit(0.9) * err.max(T::lit(1e-10)).powf(T::lit(-0.7 / 5.0)) * factor_prev.powf(T::lit(0.4 / 5.0));
            factor_prev = err.max(T::lit(1e-4));
            h = (hs.abs() * fac.min(T::lit(5.0)).max(T::lit(0.2))).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = hs.abs() * fac;
        }
        if h < opts.h_min {
            return Err(Error::Integrator(format!("step size underflow ({h}) at x = {x}")));
        }
    }
    if stats.steps == 0 {
        stats.min_step = 0.0;
    }
    Ok((y, stats))
}
