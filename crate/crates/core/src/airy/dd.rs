//! Double-double real arithmetic (about 32 significant digits).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::str::FromStr;

use num_traits::{Num, One, Zero};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

pub type DD = DoubleDouble;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    pub const fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::zero();
        }
        // one Newton step on the f64 root
        let x = self.hi.sqrt();
        let xx = DD::from_f64(x) * DD::from_f64(x);
        DD::from_f64(x) + (self - xx) / DD::from_f64(2.0 * x)
    }

    pub fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { DD::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = DD::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Real root `self^(1/n)` for positive `self`.
    pub fn nth_root(self, n: i32) -> Self {
        let mut r = DD::from_f64(self.hi.powf(1.0 / n as f64));
        for _ in 0..3 {
            let rn1 = r.powi(n - 1);
            r = r - (rn1 * r - self) / (DD::from_f64(n as f64) * rn1);
        }
        r
    }

    pub fn pi() -> Self {
        DD::new(std::f64::consts::PI, 1.2246467991473532e-16)
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

impl Rem for DD {
    type Output = DD;
    fn rem(self, o: DD) -> DD {
        let q = (self / o).to_f64().trunc();
        self - o * DD::from_f64(q)
    }
}

impl Zero for DD {
    fn zero() -> Self {
        DD::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DD {
    fn one() -> Self {
        DD::from_f64(1.0)
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, o: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            ord => ord,
        }
    }
}

/// Error from parsing a decimal literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDdError(pub String);

impl fmt::Display for ParseDdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid double-double literal: {}", self.0)
    }
}

impl std::error::Error for ParseDdError {}

impl FromStr for DD {
    type Err = ParseDdError;

    /// Parses `[-]digits[.digits][e[-]digits]` without intermediate rounding to `f64`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseDdError(s.to_string());
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (mant, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let mut acc = DD::zero();
        let mut scale = exp;
        let mut seen_dot = false;
        let mut digits = 0;
        for ch in mant.chars() {
            match ch {
                '.' if !seen_dot => seen_dot = true,
                '0'..='9' => {
                    acc = acc * DD::from_f64(10.0) + DD::from_f64((ch as u8 - b'0') as f64);
                    digits += 1;
                    if seen_dot {
                        scale -= 1;
                    }
                }
                _ => return Err(bad()),
            }
        }
        if digits == 0 {
            return Err(bad());
        }
        // positive powers of ten are exact up to 10^45, so divide rather than multiply by 0.1^n
        let p = DD::from_f64(10.0).powi(scale.abs());
        let v = if scale < 0 { acc / p } else { acc * p };
        Ok(if neg { -v } else { v })
    }
}

impl Num for DD {
    type FromStrRadixErr = ParseDdError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, ParseDdError> {
        if radix != 10 {
            return Err(ParseDdError(format!("radix {radix}")));
        }
        s.parse()
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}
