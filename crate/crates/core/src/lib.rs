//! Repeated approximate diagonalization for `y'''' - (lambda + x^alpha) y = 0`.
//!
//! The crate builds the symbolic recurrence of the diagonalization
//! ([`recur`]), realizes it numerically at a point ([`realize`]), bounds the
//! remainder on `[X, inf)` ([`bounds`]), assembles the asymptotic solution
//! frame ([`asymsol`]), integrates the matrix Riccati equation back to the
//! origin ([`riccati`]) and cross-checks `alpha = 1` against a higher-order
//! Airy series oracle ([`airy`]).

pub mod airy;
pub mod asymsol;
pub mod bounds;
pub mod cmat;
pub mod error;
pub mod jet;
pub mod matpoly;
pub mod ncalg;
pub mod ode;
pub mod pipeline;
pub mod realize;
pub mod recur;
pub mod riccati;
pub mod scalar;

pub use cmat::{CMat, CMat64};
pub use error::{Error, Result};
pub use jet::{Jet, MatrixJet};
pub use ncalg::{Atom, NCExpr, Term};
pub use recur::{generate_transcript, Transcript};
pub use scalar::{Real, C};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision scalar jet.
pub type Jet64 = Jet<f64>;
/// Double-precision matrix jet.
pub type MatrixJet64 = MatrixJet<f64>;
/// Single-precision complex matrix.
pub type CMat32 = CMat<f32>;
/// Single-precision scalar jet.
pub type Jet32 = Jet<f32>;
