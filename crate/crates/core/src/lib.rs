//! Dyadic martingales, Bloch functions and the Beurling transform.
//!
//! The crate is organised around the correspondence between a Bloch function
//! `b` on the upper half-plane and the dyadic martingale `B_I` obtained by
//! averaging `b` over dyadic intervals. The three classical characteristics
//! (asymptotic variance, LIL constant, integral means spectrum) are computed
//! on both sides of the bridge and compared.
//!
//! * [`martingale`]: p-adic martingales, jumps, square functions, local variance.
//! * [`bloch`]: Bloch evaluators and the radial estimators on circles.
//! * [`bridge`]: hyperbolic boxes, the martingale of a Bloch function,
//!   Green's-identity box averages and the transmutation embedding.
//! * [`beltrami`]: Beltrami coefficients, Bergman projection and Beurling transforms.
//! * [`search`]: stochastic search for coefficients with large box averages.
//! * [`clt`]: empirical central limit checks for rescaled boundary values.
//! * [`selftest`]: the acceptance criteria, each with a time budget and a JSON artifact.
//! * [`cli`]: the `blochlab` batch front end.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beltrami;
pub mod bloch;
pub mod bridge;
pub mod cli;
pub mod clt;
pub mod error;
pub mod martingale;
pub mod quadrature;
pub mod search;
pub mod selftest;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectrum::SpectrumEstimate;
