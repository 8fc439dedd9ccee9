//! Bell-CHSH analysis for entangled neutral-meson pairs.
//!
//! Oscillating meson-antimeson pairs let the probe times on each side play the
//! role of analyzer orientations in a Bell test. This crate computes the three
//! standard correlation treatments of the decaying pair (norm-conserving,
//! surviving-amplitude, and survivor-renormalized), maximizes the CHSH
//! combination of four correlations over the measurement times, locates the
//! critical mixing parameter x where a violation first appears, and checks all
//! of it against Monte Carlo pseudo-experiments.
//!
//! Entry points by layer:
//!
//! * [`model`]: physical parameters and the dimensionless reduction (x, y),
//!   plus the catalogue of the four standard systems (B⁰, K⁰, D⁰, B⁰ₛ).
//! * [`correlation`]: the three kernels and the joint outcome-probability
//!   table they derive from.
//! * [`chsh`]: the CHSH functional, deterministic global maximization over
//!   settings, threshold bisection in x, and per-system verdicts.
//! * [`montecarlo`]: reproducible event sampling and statistical estimators.
//! * [`cli`]: the `meson-bell` command-line front end.

pub mod chsh;
pub mod cli;
pub mod correlation;
pub mod error;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
