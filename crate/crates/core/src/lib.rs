//! Heat and Schrödinger kernels of time-dependent quadratic operators
//! `P0 = A(t)·(∂x + B(t)x)² − C(t)·x⊗x` perturbed by a matrix-valued
//! trigonometric potential, evaluated through a deformation series.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: coefficient functions `A, B, C` and the Fourier potential.
//! * [`classical`]: Euler–Lagrange boundary-value trajectories, the action,
//!   the unperturbed kernel `p0` and the classical identities as residuals.
//! * [`deformation`]: the deformation matrix `K̃t(s, s′)`, its quadratic
//!   form, propagator residuals and positivity bounds.
//! * [`series`]: the series terms `vn`, the certified truncation majorant,
//!   the assembled kernel `p = p0 · pconj` and its PDE residual.
//! * [`oracles`]: independent reference computations (closed forms,
//!   Crank–Nicolson evolution, adaptive quadrature, Green's functions).

pub mod classical;
pub mod deformation;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod problem;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
