use thiserror::Error;

use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("t = {t} lies outside the validity radius {radius}")]
    OutOfRadius { t: C64, radius: f64 },

    #[error("coefficient matrix A is numerically singular at t = {t}")]
    SingularCoefficient { t: C64 },

    /// The boundary matrix `V(1)` of the shooting problem is singular or badly
    /// conditioned: `t` lies outside the unique-solvability radius.
    #[error("focal point: boundary matrix conditioning {conditioning:.3e} at t = {t} (t outside T̄)")]
    FocalPoint { t: C64, conditioning: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point mass at s = {s} lies on the boundary of [0, 1]")]
    BoundaryMass { s: f64 },

    #[error("order {order} needs {required:.3e} integrand evaluations, budget is {budget}")]
    Budget { order: usize, required: f64, budget: u64 },

    #[error("the unperturbed kernel is undefined at t = 0")]
    UndefinedAtZero,

    #[error("cancellation alarm evaluating θ at t = {t}")]
    Cancellation { t: C64 },

    #[error("adaptive quadrature reached estimate {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    #[error("Crank–Nicolson evolution diverged at step {step} (norm growth {growth:.3e})")]
    Diverged { step: usize, growth: f64 },

    #[error("problem definition: {0}")]
    Problem(String),
}

impl Error {
    /// True for errors that signal the usable time radius has been exceeded.
    pub fn is_radius_error(&self) -> bool {
        matches!(self, Error::OutOfRadius { .. } | Error::FocalPoint { .. })
    }
}
