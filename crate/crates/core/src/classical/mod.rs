//! Classical mechanics of the quadratic operator: Euler–Lagrange
//! boundary-value trajectories, the action, the prefactor data and the
//! unperturbed kernel `p0`.

mod action;
mod bvp;
mod el;
pub mod identities;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use action::{
    extrapolate_along_ray, integrate_lagrangian, leading_action, psi_at_zero, rescaled_momentum,
    ActionForm, ActionResult,
};
pub use bvp::{TrajectoryBundle, FOCAL_CONDITIONING};
pub use el::ElCoefficients;

use crate::error::{Error, Result};
use crate::linalg::{self, CVec, C64};
use crate::model::CoefficientModel;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_STEPS: usize = 256;
pub const DEFAULT_ACTION_NODES: usize = 32;
pub const THETA_NODES: usize = 16;

/// Below this `|t|`, `Ψ` is extrapolated instead of divided by `t`.
pub const PSI_SMALL_T: f64 = 1e-6;

/// Solver for the classical quantities of one coefficient model.
///
/// Boundary-value solutions are memoized by `t` rounded to 12 significant
/// digits; the cache is shared between threads.
#[derive(Debug)]
pub struct Classical {
    model: CoefficientModel,
    el: ElCoefficients,
    steps: usize,
    quad: GaussLegendre,
    theta_quad: GaussLegendre,
    cache: Mutex<HashMap<String, Arc<TrajectoryBundle>>>,
}

impl Classical {
    pub fn new(model: CoefficientModel) -> Self {
        Self::with_steps(model, DEFAULT_STEPS)
    }

    pub fn with_steps(model: CoefficientModel, steps: usize) -> Self {
        Classical {
            el: ElCoefficients::new(&model),
            model,
            steps,
            quad: GaussLegendre::new(DEFAULT_ACTION_NODES),
            theta_quad: GaussLegendre::new(THETA_NODES),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &CoefficientModel {
        &self.model
    }

    pub fn el(&self) -> &ElCoefficients {
        &self.el
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nu(&self) -> usize {
        self.model.nu()
    }

    /// `ε_θ`: below this `|t|` the prefactor function `θ` is extrapolated.
    pub fn theta_epsilon(&self) -> f64 {
        1e-3 * self.model.validity_radius()
    }

    fn key(t: C64) -> String {
        format!("{:.11e}|{:.11e}", t.re, t.im)
    }

    /// Uncached boundary-value solve.
    pub fn solve_bvp(&self, t: C64) -> Result<TrajectoryBundle> {
        self.model.check_radius(t)?;
        TrajectoryBundle::solve(&self.el, t, self.steps)
    }

    /// Memoized boundary-value solve.
    pub fn bundle(&self, t: C64) -> Result<Arc<TrajectoryBundle>> {
        let key = Self::key(t);
        if let Some(b) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(b));
        }
        let b = Arc::new(self.solve_bvp(t)?);
        let mut cache = self.cache.lock().unwrap();
        Ok(Arc::clone(cache.entry(key).or_insert(b)))
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn action_form(&self, t: C64) -> Result<ActionForm> {
        let b = self.bundle(t)?;
        ActionForm::new(&self.model, &b, &self.quad)
    }

    /// `Φ(x, y, t)` by direct quadrature of the Lagrangian along `q̃♮t`.
    pub fn phi(&self, t: C64, x: &CVec, y: &CVec) -> Result<C64> {
        let b = self.bundle(t)?;
        integrate_lagrangian(&self.model, &b, &self.quad, x, y)
    }

    /// `Ψ(t, x, y)`, extrapolated along the ray of `t` when `|t| < 1e−6`.
    pub fn psi(&self, t: C64, x: &CVec, y: &CVec) -> Result<C64> {
        let lead = leading_action(&self.model, x, y);
        let direct = |t: C64| -> Result<C64> { Ok((self.phi(t, x, y)? - lead) / t) };
        if t.norm() < PSI_SMALL_T {
            extrapolate_along_ray(t, self.theta_epsilon(), direct)
        } else {
            direct(t)
        }
    }

    /// `γ(t) = Tr(A(t)B(t))`.
    pub fn gamma(&self, t: C64) -> Result<C64> {
        let co = self.model.eval_coefficients(t)?;
        Ok((co.a * co.b).trace())
    }

    /// `θ(t) = −(A(t)·∂²ₓΦ − ν/2)/t + γ(t)` evaluated without extrapolation.
    pub fn theta_direct(&self, t: C64) -> Result<C64> {
        if t.norm() == 0.0 {
            return Err(Error::Cancellation { t });
        }
        let form = self.action_form(t)?;
        let a = self.model.a().eval(t);
        let defect = linalg::contract(&a, &form.hessian_xx()) - self.nu() as f64 / 2.0;
        if defect.norm() < 1e-13 && t.norm() < self.theta_epsilon() {
            return Err(Error::Cancellation { t });
        }
        Ok(-defect / t + self.gamma(t)?)
    }

    /// `θ(t)`, direct for `|t| ≥ ε_θ`, otherwise extrapolated quadratically
    /// from `{2ε_θ, 4ε_θ, 8ε_θ}` along the ray of `t`.
    pub fn theta(&self, t: C64) -> Result<C64> {
        let eps = self.theta_epsilon();
        if t.norm() >= eps {
            self.theta_direct(t)
        } else {
            extrapolate_along_ray(t, 2.0 * eps, |u| self.theta_direct(u))
        }
    }

    pub fn gamma_theta(&self, t: C64) -> Result<(C64, C64)> {
        Ok((self.gamma(t)?, self.theta(t)?))
    }

    /// `t² ∫₀¹ θ(ts) ds` by 16-node Gauss–Legendre.
    pub fn theta_integral(&self, t: C64) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for (s, w) in self.theta_quad.on(0.0, 1.0) {
            total += self.theta(t * s)? * w;
        }
        Ok(total * t * t)
    }

    pub fn action(&self, t: C64, x: &CVec, y: &CVec) -> Result<ActionResult> {
        let phi = self.phi(t, x, y)?;
        let psi = self.psi(t, x, y)?;
        let theta_integral = self.theta_integral(t)?;
        Ok(ActionResult {
            phi,
            psi,
            phi0: phi - theta_integral,
            theta_integral,
        })
    }

    /// All `x, y`-independent data of `p0` at one `t`.
    pub fn unperturbed(&self, t: C64) -> Result<UnperturbedKernel> {
        if t.norm() == 0.0 {
            return Err(Error::UndefinedAtZero);
        }
        let form = self.action_form(t)?;
        let theta_integral = self.theta_integral(t)?;
        let delta = self.model.delta();
        let nu = self.nu() as f64;
        let log_prefactor = -(nu / 2.0) * (t * (4.0 * std::f64::consts::PI * delta)).ln();
        Ok(UnperturbedKernel {
            t,
            form,
            theta_integral,
            log_prefactor,
        })
    }

    /// `p0t(x, y) = (4πΔt)^{−ν/2} e^{−Φ₀/t}`.
    pub fn p0(&self, t: C64, x: &CVec, y: &CVec) -> Result<C64> {
        Ok(self.unperturbed(t)?.eval(x, y))
    }
}

/// `p0t(x, y)` at fixed `t` for any `(x, y)`.
#[derive(Clone, Debug)]
pub struct UnperturbedKernel {
    t: C64,
    form: ActionForm,
    theta_integral: C64,
    log_prefactor: C64,
}

impl UnperturbedKernel {
    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn form(&self) -> &ActionForm {
        &self.form
    }

    pub fn theta_integral(&self) -> C64 {
        self.theta_integral
    }

    /// `Φ₀(x, y, t)`.
    pub fn phi0(&self, x: &CVec, y: &CVec) -> C64 {
        self.form.phi(x, y) - self.theta_integral
    }

    /// `log p0` on the principal branch.
    pub fn log_eval(&self, x: &CVec, y: &CVec) -> C64 {
        self.log_prefactor - self.phi0(x, y) / self.t
    }

    pub fn eval(&self, x: &CVec, y: &CVec) -> C64 {
        self.log_eval(x, y).exp()
    }
}
