use crate::classical::bvp::TrajectoryBundle;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::model::CoefficientModel;
use crate::quadrature::GaussLegendre;

/// The action `Φ(x, y, t)` as the quadratic form `zᵀ M z` in `z = (x, y)`.
///
/// `M = ∫₀¹ ¼ ĠᵀA⁻¹(ts)Ġ + t ĠᵀB(ts)G + t² GᵀC(ts)G ds` with
/// `G = [q̃♭ q̃♯]`, symmetrised.
#[derive(Clone, Debug)]
pub struct ActionForm {
    t: C64,
    nu: usize,
    m: CMat,
}

impl ActionForm {
    pub fn new(model: &CoefficientModel, bundle: &TrajectoryBundle, quad: &GaussLegendre) -> Result<Self> {
        let nu = bundle.nu();
        let t = bundle.t();
        let mut m = linalg::zeros(2 * nu, 2 * nu);
        let mut g = linalg::zeros(nu, 2 * nu);
        let mut dg = linalg::zeros(nu, 2 * nu);
        for (s, w) in quad.on(0.0, 1.0) {
            let ts = t * s;
            let co = model.eval_coefficients(ts)?;
            let a_inv = linalg::inverse(&co.a).ok_or(Error::SingularCoefficient { t: ts })?;
            g.view_mut((0, 0), (nu, nu)).copy_from(&bundle.q_flat(s));
            g.view_mut((0, nu), (nu, nu)).copy_from(&bundle.q_sharp(s));
            dg.view_mut((0, 0), (nu, nu)).copy_from(&bundle.q_flat_deriv(s));
            dg.view_mut((0, nu), (nu, nu)).copy_from(&bundle.q_sharp_deriv(s));
            let dgt = dg.transpose();
            let integrand = &dgt * (a_inv * C64::new(0.25, 0.0)) * &dg
                + &dgt * (co.b * t) * &g
                + g.transpose() * (co.c * (t * t)) * &g;
            m += integrand * C64::new(w, 0.0);
        }
        let m = (&m + m.transpose()) * C64::new(0.5, 0.0);
        Ok(ActionForm { t, nu, m })
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn phi(&self, x: &CVec, y: &CVec) -> C64 {
        let nu = self.nu;
        let mut total = C64::new(0.0, 0.0);
        for i in 0..2 * nu {
            let zi = if i < nu { x[i] } else { y[i - nu] };
            for j in 0..2 * nu {
                let zj = if j < nu { x[j] } else { y[j - nu] };
                total += zi * self.m[(i, j)] * zj;
            }
        }
        total
    }

    /// `∂²Φ/∂x∂x`, independent of `(x, y)`.
    pub fn hessian_xx(&self) -> CMat {
        self.m.view((0, 0), (self.nu, self.nu)).clone_owned() * C64::new(2.0, 0.0)
    }

    /// `∂Φ/∂x`.
    pub fn grad_x(&self, x: &CVec, y: &CVec) -> CVec {
        let nu = self.nu;
        let mxx = self.m.view((0, 0), (nu, nu));
        let mxy = self.m.view((0, nu), (nu, nu));
        (mxx * x + mxy * y) * C64::new(2.0, 0.0)
    }
}

/// `Φ = ∫₀¹ L̃ ds` along `q̃♮t`, integrated directly with the given rule.
pub fn integrate_lagrangian(
    model: &CoefficientModel,
    bundle: &TrajectoryBundle,
    quad: &GaussLegendre,
    x: &CVec,
    y: &CVec,
) -> Result<C64> {
    let t = bundle.t();
    let mut total = C64::new(0.0, 0.0);
    for (s, w) in quad.on(0.0, 1.0) {
        let ts = t * s;
        let co = model.eval_coefficients(ts)?;
        let a_inv = linalg::inverse(&co.a).ok_or(Error::SingularCoefficient { t: ts })?;
        let q = bundle.qnat(x, y, s);
        let dq = bundle.qnat_deriv(x, y, s);
        let l = linalg::dot(&dq, &(a_inv * &dq)) * 0.25
            + t * linalg::dot(&dq, &(&co.b * &q))
            + t * t * linalg::dot(&q, &(&co.c * &q));
        total += l * w;
    }
    Ok(total)
}

/// Rescaled momentum `p̃(s) = ½A⁻¹(ts) q̃′(s) + t B(ts) q̃(s) = t·p(ts)`.
pub fn rescaled_momentum(
    model: &CoefficientModel,
    bundle: &TrajectoryBundle,
    x: &CVec,
    y: &CVec,
    s: f64,
) -> Result<CVec> {
    let t = bundle.t();
    let ts = t * s;
    let co = model.eval_coefficients(ts)?;
    let a_inv = linalg::inverse(&co.a).ok_or(Error::SingularCoefficient { t: ts })?;
    let q = bundle.qnat(x, y, s);
    let dq = bundle.qnat_deriv(x, y, s);
    Ok(a_inv * dq * C64::new(0.5, 0.0) + co.b * q * t)
}

/// Action-related scalars at one `(x, y, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionResult {
    /// `Φ(x, y, t)`.
    pub phi: C64,
    /// `Ψ = (Φ − ¼A⁻¹(0)·(x − y)⊗(x − y)) / t`.
    pub psi: C64,
    /// `Φ₀ = Φ − t²∫₀¹θ(ts)ds`.
    pub phi0: C64,
    /// `t²∫₀¹θ(ts)ds`.
    pub theta_integral: C64,
}

/// `¼A⁻¹(0)·(x − y)⊗(x − y)`, the leading term of `Φ` as `t → 0`.
pub fn leading_action(model: &CoefficientModel, x: &CVec, y: &CVec) -> C64 {
    let a0 = model.a().eval(C64::new(0.0, 0.0));
    let inv = linalg::inverse(&a0).expect("A(0) is positive definite");
    let d = x - y;
    linalg::dot(&d, &(inv * &d)) * 0.25
}

/// Closed form of `Ψ(0, x, y) = ⅛(A⁻¹)′(0)·(x−y)⊗(x−y) + (x−y)·B(0)(x+y)/2`.
pub fn psi_at_zero(model: &CoefficientModel, x: &CVec, y: &CVec) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let a0 = model.a().eval(zero);
    let inv = linalg::inverse(&a0).expect("A(0) is positive definite");
    let da = model.a().derivative().eval(zero);
    let dinv = -(&inv * da * &inv);
    let d = x - y;
    let sum = x + y;
    linalg::dot(&d, &(dinv * &d)) * 0.125 + linalg::dot(&d, &(model.b().eval(zero) * sum)) * 0.5
}

/// Quadratic extrapolation of `f` along the ray of `t` from the radii
/// `{h, 2h, 4h}` to `|t|`.
pub fn extrapolate_along_ray<F>(t: C64, h: f64, mut f: F) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let r = t.norm();
    let dir = if r > 0.0 { t / r } else { C64::new(1.0, 0.0) };
    let rs = [h, 2.0 * h, 4.0 * h];
    let mut vals = [C64::new(0.0, 0.0); 3];
    for (v, &ri) in vals.iter_mut().zip(rs.iter()) {
        *v = f(dir * ri)?;
    }
    let mut out = C64::new(0.0, 0.0);
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if i != j {
                l *= (r - rs[j]) / (rs[i] - rs[j]);
            }
        }
        out += vals[i] * l;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::el::ElCoefficients;
    use crate::linalg::{c, real_vec};

    #[test]
    fn extrapolation_is_exact_for_quadratics() {
        let f = |t: C64| Ok(c(1.0) + t * 3.0 - t * t * 2.0);
        let t = C64::new(1e-5, -2e-5);
        let v = extrapolate_along_ray(t, 1e-3, f).unwrap();
        assert!((v - f(t).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn form_and_direct_integration_agree() {
        let model = CoefficientModel::harmonic(2, 1.5);
        let quad = GaussLegendre::new(32);
        let b = TrajectoryBundle::solve(&ElCoefficients::new(&model), C64::new(0.2, 0.1), 256).unwrap();
        let form = ActionForm::new(&model, &b, &quad).unwrap();
        let x = real_vec(&[0.3, -0.8]);
        let y = real_vec(&[1.1, 0.2]);
        let direct = integrate_lagrangian(&model, &b, &quad, &x, &y).unwrap();
        assert!((form.phi(&x, &y) - direct).norm() < 1e-13);
    }
}
