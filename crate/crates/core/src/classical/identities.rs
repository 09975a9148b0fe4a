//! Classical identities of the action and trajectories, exposed as
//! finite-difference residuals.

use serde::Serialize;

use crate::classical::Classical;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::model::{CoefficientModel, FourierPotential};

/// Fourth-order central first-derivative weights at offsets `−2, −1, 1, 2`.
const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
/// Fourth-order central second-derivative weights at offsets `−2..=2`.
const D2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

/// `∂f/∂t` by the fourth-order central stencil with step `h`.
pub fn central_derivative<T, F>(mut f: F, h: f64) -> Result<T>
where
    F: FnMut(f64) -> Result<T>,
    T: std::ops::Mul<C64, Output = T> + std::ops::Add<Output = T>,
{
    let mut acc: Option<T> = None;
    for (o, w) in D1 {
        let term = f(o * h)? * C64::new(w / h, 0.0);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(acc.unwrap())
}

/// `S = Φ/t` satisfies `∂ₜS + H(x, ∂ₓS) = 0` with
/// `H(q, p) = A·(p − Bq)⊗(p − Bq) − C·q⊗q`; returns `|∂ₜS + H|`.
///
/// Both derivatives are central differences (relative step 1e−5).
pub fn eikonal_residual(cl: &Classical, t: f64, x: &CVec, y: &CVec) -> Result<f64> {
    let nu = cl.nu();
    let s = |tt: f64, xx: &CVec| -> Result<C64> { Ok(cl.phi(C64::new(tt, 0.0), xx, y)? / tt) };
    let ht = 1e-5 * t;
    let ds_dt = central_derivative(|o| s(t + o, x), ht)?;
    let hx = 1e-5 * (1.0 + linalg::vnorm(x));
    let mut grad = CVec::zeros(nu);
    for j in 0..nu {
        grad[j] = central_derivative(
            |o| {
                let mut xs = x.clone();
                xs[j] += o;
                s(t, &xs)
            },
            hx,
        )?;
    }
    let co = cl.model().eval_coefficients(C64::new(t, 0.0))?;
    let r = grad - &co.b * x;
    let h = linalg::dot(&r, &(&co.a * &r)) - linalg::dot(x, &(&co.c * x));
    Ok((ds_dt + h).norm())
}

/// `sup_σ |W(σ) − W(0)|` with `W = ᵀq p − ᵀp q` along `q = q♭t`,
/// `p = ½A⁻¹q̇ + Bq`, sampled at `samples + 1` points of the rescaled time.
/// Also returns `|W(0)|`.
pub fn symplectic_residual(cl: &Classical, t: C64, samples: usize) -> Result<(f64, f64)> {
    let b = cl.bundle(t)?;
    let w_at = |sigma: f64| -> Result<CMat> {
        let ts = t * sigma;
        let co = cl.model().eval_coefficients(ts)?;
        let a_inv = linalg::inverse(&co.a).ok_or(Error::SingularCoefficient { t: ts })?;
        let q = b.q_flat(sigma);
        let p = a_inv * b.q_flat_deriv(sigma) * (0.5 / t) + co.b * &q;
        Ok(q.transpose() * &p - p.transpose() * &q)
    };
    let w0 = w_at(0.0)?;
    let mut sup = 0.0f64;
    for k in 1..=samples {
        let w = w_at(k as f64 / samples as f64)?;
        sup = sup.max(linalg::op_norm(&(w - &w0)));
    }
    Ok((sup, linalg::op_norm(&w0)))
}

/// Residuals of the classical identities at one real `(t, x, y)`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    /// `|∂ₜS + H(x, ∂ₓS)|`.
    pub eikonal: f64,
    /// `|(1/p0)(∂ₓ + B(t)x)p0 + ½A⁻¹(t) q̇♮t(t)|`.
    pub momentum: f64,
    /// `sup_s |(∂ₜ + q̇♮t(t)·∂ₓ) q♮t(s)|`.
    pub transport: f64,
    /// `sup_s |ᵀq♭ p♭ − ᵀp♭ q♭ − const|`.
    pub symplectic: f64,
    /// `|ᵀq♭ p♭ − ᵀp♭ q♭|` at `s = 0`.
    pub symplectic_at_zero: f64,
    /// `sup_s |q̃♭t(s)|`.
    pub sup_flat: f64,
    /// `sup_s |q̃♯t(s)|`.
    pub sup_sharp: f64,
    /// `sup_s |q̃♮t(s)| / (|x| + |y|)`.
    pub qnat_ratio: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.eikonal
            .max(self.momentum)
            .max(self.transport)
            .max(self.symplectic)
    }
}

pub fn classical_identity_residuals(cl: &Classical, t: f64, x: &CVec, y: &CVec) -> Result<IdentityReport> {
    let nu = cl.nu();
    let tc = C64::new(t, 0.0);
    let b = cl.bundle(tc)?;
    let co = cl.model().eval_coefficients(tc)?;
    let a_inv = linalg::inverse(&co.a).ok_or(Error::SingularCoefficient { t: tc })?;
    let velocity = b.qnat_deriv(x, y, 1.0) / tc;

    let k = cl.unperturbed(tc)?;
    let p0 = k.eval(x, y);
    let hx = 1e-5 * (1.0 + linalg::vnorm(x));
    let mut grad = CVec::zeros(nu);
    for j in 0..nu {
        grad[j] = central_derivative(
            |o| {
                let mut xs = x.clone();
                xs[j] += o;
                Ok(k.eval(&xs, y))
            },
            hx,
        )? / p0;
    }
    let momentum = linalg::vnorm(&(grad + &co.b * x + a_inv * &velocity * C64::new(0.5, 0.0)));

    let ht = 1e-5 * t;
    let samples = 16;
    let mut transport = 0.0f64;
    for j in 1..samples {
        let s = t * j as f64 / samples as f64;
        let dt = central_derivative(
            |o| {
                let tt = t + o;
                let bb = cl.bundle(C64::new(tt, 0.0))?;
                Ok(bb.qnat(x, y, s / tt))
            },
            ht,
        )?;
        let r = dt + b.q_flat(s / t) * &velocity;
        transport = transport.max(linalg::vnorm(&r));
    }

    let (symplectic, symplectic_at_zero) = symplectic_residual(cl, tc, 64)?;
    let (sup_flat, sup_sharp) = b.sup_norms();
    let scale = linalg::vnorm(x) + linalg::vnorm(y);
    let qnat_sup = (0..=64)
        .map(|j| linalg::vnorm(&b.qnat(x, y, j as f64 / 64.0)))
        .fold(0.0, f64::max);
    Ok(IdentityReport {
        eikonal: eikonal_residual(cl, t, x, y)?,
        momentum,
        transport,
        symplectic,
        symplectic_at_zero,
        sup_flat,
        sup_sharp,
        qnat_ratio: if scale > 0.0 { qnat_sup / scale } else { 0.0 },
    })
}

/// Relative residual `|∂ₜu − P0u − c·u| / (|P0u| + |c·u| + 1e−300)` of a
/// `d×d` matrix-valued `u(t, x)` at real `t`.
///
/// `u` receives a time and a batch of points and returns one matrix per point.
/// Derivatives are fourth-order central differences with steps `1e−4·t` and
/// `1e−4·(1 + |x|)`. `P0u = A·∇²u + 2(ABx)·∇u + (Tr(AB) + Bx·ABx − x·Cx)u`.
pub fn heat_equation_residual<U>(
    model: &CoefficientModel,
    pot: Option<&FourierPotential>,
    t: f64,
    x: &CVec,
    mut u: U,
) -> Result<f64>
where
    U: FnMut(f64, &[CVec]) -> Result<Vec<CMat>>,
{
    let nu = model.nu();
    let ht = 1e-4 * t;
    let hx = 1e-4 * (1.0 + linalg::vnorm(x));

    let times: Vec<f64> = D1.iter().map(|(o, _)| t + o * ht).collect();
    let mut du_dt: Option<CMat> = None;
    for (tt, (_, w)) in times.iter().zip(D1.iter()) {
        let v = u(*tt, std::slice::from_ref(x))?.remove(0) * C64::new(w / ht, 0.0);
        du_dt = Some(match du_dt {
            None => v,
            Some(a) => a + v,
        });
    }
    let du_dt = du_dt.unwrap();

    // Spatial stencil points: centre, axis offsets, and diagonal pairs.
    let shift = |offs: &[(usize, f64)]| -> CVec {
        let mut p = x.clone();
        for &(j, o) in offs {
            p[j] += o * hx;
        }
        p
    };
    let mut points = vec![x.clone()];
    for j in 0..nu {
        for o in [-2.0, -1.0, 1.0, 2.0] {
            points.push(shift(&[(j, o)]));
        }
    }
    for j in 0..nu {
        for k in (j + 1)..nu {
            for (oj, _) in D1 {
                for (ok, _) in D1 {
                    points.push(shift(&[(j, oj), (k, ok)]));
                }
            }
        }
    }
    let vals = u(t, &points)?;
    let centre = &vals[0];
    let axis = |j: usize, o: f64| -> &CMat {
        if o == 0.0 {
            centre
        } else {
            let idx = match o as i32 {
                -2 => 0,
                -1 => 1,
                1 => 2,
                _ => 3,
            };
            &vals[1 + 4 * j + idx]
        }
    };
    let (r, c) = (centre.nrows(), centre.ncols());
    let mut grad = vec![linalg::zeros(r, c); nu];
    let mut hess = vec![vec![linalg::zeros(r, c); nu]; nu];
    for j in 0..nu {
        for (o, w) in D1 {
            grad[j] += axis(j, o) * C64::new(w / hx, 0.0);
        }
        for (o, w) in D2 {
            hess[j][j] += axis(j, o) * C64::new(w / (hx * hx), 0.0);
        }
    }
    let mut idx = 1 + 4 * nu;
    for j in 0..nu {
        for k in (j + 1)..nu {
            let mut m = linalg::zeros(r, c);
            for (_, wj) in D1 {
                for (_, wk) in D1 {
                    m += &vals[idx] * C64::new(wj * wk / (hx * hx), 0.0);
                    idx += 1;
                }
            }
            hess[k][j] = m.clone();
            hess[j][k] = m;
        }
    }

    let co = model.eval_coefficients(C64::new(t, 0.0))?;
    let bx = &co.b * x;
    let abx = &co.a * &bx;
    let scalar = (&co.a * &co.b).trace() + linalg::dot(&bx, &abx) - linalg::dot(x, &(&co.c * x));
    let mut p0u = centre * scalar;
    for j in 0..nu {
        p0u += &grad[j] * (abx[j] * 2.0);
        for k in 0..nu {
            p0u += &hess[j][k] * co.a[(j, k)];
        }
    }
    let cu = match pot {
        Some(p) => p.eval_potential(C64::new(t, 0.0), x) * centre,
        None => linalg::zeros(r, c),
    };
    let residual = (&du_dt - &p0u - &cu).norm();
    Ok(residual / (p0u.norm() + cu.norm() + 1e-300))
}

/// `heat_equation_residual` of `p0` at fixed `y`.
pub fn p0_pde_residual(cl: &Classical, t: f64, x: &CVec, y: &CVec) -> Result<f64> {
    heat_equation_residual(cl.model(), None, t, x, |tt, xs| {
        let k = cl.unperturbed(C64::new(tt, 0.0))?;
        Ok(xs
            .iter()
            .map(|p| CMat::from_element(1, 1, k.eval(p, y)))
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_vec;
    use nalgebra::DMatrix;

    #[test]
    fn free_identities_hold() {
        let cl = Classical::new(CoefficientModel::free(2));
        let r = classical_identity_residuals(&cl, 0.2, &real_vec(&[0.5, -0.2]), &real_vec(&[-0.3, 0.4]))
            .unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
        assert_eq!(r.symplectic_at_zero, 0.0);
    }

    #[test]
    fn magnetic_identities_hold() {
        let beta = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let cl = Classical::new(CoefficientModel::magnetic(beta).unwrap());
        let r = classical_identity_residuals(&cl, 0.2, &real_vec(&[0.5, -0.2]), &real_vec(&[-0.3, 0.4]))
            .unwrap();
        assert!(r.max_residual() < 1e-6, "{r:?}");
    }

    #[test]
    fn harmonic_eikonal_example() {
        let cl = Classical::new(CoefficientModel::harmonic(1, 1.0));
        let r = eikonal_residual(&cl, 0.2, &real_vec(&[0.7]), &real_vec(&[-0.3])).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn p0_solves_the_heat_equation() {
        let cl = Classical::new(CoefficientModel::harmonic(1, 1.0));
        for t in [0.05, 0.15, 0.3] {
            let r = p0_pde_residual(&cl, t, &real_vec(&[0.4]), &real_vec(&[-0.2])).unwrap();
            assert!(r < 1e-5, "t={t} r={r}");
        }
    }
}
