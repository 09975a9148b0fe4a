use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::model::{CoefficientModel, MatPoly};

/// Euler–Lagrange coefficients of the Lagrangian
/// `L = ¼ q̇·A⁻¹q̇ + q̇·Bq + q·Cq`:
///
/// `q̈ = E q̇ + F q`, `E = Ȧ A⁻¹ + 2A(ᵀB − B)`, `F = 4AC − 2AḂ`.
///
/// `F` and the polynomial part `2A(ᵀB − B)` of `E` are kept as polynomials;
/// the `Ȧ A⁻¹` term is evaluated pointwise.
#[derive(Clone, Debug)]
pub struct ElCoefficients {
    a: MatPoly,
    a_dot: MatPoly,
    e_poly: MatPoly,
    f: MatPoly,
    radius: f64,
}

impl ElCoefficients {
    pub fn new(model: &CoefficientModel) -> Self {
        let a = model.a().clone();
        let b = model.b();
        let two = C64::new(2.0, 0.0);
        let e_poly = a.mul(&b.transpose().sub(b)).scale(two);
        let f = a
            .mul(model.c())
            .scale(C64::new(4.0, 0.0))
            .sub(&a.mul(&b.derivative()).scale(two));
        ElCoefficients {
            a_dot: a.derivative(),
            a,
            e_poly,
            f,
            radius: model.validity_radius(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `F` as a polynomial.
    pub fn f_poly(&self) -> &MatPoly {
        &self.f
    }

    /// `(E(t), F(t))`.
    pub fn eval(&self, t: C64) -> Result<(CMat, CMat)> {
        if t.norm() >= self.radius {
            return Err(Error::OutOfRadius {
                t,
                radius: self.radius,
            });
        }
        let mut e = self.e_poly.eval(t);
        if !self.a_dot.is_zero() {
            let a = self.a.eval(t);
            let inv = linalg::inverse(&a).ok_or(Error::SingularCoefficient { t })?;
            let scale = linalg::max_abs(&a) * linalg::max_abs(&inv);
            if scale > 1e14 {
                return Err(Error::SingularCoefficient { t });
            }
            e += self.a_dot.eval(t) * inv;
        }
        Ok((e, self.f.eval(t)))
    }
}
