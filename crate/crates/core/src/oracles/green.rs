//! Green's-function construction of the deformation matrix, integrated with
//! the adaptive Dormand–Prince scheme (independent of the fixed-step
//! shooting solver).

use std::collections::HashMap;

use crate::classical::ElCoefficients;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::oracles::ode::Dopri;

/// Fundamental matrix `Y(s)` of `q″ = tE(ts)q′ + t²F(ts)q` written as a
/// first-order system, `Y(0) = 𝟙`.
pub struct Fundamental<'a> {
    el: &'a ElCoefficients,
    t: C64,
    dopri: Dopri,
    cache: HashMap<u64, CMat>,
}

impl<'a> Fundamental<'a> {
    pub fn new(el: &'a ElCoefficients, t: C64) -> Self {
        Fundamental {
            el,
            t,
            dopri: Dopri::default(),
            cache: HashMap::new(),
        }
    }

    pub fn at(&mut self, s: f64) -> Result<CMat> {
        if let Some(m) = self.cache.get(&s.to_bits()) {
            return Ok(m.clone());
        }
        let nu = self.el.dim();
        let n2 = 2 * nu;
        let t = self.t;
        let el = self.el;
        let mut failure = None;
        let y0: Vec<C64> = linalg::identity(n2).iter().copied().collect();
        let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
            let (e, f) = match el.eval(t * s) {
                Ok(v) => v,
                Err(err) => {
                    failure = Some(err);
                    dy.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                    return;
                }
            };
            let ym = CMat::from_column_slice(n2, n2, y);
            let mut d = linalg::zeros(n2, n2);
            d.view_mut((0, 0), (nu, n2)).copy_from(&ym.view((nu, 0), (nu, n2)));
            let lower = f * (t * t) * ym.view((0, 0), (nu, n2)) + e * t * ym.view((nu, 0), (nu, n2));
            d.view_mut((nu, 0), (nu, n2)).copy_from(&lower);
            dy.copy_from_slice(d.as_slice());
        };
        let y = self.dopri.integrate(rhs, 0.0, s, &y0)?;
        if let Some(err) = failure {
            return Err(err);
        }
        let m = CMat::from_column_slice(n2, n2, &y);
        self.cache.insert(s.to_bits(), m.clone());
        Ok(m)
    }
}

/// Boundary-value trajectories and deformation matrix from `Y(s)`.
pub struct GreenOracle<'a> {
    fund: Fundamental<'a>,
    a: crate::model::MatPoly,
    nu: usize,
    y1: CMat,
    y1_inv: CMat,
    v1_inv: CMat,
}

impl<'a> GreenOracle<'a> {
    pub fn new(el: &'a ElCoefficients, a: &crate::model::MatPoly, t: C64) -> Result<Self> {
        let nu = el.dim();
        let mut fund = Fundamental::new(el, t);
        let y1 = fund.at(1.0)?;
        let v1 = y1.view((0, nu), (nu, nu)).clone_owned();
        let v1_inv = linalg::inverse(&v1).ok_or(Error::FocalPoint {
            t,
            conditioning: f64::INFINITY,
        })?;
        let y1_inv = linalg::inverse(&y1).ok_or(Error::SingularCoefficient { t })?;
        Ok(GreenOracle {
            fund,
            a: a.clone(),
            nu,
            y1,
            y1_inv,
            v1_inv,
        })
    }

    pub fn t(&self) -> C64 {
        self.fund.t
    }

    /// `(q̃♭(s), q̃♯(s))`.
    pub fn trajectories(&mut self, s: f64) -> Result<(CMat, CMat)> {
        let nu = self.nu;
        let y = self.fund.at(s)?;
        let u = y.view((0, 0), (nu, nu));
        let v = y.view((0, nu), (nu, nu));
        let u1 = self.y1.view((0, 0), (nu, nu));
        let flat = v * &self.v1_inv;
        let sharp = u - &flat * u1;
        Ok((flat, sharp))
    }

    pub fn qnat(&mut self, x: &CVec, y: &CVec, s: f64) -> Result<CVec> {
        let (f, sh) = self.trajectories(s)?;
        Ok(f * x + sh * y)
    }

    /// `W(s)` and `W′(s)` with `W(1) = 0, W′(1) = 𝟙`.
    fn w_pair(&mut self, s: f64) -> Result<(CMat, CMat)> {
        let nu = self.nu;
        let y = self.fund.at(s)?;
        let sel = self.y1_inv.view((0, nu), (2 * nu, nu)).clone_owned();
        let w = &y * sel;
        Ok((
            w.view((0, 0), (nu, nu)).clone_owned(),
            w.view((nu, 0), (nu, nu)).clone_owned(),
        ))
    }

    /// `K̃t(s, s′)` from the continuity and jump conditions at `s′`.
    pub fn kernel(&mut self, s: f64, s2: f64) -> Result<CMat> {
        let nu = self.nu;
        if s <= 0.0 || s >= 1.0 || s2 <= 0.0 || s2 >= 1.0 {
            return Ok(linalg::zeros(nu, nu));
        }
        let t = self.t();
        let ys2 = self.fund.at(s2)?;
        let v = ys2.view((0, nu), (nu, nu)).clone_owned();
        let dv = ys2.view((nu, nu), (nu, nu)).clone_owned();
        let (w, dw) = self.w_pair(s2)?;
        let mut sys = linalg::zeros(2 * nu, 2 * nu);
        sys.view_mut((0, 0), (nu, nu)).copy_from(&v);
        sys.view_mut((0, nu), (nu, nu)).copy_from(&(-&w));
        sys.view_mut((nu, 0), (nu, nu)).copy_from(&(-&dv));
        sys.view_mut((nu, nu), (nu, nu)).copy_from(&dw);
        let mut rhs = linalg::zeros(2 * nu, nu);
        rhs.view_mut((nu, 0), (nu, nu)).copy_from(&(-self.a.eval(t * s2)));
        let sol = sys
            .lu()
            .solve(&rhs)
            .ok_or(Error::FocalPoint {
                t,
                conditioning: f64::INFINITY,
            })?;
        let x = sol.view((0, 0), (nu, nu));
        let yv = sol.view((nu, 0), (nu, nu));
        if s <= s2 {
            let ys = self.fund.at(s)?;
            Ok(ys.view((0, nu), (nu, nu)) * x)
        } else {
            let (ws, _) = self.w_pair(s)?;
            Ok(ws * yv)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::model::CoefficientModel;

    #[test]
    fn free_green_kernel() {
        let model = CoefficientModel::free(1);
        let el = ElCoefficients::new(&model);
        let mut g = GreenOracle::new(&el, model.a(), c(0.2)).unwrap();
        for (s, s2) in [(0.2, 0.7), (0.7, 0.2), (0.5, 0.5), (0.9, 0.1)] {
            let exact = f64::min(s, s2) * (1.0 - f64::max(s, s2));
            assert!((g.kernel(s, s2).unwrap()[(0, 0)] - c(exact)).norm() < 1e-12);
        }
    }

    #[test]
    fn harmonic_green_kernel() {
        let model = CoefficientModel::harmonic(1, 1.0);
        let el = ElCoefficients::new(&model);
        let t = C64::new(0.3, 0.1);
        let mut g = GreenOracle::new(&el, model.a(), t).unwrap();
        let k = t * 2.0;
        for (s, s2) in [(0.2, 0.7), (0.8, 0.3)] {
            let (lo, hi) = (f64::min(s, s2), f64::max(s, s2));
            let exact = (k * lo).sinh() * (k * (1.0 - hi)).sinh() / (k * k.sinh());
            assert!((g.kernel(s, s2).unwrap()[(0, 0)] - exact).norm() < 1e-12);
        }
    }
}
