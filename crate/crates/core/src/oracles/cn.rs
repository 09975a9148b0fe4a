//! Crank–Nicolson evolution of `∂ₜu = (P0 + c(t, x))u` in one dimension.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::model::{CoefficientModel, FourierPotential};

/// Uniform grid of `nx` interior points on `(−L, L)` with Dirichlet walls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub half_width: f64,
    pub nx: usize,
    pub dt: f64,
}

impl Grid1D {
    pub fn new(half_width: f64, nx: usize, dt: f64) -> Result<Self> {
        if !(half_width > 0.0) || nx < 200 || !(dt > 0.0) {
            return Err(Error::Problem(format!(
                "invalid grid: L = {half_width}, Nx = {nx}, dt = {dt} (need L > 0, Nx ≥ 200, dt > 0)"
            )));
        }
        Ok(Grid1D { half_width, nx, dt })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx + 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..=self.nx).map(|i| -self.half_width + i as f64 * dx).collect()
    }
}

/// Solves the tridiagonal system `lower[i] u[i−1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i]`.
fn thomas(lower: &[C64], diag: &[C64], upper: &[C64], rhs: &mut [C64], scratch: &mut [C64]) {
    let n = diag.len();
    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

/// θ = ½ time stepping with centred second-order differences. Coefficients
/// are frozen at the midpoint of each step.
pub fn cn_evolve(
    model: &CoefficientModel,
    pot: &FourierPotential,
    grid: &Grid1D,
    u0: &[C64],
    t0: f64,
    t1: f64,
) -> Result<Vec<C64>> {
    if model.nu() != 1 || pot.nu() != 1 || pot.d() != 1 {
        return Err(Error::Problem("Crank–Nicolson oracle is one-dimensional and scalar".into()));
    }
    if u0.len() != grid.nx {
        return Err(Error::Problem(format!("u0 has {} values, grid has {}", u0.len(), grid.nx)));
    }
    if !(t0 < t1) {
        return Err(Error::Problem(format!("need t0 < t1, got {t0}, {t1}")));
    }
    let steps = ((t1 - t0) / grid.dt).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    let dx = grid.dx();
    let xs = grid.points();
    let n = grid.nx;
    let norm0 = u0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    let mut u = u0.to_vec();
    let mut lower = vec![C64::new(0.0, 0.0); n];
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let mut upper = vec![C64::new(0.0, 0.0); n];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    for step in 0..steps {
        let tm = C64::new(t0 + (step as f64 + 0.5) * dt, 0.0);
        let co = model.eval_coefficients(tm)?;
        let (a, b, c) = (co.a[(0, 0)], co.b[(0, 0)], co.c[(0, 0)]);
        for i in 0..n {
            let x = xs[i];
            let pot_val = pot.eval_potential(tm, &linalg::real_vec(&[x]))[(0, 0)];
            let l = a / (dx * dx) - a * b * x / dx;
            let r = a / (dx * dx) + a * b * x / dx;
            let d = a * (-2.0 / (dx * dx)) + a * b + a * b * b * x * x - c * x * x + pot_val;
            let left = if i > 0 { u[i - 1] } else { C64::new(0.0, 0.0) };
            let right = if i + 1 < n { u[i + 1] } else { C64::new(0.0, 0.0) };
            rhs[i] = u[i] + (l * left + d * u[i] + r * right) * (0.5 * dt);
            lower[i] = -l * (0.5 * dt);
            upper[i] = -r * (0.5 * dt);
            diag[i] = 1.0 - d * (0.5 * dt);
        }
        thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
        std::mem::swap(&mut u, &mut rhs);
        let norm = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let growth = norm / norm0;
        if !(growth <= 10f64.exp()) {
            return Err(Error::Diverged { step, growth });
        }
    }
    Ok(u)
}

/// Grid snapshot as CSV with columns `x, re_u, im_u`.
pub fn write_snapshot<W: Write>(mut out: W, xs: &[f64], u: &[C64]) -> std::io::Result<()> {
    writeln!(out, "x,re_u,im_u")?;
    for (x, v) in xs.iter().zip(u.iter()) {
        writeln!(out, "{x},{:e},{:e}", v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::closed_forms::free_heat_kernel;

    #[test]
    fn thomas_solves_tridiagonal() {
        let c = |v: f64| C64::new(v, 0.0);
        let lower = [c(0.0), c(1.0), c(1.0)];
        let diag = [c(4.0), c(4.0), c(4.0)];
        let upper = [c(1.0), c(1.0), c(0.0)];
        let x = [c(1.0), c(-2.0), c(0.5)];
        let mut rhs = [c(4.0 - 2.0), c(1.0 - 8.0 + 0.5), c(-2.0 + 2.0)];
        let mut scratch = [c(0.0); 3];
        thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
        for i in 0..3 {
            assert!((rhs[i] - x[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn free_gaussian_evolves_to_heat_kernel() {
        let model = CoefficientModel::free(1);
        let pot = FourierPotential::zero(1, 1);
        let grid = Grid1D::new(12.0, 2000, 1e-4).unwrap();
        let xs = grid.points();
        let u0: Vec<C64> = xs.iter().map(|&x| C64::new(free_heat_kernel(0.05, x, 0.0), 0.0)).collect();
        let u = cn_evolve(&model, &pot, &grid, &u0, 0.05, 0.2).unwrap();
        let peak = free_heat_kernel(0.2, 0.0, 0.0);
        let mut worst = 0.0f64;
        for (x, v) in xs.iter().zip(u.iter()) {
            if x.abs() <= 3.0 {
                worst = worst.max((v - free_heat_kernel(0.2, *x, 0.0)).norm() / peak);
            }
        }
        assert!(worst < 1e-4, "{worst}");
        let mass0: f64 = u0.iter().map(|v| v.re).sum();
        let mass1: f64 = u.iter().map(|v| v.re).sum();
        assert!(((mass1 - mass0) / mass0).abs() < 1e-6);
    }
}
