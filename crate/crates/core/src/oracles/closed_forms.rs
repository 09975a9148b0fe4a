//! Closed-form trajectories, actions, deformation matrices and kernels of the
//! free, harmonic and magnetic operators.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, I};

/// Matrix exponential by scaling and squaring of a degree-24 Taylor polynomial.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = linalg::op_norm(m);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut term = linalg::identity(n);
    let mut sum = linalg::identity(n);
    for k in 1..=24 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn sinm(m: &CMat) -> CMat {
    (expm(&(m * I)) - expm(&(m * -I))) * (-0.5 * I)
}

/// `s∧s′(1 − s∨s′)`.
pub fn free_kernel(s: f64, s2: f64) -> f64 {
    s.min(s2) * (1.0 - s.max(s2))
}

/// Magnetic field `A = 𝟙, B = −(i/2)β, C = 0` with real skew `β`.
pub struct Magnetic {
    beta: CMat,
}

impl Magnetic {
    pub fn new(beta: &DMatrix<f64>) -> Self {
        Magnetic {
            beta: linalg::from_real(beta),
        }
    }

    fn bt(&self, t: C64) -> CMat {
        &self.beta * t
    }

    /// `q̃♭t(s) = e^{−iβt(1−s)} sin(βts) sin(βt)⁻¹`.
    pub fn q_flat(&self, t: C64, s: f64) -> CMat {
        let bt = self.bt(t);
        let inv = linalg::inverse(&sinm(&bt)).expect("βt away from the focal set");
        expm(&(&bt * (-I * (1.0 - s)))) * sinm(&(&bt * C64::new(s, 0.0))) * inv
    }

    /// `q̃♯t(s) = e^{iβts} sin(βt(1−s)) sin(βt)⁻¹`.
    pub fn q_sharp(&self, t: C64, s: f64) -> CMat {
        let bt = self.bt(t);
        let inv = linalg::inverse(&sinm(&bt)).expect("βt away from the focal set");
        expm(&(&bt * (I * s))) * sinm(&(&bt * C64::new(1.0 - s, 0.0))) * inv
    }

    /// `K̃t(s, s′) = e^{iβt(s−s′)} sin(βt s∧s′) sin(βt(1 − s∨s′)) (βt sin βt)⁻¹`.
    pub fn kernel(&self, t: C64, s: f64, s2: f64) -> CMat {
        let bt = self.bt(t);
        let denom = linalg::inverse(&(&bt * sinm(&bt))).expect("βt invertible and away from the focal set");
        expm(&(&bt * (I * (s - s2))))
            * sinm(&(&bt * C64::new(s.min(s2), 0.0)))
            * sinm(&(&bt * C64::new(1.0 - s.max(s2), 0.0)))
            * denom
    }

    /// The same expression with the phase `e^{iβt(s′−s)}`, as it is often
    /// quoted; it equals `ᵀK̃t(s, s′) = K̃t(s′, s)`.
    pub fn kernel_transposed_phase(&self, t: C64, s: f64, s2: f64) -> CMat {
        self.kernel(t, s2, s)
    }
}

/// Harmonic oscillator `A = 𝟙, B = 0, C = ω²𝟙` in one dimension.
#[derive(Clone, Copy, Debug)]
pub struct Harmonic {
    pub omega: f64,
}

impl Harmonic {
    fn k(&self, t: C64) -> C64 {
        t * (2.0 * self.omega)
    }

    pub fn q_flat(&self, t: C64, s: f64) -> C64 {
        let k = self.k(t);
        (k * s).sinh() / k.sinh()
    }

    pub fn q_sharp(&self, t: C64, s: f64) -> C64 {
        let k = self.k(t);
        (k * (1.0 - s)).sinh() / k.sinh()
    }

    /// `Φ = tω[(x² + y²)cosh 2ωt − 2xy] / (2 sinh 2ωt)`.
    pub fn phi(&self, t: C64, x: f64, y: f64) -> C64 {
        let k = self.k(t);
        t * self.omega * ((x * x + y * y) * k.cosh() - 2.0 * x * y) / (k.sinh() * 2.0)
    }

    /// `θ(t) = 1/(2t) − ω coth 2ωt`, by its Taylor series near zero.
    pub fn theta(&self, t: C64) -> C64 {
        let k = self.k(t);
        if k.norm() < 1e-2 {
            // k coth k = 1 + k²/3 − k⁴/45 + 2k⁶/945.
            let k2 = k * k;
            -(k2 / 3.0 - k2 * k2 / 45.0 + k2 * k2 * k2 * (2.0 / 945.0)) / (t * 2.0)
        } else {
            1.0 / (t * 2.0) - self.omega * k.cosh() / k.sinh()
        }
    }

    /// `K̃t(s, s′) = sinh(k s∧s′) sinh(k(1 − s∨s′)) / (k sinh k)`, `k = 2ωt`.
    pub fn kernel(&self, t: C64, s: f64, s2: f64) -> C64 {
        let k = self.k(t);
        if k.norm() == 0.0 {
            return C64::new(free_kernel(s, s2), 0.0);
        }
        (k * s.min(s2)).sinh() * (k * (1.0 - s.max(s2))).sinh() / (k * k.sinh())
    }
}

/// `(4πt)^{−1/2} e^{−(x−y)²/4t}`.
pub fn free_heat_kernel(t: f64, x: f64, y: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-(x - y).powi(2) / (4.0 * t)).exp()
}

/// Mehler kernel of `∂ₜu = ∂ₓ²u − ω²x²u`:
/// `(ω / (2π sinh 2ωt))^{1/2} exp(−ω[(x² + y²)cosh 2ωt − 2xy] / (2 sinh 2ωt))`.
pub fn mehler_kernel(omega: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Problem(format!("Mehler kernel needs t > 0, got {t}")));
    }
    if omega == 0.0 {
        return Ok(free_heat_kernel(t, x, y));
    }
    let k = 2.0 * omega * t;
    let (sh, ch) = (k.sinh(), k.cosh());
    Ok((omega / (2.0 * PI * sh)).sqrt() * (-omega * ((x * x + y * y) * ch - 2.0 * x * y) / (2.0 * sh)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn expm_matches_rotation() {
        let j = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.3, 0.0), C64::new(-1.3, 0.0), C64::new(0.0, 0.0)]);
        let e = expm(&j);
        let (c, s) = (1.3f64.cos(), 1.3f64.sin());
        let exact = CMat::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(c, 0.0)]);
        assert!(max_abs(&(e - exact)) < 1e-14);
    }

    #[test]
    fn magnetic_transposed_phase_form() {
        let beta = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let m = Magnetic::new(&beta);
        let t = C64::new(0.3, 0.0);
        let a = m.kernel(t, 0.2, 0.6);
        let b = m.kernel_transposed_phase(t, 0.2, 0.6);
        assert!(max_abs(&(a.transpose() - b)) < 1e-14);
    }

    #[test]
    fn harmonic_theta_series_and_direct_agree() {
        let h = Harmonic { omega: 1.3 };
        let t = C64::new(0.0038, 0.0);
        let direct = 1.0 / (t * 2.0) - h.omega * (t * 2.0 * h.omega).cosh() / (t * 2.0 * h.omega).sinh();
        assert!((h.theta(t) - direct).norm() < 1e-10);
        let small = C64::new(1e-6, 0.0);
        assert!((h.theta(small) - (-2.0 * 1.3f64.powi(2) / 3.0) * small).norm() < 1e-15);
    }

    #[test]
    fn mehler_small_omega_limit() {
        let m = mehler_kernel(1e-7, 0.2, 1.0, 0.0).unwrap();
        let f = (4.0 * PI * 0.2f64).powf(-0.5) * (-1.0f64 / 0.8).exp();
        assert!((m - f).abs() < 1e-12);
        assert!(mehler_kernel(1.0, 0.0, 0.0, 0.0).is_err());
    }
}
