//! Coefficient functions of the quadratic operator and the Fourier potential.
//!
//! Every analytic coefficient is a finite Taylor polynomial `Σ_k g_k t^k` with
//! square complex matrix coefficients. The builtin models (free, harmonic,
//! magnetic) are constant polynomials tagged with their closed-form identity,
//! so every structural hypothesis (symmetry, reality on the imaginary axis,
//! moment condition) can be decided exactly.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, op_norm, CMat, CVec, C64, I};

/// Matrix-valued polynomial `t ↦ Σ_k coeffs[k] t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly {
    dim: usize,
    coeffs: Vec<CMat>,
}

impl MatPoly {
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidModel("empty Taylor coefficient list".into()))?;
        let dim = first.nrows();
        if coeffs.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::InvalidModel(
                "Taylor coefficients must be square matrices of equal size".into(),
            ));
        }
        Ok(MatPoly { dim, coeffs }.trimmed())
    }

    pub fn constant(m: CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        MatPoly { dim: m.nrows(), coeffs: vec![m] }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(linalg::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(linalg::identity(dim))
    }

    pub fn scalar(value: C64) -> Self {
        Self::constant(CMat::from_element(1, 1, value))
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|m| m.iter().all(|z| *z == C64::new(0.0, 0.0))) {
            self.coeffs.pop();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| m.iter().all(|z| z.norm() == 0.0))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|m| m.iter().all(|z| z.norm() == 0.0))
    }

    pub fn eval(&self, t: C64) -> CMat {
        let mut out = linalg::zeros(self.dim, self.dim);
        self.eval_into(t, &mut out);
        out
    }

    /// Horner evaluation into a preallocated matrix.
    pub fn eval_into(&self, t: C64, out: &mut CMat) {
        out.copy_from(self.coeffs.last().unwrap());
        for k in (0..self.coeffs.len() - 1).rev() {
            *out *= t;
            *out += &self.coeffs[k];
        }
    }

    pub fn derivative(&self) -> MatPoly {
        if self.coeffs.len() == 1 {
            return MatPoly::zero(self.dim);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, m)| m * C64::new((k + 1) as f64, 0.0))
            .collect();
        MatPoly { dim: self.dim, coeffs }.trimmed()
    }

    pub fn transpose(&self) -> MatPoly {
        MatPoly {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn add(&self, other: &MatPoly) -> MatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let mut m = linalg::zeros(self.dim, self.dim);
                if let Some(a) = self.coeffs.get(k) {
                    m += a;
                }
                if let Some(b) = other.coeffs.get(k) {
                    m += b;
                }
                m
            })
            .collect();
        MatPoly { dim: self.dim, coeffs }.trimmed()
    }

    pub fn scale(&self, s: C64) -> MatPoly {
        MatPoly {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|m| m * s).collect(),
        }
        .trimmed()
    }

    pub fn sub(&self, other: &MatPoly) -> MatPoly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &MatPoly) -> MatPoly {
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![linalg::zeros(self.dim, self.dim); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        MatPoly { dim: self.dim, coeffs }.trimmed()
    }

    /// Upper bound for `sup_{|t| ≤ r} |g(t)|` in operator norm.
    ///
    /// The maximum over `samples` points of the circle `|t| = r` is corrected
    /// by the Lipschitz constant of `θ ↦ g(r e^{iθ})` times half the angular
    /// spacing; the result is capped by the triangle-inequality bound
    /// `Σ_k |g_k| r^k`, which is exact for constant polynomials.
    pub fn sup_on_disk(&self, r: f64) -> f64 {
        let triangle: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, m)| op_norm(m) * r.powi(k as i32))
            .sum();
        if self.is_constant() || r == 0.0 {
            return op_norm(&self.coeffs[0]);
        }
        let samples = 256;
        let lipschitz: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * op_norm(m) * r.powi(k as i32))
            .sum();
        let sampled = (0..samples)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / samples as f64;
                op_norm(&self.eval(C64::from_polar(r, theta)))
            })
            .fold(0.0, f64::max);
        triangle.min(sampled + lipschitz * PI / samples as f64)
    }
}

/// Named closed forms of the builtin registry.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Free,
    Harmonic { lambda: f64 },
    Magnetic { beta: DMatrix<f64> },
    Custom,
}

/// `A(t), B(t), C(t)` evaluated at one time.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

/// The analytic coefficient functions of `P0 = A(t)·(∂x + B(t)x)² − C(t)·x⊗x`.
#[derive(Clone, Debug)]
pub struct CoefficientModel {
    nu: usize,
    a: MatPoly,
    b: MatPoly,
    c: MatPoly,
    validity_radius: f64,
    kind: ModelKind,
}

impl CoefficientModel {
    pub const DEFAULT_RADIUS: f64 = 1.0;

    /// `A = 𝟙, B = C = 0`.
    pub fn free(nu: usize) -> Self {
        CoefficientModel {
            nu,
            a: MatPoly::identity(nu),
            b: MatPoly::zero(nu),
            c: MatPoly::zero(nu),
            validity_radius: Self::DEFAULT_RADIUS,
            kind: ModelKind::Free,
        }
    }

    /// `A = 𝟙, B = 0, C = λ𝟙`, i.e. `P0 = Δ − λ|x|²`.
    pub fn harmonic(nu: usize, lambda: f64) -> Self {
        CoefficientModel {
            nu,
            a: MatPoly::identity(nu),
            b: MatPoly::zero(nu),
            c: MatPoly::constant(linalg::identity(nu) * C64::new(lambda, 0.0)),
            validity_radius: Self::DEFAULT_RADIUS,
            kind: ModelKind::Harmonic { lambda },
        }
    }

    /// `A = 𝟙, C = 0, B = −(i/2)β` with `β` real, skew-symmetric and constant.
    pub fn magnetic(beta: DMatrix<f64>) -> Result<Self> {
        let nu = beta.nrows();
        if beta.ncols() != nu {
            return Err(Error::InvalidModel("β must be square".into()));
        }
        if (&beta + beta.transpose()).amax() > 1e-14 {
            return Err(Error::InvalidModel("β must be skew-symmetric".into()));
        }
        let b = linalg::from_real(&beta) * (-0.5 * I);
        Ok(CoefficientModel {
            nu,
            a: MatPoly::identity(nu),
            b: MatPoly::constant(b),
            c: MatPoly::zero(nu),
            validity_radius: Self::DEFAULT_RADIUS,
            kind: ModelKind::Magnetic { beta },
        })
    }

    /// Arbitrary polynomial coefficients; validated on construction.
    pub fn custom(a: MatPoly, b: MatPoly, c: MatPoly, validity_radius: f64) -> Result<Self> {
        let nu = a.dim();
        if b.dim() != nu || c.dim() != nu {
            return Err(Error::InvalidModel("A, B, C must share the dimension ν".into()));
        }
        if !(validity_radius > 0.0) {
            return Err(Error::InvalidModel("validity radius must be positive".into()));
        }
        let model = CoefficientModel {
            nu,
            a,
            b,
            c,
            validity_radius,
            kind: ModelKind::Custom,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.validity_radius = radius;
        self
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn a(&self) -> &MatPoly {
        &self.a
    }

    pub fn b(&self) -> &MatPoly {
        &self.b
    }

    pub fn c(&self) -> &MatPoly {
        &self.c
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn validity_radius(&self) -> f64 {
        self.validity_radius
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ModelKind::Free => "free".into(),
            ModelKind::Harmonic { lambda } => format!("harmonic({lambda})"),
            ModelKind::Magnetic { .. } => "magnetic".into(),
            ModelKind::Custom => "custom".into(),
        }
    }

    pub fn check_radius(&self, t: C64) -> Result<()> {
        if t.norm() >= self.validity_radius {
            Err(Error::OutOfRadius {
                t,
                radius: self.validity_radius,
            })
        } else {
            Ok(())
        }
    }

    /// `A(t), B(t), C(t)`.
    pub fn eval_coefficients(&self, t: C64) -> Result<Coefficients> {
        self.check_radius(t)?;
        Ok(Coefficients {
            a: self.a.eval(t),
            b: self.b.eval(t),
            c: self.c.eval(t),
        })
    }

    /// `Δ = det A(0)`.
    pub fn delta(&self) -> f64 {
        self.a.eval(C64::new(0.0, 0.0)).determinant().re
    }

    /// Checks symmetry of `A` and `C` at sample points and that `A(0)` is real
    /// symmetric positive definite.
    pub fn validate(&self) -> Result<()> {
        let r = self.validity_radius;
        for k in 0..8 {
            let t = C64::from_polar(0.5 * r, 2.0 * PI * k as f64 / 8.0);
            let a = self.a.eval(t);
            let c = self.c.eval(t);
            let scale = 1.0 + linalg::max_abs(&a) + linalg::max_abs(&c);
            if linalg::asymmetry(&a) > 1e-12 * scale || linalg::asymmetry(&c) > 1e-12 * scale {
                return Err(Error::InvalidModel(format!("A or C not symmetric at t = {t}")));
            }
        }
        let a0 = self.a.eval(C64::new(0.0, 0.0));
        if linalg::max_imag(&a0) > 1e-14 {
            return Err(Error::InvalidModel("A(0) must be real".into()));
        }
        let real = a0.map(|z| z.re);
        let eig = real.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidModel("A(0) must be positive definite".into()));
        }
        Ok(())
    }

    /// Reality on the imaginary axis of `A`, `iB` and `C`.
    ///
    /// `g(iτ) = Σ_k g_k i^k τ^k` is real for all real `τ` iff every `i^k g_k`
    /// is real; for `iB` the test is on `i^{k+1} B_k`.
    pub fn check_reality(&self) -> RealityReport {
        let mut offending = Vec::new();
        let mut scan = |name: &'static str, poly: &MatPoly, shift: u32| {
            for (k, g) in poly.coeffs().iter().enumerate() {
                let phase = I.powu(k as u32 + shift);
                let rotated = g * phase;
                let im = linalg::max_imag(&rotated);
                if im > 1e-14 * (1.0 + linalg::max_abs(g)) {
                    offending.push(RealityViolation {
                        coefficient: name,
                        order: k,
                        max_imag: im,
                    });
                }
            }
        };
        scan("A", &self.a, 0);
        scan("iB", &self.b, 1);
        scan("C", &self.c, 0);
        RealityReport {
            real: offending.is_empty(),
            offending,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealityViolation {
    pub coefficient: &'static str,
    pub order: usize,
    pub max_imag: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealityReport {
    pub real: bool,
    pub offending: Vec<RealityViolation>,
}

/// One plane-wave mode `a(t) e^{i x·ξ}`.
#[derive(Clone, Debug)]
pub struct Mode {
    pub xi: Vec<f64>,
    pub amplitude: MatPoly,
}

impl Mode {
    pub fn xi_vec(&self) -> CVec {
        linalg::real_vec(&self.xi)
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero_frequency(&self) -> bool {
        self.xi.iter().all(|&v| v == 0.0)
    }
}

/// `c(t, x) = Σ_m a_m(t) e^{i x·ξ_m}` with `d×d` matrix amplitudes.
#[derive(Clone, Debug)]
pub struct FourierPotential {
    nu: usize,
    d: usize,
    modes: Vec<Mode>,
}

impl FourierPotential {
    pub fn new(nu: usize, d: usize, modes: Vec<Mode>) -> Result<Self> {
        for m in &modes {
            if m.xi.len() != nu {
                return Err(Error::InvalidModel(format!(
                    "mode frequency has {} components, expected ν = {nu}",
                    m.xi.len()
                )));
            }
            if m.amplitude.dim() != d {
                return Err(Error::InvalidModel(format!(
                    "mode amplitude has dimension {}, expected d = {d}",
                    m.amplitude.dim()
                )));
            }
            if m.xi.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("mode frequency must be finite".into()));
            }
        }
        Ok(FourierPotential { nu, d, modes })
    }

    pub fn zero(nu: usize, d: usize) -> Self {
        FourierPotential {
            nu,
            d,
            modes: Vec::new(),
        }
    }

    /// Scalar constant potential `c ≡ a`.
    pub fn constant(nu: usize, a: C64) -> Self {
        FourierPotential {
            nu,
            d: 1,
            modes: vec![Mode {
                xi: vec![0.0; nu],
                amplitude: MatPoly::scalar(a),
            }],
        }
    }

    /// Scalar `amplitude · cos(x·ξ)`.
    pub fn cosine(xi: &[f64], amplitude: f64) -> Self {
        let half = MatPoly::scalar(C64::new(0.5 * amplitude, 0.0));
        FourierPotential {
            nu: xi.len(),
            d: 1,
            modes: vec![
                Mode {
                    xi: xi.to_vec(),
                    amplitude: half.clone(),
                },
                Mode {
                    xi: xi.iter().map(|v| -v).collect(),
                    amplitude: half,
                },
            ],
        }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude.is_zero())
    }

    /// `c(t, x) = Σ_m a_m(t) e^{i x·ξ_m}`.
    pub fn eval_potential(&self, t: C64, x: &CVec) -> CMat {
        let mut out = linalg::zeros(self.d, self.d);
        for m in &self.modes {
            let phase = (I * linalg::dot(x, &m.xi_vec())).exp();
            out += m.amplitude.eval(t) * phase;
        }
        out
    }

    /// `Σ_m e^{R|ξ_m|} sup_{|t| ≤ T} |a_m(t)|`.
    pub fn moment_bound(&self, r: f64, t_max: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| (r * m.xi_norm()).exp() * m.amplitude.sup_on_disk(t_max))
            .sum()
    }
}
