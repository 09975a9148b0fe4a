//! The deformation matrix
//! `K̃t(s, s′) = ∫_{s∨s′}^1 q̃♭tτ(s/τ) A(tτ) ᵀq̃♭tτ(s′/τ) dτ`,
//! its interpolation table, the quadratic form `(μ, μ)t` and the checks of
//! the propagator equation, positivity and size bounds.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::Classical;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::quadrature::{ChebyshevLobatto, GaussLegendre};

pub const DEFAULT_QUADRATURE_ORDER: usize = 32;
pub const DEFAULT_GRID: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    /// Gauss–Legendre nodes of the τ-integral.
    pub quadrature_order: usize,
    /// Chebyshev–Lobatto nodes per direction of the triangle table.
    pub grid: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
            grid: DEFAULT_GRID,
        }
    }
}

/// Direct τ-quadrature of `K̃t` at arbitrary `(s, s′)`.
///
/// The integral over `τ ∈ [s∨s′, 1]` is taken in `v = ln τ`, which keeps the
/// integrand smooth when `s∨s′` is small.
pub struct KernelQuadrature<'a> {
    cl: &'a Classical,
    t: C64,
    rule: GaussLegendre,
}

impl<'a> KernelQuadrature<'a> {
    pub fn new(cl: &'a Classical, t: C64, order: usize) -> Self {
        KernelQuadrature {
            cl,
            t,
            rule: GaussLegendre::new(order),
        }
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn classical(&self) -> &Classical {
        self.cl
    }

    fn taus(&self, m: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rule.on(m.ln(), 0.0).map(|(v, w)| {
            let tau = v.exp();
            (tau, w * tau)
        })
    }

    /// All `tτ` arguments of the boundary-value problems needed at `s∨s′ = m`.
    pub fn arguments(&self, m: f64) -> Vec<C64> {
        if m <= 0.0 || m >= 1.0 {
            return Vec::new();
        }
        self.taus(m).map(|(tau, _)| self.t * tau).collect()
    }

    pub fn eval(&self, s: f64, s2: f64) -> Result<CMat> {
        let nu = self.cl.nu();
        let m = s.max(s2);
        let mut out = linalg::zeros(nu, nu);
        if s <= 0.0 || s2 <= 0.0 || m >= 1.0 {
            return Ok(out);
        }
        for (tau, w) in self.taus(m) {
            let tt = self.t * tau;
            let b = self.cl.bundle(tt)?;
            let a = self.cl.model().a().eval(tt);
            let left = b.q_flat(s / tau);
            let right = b.q_flat(s2 / tau);
            out += left * a * right.transpose() * C64::new(w, 0.0);
        }
        Ok(out)
    }
}

/// Interpolation table of `K̃t` on the triangle `s ≤ s′`.
///
/// The triangle is the image of the unit square under `(u, w) ↦ (uw, w)`; the
/// table holds `K̃t(u_i w_j, w_j)` on a Chebyshev–Lobatto tensor grid. The
/// other triangle is read through `K̃t(s, s′) = ᵀK̃t(s′, s)`, and the diagonal
/// is the row `u = 1`.
#[derive(Clone, Debug)]
pub struct DeformationKernel {
    t: C64,
    nu: usize,
    config: KernelConfig,
    cheb: ChebyshevLobatto,
    /// `table[j * n + i] = K̃t(u_i w_j, w_j)`.
    table: Vec<CMat>,
    /// Chebyshev coefficients along `u`: `K̃t(u w_j, w_j) = Σ_k u_coef[j * n + k] T_k(2u − 1)`.
    u_coef: Vec<CMat>,
}

pub fn build_kernel(cl: &Classical, t: C64, config: KernelConfig) -> Result<DeformationKernel> {
    cl.model().check_radius(t)?;
    let quad = KernelQuadrature::new(cl, t, config.quadrature_order);
    let cheb = ChebyshevLobatto::new(config.grid);
    let n = cheb.len();

    let mut args: Vec<C64> = cheb.nodes.iter().flat_map(|&w| quad.arguments(w)).collect();
    args.dedup();
    args.par_iter().try_for_each(|&a| cl.bundle(a).map(|_| ()))?;

    let table = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / n, idx % n);
            let w = cheb.nodes[j];
            quad.eval(cheb.nodes[i] * w, w)
        })
        .collect::<Result<Vec<_>>>()?;
    let u_coef = to_chebyshev(&cheb, &table);
    Ok(DeformationKernel {
        t,
        nu: cl.nu(),
        config,
        cheb,
        table,
        u_coef,
    })
}

/// Chebyshev coefficients of each row `table[j * n + ·]`.
fn to_chebyshev(cheb: &ChebyshevLobatto, table: &[CMat]) -> Vec<CMat> {
    let n = cheb.len();
    let m = cheb.coefficient_matrix();
    let (r, c) = (table[0].nrows(), table[0].ncols());
    let mut out = vec![linalg::zeros(r, c); table.len()];
    for j in 0..table.len() / n {
        for k in 0..n {
            let o = &mut out[j * n + k];
            for i in 0..n {
                *o += &table[j * n + i] * C64::new(m[k * n + i], 0.0);
            }
        }
    }
    out
}

impl DeformationKernel {
    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn config(&self) -> KernelConfig {
        self.config
    }

    fn n(&self) -> usize {
        self.cheb.len()
    }

    fn lower(&self, s: f64, s2: f64) -> CMat {
        let mut out = linalg::zeros(self.nu, self.nu);
        if s2 <= 0.0 {
            return out;
        }
        let lw = self.cheb.cardinal(s2);
        let lu = self.cheb.cardinal((s / s2).min(1.0));
        let n = self.n();
        for (j, &a) in lw.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (i, &b) in lu.iter().enumerate() {
                if b != 0.0 {
                    out += &self.table[j * n + i] * C64::new(a * b, 0.0);
                }
            }
        }
        out
    }

    /// `K̃t(s, s′)` from the table.
    pub fn eval(&self, s: f64, s2: f64) -> CMat {
        let (s, s2) = (s.clamp(0.0, 1.0), s2.clamp(0.0, 1.0));
        if s <= s2 {
            self.lower(s, s2)
        } else {
            self.lower(s2, s).transpose()
        }
    }

    /// `K̃t(s, s)`.
    pub fn diag(&self, s: f64) -> CMat {
        self.lower(s, s)
    }

    /// Table contracted against `s′`, for repeated evaluation of
    /// `K̃t(s, s′)` at `s ≤ s′`.
    pub fn column(&self, s2: f64) -> KernelColumn {
        let n = self.n();
        let lw = self.cheb.cardinal(s2.clamp(0.0, 1.0));
        let cols = (0..n)
            .map(|i| {
                let mut m = linalg::zeros(self.nu, self.nu);
                if s2 > 0.0 {
                    for (j, &a) in lw.iter().enumerate() {
                        if a != 0.0 {
                            m += &self.table[j * n + i] * C64::new(a, 0.0);
                        }
                    }
                }
                m
            })
            .collect();
        KernelColumn { s2, cols }
    }

    /// Table in Chebyshev coefficients along `u`:
    /// `K̃t(u w_j, w_j) = Σ_k table[j * n + k] T_k(2u − 1)`.
    pub fn chebyshev_table(&self) -> &[CMat] {
        &self.u_coef
    }

    /// Chebyshev coefficients of `s ↦ K̃t(s, s)`.
    pub fn diag_chebyshev(&self) -> Vec<CMat> {
        let n = self.n();
        let diag: Vec<CMat> = (0..n).map(|j| self.table[j * n + n - 1].clone()).collect();
        to_chebyshev(&self.cheb, &diag)
    }

    /// `T_k(2x − 1)` for every grid index `k`.
    pub fn chebyshev_into(&self, x: f64, out: &mut [f64]) {
        self.cheb.chebyshev_into(x, out)
    }

    pub fn cardinal_u(&self, u: f64, out: &mut [f64]) {
        self.cheb.cardinal_into(u.clamp(0.0, 1.0), out)
    }

    pub fn grid_len(&self) -> usize {
        self.n()
    }

    /// Triangle grid points `(s, s′)` with `s ≤ s′` and their table values.
    pub fn grid_points(&self) -> impl Iterator<Item = (f64, f64, &CMat)> + '_ {
        let n = self.n();
        (0..n * n).map(move |idx| {
            let (j, i) = (idx / n, idx % n);
            let w = self.cheb.nodes[j];
            (self.cheb.nodes[i] * w, w, &self.table[idx])
        })
    }

    /// Largest entrywise imaginary part over the table.
    pub fn max_imag(&self) -> f64 {
        self.table.iter().map(linalg::max_imag).fold(0.0, f64::max)
    }

    /// `Σ_{j,k} ξj·K̃t(sj, sk)ξk` for point masses strictly inside `(0, 1)`.
    pub fn quadratic_form(&self, masses: &[(f64, Vec<f64>)]) -> Result<C64> {
        quadratic_form_with(masses, |s, s2| self.eval(s, s2))
    }

    /// CSV dump with columns `s, s′, Re K̃jk, Im K̃jk` on a uniform
    /// `points × points` grid of the square.
    pub fn write_csv<W: Write>(&self, mut out: W, points: usize) -> std::io::Result<()> {
        let mut header = String::from("s,s_prime");
        for j in 0..self.nu {
            for k in 0..self.nu {
                header.push_str(&format!(",re_k{j}{k},im_k{j}{k}"));
            }
        }
        writeln!(out, "{header}")?;
        let step = 1.0 / (points.max(2) - 1) as f64;
        for a in 0..points.max(2) {
            for b in 0..points.max(2) {
                let (s, s2) = (a as f64 * step, b as f64 * step);
                let k = self.eval(s, s2);
                let mut line = format!("{s},{s2}");
                for j in 0..self.nu {
                    for l in 0..self.nu {
                        line.push_str(&format!(",{:e},{:e}", k[(j, l)].re, k[(j, l)].im));
                    }
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

/// `K̃t(·, s′)` restricted to `s ≤ s′`, with the `s′` interpolation done.
#[derive(Clone, Debug)]
pub struct KernelColumn {
    s2: f64,
    cols: Vec<CMat>,
}

impl KernelColumn {
    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// Partial contractions, one per `u` node.
    pub fn cols(&self) -> &[CMat] {
        &self.cols
    }
}

fn quadratic_form_with<F>(masses: &[(f64, Vec<f64>)], mut k: F) -> Result<C64>
where
    F: FnMut(f64, f64) -> CMat,
{
    for (s, _) in masses {
        if !(*s > 0.0 && *s < 1.0) {
            return Err(Error::BoundaryMass { s: *s });
        }
    }
    let mut total = C64::new(0.0, 0.0);
    for (sj, xj) in masses {
        let xj = linalg::real_vec(xj);
        for (sk, xk) in masses {
            let xk = linalg::real_vec(xk);
            total += linalg::dot(&xj, &(k(*sj, *sk) * xk));
        }
    }
    Ok(total)
}

/// `(μ, μ)0 = Σ s_{j∧k}(1 − s_{j∨k}) ξj·A(0)ξk`.
pub fn quadratic_form_at_zero(a0: &CMat, masses: &[(f64, Vec<f64>)]) -> Result<C64> {
    quadratic_form_with(masses, |s, s2| a0 * C64::new(s.min(s2) * (1.0 - s.max(s2)), 0.0))
}

/// Checks of the propagator equation at one `s′`.
#[derive(Clone, Debug, Serialize)]
pub struct PropagatorReport {
    pub s_prime: f64,
    /// `sup |−K″ + tE(ts)K′ + t²F(ts)K|` over probes away from `s = s′`.
    pub homogeneous: f64,
    /// `max(|K̃t(0, s′)|, |K̃t(1, s′)|)` from the table.
    pub dirichlet: f64,
    /// `|[∂sK̃]⁺ − [∂sK̃]⁻ + A(ts′)|`.
    pub jump_error: f64,
}

pub const PROPAGATOR_FD_STEP: f64 = 5e-3;

/// Finite-difference checks of
/// `(−d²/ds² + tE(ts) d/ds + t²F(ts)) K̃t(·, s′) = A(ts′) δ(s − s′)`
/// with Dirichlet conditions, using direct τ-quadrature for the values.
pub fn propagator_residual(
    kernel: &DeformationKernel,
    quad: &KernelQuadrature,
    s2: f64,
    probes: usize,
) -> Result<PropagatorReport> {
    let h = PROPAGATOR_FD_STEP;
    let t = quad.t();
    let cl = quad.classical();
    let k = |s: f64| quad.eval(s, s2);

    let mut homogeneous = 0.0f64;
    let margin = 5.0 * h;
    let candidates = (0..probes).map(|j| (j as f64 + 0.5) / probes as f64);
    for s in candidates {
        if (s - s2).abs() < margin || s < 2.0 * h || s > 1.0 - 2.0 * h {
            continue;
        }
        let f: Vec<CMat> = (-2..=2).map(|o| k(s + o as f64 * h)).collect::<Result<_>>()?;
        let d1 = (&f[0] - &f[1] * C64::new(8.0, 0.0) + &f[3] * C64::new(8.0, 0.0) - &f[4])
            * C64::new(1.0 / (12.0 * h), 0.0);
        let d2 = (-&f[0] + &f[1] * C64::new(16.0, 0.0) - &f[2] * C64::new(30.0, 0.0)
            + &f[3] * C64::new(16.0, 0.0)
            - &f[4])
            * C64::new(1.0 / (12.0 * h * h), 0.0);
        let (e, fm) = cl.el().eval(t * s)?;
        let r = -d2 + e * d1 * t + fm * &f[2] * (t * t);
        homogeneous = homogeneous.max(linalg::op_norm(&r));
    }

    let dirichlet = linalg::op_norm(&kernel.eval(0.0, s2)).max(linalg::op_norm(&kernel.eval(1.0, s2)));

    let f0 = k(s2)?;
    let right: Vec<CMat> = (1..=4).map(|j| k(s2 + j as f64 * h)).collect::<Result<_>>()?;
    let left: Vec<CMat> = (1..=4).map(|j| k(s2 - j as f64 * h)).collect::<Result<_>>()?;
    let c = |v: f64| C64::new(v, 0.0);
    let forward = (&f0 * c(-25.0) + &right[0] * c(48.0) - &right[1] * c(36.0) + &right[2] * c(16.0)
        - &right[3] * c(3.0))
        * c(1.0 / (12.0 * h));
    let backward = (&f0 * c(25.0) - &left[0] * c(48.0) + &left[1] * c(36.0) - &left[2] * c(16.0)
        + &left[3] * c(3.0))
        * c(1.0 / (12.0 * h));
    let a = cl.model().a().eval(t * s2);
    let jump_error = linalg::max_abs(&(forward - backward + a));

    Ok(PropagatorReport {
        s_prime: s2,
        homogeneous,
        dirichlet,
        jump_error,
    })
}

/// Positivity and size bounds of the quadratic form for one mass set.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    /// `Re(t·(μ, μ)t)`.
    pub re_t_form: f64,
    /// `|(μ, μ)t| / (μ, μ)0`.
    pub ratio_to_zero: f64,
    /// `|K̃t(s)·ξ⊗ξ| / (2n|A(0)| Σ|ξj|²)`.
    pub size_ratio: f64,
    /// `(μ, μ)0`, positive for nonzero masses.
    pub form_at_zero: f64,
}

impl PositivityReport {
    pub fn passes(&self) -> bool {
        self.re_t_form >= -1e-12
            && self.ratio_to_zero <= 2.0 * (1.0 + 1e-9)
            && self.size_ratio <= 1.0 + 1e-9
            && self.form_at_zero > 0.0
    }
}

pub fn positivity_and_bounds(kernel: &DeformationKernel, a0: &CMat, masses: &[(f64, Vec<f64>)]) -> Result<PositivityReport> {
    let form = kernel.quadratic_form(masses)?;
    let form0 = quadratic_form_at_zero(a0, masses)?;
    let n = masses.len() as f64;
    let xi2: f64 = masses.iter().flat_map(|(_, x)| x.iter()).map(|v| v * v).sum();
    let size = 2.0 * n * linalg::op_norm(a0) * xi2;
    Ok(PositivityReport {
        re_t_form: (kernel.t() * form).re,
        ratio_to_zero: form.norm() / form0.re,
        size_ratio: if size > 0.0 { form.norm() / size } else { 0.0 },
        form_at_zero: form0.re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::model::CoefficientModel;

    #[test]
    fn free_kernel_matches_closed_form() {
        let cl = Classical::new(CoefficientModel::free(1));
        let k = build_kernel(&cl, C64::new(0.2, 0.1), KernelConfig::default()).unwrap();
        for a in 0..=20 {
            for b in 0..=20 {
                let (s, s2) = (a as f64 / 20.0, b as f64 / 20.0);
                let exact = s.min(s2) * (1.0 - s.max(s2));
                assert!((k.eval(s, s2)[(0, 0)] - c(exact)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn free_quadratic_form_single_mass() {
        let cl = Classical::new(CoefficientModel::free(1));
        let k = build_kernel(&cl, c(0.1), KernelConfig::default()).unwrap();
        let q = k.quadratic_form(&[(0.5, vec![1.0])]).unwrap();
        assert!((q - c(0.25)).norm() < 1e-13);
        assert_eq!(k.quadratic_form(&[(0.3, vec![0.0]), (0.6, vec![0.0])]).unwrap(), c(0.0));
        assert!(matches!(
            k.quadratic_form(&[(1.0, vec![1.0])]),
            Err(Error::BoundaryMass { .. })
        ));
    }

    #[test]
    fn free_propagator_jump() {
        let cl = Classical::new(CoefficientModel::free(1));
        let t = c(0.25);
        let k = build_kernel(&cl, t, KernelConfig::default()).unwrap();
        let quad = KernelQuadrature::new(&cl, t, 32);
        let r = propagator_residual(&k, &quad, 0.4, 20).unwrap();
        assert!(r.jump_error < 1e-9, "{r:?}");
        assert!(r.homogeneous < 1e-8, "{r:?}");
        assert!(r.dirichlet < 1e-14);
    }

    #[test]
    fn column_contraction_matches_eval() {
        let cl = Classical::new(CoefficientModel::harmonic(1, 2.0));
        let k = build_kernel(&cl, c(0.3), KernelConfig::default()).unwrap();
        let col = k.column(0.7);
        let mut l = vec![0.0; k.grid_len()];
        k.cardinal_u(0.3 / 0.7, &mut l);
        let mut v = linalg::zeros(1, 1);
        for (m, w) in col.cols().iter().zip(l.iter()) {
            v += m * C64::new(*w, 0.0);
        }
        assert!((v - k.eval(0.3, 0.7)).norm() < 1e-15);
    }
}
