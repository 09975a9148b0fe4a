//! Deformation-series terms
//!
//! `vn(t, x, y) = tⁿ Σ_{m₁..mₙ} ∫_{0<s₁<⋯<sₙ<1} e^{iΣⱼ q̃♮t(sⱼ)·ξⱼ}
//! e^{−t Σⱼₖ ξⱼ·K̃t(sⱼ, sₖ)ξₖ} a_{mₙ}(sₙt)⋯a_{m₁}(s₁t) dⁿs`,
//! the certified tail majorant, `pconj = 𝟙 + Σ vn` and `p = p0 · pconj`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::classical::identities::heat_equation_residual;
use crate::classical::{Classical, TrajectoryBundle, UnperturbedKernel};
use crate::deformation::{build_kernel, DeformationKernel, KernelConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::model::FourierPotential;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_N_MAX: usize = 6;
pub const DEFAULT_NODES: usize = 12;
pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesConfig {
    pub n_max: usize,
    /// Gauss–Legendre nodes per simplex dimension.
    pub nodes: usize,
    /// Largest accepted `(mode tuples) · Qⁿ` per order.
    pub budget: u64,
    pub tol: f64,
    /// Integrate tuples made only of `ξ = 0` modes exactly instead of by
    /// quadrature.
    pub exact_zero_frequency: bool,
    pub kernel: KernelConfig,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            n_max: DEFAULT_N_MAX,
            nodes: DEFAULT_NODES,
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
            exact_zero_frequency: true,
            kernel: KernelConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub n: usize,
    pub value: CMat,
    pub quadrature_order: usize,
    pub mode_tuple_count: u64,
}

/// Quadrature evaluations needed for order `n`, per evaluation point.
pub fn evaluation_count(pot: &FourierPotential, n: usize, nodes: usize, exact_zero_frequency: bool) -> f64 {
    let m = pot.modes().len() as f64;
    let m0 = pot.modes().iter().filter(|m| m.is_zero_frequency()).count() as f64;
    let tuples = if exact_zero_frequency {
        m.powi(n as i32) - m0.powi(n as i32)
    } else {
        m.powi(n as i32)
    };
    tuples * (nodes as f64).powi(n as i32)
}

fn check_budget(pot: &FourierPotential, n: usize, config: &SeriesConfig) -> Result<()> {
    let required = evaluation_count(pot, n, config.nodes, config.exact_zero_frequency);
    if required > config.budget as f64 {
        return Err(Error::Budget {
            order: n,
            required,
            budget: config.budget,
        });
    }
    Ok(())
}

/// Contribution of the tuples made only of `ξ = 0` modes:
/// `tⁿ Gₙ(1)` with `G₀ = 𝟙`, `Gⱼ(s) = ∫₀ˢ a₀(ut) Gⱼ₋₁(u) du` and `a₀` the sum of
/// their amplitudes. The recursion runs on exact polynomial coefficients.
pub fn zero_frequency_term(pot: &FourierPotential, n: usize, t: C64) -> CMat {
    let d = pot.d();
    let zero_modes: Vec<_> = pot.modes().iter().filter(|m| m.is_zero_frequency()).collect();
    if zero_modes.is_empty() {
        return linalg::zeros(d, d);
    }
    let a0 = zero_modes
        .iter()
        .skip(1)
        .fold(zero_modes[0].amplitude.clone(), |acc, m| acc.add(&m.amplitude));
    // Coefficients of a₀(ut) in u.
    let mut tk = C64::new(1.0, 0.0);
    let alpha: Vec<CMat> = a0
        .coeffs()
        .iter()
        .map(|c| {
            let v = c * tk;
            tk *= t;
            v
        })
        .collect();
    let mut g = vec![linalg::identity(d)];
    for _ in 0..n {
        let mut h = vec![linalg::zeros(d, d); alpha.len() + g.len() - 1];
        for (l, al) in alpha.iter().enumerate() {
            for (m, gm) in g.iter().enumerate() {
                h[l + m] += al * gm;
            }
        }
        let mut next = vec![linalg::zeros(d, d)];
        for (k, hk) in h.into_iter().enumerate() {
            next.push(hk * C64::new(1.0 / (k + 1) as f64, 0.0));
        }
        g = next;
    }
    let total = g.into_iter().fold(linalg::zeros(d, d), |acc, m| acc + m);
    total * t.powu(n as u32)
}

/// Integrand of one mode tuple at simplex point `s₁ < ⋯ < sₙ` (given in
/// ascending order, `modes[j]` attached to `s[j]`), without the factor `tⁿ`.
/// Reads `K̃t` and `q̃♮t` from the kernel table and the trajectory bundle.
pub fn tuple_integrand(
    kernel: &DeformationKernel,
    bundle: &TrajectoryBundle,
    pot: &FourierPotential,
    s: &[f64],
    modes: &[usize],
    x: &CVec,
    y: &CVec,
) -> CMat {
    let t = kernel.t();
    let xis: Vec<CVec> = modes.iter().map(|&m| pot.modes()[m].xi_vec()).collect();
    let mut expo = C64::new(0.0, 0.0);
    for (j, sj) in s.iter().enumerate() {
        expo += I * linalg::dot(&bundle.qnat(x, y, *sj), &xis[j]);
        for (k, sk) in s.iter().enumerate() {
            expo -= t * linalg::dot(&xis[j], &(kernel.eval(*sj, *sk) * &xis[k]));
        }
    }
    let mut amp = linalg::identity(pot.d());
    for (j, &m) in modes.iter().enumerate().rev() {
        amp *= pot.modes()[m].amplitude.eval(t * s[j]);
    }
    amp * expo.exp()
}

/// `u·Mv` without allocating.
fn bilinear(u: &CVec, m: &CMat, v: &CVec) -> C64 {
    let mut out = C64::new(0.0, 0.0);
    for j in 0..m.ncols() {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..m.nrows() {
            col += u[i] * m[(i, j)];
        }
        out += col * v[j];
    }
    out
}

/// Per-node data shared by all children of one simplex node.
struct Level {
    s: f64,
    /// `ᵀq̃♭(s)ξ_m` and `ᵀq̃♯(s)ξ_m` per mode.
    alpha: Vec<CVec>,
    beta: Vec<CVec>,
    /// `ξ_m·K̃(s, s)ξ_m + 2 Σ_ancestors ξ_m·K̃(s, s_a)ξ_a` per mode.
    quad: Vec<C64>,
    amp: Vec<CMat>,
    /// Cardinal weights of the grid in `w` at `s`, for non-leaf nodes.
    lw: Vec<f64>,
    /// Chebyshev coefficients along `u` of `ξ_{m′}·K̃(u s, s)ξ_m` for this
    /// node's chosen mode `m`, at `[m′ · g + k]`.
    proj: Vec<C64>,
    /// Running product of amplitudes down to this node.
    amp_prod: CMat,
    /// Running phase exponent per point.
    phase: Vec<C64>,
}

/// Depth-first traversal of the nested Gauss–Legendre tree for one order.
struct Walk<'a> {
    kernel: &'a DeformationKernel,
    bundle: &'a TrajectoryBundle,
    pot: &'a FourierPotential,
    rule: &'a GaussLegendre,
    xis: Vec<CVec>,
    zero: Vec<bool>,
    n: usize,
    t: C64,
    skip_zero: bool,
    xs: &'a [CVec],
    ys: &'a [CVec],
    levels: Vec<Level>,
    qf: CMat,
    qs: CMat,
    /// Chebyshev coefficients of `s ↦ ξ_m·K̃(s, s)ξ_m`, per mode.
    diag_coef: Vec<Vec<C64>>,
    /// `T_k` at the node itself and at `s / s_a` for each ancestor `a`.
    cheb: Vec<f64>,
    cards: Vec<Vec<f64>>,
    /// `ξ_{m′}·C_{jk} ξ_m` at `[m′ · M + m][j · g + k]` for the Chebyshev table `C`.
    pair_table: Vec<Vec<C64>>,
    acc: Vec<CMat>,
}

impl<'a> Walk<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        kernel: &'a DeformationKernel,
        bundle: &'a TrajectoryBundle,
        pot: &'a FourierPotential,
        rule: &'a GaussLegendre,
        n: usize,
        skip_zero: bool,
        xs: &'a [CVec],
        ys: &'a [CVec],
    ) -> Self {
        let nu = pot.nu();
        let d = pot.d();
        let mm = pot.modes().len();
        let g = kernel.grid_len();
        let diag = kernel.diag_chebyshev();
        let diag_coef = pot
            .modes()
            .iter()
            .map(|m| {
                let xi = m.xi_vec();
                diag.iter().map(|dk| bilinear(&xi, dk, &xi)).collect()
            })
            .collect();
        let table = kernel.chebyshev_table();
        let xis: Vec<CVec> = pot.modes().iter().map(|m| m.xi_vec()).collect();
        let pair_table = xis
            .iter()
            .flat_map(|xi2| xis.iter().map(move |xi| (xi2, xi)))
            .map(|(xi2, xi)| table.iter().map(|c| bilinear(xi2, c, xi)).collect())
            .collect();
        let levels = (0..n)
            .map(|_| Level {
                s: 0.0,
                alpha: vec![CVec::zeros(nu); mm],
                beta: vec![CVec::zeros(nu); mm],
                quad: vec![C64::new(0.0, 0.0); mm],
                amp: vec![linalg::zeros(d, d); mm],
                lw: vec![0.0; g],
                proj: vec![C64::new(0.0, 0.0); mm * g],
                amp_prod: linalg::zeros(d, d),
                phase: vec![C64::new(0.0, 0.0); xs.len()],
            })
            .collect();
        Walk {
            kernel,
            bundle,
            pot,
            rule,
            xis,
            zero: pot.modes().iter().map(|m| m.is_zero_frequency()).collect(),
            n,
            t: kernel.t(),
            skip_zero,
            xs,
            ys,
            levels,
            qf: linalg::zeros(nu, nu),
            qs: linalg::zeros(nu, nu),
            diag_coef,
            cheb: vec![0.0; g],
            cards: vec![vec![0.0; g]; n],
            pair_table,
            acc: vec![linalg::zeros(d, d); xs.len()],
        }
    }

    fn prepare(&mut self, depth: usize, s: f64) {
        let g = self.kernel.grid_len();
        self.bundle.q_flat_into(s, &mut self.qf);
        self.bundle.q_sharp_into(s, &mut self.qs);
        self.kernel.chebyshev_into(s, &mut self.cheb);
        for a in 0..depth {
            let u = (s / self.levels[a].s).min(1.0);
            self.kernel.chebyshev_into(u, &mut self.cards[a]);
        }
        let (before, rest) = self.levels.split_at_mut(depth);
        let lv = &mut rest[0];
        lv.s = s;
        for (m, xi) in self.xis.iter().enumerate() {
            self.qf.tr_mul_to(xi, &mut lv.alpha[m]);
            self.qs.tr_mul_to(xi, &mut lv.beta[m]);
            let mut q: C64 = self.cheb.iter().zip(&self.diag_coef[m]).map(|(t, c)| c * *t).sum();
            for (a, anc) in before.iter().enumerate() {
                let proj = &anc.proj[m * g..(m + 1) * g];
                let pair: C64 = self.cards[a].iter().zip(proj).map(|(l, p)| p * *l).sum();
                q += pair * 2.0;
            }
            lv.quad[m] = q;
            self.pot.modes()[m].amplitude.eval_into(self.t * s, &mut lv.amp[m]);
        }
        if depth + 1 < self.n {
            self.kernel.cardinal_u(s, &mut lv.lw);
        }
    }

    /// Visits the nodes at `depth` below a parent at `parent_s`; `only`
    /// restricts to one `(node, mode)` pair.
    fn visit(&mut self, depth: usize, parent_s: f64, weight: f64, expo: C64, nonzero: bool, only: Option<(usize, usize)>) {
        let q = self.rule.len();
        let mm = self.xis.len();
        let g = self.kernel.grid_len();
        let leaf = depth + 1 == self.n;
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        for i in 0..q {
            if only.is_some_and(|(oi, _)| oi != i) {
                continue;
            }
            let s = parent_s * self.rule.nodes[i];
            let w = weight * parent_s * self.rule.weights[i];
            self.prepare(depth, s);
            for m in 0..mm {
                if only.is_some_and(|(_, om)| om != m) {
                    continue;
                }
                let nz = nonzero || !self.zero[m];
                if leaf && self.skip_zero && !nz {
                    continue;
                }
                let e = expo - self.t * self.levels[depth].quad[m];
                let (before, rest) = self.levels.split_at_mut(depth);
                let lv = &mut rest[0];
                match before.last() {
                    Some(parent) => lv.amp_prod.gemm(one, &parent.amp_prod, &lv.amp[m], zero),
                    None => lv.amp_prod.copy_from(&lv.amp[m]),
                }
                let (alpha, beta) = (&lv.alpha[m], &lv.beta[m]);
                if leaf {
                    for (p, acc) in self.acc.iter_mut().enumerate() {
                        let mut z = I * (linalg::dot(alpha, &self.xs[p]) + linalg::dot(beta, &self.ys[p]));
                        if let Some(parent) = before.last() {
                            z += parent.phase[p];
                        }
                        let f = (e + z).exp() * w;
                        for (a, v) in acc.iter_mut().zip(lv.amp_prod.iter()) {
                            *a += v * f;
                        }
                    }
                } else {
                    for p in 0..self.xs.len() {
                        let mut z = I * (linalg::dot(alpha, &self.xs[p]) + linalg::dot(beta, &self.ys[p]));
                        if let Some(parent) = before.last() {
                            z += parent.phase[p];
                        }
                        lv.phase[p] = z;
                    }
                    for m2 in 0..mm {
                        let table = &self.pair_table[m2 * mm + m];
                        let proj = &mut lv.proj[m2 * g..(m2 + 1) * g];
                        proj.fill(C64::new(0.0, 0.0));
                        for (j, &wj) in lv.lw.iter().enumerate() {
                            if wj != 0.0 {
                                for (p, c) in proj.iter_mut().zip(&table[j * g..(j + 1) * g]) {
                                    *p += c * wj;
                                }
                            }
                        }
                    }
                    self.visit(depth + 1, s, w, e, nz, None);
                }
            }
        }
    }
}

/// `vn` at a batch of points `(x, y)` sharing one `t`.
pub fn eval_vn_batch(
    kernel: &DeformationKernel,
    bundle: &TrajectoryBundle,
    pot: &FourierPotential,
    n: usize,
    points: &[(CVec, CVec)],
    config: &SeriesConfig,
) -> Result<Vec<SeriesTerm>> {
    if n == 0 {
        return Err(Error::Problem("series terms start at n = 1".into()));
    }
    if pot.nu() != kernel.nu() {
        return Err(Error::Problem(format!(
            "potential has ν = {}, model has ν = {}",
            pot.nu(),
            kernel.nu()
        )));
    }
    check_budget(pot, n, config)?;
    let d = pot.d();
    let t = kernel.t();
    let mm = pot.modes().len();
    let tuples = (mm as u64).saturating_pow(n as u32);
    let xs: Vec<CVec> = points.iter().map(|p| p.0.clone()).collect();
    let ys: Vec<CVec> = points.iter().map(|p| p.1.clone()).collect();
    let rule = GaussLegendre::new(config.nodes);
    let skip_zero = config.exact_zero_frequency;

    // Without a mode that needs quadrature every leaf would be skipped.
    let needs_walk = pot.modes().iter().any(|m| !skip_zero || !m.is_zero_frequency());
    let tasks: Vec<(usize, usize)> = if needs_walk {
        (0..rule.len()).flat_map(|i| (0..mm).map(move |m| (i, m))).collect()
    } else {
        Vec::new()
    };
    let partial: Vec<Vec<CMat>> = tasks
        .par_iter()
        .map(|&task| {
            let mut walk = Walk::new(kernel, bundle, pot, &rule, n, skip_zero, &xs, &ys);
            walk.visit(0, 1.0, 1.0, C64::new(0.0, 0.0), false, Some(task));
            walk.acc
        })
        .collect();

    let tn = t.powu(n as u32);
    let exact = if skip_zero {
        zero_frequency_term(pot, n, t)
    } else {
        linalg::zeros(d, d)
    };
    Ok((0..points.len())
        .map(|p| {
            let sum = partial.iter().fold(linalg::zeros(d, d), |acc, part| acc + &part[p]);
            SeriesTerm {
                n,
                value: sum * tn + &exact,
                quadrature_order: config.nodes,
                mode_tuple_count: tuples,
            }
        })
        .collect())
}

/// `vn(t, x, y)` at one point.
pub fn eval_vn(
    kernel: &DeformationKernel,
    bundle: &TrajectoryBundle,
    pot: &FourierPotential,
    n: usize,
    x: &CVec,
    y: &CVec,
    config: &SeriesConfig,
) -> Result<SeriesTerm> {
    Ok(eval_vn_batch(kernel, bundle, pot, n, &[(x.clone(), y.clone())], config)?.remove(0))
}

/// `Σ_{n > n_max} (Â|t|)ⁿ/n!` with `Â = 2 Σ_m e^{2R|ξ_m|} sup_{|τ|≤|t|}|a_m(τ)|`,
/// summed in log space.
pub fn truncation_bound(pot: &FourierPotential, r: f64, t: C64, n_max: usize) -> f64 {
    let ahat = 2.0 * pot.moment_bound(2.0 * r, t.norm());
    tail_sum(ahat * t.norm(), n_max)
}

/// `Σ_{n > n_max} zⁿ/n!` for `z ≥ 0`.
fn tail_sum(z: f64, n_max: usize) -> f64 {
    if !(z > 0.0) {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    if z.is_infinite() {
        return f64::INFINITY;
    }
    let lz = z.ln();
    if z > (n_max + 1) as f64 {
        // The head is at most about half of e^z here, so e^z − head is stable.
        let mut log_fact = 0.0;
        let mut head = 0.0;
        for n in 0..=n_max {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            head += (n as f64 * lz - log_fact - z).exp();
        }
        return (z + (1.0 - head).ln()).exp();
    }
    let mut n = n_max + 1;
    let mut log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let mut logs = Vec::new();
    let mut best = f64::NEG_INFINITY;
    loop {
        let l = n as f64 * lz - log_fact;
        best = best.max(l);
        logs.push(l);
        if n as f64 > 2.0 * z && l < best - 45.0 {
            break;
        }
        n += 1;
        log_fact += (n as f64).ln();
    }
    let sum: f64 = logs.iter().map(|l| (l - best).exp()).sum();
    (best + sum.ln()).exp()
}

/// One kernel evaluation with its series terms.
#[derive(Clone, Debug)]
pub struct KernelResult {
    pub t: C64,
    pub x: CVec,
    pub y: CVec,
    pub p0: C64,
    pub terms: Vec<SeriesTerm>,
    pub pconj: CMat,
    pub p: CMat,
    pub tail_bound: f64,
    pub orders_used: usize,
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn vec_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| complex_json(*z)).collect())
}

pub fn mat_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

impl KernelResult {
    /// `{t, x, y, p0, pconj, p, tail_bound, orders_used}`; complex numbers as
    /// `[re, im]`, matrices as rows.
    pub fn to_json(&self) -> Value {
        json!({
            "t": complex_json(self.t),
            "x": vec_json(&self.x),
            "y": vec_json(&self.y),
            "p0": complex_json(self.p0),
            "pconj": mat_json(&self.pconj),
            "p": mat_json(&self.p),
            "tail_bound": self.tail_bound,
            "orders_used": self.orders_used,
        })
    }

    /// Per-order table `n, abs_vn, tail_bound` where `abs_vn` is the operator
    /// norm and `tail_bound` the majorant after order `n`.
    pub fn write_terms_csv<W: Write>(&self, mut out: W, pot: &FourierPotential) -> std::io::Result<()> {
        writeln!(out, "n,abs_vn,tail_bound")?;
        let r = linalg::vnorm(&self.x) + linalg::vnorm(&self.y);
        for term in &self.terms {
            writeln!(
                out,
                "{},{:e},{:e}",
                term.n,
                linalg::op_norm(&term.value),
                truncation_bound(pot, r, self.t, term.n)
            )?;
        }
        Ok(())
    }
}

/// Everything needed to sum the series at one `t`.
pub struct SeriesEvaluator<'a> {
    pot: &'a FourierPotential,
    t: C64,
    bundle: Arc<TrajectoryBundle>,
    kernel: DeformationKernel,
    p0: UnperturbedKernel,
    config: SeriesConfig,
}

impl<'a> SeriesEvaluator<'a> {
    pub fn new(cl: &Classical, pot: &'a FourierPotential, t: C64, config: SeriesConfig) -> Result<Self> {
        if t.norm() == 0.0 {
            return Err(Error::UndefinedAtZero);
        }
        if t.re < 0.0 {
            return Err(Error::Problem(format!("kernel needs Re t ≥ 0, got t = {t}")));
        }
        if pot.nu() != cl.nu() {
            return Err(Error::Problem(format!(
                "potential has ν = {}, model has ν = {}",
                pot.nu(),
                cl.nu()
            )));
        }
        cl.model().check_radius(t)?;
        let bundle = cl.bundle(t)?;
        let kernel = build_kernel(cl, t, config.kernel)?;
        let p0 = cl.unperturbed(t)?;
        Ok(SeriesEvaluator {
            pot,
            t,
            bundle,
            kernel,
            p0,
            config,
        })
    }

    pub fn kernel(&self) -> &DeformationKernel {
        &self.kernel
    }

    pub fn bundle(&self) -> &TrajectoryBundle {
        &self.bundle
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.config
    }

    pub fn vn(&self, n: usize, points: &[(CVec, CVec)]) -> Result<Vec<SeriesTerm>> {
        eval_vn_batch(&self.kernel, &self.bundle, self.pot, n, points, &self.config)
    }

    /// Sums the series at each point, stopping once the tail majorant drops
    /// below `tol` or at `n_max`.
    pub fn eval(&self, points: &[(CVec, CVec)]) -> Result<Vec<KernelResult>> {
        self.eval_with(points, true)
    }

    /// Sums all orders up to `n_max` regardless of the tail majorant.
    pub fn eval_fixed(&self, points: &[(CVec, CVec)]) -> Result<Vec<KernelResult>> {
        self.eval_with(points, false)
    }

    fn eval_with(&self, points: &[(CVec, CVec)], early: bool) -> Result<Vec<KernelResult>> {
        let d = self.pot.d();
        let radii: Vec<f64> = points.iter().map(|(x, y)| linalg::vnorm(x) + linalg::vnorm(y)).collect();
        let mut results: Vec<KernelResult> = points
            .iter()
            .zip(radii.iter())
            .map(|((x, y), &r)| KernelResult {
                t: self.t,
                x: x.clone(),
                y: y.clone(),
                p0: self.p0.eval(x, y),
                terms: Vec::new(),
                pconj: linalg::identity(d),
                p: linalg::zeros(d, d),
                tail_bound: truncation_bound(self.pot, r, self.t, 0),
                orders_used: 0,
            })
            .collect();
        for n in 1..=self.config.n_max {
            let active: Vec<usize> = (0..points.len())
                .filter(|&i| !early || !(results[i].tail_bound < self.config.tol))
                .collect();
            if active.is_empty() {
                break;
            }
            let batch: Vec<(CVec, CVec)> = active.iter().map(|&i| points[i].clone()).collect();
            let terms = self.vn(n, &batch)?;
            for (&i, term) in active.iter().zip(terms) {
                let res = &mut results[i];
                res.pconj += &term.value;
                res.terms.push(term);
                res.orders_used = n;
                res.tail_bound = truncation_bound(self.pot, radii[i], self.t, n);
            }
        }
        for res in &mut results {
            res.p = &res.pconj * res.p0;
        }
        Ok(results)
    }
}

/// `p = p0 · pconj` at one point.
pub fn eval_kernel(
    cl: &Classical,
    pot: &FourierPotential,
    t: C64,
    x: &CVec,
    y: &CVec,
    config: SeriesConfig,
) -> Result<KernelResult> {
    let ev = SeriesEvaluator::new(cl, pot, t, config)?;
    Ok(ev.eval(&[(x.clone(), y.clone())])?.remove(0))
}

/// Relative residual of `∂ₜp = (P0 + c)p` at real `t`, with `p` summed to
/// the fixed order `n_max`.
pub fn pde_residual(cl: &Classical, pot: &FourierPotential, t: f64, x: &CVec, y: &CVec, config: SeriesConfig) -> Result<f64> {
    heat_equation_residual(cl.model(), Some(pot), t, x, |tt, xs| {
        let ev = SeriesEvaluator::new(cl, pot, C64::new(tt, 0.0), config)?;
        let points: Vec<(CVec, CVec)> = xs.iter().map(|p| (p.clone(), y.clone())).collect();
        Ok(ev.eval_fixed(&points)?.into_iter().map(|r| r.p).collect())
    })
}
