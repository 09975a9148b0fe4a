//! `heatdeform verify`.

use rand::Rng;
use serde_json::json;

use heatdeform::classical::identities::{classical_identity_residuals, symplectic_residual};
use heatdeform::deformation::{build_kernel, positivity_and_bounds, propagator_residual, DeformationKernel, KernelQuadrature};
use heatdeform::linalg::{self, C64};
use heatdeform::model::ModelKind;
use heatdeform::oracles::{brute_force_vn, free_kernel, mehler_kernel, Magnetic};
use heatdeform::series::{eval_vn, pde_residual, SeriesConfig, DEFAULT_NODES};
use heatdeform::Error;

use crate::classical::{radius_error_json, IDENTITY_THRESHOLD, SYMPLECTIC_THRESHOLD};
use crate::report::{all_pass, write_json, Check};
use crate::{Context, Failure, VerifyArgs, EXIT_PASS, EXIT_VERIFY};

const HOMOGENEOUS_THRESHOLD: f64 = 1e-5;
const DIRICHLET_THRESHOLD: f64 = 1e-10;
const JUMP_THRESHOLD: f64 = 1e-5;
const REALITY_THRESHOLD: f64 = 1e-9;
const PDE_THRESHOLD: f64 = 1e-4;
const BRUTE_FORCE_THRESHOLD: f64 = 1e-8;
const MEHLER_THRESHOLD: f64 = 1e-8;
const FREE_KERNEL_THRESHOLD: f64 = 1e-9;
const MAGNETIC_KERNEL_THRESHOLD: f64 = 1e-7;
const DEFAULT_VERIFY_N_MAX: usize = 5;
const DEFAULT_VERIFY_NODES: usize = 8;

struct Suite<'a> {
    ctx: &'a mut Context,
    config: SeriesConfig,
    masses: usize,
    real: bool,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn kernel_closed_form(&mut self, kernel: &DeformationKernel, t: C64) {
        let nu = self.ctx.problem.model.nu();
        let grid: Vec<f64> = (0..24).map(|k| (k as f64 + 0.5) / 24.0).collect();
        let worst = |f: &dyn Fn(f64, f64) -> linalg::CMat| {
            grid.iter()
                .flat_map(|&s| grid.iter().map(move |&s2| (s, s2)))
                .map(|(s, s2)| linalg::max_abs(&(kernel.eval(s, s2) - f(s, s2))))
                .fold(0.0, f64::max)
        };
        match self.ctx.problem.model.kind() {
            ModelKind::Free => {
                let e = worst(&|s, s2| linalg::identity(nu) * C64::new(free_kernel(s, s2), 0.0));
                self.checks.push(Check::below("free_kernel_closed_form", Some(t), e, FREE_KERNEL_THRESHOLD));
            }
            ModelKind::Magnetic { beta } => {
                let m = Magnetic::new(beta);
                let e = worst(&|s, s2| m.kernel(t, s, s2));
                self.checks.push(Check::below("magnetic_kernel_closed_form", Some(t), e, MAGNETIC_KERNEL_THRESHOLD));
            }
            _ => {}
        }
    }

    fn propagator(&mut self, kernel: &DeformationKernel, t: C64) -> Result<(), Error> {
        let quad = KernelQuadrature::new(&self.ctx.classical, t, self.config.kernel.quadrature_order);
        let (mut hom, mut dir, mut jump) = (0.0f64, 0.0f64, 0.0f64);
        for s2 in [0.3, 0.5, 0.8] {
            let r = propagator_residual(kernel, &quad, s2, 8)?;
            hom = hom.max(r.homogeneous);
            dir = dir.max(r.dirichlet);
            jump = jump.max(r.jump_error);
        }
        self.checks.push(Check::below("propagator_homogeneous", Some(t), hom, HOMOGENEOUS_THRESHOLD));
        self.checks.push(Check::below("propagator_dirichlet", Some(t), dir, DIRICHLET_THRESHOLD));
        self.checks.push(Check::below("propagator_jump", Some(t), jump, JUMP_THRESHOLD));
        Ok(())
    }

    fn positivity(&mut self, kernel: &DeformationKernel, t: C64) -> Result<(), Error> {
        if !self.real {
            self.checks.push(Check::skipped("positivity", Some(t), "model fails the reality check"));
            return Ok(());
        }
        if t.re < 0.0 {
            self.checks.push(Check::skipped("positivity", Some(t), "needs Re t ≥ 0"));
            return Ok(());
        }
        let nu = self.ctx.problem.model.nu();
        let a0 = self.ctx.problem.model.a().eval(C64::new(0.0, 0.0));
        let (mut failures, mut re_min, mut ratio, mut size) = (0, f64::INFINITY, 0.0f64, 0.0f64);
        for _ in 0..self.masses {
            let rng = &mut self.ctx.rng;
            let n = rng.gen_range(1..=5);
            let masses: Vec<(f64, Vec<f64>)> = (0..n)
                .map(|_| (rng.gen_range(0.01..0.99), (0..nu).map(|_| rng.gen_range(-2.0..2.0)).collect()))
                .collect();
            let r = positivity_and_bounds(kernel, &a0, &masses)?;
            if !r.passes() {
                failures += 1;
            }
            re_min = re_min.min(r.re_t_form);
            ratio = ratio.max(r.ratio_to_zero);
            size = size.max(r.size_ratio);
        }
        self.checks.push(Check::flag(
            "positivity",
            Some(t),
            failures == 0,
            format!(
                "{} configurations, {failures} failing: min Re(t(μ,μ)) {re_min:.3e}, max ratio to t = 0 {ratio:.3}, max size ratio {size:.3}",
                self.masses
            ),
        ));
        Ok(())
    }

    fn imaginary_axis(&mut self, kernel: &DeformationKernel, t: C64) -> Result<(), Error> {
        if t.re != 0.0 {
            return Ok(());
        }
        let b = self.ctx.classical.bundle(t)?;
        let mut worst = b.max_imag().max(kernel.max_imag());
        for (x, y) in &self.ctx.points {
            worst = worst.max(self.ctx.classical.phi(t, x, y)?.im.abs());
        }
        self.checks.push(Check::below("imaginary_axis_reality", Some(t), worst, REALITY_THRESHOLD));
        Ok(())
    }

    fn real_time(&mut self, t: C64) -> Result<(), Error> {
        let names = ["classical_identities", "pde_residual", "mehler"];
        if !(t.im == 0.0 && t.re > 0.0) {
            for name in names {
                self.checks.push(Check::skipped(name, Some(t), "needs real t > 0"));
            }
            return Ok(());
        }
        let cl = &self.ctx.classical;
        let mut identities = 0.0f64;
        for (x, y) in &self.ctx.points {
            identities = identities.max(classical_identity_residuals(cl, t.re, x, y)?.max_residual());
        }
        self.checks.push(Check::below("classical_identities", Some(t), identities, IDENTITY_THRESHOLD));

        let radius = self.ctx.problem.model.validity_radius();
        if (0.05 * radius..=0.3 * radius).contains(&t.re) {
            let mut worst = 0.0f64;
            for (x, y) in &self.ctx.points {
                worst = worst.max(pde_residual(cl, &self.ctx.problem.potential, t.re, x, y, self.config)?);
            }
            self.checks.push(Check::below("pde_residual", Some(t), worst, PDE_THRESHOLD));
        } else {
            self.checks.push(Check::skipped("pde_residual", Some(t), "needs t in [0.05, 0.3] × validity radius"));
        }

        if let ModelKind::Harmonic { lambda } = self.ctx.problem.model.kind() {
            if self.ctx.problem.model.nu() == 1 && *lambda > 0.0 {
                let k = cl.unperturbed(t)?;
                let mut worst = 0.0f64;
                for (x, y) in &self.ctx.points {
                    let exact = mehler_kernel(lambda.sqrt(), t.re, x[0].re, y[0].re)?;
                    worst = worst.max((k.eval(x, y) - exact).norm() / exact);
                }
                self.checks.push(Check::below("mehler", Some(t), worst, MEHLER_THRESHOLD));
            }
        }
        Ok(())
    }

    fn brute_force(&mut self, kernel: &DeformationKernel, t: C64) -> Result<(), Error> {
        let pot = &self.ctx.problem.potential;
        let (x, y) = &self.ctx.points[0];
        let b = self.ctx.classical.bundle(t)?;
        let config = SeriesConfig { nodes: DEFAULT_NODES, ..self.config };
        let mut worst = 0.0f64;
        for n in 1..=2 {
            let series = eval_vn(kernel, &b, pot, n, x, y, &config)?.value;
            let oracle = brute_force_vn(&self.ctx.problem.model, pot, n, t, x, y, 1e-11)?;
            worst = worst.max(linalg::max_abs(&(series - oracle)));
        }
        self.checks.push(Check::below("series_vs_brute_force", Some(t), worst, BRUTE_FORCE_THRESHOLD));
        Ok(())
    }

    fn at(&mut self, t: C64) -> Result<(), Error> {
        let (sup, w0) = symplectic_residual(&self.ctx.classical, t, 32)?;
        self.checks.push(Check::below("symplectic", Some(t), sup / w0.max(1.0), SYMPLECTIC_THRESHOLD));
        let kernel = build_kernel(&self.ctx.classical, t, self.config.kernel)?;
        self.kernel_closed_form(&kernel, t);
        self.propagator(&kernel, t)?;
        self.positivity(&kernel, t)?;
        self.imaginary_axis(&kernel, t)?;
        self.real_time(t)?;
        self.brute_force(&kernel, t)?;
        Ok(())
    }
}

pub fn run(args: &VerifyArgs) -> Result<u8, Failure> {
    let mut ctx = Context::new(&args.common, 2)?;
    let config = args.series.config(DEFAULT_VERIFY_N_MAX, DEFAULT_VERIFY_NODES)?;
    let reality = ctx.problem.model.check_reality();
    let detail = if reality.real {
        "A, iB, C real on the imaginary axis".to_string()
    } else {
        reality
            .offending
            .iter()
            .map(|v| format!("{} order {} has imaginary part {:.3e}", v.coefficient, v.order, v.max_imag))
            .collect::<Vec<_>>()
            .join("; ")
    };
    let times = ctx.times.clone();
    let mut suite = Suite {
        ctx: &mut ctx,
        config,
        masses: args.masses,
        real: reality.real,
        checks: vec![Check::flag("reality", None, reality.real, detail)],
    };
    let mut error = None;
    for t in times {
        if let Err(e) = suite.at(t) {
            error = Some(e);
            break;
        }
    }
    let checks = suite.checks;
    for c in &checks {
        println!("{c}");
    }
    let mut report = json!({
        "command": "verify",
        "model": ctx.problem.model.name(),
        "nu": ctx.problem.model.nu(),
        "checks": checks,
        "pass": error.is_none() && all_pass(&checks),
    });
    if let Some(e) = error {
        if e.is_radius_error() {
            report["error"] = radius_error_json(&e);
        }
        write_json(&ctx.out.join("report.json"), &report)?;
        return Err(e.into());
    }
    write_json(&ctx.out.join("report.json"), &report)?;
    Ok(if all_pass(&checks) { EXIT_PASS } else { EXIT_VERIFY })
}
