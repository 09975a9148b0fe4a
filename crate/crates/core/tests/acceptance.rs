//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatdeform::classical::identities::{classical_identity_residuals, symplectic_residual};
use heatdeform::classical::Classical;
use heatdeform::deformation::{build_kernel, positivity_and_bounds, propagator_residual, KernelConfig, KernelQuadrature};
use heatdeform::linalg::{self, c, real_vec, CVec, C64};
use heatdeform::model::{CoefficientModel, FourierPotential, MatPoly};
use heatdeform::oracles::{brute_force_vn, cn_evolve, free_kernel, mehler_kernel, Grid1D, Magnetic};
use heatdeform::series::{eval_kernel, eval_vn, pde_residual, SeriesConfig, SeriesEvaluator};
use heatdeform::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn j2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

fn magnetic() -> CoefficientModel {
    CoefficientModel::magnetic(j2()).unwrap()
}

fn builtins() -> Vec<(&'static str, CoefficientModel)> {
    vec![
        ("free", CoefficientModel::free(1)),
        ("harmonic", CoefficientModel::harmonic(1, 1.0)),
        ("magnetic", magnetic()),
    ]
}

/// Non-autonomous model with `A`, `iB`, `C` real on the imaginary axis:
/// `A = 𝟙 + t²S`, `B = −(i/2)β + tR`, `C = C₀ + i t D`.
fn real_on_imaginary_axis() -> CoefficientModel {
    let m = |v: [f64; 4]| linalg::from_real(&DMatrix::from_row_slice(2, 2, &v));
    let a = MatPoly::new(vec![linalg::identity(2), linalg::zeros(2, 2), m([0.2, 0.1, 0.1, 0.3])]).unwrap();
    let b = MatPoly::new(vec![linalg::from_real(&j2()) * C64::new(0.0, -0.5), m([0.1, -0.2, 0.05, 0.0])]).unwrap();
    let cc = MatPoly::new(vec![m([0.5, 0.1, 0.1, 0.2]), m([0.1, 0.0, 0.0, 0.2]) * C64::new(0.0, 1.0)]).unwrap();
    CoefficientModel::custom(a, b, cc, 1.0).unwrap()
}

fn rand_vec(rng: &mut ChaCha8Rng, nu: usize, r: f64) -> CVec {
    real_vec(&(0..nu).map(|_| rng.gen_range(-r..r)).collect::<Vec<_>>())
}

fn free_deformation_matrix() -> Result<Outcome> {
    let cl = Classical::new(CoefficientModel::free(2));
    let kernel = build_kernel(&cl, c(0.2), KernelConfig::default())?;
    let mut err = 0.0f64;
    for i in 0..24 {
        for j in 0..24 {
            let (s, s2) = (i as f64 / 23.0, j as f64 / 23.0);
            let expected = linalg::identity(2) * c(free_kernel(s, s2));
            err = err.max(linalg::max_abs(&(kernel.eval(s, s2) - expected)));
        }
    }
    outcome(err < 1e-9, format!("max abs error {err:.2e} < 1e-9"))
}

fn magnetic_closed_forms() -> Result<Outcome> {
    let cl = Classical::new(magnetic());
    let exact = Magnetic::new(&j2());
    let mut err = 0.0f64;
    for t in [c(0.2), C64::new(0.0, 0.3)] {
        let bundle = cl.bundle(t)?;
        for j in 0..=40 {
            let s = j as f64 / 40.0;
            err = err.max(linalg::max_abs(&(bundle.q_flat(s) - exact.q_flat(t, s))));
            err = err.max(linalg::max_abs(&(bundle.q_sharp(s) - exact.q_sharp(t, s))));
        }
        let kernel = build_kernel(&cl, t, KernelConfig::default())?;
        for i in 0..=16 {
            for j in 0..=16 {
                let (s, s2) = (i as f64 / 16.0, j as f64 / 16.0);
                err = err.max(linalg::max_abs(&(kernel.eval(s, s2) - exact.kernel(t, s, s2))));
            }
        }
    }
    outcome(err < 1e-7, format!("max abs error {err:.2e} < 1e-7 over q̃♭, q̃♯, K̃ at t ∈ {{0.2, 0.3i}}"))
}

fn propagator_equation() -> Result<Outcome> {
    let t = c(0.25);
    let (mut hom, mut dir, mut jump) = (0.0f64, 0.0f64, 0.0f64);
    for (_, model) in builtins() {
        let cl = Classical::new(model);
        let kernel = build_kernel(&cl, t, KernelConfig::default())?;
        let quad = KernelQuadrature::new(&cl, t, KernelConfig::default().quadrature_order);
        for s2 in [0.3, 0.5, 0.8] {
            let r = propagator_residual(&kernel, &quad, s2, 8)?;
            hom = hom.max(r.homogeneous);
            dir = dir.max(r.dirichlet);
            jump = jump.max(r.jump_error);
        }
    }
    outcome(
        hom < 1e-5 && dir < 1e-10 && jump < 1e-5,
        format!("homogeneous {hom:.2e} < 1e-5, Dirichlet {dir:.2e} < 1e-10, jump {jump:.2e} < 1e-5"),
    )
}

fn symplectic_invariant() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let models = [
        CoefficientModel::free(1),
        CoefficientModel::free(2),
        CoefficientModel::harmonic(1, 1.0),
        CoefficientModel::harmonic(2, 0.5),
        magnetic(),
    ];
    for model in models {
        let cl = Classical::new(model);
        worst = worst.max(symplectic_residual(&cl, c(0.2), 64)?.0);
    }
    outcome(worst < 1e-9, format!("sup variation {worst:.2e} < 1e-9"))
}

fn classical_identities() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for (_, model) in builtins() {
        let nu = model.nu();
        let cl = Classical::new(model);
        for _ in 0..20 {
            let t = rng.gen_range(0.05..0.3);
            let x = rand_vec(&mut rng, nu, 1.0);
            let y = rand_vec(&mut rng, nu, 1.0);
            worst = worst.max(classical_identity_residuals(&cl, t, &x, &y)?.max_residual());
        }
    }
    outcome(worst < 1e-6, format!("max residual {worst:.2e} < 1e-6 over 60 probes"))
}

fn reality() -> Result<Outcome> {
    let mut models: Vec<CoefficientModel> = builtins().into_iter().map(|(_, m)| m).collect();
    models.push(real_on_imaginary_axis());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for model in models {
        if !model.check_reality().real {
            return outcome(false, "model expected to pass the reality check fails it".into());
        }
        let nu = model.nu();
        let cl = Classical::new(model);
        for tau in [0.05, -0.05, 0.15, -0.15] {
            let t = C64::new(0.0, tau);
            let bundle = cl.bundle(t)?;
            for j in 0..=32 {
                let s = j as f64 / 32.0;
                worst = worst.max(linalg::max_imag(&bundle.q_flat(s)));
                worst = worst.max(linalg::max_imag(&bundle.q_sharp(s)));
            }
            let kernel = build_kernel(&cl, t, KernelConfig::default())?;
            worst = worst.max(kernel.max_imag());
            for _ in 0..5 {
                let x = rand_vec(&mut rng, nu, 2.0);
                let y = rand_vec(&mut rng, nu, 2.0);
                worst = worst.max(cl.phi(t, &x, &y)?.im.abs());
            }
        }
    }
    outcome(worst < 1e-9, format!("max imaginary part {worst:.2e} < 1e-9 (q̃♭, q̃♯, K̃, Φ)"))
}

fn positivity_and_size() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let models: Vec<CoefficientModel> = builtins().into_iter().map(|(_, m)| m).collect();
    let (mut re_min, mut ratio, mut size) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut configs = 0;
    let mut failures = 0;
    for k in 0..100 {
        let model = models[k % models.len()].clone();
        let nu = model.nu();
        let a0 = model.a().eval(c(0.0));
        let cl = Classical::new(model);
        let r = 0.3 * rng.gen_range(0.0f64..1.0).sqrt().max(1e-3);
        let phi = rng.gen_range(-PI / 2.0..=PI / 2.0);
        let t = C64::from_polar(r, phi);
        let kernel = build_kernel(&cl, t, KernelConfig::default())?;
        for _ in 0..5 {
            let n = rng.gen_range(1..=5);
            let masses: Vec<(f64, Vec<f64>)> = (0..n)
                .map(|_| {
                    let s = rng.gen_range(0.01..0.99);
                    (s, (0..nu).map(|_| rng.gen_range(-2.0..2.0)).collect())
                })
                .collect();
            let rep = positivity_and_bounds(&kernel, &a0, &masses)?;
            configs += 1;
            if !rep.passes() {
                failures += 1;
            }
            re_min = re_min.min(rep.re_t_form);
            ratio = ratio.max(rep.ratio_to_zero);
            size = size.max(rep.size_ratio);
        }
    }
    outcome(
        failures == 0,
        format!(
            "{configs} configurations: min Re(t(μ,μ)) {re_min:.2e} ≥ −1e-12, max |(μ,μ)t|/(μ,μ)0 {ratio:.3} ≤ 2, max size ratio {size:.3} ≤ 1"
        ),
    )
}

fn constant_potential() -> Result<Outcome> {
    let cl = Classical::new(CoefficientModel::free(1));
    let config = SeriesConfig {
        n_max: 12,
        tol: 0.0,
        ..SeriesConfig::default()
    };
    let x = real_vec(&[0.3]);
    let y = real_vec(&[-0.2]);
    let mut worst = 0.0f64;
    for a in [c(1.0), C64::new(0.0, 2.0)] {
        let pot = FourierPotential::constant(1, a);
        for t in [c(0.1), C64::new(0.0, 0.1)] {
            let res = eval_kernel(&cl, &pot, t, &x, &y, config)?;
            let exact = (a * t).exp();
            worst = worst.max((res.pconj[(0, 0)] - exact).norm() / exact.norm());
            worst = worst.max((res.p[(0, 0)] - res.p0 * exact).norm() / (res.p0 * exact).norm());
        }
    }
    outcome(worst < 1e-10, format!("max relative error {worst:.2e} < 1e-10 with n_max = 12"))
}

fn low_order_oracle() -> Result<Outcome> {
    let cl = Classical::new(CoefficientModel::free(1));
    let pot = FourierPotential::cosine(&[1.0], 1.0);
    let config = SeriesConfig::default();
    let mut worst = 0.0f64;
    for t in [c(0.2), C64::new(0.15, 0.1)] {
        let kernel = build_kernel(&cl, t, config.kernel)?;
        let bundle = cl.bundle(t)?;
        for (x, y) in [(0.5, -0.5), (0.0, 0.0), (1.2, 0.3), (-0.7, 0.9)] {
            let (x, y) = (real_vec(&[x]), real_vec(&[y]));
            for n in 1..=2 {
                let v = eval_vn(&kernel, &bundle, &pot, n, &x, &y, &config)?.value;
                let o = brute_force_vn(cl.model(), &pot, n, t, &x, &y, 1e-11)?;
                worst = worst.max(linalg::max_abs(&(v - o)));
            }
        }
    }
    outcome(worst < 1e-8, format!("max abs difference {worst:.2e} < 1e-8 for n ∈ {{1, 2}}"))
}

fn pde_residual_of_kernel() -> Result<Outcome> {
    let cl = Classical::new(CoefficientModel::free(1));
    let pot = FourierPotential::cosine(&[1.0], 0.5);
    let config = SeriesConfig {
        n_max: 5,
        nodes: 8,
        ..SeriesConfig::default()
    };
    let y = real_vec(&[0.2]);
    let mut worst = 0.0f64;
    for t in [0.05, 0.1, 0.2, 0.3] {
        for x in [-0.4, 0.9] {
            worst = worst.max(pde_residual(&cl, &pot, t, &real_vec(&[x]), &y, config)?);
        }
    }
    outcome(worst < 1e-4, format!("max relative residual {worst:.2e} < 1e-4 for t ∈ [0.05, 0.3]"))
}

fn crank_nicolson_semigroup() -> Result<Outcome> {
    let model = CoefficientModel::free(1);
    let cl = Classical::new(model.clone());
    let pot = FourierPotential::cosine(&[1.0], 0.5);
    let config = SeriesConfig {
        n_max: 4,
        nodes: 8,
        tol: 0.0,
        ..SeriesConfig::default()
    };
    let grid = Grid1D::new(8.0, 7999, 1e-4)?;
    let xs = grid.points();
    let y = real_vec(&[0.0]);

    // Initial data: the deformation kernel at t = 0.05, cut where p0 is
    // below 1e−20 of its peak.
    let start = SeriesEvaluator::new(&cl, &pot, c(0.05), config)?;
    let cutoff = (0.2f64 * 20.0 * 10f64.ln()).sqrt();
    let inner: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].abs() < cutoff).collect();
    let points: Vec<(CVec, CVec)> = inner.iter().map(|&i| (real_vec(&[xs[i]]), y.clone())).collect();
    let mut u0 = vec![C64::new(0.0, 0.0); xs.len()];
    for (&i, r) in inner.iter().zip(start.eval(&points)?) {
        u0[i] = r.p[(0, 0)];
    }
    let u = cn_evolve(&model, &pot, &grid, &u0, 0.05, 0.2)?;

    let end = SeriesEvaluator::new(&cl, &pot, c(0.2), config)?;
    let window: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].abs() <= 3.0).collect();
    let points: Vec<(CVec, CVec)> = window.iter().map(|&i| (real_vec(&[xs[i]]), y.clone())).collect();
    let mut worst = 0.0f64;
    for (&i, r) in window.iter().zip(end.eval(&points)?) {
        let direct = r.p[(0, 0)];
        worst = worst.max((u[i] - direct).norm() / direct.norm());
    }
    outcome(
        worst < 1e-3,
        format!("max relative error {worst:.2e} < 1e-3 on |x| ≤ 3 (dx = {:.1e}, dt = 1e-4)", grid.dx()),
    )
}

fn harmonic_mehler() -> Result<Outcome> {
    let cl = Classical::new(CoefficientModel::harmonic(1, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for t in [0.1, 0.2] {
        let k = cl.unperturbed(c(t))?;
        for _ in 0..50 {
            let x = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(-2.0..2.0);
            let exact = mehler_kernel(1.0, t, x, y)?;
            let got = k.eval(&real_vec(&[x]), &real_vec(&[y]));
            worst = worst.max((got - exact).norm() / exact);
        }
    }
    outcome(worst < 1e-7, format!("max relative error {worst:.2e} < 1e-7 at 100 probes"))
}

fn series_majorant() -> Result<Outcome> {
    let cases: Vec<(CoefficientModel, FourierPotential)> = vec![
        (CoefficientModel::free(1), FourierPotential::cosine(&[1.0], 1.0)),
        (CoefficientModel::harmonic(1, 1.0), FourierPotential::cosine(&[1.5], 0.5)),
        (magnetic(), FourierPotential::cosine(&[1.0, 0.5], 1.0)),
    ];
    let config = SeriesConfig {
        nodes: 6,
        ..SeriesConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (model, pot) in cases {
        let nu = model.nu();
        let cl = Classical::new(model);
        for t in [c(0.1), c(0.25), C64::new(0.15, 0.1), C64::new(0.0, 0.2)] {
            let ev = SeriesEvaluator::new(&cl, &pot, t, config)?;
            let points: Vec<(CVec, CVec)> = (0..3).map(|_| (rand_vec(&mut rng, nu, 1.0), rand_vec(&mut rng, nu, 1.0))).collect();
            for n in 1..=6 {
                let terms = ev.vn(n, &points)?;
                for ((x, y), term) in points.iter().zip(terms) {
                    let r = linalg::vnorm(x) + linalg::vnorm(y);
                    let bound = majorant(&pot, r, t, n);
                    worst = worst.max(linalg::op_norm(&term.value) / bound);
                    checked += 1;
                }
            }
        }
    }
    outcome(worst <= 1.0, format!("max |vn| / (Â|t|)ⁿ/n! = {worst:.2e} ≤ 1 over {checked} terms, n ≤ 6"))
}

/// `(Â|t|)ⁿ/n!` evaluated in log space.
fn majorant(pot: &FourierPotential, r: f64, t: C64, n: usize) -> f64 {
    let ahat = 2.0 * pot.moment_bound(2.0 * r, t.norm());
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (n as f64 * (ahat * t.norm()).ln() - log_fact).exp()
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Outcome>)> = vec![
        ("free deformation matrix closed form", free_deformation_matrix),
        ("magnetic trajectories and deformation matrix", magnetic_closed_forms),
        ("propagator equation", propagator_equation),
        ("symplectic invariant", symplectic_invariant),
        ("eikonal and classical identities", classical_identities),
        ("reality on the imaginary axis", reality),
        ("positivity and size bounds", positivity_and_size),
        ("constant-potential exactness", constant_potential),
        ("low-order oracle equivalence", low_order_oracle),
        ("PDE residual of the assembled kernel", pde_residual_of_kernel),
        ("Crank–Nicolson semigroup cross-check", crank_nicolson_semigroup),
        ("harmonic kernel against Mehler", harmonic_mehler),
        ("series majorant", series_majorant),
    ];
    // Optional criterion numbers on the command line select a subset.
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(k + 1)) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(Ok(o)) => (o.pass, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "acceptance {:02} {name}: {} ({detail}) [{secs:.1}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
