//! `heatdeform classical`.

use std::fmt::Write as _;
use std::fs;

use serde_json::json;

use heatdeform::classical::identities::{classical_identity_residuals, p0_pde_residual, symplectic_residual};
use heatdeform::linalg::{self, C64};
use heatdeform::model::ModelKind;
use heatdeform::oracles::{Harmonic, Magnetic};
use heatdeform::Error;

use crate::report::{all_pass, write_json, Check};
use crate::{ClassicalArgs, Context, Failure, EXIT_PASS, EXIT_VERIFY};

pub const IDENTITY_THRESHOLD: f64 = 1e-6;
pub const P0_PDE_THRESHOLD: f64 = 1e-5;
pub const SYMPLECTIC_THRESHOLD: f64 = 1e-8;
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;
pub const CLOSED_FORM_THRESHOLD: f64 = 1e-7;

/// Coordinates as a space-separated field of real parts.
pub fn coords(v: &heatdeform::CVec) -> String {
    v.iter().map(|z| z.re.to_string()).collect::<Vec<_>>().join(" ")
}

/// Report fields for a radius or focal-point error.
pub fn radius_error_json(e: &Error) -> serde_json::Value {
    match e {
        Error::FocalPoint { t, conditioning } => json!({
            "kind": "focal_point",
            "t": [t.re, t.im],
            "conditioning": conditioning,
            "message": e.to_string(),
        }),
        Error::OutOfRadius { t, radius } => json!({
            "kind": "out_of_radius",
            "t": [t.re, t.im],
            "radius": radius,
            "message": e.to_string(),
        }),
        _ => json!({"kind": "other", "message": e.to_string()}),
    }
}

/// `q̃♭, q̃♯` against the builtin closed forms, when one exists.
fn closed_form_error(ctx: &Context, t: C64, samples: usize) -> Result<Option<f64>, Error> {
    let b = ctx.classical.bundle(t)?;
    let s_at = |k: usize| k as f64 / samples as f64;
    let worst = match ctx.problem.model.kind() {
        ModelKind::Magnetic { beta } => {
            let m = Magnetic::new(beta);
            (0..=samples)
                .map(|k| {
                    let s = s_at(k);
                    linalg::max_abs(&(b.q_flat(s) - m.q_flat(t, s))).max(linalg::max_abs(&(b.q_sharp(s) - m.q_sharp(t, s))))
                })
                .fold(0.0, f64::max)
        }
        ModelKind::Harmonic { lambda } if ctx.problem.model.nu() == 1 && *lambda >= 0.0 => {
            let h = Harmonic { omega: lambda.sqrt() };
            (0..=samples)
                .map(|k| {
                    let s = s_at(k);
                    (b.q_flat(s)[(0, 0)] - h.q_flat(t, s)).norm().max((b.q_sharp(s)[(0, 0)] - h.q_sharp(t, s)).norm())
                })
                .fold(0.0, f64::max)
        }
        _ => return Ok(None),
    };
    Ok(Some(worst))
}

fn process(ctx: &Context, args: &ClassicalArgs, t: C64, checks: &mut Vec<Check>, tables: &mut [String; 3]) -> Result<(), Error> {
    let cl = &ctx.classical;
    let nu = cl.nu();
    let b = cl.bundle(t)?;
    let samples = args.samples.max(1);
    for k in 0..=samples {
        let s = k as f64 / samples as f64;
        for (name, m) in [("flat", b.q_flat(s)), ("sharp", b.q_sharp(s))] {
            for i in 0..nu {
                for j in 0..nu {
                    let z = m[(i, j)];
                    writeln!(tables[0], "{},{},{s},{name},{i},{j},{},{}", t.re, t.im, z.re, z.im).unwrap();
                }
            }
        }
    }
    let boundary = linalg::max_abs(&b.q_flat(0.0))
        .max(linalg::max_abs(&b.q_sharp(1.0)))
        .max(linalg::max_abs(&(b.q_flat(1.0) - linalg::identity(nu))))
        .max(linalg::max_abs(&(b.q_sharp(0.0) - linalg::identity(nu))));
    checks.push(Check::below("boundary_values", Some(t), boundary, BOUNDARY_THRESHOLD));
    if let Some(err) = closed_form_error(ctx, t, samples)? {
        checks.push(Check::below("closed_form_trajectories", Some(t), err, CLOSED_FORM_THRESHOLD));
    }
    let (sup, w0) = symplectic_residual(cl, t, samples)?;
    checks.push(Check::below("symplectic", Some(t), sup / w0.max(1.0), SYMPLECTIC_THRESHOLD));

    let (gamma, theta) = cl.gamma_theta(t)?;
    let theta_integral = cl.theta_integral(t)?;
    writeln!(
        tables[2],
        "{},{},{},{},{},{},{},{}",
        t.re, t.im, gamma.re, gamma.im, theta.re, theta.im, theta_integral.re, theta_integral.im
    )
    .unwrap();

    let p0 = cl.unperturbed(t)?;
    let real_time = t.im == 0.0 && t.re > 0.0;
    let (mut eikonal, mut momentum, mut transport, mut pde) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (x, y) in &ctx.points {
        let a = cl.action(t, x, y)?;
        let v = p0.eval(x, y);
        writeln!(
            tables[1],
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.re,
            t.im,
            coords(x),
            coords(y),
            a.phi.re,
            a.phi.im,
            a.phi0.re,
            a.phi0.im,
            a.theta_integral.re,
            a.theta_integral.im,
            v.re,
            v.im
        )
        .unwrap();
        if real_time {
            let r = classical_identity_residuals(cl, t.re, x, y)?;
            eikonal = eikonal.max(r.eikonal);
            momentum = momentum.max(r.momentum);
            transport = transport.max(r.transport);
            pde = pde.max(p0_pde_residual(cl, t.re, x, y)?);
        }
    }
    if real_time {
        checks.push(Check::below("eikonal", Some(t), eikonal, IDENTITY_THRESHOLD));
        checks.push(Check::below("momentum", Some(t), momentum, IDENTITY_THRESHOLD));
        checks.push(Check::below("transport", Some(t), transport, IDENTITY_THRESHOLD));
        checks.push(Check::below("p0_pde", Some(t), pde, P0_PDE_THRESHOLD));
    } else {
        for name in ["eikonal", "momentum", "transport", "p0_pde"] {
            checks.push(Check::skipped(name, Some(t), "finite differences in t need real t > 0"));
        }
    }
    Ok(())
}

pub fn run(args: &ClassicalArgs) -> Result<u8, Failure> {
    let ctx = Context::new(&args.common, 3)?;
    let mut checks = Vec::new();
    let mut tables = [
        "t_re,t_im,s,trajectory,i,j,re,im\n".to_string(),
        "t_re,t_im,x,y,phi_re,phi_im,phi0_re,phi0_im,theta_integral_re,theta_integral_im,p0_re,p0_im\n".to_string(),
        "t_re,t_im,gamma_re,gamma_im,theta_re,theta_im,theta_integral_re,theta_integral_im\n".to_string(),
    ];
    let mut error = None;
    for &t in &ctx.times {
        if let Err(e) = process(&ctx, args, t, &mut checks, &mut tables) {
            error = Some(e);
            break;
        }
    }
    for (name, text) in ["trajectories.csv", "action.csv", "theta.csv"].iter().zip(&tables) {
        fs::write(ctx.out.join(name), text)?;
    }
    let mut report = json!({
        "command": "classical",
        "model": ctx.problem.model.name(),
        "nu": ctx.problem.model.nu(),
        "checks": checks,
        "pass": error.is_none() && all_pass(&checks),
    });
    for c in &checks {
        println!("{c}");
    }
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
