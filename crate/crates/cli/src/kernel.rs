//! `heatdeform kernel`.

use std::fmt::Write as _;
use std::fs;

use serde_json::{json, Value};

use heatdeform::linalg;
use heatdeform::series::{truncation_bound, SeriesEvaluator, DEFAULT_NODES, DEFAULT_N_MAX};

use crate::classical::radius_error_json;
use crate::report::write_json;
use crate::{Context, Failure, KernelArgs, EXIT_PASS};

pub fn run(args: &KernelArgs) -> Result<u8, Failure> {
    let ctx = Context::new(&args.common, 3)?;
    let config = args.series.config(DEFAULT_N_MAX, DEFAULT_NODES)?;
    let pot = &ctx.problem.potential;
    let mut records: Vec<Value> = Vec::new();
    let mut terms = String::from("t_re,t_im,point,n,abs_vn,tail_bound\n");
    let mut error = None;
    for &t in &ctx.times {
        let results = match SeriesEvaluator::new(&ctx.classical, pot, t, config).and_then(|ev| ev.eval(&ctx.points)) {
            Ok(r) => r,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        for (k, res) in results.iter().enumerate() {
            let r = linalg::vnorm(&res.x) + linalg::vnorm(&res.y);
            for term in &res.terms {
                let bound = truncation_bound(pot, r, t, term.n);
                writeln!(terms, "{},{},{k},{},{:e},{:e}", t.re, t.im, term.n, linalg::op_norm(&term.value), bound).unwrap();
            }
            let mut record = res.to_json();
            record["converged"] = json!(res.tail_bound < config.tol);
            records.push(record);
        }
    }
    fs::write(ctx.out.join("terms.csv"), terms)?;
    let mut report = json!({
        "command": "kernel",
        "model": ctx.problem.model.name(),
        "nu": ctx.problem.model.nu(),
        "d": pot.d(),
        "n_max": config.n_max,
        "tol": config.tol,
        "nodes": config.nodes,
        "records": records,
    });
    let converged = records.iter().filter(|r| r["converged"] == json!(true)).count();
    println!("{} records, {converged} with tail bound below {:e}", records.len(), config.tol);
    if let Some(e) = error {
        if e.is_radius_error() {
            report["error"] = radius_error_json(&e);
        }
        write_json(&ctx.out.join("kernel.json"), &report)?;
        return Err(e.into());
    }
    write_json(&ctx.out.join("kernel.json"), &report)?;
    Ok(EXIT_PASS)
}
