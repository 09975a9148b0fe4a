//! Adaptive Gauss–Kronrod quadrature and the brute-force low-order series
//! terms built on it.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::classical::ElCoefficients;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::model::{CoefficientModel, FourierPotential};
use crate::oracles::green::GreenOracle;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights of the embedded 7-point rule at `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 2000;

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<(Vec<C64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c)?;
    let mut k: Vec<C64> = centre.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<C64> = centre.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let lo = f(c - h * XGK[j])?;
        let hi = f(c + h * XGK[j])?;
        for i in 0..k.len() {
            let s = lo[i] + hi[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..k.len() {
        k[i] *= h;
        g[i] *= h;
        err = err.max((k[i] - g[i]).norm());
    }
    Ok((k, err))
}

/// Globally adaptive 15-point Gauss–Kronrod integration of a vector-valued
/// function, refining the interval with the largest error estimate until the
/// summed estimate is below `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(Vec<C64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let (v, e) = kronrod(&mut f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.3).sum();
        if total <= tol {
            let n = parts[0].2.len();
            let mut sum = vec![C64::new(0.0, 0.0); n];
            for p in &parts {
                for i in 0..n {
                    sum[i] += p.2[i];
                }
            }
            return Ok((sum, total));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::ToleranceNotMet {
                achieved: total,
                requested: tol,
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (pa, pb, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = kronrod(&mut f, pa, mid)?;
        let (v2, e2) = kronrod(&mut f, mid, pb)?;
        parts.push((pa, mid, v1, e1));
        parts.push((mid, pb, v2, e2));
    }
}

struct Trajectory {
    q: CVec,
}

/// `vn(t, x, y)` for `n ∈ {1, 2}` by nested adaptive Gauss–Kronrod
/// integration over the ordered simplex, with trajectories and deformation
/// matrix from the Green's-function oracle at every point.
pub fn brute_force_vn(
    model: &CoefficientModel,
    pot: &FourierPotential,
    n: usize,
    t: C64,
    x: &CVec,
    y: &CVec,
    tol: f64,
) -> Result<CMat> {
    if !(1..=2).contains(&n) {
        return Err(Error::Problem(format!("brute-force terms are limited to n ≤ 2, got {n}")));
    }
    let d = pot.d();
    if pot.modes().is_empty() {
        return Ok(linalg::zeros(d, d));
    }
    let el = ElCoefficients::new(model);
    let green = RefCell::new(GreenOracle::new(&el, model.a(), t)?);
    let traj_cache: RefCell<HashMap<u64, Trajectory>> = RefCell::new(HashMap::new());
    let xis: Vec<CVec> = pot.modes().iter().map(|m| m.xi_vec()).collect();

    let q_at = |s: f64| -> Result<CVec> {
        if let Some(tr) = traj_cache.borrow().get(&s.to_bits()) {
            return Ok(tr.q.clone());
        }
        let q = green.borrow_mut().qnat(x, y, s)?;
        traj_cache.borrow_mut().insert(s.to_bits(), Trajectory { q: q.clone() });
        Ok(q)
    };
    let kern = |s: f64, s2: f64| green.borrow_mut().kernel(s, s2);
    let flatten = |m: CMat| -> Vec<C64> { m.iter().copied().collect() };

    let total = if n == 1 {
        let f = |s: f64| -> Result<Vec<C64>> {
            let q = q_at(s)?;
            let k = kern(s, s)?;
            let mut acc = linalg::zeros(d, d);
            for (m, xi) in pot.modes().iter().zip(xis.iter()) {
                let phase = I * linalg::dot(&q, xi) - t * linalg::dot(xi, &(&k * xi));
                acc += m.amplitude.eval(t * s) * phase.exp();
            }
            Ok(flatten(acc))
        };
        integrate(f, 0.0, 1.0, tol)?.0
    } else {
        let outer = |s2: f64| -> Result<Vec<C64>> {
            let q2 = q_at(s2)?;
            let k22 = kern(s2, s2)?;
            let inner = |s1: f64| -> Result<Vec<C64>> {
                let q1 = q_at(s1)?;
                let k11 = kern(s1, s1)?;
                let k12 = kern(s1, s2)?;
                let mut acc = linalg::zeros(d, d);
                for (m2, xi2) in pot.modes().iter().zip(xis.iter()) {
                    let a2 = m2.amplitude.eval(t * s2);
                    for (m1, xi1) in pot.modes().iter().zip(xis.iter()) {
                        let quad = linalg::dot(xi1, &(&k11 * xi1))
                            + linalg::dot(xi2, &(&k22 * xi2))
                            + linalg::dot(xi1, &(&k12 * xi2)) * 2.0;
                        let phase = I * (linalg::dot(&q1, xi1) + linalg::dot(&q2, xi2)) - t * quad;
                        acc += &a2 * m1.amplitude.eval(t * s1) * phase.exp();
                    }
                }
                Ok(flatten(acc))
            };
            Ok(integrate(inner, 0.0, s2, 0.1 * tol)?.0)
        };
        integrate(outer, 0.0, 1.0, tol)?.0
    };
    Ok(CMat::from_column_slice(d, d, &total) * t.powu(n as u32))
}
