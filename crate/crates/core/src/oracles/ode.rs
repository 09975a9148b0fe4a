//! Adaptive Dormand–Prince 5(4) integrator for complex linear systems.

use crate::error::{Error, Result};
use crate::C64;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri {
    fn default() -> Self {
        Dopri {
            rtol: 1e-13,
            atol: 1e-15,
            max_steps: 100_000,
        }
    }
}

impl Dopri {
    /// Integrates `y′ = f(s, y)` from `s0` to `s1` (either direction).
    pub fn integrate<F>(&self, mut f: F, s0: f64, s1: f64, y0: &[C64]) -> Result<Vec<C64>>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        if s0 == s1 {
            return Ok(y);
        }
        let dir = (s1 - s0).signum();
        let span = (s1 - s0).abs();
        let mut s = s0;
        let mut h = 0.01 * span;
        let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        let mut steps = 0;
        while (s1 - s) * dir > 1e-15 * span {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::ToleranceNotMet {
                    achieved: h,
                    requested: self.rtol,
                });
            }
            if h > (s1 - s).abs() {
                h = (s1 - s).abs();
            }
            f(s, &y, &mut k[0]);
            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..stage {
                        acc += k[j][i] * (dir * h * A[stage][j]);
                    }
                    tmp[i] = acc;
                }
                f(s + dir * h * C[stage], &tmp, &mut k[stage]);
            }
            let mut err = 0.0f64;
            let mut y_new = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                let mut hi = y[i];
                let mut lo = y[i];
                for j in 0..7 {
                    hi += k[j][i] * (dir * h * B5[j]);
                    lo += k[j][i] * (dir * h * B4[j]);
                }
                let scale = self.atol + self.rtol * y[i].norm().max(hi.norm());
                err = err.max((hi - lo).norm() / scale);
                y_new[i] = hi;
            }
            if err <= 1.0 {
                s += dir * h;
                y = y_new;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        Ok(y)
    }
}
