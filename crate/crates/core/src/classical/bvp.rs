use crate::classical::el::ElCoefficients;
use crate::error::{Error, Result};
use crate::linalg::{self, op_norm, CMat, CVec, C64};

/// Largest accepted boundary conditioning before a focal point is reported.
pub const FOCAL_CONDITIONING: f64 = 1e8;

/// Matrix function on `[0, 1]` sampled on a uniform grid with value, first
/// and second derivative, evaluated by cubic Hermite interpolation.
#[derive(Clone, Debug)]
struct Dense {
    value: Vec<CMat>,
    deriv: Vec<CMat>,
    second: Vec<CMat>,
}

impl Dense {
    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let n = self.value.len() - 1;
        let h = 1.0 / n as f64;
        let s = s.clamp(0.0, 1.0);
        let k = ((s * n as f64).floor() as usize).min(n - 1);
        (k, (s - k as f64 * h) / h, h)
    }

    fn hermite(p0: &CMat, m0: &CMat, p1: &CMat, m1: &CMat, u: f64, h: f64) -> CMat {
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = C64::new(2.0 * u3 - 3.0 * u2 + 1.0, 0.0);
        let h10 = C64::new((u3 - 2.0 * u2 + u) * h, 0.0);
        let h01 = C64::new(-2.0 * u3 + 3.0 * u2, 0.0);
        let h11 = C64::new((u3 - u2) * h, 0.0);
        p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11
    }

    fn value(&self, s: f64) -> CMat {
        let (k, u, h) = self.locate(s);
        if u == 0.0 {
            return self.value[k].clone();
        }
        Self::hermite(&self.value[k], &self.deriv[k], &self.value[k + 1], &self.deriv[k + 1], u, h)
    }

    fn value_into(&self, s: f64, out: &mut CMat) {
        let (k, u, h) = self.locate(s);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = (u3 - 2.0 * u2 + u) * h;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = (u3 - u2) * h;
        let (p0, m0, p1, m1) = (&self.value[k], &self.deriv[k], &self.value[k + 1], &self.deriv[k + 1]);
        for (i, o) in out.iter_mut().enumerate() {
            *o = p0[i] * h00 + m0[i] * h10 + p1[i] * h01 + m1[i] * h11;
        }
    }

    fn deriv(&self, s: f64) -> CMat {
        let (k, u, h) = self.locate(s);
        if u == 0.0 {
            return self.deriv[k].clone();
        }
        Self::hermite(&self.deriv[k], &self.second[k], &self.deriv[k + 1], &self.second[k + 1], u, h)
    }
}

/// Rescaled boundary-value trajectories `q̃♭t`, `q̃♯t` for one complex `t`.
///
/// Both solve `q″ = t E(ts) q′ + t² F(ts) q` on `s ∈ [0, 1]` with
/// `q̃♭(0) = 0, q̃♭(1) = 𝟙` and `q̃♯(0) = 𝟙, q̃♯(1) = 0`.
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    t: C64,
    nu: usize,
    steps: usize,
    flat: Dense,
    sharp: Dense,
    conditioning: f64,
}

impl TrajectoryBundle {
    /// Shooting with the fundamental solutions `U` (`U(0) = 𝟙, U′(0) = 0`) and
    /// `V` (`V(0) = 0, V′(0) = 𝟙`), integrated together by fixed-step RK4.
    pub fn solve(el: &ElCoefficients, t: C64, steps: usize) -> Result<Self> {
        if steps < 16 {
            return Err(Error::Problem(format!("BVP needs at least 16 steps, got {steps}")));
        }
        let nu = el.dim();
        let n2 = 2 * nu;
        let h = 1.0 / steps as f64;

        // Generator of Y′ = G(s) Y at the half-step grid s = j h / 2.
        let mut gens = Vec::with_capacity(2 * steps + 1);
        for j in 0..=2 * steps {
            let s = 0.5 * h * j as f64;
            let (e, f) = el.eval(t * s)?;
            let mut g = linalg::zeros(n2, n2);
            for i in 0..nu {
                g[(i, nu + i)] = C64::new(1.0, 0.0);
            }
            g.view_mut((nu, 0), (nu, nu)).copy_from(&(f * (t * t)));
            g.view_mut((nu, nu), (nu, nu)).copy_from(&(e * t));
            gens.push(g);
        }

        let mut ys = Vec::with_capacity(steps + 1);
        let mut y = linalg::identity(n2);
        ys.push(y.clone());
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        for k in 0..steps {
            let g0 = &gens[2 * k];
            let gm = &gens[2 * k + 1];
            let g1 = &gens[2 * k + 2];
            let k1 = g0 * &y;
            let k2 = gm * (&y + &k1 * half);
            let k3 = gm * (&y + &k2 * half);
            let k4 = g1 * (&y + &k3 * hc);
            y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            ys.push(y.clone());
        }

        let yend = &ys[steps];
        let v1 = yend.view((0, nu), (nu, nu)).clone_owned();
        let u1 = yend.view((0, 0), (nu, nu)).clone_owned();
        let v1_inv = match linalg::inverse(&v1) {
            Some(m) => m,
            None => {
                return Err(Error::FocalPoint {
                    t,
                    conditioning: f64::INFINITY,
                })
            }
        };
        let conditioning = op_norm(yend) * op_norm(&v1_inv);
        if !(conditioning <= FOCAL_CONDITIONING) {
            return Err(Error::FocalPoint { t, conditioning });
        }
        let w = &v1_inv * &u1;

        let mut flat = Dense {
            value: Vec::with_capacity(steps + 1),
            deriv: Vec::with_capacity(steps + 1),
            second: Vec::with_capacity(steps + 1),
        };
        let mut sharp = flat.clone();
        for (k, yk) in ys.iter().enumerate() {
            let g = &gens[2 * k];
            let u = yk.view((0, 0), (nu, nu));
            let v = yk.view((0, nu), (nu, nu));
            let du = yk.view((nu, 0), (nu, nu));
            let dv = yk.view((nu, nu), (nu, nu));
            let qf = v * &v1_inv;
            let dqf = dv * &v1_inv;
            let qs = u - v * &w;
            let dqs = du - dv * &w;
            let f = g.view((nu, 0), (nu, nu));
            let e = g.view((nu, nu), (nu, nu));
            flat.second.push(f * &qf + e * &dqf);
            sharp.second.push(f * &qs + e * &dqs);
            flat.value.push(qf);
            flat.deriv.push(dqf);
            sharp.value.push(qs);
            sharp.deriv.push(dqs);
        }

        Ok(TrajectoryBundle {
            t,
            nu,
            steps,
            flat,
            sharp,
            conditioning,
        })
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `‖Y(1)‖·‖V(1)⁻¹‖`, an upper bound for `cond(V(1))`.
    pub fn conditioning(&self) -> f64 {
        self.conditioning
    }

    pub fn q_flat(&self, s: f64) -> CMat {
        self.flat.value(s)
    }

    pub fn q_flat_deriv(&self, s: f64) -> CMat {
        self.flat.deriv(s)
    }

    pub fn q_sharp(&self, s: f64) -> CMat {
        self.sharp.value(s)
    }

    pub fn q_sharp_deriv(&self, s: f64) -> CMat {
        self.sharp.deriv(s)
    }

    /// `q̃♭t(s)` written into `out` without allocating.
    pub fn q_flat_into(&self, s: f64, out: &mut CMat) {
        self.flat.value_into(s, out)
    }

    /// `q̃♯t(s)` written into `out` without allocating.
    pub fn q_sharp_into(&self, s: f64, out: &mut CMat) {
        self.sharp.value_into(s, out)
    }

    /// `q̃♮t(s) = q̃♭t(s) x + q̃♯t(s) y`.
    pub fn qnat(&self, x: &CVec, y: &CVec, s: f64) -> CVec {
        self.q_flat(s) * x + self.q_sharp(s) * y
    }

    /// `(d/ds) q̃♮t(s)`.
    pub fn qnat_deriv(&self, x: &CVec, y: &CVec, s: f64) -> CVec {
        self.q_flat_deriv(s) * x + self.q_sharp_deriv(s) * y
    }

    /// Largest operator norm of `q̃♭` and `q̃♯` over the step grid.
    pub fn sup_norms(&self) -> (f64, f64) {
        let sup = |v: &[CMat]| v.iter().map(op_norm).fold(0.0, f64::max);
        (sup(&self.flat.value), sup(&self.sharp.value))
    }

    /// Largest entrywise imaginary part of `q̃♭, q̃♯` over the step grid.
    pub fn max_imag(&self) -> f64 {
        self.flat
            .value
            .iter()
            .chain(self.sharp.value.iter())
            .map(linalg::max_imag)
            .fold(0.0, f64::max)
    }
}
