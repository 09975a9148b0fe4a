//! Gauss–Legendre rules and Chebyshev–Lobatto barycentric interpolation.

use std::f64::consts::PI;

/// Gauss–Legendre rule with `n` nodes on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Newton iteration on P_n from the Tricomi initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (a + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev–Lobatto points on `[0, 1]` with barycentric weights.
#[derive(Clone, Debug)]
pub struct ChebyshevLobatto {
    pub nodes: Vec<f64>,
    pub bary: Vec<f64>,
}

impl ChebyshevLobatto {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Chebyshev–Lobatto grid needs at least two points");
        let nodes = (0..n)
            .map(|j| 0.5 * (1.0 - (PI * j as f64 / (n - 1) as f64).cos()))
            .collect();
        let bary = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        ChebyshevLobatto { nodes, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Normalised cardinal-function values `ℓ_j(x)`, summing to one, written
    /// into `out`. Exact at the nodes.
    pub fn cardinal_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes.len());
        for (j, &xj) in self.nodes.iter().enumerate() {
            if x == xj {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut total = 0.0;
        for j in 0..self.nodes.len() {
            let v = self.bary[j] / (x - self.nodes[j]);
            out[j] = v;
            total += v;
        }
        let inv = 1.0 / total;
        out.iter_mut().for_each(|v| *v *= inv);
    }

    /// Row-major `n×n` matrix taking values at the nodes to the coefficients
    /// of `Σ_k c_k T_k(2x − 1)`, the same interpolant.
    pub fn coefficient_matrix(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let big_n = (n - 1) as f64;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                let theta = PI * (n - 1 - j) as f64 / big_n;
                let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let mut v = 2.0 / big_n * end * (k as f64 * theta).cos();
                if k == 0 || k == n - 1 {
                    v *= 0.5;
                }
                m[k * n + j] = v;
            }
        }
        m
    }

    /// `T_k(2x − 1)` for `k < n`, written into `out`.
    pub fn chebyshev_into(&self, x: f64, out: &mut [f64]) {
        let z = 2.0 * x - 1.0;
        out[0] = 1.0;
        if out.len() > 1 {
            out[1] = z;
        }
        for k in 2..out.len() {
            out[k] = 2.0 * z * out[k - 1] - out[k - 2];
        }
    }

    pub fn cardinal(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        self.cardinal_into(x, &mut out);
        out
    }
}
