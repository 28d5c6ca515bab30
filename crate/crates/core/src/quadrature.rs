//! Gauss–Legendre rules and composite quadrature.

use serde::{Deserialize, Serialize};

/// Resolution of a composite Gauss–Legendre rule: `panels` subintervals per
/// coordinate direction with `points` nodes each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub panels: usize,
    pub points: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            panels: 32,
            points: 6,
        }
    }
}

impl QuadSpec {
    pub fn new(panels: usize, points: usize) -> Self {
        QuadSpec { panels, points }
    }

    /// Same number of points per panel, twice as many panels.
    pub fn refined(self) -> Self {
        QuadSpec {
            panels: 2 * self.panels,
            points: self.points,
        }
    }

    pub fn nodes_per_direction(&self) -> usize {
        self.panels * self.points
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess followed by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]`.
pub fn composite(a: f64, b: f64, spec: QuadSpec) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(spec.points);
    let h = (b - a) / spec.panels as f64;
    let mut x = Vec::with_capacity(spec.nodes_per_direction());
    let mut w = Vec::with_capacity(spec.nodes_per_direction());
    for p in 0..spec.panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * h * (xi + 1.0));
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}
