//! Gauss-Legendre rules and the tensor/triangle constructions built on them.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

/// An `m`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_m`; accurate to a few ulps for
    /// `m` up to several hundred.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "a quadrature rule needs at least one node");
        let mut nodes = alloc::vec![0.0; m];
        let mut weights = alloc::vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Tensor-product integral over the box `prod [lo_j, hi_j]`.
    pub fn integrate_box<F: FnMut(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], mut f: F) -> f64 {
        let d = lo.len();
        let axes: Vec<Vec<(f64, f64)>> = (0..d)
            .map(|j| self.mapped(lo[j], hi[j]).collect())
            .collect();
        let m = self.len();
        let mut idx = alloc::vec![0usize; d];
        let mut point = alloc::vec![0.0; d];
        let mut total = 0.0;
        if d == 0 {
            return f(&point);
        }
        loop {
            let mut w = 1.0;
            for j in 0..d {
                let (x, wj) = axes[j][idx[j]];
                point[j] = x;
                w *= wj;
            }
            total += w * f(&point);
            let mut j = d;
            loop {
                if j == 0 {
                    return total;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Weighted nodes `(x, y, w)` covering `[0,1]^2` split along the diagonal
/// `x = y`; integrands that are smooth on each triangle but kinked on the
/// diagonal (anything built from `min(x, y)`) integrate spectrally.
pub fn diagonal_split_rule(m: usize) -> Vec<(f64, f64, f64)> {
    let rule = GaussLegendre::new(m);
    let pts: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let mut out = Vec::with_capacity(2 * m * m);
    for &(s, ws) in &pts {
        for &(t, wt) in &pts {
            let w = ws * wt * s;
            // y < x
            out.push((s, s * t, w));
            // x < y
            out.push((s * t, s, w));
        }
    }
    out
}
