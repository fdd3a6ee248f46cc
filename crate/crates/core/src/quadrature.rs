//! Composite Gauss–Legendre rules for expectations under N(0, 1).
//!
//! The real line is truncated to `[-W, W]` and split into panels. Extra
//! breakpoints are graded geometrically around caller-supplied features
//! (kinks, nearby complex singularities, square-root endpoints) so the
//! rule converges exponentially for piecewise-analytic integrands.

use serde::{Deserialize, Serialize};

use crate::normal::pdf;

/// Point of reduced smoothness of an integrand, in standardized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    /// Location of the feature.
    pub at: f64,
    /// Distance below which the integrand stops looking analytic.
    pub scale: f64,
}

impl Feature {
    pub fn kink(at: f64) -> Self {
        Feature { at, scale: f64::INFINITY }
    }

    pub fn new(at: f64, scale: f64) -> Self {
        Feature { at, scale }
    }
}

/// Settings of a composite rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub half_width: f64,
    pub panel: f64,
    pub order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            half_width: 8.5,
            panel: 1.0,
            order: 12,
        }
    }
}

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A rule approximating `E f(U)` for `U ~ N(0, 1)` as `Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(config: &QuadConfig, features: &[Feature]) -> Self {
        let breaks = breakpoints(config, features);
        let (gx, gw) = gauss_legendre(config.order);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * config.order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                nodes.push(t);
                weights.push(half * w * pdf(t));
            }
        }
        NormalRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn breakpoints(config: &QuadConfig, features: &[Feature]) -> Vec<f64> {
    let wmax = config.half_width;
    let n_panels = (2.0 * wmax / config.panel).ceil().max(1.0) as usize;
    let step = 2.0 * wmax / n_panels as f64;
    let mut pts: Vec<f64> = (0..=n_panels).map(|i| -wmax + step * i as f64).collect();
    for f in features {
        if !f.at.is_finite() || f.at.abs() >= wmax + step {
            continue;
        }
        pts.push(f.at);
        if f.scale.is_finite() && f.scale > 0.0 {
            let mut d = f.scale;
            while d < step {
                pts.push(f.at - d);
                pts.push(f.at + d);
                d *= 2.0;
            }
        }
    }
    pts.retain(|p| p.abs() <= wmax);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= 1e-13 * (1.0 + p.abs()) => {}
            _ => out.push(p),
        }
    }
    out
}
