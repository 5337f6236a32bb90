//! Product quadrature rules on the circle, the sphere and a finite window of
//! the real line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const MIN_CIRCLE_NODES: usize = 16;
pub const MIN_SPHERE_POLAR: usize = 8;
pub const MIN_SPHERE_AZIMUTH: usize = 16;
pub const MIN_LINE_NODES: usize = 64;

/// Points per Gauss–Legendre panel of the composite line rule.
const LINE_PANEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Circle,
    Sphere,
    /// The window `[lower, upper]` of the real line.
    Line {
        lower: f64,
        upper: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Nodes(usize),
    /// Gauss–Legendre nodes in the polar cosine times trapezoid nodes in azimuth.
    Grid {
        polar: usize,
        azimuth: usize,
    },
}

/// Nodes and nonnegative weights. Nodes are stored flat with stride [`QuadratureRule::dim`].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    domain: Domain,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Coordinates per node: 2 on the circle, 3 on the sphere, 1 on the line.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    /// `(lower, upper)` for line rules.
    pub fn window(&self) -> Option<(f64, f64)> {
        match self.domain {
            Domain::Line { lower, upper } => Some((lower, upper)),
            _ => None,
        }
    }

    /// Highest polynomial degree (trigonometric on the circle, spherical
    /// harmonic on the sphere) integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Builds a rule on `domain`. Circle rules are equispaced trapezoid rules;
/// sphere rules combine Gauss–Legendre in `cos(polar)` with trapezoid in azimuth;
/// line rules are composite 8-point Gauss–Legendre on equal panels, with the node
/// count rounded up to a multiple of 8.
pub fn make_quadrature(domain: Domain, resolution: Resolution) -> Result<QuadratureRule> {
    match (domain, resolution) {
        (Domain::Circle, Resolution::Nodes(n)) => {
            if n < MIN_CIRCLE_NODES {
                return Err(invalid(format!(
                    "circle rule needs at least {MIN_CIRCLE_NODES} nodes, got {n}"
                )));
            }
            let step = 2.0 * PI / n as f64;
            let nodes = (0..n)
                .flat_map(|k| {
                    let t = k as f64 * step;
                    [t.cos(), t.sin()]
                })
                .collect();
            Ok(QuadratureRule {
                domain,
                dim: 2,
                nodes,
                weights: vec![step; n],
                degree: n - 1,
            })
        }
        (Domain::Sphere, Resolution::Grid { polar, azimuth }) => {
            if polar < MIN_SPHERE_POLAR || azimuth < MIN_SPHERE_AZIMUTH {
                return Err(invalid(format!(
                    "sphere rule needs at least {MIN_SPHERE_POLAR}x{MIN_SPHERE_AZIMUTH} nodes, got {polar}x{azimuth}"
                )));
            }
            let (ts, tw) = gauss_legendre(polar);
            let step = 2.0 * PI / azimuth as f64;
            let mut nodes = Vec::with_capacity(3 * polar * azimuth);
            let mut weights = Vec::with_capacity(polar * azimuth);
            for (t, w) in ts.iter().zip(&tw) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for k in 0..azimuth {
                    let a = k as f64 * step;
                    nodes.extend_from_slice(&[s * a.cos(), s * a.sin(), *t]);
                    weights.push(w * step);
                }
            }
            let degree = (2 * polar - 1).min(azimuth - 1);
            Ok(QuadratureRule {
                domain,
                dim: 3,
                nodes,
                weights,
                degree,
            })
        }
        (Domain::Line { lower, upper }, Resolution::Nodes(n)) => {
            if n < MIN_LINE_NODES {
                return Err(invalid(format!(
                    "line rule needs at least {MIN_LINE_NODES} nodes, got {n}"
                )));
            }
            if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                return Err(invalid(format!(
                    "line window [{lower}, {upper}] is empty or unbounded"
                )));
            }
            let panels = n.div_ceil(LINE_PANEL);
            let (gx, gw) = gauss_legendre(LINE_PANEL);
            let width = (upper - lower) / panels as f64;
            let mut nodes = Vec::with_capacity(panels * LINE_PANEL);
            let mut weights = Vec::with_capacity(panels * LINE_PANEL);
            for p in 0..panels {
                let mid = lower + (p as f64 + 0.5) * width;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(mid + 0.5 * width * x);
                    weights.push(0.5 * width * w);
                }
            }
            Ok(QuadratureRule {
                domain,
                dim: 1,
                nodes,
                weights,
                degree: 2 * LINE_PANEL - 1,
            })
        }
        (domain, resolution) => Err(invalid(format!(
            "unsupported quadrature {domain:?} with {resolution:?}"
        ))),
    }
}
