//! One-dimensional and tensor quadrature rules on `[-1,1]` and `[-1,1]^2`.

use crate::error::{HosqError, Result};
use crate::spectral::cl_nodes;
use crate::transforms::SquarePoint;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// Clenshaw–Curtis on Chebyshev–Lobatto nodes.
    #[default]
    Cc,
    /// Gauss–Legendre.
    Gl,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Cc => "cc",
            RuleKind::Gl => "gl",
        })
    }
}

impl FromStr for RuleKind {
    type Err = HosqError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cc" | "clenshaw-curtis" => Ok(RuleKind::Cc),
            "gl" | "gauss-legendre" => Ok(RuleKind::Gl),
            other => Err(HosqError::InvalidArgument(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// An `(n+1)`-point rule on `[-1,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub kind: RuleKind,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn new(kind: RuleKind, order: usize) -> Result<Self> {
        match kind {
            RuleKind::Cc => cc_rule(order),
            RuleKind::Gl => gl_rule(order),
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Clenshaw–Curtis rule of order `n` on the Chebyshev–Lobatto nodes.
///
/// Weights come from the explicit cosine sums, `O(n^2)` work in total.
pub fn cc_rule(n: usize) -> Result<QuadRule1D> {
    let nodes = cl_nodes(n)?.nodes().to_vec();
    let nf = n as f64;
    let mut weights = vec![0.0; n + 1];
    let end = if n.is_multiple_of(2) { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    weights[0] = end;
    weights[n] = end;
    for (k, w) in weights.iter_mut().enumerate().take(n).skip(1) {
        let theta = k as f64 * PI / nf;
        let mut v = 1.0;
        for j in 1..=(n - 1) / 2 {
            let jf = j as f64;
            v -= 2.0 * (2.0 * jf * theta).cos() / (4.0 * jf * jf - 1.0);
        }
        if n.is_multiple_of(2) {
            v -= (nf * theta).cos() / (nf * nf - 1.0);
        }
        *w = 2.0 * v / nf;
    }
    Ok(QuadRule1D { kind: RuleKind::Cc, order: n, nodes, weights })
}

/// Legendre polynomial `P_m(x)` and its derivative.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `(n+1)`-point Gauss–Legendre rule, nodes in descending order.
pub fn gl_rule(n: usize) -> Result<QuadRule1D> {
    if n == 0 {
        return Err(HosqError::InvalidArgument("quadrature order must be at least 1".into()));
    }
    const MAX_ITER: usize = 100;
    let m = n + 1;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(HosqError::Convergence {
                iterations: MAX_ITER,
                context: format!("Gauss-Legendre root {i} of {m}"),
            });
        }
        let (_, dp) = legendre(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[m - 1 - i] = -x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok(QuadRule1D { kind: RuleKind::Gl, order: n, nodes, weights })
}

/// Tensor-product rule on `[-1,1]^2`, flattened first-coordinate major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule2D {
    pub kind: RuleKind,
    pub order: usize,
    pub axis: QuadRule1D,
    pub points: Vec<SquarePoint>,
    pub weights: Vec<f64>,
}

impl QuadRule2D {
    pub fn new(kind: RuleKind, order: usize) -> Result<Self> {
        Ok(tensor_rule(&QuadRule1D::new(kind, order)?))
    }

    pub fn integrate<F: Fn(SquarePoint) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

pub fn tensor_rule(r: &QuadRule1D) -> QuadRule2D {
    let mut points = Vec::with_capacity(r.nodes.len() * r.nodes.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (&x, &wx) in r.nodes.iter().zip(&r.weights) {
        for (&y, &wy) in r.nodes.iter().zip(&r.weights) {
            points.push(SquarePoint::new(x, y));
            weights.push(wx * wy);
        }
    }
    QuadRule2D { kind: r.kind, order: r.order, axis: r.clone(), points, weights }
}
