//! Chebyshev–Lobatto grids, barycentric interpolation and spectral
//! differentiation.
//!
//! Tensor grids use one flattening everywhere in the crate: the sample for
//! multi-index `(a, b)` lives at `a * (n + 1) + b`, where `a` indexes the
//! first (`x`) coordinate. Under that ordering `D ⊗ I` differentiates in `x`
//! and `I ⊗ D` in `y`.

use crate::error::{HosqError, Result};
use crate::transforms::SquarePoint;
use nalgebra::DMatrix;
use std::f64::consts::PI;

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(HosqError::InvalidArgument("polynomial order must be at least 1".into()));
    }
    Ok(())
}

/// Nodes `cos(k pi / n)`, `k = 0..=n`, in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid1D {
    order: usize,
    nodes: Vec<f64>,
}

impl ChebGrid1D {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric weights: alternating signs, halved at both endpoints.
    pub fn barycentric_weights(&self) -> Vec<f64> {
        let n = self.order;
        (0..=n)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect()
    }

    /// Values of all Lagrange cardinal polynomials at `x`.
    ///
    /// At a node the result is exactly the unit vector for that node.
    pub fn lagrange_basis(&self, x: f64) -> Vec<f64> {
        let w = self.barycentric_weights();
        let mut out = vec![0.0; self.nodes.len()];
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for ((o, &xj), &wj) in out.iter_mut().zip(&self.nodes).zip(&w) {
            *o = wj / (x - xj);
            denom += *o;
        }
        out.iter_mut().for_each(|o| *o /= denom);
        out
    }
}

/// Chebyshev–Lobatto nodes of order `n` (`n + 1` points).
pub fn cl_nodes(n: usize) -> Result<ChebGrid1D> {
    check_order(n)?;
    let mut nodes: Vec<f64> = (0..=n).map(|k| (k as f64 * PI / n as f64).cos()).collect();
    nodes[0] = 1.0;
    nodes[n] = -1.0;
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }
    Ok(ChebGrid1D { order: n, nodes })
}

/// Tensor Chebyshev–Lobatto grid on `[-1,1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid2D {
    axis: ChebGrid1D,
    points: Vec<SquarePoint>,
}

impl ChebGrid2D {
    pub fn new(n: usize) -> Result<Self> {
        let axis = cl_nodes(n)?;
        let nodes = axis.nodes();
        let points = nodes
            .iter()
            .flat_map(|&x| nodes.iter().map(move |&y| SquarePoint::new(x, y)))
            .collect();
        Ok(Self { axis, points })
    }

    pub fn order(&self) -> usize {
        self.axis.order
    }

    pub fn axis(&self) -> &ChebGrid1D {
        &self.axis
    }

    pub fn points(&self) -> &[SquarePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * (self.axis.order + 1) + b
    }

    /// Samples `f` at every grid point in flattening order.
    pub fn sample<F: FnMut(SquarePoint) -> f64>(&self, mut f: F) -> Vec<f64> {
        self.points.iter().map(|&p| f(p)).collect()
    }
}

/// Chebyshev–Lobatto differentiation matrix of order `n`.
///
/// Off-diagonal node differences use `x_i - x_j = 2 sin((i+j)pi/2n) sin((j-i)pi/2n)`
/// and each diagonal entry is the negated sum of its row. The diagonal is
/// then nudged until the row, summed left to right in floating point,
/// vanishes, so constants differentiate to zero.
pub fn diff_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_order(n)?;
    let m = n + 1;
    let h = PI / (2 * n) as f64;
    let c = |i: usize| {
        let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        if i == 0 || i == n {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let diff = 2.0 * (((i + j) as f64) * h).sin() * (((j as f64) - (i as f64)) * h).sin();
            let v = c(i) / c(j) / diff;
            d[(i, j)] = v;
            row_sum += v;
        }
        d[(i, i)] = -row_sum;
        for _ in 0..3 {
            let residual = d.row(i).iter().fold(0.0, |acc, v| acc + v);
            if residual == 0.0 {
                break;
            }
            d[(i, i)] -= residual;
        }
    }
    Ok(d)
}

/// Spectral differentiation operators on a tensor grid.
///
/// Application is matrix-free through the one-dimensional matrix; the
/// dense Kronecker forms are available from [`DiffOps::dx_matrix`] and
/// [`DiffOps::dy_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOps {
    order: usize,
    d: DMatrix<f64>,
}

/// Builds the operator pair `(D ⊗ I, I ⊗ D)`.
pub fn tensor_diff(n: usize) -> Result<DiffOps> {
    Ok(DiffOps { order: n, d: diff_matrix(n)? })
}

impl DiffOps {
    pub fn new(n: usize) -> Result<Self> {
        tensor_diff(n)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d
    }

    fn check_len(&self, values: &[f64]) {
        let m = self.order + 1;
        assert_eq!(values.len(), m * m, "expected {} samples", m * m);
    }

    /// `(D ⊗ I) values`: derivative along the first coordinate.
    pub fn apply_x(&self, values: &[f64]) -> Vec<f64> {
        self.check_len(values);
        let m = self.order + 1;
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            for k in 0..m {
                let dak = self.d[(a, k)];
                let src = &values[k * m..(k + 1) * m];
                let dst = &mut out[a * m..(a + 1) * m];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o += dak * s;
                }
            }
        }
        out
    }

    /// `(I ⊗ D) values`: derivative along the second coordinate.
    pub fn apply_y(&self, values: &[f64]) -> Vec<f64> {
        self.check_len(values);
        let m = self.order + 1;
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            let row = &values[a * m..(a + 1) * m];
            for b in 0..m {
                out[a * m + b] = (0..m).map(|l| self.d[(b, l)] * row[l]).sum();
            }
        }
        out
    }

    /// Dense `D ⊗ I`.
    pub fn dx_matrix(&self) -> DMatrix<f64> {
        self.d.kronecker(&DMatrix::identity(self.order + 1, self.order + 1))
    }

    /// Dense `I ⊗ D`.
    pub fn dy_matrix(&self) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.order + 1, self.order + 1).kronecker(&self.d)
    }
}

/// Evaluates the tensor interpolant of `values` at `p`.
pub fn interp_eval(values: &[f64], grid: &ChebGrid2D, p: SquarePoint) -> f64 {
    let lx = grid.axis().lagrange_basis(p.x);
    let ly = grid.axis().lagrange_basis(p.y);
    interp_with_basis(values, &lx, &ly)
}

/// Tensor interpolation with precomputed cardinal values along each axis.
pub fn interp_with_basis(values: &[f64], lx: &[f64], ly: &[f64]) -> f64 {
    let m = lx.len();
    debug_assert_eq!(values.len(), m * m);
    lx.iter()
        .enumerate()
        .filter(|(_, &la)| la != 0.0)
        .map(|(a, &la)| {
            let row = &values[a * m..(a + 1) * m];
            la * row.iter().zip(ly).map(|(v, lb)| v * lb).sum::<f64>()
        })
        .sum()
}
