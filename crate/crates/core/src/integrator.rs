//! Surface integration over curved triangles re-parametrized on the square.
//!
//! For triangle `i` the geometry map is `phi_i = pi o tau_i o squeeze`:
//! square-squeezing onto the reference simplex, the affine map onto the
//! flat triangle, then closest-point projection onto the surface. `phi_i`
//! is sampled on the tensor Chebyshev–Lobatto grid of order `k`; the
//! Jacobian columns come from applying `D ⊗ I` and `I ⊗ D` to each
//! coordinate, and the integral is
//!
//! ```text
//! sum_i sum_p w_p f(phi_i(p)) sqrt(E G - F^2)
//! ```
//!
//! with `E = J1.J1`, `F = J1.J2`, `G = J2.J2` (computed as `|J1 x J2|`). When the rule is
//! Clenshaw–Curtis of order `k` its nodes are the grid nodes and nothing is
//! interpolated; any other rule interpolates the Jacobian to its nodes and
//! evaluates `phi_i` there directly.

use crate::error::{HosqError, Result};
use crate::exprsurf::Expr;
use crate::mesh::{validate, TriangleMesh};
use crate::quadrature::{QuadRule2D, RuleKind};
use crate::spectral::{interp_with_basis, ChebGrid2D, DiffOps};
use crate::surfaces::ImplicitSurface;
use crate::transforms::{squeeze, AffineTriangleMap, SquarePoint};
use crate::Point3;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Samples `{phi_i(p_alpha)}` of one element on the order-`k` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub element: usize,
    pub order: usize,
    /// The flat triangle the element was lifted from.
    pub triangle: AffineTriangleMap,
    /// `(k+1)^2` surface points in grid flattening order.
    pub nodes: Vec<Point3>,
}

impl ElementGeometry {
    fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.nodes.iter().map(|p| p[axis]).collect()
    }
}

/// Maps a square point onto the surface patch of `triangle`.
fn lift(triangle: &AffineTriangleMap, surface: Option<&ImplicitSurface>, p: SquarePoint) -> Result<Point3> {
    let flat = triangle.apply(squeeze(p));
    match surface {
        Some(s) => s.closest_point(&flat),
        None => Ok(flat),
    }
}

fn tag(element: usize) -> impl FnOnce(HosqError) -> HosqError {
    move |e| HosqError::Element { element, source: Box::new(e) }
}

fn build_on_grid(
    mesh: &TriangleMesh,
    i: usize,
    surface: Option<&ImplicitSurface>,
    grid: &ChebGrid2D,
) -> Result<ElementGeometry> {
    if i >= mesh.num_triangles() {
        return Err(HosqError::InvalidArgument(format!(
            "element {i} out of range ({} triangles)",
            mesh.num_triangles()
        )));
    }
    let triangle = mesh.affine_map(i).map_err(tag(i))?;
    let nodes = grid
        .points()
        .iter()
        .map(|&p| lift(&triangle, surface, p))
        .collect::<Result<Vec<_>>>()
        .map_err(tag(i))?;
    Ok(ElementGeometry { element: i, order: grid.order(), triangle, nodes })
}

/// Samples the geometry of triangle `i` at order `k`.
///
/// With `surface == None` the flat triangle itself is the surface and no
/// projection happens.
pub fn build_element(
    mesh: &TriangleMesh,
    i: usize,
    surface: Option<&ImplicitSurface>,
    k: usize,
) -> Result<ElementGeometry> {
    build_on_grid(mesh, i, surface, &ChebGrid2D::new(k)?)
}

/// User-supplied integrand.
pub type IntegrandFn = dyn Fn(&Point3) -> Result<f64> + Send + Sync;

#[derive(Clone, Default)]
pub enum Integrand {
    /// `f = 1`; the integral is the surface area.
    #[default]
    One,
    /// Gauss curvature of the surface (zero on flat meshes).
    GaussCurvature,
    Expression(Expr),
    Function(Arc<IntegrandFn>),
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::One => f.write_str("One"),
            Integrand::GaussCurvature => f.write_str("GaussCurvature"),
            Integrand::Expression(e) => write!(f, "Expression({e})"),
            Integrand::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Integrand {
    pub fn function<F: Fn(&Point3) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Integrand::Function(Arc::new(move |p| Ok(f(p))))
    }

    pub fn eval(&self, p: &Point3, surface: Option<&ImplicitSurface>) -> Result<f64> {
        match self {
            Integrand::One => Ok(1.0),
            Integrand::GaussCurvature => surface.map_or(Ok(0.0), |s| s.gauss_curvature(p)),
            Integrand::Expression(e) => e.eval(p),
            Integrand::Function(f) => f(p),
        }
    }
}

/// `sqrt(E G - F^2)`, evaluated as `|J1 x J2|` (Lagrange's identity), which
/// cannot go negative near the collapsed corner where `J1 ≈ -J2`.
#[inline]
fn metric(j1: Point3, j2: Point3) -> f64 {
    j1.cross(&j2).norm()
}

/// Area density `sqrt(det(J^T J))` at every grid node of `g`.
pub fn metric_at_nodes(g: &ElementGeometry, ops: &DiffOps) -> Vec<f64> {
    let (dx, dy) = jacobian_samples(g, ops);
    (0..g.nodes.len())
        .map(|l| metric(Point3::new(dx[0][l], dx[1][l], dx[2][l]), Point3::new(dy[0][l], dy[1][l], dy[2][l])))
        .collect()
}

fn jacobian_samples(g: &ElementGeometry, ops: &DiffOps) -> ([Vec<f64>; 3], [Vec<f64>; 3]) {
    assert_eq!(ops.order(), g.order, "differentiation order must match geometry order");
    let coords = [0, 1, 2].map(|a| g.coordinate(a));
    let dx = [0, 1, 2].map(|a| ops.apply_x(&coords[a]));
    let dy = [0, 1, 2].map(|a| ops.apply_y(&coords[a]));
    (dx, dy)
}

/// Integral of `f` over one element.
///
/// `surface` is used for curvature integrands and, when the rule nodes are
/// not the geometry grid, to place `phi_i(p)` exactly.
pub fn element_integral(
    g: &ElementGeometry,
    f: &Integrand,
    surface: Option<&ImplicitSurface>,
    rule: &QuadRule2D,
    ops: &DiffOps,
) -> Result<f64> {
    let (dx, dy) = jacobian_samples(g, ops);
    let native = rule.kind == RuleKind::Cc && rule.order == g.order;
    let mut sum = 0.0;
    if native {
        for (l, (node, &w)) in g.nodes.iter().zip(&rule.weights).enumerate() {
            let j1 = Point3::new(dx[0][l], dx[1][l], dx[2][l]);
            let j2 = Point3::new(dy[0][l], dy[1][l], dy[2][l]);
            let m = metric(j1, j2);
            if m != 0.0 {
                sum += w * f.eval(node, surface)? * m;
            }
        }
        return Ok(sum);
    }

    let grid_axis = crate::spectral::cl_nodes(g.order)?;
    let basis: Vec<Vec<f64>> = rule.axis.nodes.iter().map(|&t| grid_axis.lagrange_basis(t)).collect();
    let m1 = rule.axis.nodes.len();
    for a in 0..m1 {
        for b in 0..m1 {
            let l = a * m1 + b;
            let (lx, ly) = (&basis[a], &basis[b]);
            let j1 = Point3::from([0, 1, 2].map(|c| interp_with_basis(&dx[c], lx, ly)));
            let j2 = Point3::from([0, 1, 2].map(|c| interp_with_basis(&dy[c], lx, ly)));
            let m = metric(j1, j2);
            if m != 0.0 {
                let y = lift(&g.triangle, surface, rule.points[l])?;
                sum += rule.weights[l] * f.eval(&y, surface)? * m;
            }
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrateOptions {
    /// Geometry order `k`.
    pub degree: usize,
    pub rule: RuleKind,
    /// Quadrature order; defaults to `degree`.
    pub rule_order: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl IntegrateOptions {
    pub fn new(degree: usize) -> Self {
        Self { degree, rule: RuleKind::Cc, rule_order: None, threads: None }
    }

    pub fn with_rule(mut self, rule: RuleKind) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_rule_order(mut self, n: usize) -> Self {
        self.rule_order = Some(n);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub element_values: Vec<f64>,
    pub degree: usize,
    pub rule: RuleKind,
    pub rule_order: usize,
    pub elapsed: Duration,
}

/// Runs `f` on a dedicated pool of `threads` workers, or inline on the global pool.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HosqError::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Integrates `f` over the surface described by `mesh` lifted onto `surface`.
///
/// Elements are processed in parallel; their values are summed sequentially
/// in element order, so the result does not depend on the thread count.
pub fn integrate(
    mesh: &TriangleMesh,
    surface: Option<&ImplicitSurface>,
    f: &Integrand,
    opts: &IntegrateOptions,
) -> Result<IntegralResult> {
    let start = Instant::now();
    let report = validate(mesh);
    if !report.is_valid() {
        return Err(HosqError::InvalidMesh(report.summary()));
    }
    let k = opts.degree;
    let n = opts.rule_order.unwrap_or(k);
    if opts.rule == RuleKind::Cc && n < k {
        return Err(HosqError::InvalidArgument(format!(
            "Clenshaw-Curtis order {n} is below the geometry order {k}"
        )));
    }
    let grid = ChebGrid2D::new(k)?;
    let ops = DiffOps::new(k)?;
    let rule = QuadRule2D::new(opts.rule, n)?;

    let per_element: Vec<Result<f64>> = with_pool(opts.threads, || {
        (0..mesh.num_triangles())
            .into_par_iter()
            .map(|i| {
                let g = build_on_grid(mesh, i, surface, &grid)?;
                element_integral(&g, f, surface, &rule, &ops).map_err(tag(i))
            })
            .collect()
    })?;
    let element_values = per_element.into_iter().collect::<Result<Vec<f64>>>()?;
    let value = element_values.iter().fold(0.0, |acc, v| acc + v);
    Ok(IntegralResult { value, element_values, degree: k, rule: opts.rule, rule_order: n, elapsed: start.elapsed() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub degree: usize,
    pub value: f64,
    pub reference: f64,
    /// Relative error, or absolute error when the reference is zero.
    pub error: f64,
    pub runtime: Duration,
}

/// Least-squares fit `error ≈ c * b^(-n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub c: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `None` when fewer than two points lie above the roundoff floor.
    pub fit: Option<RateFit>,
}

/// Errors at or below this level are treated as the roundoff plateau.
pub const PLATEAU: f64 = 1e2 * f64::EPSILON;

fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

impl ConvergenceReport {
    fn above_plateau(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.error > PLATEAU)
    }

    /// Slope of `log(error)` against `log(degree)` over the pre-plateau rows.
    pub fn algebraic_slope(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.above_plateau().map(|r| ((r.degree as f64).ln(), r.error.ln())).unzip();
        least_squares(&xs, &ys).map(|(_, s)| s)
    }

    /// Whether errors decrease strictly until they first reach `floor`, and stay below it afterwards.
    pub fn decreases_to(&self, floor: f64) -> bool {
        let mut plateaued = false;
        for w in self.rows.windows(2) {
            plateaued |= w[0].error <= floor;
            let ok = if plateaued { w[1].error <= floor } else { w[1].error < w[0].error };
            if !ok {
                return false;
            }
        }
        true
    }
}

fn fit_rate(rows: &[ConvergenceRow]) -> Option<RateFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.error > PLATEAU).map(|r| (r.degree as f64, r.error.ln())).unzip();
    least_squares(&xs, &ys).map(|(icpt, slope)| RateFit { c: icpt.exp(), b: (-slope).exp() })
}

/// Integrates at every degree in `degrees` and fits an exponential rate to the errors.
pub fn convergence_study(
    mesh: &TriangleMesh,
    surface: Option<&ImplicitSurface>,
    f: &Integrand,
    degrees: &[usize],
    reference: f64,
    opts: &IntegrateOptions,
) -> Result<ConvergenceReport> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HosqError::InvalidArgument("degrees must be nonempty and strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(degrees.len());
    for &degree in degrees {
        let o = IntegrateOptions { degree, rule_order: None, ..*opts };
        let r = integrate(mesh, surface, f, &o)?;
        let abs = (r.value - reference).abs();
        let error = if reference == 0.0 { abs } else { abs / reference.abs() };
        rows.push(ConvergenceRow { degree, value: r.value, reference, error, runtime: r.elapsed });
    }
    let fit = fit_rate(&rows);
    Ok(ConvergenceReport { rows, fit })
}
