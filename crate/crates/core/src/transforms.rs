//! Maps between the square `[-1,1]^2`, the reference simplex
//! `{u, v >= 0, u + v <= 1}` and flat triangles in space.
//!
//! [`squeeze`] is a homeomorphism of the closed square onto the simplex: the
//! corner `(1,1)` lands on the midpoint of the hypotenuse and the two edges
//! meeting there cover the hypotenuse. [`duffy`] is kept for comparison only;
//! it collapses the whole upper edge of the square onto the vertex `(0,1)`.

use crate::error::{HosqError, Result};
use crate::Point3;
use nalgebra::Matrix2;

/// Slack applied to domain membership tests.
pub const DOMAIN_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquarePoint {
    pub x: f64,
    pub y: f64,
}

impl SquarePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn in_domain(&self) -> bool {
        let lim = 1.0 + DOMAIN_SLACK;
        self.x.abs() <= lim && self.y.abs() <= lim
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    pub u: f64,
    pub v: f64,
}

impl SimplexPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn in_domain(&self) -> bool {
        self.u >= -DOMAIN_SLACK && self.v >= -DOMAIN_SLACK && self.u + self.v <= 1.0 + DOMAIN_SLACK
    }

    /// Distance to the boundary of the reference simplex (zero on the boundary).
    pub fn boundary_distance(&self) -> f64 {
        let hyp = (1.0 - self.u - self.v) / std::f64::consts::SQRT_2;
        self.u.min(self.v).min(hyp).abs()
    }
}

/// Square-squeezing map `[-1,1]^2 -> simplex`.
pub fn squeeze(p: SquarePoint) -> SimplexPoint {
    let x1 = 0.5 * (p.x + 1.0);
    let x2 = 0.5 * (p.y + 1.0);
    let half_prod = 0.5 * x1 * x2;
    SimplexPoint::new(x1 - half_prod, x2 - half_prod)
}

/// Inverse of [`squeeze`], returning coordinates in `[-1,1]^2`.
pub fn unsqueeze(q: SimplexPoint) -> Result<SquarePoint> {
    if !q.in_domain() {
        return Err(HosqError::Domain(format!(
            "({}, {}) lies outside the reference simplex",
            q.u, q.v
        )));
    }
    let d = q.u - q.v;
    // roundoff near the hypotenuse can push the radicand slightly negative
    let root = (d * d + 4.0 * (1.0 - q.u - q.v)).max(0.0).sqrt();
    Ok(SquarePoint::new(1.0 + d - root, 1.0 - d - root))
}

/// Duffy's collapsed-coordinate map `[-1,1]^2 -> simplex`.
pub fn duffy(p: SquarePoint) -> SimplexPoint {
    SimplexPoint::new(0.25 * (1.0 + p.x) * (1.0 - p.y), 0.5 * (1.0 + p.y))
}

/// Jacobian of [`squeeze`] with respect to `(x, y)`; columns are `d/dx`, `d/dy`.
///
/// Its determinant is `(1 - x1/2 - x2/2) / 4` with `x1 = (x+1)/2`,
/// `x2 = (y+1)/2`, which vanishes on the closed square only at `(1,1)`.
pub fn squeeze_jacobian(p: SquarePoint) -> Matrix2<f64> {
    let x1 = 0.5 * (p.x + 1.0);
    let x2 = 0.5 * (p.y + 1.0);
    Matrix2::new(
        0.5 * (1.0 - 0.5 * x2),
        -0.25 * x1,
        -0.25 * x2,
        0.5 * (1.0 - 0.5 * x1),
    )
}

/// Affine map from the reference simplex onto a flat triangle in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTriangleMap {
    pub vertices: [Point3; 3],
}

impl AffineTriangleMap {
    /// Fails when the three vertices are collinear.
    pub fn new(v0: Point3, v1: Point3, v2: Point3) -> Result<Self> {
        let map = Self { vertices: [v0, v1, v2] };
        if map.area() <= 0.0 {
            return Err(HosqError::Domain("degenerate triangle: vertices are collinear".into()));
        }
        Ok(map)
    }

    pub fn area(&self) -> f64 {
        let [v0, v1, v2] = &self.vertices;
        0.5 * (v1 - v0).cross(&(v2 - v0)).norm()
    }

    pub fn apply(&self, q: SimplexPoint) -> Point3 {
        affine_apply(self, q)
    }
}

/// `v0 + u (v1 - v0) + v (v2 - v0)`.
pub fn affine_apply(m: &AffineTriangleMap, q: SimplexPoint) -> Point3 {
    let [v0, v1, v2] = &m.vertices;
    v0 + (v1 - v0) * q.u + (v2 - v0) * q.v
}
