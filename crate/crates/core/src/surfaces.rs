//! Implicit surfaces `{p : phi(p) = 0}` with exact derivatives, closest-point
//! projection and Gauss curvature.

use crate::error::{HosqError, Result};
use crate::exprsurf::Expr;
use crate::Point3;
use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    /// `|p|^2 - radius^2`.
    Sphere { radius: f64 },
    /// `(sqrt(x^2 + y^2) - major)^2 + z^2 - minor^2`.
    Torus { major: f64, minor: f64 },
    /// `(x - z^2)^2 + y^2 + z^2 - 1`.
    Dziuk,
    /// `((x^2 + y^2)^2 - x^2 + y^2)^2 + z^2 - a^2`, a genus-2 surface.
    DoubleTorus { a: f64 },
    Expression(Expr),
}

/// Serializable surface description, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    Torus {
        #[serde(rename = "R", default = "two")]
        major: f64,
        #[serde(rename = "r", default = "one")]
        minor: f64,
    },
    Dziuk,
    DoubleTorus {
        #[serde(default = "default_double_torus_a")]
        a: f64,
    },
    Expression {
        expression: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        euler_characteristic: Option<i32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_area: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

pub const DEFAULT_DOUBLE_TORUS_A: f64 = 0.2;

fn default_double_torus_a() -> f64 {
    DEFAULT_DOUBLE_TORUS_A
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<ImplicitSurface> {
        match self {
            SurfaceSpec::Sphere { radius } => ImplicitSurface::sphere(*radius),
            SurfaceSpec::Torus { major, minor } => ImplicitSurface::torus(*major, *minor),
            SurfaceSpec::Dziuk => Ok(ImplicitSurface::dziuk()),
            SurfaceSpec::DoubleTorus { a } => ImplicitSurface::double_torus(*a),
            SurfaceSpec::Expression { expression, euler_characteristic, reference_area } => {
                let mut s = ImplicitSurface::from_expression(expression)?;
                s.euler_characteristic = *euler_characteristic;
                s.reference_area = *reference_area;
                Ok(s)
            }
        }
    }
}

/// Stopping rule for [`ImplicitSurface::closest_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Level-set residual bound, scaled by `1 + |x|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { tolerance: 1e-13, max_iterations: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitSurface {
    pub kind: SurfaceKind,
    /// Smoothness class `C^r`; `None` for smooth surfaces.
    pub regularity: Option<u32>,
    pub projection: ProjectionOptions,
    pub reference_area: Option<f64>,
    pub euler_characteristic: Option<i32>,
}

impl ImplicitSurface {
    fn with_kind(kind: SurfaceKind) -> Self {
        Self {
            kind,
            regularity: None,
            projection: ProjectionOptions::default(),
            reference_area: None,
            euler_characteristic: None,
        }
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(HosqError::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
        }
        let mut s = Self::with_kind(SurfaceKind::Sphere { radius });
        s.reference_area = Some(4.0 * PI * radius * radius);
        s.euler_characteristic = Some(2);
        Ok(s)
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor) {
            return Err(HosqError::InvalidArgument(format!(
                "torus radii must satisfy R > r > 0, got R={major}, r={minor}"
            )));
        }
        let mut s = Self::with_kind(SurfaceKind::Torus { major, minor });
        s.reference_area = Some(4.0 * PI * PI * major * minor);
        s.euler_characteristic = Some(0);
        Ok(s)
    }

    pub fn dziuk() -> Self {
        let mut s = Self::with_kind(SurfaceKind::Dziuk);
        s.euler_characteristic = Some(2);
        s
    }

    pub fn double_torus(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(HosqError::InvalidArgument("double torus parameter a must be nonzero".into()));
        }
        let mut s = Self::with_kind(SurfaceKind::DoubleTorus { a });
        s.euler_characteristic = Some(-2);
        Ok(s)
    }

    pub fn from_expression(text: &str) -> Result<Self> {
        Ok(Self::with_kind(SurfaceKind::Expression(Expr::parse(text)?)))
    }

    /// `2 pi chi`, the total Gauss curvature, when the topology is known.
    pub fn total_curvature(&self) -> Option<f64> {
        self.euler_characteristic.map(|chi| 2.0 * PI * chi as f64)
    }

    pub fn level(&self, p: &Point3) -> Result<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        Ok(match &self.kind {
            SurfaceKind::Sphere { radius } => p.norm_squared() - radius * radius,
            SurfaceKind::Torus { major, minor } => {
                let q = (x * x + y * y).sqrt() - major;
                q * q + z * z - minor * minor
            }
            SurfaceKind::Dziuk => {
                let w = x - z * z;
                w * w + y * y + z * z - 1.0
            }
            SurfaceKind::DoubleTorus { a } => {
                let rho = x * x + y * y;
                let g = rho * rho - x * x + y * y;
                g * g + z * z - a * a
            }
            SurfaceKind::Expression(e) => e.eval(p)?,
        })
    }

    /// Level value, gradient and symmetrized Hessian.
    pub fn derivatives(&self, p: &Point3) -> Result<(f64, Point3, Matrix3<f64>)> {
        let (x, y, z) = (p.x, p.y, p.z);
        let (value, grad, hess) = match &self.kind {
            SurfaceKind::Sphere { radius } => {
                (p.norm_squared() - radius * radius, 2.0 * p, Matrix3::identity() * 2.0)
            }
            SurfaceKind::Torus { major, minor } => {
                let q = (x * x + y * y).sqrt();
                if q <= f64::EPSILON * major {
                    return Err(HosqError::Domain("torus level set is not differentiable on the z-axis".into()));
                }
                let s = 1.0 - major / q;
                let q3 = q * q * q;
                let value = (q - major) * (q - major) + z * z - minor * minor;
                let grad = Point3::new(2.0 * s * x, 2.0 * s * y, 2.0 * z);
                let hxy = 2.0 * major * x * y / q3;
                let hess = Matrix3::new(
                    2.0 * s + 2.0 * major * x * x / q3,
                    hxy,
                    0.0,
                    hxy,
                    2.0 * s + 2.0 * major * y * y / q3,
                    0.0,
                    0.0,
                    0.0,
                    2.0,
                );
                (value, grad, hess)
            }
            SurfaceKind::Dziuk => {
                let w = x - z * z;
                let value = w * w + y * y + z * z - 1.0;
                let grad = Point3::new(2.0 * w, 2.0 * y, 2.0 * z - 4.0 * z * w);
                let hess = Matrix3::new(
                    2.0,
                    0.0,
                    -4.0 * z,
                    0.0,
                    2.0,
                    0.0,
                    -4.0 * z,
                    0.0,
                    2.0 - 4.0 * w + 8.0 * z * z,
                );
                (value, grad, hess)
            }
            SurfaceKind::DoubleTorus { a } => {
                let rho = x * x + y * y;
                let g = rho * rho - x * x + y * y;
                let gx = 4.0 * x * rho - 2.0 * x;
                let gy = 4.0 * y * rho + 2.0 * y;
                let gxx = 12.0 * x * x + 4.0 * y * y - 2.0;
                let gxy = 8.0 * x * y;
                let gyy = 4.0 * x * x + 12.0 * y * y + 2.0;
                let value = g * g + z * z - a * a;
                let grad = Point3::new(2.0 * g * gx, 2.0 * g * gy, 2.0 * z);
                let hess = Matrix3::new(
                    2.0 * (gx * gx + g * gxx),
                    2.0 * (gx * gy + g * gxy),
                    0.0,
                    2.0 * (gx * gy + g * gxy),
                    2.0 * (gy * gy + g * gyy),
                    0.0,
                    0.0,
                    0.0,
                    2.0,
                );
                (value, grad, hess)
            }
            SurfaceKind::Expression(e) => e.eval_hyperdual(p)?,
        };
        Ok((value, grad, 0.5 * (hess + hess.transpose())))
    }

    /// Closest point on the surface to `x`.
    ///
    /// Foot-point iterations (tangential step towards `x`, back onto the
    /// level set, halved until the distance decreases) bring the iterate near
    /// the minimizer; damped Newton on `y - x + lambda grad(phi)(y) = 0`,
    /// `phi(y) = 0` then converges to the stopping tolerance. Foot-point steps
    /// also replace any Newton step whose line search fails.
    pub fn closest_point(&self, x: &Point3) -> Result<Point3> {
        const MAX_HALVINGS: usize = 20;
        let opts = self.projection;
        let scale = 1.0 + x.norm();
        let tol_level = opts.tolerance * scale;
        let tol_stationary = 1e-12 * scale;

        let (phi0, g0, _) = self.derivatives(x)?;
        let g0n2 = g0.norm_squared();
        if g0n2 == 0.0 {
            return Err(HosqError::Domain(format!("vanishing gradient at {x:?}")));
        }
        let onto_level = |mut y: Point3| -> Result<Point3> {
            for _ in 0..opts.max_iterations {
                let (phi, g, _) = self.derivatives(&y)?;
                let gn2 = g.norm_squared();
                if gn2 == 0.0 || phi.abs() <= 1e-3 * tol_level {
                    break;
                }
                y -= g * (phi / gn2);
            }
            Ok(y)
        };
        // tangential part of x - y, for y on the level set
        let tangential = |y: &Point3| -> Result<Point3> {
            let n = self.derivatives(y)?.1.normalize();
            let d = x - y;
            Ok(d - n * d.dot(&n))
        };
        // None when no halving of the step decreases the distance
        let foot_point_step = |y: &Point3| -> Result<Option<Point3>> {
            let t = tangential(y)?;
            let dist = (x - y).norm();
            let mut alpha = 1.0;
            for _ in 0..=MAX_HALVINGS {
                if let Ok(y_new) = onto_level(y + t * alpha) {
                    if (x - y_new).norm() < dist {
                        return Ok(Some(y_new));
                    }
                }
                alpha *= 0.5;
            }
            Ok(None)
        };
        let multiplier = |y: &Point3| -> Result<f64> {
            let g = self.derivatives(y)?.1;
            Ok((x - y).dot(&g) / g.norm_squared())
        };

        let mut y = onto_level(x - g0 * (phi0 / g0n2))?;
        for _ in 0..4 * opts.max_iterations {
            if tangential(&y)?.norm() <= 1e-4 * scale {
                break;
            }
            match foot_point_step(&y)? {
                Some(y_new) => y = y_new,
                None => break,
            }
        }
        let mut lambda = multiplier(&y)?;

        let residual = |y: &Point3, lambda: f64| -> Result<(Vector4<f64>, Point3, Matrix3<f64>)> {
            let (phi, g, h) = self.derivatives(y)?;
            let r = y - x + g * lambda;
            Ok((Vector4::new(r.x, r.y, r.z, phi), g, h))
        };

        let (mut res, mut grad, mut hess) = residual(&y, lambda)?;
        for _ in 0..opts.max_iterations {
            let stationary = res.fixed_rows::<3>(0).norm();
            if res[3].abs() <= tol_level && stationary <= tol_stationary {
                return Ok(y);
            }
            if grad.norm() <= 1e-14 {
                return Err(HosqError::Domain(format!("vanishing gradient at {y:?} while projecting {x:?}")));
            }
            let mut jac = Matrix4::zeros();
            jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() + hess * lambda));
            jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&grad);
            jac.fixed_view_mut::<1, 3>(3, 0).copy_from(&grad.transpose());
            let Some(step) = jac.lu().solve(&(-res)) else {
                return Err(HosqError::Domain(format!("singular projection system at {y:?}")));
            };
            let dy = Point3::new(step[0], step[1], step[2]);

            let merit = res.norm();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let y_try = y + dy * t;
                let l_try = lambda + step[3] * t;
                if let Ok(trial) = residual(&y_try, l_try) {
                    if trial.0.norm() < merit {
                        accepted = Some((y_try, l_try));
                        break;
                    }
                }
                t *= 0.5;
            }
            (y, lambda) = match accepted {
                Some(a) => a,
                // already at roundoff level: keep the full Newton step
                None if merit <= 1e-10 * scale => (y + dy, lambda + step[3]),
                None => match foot_point_step(&y)? {
                    Some(y_new) => (y_new, multiplier(&y_new)?),
                    None => break,
                },
            };
            (res, grad, hess) = residual(&y, lambda)?;
        }
        Err(HosqError::Convergence {
            iterations: opts.max_iterations,
            context: format!("closest-point projection of {x:?} (|phi| = {:e})", res[3].abs()),
        })
    }

    /// Gauss curvature of the level set at an on-surface point `y`:
    /// `grad^T adj(H) grad / |grad|^4`.
    pub fn gauss_curvature(&self, y: &Point3) -> Result<f64> {
        let (phi, g, h) = self.derivatives(y)?;
        if phi.abs() > 1e-10 {
            return Err(HosqError::Domain(format!("point {y:?} is not on the surface (phi = {phi:e})")));
        }
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= 1e-12 {
            return Err(HosqError::Domain(format!("vanishing gradient at {y:?}")));
        }
        Ok((g.transpose() * adjugate(&h) * g)[0] / (gn2 * gn2))
    }
}

fn adjugate(h: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |i0: usize, i1: usize, j0: usize, j1: usize| h[(i0, j0)] * h[(i1, j1)] - h[(i0, j1)] * h[(i1, j0)];
    // adj(H)_ij = cofactor_ji
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}
