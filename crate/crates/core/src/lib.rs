//! High-order quadrature of surface integrals over closed implicit surfaces.
//!
//! A flat, conforming triangle mesh is lifted onto an implicit surface by
//! closest-point projection. Every curved triangle is re-parametrized over
//! the square `[-1,1]^2` with the square-squeezing map, its geometry is
//! sampled on a tensor Chebyshev–Lobatto grid, differentiated spectrally,
//! and the resulting area density is integrated with a tensor
//! Clenshaw–Curtis (or Gauss–Legendre) rule.
//!
//! ```
//! use hosq::{integrate, mesh, Integrand, IntegrateOptions, ImplicitSurface};
//!
//! let sphere = ImplicitSurface::sphere(1.0).unwrap();
//! let mesh = mesh::gen_icosphere(1, &sphere).unwrap();
//! let result = integrate(&mesh, Some(&sphere), &Integrand::One, &IntegrateOptions::new(8)).unwrap();
//! assert!((result.value - 4.0 * std::f64::consts::PI).abs() < 1e-6);
//! ```

pub mod error;
pub mod exprsurf;
pub mod integrator;
pub mod mesh;
pub mod quadrature;
pub mod spectral;
pub mod surfaces;
pub mod transforms;

pub use error::{HosqError, Result};
pub use exprsurf::{Expr, HyperDual};
pub use integrator::{
    build_element, convergence_study, element_integral, integrate, ConvergenceReport,
    ConvergenceRow, ElementGeometry, IntegralResult, IntegrateOptions, Integrand,
};
pub use mesh::{TriangleMesh, ValidationReport};
pub use quadrature::{QuadRule1D, QuadRule2D, RuleKind};
pub use spectral::{ChebGrid1D, ChebGrid2D, DiffOps};
pub use surfaces::{ImplicitSurface, SurfaceKind, SurfaceSpec};
pub use transforms::{AffineTriangleMap, SimplexPoint, SquarePoint};

/// Points and vectors in the embedding space.
pub type Point3 = nalgebra::Vector3<f64>;
