//! Flat triangle meshes: ASCII OFF I/O, generators for closed test bodies,
//! and conformity checks.

use crate::error::{HosqError, Result};
use crate::surfaces::ImplicitSurface;
use crate::transforms::AffineTriangleMap;
use crate::Point3;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Undirected edge with sorted endpoints.
pub type Edge = [usize; 2];

fn edge(a: usize, b: usize) -> Edge {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn corners(&self, i: usize) -> [Point3; 3] {
        self.triangles[i].map(|v| self.vertices[v])
    }

    /// The affine map from the reference simplex onto triangle `i`.
    pub fn affine_map(&self, i: usize) -> Result<AffineTriangleMap> {
        let [a, b, c] = self.corners(i);
        AffineTriangleMap::new(a, b, c)
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_counts(&self) -> HashMap<Edge, usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *counts.entry(edge(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    /// Total area of the flat triangles.
    pub fn flat_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    fn bbox_diagonal_sq(&self) -> f64 {
        let mut lo = Point3::repeat(f64::INFINITY);
        let mut hi = Point3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        if self.vertices.is_empty() {
            0.0
        } else {
            (hi - lo).norm_squared()
        }
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices<F: FnMut(&Point3) -> Point3>(&self, f: F) -> Self {
        Self { vertices: self.vertices.iter().map(f).collect(), triangles: self.triangles.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub num_vertices: usize,
    pub num_triangles: usize,
    pub num_edges: usize,
    /// Triangles referencing a vertex index out of range.
    pub index_out_of_range: Vec<usize>,
    /// Triangles listing the same vertex twice.
    pub repeated_vertices: Vec<usize>,
    /// Triangles with area below `1e-14` times the squared bounding-box diagonal.
    pub degenerate: Vec<usize>,
    /// Edges used by a single triangle.
    pub boundary_edges: Vec<Edge>,
    /// Edges used by more than two triangles, with their use count.
    pub non_manifold_edges: Vec<(Edge, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.num_triangles > 0
            && self.index_out_of_range.is_empty()
            && self.repeated_vertices.is_empty()
            && self.degenerate.is_empty()
            && self.boundary_edges.is_empty()
            && self.non_manifold_edges.is_empty()
    }

    /// One-line summary of the failures, empty when valid.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if self.num_triangles == 0 {
            s.push_str("mesh has no triangles; ");
        }
        let mut part = |n: usize, what: &str| {
            if n > 0 {
                let _ = write!(s, "{n} {what}; ");
            }
        };
        part(self.index_out_of_range.len(), "triangles with out-of-range indices");
        part(self.repeated_vertices.len(), "triangles with repeated vertices");
        part(self.degenerate.len(), "degenerate triangles");
        part(self.boundary_edges.len(), "boundary edges");
        part(self.non_manifold_edges.len(), "edges shared by more than two triangles");
        s.trim_end_matches("; ").to_string()
    }
}

/// Checks index bounds, degeneracy and that every edge is shared by exactly two triangles.
pub fn validate(mesh: &TriangleMesh) -> ValidationReport {
    let nv = mesh.vertices.len();
    let mut report = ValidationReport {
        num_vertices: nv,
        num_triangles: mesh.triangles.len(),
        ..Default::default()
    };
    let min_area = 1e-14 * mesh.bbox_diagonal_sq();
    let mut counts: HashMap<Edge, usize> = HashMap::new();
    for (i, t) in mesh.triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= nv) {
            report.index_out_of_range.push(i);
            continue;
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            report.repeated_vertices.push(i);
            continue;
        }
        let [a, b, c] = mesh.corners(i);
        if 0.5 * (b - a).cross(&(c - a)).norm() <= min_area {
            report.degenerate.push(i);
        }
        for k in 0..3 {
            *counts.entry(edge(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    report.num_edges = counts.len();
    let mut edges: Vec<_> = counts.into_iter().collect();
    edges.sort_unstable();
    for (e, n) in edges {
        match n {
            1 => report.boundary_edges.push(e),
            2 => {}
            _ => report.non_manifold_edges.push((e, n)),
        }
    }
    report
}

/// Parses ASCII OFF text containing only triangular faces.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    // (line number, tokens) for every non-blank, non-comment line
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });
    let fmt_err = |line: usize, message: String| HosqError::Format { line, message };

    let (hline, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file".into()))?;
    if header[0] != "OFF" {
        return Err(fmt_err(hline, format!("expected header 'OFF', found '{}'", header[0])));
    }
    let (cline, counts) = if header.len() > 1 {
        (hline, header[1..].to_vec())
    } else {
        lines.next().ok_or_else(|| fmt_err(hline + 1, "missing counts line".into()))?
    };
    if counts.len() < 2 {
        return Err(fmt_err(cline, "counts line must be 'V F E'".into()));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|_| fmt_err(cline, format!("invalid count '{s}'")));
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, tok) = lines.next().ok_or_else(|| fmt_err(0, format!("expected {nv} vertices")))?;
        if tok.len() < 3 {
            return Err(fmt_err(ln, "vertex line needs 3 coordinates".into()));
        }
        let mut xyz = [0.0; 3];
        for (c, s) in xyz.iter_mut().zip(&tok) {
            *c = s.parse().map_err(|_| fmt_err(ln, format!("invalid coordinate '{s}'")))?;
        }
        vertices.push(Point3::from(xyz));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, tok) = lines.next().ok_or_else(|| fmt_err(0, format!("expected {nf} faces")))?;
        let n: usize = tok[0].parse().map_err(|_| fmt_err(ln, format!("invalid face size '{}'", tok[0])))?;
        if n != 3 {
            return Err(HosqError::NonTriangleFace { line: ln, vertices: n });
        }
        if tok.len() < 4 {
            return Err(fmt_err(ln, "face line needs 3 vertex indices".into()));
        }
        let mut t = [0usize; 3];
        for (c, s) in t.iter_mut().zip(&tok[1..4]) {
            *c = s.parse().map_err(|_| fmt_err(ln, format!("invalid vertex index '{s}'")))?;
            if *c >= nv {
                return Err(fmt_err(ln, format!("vertex index {c} out of range (V = {nv})")));
            }
        }
        triangles.push(t);
    }
    Ok(TriangleMesh { vertices, triangles })
}

pub fn load_off<P: AsRef<Path>>(path: P) -> Result<TriangleMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

/// Serializes to ASCII OFF with 17 significant digits per coordinate.
pub fn to_off_string(mesh: &TriangleMesh) -> Result<String> {
    if mesh.triangles.is_empty() || mesh.vertices.is_empty() {
        return Err(HosqError::InvalidMesh("refusing to write an empty mesh".into()));
    }
    let mut s = String::with_capacity(64 * (mesh.vertices.len() + mesh.triangles.len()));
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} {}", mesh.vertices.len(), mesh.triangles.len(), mesh.edge_counts().len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    Ok(s)
}

pub fn save_off<P: AsRef<Path>>(mesh: &TriangleMesh, path: P) -> Result<()> {
    std::fs::write(path, to_off_string(mesh)?)?;
    Ok(())
}

pub const MAX_ICOSPHERE_SUBDIVISIONS: usize = 7;

fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let vertices = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .map(|v| Point3::from(v).normalize());
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh { vertices: vertices.to_vec(), triangles }
}

/// Splits every triangle into four through its edge midpoints.
fn midpoint_subdivide(mesh: &TriangleMesh) -> TriangleMesh {
    let mut vertices = mesh.vertices.clone();
    let mut mids: HashMap<Edge, usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3>| {
        *mids.entry(edge(a, b)).or_insert_with(|| {
            vertices.push(0.5 * (vertices[a] + vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    TriangleMesh { vertices, triangles }
}

fn project_all(mesh: &mut TriangleMesh, s: &ImplicitSurface) -> Result<()> {
    for v in &mut mesh.vertices {
        *v = match radial_point(s, v) {
            Some(p) => p,
            None => s.closest_point(v)?,
        };
    }
    Ok(())
}

/// Root of `phi` on the ray from the origin through `v`, found by Newton from
/// `|v|`. Keeps the angular spacing of the icosphere on star-shaped surfaces,
/// where closest-point placement can drag vertices away from strongly bent
/// regions. `None` if the ray solve fails.
fn radial_point(s: &ImplicitSurface, v: &Point3) -> Option<Point3> {
    let mut t = v.norm();
    if t == 0.0 {
        return None;
    }
    let dir = v / t;
    for _ in 0..50 {
        let (phi, g, _) = s.derivatives(&(dir * t)).ok()?;
        if phi.abs() <= 1e-14 * (1.0 + t) {
            return Some(dir * t);
        }
        let slope = g.dot(&dir);
        if slope.is_nan() || slope <= 0.0 {
            return None;
        }
        let dt = phi / slope;
        t -= dt;
        if t.is_nan() || t <= 0.0 {
            return None;
        }
        if dt.abs() <= 4.0 * f64::EPSILON * t {
            let p = dir * t;
            let phi = s.level(&p).ok()?;
            return (phi.abs() <= 1e-13 * (1.0 + t)).then_some(p);
        }
    }
    None
}

/// Icosahedron refined `subdivisions` times, with the vertices of every
/// level placed on `s` along rays from the origin (closest point where that
/// fails). Produces `20 * 4^subdivisions` triangles.
pub fn gen_icosphere(subdivisions: usize, s: &ImplicitSurface) -> Result<TriangleMesh> {
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS {
        return Err(HosqError::InvalidArgument(format!(
            "at most {MAX_ICOSPHERE_SUBDIVISIONS} icosphere subdivisions supported, got {subdivisions}"
        )));
    }
    let mut mesh = icosahedron();
    project_all(&mut mesh, s)?;
    for _ in 0..subdivisions {
        mesh = midpoint_subdivide(&mesh);
        project_all(&mut mesh, s)?;
    }
    Ok(mesh)
}

/// Structured `nu x nv` grid on the torus with radii `major > minor`,
/// each quad split into two triangles.
pub fn gen_torus_grid(nu: usize, nv: usize, major: f64, minor: f64) -> Result<TriangleMesh> {
    if nu < 3 || nv < 3 {
        return Err(HosqError::InvalidArgument(format!("torus grid needs nu, nv >= 3, got {nu} x {nv}")));
    }
    if !(minor > 0.0 && major > minor) {
        return Err(HosqError::InvalidArgument(format!("torus radii must satisfy R > r > 0, got {major}, {minor}")));
    }
    let tau = std::f64::consts::TAU;
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let (su, cu) = (tau * i as f64 / nu as f64).sin_cos();
        for j in 0..nv {
            let (sv, cv) = (tau * j as f64 / nv as f64).sin_cos();
            let rho = major + minor * cv;
            vertices.push(Point3::new(rho * cu, rho * su, minor * sv));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Ok(TriangleMesh { vertices, triangles })
}
