use crate::config::{
    parse_degrees, resolve_integrand, resolve_mesh, resolve_surface, resolve_threads, FileConfig,
    IntegrandChoice, MeshSource,
};
use crate::{Common, ConvergeArgs, GenMeshArgs, IntegrateArgs, QuadArgs, ValidateArgs, ValidationFailed};
use anyhow::{bail, Context, Result};
use hosq::mesh::{gen_icosphere, gen_torus_grid, load_off, save_off, validate as check_mesh};
use hosq::{
    convergence_study, integrate as run, ImplicitSurface, IntegrateOptions, Integrand, RuleKind, SurfaceSpec,
    TriangleMesh,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

struct Setup {
    file: FileConfig,
    spec: SurfaceSpec,
    surface: ImplicitSurface,
}

fn load_config(common: &Common) -> Result<FileConfig> {
    match &common.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    }
}

fn setup(common: &Common) -> Result<Setup> {
    let file = load_config(common)?;
    let spec = resolve_surface(&common.surface, file.surface.as_ref())?;
    let surface = spec.build()?;
    Ok(Setup { file, spec, surface })
}

fn build_mesh(source: &MeshSource, spec: &SurfaceSpec, surface: &ImplicitSurface) -> Result<TriangleMesh> {
    Ok(match source {
        MeshSource::File(path) => load_off(path).with_context(|| format!("loading mesh {}", path.display()))?,
        MeshSource::Icosphere(n) => gen_icosphere(*n, surface)?,
        MeshSource::TorusGrid(nu, nv) => match spec {
            SurfaceSpec::Torus { major, minor } => gen_torus_grid(*nu, *nv, *major, *minor)?,
            _ => bail!("torus grids need a torus surface"),
        },
    })
}

fn checked(mesh: TriangleMesh) -> Result<TriangleMesh> {
    let report = check_mesh(&mesh);
    if !report.is_valid() {
        return Err(ValidationFailed(report.summary()).into());
    }
    Ok(mesh)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn millis(d: Duration, no_timing: bool) -> f64 {
    if no_timing {
        0.0
    } else {
        (d.as_secs_f64() * 1e6).round() / 1e3
    }
}

/// Relative error, or absolute error when the reference is zero.
fn error_against(value: f64, reference: f64) -> f64 {
    let abs = (value - reference).abs();
    if reference == 0.0 {
        abs
    } else {
        abs / reference.abs()
    }
}

struct Quad {
    options: IntegrateOptions,
    integrand: IntegrandChoice,
    no_timing: bool,
}

fn quad_setup(args: &QuadArgs, file: &FileConfig, degree: usize) -> Result<Quad> {
    let rule: RuleKind = args.rule.map(Into::into).or(file.rule).unwrap_or_default();
    let mut options = IntegrateOptions::new(degree).with_rule(rule);
    if let Some(n) = args.rule_order.or(file.rule_order) {
        options = options.with_rule_order(n);
    }
    if let Some(t) = resolve_threads(args.threads.as_deref(), file.threads.as_ref())? {
        options = options.with_threads(t);
    }
    Ok(Quad {
        options,
        integrand: resolve_integrand(args, file.integrand.as_ref())?,
        no_timing: args.no_timing || file.no_timing,
    })
}

fn to_integrand(choice: &IntegrandChoice) -> Integrand {
    match choice {
        IntegrandChoice::One => Integrand::One,
        IntegrandChoice::GaussCurvature => Integrand::GaussCurvature,
        IntegrandChoice::Expression(e) => Integrand::Expression(e.clone()),
    }
}

pub fn gen_mesh(args: &GenMeshArgs) -> Result<()> {
    let s = setup(&args.common)?;
    if args.common.mesh.mesh.is_some() {
        bail!("gen-mesh generates a mesh; --mesh is not accepted");
    }
    let out = args.common.out.clone().or(s.file.out.clone()).context("gen-mesh needs --out")?;
    let source = resolve_mesh(&args.common.mesh, &FileConfig { mesh: None, ..s.file }, &s.spec)?;
    let mesh = build_mesh(&source, &s.spec, &s.surface)?;
    save_off(&mesh, &out).with_context(|| format!("writing {}", out.display()))?;
    let report = check_mesh(&mesh);
    let residual = mesh.vertices.iter().map(|v| s.surface.level(v).map(f64::abs)).try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?;
    let status = if report.is_valid() { "valid".to_string() } else { format!("INVALID ({})", report.summary()) };
    println!(
        "K={} V={} E={} chi={} max|phi|={residual:.3e} {status} -> {}",
        mesh.num_triangles(),
        mesh.num_vertices(),
        report.num_edges,
        mesh.euler_characteristic(),
        out.display()
    );
    if !report.is_valid() {
        return Err(ValidationFailed(report.summary()).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct IntegrateOutput {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
    degree: usize,
    rule: RuleKind,
    elements: usize,
    elapsed_ms: f64,
}

pub fn integrate(args: &IntegrateArgs) -> Result<()> {
    let s = setup(&args.common)?;
    let degree = args.degree.or(s.file.degree).context("integrate needs --degree")?;
    let quad = quad_setup(&args.quad, &s.file, degree)?;
    let source = resolve_mesh(&args.common.mesh, &s.file, &s.spec)?;
    let mesh = checked(build_mesh(&source, &s.spec, &s.surface)?)?;
    let result = run(&mesh, Some(&s.surface), &to_integrand(&quad.integrand), &quad.options)?;
    let reference = quad.integrand.reference(&s.surface);
    let out = IntegrateOutput {
        value: result.value,
        reference,
        rel_error: reference.map(|r| error_against(result.value, r)),
        degree,
        rule: result.rule,
        elements: mesh.num_triangles(),
        elapsed_ms: millis(result.elapsed, quad.no_timing),
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    emit(args.common.out.as_deref().or(s.file.out.as_deref()), &text)
}

pub fn converge(args: &ConvergeArgs) -> Result<()> {
    let s = setup(&args.common)?;
    let degrees = match (&args.degrees, &s.file.degrees) {
        (Some(text), _) => parse_degrees(text)?,
        (None, Some(list)) => list.resolve()?,
        (None, None) => bail!("converge needs --degrees"),
    };
    let quad = quad_setup(&args.quad, &s.file, degrees[0])?;
    let source = resolve_mesh(&args.common.mesh, &s.file, &s.spec)?;
    let mesh = checked(build_mesh(&source, &s.spec, &s.surface)?)?;
    let f = to_integrand(&quad.integrand);
    let reference = quad.integrand.reference(&s.surface);

    let mut csv = String::from("degree,value,reference,rel_error,runtime_ms\n");
    match reference {
        Some(r) => {
            let study = convergence_study(&mesh, Some(&s.surface), &f, &degrees, r, &quad.options)?;
            for row in &study.rows {
                let ms = millis(row.runtime, quad.no_timing);
                writeln!(csv, "{},{:e},{:e},{:e},{ms}", row.degree, row.value, row.reference, row.error)?;
            }
            match study.fit {
                Some(fit) => writeln!(csv, "# fitted: c={:e}, b={}", fit.c, fit.b)?,
                None => writeln!(csv, "# fitted: none (fewer than two errors above roundoff)")?,
            }
        }
        None => {
            for &degree in &degrees {
                let opts = IntegrateOptions { degree, rule_order: None, ..quad.options };
                let res = run(&mesh, Some(&s.surface), &f, &opts)?;
                writeln!(csv, "{degree},{:e},,,{}", res.value, millis(res.elapsed, quad.no_timing))?;
            }
            writeln!(csv, "# fitted: none (no reference value)")?;
        }
    }
    emit(args.common.out.as_deref().or(s.file.out.as_deref()), &csv)
}

#[derive(Serialize)]
struct ValidateOutput {
    valid: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    problems: String,
    vertices: usize,
    triangles: usize,
    edges: usize,
    euler_characteristic: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_vertex_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gauss_bonnet: Option<GaussBonnet>,
}

#[derive(Serialize)]
struct GaussBonnet {
    degree: usize,
    value: f64,
    expected: f64,
    abs_error: f64,
    elapsed_ms: f64,
}

pub fn validate(args: &ValidateArgs) -> Result<()> {
    let file = load_config(&args.common)?;
    let has_surface = args.common.surface.surface.is_some()
        || args.common.surface.surface_expr.is_some()
        || file.surface.is_some();
    let (mesh, surface) = if has_surface {
        let s = setup(&args.common)?;
        let source = resolve_mesh(&args.common.mesh, &s.file, &s.spec)?;
        (build_mesh(&source, &s.spec, &s.surface)?, Some(s.surface))
    } else {
        let path = args.common.mesh.mesh.clone().or(file.mesh.clone()).context("validate needs --mesh or a surface")?;
        (load_off(&path).with_context(|| format!("loading mesh {}", path.display()))?, None)
    };
    let report = check_mesh(&mesh);
    let max_vertex_residual = match &surface {
        Some(s) => Some(mesh.vertices.iter().map(|v| s.level(v).map(f64::abs)).try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?),
        None => None,
    };
    let degree = args.degree.or(file.degree);
    let gauss_bonnet = match (&surface, degree, report.is_valid()) {
        (Some(s), Some(k), true) => {
            let quad = quad_setup(&args.quad, &file, k)?;
            let res = run(&mesh, Some(s), &Integrand::GaussCurvature, &quad.options)?;
            let expected = 2.0 * std::f64::consts::PI * mesh.euler_characteristic() as f64;
            Some(GaussBonnet {
                degree: k,
                value: res.value,
                expected,
                abs_error: (res.value - expected).abs(),
                elapsed_ms: millis(res.elapsed, quad.no_timing),
            })
        }
        (None, Some(_), _) => bail!("a Gauss-Bonnet check needs a surface"),
        _ => None,
    };
    let out = ValidateOutput {
        valid: report.is_valid(),
        problems: report.summary(),
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: report.num_edges,
        euler_characteristic: mesh.euler_characteristic(),
        max_vertex_residual,
        gauss_bonnet,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    emit(args.common.out.as_deref().or(file.out.as_deref()), &text)?;
    if !report.is_valid() {
        return Err(ValidationFailed(report.summary()).into());
    }
    Ok(())
}
