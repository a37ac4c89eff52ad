//! Run configuration: command-line flags merged over an optional JSON file.

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hosq::surfaces::DEFAULT_DOUBLE_TORUS_A;
use hosq::{Expr, ImplicitSurface, RuleKind, SurfaceSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceName {
    Sphere,
    Torus,
    Dziuk,
    DoubleTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Cc,
    Gl,
}

impl From<RuleArg> for RuleKind {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Cc => RuleKind::Cc,
            RuleArg::Gl => RuleKind::Gl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegrandArg {
    One,
    GaussCurvature,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SurfaceArgs {
    /// Built-in surface
    #[arg(long, value_enum, conflicts_with = "surface_expr")]
    pub surface: Option<SurfaceName>,
    /// Level-set expression in x, y, z, e.g. "x^2+y^2+z^2-1"
    #[arg(long, value_name = "TEXT")]
    pub surface_expr: Option<String>,
    /// Sphere radius
    #[arg(long)]
    pub radius: Option<f64>,
    /// Torus major radius
    #[arg(long = "R", value_name = "R")]
    pub major: Option<f64>,
    /// Torus minor radius
    #[arg(long = "r", value_name = "r")]
    pub minor: Option<f64>,
    /// Double torus thickness parameter
    #[arg(long)]
    pub a: Option<f64>,
    /// Euler characteristic of an expression surface (enables the Gauss-Bonnet reference)
    #[arg(long, allow_negative_numbers = true)]
    pub euler_characteristic: Option<i32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MeshArgs {
    /// Input mesh in OFF format (instead of a generated one)
    #[arg(long, value_name = "OFF")]
    pub mesh: Option<PathBuf>,
    /// Icosphere subdivisions (sphere, dziuk, expression surfaces)
    #[arg(long)]
    pub subdiv: Option<usize>,
    /// Torus grid size around the axis
    #[arg(long)]
    pub nu: Option<usize>,
    /// Torus grid size around the tube
    #[arg(long)]
    pub nv: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuadArgs {
    /// Quadrature rule
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Quadrature order, at least the degree for Clenshaw-Curtis (default: the degree)
    #[arg(long)]
    pub rule_order: Option<usize>,
    #[arg(long, value_enum, conflicts_with = "integrand_expr")]
    pub integrand: Option<IntegrandArg>,
    /// Integrand expression in x, y, z
    #[arg(long, value_name = "TEXT")]
    pub integrand_expr: Option<String>,
    /// Worker threads, a positive integer or "auto" (falls back to HOSQ_THREADS)
    #[arg(long, value_name = "N|auto")]
    pub threads: Option<String>,
    /// Report zero timings so output is byte-identical between runs
    #[arg(long)]
    pub no_timing: bool,
}

/// JSON configuration file; every key mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub surface: Option<SurfaceSpec>,
    pub mesh: Option<PathBuf>,
    pub subdiv: Option<usize>,
    pub nu: Option<usize>,
    pub nv: Option<usize>,
    pub degree: Option<usize>,
    pub degrees: Option<DegreeList>,
    pub rule: Option<RuleKind>,
    pub rule_order: Option<usize>,
    pub integrand: Option<IntegrandSpec>,
    pub out: Option<PathBuf>,
    pub threads: Option<ThreadsSpec>,
    #[serde(default)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DegreeList {
    List(Vec<usize>),
    Range(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum IntegrandSpec {
    Named(NamedIntegrand),
    Expression { expression: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedIntegrand {
    One,
    GaussCurvature,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThreadsSpec {
    Count(usize),
    Text(String),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Parses `a..b` (inclusive, step 2), `a..b:step`, or a comma-separated list.
pub fn parse_degrees(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let degrees: Vec<usize> = if let Some((a, rest)) = text.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, s)) => (b, s.trim().parse::<usize>().with_context(|| format!("invalid step in '{text}'"))?),
            None => (rest, 2),
        };
        let a: usize = a.trim().parse().with_context(|| format!("invalid start in '{text}'"))?;
        let b: usize = b.trim().parse().with_context(|| format!("invalid end in '{text}'"))?;
        if step == 0 {
            bail!("degree step must be positive in '{text}'");
        }
        (a..=b).step_by(step).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<usize>().with_context(|| format!("invalid degree '{s}'")))
            .collect::<Result<_>>()?
    };
    check_degrees(&degrees)?;
    Ok(degrees)
}

fn check_degrees(degrees: &[usize]) -> Result<()> {
    if degrees.is_empty() {
        bail!("degree list is empty");
    }
    if degrees[0] == 0 {
        bail!("degrees must be at least 1");
    }
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        bail!("degrees must be strictly ascending");
    }
    Ok(())
}

impl DegreeList {
    pub fn resolve(&self) -> Result<Vec<usize>> {
        match self {
            DegreeList::List(v) => {
                check_degrees(v)?;
                Ok(v.clone())
            }
            DegreeList::Range(s) => parse_degrees(s),
        }
    }
}

/// `None` means one worker per hardware thread.
pub fn parse_threads(text: &str) -> Result<Option<usize>> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match text.parse::<usize>() {
        Ok(0) | Err(_) => bail!("threads must be a positive integer or 'auto', got '{text}'"),
        Ok(n) => Ok(Some(n)),
    }
}

pub fn resolve_threads(flag: Option<&str>, file: Option<&ThreadsSpec>) -> Result<Option<usize>> {
    if let Some(t) = flag {
        return parse_threads(t);
    }
    match file {
        Some(ThreadsSpec::Count(0)) => bail!("threads must be positive"),
        Some(ThreadsSpec::Count(n)) => return Ok(Some(*n)),
        Some(ThreadsSpec::Text(t)) => return parse_threads(t),
        None => {}
    }
    match std::env::var("HOSQ_THREADS") {
        Ok(t) if !t.trim().is_empty() => parse_threads(&t).context("in HOSQ_THREADS"),
        _ => Ok(None),
    }
}

/// Surface description from flags, falling back to the config file.
pub fn resolve_surface(args: &SurfaceArgs, file: Option<&SurfaceSpec>) -> Result<SurfaceSpec> {
    if let Some(text) = &args.surface_expr {
        return Ok(SurfaceSpec::Expression {
            expression: text.clone(),
            euler_characteristic: args.euler_characteristic,
            reference_area: None,
        });
    }
    let mut spec = match (args.surface, file) {
        (Some(SurfaceName::Sphere), _) => SurfaceSpec::Sphere { radius: 1.0 },
        (Some(SurfaceName::Torus), _) => SurfaceSpec::Torus { major: 2.0, minor: 1.0 },
        (Some(SurfaceName::Dziuk), _) => SurfaceSpec::Dziuk,
        (Some(SurfaceName::DoubleTorus), _) => SurfaceSpec::DoubleTorus { a: DEFAULT_DOUBLE_TORUS_A },
        (None, Some(spec)) => spec.clone(),
        (None, None) => bail!("no surface given; use --surface, --surface-expr or a config file"),
    };
    match &mut spec {
        SurfaceSpec::Sphere { radius } => *radius = args.radius.unwrap_or(*radius),
        SurfaceSpec::Torus { major, minor } => {
            *major = args.major.unwrap_or(*major);
            *minor = args.minor.unwrap_or(*minor);
        }
        SurfaceSpec::DoubleTorus { a } => *a = args.a.unwrap_or(*a),
        SurfaceSpec::Expression { euler_characteristic, .. } => {
            if args.euler_characteristic.is_some() {
                *euler_characteristic = args.euler_characteristic;
            }
        }
        SurfaceSpec::Dziuk => {}
    }
    Ok(spec)
}

/// Where the flat mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Icosphere(usize),
    TorusGrid(usize, usize),
}

pub fn resolve_mesh(args: &MeshArgs, file: &FileConfig, spec: &SurfaceSpec) -> Result<MeshSource> {
    let generator_flags = args.subdiv.is_some() || args.nu.is_some() || args.nv.is_some();
    if let Some(path) = &args.mesh {
        if generator_flags {
            bail!("--mesh cannot be combined with generator options");
        }
        return Ok(MeshSource::File(path.clone()));
    }
    if !generator_flags {
        if let Some(path) = &file.mesh {
            return Ok(MeshSource::File(path.clone()));
        }
    }
    let subdiv = args.subdiv.or(file.subdiv);
    let (nu, nv) = (args.nu.or(file.nu), args.nv.or(file.nv));
    match spec {
        SurfaceSpec::Torus { .. } => {
            if subdiv.is_some() {
                bail!("the torus generator takes --nu/--nv, not --subdiv");
            }
            Ok(MeshSource::TorusGrid(nu.unwrap_or(16), nv.unwrap_or(8)))
        }
        SurfaceSpec::DoubleTorus { .. } => bail!("no built-in double torus mesh; pass --mesh <off>"),
        _ => {
            if nu.is_some() || nv.is_some() {
                bail!("--nu/--nv only apply to the torus");
            }
            let default = if matches!(spec, SurfaceSpec::Sphere { .. }) { 2 } else { 3 };
            Ok(MeshSource::Icosphere(subdiv.unwrap_or(default)))
        }
    }
}

/// What is integrated.
#[derive(Debug, Clone)]
pub enum IntegrandChoice {
    One,
    GaussCurvature,
    Expression(Expr),
}

impl IntegrandChoice {
    /// Known exact value, if any.
    pub fn reference(&self, surface: &ImplicitSurface) -> Option<f64> {
        match self {
            IntegrandChoice::One => surface.reference_area,
            IntegrandChoice::GaussCurvature => surface.total_curvature(),
            IntegrandChoice::Expression(_) => None,
        }
    }
}

pub fn resolve_integrand(args: &QuadArgs, file: Option<&IntegrandSpec>) -> Result<IntegrandChoice> {
    if let Some(text) = &args.integrand_expr {
        return Ok(IntegrandChoice::Expression(Expr::parse(text)?));
    }
    Ok(match (args.integrand, file) {
        (Some(IntegrandArg::One), _) => IntegrandChoice::One,
        (Some(IntegrandArg::GaussCurvature), _) => IntegrandChoice::GaussCurvature,
        (None, Some(IntegrandSpec::Named(NamedIntegrand::GaussCurvature))) => IntegrandChoice::GaussCurvature,
        (None, Some(IntegrandSpec::Expression { expression })) => IntegrandChoice::Expression(Expr::parse(expression)?),
        (None, Some(IntegrandSpec::Named(NamedIntegrand::One))) | (None, None) => IntegrandChoice::One,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_ranges() {
        assert_eq!(parse_degrees("2..14").unwrap(), vec![2, 4, 6, 8, 10, 12, 14]);
        assert_eq!(parse_degrees("4..8:1").unwrap(), vec![4, 5, 6, 7, 8]);
        assert_eq!(parse_degrees("2..13:4").unwrap(), vec![2, 6, 10]);
        assert_eq!(parse_degrees("3, 5,9").unwrap(), vec![3, 5, 9]);
        assert_eq!(parse_degrees("7").unwrap(), vec![7]);
        for bad in ["", "5..2", "0..4", "2..x", "2..8:0", "4,3", "a"] {
            assert!(parse_degrees(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn thread_counts() {
        assert_eq!(parse_threads("auto").unwrap(), None);
        assert_eq!(parse_threads("4").unwrap(), Some(4));
        assert!(parse_threads("0").is_err());
        assert!(parse_threads("-1").is_err());
        assert_eq!(resolve_threads(Some("2"), Some(&ThreadsSpec::Count(5))).unwrap(), Some(2));
        assert_eq!(resolve_threads(None, Some(&ThreadsSpec::Count(5))).unwrap(), Some(5));
        assert_eq!(resolve_threads(None, Some(&ThreadsSpec::Text("auto".into()))).unwrap(), None);
    }

    #[test]
    fn config_file_parses() {
        let c: FileConfig = serde_json::from_str(
            r#"{"surface": {"kind": "torus", "R": 3, "r": 0.5}, "nu": 12, "nv": 6,
                "degrees": "2..6", "rule": "gl", "integrand": "gauss-curvature", "threads": "auto"}"#,
        )
        .unwrap();
        assert_eq!(c.surface, Some(SurfaceSpec::Torus { major: 3.0, minor: 0.5 }));
        assert_eq!(c.degrees.unwrap().resolve().unwrap(), vec![2, 4, 6]);
        assert_eq!(c.rule, Some(RuleKind::Gl));
        assert_eq!(c.integrand, Some(IntegrandSpec::Named(NamedIntegrand::GaussCurvature)));

        let c: FileConfig =
            serde_json::from_str(r#"{"degrees": [4, 8], "integrand": {"expression": "x^2"}, "threads": 3}"#).unwrap();
        assert_eq!(c.degrees.unwrap().resolve().unwrap(), vec![4, 8]);
        assert!(matches!(c.threads, Some(ThreadsSpec::Count(3))));

        assert!(serde_json::from_str::<FileConfig>(r#"{"degre": 4}"#).is_err());
        assert!(serde_json::from_str::<FileConfig>(r#"{"surface": {"kind": "cube"}}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"surface": {"kind": "sphere"}}"#).unwrap();
        assert_eq!(c.surface, Some(SurfaceSpec::Sphere { radius: 1.0 }));
    }

    #[test]
    fn flags_override_file() {
        let file = SurfaceSpec::Torus { major: 3.0, minor: 0.5 };
        let args = SurfaceArgs { minor: Some(0.25), ..Default::default() };
        assert_eq!(resolve_surface(&args, Some(&file)).unwrap(), SurfaceSpec::Torus { major: 3.0, minor: 0.25 });
        let args = SurfaceArgs { surface: Some(SurfaceName::Sphere), radius: Some(2.0), ..Default::default() };
        assert_eq!(resolve_surface(&args, Some(&file)).unwrap(), SurfaceSpec::Sphere { radius: 2.0 });
        assert!(resolve_surface(&SurfaceArgs::default(), None).is_err());
    }

    #[test]
    fn mesh_sources() {
        let file = FileConfig::default();
        let sphere = SurfaceSpec::Sphere { radius: 1.0 };
        let torus = SurfaceSpec::Torus { major: 2.0, minor: 1.0 };
        assert_eq!(resolve_mesh(&MeshArgs::default(), &file, &sphere).unwrap(), MeshSource::Icosphere(2));
        assert_eq!(resolve_mesh(&MeshArgs::default(), &file, &SurfaceSpec::Dziuk).unwrap(), MeshSource::Icosphere(3));
        assert_eq!(resolve_mesh(&MeshArgs::default(), &file, &torus).unwrap(), MeshSource::TorusGrid(16, 8));
        let grid = MeshArgs { nu: Some(10), ..Default::default() };
        assert_eq!(resolve_mesh(&grid, &file, &torus).unwrap(), MeshSource::TorusGrid(10, 8));
        assert!(resolve_mesh(&grid, &file, &sphere).is_err());
        assert!(resolve_mesh(&MeshArgs::default(), &file, &SurfaceSpec::DoubleTorus { a: 0.2 }).is_err());
        let both = MeshArgs { mesh: Some("m.off".into()), subdiv: Some(1), ..Default::default() };
        assert!(resolve_mesh(&both, &file, &sphere).is_err());
    }
}
