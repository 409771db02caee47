//! `sdcalc`: signed-distance coordinates, operators and verification suites.

mod table;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sdcalc_core::asymptotics::{default_eps, slope_test, LayerFields, LayerGeometry, LayerOp, LayerPoint, MAX_ORDER};
use sdcalc_core::closest_point::Projector;
use sdcalc_core::curve_frames::{frenet_at, Tube};
use sdcalc_core::field::{ScalarField, VectorField};
use sdcalc_core::oracle::FdSteps;
use sdcalc_core::spec::{CurveSpec, FieldSpec, GeometrySpec, SurfaceSpec};
use sdcalc_core::suites::{run_suite, SuiteConfig, SuiteKind};
use sdcalc_core::surface_calculus::{Collar, OpValue, SurfaceOp};
use sdcalc_core::surface_frames::{SurfaceGeometry, SURFACE_DEGREE};
use sdcalc_core::tube_calculus::TubeOp;
use sdcalc_core::{SurfaceChart, Vec3};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use table::{emit, read_points, Cell, Format, Points, Table};

#[derive(Parser, Debug)]
#[command(
    name = "sdcalc",
    version,
    about = "Signed-distance coordinates around parametric surfaces and curves",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Project ambient points onto a surface: parameters, signed distance, foot and normal
    Project(ProjectArgs),
    /// Darboux frames and curvatures at surface parameters or ambient points
    Frames(FramesArgs),
    /// Apply a differential operator in surface coordinates
    Op(OpArgs),
    /// Time derivatives at fixed ambient position around a moving surface
    Evolve(EvolveArgs),
    /// Frenet data and Bishop angle along a curve
    TubeFrames(TubeFramesArgs),
    /// Apply a differential operator in tube coordinates
    TubeOp(TubeOpArgs),
    /// Boundary-layer expansion of an operator with its convergence test
    Expand(ExpandArgs),
    /// Run a seeded verification suite and write a JSON report
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; standard output when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Points CSV with columns x,y,z
    #[arg(long, value_name = "PATH")]
    points: PathBuf,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FramesArgs {
    /// Geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Points CSV with columns s1,s2 or x,y,z
    #[arg(long, value_name = "PATH", conflicts_with = "grid", required_unless_present = "grid")]
    points: Option<PathBuf>,
    /// Parameter grid N1,N2 over the chart domain (at least 2 per axis)
    #[arg(long, value_name = "N1,N2")]
    grid: Option<String>,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct OpArgs {
    /// Geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Operator
    #[arg(long, value_parser = ["grad", "div", "laplacian", "lap", "curl", "veclap", "curlcurl", "hessian", "vecgrad", "convective"])]
    op: String,
    /// Field file (JSON)
    #[arg(long, value_name = "PATH")]
    field: PathBuf,
    /// Points CSV with columns s1,s2,sigma or x,y,z
    #[arg(long, value_name = "PATH")]
    points: PathBuf,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    /// Shift the first principal curvature by this amount (sensitivity checks)
    #[arg(long, default_value_t = 0.0)]
    fault: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    /// Geometry file (JSON) with a time-dependent chart or a motion block
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    /// Quantity to differentiate
    #[arg(long, value_parser = ["dtscalar", "dtvector", "dtcoords"])]
    op: String,
    /// Field file (JSON); not needed for dtcoords
    #[arg(long, value_name = "PATH")]
    field: Option<PathBuf>,
    /// Points CSV with columns s1,s2,sigma or x,y,z
    #[arg(long, value_name = "PATH")]
    points: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct TubeFramesArgs {
    /// Curve geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Initial Bishop angle; overrides the geometry file
    #[arg(long)]
    phi0: Option<f64>,
    /// Number of equally spaced parameter samples (at least 2)
    #[arg(long, default_value_t = 512)]
    samples: usize,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct TubeOpArgs {
    /// Curve geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Operator
    #[arg(long, value_parser = ["grad", "vecgrad", "div", "lap", "laplacian", "curl", "veclap", "dtscalar", "dtvector", "dtorsion"])]
    op: String,
    /// Field file (JSON); not needed for dtorsion
    #[arg(long, value_name = "PATH")]
    field: Option<PathBuf>,
    /// Points CSV with columns s,theta,sigma or x,y,z
    #[arg(long, value_name = "PATH")]
    points: PathBuf,
    /// Initial Bishop angle; overrides the geometry file
    #[arg(long)]
    phi0: Option<f64>,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ExpandArgs {
    /// Geometry file (JSON), surface or curve
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Operator
    #[arg(long, default_value = "lap", value_parser = [
        "lap", "laplacian", "scalar_lap", "grad", "grad_scalar", "vecgrad", "grad_vector", "div", "veclap",
        "vector_lap", "curl", "curlcurl", "curl_curl", "advect_scalar", "advect_vector", "dt", "dtscalar",
        "dtvector", "dt_vector"
    ])]
    op: String,
    /// Truncation order K (0 to 6)
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Rescaled normal coordinate
    #[arg(long, default_value_t = 0.7)]
    xi: f64,
    /// Comma-separated ε values for the convergence test
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Field file (JSON) in layer variables; defaults to f = xi, u = (0, 0, xi)
    #[arg(long, value_name = "PATH")]
    field: Option<PathBuf>,
    /// Surface parameters s1,s2 or curve parameters s,theta; defaults to the domain midpoint
    #[arg(long, value_name = "A,B", value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Evaluation time; overrides the geometry file
    #[arg(long)]
    tau: Option<f64>,
    /// Output file; standard output when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Geometry file (JSON)
    #[arg(long, value_name = "PATH")]
    geom: PathBuf,
    /// Suite to run
    #[arg(long, value_parser = ["surface", "tube", "evolution", "asymptotics", "eikonal", "curvature", "identities", "orthogonality"])]
    suite: String,
    /// Seed for points and random fields
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Report file; standard output when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Collar points per check
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Random fields per kind
    #[arg(long, default_value_t = 3)]
    fields: usize,
    /// Tolerance of the operator comparisons
    #[arg(long)]
    tol: Option<f64>,
    /// Curvature shift of the negative control
    #[arg(long, default_value_t = 1e-3)]
    fault: f64,
    /// Relative finite-difference step for first derivatives
    #[arg(long, default_value_t = FdSteps::default().first)]
    h1: f64,
    /// Relative finite-difference step for second derivatives
    #[arg(long, default_value_t = FdSteps::default().second)]
    h2: f64,
}

/// Failure kinds mapped to exit codes.
enum Outcome {
    Ok,
    Invalid,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Invalid) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("SDCALC_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow!("SDCALC_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.cmd {
        Cmd::Project(a) => project(a),
        Cmd::Frames(a) => frames(a),
        Cmd::Op(a) => op(a),
        Cmd::Evolve(a) => evolve(a),
        Cmd::TubeFrames(a) => tube_frames(a),
        Cmd::TubeOp(a) => tube_op(a),
        Cmd::Expand(a) => expand(a),
        Cmd::Verify(a) => return verify(a),
    }?;
    Ok(Outcome::Ok)
}

fn load_geom(path: &Path) -> Result<GeometrySpec> {
    Ok(GeometrySpec::load(path)?)
}

fn load_surface(path: &Path, tau: Option<f64>) -> Result<SurfaceSpec> {
    let mut s = load_geom(path)?.surface().with_context(|| path.display().to_string())?.clone();
    if let Some(t) = tau {
        s.tau = t;
    }
    Ok(s)
}

fn load_curve(path: &Path, tau: Option<f64>, phi0: Option<f64>) -> Result<CurveSpec> {
    let mut c = load_geom(path)?.curve().with_context(|| path.display().to_string())?.clone();
    if let Some(t) = tau {
        c.tau = t;
    }
    if let Some(p) = phi0 {
        c.phi0 = p;
    }
    Ok(c)
}

fn load_field(path: &Path) -> Result<FieldSpec> {
    Ok(FieldSpec::load(path)?)
}

fn write_table(t: &Table, out: &Output) -> Result<()> {
    emit(&t.render(out.format)?, out.out.as_deref())
}

fn vec_cells(v: &Vec3) -> Vec<Cell> {
    v.to_array().iter().map(|c| Cell::Num(*c)).collect()
}

fn nan_cells(n: usize) -> Vec<Cell> {
    vec![Cell::Num(f64::NAN); n]
}

/// Evaluate rows in parallel; a failing row is filled with NaN and its
/// message goes to the `status` column.
fn rows<T: Sync>(items: &[T], width: usize, f: impl Fn(&T) -> sdcalc_core::Result<Vec<Cell>> + Sync) -> Vec<Vec<Cell>> {
    items
        .par_iter()
        .map(|it| {
            let (mut cells, status) = match f(it) {
                Ok(c) => (c, "ok".to_string()),
                Err(e) => (nan_cells(width), e.to_string()),
            };
            cells.push(Cell::Text(status));
            cells
        })
        .collect()
}

fn with_status(headers: &[&str]) -> Table {
    let mut h = headers.to_vec();
    h.push("status");
    Table::new(&h)
}

fn value_headers(dim: usize) -> Vec<&'static str> {
    match dim {
        1 => vec!["value"],
        3 => vec!["vx", "vy", "vz"],
        _ => vec!["m11", "m12", "m13", "m21", "m22", "m23", "m31", "m32", "m33"],
    }
}

fn value_cells(v: &OpValue) -> Vec<Cell> {
    v.components().into_iter().map(Cell::Num).collect()
}

// ------------------------------------------------------------------ surface

fn project(a: ProjectArgs) -> Result<()> {
    let spec = load_surface(&a.geom, a.tau)?;
    let Points::Cartesian(pts) = read_points(&a.points, &[])? else { unreachable!() };
    let proj = Projector::new(&spec.chart).at_time(spec.tau);
    let head = ["x", "y", "z", "s1", "s2", "sigma", "footx", "footy", "footz", "nx", "ny", "nz"];
    let mut t = with_status(&head);
    t.rows = rows(&pts, 9, |p| {
        let c = proj.project(&Vec3::new(p[0], p[1], p[2]))?;
        let mut r: Vec<Cell> = vec![c.s[0].into(), c.s[1].into(), c.sigma.into()];
        r.extend(vec_cells(&c.foot));
        r.extend(vec_cells(&c.normal));
        Ok(r)
    })
    .into_iter()
    .zip(&pts)
    .map(|(r, p)| p.iter().map(|v| Cell::Num(*v)).chain(r).collect())
    .collect();
    write_table(&t, &a.output)
}

/// Surface sample as `(s, σ)`, projecting ambient points.
fn surface_coords(spec: &SurfaceSpec, pts: &Points) -> Vec<sdcalc_core::Result<([f64; 2], f64)>> {
    let proj = Projector::new(&spec.chart).at_time(spec.tau);
    match pts {
        Points::Cartesian(p) => p
            .par_iter()
            .map(|x| proj.project(&Vec3::new(x[0], x[1], x[2])).map(|c| (c.s, c.sigma)))
            .collect(),
        Points::Curvilinear(p) => p.iter().map(|r| Ok(([r[0], r[1]], r.get(2).copied().unwrap_or(0.0)))).collect(),
    }
}

fn parse_grid(g: &str) -> Result<[usize; 2]> {
    let n: Vec<usize> = g
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("--grid: expected N1,N2, got `{g}`"))?;
    match n[..] {
        [a, b] if a >= 2 && b >= 2 => Ok([a, b]),
        _ => bail!("--grid: need two counts, each at least 2, got `{g}`"),
    }
}

fn axis(d: [f64; 2], periodic: bool, n: usize) -> Vec<f64> {
    let steps = if periodic { n } else { n - 1 };
    (0..n).map(|i| d[0] + (d[1] - d[0]) * i as f64 / steps as f64).collect()
}

fn grid_points(chart: &SurfaceChart, n: [usize; 2]) -> Vec<Vec<f64>> {
    let a = axis(chart.domain[0], chart.periodic[0], n[0]);
    let b = axis(chart.domain[1], chart.periodic[1], n[1]);
    a.iter().flat_map(|u| b.iter().map(move |v| vec![*u, *v])).collect()
}

fn frames(a: FramesArgs) -> Result<()> {
    let spec = load_surface(&a.geom, a.tau)?;
    let pts = match (&a.points, &a.grid) {
        (Some(p), _) => read_points(p, &["s1", "s2"])?,
        (None, Some(g)) => Points::Curvilinear(grid_points(&spec.chart, parse_grid(g)?)),
        (None, None) => bail!("give --points or --grid"),
    };
    let coords = surface_coords(&spec, &pts);
    let head = [
        "s1", "s2", "px", "py", "pz", "nx", "ny", "nz", "t1x", "t1y", "t1z", "t2x", "t2y", "t2z", "kappa1", "kappa2", "mean",
        "gauss", "omega1", "omega2", "umbilic",
    ];
    let mut t = with_status(&head);
    // Parameters stay visible on rows whose frame fails.
    t.rows = rows(&coords, head.len() - 2, |c| {
        let (s, _) = c.clone()?;
        let g = SurfaceGeometry::new(&spec.chart, s, spec.tau, false, SURFACE_DEGREE, None)?;
        let (d, k) = (g.darboux(), g.curvature());
        let mut r: Vec<Cell> = Vec::new();
        for v in [&d.p, &d.n, &d.t1_hat, &d.t2_hat] {
            r.extend(vec_cells(v));
        }
        r.extend([k.kappa1, k.kappa2, k.mean, k.gauss, k.omega1, k.omega2].map(Cell::Num));
        r.push(Cell::Num(if k.umbilic { 1.0 } else { 0.0 }));
        Ok(r)
    })
    .into_iter()
    .zip(&coords)
    .map(|(r, c)| {
        let s = c.as_ref().map_or([f64::NAN; 2], |c| c.0);
        [Cell::Num(s[0]), Cell::Num(s[1])].into_iter().chain(r).collect()
    })
    .collect();
    write_table(&t, &a.output)
}

fn op(a: OpArgs) -> Result<()> {
    let spec = load_surface(&a.geom, a.tau)?;
    let op = SurfaceOp::from_name(&a.op).ok_or_else(|| anyhow!("unknown operator `{}`", a.op))?;
    let field = load_field(&a.field)?.operand(op.takes_scalar())?;
    let pts = read_points(&a.points, &["s1", "s2", "sigma"])?;
    let coords = surface_coords(&spec, &pts);
    let dim = match op {
        SurfaceOp::Divergence | SurfaceOp::Laplacian => 1,
        SurfaceOp::Hessian | SurfaceOp::VectorGradient => 9,
        _ => 3,
    };
    let mut head = vec!["s1", "s2", "sigma"];
    head.extend(value_headers(dim));
    let mut t = with_status(&head);
    t.rows = rows(&coords, head.len(), |c| {
        let (s, sigma) = c.clone()?;
        let geo = SurfaceGeometry::new(&spec.chart, s, spec.tau, false, SURFACE_DEGREE, None)?;
        let mut collar = Collar::new(geo, sigma)?;
        if a.fault != 0.0 {
            collar = collar.with_fault(a.fault)?;
        }
        let mut r: Vec<Cell> = vec![s[0].into(), s[1].into(), sigma.into()];
        r.extend(value_cells(&collar.apply(op, &field)?));
        Ok(r)
    });
    write_table(&t, &a.output)
}

fn evolve(a: EvolveArgs) -> Result<()> {
    let spec = load_surface(&a.geom, a.tau)?;
    if spec.motion.is_none() && !spec.chart.is_time_dependent() {
        bail!("{}: evolve needs a chart that uses `tau` or a `motion` block", a.geom.display());
    }
    let surf = spec.evolving()?;
    let field = match (a.op.as_str(), &a.field) {
        ("dtcoords", _) => None,
        (_, Some(p)) => Some(load_field(p)?.operand(a.op == "dtscalar")?),
        (_, None) => bail!("--op {} needs --field", a.op),
    };
    let pts = read_points(&a.points, &["s1", "s2", "sigma"])?;
    let coords: Vec<_> = match &pts {
        Points::Cartesian(p) => p
            .par_iter()
            .map(|x| surf.project(&Vec3::new(x[0], x[1], x[2]), spec.tau).map(|c| (c.s, c.sigma)))
            .collect(),
        Points::Curvilinear(p) => p.iter().map(|r| Ok(([r[0], r[1]], r[2]))).collect(),
    };
    let mut head = vec!["s1", "s2", "sigma"];
    head.extend(match a.op.as_str() {
        "dtscalar" => vec!["value"],
        "dtvector" => vec!["vx", "vy", "vz"],
        _ => vec!["dt_sigma", "dt_foot_x", "dt_foot_y", "dt_foot_z"],
    });
    let mut t = with_status(&head);
    t.rows = rows(&coords, head.len(), |c| {
        let (s, sigma) = c.clone()?;
        let m = surf.collar(s, sigma, spec.tau)?;
        let mut r: Vec<Cell> = vec![s[0].into(), s[1].into(), sigma.into()];
        match &field {
            Some(sdcalc_core::surface_calculus::Operand::Scalar(f)) => r.push(m.dt_scalar(f)?.into()),
            Some(sdcalc_core::surface_calculus::Operand::Vector(u)) => r.extend(vec_cells(&m.dt_vector(u)?)),
            None => {
                let (ds, w) = m.dt_coordinates();
                r.push(ds.into());
                r.extend(vec_cells(&w));
            }
        }
        Ok(r)
    });
    write_table(&t, &a.output)
}

// ------------------------------------------------------------------- curves

fn tube_frames(a: TubeFramesArgs) -> Result<()> {
    if a.samples < 2 {
        bail!("--samples must be at least 2");
    }
    let spec = load_curve(&a.geom, a.tau, a.phi0)?;
    let tube = spec.tube()?;
    let d = tube.curve.domain;
    let ss = axis(d, tube.curve.periodic, a.samples);
    let head = [
        "s", "phi", "kappa", "omega", "px", "py", "pz", "tx", "ty", "tz", "nx", "ny", "nz", "bx", "by", "bz", "e1x", "e1y",
        "e1z", "e2x", "e2y", "e2z",
    ];
    let mut t = with_status(&head);
    t.rows = rows(&ss, head.len(), |&s| {
        let fr = frenet_at(&tube.curve, s, tube.tau())?;
        let phi = tube.bishop.phi(s)?;
        let (sn, cs) = phi.sin_cos();
        // radial and angular directions at θ = 0
        let e1 = fr.n.scale(&cs) + fr.b.scale(&sn);
        let e2 = fr.n.scale(&-sn) + fr.b.scale(&cs);
        let mut r: Vec<Cell> = vec![s.into(), phi.into(), fr.kappa.into(), fr.omega.into()];
        for v in [&fr.p, &fr.t, &fr.n, &fr.b, &e1, &e2] {
            r.extend(vec_cells(v));
        }
        Ok(r)
    });
    write_table(&t, &a.output)
}

fn tube_op(a: TubeOpArgs) -> Result<()> {
    let spec = load_curve(&a.geom, a.tau, a.phi0)?;
    let tube: Tube = spec.tube()?;
    let op = TubeOp::from_name(&a.op).ok_or_else(|| anyhow!("unknown operator `{}`", a.op))?;
    let field = match (op, &a.field) {
        (TubeOp::DTorsion, _) => None,
        (_, Some(p)) => Some(load_field(p)?.operand(op.takes_scalar())?),
        (_, None) => bail!("--op {} needs --field", a.op),
    };
    let pts = read_points(&a.points, &["s", "theta", "sigma"])?;
    let coords: Vec<sdcalc_core::Result<[f64; 3]>> = match &pts {
        Points::Cartesian(p) => p
            .par_iter()
            .map(|x| tube.from_cartesian(&Vec3::new(x[0], x[1], x[2])).map(|c| [c.s, c.theta, c.sigma]))
            .collect(),
        Points::Curvilinear(p) => p.iter().map(|r| Ok([r[0], r[1], r[2]])).collect(),
    };
    let dim = match op {
        TubeOp::Divergence | TubeOp::Laplacian | TubeOp::DtScalar | TubeOp::DTorsion => 1,
        TubeOp::VectorGradient => 9,
        _ => 3,
    };
    let mut head = vec!["s", "theta", "sigma"];
    head.extend(value_headers(dim));
    let mut t = with_status(&head);
    t.rows = rows(&coords, head.len(), |c| {
        let [s, th, sg] = c.clone()?;
        let mut r: Vec<Cell> = vec![s.into(), th.into(), sg.into()];
        r.extend(value_cells(&op.apply(&tube, field.as_ref(), s, th, sg)?));
        Ok(r)
    });
    write_table(&t, &a.output)
}

// -------------------------------------------------------------- asymptotics

fn json_f64(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

fn expand(a: ExpandArgs) -> Result<()> {
    if a.order > MAX_ORDER {
        bail!("--order must be at most {MAX_ORDER}, got {}", a.order);
    }
    let geom = load_geom(&a.geom)?;
    let op = LayerOp::from_name(&a.op).ok_or_else(|| anyhow!("unknown operator `{}`", a.op))?;
    let fields = match &a.field {
        Some(p) => {
            let f = load_field(p)?;
            LayerFields { scalar: f.scalar, vector: f.vector }
        }
        None => LayerFields::both(ScalarField::parse("xi")?, VectorField::ambient(["0", "0", "xi"])?),
    };
    if a.at.as_ref().is_some_and(|v| v.len() != 2) {
        bail!("--at: expected two comma-separated numbers");
    }
    let eps = a.eps.clone().unwrap_or_else(default_eps);
    if eps.iter().any(|e| !(*e > 0.0)) {
        bail!("--eps values must be positive");
    }
    let (series, report, coords, tau) = match &geom.geometry {
        sdcalc_core::spec::Geometry::Surface(s) => {
            let tau = a.tau.unwrap_or(s.tau);
            let d = s.chart.domain;
            let at = a.at.clone().unwrap_or_else(|| vec![0.5 * (d[0][0] + d[0][1]), 0.5 * (d[1][0] + d[1][1])]);
            let pt = LayerPoint::new([at[0], at[1]], a.xi).at_time(tau);
            let (se, r) = slope_test(LayerGeometry::Surface(&s.chart), op, &fields, &pt, a.order, &eps, sdcalc_core::asymptotics::ErrorScale::Leading)?;
            (se, r, at, tau)
        }
        sdcalc_core::spec::Geometry::Curve(c) => {
            let mut c = c.clone();
            if let Some(t) = a.tau {
                c.tau = t;
            }
            let tube = c.tube()?;
            let d = tube.curve.domain;
            let at = a.at.clone().unwrap_or_else(|| vec![0.5 * (d[0] + d[1]), 0.0]);
            let pt = LayerPoint::new([at[0], at[1]], a.xi).at_time(c.tau);
            let (se, r) = slope_test(LayerGeometry::Tube(&tube), op, &fields, &pt, a.order, &eps, sdcalc_core::asymptotics::ErrorScale::Leading)?;
            (se, r, at, c.tau)
        }
    };
    let doc = json!({
        "geometry": geom.name,
        "op": op.name(),
        "point": { "coords": coords, "xi": a.xi, "tau": tau },
        "min_order": series.min_order,
        "order": series.order,
        "coeffs": series.coeffs,
        "slope_test": {
            "eps": report.eps,
            "errors": report.errors,
            "used": report.used,
            "slope": report.slope.map_or(serde_json::Value::Null, json_f64),
            "expected": report.expected,
            "exact": report.exact,
        },
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    emit(s.as_bytes(), a.out.as_deref())
}

// ------------------------------------------------------------------- verify

fn verify(a: VerifyArgs) -> Result<Outcome> {
    let geom = load_geom(&a.geom)?;
    let kind = SuiteKind::from_name(&a.suite).ok_or_else(|| anyhow!("unknown suite `{}`", a.suite))?;
    if a.points == 0 || a.fields == 0 {
        bail!("--points and --fields must be positive");
    }
    let cfg = SuiteConfig {
        seed: a.seed,
        points: a.points,
        fields: a.fields,
        tol: a.tol,
        fault: a.fault,
        steps: FdSteps { first: a.h1, second: a.h2 },
        ..SuiteConfig::default()
    };
    let report = run_suite(kind, &geom, &cfg)?;
    emit(report.to_json().as_bytes(), a.out.as_deref())?;
    let failing = report.failing();
    if failing.is_empty() {
        eprintln!("{} on {}: pass ({} checks)", report.suite, report.geometry, report.per_op.len());
        Ok(Outcome::Ok)
    } else {
        eprintln!("{} on {}: FAIL ({})", report.suite, report.geometry, failing.join(", "));
        Ok(Outcome::Invalid)
    }
}
