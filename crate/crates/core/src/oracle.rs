//! Ambient finite-difference oracle.
//!
//! Curvilinear fields are pulled back to functions of the Cartesian
//! position through closest-point projection, then differentiated with
//! central differences and one level of Richardson extrapolation. Nothing
//! here calls the curvilinear operator code; only chart evaluation,
//! projection and the frame vectors are shared.

use crate::chart::SurfaceChart;
use crate::closest_point::Projector;
use crate::curve_frames::Tube;
use crate::error::{Error, Result};
use crate::expr::{Bindings, Var};
use crate::field::FieldArgs;
use crate::jet::{Jet, Scalar};
use crate::linalg::{Tensor2, Vec3, V3};
use crate::surface_calculus::{Collar, Operand, SurfaceOp};
use crate::surface_frames::{SurfaceGeometry, SURFACE_DEGREE};
use crate::tube_calculus::{TubeGeometry, TubeOp};
use rayon::prelude::*;
use serde::Serialize;

/// Default first-order step, relative to `max(1, |x|)`.
pub const H_FIRST: f64 = 1e-4;
/// Default second-order step, relative to `max(1, |x|)`.
pub const H_SECOND: f64 = 1e-3;
/// Times a step is halved when a stencil point leaves the collar.
pub const MAX_SHRINK: usize = 4;
/// Floor of the relative-error denominator.
pub const REL_FLOOR: f64 = 1e-8;

/// Where a pulled-back field gets its coordinates from.
#[derive(Clone, Copy, Debug)]
pub enum Pullback<'a> {
    /// Fields already written in `x, y, z`; frame components are Cartesian.
    Ambient { tau: f64 },
    Surface { chart: &'a SurfaceChart, tau: f64 },
    Tube(&'a Tube),
}

/// Previous projection result, used to seed nearby projections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    Free,
    Surface([f64; 2]),
    Tube(f64),
}

/// A curvilinear field seen as a function of the ambient position.
#[derive(Clone, Debug)]
pub struct AmbientField<'a> {
    pub source: Pullback<'a>,
    pub field: Operand,
}

fn cst3(v: &Vec3) -> V3<Jet> {
    V3::<Jet>::from_f64(v)
}

fn xyz(b: Bindings<Jet>, x: &Vec3) -> Bindings<Jet> {
    b.with(Var::X, Jet::cst(x.x)).with(Var::Y, Jet::cst(x.y)).with(Var::Z, Jet::cst(x.z))
}

impl<'a> AmbientField<'a> {
    pub fn new(source: Pullback<'a>, field: Operand) -> Self {
        AmbientField { source, field }
    }

    pub fn dim(&self) -> usize {
        match self.field {
            Operand::Scalar(_) => 1,
            Operand::Vector(_) => 3,
        }
    }

    fn uses_frame(&self) -> bool {
        match &self.field {
            Operand::Scalar(_) => false,
            Operand::Vector(u) => u.uses_frame(),
        }
    }

    /// Coordinates and field arguments of `x`.
    fn args(&self, x: &Vec3, anchor: Anchor) -> Result<(FieldArgs, Anchor)> {
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let ey = Vec3::new(0.0, 1.0, 0.0);
        let ez = Vec3::new(0.0, 0.0, 1.0);
        match self.source {
            Pullback::Ambient { tau } => {
                let vars = xyz(Bindings::new().with(Var::Tau, Jet::cst(tau)), x);
                Ok((FieldArgs { vars, frame: [cst3(&ex), cst3(&ey), cst3(&ez)] }, Anchor::Free))
            }
            Pullback::Surface { chart, tau } => {
                let proj = Projector::new(chart).at_time(tau);
                let c = match anchor {
                    Anchor::Surface(s) => proj.project_near(x, s)?,
                    _ => proj.project(x)?,
                };
                let frame = if self.uses_frame() {
                    let g = SurfaceGeometry::new(chart, c.s, tau, false, SURFACE_DEGREE, None)?;
                    g.frame().map(|v| cst3(&v.value()))
                } else {
                    [cst3(&c.normal), cst3(&ex), cst3(&ey)]
                };
                let vars = Bindings::new()
                    .with(Var::S1, Jet::cst(c.s[0]))
                    .with(Var::S2, Jet::cst(c.s[1]))
                    .with(Var::Sigma, Jet::cst(c.sigma))
                    .with(Var::Tau, Jet::cst(tau));
                Ok((FieldArgs { vars: xyz(vars, x), frame }, Anchor::Surface(c.s)))
            }
            Pullback::Tube(tube) => {
                let c = match anchor {
                    Anchor::Tube(s) => tube.from_cartesian_near(x, s)?,
                    _ => tube.from_cartesian(x)?,
                };
                let frame = if self.uses_frame() {
                    let f = tube.frame(c.s, c.theta, c.sigma)?;
                    [cst3(&f.t_s), cst3(&f.t_sigma), cst3(&f.t_theta)]
                } else {
                    [cst3(&ex), cst3(&ey), cst3(&ez)]
                };
                let vars = Bindings::new()
                    .with(Var::S, Jet::cst(c.s))
                    .with(Var::Theta, Jet::cst(c.theta))
                    .with(Var::Sigma, Jet::cst(c.sigma))
                    .with(Var::Tau, Jet::cst(tube.tau()));
                Ok((FieldArgs { vars: xyz(vars, x), frame }, Anchor::Tube(c.s)))
            }
        }
    }

    fn eval_args(&self, a: &FieldArgs) -> Result<Vec<f64>> {
        match &self.field {
            Operand::Scalar(f) => Ok(vec![f.eval(a)?.value()]),
            Operand::Vector(u) => Ok(u.eval(a)?.value().to_array().to_vec()),
        }
    }

    /// Field value at `x` (scalar: one entry; vector: Cartesian components).
    pub fn eval(&self, x: &Vec3) -> Result<Vec<f64>> {
        self.eval_near(x, Anchor::Free).map(|(v, _)| v)
    }

    /// Value at `x`, seeding the projection from `anchor`.
    pub fn eval_near(&self, x: &Vec3, anchor: Anchor) -> Result<(Vec<f64>, Anchor)> {
        let (a, anchor) = self.args(x, anchor)?;
        Ok((self.eval_args(&a)?, anchor))
    }
}

/// Pull a curvilinear field back to ambient space.
pub fn pullback<'a>(source: Pullback<'a>, field: Operand) -> AmbientField<'a> {
    AmbientField::new(source, field)
}

/// Finite-difference step sizes relative to `max(1, |x|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { first: H_FIRST, second: H_SECOND }
    }
}

/// Derivatives of every field component at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub value: Vec<f64>,
    /// `jac[c][d] = ∂_d u_c`.
    pub jac: Vec<[f64; 3]>,
    /// `hess[c][d][e] = ∂_d∂_e u_c`, when requested.
    pub hess: Option<Vec<[[f64; 3]; 3]>>,
}

const AXES: [Vec3; 3] = [
    V3 { x: 1.0, y: 0.0, z: 0.0 },
    V3 { x: 0.0, y: 1.0, z: 0.0 },
    V3 { x: 0.0, y: 0.0, z: 1.0 },
];

/// Run `f(h)`, halving `h` up to [`MAX_SHRINK`] times while it fails.
fn with_shrink<T>(h: f64, f: impl Fn(f64) -> Result<T>) -> Result<T> {
    let mut h = h;
    let mut last = None;
    for _ in 0..=MAX_SHRINK {
        match f(h) {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
        h *= 0.5;
    }
    Err(last.unwrap_or_else(|| Error::Invalid("stencil".into())))
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

fn jacobian_at(field: &AmbientField, x: &Vec3, anchor: Anchor, h: f64) -> Result<Vec<[f64; 3]>> {
    let dim = field.dim();
    let level = |h: f64| -> Result<Vec<[f64; 3]>> {
        let mut j = vec![[0.0; 3]; dim];
        for (d, e) in AXES.iter().enumerate() {
            let (p, _) = field.eval_near(&(*x + e.scale(&h)), anchor)?;
            let (m, _) = field.eval_near(&(*x - e.scale(&h)), anchor)?;
            for c in 0..dim {
                j[c][d] = (p[c] - m[c]) / (2.0 * h);
            }
        }
        Ok(j)
    };
    let (a, b) = (level(h)?, level(h / 2.0)?);
    Ok(a.iter()
        .zip(&b)
        .map(|(ra, rb)| [0, 1, 2].map(|d| richardson(ra[d], rb[d])))
        .collect())
}

fn hessian_at(field: &AmbientField, x: &Vec3, anchor: Anchor, f0: &[f64], h: f64) -> Result<Vec<[[f64; 3]; 3]>> {
    let dim = field.dim();
    let ev = |p: Vec3| field.eval_near(&p, anchor).map(|(v, _)| v);
    let level = |h: f64| -> Result<Vec<[[f64; 3]; 3]>> {
        let mut out = vec![[[0.0; 3]; 3]; dim];
        for i in 0..3 {
            let ei = AXES[i].scale(&h);
            let (p, m) = (ev(*x + ei)?, ev(*x - ei)?);
            for c in 0..dim {
                out[c][i][i] = (p[c] - 2.0 * f0[c] + m[c]) / (h * h);
            }
            for j in (i + 1)..3 {
                let ej = AXES[j].scale(&h);
                let pp = ev(*x + ei + ej)?;
                let pm = ev(*x + ei - ej)?;
                let mp = ev(*x - ei + ej)?;
                let mm = ev(*x - ei - ej)?;
                for c in 0..dim {
                    let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h);
                    out[c][i][j] = v;
                    out[c][j][i] = v;
                }
            }
        }
        Ok(out)
    };
    let (a, b) = (level(h)?, level(h / 2.0)?);
    Ok(a.iter()
        .zip(&b)
        .map(|(ma, mb)| {
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    r[i][j] = richardson(ma[i][j], mb[i][j]);
                }
            }
            r
        })
        .collect())
}

/// First (and optionally second) derivatives of `field` at `x`.
pub fn derivatives(field: &AmbientField, x: &Vec3, second: bool, steps: FdSteps) -> Result<Derivatives> {
    let (value, anchor) = field.eval_near(x, Anchor::Free)?;
    let scale = x.norm().max(1.0);
    let jac = with_shrink(steps.first * scale, |h| jacobian_at(field, x, anchor, h))?;
    let hess = if second {
        Some(with_shrink(steps.second * scale, |h| hessian_at(field, x, anchor, &value, h))?)
    } else {
        None
    };
    Ok(Derivatives { value, jac, hess })
}

/// Operators the oracle can evaluate from [`Derivatives`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AmbientOp {
    Grad,
    Div,
    Curl,
    ScalarLap,
    VectorLap,
    /// `−∇×∇×u = ∇²u − ∇(∇·u)`.
    CurlCurl,
    Hessian,
    /// `(∇u)ᵢⱼ = ∂ᵢuⱼ`.
    VectorGradient,
    /// `u·∇u`.
    Convective,
}

impl AmbientOp {
    pub fn second_order(self) -> bool {
        matches!(self, AmbientOp::ScalarLap | AmbientOp::VectorLap | AmbientOp::CurlCurl | AmbientOp::Hessian)
    }

    pub fn takes_scalar(self) -> bool {
        matches!(self, AmbientOp::Grad | AmbientOp::ScalarLap | AmbientOp::Hessian)
    }

    pub fn from_surface(op: SurfaceOp) -> Self {
        match op {
            SurfaceOp::Gradient => AmbientOp::Grad,
            SurfaceOp::Divergence => AmbientOp::Div,
            SurfaceOp::Laplacian => AmbientOp::ScalarLap,
            SurfaceOp::Curl => AmbientOp::Curl,
            SurfaceOp::VectorLaplacian => AmbientOp::VectorLap,
            SurfaceOp::CurlCurl => AmbientOp::CurlCurl,
            SurfaceOp::Hessian => AmbientOp::Hessian,
            SurfaceOp::VectorGradient => AmbientOp::VectorGradient,
            SurfaceOp::Convective => AmbientOp::Convective,
        }
    }

    /// Spatial tube operators only; time derivatives have no ambient stencil.
    pub fn from_tube(op: TubeOp) -> Option<Self> {
        Some(match op {
            TubeOp::Gradient => AmbientOp::Grad,
            TubeOp::VectorGradient => AmbientOp::VectorGradient,
            TubeOp::Divergence => AmbientOp::Div,
            TubeOp::Laplacian => AmbientOp::ScalarLap,
            TubeOp::Curl => AmbientOp::Curl,
            TubeOp::VectorLaplacian => AmbientOp::VectorLap,
            _ => return None,
        })
    }

    /// Value from the derivative data, flattened like [`crate::surface_calculus::OpValue`].
    pub fn apply(self, d: &Derivatives) -> Result<Vec<f64>> {
        let need_hess = || {
            d.hess
                .as_ref()
                .ok_or_else(|| Error::Invalid("second derivatives were not sampled".into()))
        };
        let j = &d.jac;
        let trace = |m: &[[f64; 3]; 3]| m[0][0] + m[1][1] + m[2][2];
        Ok(match self {
            AmbientOp::Grad => j[0].to_vec(),
            AmbientOp::Div => vec![j[0][0] + j[1][1] + j[2][2]],
            AmbientOp::Curl => vec![j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]],
            AmbientOp::ScalarLap => vec![trace(&need_hess()?[0])],
            AmbientOp::VectorLap => need_hess()?.iter().map(trace).collect(),
            AmbientOp::CurlCurl => {
                let h = need_hess()?;
                (0..3)
                    .map(|k| trace(&h[k]) - (0..3).map(|i| h[i][k][i]).sum::<f64>())
                    .collect()
            }
            AmbientOp::Hessian => need_hess()?[0].iter().flatten().copied().collect(),
            AmbientOp::VectorGradient => (0..3).flat_map(|i| (0..3).map(move |c| j[c][i])).collect(),
            AmbientOp::Convective => (0..3)
                .map(|c| (0..3).map(|i| d.value[i] * j[c][i]).sum())
                .collect(),
        })
    }
}

fn single(field: &AmbientField, x: &Vec3, op: AmbientOp, h: Option<f64>) -> Result<Vec<f64>> {
    let scale = x.norm().max(1.0);
    let steps = FdSteps {
        first: h.map_or(H_FIRST, |h| h / scale),
        second: h.map_or(H_SECOND, |h| h / scale),
    };
    op.apply(&derivatives(field, x, op.second_order(), steps)?)
}

fn vec3(v: Vec<f64>) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

/// `∇f`; `h` overrides the default absolute step.
pub fn fd_grad(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<Vec3> {
    single(field, x, AmbientOp::Grad, h).map(vec3)
}

pub fn fd_div(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<f64> {
    single(field, x, AmbientOp::Div, h).map(|v| v[0])
}

pub fn fd_curl(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<Vec3> {
    single(field, x, AmbientOp::Curl, h).map(vec3)
}

pub fn fd_scalar_lap(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<f64> {
    single(field, x, AmbientOp::ScalarLap, h).map(|v| v[0])
}

pub fn fd_vector_lap(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<Vec3> {
    single(field, x, AmbientOp::VectorLap, h).map(vec3)
}

pub fn fd_hessian(field: &AmbientField, x: &Vec3, h: Option<f64>) -> Result<Tensor2> {
    let v = single(field, x, AmbientOp::Hessian, h)?;
    Ok(Tensor2 { m: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]] })
}

/// A point at which evaluation failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub point: [f64; 3],
    pub message: String,
}

/// Worst-case agreement between one operator and the oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub op: String,
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst_point: Option<[f64; 3]>,
    pub n_points: usize,
    pub failures: Vec<PointFailure>,
}

impl CompareReport {
    fn new(op: &str, n_points: usize) -> Self {
        CompareReport {
            op: op.to_string(),
            max_abs: 0.0,
            max_rel: 0.0,
            worst_point: None,
            n_points,
            failures: Vec::new(),
        }
    }

    /// Fold another report for the same operator into this one.
    pub fn merge(&mut self, o: &CompareReport) {
        if o.max_rel > self.max_rel || self.worst_point.is_none() {
            self.max_rel = o.max_rel.max(self.max_rel);
            if o.worst_point.is_some() {
                self.worst_point = o.worst_point;
            }
        }
        self.max_abs = self.max_abs.max(o.max_abs);
        let base = self.n_points;
        self.failures.extend(o.failures.iter().map(|f| PointFailure { index: f.index + base, ..f.clone() }));
        self.n_points += o.n_points;
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.failures.is_empty() && self.max_rel < tol && self.max_rel.is_finite()
    }
}

/// `(max-abs difference, max-abs difference / max(max-abs oracle, floor))`.
pub fn errors(value: &[f64], oracle: &[f64]) -> (f64, f64) {
    let abs = value.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mag = oracle.iter().map(|v| v.abs()).fold(0.0, f64::max).max(REL_FLOOR);
    (abs, abs / mag)
}

/// Options shared by the comparison drivers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompareOptions {
    /// Curvature perturbation injected into the curvilinear path.
    pub fault: f64,
    pub steps: FdSteps,
}

type PointResult = Vec<std::result::Result<(f64, f64), String>>;

fn collect(names: &[&str], points: &[Vec3], results: Vec<PointResult>) -> Vec<CompareReport> {
    let mut reports: Vec<CompareReport> = names.iter().map(|n| CompareReport::new(n, points.len())).collect();
    for (i, per_op) in results.into_iter().enumerate() {
        for (r, res) in reports.iter_mut().zip(per_op) {
            match res {
                Ok((abs, rel)) => {
                    r.max_abs = r.max_abs.max(abs);
                    if rel > r.max_rel || r.worst_point.is_none() || rel.is_nan() {
                        r.max_rel = if rel.is_nan() { f64::INFINITY } else { rel.max(r.max_rel) };
                        r.worst_point = Some(points[i].to_array());
                    }
                }
                Err(message) => r.failures.push(PointFailure {
                    index: i,
                    point: points[i].to_array(),
                    message,
                }),
            }
        }
    }
    reports
}

fn check_kinds(field: &Operand, scalar_ops: impl Iterator<Item = (bool, String)>) -> Result<()> {
    let is_scalar = matches!(field, Operand::Scalar(_));
    for (takes, name) in scalar_ops {
        if takes != is_scalar {
            return Err(Error::Invalid(format!("operator {name} got the wrong field kind")));
        }
    }
    Ok(())
}

/// Compare surface operators with the oracle at ambient points.
pub fn compare_surface(
    chart: &SurfaceChart,
    tau: f64,
    ops: &[SurfaceOp],
    field: &Operand,
    points: &[Vec3],
    opts: CompareOptions,
) -> Result<Vec<CompareReport>> {
    Ok(compare_surface_faults(chart, tau, ops, field, points, &[opts.fault], opts.steps)?.remove(0))
}

/// Split per-point results, laid out fault-major, into one report set per fault.
fn collect_faults(names: &[&str], points: &[Vec3], n_faults: usize, results: Vec<PointResult>) -> Vec<Vec<CompareReport>> {
    let n = names.len();
    (0..n_faults)
        .map(|k| {
            let part = results.iter().map(|r| r[k * n..(k + 1) * n].to_vec()).collect();
            collect(names, points, part)
        })
        .collect()
}

/// [`compare_surface`] for several fault levels, sharing one oracle
/// evaluation per point. Reports are returned per fault, in order.
pub fn compare_surface_faults(
    chart: &SurfaceChart,
    tau: f64,
    ops: &[SurfaceOp],
    field: &Operand,
    points: &[Vec3],
    faults: &[f64],
    steps: FdSteps,
) -> Result<Vec<Vec<CompareReport>>> {
    check_kinds(field, ops.iter().map(|o| (o.takes_scalar(), o.name().to_string())))?;
    let amb = pullback(Pullback::Surface { chart, tau }, field.clone());
    let second = ops.iter().any(|o| AmbientOp::from_surface(*o).second_order());
    let width = ops.len() * faults.len();
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|x| {
            let run = || -> Result<(Collar, Derivatives)> {
                let c = Projector::new(chart).at_time(tau).project(x)?;
                let geo = SurfaceGeometry::new(chart, c.s, tau, false, SURFACE_DEGREE, None)?;
                Ok((Collar::new(geo, c.sigma)?, derivatives(&amb, x, second, steps)?))
            };
            let (collar, d) = match run() {
                Err(e) => return vec![Err(e.to_string()); width],
                Ok(v) => v,
            };
            let oracle: Vec<_> = ops.iter().map(|op| AmbientOp::from_surface(*op).apply(&d).map_err(|e| e.to_string())).collect();
            faults
                .iter()
                .flat_map(|&fault| {
                    let c = if fault != 0.0 { collar.clone().with_fault(fault).map_err(|e| e.to_string()) } else { Ok(collar.clone()) };
                    ops.iter().zip(&oracle).map(move |(op, o)| {
                        let c = c.as_ref().map_err(|e| e.clone())?;
                        let v = c.apply(*op, field).map_err(|e| e.to_string())?;
                        Ok(errors(&v.components(), o.as_ref().map_err(|e| e.clone())?))
                    })
                })
                .collect()
        })
        .collect();
    let names: Vec<&str> = ops.iter().map(|o| o.name()).collect();
    Ok(collect_faults(&names, points, faults.len(), results))
}

fn tube_value(g: &TubeGeometry, op: TubeOp, field: &Operand) -> Result<Vec<f64>> {
    let wrong = || Error::Invalid(format!("operator {} got the wrong field kind", op.name()));
    Ok(match (op, field) {
        (TubeOp::Gradient, Operand::Scalar(f)) => g.gradient(f)?.to_array().to_vec(),
        (TubeOp::Laplacian, Operand::Scalar(f)) => vec![g.laplacian(f)?],
        (TubeOp::VectorGradient, Operand::Vector(u)) => g.vector_gradient(u)?.m.iter().flatten().copied().collect(),
        (TubeOp::Divergence, Operand::Vector(u)) => vec![g.divergence(u)?],
        (TubeOp::Curl, Operand::Vector(u)) => g.curl(u)?.to_array().to_vec(),
        (TubeOp::VectorLaplacian, Operand::Vector(u)) => g.vector_laplacian(u)?.to_array().to_vec(),
        _ => return Err(wrong()),
    })
}

/// Compare spatial tube operators with the oracle at ambient points.
pub fn compare_tube(tube: &Tube, ops: &[TubeOp], field: &Operand, points: &[Vec3], opts: CompareOptions) -> Result<Vec<CompareReport>> {
    Ok(compare_tube_faults(tube, ops, field, points, &[opts.fault], opts.steps)?.remove(0))
}

/// [`compare_tube`] for several fault levels with a shared oracle.
pub fn compare_tube_faults(
    tube: &Tube,
    ops: &[TubeOp],
    field: &Operand,
    points: &[Vec3],
    faults: &[f64],
    steps: FdSteps,
) -> Result<Vec<Vec<CompareReport>>> {
    let amb_ops: Vec<AmbientOp> = ops
        .iter()
        .map(|o| AmbientOp::from_tube(*o).ok_or_else(|| Error::Invalid(format!("{} has no ambient oracle", o.name()))))
        .collect::<Result<_>>()?;
    check_kinds(field, ops.iter().map(|o| (o.takes_scalar(), o.name().to_string())))?;
    let amb = pullback(Pullback::Tube(tube), field.clone());
    let second = amb_ops.iter().any(|o| o.second_order());
    let width = ops.len() * faults.len();
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|x| {
            let run = || -> Result<(TubeGeometry, Derivatives)> {
                let c = tube.from_cartesian(x)?;
                Ok((TubeGeometry::new(tube, c.s, c.theta, c.sigma)?, derivatives(&amb, x, second, steps)?))
            };
            let (g, d) = match run() {
                Err(e) => return vec![Err(e.to_string()); width],
                Ok(v) => v,
            };
            let oracle: Vec<_> = amb_ops.iter().map(|o| o.apply(&d).map_err(|e| e.to_string())).collect();
            faults
                .iter()
                .flat_map(|&fault| {
                    let g = if fault != 0.0 { g.clone().with_fault(fault).map_err(|e| e.to_string()) } else { Ok(g.clone()) };
                    ops.iter().zip(&oracle).map(move |(op, o)| {
                        let g = g.as_ref().map_err(|e| e.clone())?;
                        let v = tube_value(g, *op, field).map_err(|e| e.to_string())?;
                        Ok(errors(&v, o.as_ref().map_err(|e| e.clone())?))
                    })
                })
                .collect()
        })
        .collect();
    let names: Vec<&str> = ops.iter().map(|o| o.name()).collect();
    Ok(collect_faults(&names, points, faults.len(), results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::CurveChart;
    use crate::closest_point::to_cartesian;
    use crate::field::{ScalarField, VectorField};

    fn amb_scalar(t: &str) -> AmbientField<'static> {
        pullback(Pullback::Ambient { tau: 0.0 }, Operand::Scalar(ScalarField::parse(t).unwrap()))
    }

    fn amb_vector(t: [&str; 3]) -> AmbientField<'static> {
        pullback(Pullback::Ambient { tau: 0.0 }, Operand::Vector(VectorField::ambient(t).unwrap()))
    }

    #[test]
    fn trivial_stencils() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let g = fd_grad(&amb_scalar("x*x + y*y + z*z"), &x, None).unwrap();
        assert!((g - Vec3::new(2.0, 0.0, 0.0)).max_abs() < 1e-8);
        let l = fd_scalar_lap(&amb_scalar("x*x + y*y + z*z"), &Vec3::new(0.3, -1.2, 2.0), None).unwrap();
        assert!((l - 6.0).abs() < 1e-6);
        let c = fd_curl(&amb_vector(["-y", "x", "0"]), &Vec3::new(0.2, 0.5, -0.1), None).unwrap();
        assert!((c - Vec3::new(0.0, 0.0, 2.0)).max_abs() < 1e-8);
    }

    #[test]
    fn cubic_polynomials_are_reproduced() {
        let x = Vec3::new(0.4, -0.7, 1.3);
        let f = amb_scalar("x*x*y + 2*y*z*z - z*z*z + x*y*z");
        let g = fd_grad(&f, &x, None).unwrap();
        let (a, b, c) = (x.x, x.y, x.z);
        let want = Vec3::new(2.0 * a * b + b * c, a * a + 2.0 * c * c + a * c, 4.0 * b * c - 3.0 * c * c + a * b);
        assert!((g - want).max_abs() < 1e-7);
        let h = fd_hessian(&f, &x, None).unwrap();
        assert!((h.m[0][1] - (2.0 * a + c)).abs() < 1e-7);
        assert!((h.m[2][2] - (4.0 * b - 6.0 * c)).abs() < 1e-7);
        let u = amb_vector(["x*y*z", "y*y*x", "z*z*z"]);
        let d = fd_div(&u, &x, None).unwrap();
        assert!((d - (b * c + 2.0 * a * b + 3.0 * c * c)).abs() < 1e-7);
        let vl = fd_vector_lap(&u, &x, None).unwrap();
        assert!((vl - Vec3::new(0.0, 2.0 * a, 6.0 * c)).max_abs() < 1e-6);
    }

    #[test]
    fn sphere_sigma_pulls_back_to_radius() {
        let chart = SurfaceChart::sphere(1.5);
        let f = pullback(Pullback::Surface { chart: &chart, tau: 0.0 }, Operand::Scalar(ScalarField::parse("sigma").unwrap()));
        for x in [Vec3::new(0.3, 1.2, -0.9), Vec3::new(2.0, 0.1, 0.2)] {
            let v = f.eval(&x).unwrap()[0];
            assert!((v - (x.norm() - 1.5)).abs() < 1e-10);
        }
        let plane = SurfaceChart::plane();
        let g = pullback(Pullback::Surface { chart: &plane, tau: 0.0 }, Operand::Scalar(ScalarField::parse("s1").unwrap()));
        assert!((g.eval(&Vec3::new(0.7, -2.0, 0.4)).unwrap()[0] - 0.7).abs() < 1e-10);
    }

    #[test]
    fn torus_normal_field() {
        let (rr, r) = (2.0, 0.7);
        let chart = SurfaceChart::torus(rr, r);
        let u = pullback(Pullback::Surface { chart: &chart, tau: 0.0 }, Operand::Vector(VectorField::frame(["1", "0", "0"]).unwrap()));
        let x = to_cartesian(&chart, [0.4, 1.1], 0.2).unwrap();
        let v = vec3(u.eval(&x).unwrap());
        let ring = Vec3::new(x.x, x.y, 0.0).scale(&(rr / x.x.hypot(x.y)));
        let want = (x - ring).normalized();
        assert!((v - want).max_abs() < 1e-10, "{v:?} {want:?}");
    }

    fn sample_points(chart: &SurfaceChart, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let t = k as f64 / n as f64;
                to_cartesian(chart, [0.3 + 5.0 * t, 0.2 + 3.7 * t * t], 0.45 * (2.0 * t - 1.0)).unwrap()
            })
            .collect()
    }

    #[test]
    fn torus_operators_agree_and_fault_is_seen() {
        let chart = SurfaceChart::torus(2.0, 0.7);
        let pts = sample_points(&chart, 12);
        let f = Operand::Scalar(ScalarField::parse("sin(s1)*sigma + x*y*z").unwrap());
        let u = Operand::Vector(VectorField::ambient(["y*sigma", "cos(s2) + z", "x*x"]).unwrap());
        let sops = [SurfaceOp::Gradient, SurfaceOp::Laplacian, SurfaceOp::Hessian];
        let vops = [
            SurfaceOp::Divergence,
            SurfaceOp::Curl,
            SurfaceOp::VectorLaplacian,
            SurfaceOp::CurlCurl,
            SurfaceOp::VectorGradient,
            SurfaceOp::Convective,
        ];
        for (ops, field) in [(&sops[..], &f), (&vops[..], &u)] {
            let ok = compare_surface(&chart, 0.0, ops, field, &pts, CompareOptions::default()).unwrap();
            for r in &ok {
                assert!(r.passes(1e-6), "{r:?}");
            }
            let bad = compare_surface(&chart, 0.0, ops, field, &pts, CompareOptions { fault: 1e-3, ..Default::default() }).unwrap();
            for r in &bad {
                assert!(r.max_rel > 1e-4, "{r:?}");
            }
        }
    }

    #[test]
    fn helix_tube_operators_agree() {
        let tube = Tube::new(CurveChart::helix(1.0, 0.3), 0.2).unwrap();
        let pts: Vec<Vec3> = (0..10)
            .map(|k| tube.to_cartesian(1.0 + 0.9 * k as f64, 0.7 * k as f64, 0.2 + 0.04 * k as f64).unwrap())
            .collect();
        let f = Operand::Scalar(ScalarField::parse("cos(theta)*sigma*sigma + s*z").unwrap());
        let u = Operand::Vector(VectorField::frame(["sigma", "sin(theta)*s", "x*y"]).unwrap());
        let sops = [TubeOp::Gradient, TubeOp::Laplacian];
        let vops = [TubeOp::Divergence, TubeOp::Curl, TubeOp::VectorLaplacian, TubeOp::VectorGradient];
        for (ops, field) in [(&sops[..], &f), (&vops[..], &u)] {
            let ok = compare_tube(&tube, ops, field, &pts, CompareOptions::default()).unwrap();
            for r in &ok {
                assert!(r.passes(1e-6), "{r:?}");
            }
            let bad = compare_tube(&tube, ops, field, &pts, CompareOptions { fault: 1e-3, ..Default::default() }).unwrap();
            for r in &bad {
                assert!(r.max_rel > 1e-4, "{r:?}");
            }
        }
    }

    #[test]
    fn collar_exit_is_a_recorded_failure() {
        let chart = SurfaceChart::sphere(1.0);
        let f = Operand::Scalar(ScalarField::parse("sigma").unwrap());
        let pts = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.5)];
        let r = compare_surface(&chart, 0.0, &[SurfaceOp::Laplacian], &f, &pts, CompareOptions::default()).unwrap();
        assert_eq!(r[0].failures.len(), 1);
        assert_eq!(r[0].failures[0].index, 0);
        assert!(!r[0].passes(1.0));
    }
}
