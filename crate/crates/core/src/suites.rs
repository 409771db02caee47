//! Seeded verification suites with deterministic JSON reports.
//!
//! Every suite draws its points and random fields from a ChaCha stream
//! seeded by the caller, evaluates in parallel, and folds results in input
//! order, so a report depends on the seed and configuration only.

use crate::asymptotics::{
    default_eps, slope_test_many, surface_laplacian_leading, tube_laplacian_leading, ErrorScale, LayerFields, LayerGeometry,
    LayerOp, LayerPoint,
};
use crate::chart::{CurveChart, SurfaceChart, SurfaceKind};
use crate::closest_point::{to_cartesian_at, Projector};
use crate::curve_frames::{frenet_at, orthogonality_residual, Tube};
use crate::error::{Error, Result};
use crate::field::{Components, ScalarField, VectorField};
use crate::fd::central_richardson;
use crate::linalg::Vec3;
use crate::oracle::{
    compare_surface_faults, compare_tube_faults, errors, fd_grad, pullback, CompareReport, FdSteps, PointFailure,
    Pullback,
};
use crate::spec::{CurveSpec, Geometry, GeometrySpec, SurfaceSpec};
use crate::surface_calculus::{Collar, Operand, SurfaceOp};
use crate::surface_evolution::dt_coordinates;
use crate::surface_frames::{codazzi_egregium_residuals, FrameKind, SurfaceGeometry, REFERENCE_AXIS, SURFACE_DEGREE};
use crate::tube_calculus::{dt_scalar_tube, dt_vector_tube, frenet_constraint_residuals, torsion_evolution, TubeOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Abs,
    Rel,
}

/// Whether the measured error must stay below the tolerance or, for
/// negative controls, exceed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Below,
    Above,
}

/// Outcome of one check in a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub max_abs: f64,
    pub max_rel: f64,
    pub n_points: usize,
    pub failures: Vec<PointFailure>,
    pub measure: Measure,
    pub expect: Expect,
    pub tolerance: f64,
    pub passed: bool,
}

/// Running maxima for one check.
#[derive(Clone, Debug, Default)]
struct Tally {
    max_abs: f64,
    max_rel: f64,
    n_points: usize,
    failures: Vec<PointFailure>,
}

impl Tally {
    fn push(&mut self, index: usize, point: [f64; 3], r: std::result::Result<(f64, f64), String>) {
        self.n_points += 1;
        match r {
            Ok((abs, rel)) => {
                // NaN must not slip through `max`
                self.max_abs = if abs.is_nan() { f64::INFINITY } else { self.max_abs.max(abs) };
                self.max_rel = if rel.is_nan() { f64::INFINITY } else { self.max_rel.max(rel) };
            }
            Err(message) => self.failures.push(PointFailure { index, point, message }),
        }
    }

    fn absorb(&mut self, r: &CompareReport) {
        let base = self.n_points;
        self.max_abs = self.max_abs.max(r.max_abs);
        self.max_rel = self.max_rel.max(r.max_rel);
        self.failures
            .extend(r.failures.iter().map(|f| PointFailure { index: f.index + base, ..f.clone() }));
        self.n_points += r.n_points;
    }

    fn finish(self, measure: Measure, expect: Expect, tolerance: f64) -> Check {
        let v = match measure {
            Measure::Abs => self.max_abs,
            Measure::Rel => self.max_rel,
        };
        let passed = self.n_points > 0
            && match expect {
                Expect::Below => self.failures.is_empty() && v < tolerance,
                Expect::Above => v > tolerance,
            };
        Check {
            max_abs: self.max_abs,
            max_rel: self.max_rel,
            n_points: self.n_points,
            failures: self.failures,
            measure,
            expect,
            tolerance,
            passed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuiteKind {
    /// Curvilinear operators against the ambient oracle (surfaces).
    Surface,
    /// Curvilinear operators against the ambient oracle (tubes).
    Tube,
    /// Time derivatives against re-projection finite differences.
    Evolution,
    /// Convergence slopes and leading coefficients of layer expansions.
    Asymptotics,
    /// `|∇σ| = 1`, `∇σ = n̂` and the coordinate round trip.
    Eikonal,
    /// Exact curvatures and the Codazzi and Gauss equations.
    Curvature,
    /// Operator identities that must hold to rounding.
    Identities,
    /// Orthogonality of tube coordinates, with its negative control.
    Orthogonality,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::Surface,
        SuiteKind::Tube,
        SuiteKind::Evolution,
        SuiteKind::Asymptotics,
        SuiteKind::Eikonal,
        SuiteKind::Curvature,
        SuiteKind::Identities,
        SuiteKind::Orthogonality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Surface => "surface",
            SuiteKind::Tube => "tube",
            SuiteKind::Evolution => "evolution",
            SuiteKind::Asymptotics => "asymptotics",
            SuiteKind::Eikonal => "eikonal",
            SuiteKind::Curvature => "curvature",
            SuiteKind::Identities => "identities",
            SuiteKind::Orthogonality => "orthogonality",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Sample sizes and tolerances. Defaults follow the acceptance protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Collar points for operator, identity, evolution and tube suites.
    pub points: usize,
    /// Random fields per kind (scalar and vector).
    pub fields: usize,
    pub eikonal_points: usize,
    /// Grid size per axis for the curvature suite.
    pub grid: usize,
    /// Layer points for the asymptotics suite.
    pub layer_points: usize,
    /// Curvature shift of the negative control.
    pub fault: f64,
    /// Replaces the default tolerance of the operator comparisons.
    pub tol: Option<f64>,
    pub steps: FdSteps,
    pub eps: Vec<f64>,
    pub orders: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            points: 200,
            fields: 3,
            eikonal_points: 1000,
            grid: 32,
            layer_points: 5,
            fault: 1e-3,
            tol: None,
            steps: FdSteps::default(),
            eps: default_eps(),
            orders: vec![0, 1, 2],
        }
    }
}

/// Operator comparison tolerance.
pub const ORACLE_TOL: f64 = 1e-4;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const EIKONAL_TOL: f64 = 1e-7;
pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const CURVATURE_EXACT_TOL: f64 = 1e-9;
pub const COMPATIBILITY_TOL: f64 = 1e-6;
pub const DT_TOL: f64 = 1e-5;
pub const CLOSURE_TOL: f64 = 1e-6;
pub const TORSION_RATE_TOL: f64 = 1e-3;
pub const SLOPE_TOL: f64 = 0.2;
pub const LEADING_TOL: f64 = 1e-10;
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
pub const FROZEN_TOL: f64 = 1e-3;
/// Time step of the re-projection differences (one Richardson level).
pub const DT_STEP: f64 = 1e-3;

/// Full report of one suite run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub geometry: String,
    pub seed: u64,
    pub passed: bool,
    /// Random field expressions, for reproduction by hand.
    pub fields: Vec<String>,
    pub per_op: BTreeMap<String, Check>,
}

impl SuiteReport {
    fn new(kind: SuiteKind, geometry: &str, seed: u64, fields: Vec<String>, checks: BTreeMap<String, Check>) -> Self {
        SuiteReport {
            suite: kind.name().to_string(),
            geometry: geometry.to_string(),
            seed,
            passed: !checks.is_empty() && checks.values().all(|c| c.passed),
            fields,
            per_op: checks,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn failing(&self) -> Vec<&str> {
        self.per_op.iter().filter(|(_, c)| !c.passed).map(|(k, _)| k.as_str()).collect()
    }
}

fn wrong_kind(kind: SuiteKind, need: &str) -> Error {
    Error::Spec {
        field: "kind".into(),
        msg: format!("suite `{}` needs a {need}", kind.name()),
    }
}

/// Run one suite on one geometry.
pub fn run_suite(kind: SuiteKind, geom: &GeometrySpec, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fields = Vec::new();
    let checks = match (&geom.geometry, kind) {
        (Geometry::Surface(s), SuiteKind::Surface) => surface_oracle(s, cfg, &mut rng, &mut fields)?,
        (Geometry::Surface(s), SuiteKind::Identities) => identities(s, cfg, &mut rng, &mut fields)?,
        (Geometry::Surface(s), SuiteKind::Eikonal) => eikonal(s, cfg, &mut rng)?,
        (Geometry::Surface(s), SuiteKind::Curvature) => curvature(s, cfg)?,
        (Geometry::Surface(s), SuiteKind::Evolution) => surface_evolution(s, cfg, &mut rng, &mut fields)?,
        (Geometry::Surface(s), SuiteKind::Asymptotics) => surface_asymptotics(s, cfg, &mut rng, &mut fields)?,
        (Geometry::Curve(c), SuiteKind::Tube) => tube_oracle(c, cfg, &mut rng, &mut fields)?,
        (Geometry::Curve(c), SuiteKind::Orthogonality) => orthogonality(c, cfg, &mut rng)?,
        (Geometry::Curve(c), SuiteKind::Evolution) => curve_evolution(c, cfg, &mut rng, &mut fields)?,
        (Geometry::Curve(c), SuiteKind::Asymptotics) => tube_asymptotics(c, cfg, &mut rng, &mut fields)?,
        (Geometry::Curve(_), _) => return Err(wrong_kind(kind, "surface")),
        (Geometry::Surface(_), _) => return Err(wrong_kind(kind, "curve")),
    };
    Ok(SuiteReport::new(kind, &geom.name, cfg.seed, fields, checks))
}

// ---------------------------------------------------------------- sampling

/// A collar point on a surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub s: [f64; 2],
    pub sigma: f64,
    pub x: Vec3,
}

/// A collar point around a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeSample {
    pub s: f64,
    pub theta: f64,
    pub sigma: f64,
    pub x: Vec3,
}

const MAX_ATTEMPTS: usize = 100;
/// Largest `|σ|` sampled, and the fraction of the local focal distance used.
const SIGMA_CAP: f64 = 0.5;
const FOCAL_FRACTION: f64 = 0.5;

fn uniform_in(rng: &mut ChaCha8Rng, d: [f64; 2], periodic: bool) -> f64 {
    let m = if periodic { 0.0 } else { 0.02 * (d[1] - d[0]) };
    rng.gen_range(d[0] + m..d[1] - m)
}

fn too_many(what: &str, n: usize) -> Error {
    Error::Invalid(format!("could not draw {n} admissible {what} points"))
}

/// Random collar points away from chart degeneracies, isolated umbilics
/// and frame-sign switches, whose projection returns to the same foot.
pub fn sample_surface(chart: &SurfaceChart, tau: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<SurfaceSample>> {
    let proj = Projector::new(chart).at_time(tau);
    let mut out = Vec::with_capacity(n);
    for _ in 0..MAX_ATTEMPTS * n.max(1) {
        if out.len() == n {
            break;
        }
        let s = [
            uniform_in(rng, chart.domain[0], chart.periodic[0]),
            uniform_in(rng, chart.domain[1], chart.periodic[1]),
        ];
        let u: f64 = rng.gen_range(0.0..1.0);
        let Ok(g) = SurfaceGeometry::new(chart, s, tau, false, 2, None) else { continue };
        let (t1, t2) = (g.t[0].value(), g.t[1].value());
        if t1.cross(&t2).norm() < 0.1 * t1.norm2().max(t2.norm2()) {
            continue;
        }
        let (k1, k2) = (g.kappa1.value(), g.kappa2.value());
        let kmax = k1.abs().max(k2.abs());
        match g.frame_kind {
            FrameKind::Umbilic => continue,
            FrameKind::Principal if (k1 - k2).abs() < 0.05 * kmax => continue,
            _ => {}
        }
        if g.t1_hat.value().dot(&REFERENCE_AXIS).abs() < 0.1 {
            continue;
        }
        let (mut lo, mut hi) = (-SIGMA_CAP, SIGMA_CAP);
        for k in [k1, k2] {
            if k > 0.0 {
                hi = hi.min(FOCAL_FRACTION / k);
            } else if k < 0.0 {
                lo = lo.max(FOCAL_FRACTION / k);
            }
        }
        let sigma = lo + u * (hi - lo);
        let Ok(x) = to_cartesian_at(chart, s, sigma, tau) else { continue };
        let Ok(c) = proj.project(&x) else { continue };
        let p = g.p.value();
        if (c.sigma - sigma).abs() > 1e-4 || (c.foot - p).norm() > 1e-4 {
            continue;
        }
        out.push(SurfaceSample { s, sigma, x });
    }
    if out.len() < n {
        return Err(too_many("surface", n));
    }
    Ok(out)
}

/// Random tube points with `σ ≤ min(sigma_max, 0.6/κ)` whose inverse map
/// returns to the same foot.
pub fn sample_tube(tube: &Tube, n: usize, sigma_max: f64, rng: &mut ChaCha8Rng) -> Result<Vec<TubeSample>> {
    let c = &tube.curve;
    let mut out = Vec::with_capacity(n);
    for _ in 0..MAX_ATTEMPTS * n.max(1) {
        if out.len() == n {
            break;
        }
        let s = uniform_in(rng, c.domain, c.periodic);
        let theta = rng.gen_range(0.0..2.0 * PI);
        let u: f64 = rng.gen_range(0.05..1.0);
        let Ok(fr) = frenet_at(c, s, tube.tau()) else { continue };
        let top = if fr.kappa > 0.0 { sigma_max.min(0.6 / fr.kappa) } else { sigma_max };
        let sigma = u * top;
        let Ok(x) = tube.to_cartesian(s, theta, sigma) else { continue };
        let Ok(back) = tube.from_cartesian(&x) else { continue };
        if (back.sigma - sigma).abs() > 1e-4 || (back.foot - fr.p).norm() > 1e-4 {
            continue;
        }
        out.push(TubeSample { s, theta, sigma, x });
    }
    if out.len() < n {
        return Err(too_many("tube", n));
    }
    Ok(out)
}

// ---------------------------------------------------------- random fields

fn coef(rng: &mut ChaCha8Rng) -> String {
    let v = rng.gen_range(-1000i32..=1000) as f64 / 1000.0;
    format!("({v})")
}

fn freq(d: [f64; 2], periodic: bool) -> String {
    if periodic {
        format!("{:?}", 2.0 * PI / (d[1] - d[0]))
    } else {
        "1".to_string()
    }
}

/// Smooth random scalar and vector fields on a surface collar. Odd fields
/// use frame components, even fields Cartesian ones.
fn surface_fields(chart: &SurfaceChart, k: usize, timed: bool, rng: &mut ChaCha8Rng) -> (String, [String; 3], Components) {
    let w1 = freq(chart.domain[0], chart.periodic[0]);
    let w2 = freq(chart.domain[1], chart.periodic[1]);
    let mut c = || coef(rng);
    let t = if timed { format!(" + {}*tau*sigma + {}*tau*x", c(), c()) } else { String::new() };
    let f = format!(
        "{}*sin({w1}*s1 + {})*cos({w2}*s2 + {}) + {}*sigma + {}*sigma*sigma*cos({w1}*s1) + {}*x*y + {}*z*sigma{t}",
        c(), c(), c(), c(), c(), c(), c()
    );
    let (u, kind) = if k % 2 == 1 {
        (
            [
                format!("{}*sigma + {}*cos({w1}*s1)", c(), c()),
                format!("{}*sin({w2}*s2 + {})*(1 + sigma){t}", c(), c()),
                format!("{}*cos({w1}*s1 + {w2}*s2) + {}*x", c(), c()),
            ],
            Components::Frame,
        )
    } else {
        (
            [
                format!("{}*y*sigma + {}*cos({w2}*s2)", c(), c()),
                format!("{}*z + {}*sin({w1}*s1)*sigma{t}", c(), c()),
                format!("{}*x*x + {}*sigma", c(), c()),
            ],
            Components::Ambient,
        )
    };
    (f, u, kind)
}

fn tube_fields(curve: &CurveChart, k: usize, timed: bool, rng: &mut ChaCha8Rng) -> (String, [String; 3], Components) {
    let w = freq(curve.domain, curve.periodic);
    let mut c = || coef(rng);
    let t = if timed { format!(" + {}*tau*sigma", c()) } else { String::new() };
    let f = format!(
        "{}*cos(theta + {})*sigma*sigma + {}*sin({w}*s)*sigma + {}*x*z + {}*y{t}",
        c(), c(), c(), c(), c()
    );
    let (u, kind) = if k % 2 == 1 {
        (
            [
                format!("{}*sigma + {}*cos({w}*s)", c(), c()),
                format!("{}*sin(theta)*sigma{t}", c()),
                format!("{}*x*y + {}", c(), c()),
            ],
            Components::Frame,
        )
    } else {
        (
            [
                format!("{}*y*z + {}*sigma*cos(theta)", c(), c()),
                format!("{}*x + {}*sin({w}*s){t}", c(), c()),
                format!("{}*z*z", c()),
            ],
            Components::Ambient,
        )
    };
    (f, u, kind)
}

fn build(f: &str, u: &[String; 3], kind: Components, log: &mut Vec<String>) -> Result<(ScalarField, VectorField)> {
    log.push(format!("scalar: {f}"));
    let tag = match kind {
        Components::Frame => "frame",
        Components::Ambient => "ambient",
    };
    log.push(format!("vector ({tag}): [{}, {}, {}]", u[0], u[1], u[2]));
    Ok((ScalarField::parse(f)?, VectorField::parse(kind, [&u[0], &u[1], &u[2]])?))
}

fn checks_from(tallies: BTreeMap<String, (Tally, Measure, Expect, f64)>) -> BTreeMap<String, Check> {
    tallies
        .into_iter()
        .map(|(k, (t, m, e, tol))| (k, t.finish(m, e, tol)))
        .collect()
}

type Tallies = BTreeMap<String, (Tally, Measure, Expect, f64)>;

fn entry<'a>(t: &'a mut Tallies, name: &str, m: Measure, e: Expect, tol: f64) -> &'a mut Tally {
    &mut t.entry(name.to_string()).or_insert_with(|| (Tally::default(), m, e, tol)).0
}

// --------------------------------------------------------- operator suites

fn surface_oracle(spec: &SurfaceSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    let pts = sample_surface(chart, spec.tau, cfg.points, rng)?;
    let xs: Vec<Vec3> = pts.iter().map(|p| p.x).collect();
    let tol = cfg.tol.unwrap_or(ORACLE_TOL);
    let sops: Vec<SurfaceOp> = SurfaceOp::ALL.into_iter().filter(|o| o.takes_scalar()).collect();
    let vops: Vec<SurfaceOp> = SurfaceOp::ALL.into_iter().filter(|o| !o.takes_scalar()).collect();
    let mut t = Tallies::new();
    for k in 0..cfg.fields {
        let (fs, us, kind) = surface_fields(chart, k, false, rng);
        let (f, u) = build(&fs, &us, kind, log)?;
        for (ops, field) in [(&sops, Operand::Scalar(f)), (&vops, Operand::Vector(u))] {
            let runs = compare_surface_faults(chart, spec.tau, ops, &field, &xs, &[0.0, cfg.fault], cfg.steps)?;
            for (reports, (suffix, expect)) in runs.iter().zip([("", Expect::Below), (":fault", Expect::Above)]) {
                for r in reports {
                    entry(&mut t, &format!("{}{suffix}", r.op), Measure::Rel, expect, tol).absorb(r);
                }
            }
        }
    }
    Ok(checks_from(t))
}

fn tube_oracle(spec: &CurveSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let tube = spec.tube()?;
    let pts = sample_tube(&tube, cfg.points, SIGMA_CAP, rng)?;
    let xs: Vec<Vec3> = pts.iter().map(|p| p.x).collect();
    let tol = cfg.tol.unwrap_or(ORACLE_TOL);
    let sops: Vec<TubeOp> = TubeOp::SPATIAL.into_iter().filter(|o| o.takes_scalar()).collect();
    let vops: Vec<TubeOp> = TubeOp::SPATIAL.into_iter().filter(|o| !o.takes_scalar()).collect();
    let mut t = Tallies::new();
    for k in 0..cfg.fields {
        let (fs, us, kind) = tube_fields(&tube.curve, k, false, rng);
        let (f, u) = build(&fs, &us, kind, log)?;
        for (ops, field) in [(&sops, Operand::Scalar(f)), (&vops, Operand::Vector(u))] {
            let runs = compare_tube_faults(&tube, ops, &field, &xs, &[0.0, cfg.fault], cfg.steps)?;
            for (reports, (suffix, expect)) in runs.iter().zip([("", Expect::Below), (":fault", Expect::Above)]) {
                for r in reports {
                    entry(&mut t, &format!("{}{suffix}", r.op), Measure::Rel, expect, tol).absorb(r);
                }
            }
        }
    }
    Ok(checks_from(t))
}

type Row = Vec<(&'static str, std::result::Result<(f64, f64), String>)>;

fn fold_rows(t: &mut Tallies, rows: Vec<Row>, points: &[[f64; 3]], spec: &BTreeMap<&str, (Measure, Expect, f64)>) {
    for (i, row) in rows.into_iter().enumerate() {
        for (name, r) in row {
            let (m, e, tol) = spec[name];
            entry(t, name, m, e, tol).push(i, points[i], r);
        }
    }
}

fn scaled(abs: f64, scale: f64) -> (f64, f64) {
    (abs, abs / scale.max(1.0))
}

fn identities(spec: &SurfaceSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    let pts = sample_surface(chart, spec.tau, cfg.points, rng)?;
    let names: BTreeMap<&str, (Measure, Expect, f64)> =
        ["curl_grad", "div_curl", "vector_laplacian", "hessian_symmetry", "commutators"]
            .into_iter()
            .map(|n| (n, (Measure::Rel, Expect::Below, IDENTITY_TOL)))
            .collect();
    let mut t = Tallies::new();
    for k in 0..cfg.fields {
        let (fs, us, kind) = surface_fields(chart, k, false, rng);
        let (f, u) = build(&fs, &us, kind, log)?;
        let rows: Vec<Row> = pts
            .par_iter()
            .map(|p| {
                let run = || -> Result<Row> {
                    let geo = SurfaceGeometry::new(chart, p.s, spec.tau, false, SURFACE_DEGREE, None)?;
                    let c = Collar::new(geo, p.sigma)?;
                    let fj = c.scalar(&f)?;
                    let uj = c.vector(&u)?;
                    let grad = c.gradient_jet(&fj);
                    let curl = c.curl_jet(&uj);
                    let lap = c.vector_laplacian_jet(&uj);
                    let gd = c.gradient_jet(&c.divergence_jet(&uj));
                    let cc = c.curl_curl_jet(&uj);
                    let id = (lap.clone() - gd - cc).value().max_abs();
                    let h = c.hessian_jet(&fj)?.value();
                    let (r1, r2, r3) = c.commutator_residuals_jet(&fj)?;
                    Ok(vec![
                        ("curl_grad", Ok(scaled(c.curl_jet(&grad).value().max_abs(), grad.value().max_abs()))),
                        ("div_curl", Ok(scaled(c.divergence_jet(&curl).value().abs(), curl.value().max_abs()))),
                        ("vector_laplacian", Ok(scaled(id, lap.value().max_abs()))),
                        ("hessian_symmetry", Ok(scaled((h - h.transpose()).max_abs(), h.max_abs()))),
                        ("commutators", Ok(scaled(r1.abs().max(r2.abs()).max(r3.abs()), grad.value().max_abs()))),
                    ])
                };
                run().unwrap_or_else(|e| names.keys().map(|n| (*n, Err(e.to_string()))).collect())
            })
            .collect();
        let where_: Vec<[f64; 3]> = pts.iter().map(|p| p.x.to_array()).collect();
        fold_rows(&mut t, rows, &where_, &names);
    }
    Ok(checks_from(t))
}

fn angle(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

fn eikonal(spec: &SurfaceSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    let tau = spec.tau;
    let pts = sample_surface(chart, tau, cfg.eikonal_points, rng)?;
    let names: BTreeMap<&str, (Measure, Expect, f64)> = [
        ("eikonal", (Measure::Abs, Expect::Below, EIKONAL_TOL)),
        ("normal_angle", (Measure::Abs, Expect::Below, EIKONAL_TOL)),
        ("round_trip", (Measure::Abs, Expect::Below, ROUND_TRIP_TOL)),
    ]
    .into_iter()
    .collect();
    let sigma = pullback(Pullback::Surface { chart, tau }, Operand::Scalar(ScalarField::parse("sigma")?));
    let proj = Projector::new(chart).at_time(tau);
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|p| {
            let run = || -> Result<Row> {
                let c = proj.project(&p.x)?;
                let g = fd_grad(&sigma, &p.x, Some(cfg.steps.first * p.x.norm().max(1.0)))?;
                let foot = chart.point(p.s, tau)?;
                let rt = (c.sigma - p.sigma).abs().max((c.foot - foot).norm());
                Ok(vec![
                    ("eikonal", Ok(scaled((g.norm() - 1.0).abs(), 1.0))),
                    ("normal_angle", Ok(scaled(angle(&g, &c.normal), 1.0))),
                    ("round_trip", Ok(scaled(rt, 1.0))),
                ])
            };
            run().unwrap_or_else(|e| names.keys().map(|n| (*n, Err(e.to_string()))).collect())
        })
        .collect();
    let where_: Vec<[f64; 3]> = pts.iter().map(|p| p.x.to_array()).collect();
    let mut t = Tallies::new();
    fold_rows(&mut t, rows, &where_, &names);
    Ok(checks_from(t))
}

/// Known principal curvatures of builtin charts, in increasing order.
fn exact_curvatures(chart: &SurfaceChart) -> Option<[f64; 2]> {
    match chart.kind {
        SurfaceKind::Plane => Some([0.0, 0.0]),
        SurfaceKind::Sphere { radius } => Some([-1.0 / radius, -1.0 / radius]),
        SurfaceKind::Cylinder { radius } => Some([-1.0 / radius, 0.0]),
        _ => None,
    }
}

fn curvature(spec: &SurfaceSpec, cfg: &SuiteConfig) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    let n = cfg.grid.max(2);
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let f = |k: usize, d: [f64; 2]| d[0] + (k as f64 + 0.5) * (d[1] - d[0]) / n as f64;
            grid.push([f(i, chart.domain[0]), f(j, chart.domain[1])]);
        }
    }
    let exact = exact_curvatures(chart);
    let mut names: BTreeMap<&str, (Measure, Expect, f64)> = [
        ("codazzi", (Measure::Abs, Expect::Below, COMPATIBILITY_TOL)),
        ("egregium", (Measure::Abs, Expect::Below, COMPATIBILITY_TOL)),
    ]
    .into_iter()
    .collect();
    if exact.is_some() {
        names.insert("principal_exact", (Measure::Abs, Expect::Below, CURVATURE_EXACT_TOL));
    }
    let rows: Vec<Row> = grid
        .par_iter()
        .map(|s| {
            let mut row: Row = Vec::new();
            let g = match SurfaceGeometry::at(chart, *s) {
                Ok(g) => g,
                Err(e) => return names.keys().map(|n| (*n, Err(e.to_string()))).collect(),
            };
            let (k1, k2) = (g.kappa1.value(), g.kappa2.value());
            if let Some(ex) = exact {
                let (lo, hi) = (k1.min(k2), k1.max(k2));
                row.push(("principal_exact", Ok(scaled((lo - ex[0]).abs().max((hi - ex[1]).abs()), 1.0))));
            }
            // umbilics and their immediate neighbourhood are excluded
            let near_umbilic = match g.frame_kind {
                FrameKind::Umbilic => true,
                FrameKind::Principal => (k1 - k2).abs() < 1e-2 * k1.abs().max(k2.abs()).max(1.0),
                FrameKind::UmbilicPatch => false,
            };
            if !near_umbilic {
                match codazzi_egregium_residuals(chart, *s) {
                    Ok((r1, r2, r3)) => {
                        row.push(("codazzi", Ok(scaled(r1.abs().max(r2.abs()), 1.0))));
                        row.push(("egregium", Ok(scaled(r3.abs(), 1.0))));
                    }
                    Err(Error::Umbilic) => {}
                    Err(e) => {
                        row.push(("codazzi", Err(e.to_string())));
                        row.push(("egregium", Err(e.to_string())));
                    }
                }
            }
            row
        })
        .collect();
    let where_: Vec<[f64; 3]> = grid.iter().map(|s| [s[0], s[1], 0.0]).collect();
    let mut t = Tallies::new();
    fold_rows(&mut t, rows, &where_, &names);
    Ok(checks_from(t))
}

fn orthogonality(spec: &CurveSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<BTreeMap<String, Check>> {
    let tube = CurveSpec { rotating: true, ..spec.clone() }.tube()?;
    let frozen = CurveSpec { rotating: false, ..spec.clone() }.tube()?;
    let pts = sample_tube(&tube, cfg.points, SIGMA_CAP, rng)?;
    let tau = tube.tau();
    let torsional = pts
        .iter()
        .any(|p| frenet_at(&tube.curve, p.s, tau).is_ok_and(|f| f.omega.abs() > 1e-6));
    let mut names: BTreeMap<&str, (Measure, Expect, f64)> =
        [("orthogonality", (Measure::Abs, Expect::Below, ORTHOGONALITY_TOL))].into_iter().collect();
    if torsional {
        names.insert("orthogonality:frozen", (Measure::Abs, Expect::Above, FROZEN_TOL));
    }
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|p| {
            let mut row: Row = vec![(
                "orthogonality",
                orthogonality_residual(&tube, p.s, p.theta, p.sigma).map(|r| (r, r)).map_err(|e| e.to_string()),
            )];
            if torsional {
                // the control runs at the largest radius, where the defect is plainest
                let r = orthogonality_residual(&frozen, p.s, p.theta, SIGMA_CAP);
                row.push(("orthogonality:frozen", r.map(|r| (r, r)).map_err(|e| e.to_string())));
            }
            row
        })
        .collect();
    let where_: Vec<[f64; 3]> = pts.iter().map(|p| p.x.to_array()).collect();
    let mut t = Tallies::new();
    fold_rows(&mut t, rows, &where_, &names);
    Ok(checks_from(t))
}

// --------------------------------------------------------------- evolution

fn richardson_vec(f: impl Fn(f64) -> Result<Vec<f64>>, x: f64, h: f64) -> Result<Vec<f64>> {
    let d = |h: f64| -> Result<Vec<f64>> {
        let (a, b) = (f(x + h)?, f(x - h)?);
        Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (c, f) = (d(h)?, d(h / 2.0)?);
    Ok(c.iter().zip(&f).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

fn surface_evolution(spec: &SurfaceSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    if spec.motion.is_some() || !chart.is_time_dependent() {
        return Err(Error::MissingTime("the evolution suite needs a τ-dependent chart".into()));
    }
    let surf = spec.evolving()?;
    let tau = spec.tau;
    let pts = sample_surface(chart, tau, cfg.points, rng)?;
    let where_: Vec<[f64; 3]> = pts.iter().map(|p| p.x.to_array()).collect();
    let mut names: BTreeMap<&str, (Measure, Expect, f64)> = [
        ("dt_sigma", (Measure::Rel, Expect::Below, DT_TOL)),
        ("dt_closure", (Measure::Abs, Expect::Below, CLOSURE_TOL)),
    ]
    .into_iter()
    .collect();
    let coords = [ScalarField::parse("x")?, ScalarField::parse("y")?, ScalarField::parse("z")?];
    let mut t = Tallies::new();
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|p| {
            let run = || -> Result<Row> {
                let (dts, _, c) = dt_coordinates(&surf, &p.x, tau)?;
                let fd = central_richardson(
                    |tt| Projector::new(chart).at_time(tt).project_near(&p.x, c.s).map_or(f64::NAN, |c| c.sigma),
                    tau,
                    DT_STEP,
                );
                let m = surf.collar(c.s, c.sigma, tau)?;
                let mut closure: f64 = 0.0;
                for f in &coords {
                    closure = closure.max(m.dt_scalar(f)?.abs());
                }
                Ok(vec![("dt_sigma", Ok(errors(&[dts], &[fd]))), ("dt_closure", Ok((closure, closure)))])
            };
            run().unwrap_or_else(|e| vec![("dt_sigma", Err(e.to_string())), ("dt_closure", Err(e.to_string()))])
        })
        .collect();
    fold_rows(&mut t, rows, &where_, &names);
    names.insert("dt_scalar", (Measure::Rel, Expect::Below, DT_TOL));
    names.insert("dt_vector", (Measure::Rel, Expect::Below, DT_TOL));
    for k in 0..cfg.fields {
        let (fs, us, kind) = surface_fields(chart, k, true, rng);
        let (f, u) = build(&fs, &us, kind, log)?;
        let (fo, uo) = (Operand::Scalar(f.clone()), Operand::Vector(u.clone()));
        let rows: Vec<Row> = pts
            .par_iter()
            .map(|p| {
                let run = |vector: bool| -> Result<(f64, f64)> {
                    let c = Projector::new(chart).at_time(tau).project(&p.x)?;
                    let m = surf.collar(c.s, c.sigma, tau)?;
                    let value = if vector { m.dt_vector(&u)?.to_array().to_vec() } else { vec![m.dt_scalar(&f)?] };
                    let op = if vector { &uo } else { &fo };
                    let fd = richardson_vec(
                        |tt| pullback(Pullback::Surface { chart, tau: tt }, op.clone()).eval(&p.x),
                        tau,
                        DT_STEP,
                    )?;
                    Ok(errors(&value, &fd))
                };
                vec![
                    ("dt_scalar", run(false).map_err(|e| e.to_string())),
                    ("dt_vector", run(true).map_err(|e| e.to_string())),
                ]
            })
            .collect();
        fold_rows(&mut t, rows, &where_, &names);
    }
    Ok(checks_from(t))
}

fn curve_evolution(spec: &CurveSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let curve = &spec.chart;
    if !curve.is_time_dependent() {
        return Err(Error::MissingTime("the evolution suite needs a τ-dependent curve".into()));
    }
    let tau = spec.tau;
    let tube = spec.tube()?;
    let pts = sample_tube(&tube, cfg.points, SIGMA_CAP, rng)?;
    let where_: Vec<[f64; 3]> = pts.iter().map(|p| p.x.to_array()).collect();
    let mut names: BTreeMap<&str, (Measure, Expect, f64)> = [
        ("frenet_c1", (Measure::Abs, Expect::Below, COMPATIBILITY_TOL)),
        ("frenet_c2", (Measure::Abs, Expect::Below, COMPATIBILITY_TOL)),
        ("torsion_rate", (Measure::Rel, Expect::Below, TORSION_RATE_TOL)),
    ]
    .into_iter()
    .collect();
    let mut t = Tallies::new();
    let rows: Vec<Row> = pts
        .par_iter()
        .map(|p| {
            let mut row: Row = Vec::new();
            match frenet_constraint_residuals(curve, p.s, tau) {
                Ok(r) => {
                    row.push(("frenet_c1", Ok((r.c1.abs(), r.c1.abs()))));
                    row.push(("frenet_c2", Ok((r.c2.abs(), r.c2.abs()))));
                }
                Err(e) => {
                    row.push(("frenet_c1", Err(e.to_string())));
                    row.push(("frenet_c2", Err(e.to_string())));
                }
            }
            let tr = || -> Result<(f64, f64)> {
                let v = torsion_evolution(curve, p.s, tau)?;
                let fd = central_richardson(|tt| frenet_at(curve, p.s, tt).map_or(f64::NAN, |f| f.omega), tau, DT_STEP);
                Ok(errors(&[v], &[fd]))
            };
            row.push(("torsion_rate", tr().map_err(|e| e.to_string())));
            row
        })
        .collect();
    fold_rows(&mut t, rows, &where_, &names);

    // tubes at the stencil times, shared by every point
    let stencil = [tau + DT_STEP, tau - DT_STEP, tau + DT_STEP / 2.0, tau - DT_STEP / 2.0];
    let tubes: Vec<Tube> = stencil
        .iter()
        .map(|&tt| CurveSpec { tau: tt, ..spec.clone() }.tube())
        .collect::<Result<_>>()?;
    names.insert("dt_scalar", (Measure::Rel, Expect::Below, DT_TOL));
    names.insert("dt_vector", (Measure::Rel, Expect::Below, DT_TOL));
    for k in 0..cfg.fields {
        let (fs, us, kind) = tube_fields(curve, k, true, rng);
        let (f, u) = build(&fs, &us, kind, log)?;
        let (fo, uo) = (Operand::Scalar(f.clone()), Operand::Vector(u.clone()));
        let rows: Vec<Row> = pts
            .par_iter()
            .map(|p| {
                let run = |vector: bool| -> Result<(f64, f64)> {
                    let value = if vector {
                        dt_vector_tube(&tube, &u, p.s, p.theta, p.sigma)?.to_array().to_vec()
                    } else {
                        vec![dt_scalar_tube(&tube, &f, p.s, p.theta, p.sigma)?]
                    };
                    let op = if vector { &uo } else { &fo };
                    let at = |i: usize| pullback(Pullback::Tube(&tubes[i]), op.clone()).eval(&p.x);
                    let (a, b, c, d) = (at(0)?, at(1)?, at(2)?, at(3)?);
                    let fd: Vec<f64> = (0..value.len())
                        .map(|j| {
                            let coarse = (a[j] - b[j]) / (2.0 * DT_STEP);
                            let fine = (c[j] - d[j]) / DT_STEP;
                            (4.0 * fine - coarse) / 3.0
                        })
                        .collect();
                    Ok(errors(&value, &fd))
                };
                vec![
                    ("dt_scalar", run(false).map_err(|e| e.to_string())),
                    ("dt_vector", run(true).map_err(|e| e.to_string())),
                ]
            })
            .collect();
        fold_rows(&mut t, rows, &where_, &names);
    }
    Ok(checks_from(t))
}

// ------------------------------------------------------------- asymptotics

/// Layer-point normal coordinate used by the asymptotics suite.
pub const LAYER_XI: f64 = 0.7;
const LAYER_OPS: [LayerOp; 3] = [LayerOp::ScalarLap, LayerOp::Div, LayerOp::AdvectScalar];

fn slope_rows(
    geometry: LayerGeometry<'_>,
    fields: &LayerFields,
    pts: &[LayerPoint],
    cfg: &SuiteConfig,
    layer_only: &LayerFields,
    leading: &(dyn Fn(&LayerPoint) -> Result<[f64; 2]> + Sync),
    t: &mut Tallies,
) {
    let jobs: Vec<(LayerOp, usize)> =
        LAYER_OPS.into_iter().flat_map(|op| cfg.orders.iter().map(move |&k| (op, k))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(op, k)| slope_test_many(geometry, op, fields, pts, k, &cfg.eps, ErrorScale::Leading))
        .collect();
    let point = |i: usize| [pts[i].coords[0], pts[i].coords[1], pts[i].xi];
    for (&(op, k), r) in jobs.iter().zip(results) {
        let name = format!("{}:K{k}", op.name());
        let tally = entry(t, &name, Measure::Abs, Expect::Below, SLOPE_TOL);
        let r = r.map_err(|e| e.to_string()).and_then(|(_, rep)| {
            if rep.exact {
                Ok((0.0, 0.0))
            } else {
                rep.slope
                    .map(|s| ((s - rep.expected).abs(), (s - rep.expected).abs()))
                    .ok_or_else(|| "too few usable errors for a slope".to_string())
            }
        });
        // one fit covers the whole point set
        tally.push(0, point(0), r);
    }
    for (i, pt) in pts.iter().enumerate() {
        let r = (|| -> Result<(f64, f64)> {
            let s = geometry.expand(LayerOp::ScalarLap, layer_only, pt, 0)?;
            let lead = leading(pt)?;
            let c = |k: i32| s.coeff(k).map_or(0.0, |v| v[0]);
            let got = [c(-2), c(-1)];
            let abs = (got[0] - lead[0]).abs().max((got[1] - lead[1]).abs());
            Ok(scaled(abs, lead[0].abs().max(lead[1].abs())))
        })();
        entry(t, "scalar_lap:leading", Measure::Rel, Expect::Below, LEADING_TOL).push(i, point(i), r.map_err(|e| e.to_string()));
    }
}

fn surface_asymptotics(spec: &SurfaceSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let chart = &spec.chart;
    let pts: Vec<LayerPoint> = sample_surface(chart, spec.tau, cfg.layer_points, rng)?
        .iter()
        .map(|p| LayerPoint::new(p.s, LAYER_XI).at_time(spec.tau))
        .collect();
    let w1 = freq(chart.domain[0], chart.periodic[0]);
    let w2 = freq(chart.domain[1], chart.periodic[1]);
    let f = format!("sin(x)*y + z*z + xi*cos({w1}*s1) + xi*xi");
    let u = ["y*z".to_string(), "sin(x) + xi".to_string(), "x*x".to_string()];
    let g = format!("xi*xi*cos({w1}*s1 + {w2}*s2) + xi*sin({w2}*s2)");
    let (f, u) = build(&f, &u, Components::Ambient, log)?;
    log.push(format!("layer scalar: {g}"));
    let g = ScalarField::parse(&g)?;
    let fields = LayerFields::both(f, u);
    let mut t = Tallies::new();
    let leading = |pt: &LayerPoint| surface_laplacian_leading(chart, &g, pt);
    let only = LayerFields::scalar(g.clone());
    slope_rows(LayerGeometry::Surface(chart), &fields, &pts, cfg, &only, &leading, &mut t);
    Ok(checks_from(t))
}

fn tube_asymptotics(spec: &CurveSpec, cfg: &SuiteConfig, rng: &mut ChaCha8Rng, log: &mut Vec<String>) -> Result<BTreeMap<String, Check>> {
    let tube = spec.tube()?;
    let pts: Vec<LayerPoint> = sample_tube(&tube, cfg.layer_points, SIGMA_CAP, rng)?
        .iter()
        .map(|p| LayerPoint::new([p.s, p.theta], LAYER_XI))
        .collect();
    let w = freq(tube.curve.domain, tube.curve.periodic);
    let f = "x*y + sin(z) + xi*cos(theta) + xi*xi".to_string();
    let u = ["y*z".to_string(), "x + z*z".to_string(), "sin(x*y) + xi".to_string()];
    let g = format!("xi*xi*cos(theta + {w}*s) + xi*sin(theta) + xi*xi*xi");
    let (f, u) = build(&f, &u, Components::Ambient, log)?;
    log.push(format!("layer scalar: {g}"));
    let g = ScalarField::parse(&g)?;
    let fields = LayerFields::both(f, u);
    let mut t = Tallies::new();
    let leading = |pt: &LayerPoint| tube_laplacian_leading(&tube, &g, pt);
    let only = LayerFields::scalar(g.clone());
    slope_rows(LayerGeometry::Tube(&tube), &fields, &pts, cfg, &only, &leading, &mut t);
    Ok(checks_from(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(json: &str) -> GeometrySpec {
        GeometrySpec::parse(json).unwrap()
    }

    fn small() -> SuiteConfig {
        SuiteConfig {
            points: 12,
            fields: 2,
            eikonal_points: 40,
            grid: 8,
            layer_points: 3,
            ..Default::default()
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let chart = SurfaceChart::torus(2.0, 0.7);
        let a = sample_surface(&chart, 0.0, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_surface(&chart, 0.0, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let c = sample_surface(&chart, 0.0, 10, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn torus_surface_suite_passes() {
        let g = surface(r#"{"kind":"surface","builtin":{"name":"torus","R":2,"r":0.7}}"#);
        let r = run_suite(SuiteKind::Surface, &g, &small()).unwrap();
        assert!(r.passed, "{:?}", r.failing());
        assert_eq!(r.per_op.len(), 18);
        assert_eq!(r.per_op["grad"].n_points, 24);
    }

    #[test]
    fn identities_eikonal_curvature_on_ellipsoid() {
        let g = surface(r#"{"kind":"surface","builtin":{"name":"ellipsoid","a":1,"b":1.4142135623730951,"c":2}}"#);
        for k in [SuiteKind::Identities, SuiteKind::Eikonal, SuiteKind::Curvature] {
            let r = run_suite(k, &g, &small()).unwrap();
            assert!(r.passed, "{}: {:#?}", k.name(), r.per_op);
        }
    }

    #[test]
    fn sphere_curvature_is_exact() {
        let g = surface(r#"{"kind":"surface","builtin":{"name":"sphere","R":1.5}}"#);
        let r = run_suite(SuiteKind::Curvature, &g, &small()).unwrap();
        assert!(r.per_op["principal_exact"].passed && r.passed, "{:#?}", r.per_op);
    }

    #[test]
    fn helix_tube_and_orthogonality() {
        let g = surface(r#"{"kind":"curve","builtin":{"name":"helix","a":1,"b":0.3}}"#);
        for k in [SuiteKind::Tube, SuiteKind::Orthogonality] {
            let r = run_suite(k, &g, &small()).unwrap();
            assert!(r.passed, "{}: {:#?}", k.name(), r.per_op);
        }
        assert!(run_suite(SuiteKind::Curvature, &g, &small()).is_err());
    }

    #[test]
    fn evolution_suites() {
        let torus = surface(
            r#"{"kind":"surface","exprs":["(2 + (0.7 + 0.1*tau)*cos(s2))*cos(s1)","(2 + (0.7 + 0.1*tau)*cos(s2))*sin(s1) + 0.2*tau","(0.7 + 0.05*tau*cos(s1))*sin(s2)"],
                "domain":[[0,6.283185307179586],[0,6.283185307179586]],"periodic":[true,true],"tau":0.3}"#,
        );
        let r = run_suite(SuiteKind::Evolution, &torus, &small()).unwrap();
        assert!(r.passed, "{:#?}", r.per_op);
        let curve = surface(r#"{"kind":"curve","exprs":["cos(2*pi*s)","sin(2*pi*s)","tau*s^2"],"domain":[[0,1]],"tau":1}"#);
        let r = run_suite(SuiteKind::Evolution, &curve, &small()).unwrap();
        assert!(r.passed, "{:#?}", r.per_op);
        let fixed = surface(r#"{"kind":"surface","builtin":{"name":"sphere","R":1}}"#);
        assert!(matches!(run_suite(SuiteKind::Evolution, &fixed, &small()), Err(Error::MissingTime(_))));
    }

    #[test]
    fn asymptotic_suites() {
        let g = surface(r#"{"kind":"surface","builtin":{"name":"torus","R":2,"r":0.7}}"#);
        let r = run_suite(SuiteKind::Asymptotics, &g, &small()).unwrap();
        assert!(r.passed, "{:#?}", r.per_op);
        let g = surface(r#"{"kind":"curve","builtin":{"name":"helix","a":1,"b":0.4}}"#);
        let r = run_suite(SuiteKind::Asymptotics, &g, &small()).unwrap();
        assert!(r.passed, "{:#?}", r.per_op);
    }

    #[test]
    fn reports_are_deterministic() {
        let g = surface(r#"{"kind":"surface","builtin":{"name":"sphere","R":1}}"#);
        let cfg = SuiteConfig { points: 6, fields: 1, ..Default::default() };
        let a = run_suite(SuiteKind::Surface, &g, &cfg).unwrap().to_json();
        let b = run_suite(SuiteKind::Surface, &g, &cfg).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"per_op\""));
    }
}
