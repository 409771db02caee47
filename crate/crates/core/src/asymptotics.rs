//! Boundary-layer expansions in the rescaled normal coordinate `ξ = σ/ε`.
//!
//! Coefficients are numeric. A static operator is expanded by rescaling the
//! geometry itself: with `x = p₀ + εX̃` and `s = s₀ + εs̃`, a first-order
//! operator equals `ε⁻¹` times the same operator on the rescaled surface or
//! curve `(p(s₀ + εs̃) − p₀)/ε`, and that rescaled geometry is smooth in `ε`
//! down to `ε = 0`. Carrying `ε` as a jet variable then yields every
//! coefficient of the series at once. Time derivatives are expanded from
//! the closed-form coordinate rates, which are rational in `σ`.

use crate::chart::{CurveChart, SurfaceChart};
use crate::curve_frames::{FrenetJets, Tube, STRAIGHT_TOL};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Var};
use crate::field::{Components, FieldArgs, ScalarField, VectorField};
use crate::jet::{Jet, Scalar, MAX_DEGREE};
use crate::linalg::{Vec3, M3, V3};
use crate::surface_calculus::Collar;
use crate::surface_evolution::EvolvingSurface;
use crate::surface_frames::{SurfaceGeometry, SURFACE_DEGREE};
use crate::tube_calculus::{MovingTube, TubeGeometry};

/// Largest truncation order accepted from callers.
pub const MAX_ORDER: usize = 6;
/// Default truncation order.
pub const DEFAULT_ORDER: usize = 2;
/// Errors at or below this fraction of `max(1, |exact|)` are treated as round-off.
pub const UNDERFLOW: f64 = 1e-13;

/// `ε` values used by default in slope tests: `10^-1, 10^-1.5, 10^-2, 10^-2.5`.
pub fn default_eps() -> Vec<f64> {
    [-1.0, -1.5, -2.0, -2.5].iter().map(|e: &f64| 10f64.powf(*e)).collect()
}

const EPS_VAR: usize = 3;
const XI_VAR: usize = 2;

/// Truncated Laurent series `Σ_{k=m}^{K} cₖ εᵏ` with array-valued coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSeries {
    pub min_order: i32,
    pub order: i32,
    /// `coeffs[i]` multiplies `ε^(min_order + i)`.
    pub coeffs: Vec<Vec<f64>>,
    /// `|ξ| κ_max`; the series is only valid for `ε` below its reciprocal.
    pub xi_kappa: f64,
}

impl EpsSeries {
    pub fn new(min_order: i32, order: i32, coeffs: Vec<Vec<f64>>, xi_kappa: f64) -> Self {
        debug_assert_eq!(coeffs.len() as i32, order - min_order + 1);
        EpsSeries { min_order, order, coeffs, xi_kappa }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.len())
    }

    /// Coefficient of `εᵏ`, if within range.
    pub fn coeff(&self, k: i32) -> Option<&[f64]> {
        if k < self.min_order || k > self.order {
            return None;
        }
        Some(&self.coeffs[(k - self.min_order) as usize])
    }

    fn coeff_or_zero(&self, k: i32) -> Vec<f64> {
        self.coeff(k).map_or_else(|| vec![0.0; self.dim()], |c| c.to_vec())
    }

    pub fn check(&self, eps: f64) -> Result<()> {
        let r = eps.abs() * self.xi_kappa;
        if r >= 1.0 {
            return Err(Error::SeriesValidity(r));
        }
        Ok(())
    }

    pub fn eval(&self, eps: f64) -> Result<Vec<f64>> {
        self.check(eps)?;
        let mut out = vec![0.0; self.dim()];
        for (i, c) in self.coeffs.iter().enumerate() {
            let w = eps.powi(self.min_order + i as i32);
            for (o, x) in out.iter_mut().zip(c) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// Drop every term above `εᵏ`.
    pub fn truncate(&self, k: i32) -> EpsSeries {
        let k = k.min(self.order).max(self.min_order);
        EpsSeries {
            min_order: self.min_order,
            order: k,
            coeffs: self.coeffs[..=(k - self.min_order) as usize].to_vec(),
            xi_kappa: self.xi_kappa,
        }
    }

    pub fn add(&self, o: &EpsSeries) -> Result<EpsSeries> {
        if self.dim() != o.dim() {
            return Err(Error::Invalid("series of different shapes".into()));
        }
        let m = self.min_order.min(o.min_order);
        let k = self.order.min(o.order);
        let coeffs = (m..=k)
            .map(|j| {
                let (a, b) = (self.coeff_or_zero(j), o.coeff_or_zero(j));
                a.iter().zip(&b).map(|(x, y)| x + y).collect()
            })
            .collect();
        Ok(EpsSeries::new(m, k, coeffs, self.xi_kappa.max(o.xi_kappa)))
    }

    /// Product; a scalar series broadcasts over the other's components.
    /// The result is exact through `min(K_a + m_b, K_b + m_a)`.
    pub fn mul(&self, o: &EpsSeries) -> Result<EpsSeries> {
        let (da, db) = (self.dim(), o.dim());
        let dim = match (da, db) {
            _ if da == db => da,
            (1, d) | (d, 1) => d,
            _ => return Err(Error::Invalid("series of different shapes".into())),
        };
        let m = self.min_order + o.min_order;
        let k = (self.order + o.min_order).min(o.order + self.min_order);
        let pick = |c: &[f64], i: usize| if c.len() == 1 { c[0] } else { c[i] };
        let coeffs = (m..=k)
            .map(|j| {
                let mut acc = vec![0.0; dim];
                for ia in self.min_order..=self.order {
                    let ib = j - ia;
                    if let (Some(a), Some(b)) = (self.coeff(ia), o.coeff(ib)) {
                        for (i, x) in acc.iter_mut().enumerate() {
                            *x += pick(a, i) * pick(b, i);
                        }
                    }
                }
                acc
            })
            .collect();
        Ok(EpsSeries::new(m, k, coeffs, self.xi_kappa.max(o.xi_kappa)))
    }
}

/// Operators with boundary-layer expansions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerOp {
    GradScalar,
    GradVector,
    Div,
    ScalarLap,
    VectorLap,
    Curl,
    /// `−∇×∇×u`, the sign used by the surface operator set.
    CurlCurl,
    /// `u·∇f`.
    AdvectScalar,
    /// `u·∇u`.
    AdvectVector,
    Dt,
    DtVector,
}

impl LayerOp {
    pub const ALL: [LayerOp; 11] = [
        LayerOp::GradScalar,
        LayerOp::GradVector,
        LayerOp::Div,
        LayerOp::ScalarLap,
        LayerOp::VectorLap,
        LayerOp::Curl,
        LayerOp::CurlCurl,
        LayerOp::AdvectScalar,
        LayerOp::AdvectVector,
        LayerOp::Dt,
        LayerOp::DtVector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerOp::GradScalar => "grad_scalar",
            LayerOp::GradVector => "grad_vector",
            LayerOp::Div => "div",
            LayerOp::ScalarLap => "scalar_lap",
            LayerOp::VectorLap => "vector_lap",
            LayerOp::Curl => "curl",
            LayerOp::CurlCurl => "curl_curl",
            LayerOp::AdvectScalar => "advect_scalar",
            LayerOp::AdvectVector => "advect_vector",
            LayerOp::Dt => "dt",
            LayerOp::DtVector => "dt_vector",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let alias = match s {
            "grad" => "grad_scalar",
            "vecgrad" => "grad_vector",
            "lap" | "laplacian" => "scalar_lap",
            "veclap" => "vector_lap",
            "curlcurl" => "curl_curl",
            "dt_scalar" | "dtscalar" => "dt",
            "dtvector" => "dt_vector",
            other => other,
        };
        Self::ALL.iter().copied().find(|o| o.name() == alias)
    }

    /// Power of `ε` of the leading term.
    pub fn min_order(self) -> i32 {
        match self {
            LayerOp::ScalarLap | LayerOp::VectorLap | LayerOp::CurlCurl => -2,
            _ => -1,
        }
    }

    pub fn needs_scalar(self) -> bool {
        matches!(
            self,
            LayerOp::GradScalar | LayerOp::ScalarLap | LayerOp::AdvectScalar | LayerOp::Dt
        )
    }

    pub fn needs_vector(self) -> bool {
        !matches!(self, LayerOp::GradScalar | LayerOp::ScalarLap | LayerOp::Dt)
    }

    fn is_dt(self) -> bool {
        matches!(self, LayerOp::Dt | LayerOp::DtVector)
    }
}

/// Operands of a layer operator.
#[derive(Clone, Debug, Default)]
pub struct LayerFields {
    pub scalar: Option<ScalarField>,
    pub vector: Option<VectorField>,
}

impl LayerFields {
    pub fn scalar(f: ScalarField) -> Self {
        LayerFields { scalar: Some(f), vector: None }
    }

    pub fn vector(u: VectorField) -> Self {
        LayerFields { scalar: None, vector: Some(u) }
    }

    pub fn both(f: ScalarField, u: VectorField) -> Self {
        LayerFields { scalar: Some(f), vector: Some(u) }
    }

    fn get_scalar(&self, op: LayerOp) -> Result<&ScalarField> {
        self.scalar
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("{} needs a scalar field", op.name())))
    }

    fn get_vector(&self, op: LayerOp) -> Result<&VectorField> {
        self.vector
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("{} needs a vector field", op.name())))
    }
}

/// Surface parameters `(s₁, s₂)` or tube coordinates `(s, θ)`, plus `ξ`.
/// `tau` is read on surfaces only; a [`Tube`] carries its own time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerPoint {
    pub coords: [f64; 2],
    pub xi: f64,
    pub tau: f64,
}

impl LayerPoint {
    pub fn new(coords: [f64; 2], xi: f64) -> Self {
        LayerPoint { coords, xi, tau: 0.0 }
    }

    pub fn at_time(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// Geometry a layer expansion is taken around.
#[derive(Clone, Copy, Debug)]
pub enum LayerGeometry<'a> {
    Surface(&'a SurfaceChart),
    Tube(&'a Tube),
}

impl LayerGeometry<'_> {
    pub fn expand(&self, op: LayerOp, fields: &LayerFields, pt: &LayerPoint, order: usize) -> Result<EpsSeries> {
        match self {
            LayerGeometry::Surface(c) => expand_surface(c, op, fields, pt, order),
            LayerGeometry::Tube(t) => expand_tube(t, op, fields, pt, order),
        }
    }

    pub fn exact(&self, op: LayerOp, fields: &LayerFields, pt: &LayerPoint, eps: f64) -> Result<Vec<f64>> {
        match self {
            LayerGeometry::Surface(c) => exact_surface(c, op, fields, pt, eps),
            LayerGeometry::Tube(t) => exact_tube(t, op, fields, pt, eps),
        }
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderUnsupported { requested: order, max: MAX_ORDER });
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn flat_vec(v: V3<Jet>) -> Vec<Jet> {
    v.to_array().to_vec()
}

fn flat_mat(m: M3<Jet>) -> Vec<Jet> {
    m.m.into_iter().flatten().collect()
}

/// Read `c_{m..=K}` off jets whose `ε`-variable carries the series.
fn series_from_jets(comps: &[Jet], m: i32, order: usize, xi_kappa: f64) -> Result<EpsSeries> {
    let top = (order as i32 - m) as usize;
    for c in comps {
        if let Some(d) = c.degree() {
            if d < top {
                return Err(Error::OrderUnsupported { requested: order, max: (d as i32 + m).max(0) as usize });
            }
        }
    }
    let coeffs = (0..=top)
        .map(|j| {
            let mut alpha = [0usize; 4];
            alpha[EPS_VAR] = j;
            comps.iter().map(|c| c.partial(&alpha) / factorial(j)).collect()
        })
        .collect();
    Ok(EpsSeries::new(m, order as i32, coeffs, xi_kappa))
}

/// Jet degree for the rescaled geometry, capped so the chart can be
/// evaluated one degree higher before dividing out `ε`.
fn layer_degree(order: usize, m: i32, margin: usize) -> usize {
    ((order as i32 - m) as usize + margin).min(MAX_DEGREE - 1)
}

/// `(n̂, t₁/|t₁|, n̂ × t̂₁)`: a frame that needs no principal directions.
fn gs_frame(n: &V3<Jet>, t1: &V3<Jet>) -> [V3<Jet>; 3] {
    let e1 = t1.normalized();
    let e2 = n.cross(&e1);
    [n.clone(), e1, e2]
}

fn scalar_operand(fields: &LayerFields, op: LayerOp, args: &FieldArgs) -> Result<Option<Jet>> {
    if op.needs_scalar() {
        Ok(Some(fields.get_scalar(op)?.eval(args)?))
    } else {
        Ok(None)
    }
}

fn vector_operand(fields: &LayerFields, op: LayerOp, args: &FieldArgs) -> Result<Option<V3<Jet>>> {
    if op.needs_vector() {
        Ok(Some(fields.get_vector(op)?.eval(args)?))
    } else {
        Ok(None)
    }
}

fn collar_value(c: &Collar, op: LayerOp, f: Option<Jet>, u: Option<V3<Jet>>) -> Result<Vec<Jet>> {
    let f = || f.clone().expect("scalar operand present");
    let u = || u.clone().expect("vector operand present");
    Ok(match op {
        LayerOp::GradScalar => flat_vec(c.gradient_jet(&f())),
        LayerOp::GradVector => flat_mat(c.vector_gradient_jet(&u())),
        LayerOp::Div => vec![c.divergence_jet(&u())],
        LayerOp::ScalarLap => vec![c.laplacian_jet(&f())],
        LayerOp::VectorLap => flat_vec(c.vector_laplacian_jet(&u())),
        LayerOp::Curl => flat_vec(c.curl_jet(&u())),
        LayerOp::CurlCurl => flat_vec(c.curl_curl_jet(&u())),
        LayerOp::AdvectScalar => vec![u().dot(&c.gradient_jet(&f()))],
        LayerOp::AdvectVector => flat_vec(c.convective_jet(&u())),
        LayerOp::Dt | LayerOp::DtVector => unreachable!("time derivatives use the rate series"),
    })
}

fn tube_value(g: &TubeGeometry, op: LayerOp, f: Option<Jet>, u: Option<V3<Jet>>) -> Result<Vec<Jet>> {
    let f = || f.clone().expect("scalar operand present");
    let u = || u.clone().expect("vector operand present");
    Ok(match op {
        LayerOp::GradScalar => flat_vec(g.gradient_jet(&f())),
        LayerOp::GradVector => flat_mat(g.vector_gradient_jet(&u())),
        LayerOp::Div => vec![g.divergence_jet(&u())],
        LayerOp::ScalarLap => vec![g.laplacian_jet(&f())],
        LayerOp::VectorLap => flat_vec(g.vector_laplacian_jet(&u())),
        LayerOp::Curl => flat_vec(g.curl_jet(&u())),
        LayerOp::CurlCurl => flat_vec(-g.curl_jet(&g.curl_jet(&u()))),
        LayerOp::AdvectScalar => vec![u().dot(&g.gradient_jet(&f()))],
        LayerOp::AdvectVector => {
            let w = u();
            flat_vec(g.vector_gradient_jet(&w).vecmat(&w))
        }
        LayerOp::Dt | LayerOp::DtVector => unreachable!("time derivatives use the rate series"),
    })
}

/// Fields inside a time-derivative expansion must be functions of the
/// layer variables only, otherwise they would depend on `ε` themselves.
fn require_layer_fields(op: LayerOp, fields: &LayerFields, allowed: &[Var]) -> Result<()> {
    let bad = |depends: &dyn Fn(Var) -> bool| Var::ALL.iter().any(|v| !allowed.contains(v) && depends(*v));
    let msg = || {
        let names: Vec<_> = allowed.iter().map(|v| v.name()).collect();
        Error::Invalid(format!(
            "{} series need fields in the layer variables ({})",
            op.name(),
            names.join(", ")
        ))
    };
    if op.needs_scalar() && bad(&|v| fields.get_scalar(op).map_or(true, |f| f.depends_on(v))) {
        return Err(msg());
    }
    if op.needs_vector() {
        let u = fields.get_vector(op)?;
        if !matches!(u, VectorField::Exprs(Components::Frame, _)) || bad(&|v| u.depends_on(v)) {
            return Err(msg());
        }
    }
    Ok(())
}

fn frame_exprs(u: &VectorField) -> &[Expr; 3] {
    match u {
        VectorField::Exprs(Components::Frame, e) => e,
        _ => unreachable!("checked by require_layer_fields"),
    }
}

/// Taylor coefficients `f₀, …, f_K` of a univariate jet.
fn univariate(f: &Jet, order: usize) -> Vec<f64> {
    (0..=order).map(|k| f.partial(&[k]) / factorial(k)).collect()
}

// ---------------------------------------------------------------- surfaces

fn surface_xi_kappa(chart: &SurfaceChart, s: [f64; 2], tau: f64, xi: f64) -> Result<f64> {
    let g = SurfaceGeometry::new(chart, s, tau, false, 2, None)?;
    Ok(xi.abs() * g.kappa1.value().abs().max(g.kappa2.value().abs()))
}

/// Series of `op` at `ξ` above `s`, truncated at `εᴷ`.
pub fn expand_surface(
    chart: &SurfaceChart,
    op: LayerOp,
    fields: &LayerFields,
    pt: &LayerPoint,
    order: usize,
) -> Result<EpsSeries> {
    check_order(order)?;
    let s0 = chart.wrap(pt.coords)?;
    let xi_kappa = surface_xi_kappa(chart, s0, pt.tau, pt.xi)?;
    if op == LayerOp::DtVector {
        return Err(Error::Invalid("dt_vector expansions are only available on tubes".into()));
    }
    if op.is_dt() {
        return surface_dt_series(chart, fields, s0, pt, order, xi_kappa);
    }
    let m = op.min_order();
    let d = layer_degree(order, m, 4);
    let e = Jet::var(4, d + 1, EPS_VAR, 0.0);
    let st = [0, 1].map(|i| Jet::cst(s0[i]) + e.clone() * Jet::var(4, d + 1, i, 0.0));
    let p0 = chart.point(s0, pt.tau)?;
    let raw = chart.eval(&st[0], &st[1], &Jet::cst(pt.tau));
    let scaled = (raw - V3::<Jet>::from_f64(&p0)).map(|c| c.div_var(EPS_VAR));
    let geo = SurfaceGeometry::from_position(scaled, s0, pt.tau, 4, d, None, None)?;
    let collar = Collar::new(geo, pt.xi)?;

    let g = &collar.geo;
    let e = Jet::var(4, d, EPS_VAR, 0.0);
    let xi = collar.sigma_jet().clone();
    let x = V3::<Jet>::from_f64(&p0) + (g.p.clone() + g.n.scale(&xi)).scale(&e);
    let vars = Bindings::new()
        .with(Var::S1, Jet::cst(s0[0]) + e.clone() * Jet::var(4, d, 0, 0.0))
        .with(Var::S2, Jet::cst(s0[1]) + e.clone() * Jet::var(4, d, 1, 0.0))
        .with(Var::Xi, xi.clone())
        .with(Var::Sigma, e * xi)
        .with(Var::Tau, Jet::cst(pt.tau))
        .with(Var::X, x.x)
        .with(Var::Y, x.y)
        .with(Var::Z, x.z);
    let args = FieldArgs { vars, frame: gs_frame(&g.n, &g.t[0]) };
    let f = scalar_operand(fields, op, &args)?;
    let u = vector_operand(fields, op, &args)?;
    series_from_jets(&collar_value(&collar, op, f, u)?, m, order, xi_kappa)
}

/// Exact operator at `σ = εξ`, with `ξ` bound to `σ/ε`.
pub fn exact_surface(chart: &SurfaceChart, op: LayerOp, fields: &LayerFields, pt: &LayerPoint, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
    }
    let s0 = chart.wrap(pt.coords)?;
    let sigma = eps * pt.xi;
    let with_layer = |geo: &SurfaceGeometry, sig: &Jet| {
        let mut a = geo.field_args(sig);
        a.vars.set(Var::Xi, sig.clone() * (1.0 / eps));
        a.frame = gs_frame(&geo.n, &geo.t[0]);
        a
    };
    match op {
        LayerOp::DtVector => Err(Error::Invalid("dt_vector expansions are only available on tubes".into())),
        LayerOp::Dt => {
            let mc = EvolvingSurface::from_chart(chart.clone())?.collar(s0, sigma, pt.tau)?;
            let args = with_layer(&mc.collar.geo, mc.collar.sigma_jet());
            let f = fields.get_scalar(op)?.eval(&args)?;
            Ok(vec![mc.dt_scalar_jet(&f).value()])
        }
        _ => {
            let geo = SurfaceGeometry::new(chart, s0, pt.tau, false, SURFACE_DEGREE, None)?;
            let collar = Collar::new(geo, sigma)?;
            let args = with_layer(&collar.geo, collar.sigma_jet());
            let f = scalar_operand(fields, op, &args)?;
            let u = vector_operand(fields, op, &args)?;
            Ok(collar_value(&collar, op, f, u)?.iter().map(Jet::value).collect())
        }
    }
}

/// `∂ₜf = ∂τf − v_σ∂σf + w(σ)·∇⊥f` with `w(σ) = σJ⁻¹∇⊥v_σ − v⊥` expanded in `σ = εξ`.
fn surface_dt_series(
    chart: &SurfaceChart,
    fields: &LayerFields,
    s0: [f64; 2],
    pt: &LayerPoint,
    order: usize,
    xi_kappa: f64,
) -> Result<EpsSeries> {
    let op = LayerOp::Dt;
    require_layer_fields(op, fields, &[Var::S1, Var::S2, Var::Xi, Var::Tau])?;
    let mc = EvolvingSurface::from_chart(chart.clone())?.collar(s0, 0.0, pt.tau)?;
    let geo = &mc.collar.geo;
    let v_sigma = mc.v_sigma.value();
    let v_perp = mc.v_perp.value();
    let g = geo.grad_perp(&mc.v_sigma).value();
    let shape = mc.collar.shape.value();
    let tr = shape.trace();
    let gauss = 0.5 * (tr * tr - shape.matmul(&shape).trace());
    let k_hat_g = g.scale(&tr) - shape.matvec(&g);
    let dual = [geo.dual[0].value(), geo.dual[1].value()];

    let vars = Bindings::new()
        .with(Var::S1, Jet::var(4, 2, 0, s0[0]))
        .with(Var::S2, Jet::var(4, 2, 1, s0[1]))
        .with(Var::Xi, Jet::var(4, 2, XI_VAR, pt.xi))
        .with(Var::Tau, Jet::var(4, 2, 3, pt.tau));
    let cst = |v: Vec3| V3::<Jet>::from_f64(&v);
    let frame = gs_frame(&cst(geo.n.value()), &cst(geo.t[0].value()));
    let f = fields.get_scalar(op)?.eval(&FieldArgs { vars, frame })?;
    let grad_perp = dual[0].scale(&f.d(0).value()) + dual[1].scale(&f.d(1).value());
    let f_xi = f.d(XI_VAR).value();
    let f_tau = f.d(3).value();

    let sg = Jet::var(1, order + 1, 0, 0.0);
    let det = Jet::cst(1.0) - sg.clone() * tr + sg.clone() * sg.clone() * gauss;
    let q = det.recip();
    let a = univariate(&(sg.clone() * q.clone()), order);
    let b = univariate(&(sg.clone() * sg * q), order);
    let mut coeffs = vec![vec![-v_sigma * f_xi]];
    for k in 0..=order {
        let w = g.scale(&a[k]) - k_hat_g.scale(&b[k]);
        let c = if k == 0 {
            f_tau - v_perp.dot(&grad_perp)
        } else {
            pt.xi.powi(k as i32) * w.dot(&grad_perp)
        };
        coeffs.push(vec![c]);
    }
    Ok(EpsSeries::new(-1, order as i32, coeffs, xi_kappa))
}

// ------------------------------------------------------------------- tubes

fn tube_phi(tube: &Tube, s: f64) -> Result<f64> {
    if tube.bishop.rotating {
        tube.bishop.phi(s)
    } else {
        Ok(tube.bishop.phi0)
    }
}

/// Frenet jets of the rescaled curve `(p(s₀ + εs̃) − p₀)/ε` in `(s̃, θ, ξ, ε)`.
/// Its curvature and torsion are `ε` times the true ones.
fn scaled_frenet(curve: &CurveChart, s0: f64, tau: f64, d: usize) -> Result<FrenetJets> {
    let e = Jet::var(4, d + 1, EPS_VAR, 0.0);
    let s = Jet::cst(s0) + e * Jet::var(4, d + 1, 0, 0.0);
    let p0 = curve.point(s0, tau)?;
    let raw = curve.eval(&s, &Jet::cst(tau));
    let p = (raw - V3::<Jet>::from_f64(&p0)).map(|c| c.div_var(EPS_VAR));
    let dp = p.d(0);
    let speed = dp.norm();
    if !(speed.value() > 0.0) {
        return Err(Error::Degenerate(vec![s0]));
    }
    let inv = speed.recip();
    let t = dp.scale(&inv);
    // d t̂/ds̃ = εκn̂|p′|, so dividing out ε leaves the true curvature vector
    let kn = t.d(0).scale(&inv).map(|c| c.div_var(EPS_VAR));
    if kn.value().norm() < STRAIGHT_TOL {
        return FrenetJets::from_position(p, s0, tau);
    }
    let kappa = kn.norm();
    let n = kn.scale(&kappa.recip());
    let b = t.cross(&n);
    let omega = n.d(0).scale(&inv).dot(&b);
    let e = Jet::var(4, d, EPS_VAR, 0.0);
    Ok(FrenetJets {
        s: s0,
        tau,
        p,
        speed,
        t,
        n,
        b,
        kappa: kappa * e,
        omega,
        straight: false,
    })
}

fn tube_xi_kappa(tube: &Tube, s: f64, xi: f64) -> Result<f64> {
    let fr = FrenetJets::new(&tube.curve, s, tube.tau(), 1, 3, None)?;
    Ok(xi.abs() * fr.kappa.value().abs())
}

/// Series of `op` at `(s, θ, ξ)`, truncated at `εᴷ`.
pub fn expand_tube(tube: &Tube, op: LayerOp, fields: &LayerFields, pt: &LayerPoint, order: usize) -> Result<EpsSeries> {
    check_order(order)?;
    let s0 = tube.curve.wrap(pt.coords[0])?;
    let theta = pt.coords[1];
    let tau = tube.tau();
    let xi_kappa = tube_xi_kappa(tube, s0, pt.xi)?;
    if op.is_dt() {
        return tube_dt_series(tube, op, fields, s0, pt, order, xi_kappa);
    }
    let m = op.min_order();
    let d = layer_degree(order, m, 5);
    let fr = scaled_frenet(&tube.curve, s0, tau, d)?;
    let phi = if tube.bishop.rotating {
        Jet::cst(tube_phi(tube, s0)?) - (fr.omega.clone() * fr.speed.clone()).integrate(0)
    } else {
        Jet::cst(tube.bishop.phi0)
    };
    let p0 = V3::<Jet>::from_f64(&tube.curve.point(s0, tau)?);
    let geo = TubeGeometry::from_parts(fr, phi, theta, pt.xi, 4, d, false)?;

    let e = Jet::var(4, d, EPS_VAR, 0.0);
    let xi = geo.sigma_jet().clone();
    let x = p0 + geo.x.scale(&e);
    let vars = Bindings::new()
        .with(Var::S, Jet::cst(s0) + e.clone() * Jet::var(4, d, 0, 0.0))
        .with(Var::Theta, Jet::var(4, d, 1, theta))
        .with(Var::Xi, xi.clone())
        .with(Var::Sigma, e * xi)
        .with(Var::Tau, Jet::cst(tau))
        .with(Var::X, x.x)
        .with(Var::Y, x.y)
        .with(Var::Z, x.z);
    let args = FieldArgs { vars, frame: geo.frame() };
    let f = scalar_operand(fields, op, &args)?;
    let u = vector_operand(fields, op, &args)?;
    series_from_jets(&tube_value(&geo, op, f, u)?, m, order, xi_kappa)
}

/// Exact operator at `σ = εξ`, with `ξ` bound to `σ/ε`.
pub fn exact_tube(tube: &Tube, op: LayerOp, fields: &LayerFields, pt: &LayerPoint, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("ε must be positive, got {eps}")));
    }
    let (s, theta, sigma) = (pt.coords[0], pt.coords[1], eps * pt.xi);
    let with_layer = |geo: &TubeGeometry| {
        let mut a = geo.field_args();
        a.vars.set(Var::Xi, geo.sigma_jet().clone() * (1.0 / eps));
        a
    };
    if op.is_dt() {
        let mt = MovingTube::new(tube, s, theta, sigma)?;
        let args = with_layer(&mt.geo);
        return Ok(if op == LayerOp::Dt {
            vec![mt.dt_scalar_jet(&fields.get_scalar(op)?.eval(&args)?).value()]
        } else {
            mt.dt_vector_jet(&fields.get_vector(op)?.eval(&args)?).value().to_array().to_vec()
        });
    }
    let geo = TubeGeometry::new(tube, s, theta, sigma)?;
    let args = with_layer(&geo);
    let f = scalar_operand(fields, op, &args)?;
    let u = vector_operand(fields, op, &args)?;
    Ok(tube_value(&geo, op, f, u)?.iter().map(Jet::value).collect())
}

/// Layer derivatives of one field at the expansion point.
struct LayerJet {
    value: f64,
    ds: f64,
    dtheta: f64,
    dxi: f64,
    dtau: f64,
}

/// Coordinate-rate series of a moving tube: `∂ₜs = −(v_t − σα′)/(|t|h_s)`,
/// `∂ₜσ = −v_σ`, `∂ₜθ = −γ′ − v_θ/σ`, and the frame rates `a, b, c`.
fn tube_dt_series(
    tube: &Tube,
    op: LayerOp,
    fields: &LayerFields,
    s0: f64,
    pt: &LayerPoint,
    order: usize,
    xi_kappa: f64,
) -> Result<EpsSeries> {
    require_layer_fields(op, fields, &[Var::S, Var::Theta, Var::Xi, Var::Tau])?;
    let theta = pt.coords[1];
    let xi = pt.xi;
    // rates at the foot do not depend on σ; any interior σ will do
    let mt = MovingTube::new(tube, s0, theta, 1e-6)?;
    let g = &mt.geo;
    let kappa = g.fr.kappa.value();
    let (cs, sn) = (g.cs.value(), g.sn.value());
    let speed = g.fr.speed.value();
    let v_t = mt.kin.v_t.value();
    let (alpha, beta, gamma) = (mt.alpha_p.value(), mt.beta_p.value(), mt.gamma_p.value());
    let (v_sigma, v_theta) = (mt.v_sigma.value(), mt.v_theta.value());

    let sg = Jet::var(1, order + 1, 0, 0.0);
    let q = (Jet::cst(1.0) - sg.clone() * (kappa * cs)).recip();
    let sdot = univariate(&(-(Jet::cst(v_t) - sg.clone() * alpha) * q.clone() * (1.0 / speed)), order);
    let ra = univariate(&(q.clone() * (alpha - v_t * kappa * cs)), order);
    let rb = univariate(&(Jet::cst(beta) - (sg * alpha - v_t) * q * (kappa * sn)), order);
    let pw = |k: usize| xi.powi(k as i32);

    let vars = Bindings::new()
        .with(Var::S, Jet::var(4, 2, 0, s0))
        .with(Var::Theta, Jet::var(4, 2, 1, theta))
        .with(Var::Xi, Jet::var(4, 2, XI_VAR, xi))
        .with(Var::Tau, Jet::var(4, 2, 3, tube.tau()));
    let layer = |e: &Expr| -> Result<LayerJet> {
        let f = e.eval(&vars)?;
        Ok(LayerJet {
            value: f.value(),
            ds: f.d(0).value(),
            dtheta: f.d(1).value(),
            dxi: f.d(XI_VAR).value(),
            dtau: f.d(3).value(),
        })
    };
    // series of ∂ₜ applied to one layer function, as coefficients of ε^{-1..=K}
    let dt_of = |f: &LayerJet| -> Vec<f64> {
        let mut c = vec![-v_sigma * f.dxi - v_theta / xi * f.dtheta];
        c.push(f.dtau - gamma * f.dtheta + sdot[0] * f.ds);
        for k in 1..=order {
            c.push(sdot[k] * pw(k) * f.ds);
        }
        c
    };

    if op == LayerOp::Dt {
        let f = match fields.get_scalar(op)? {
            ScalarField::Expr(e) => layer(e)?,
            ScalarField::Func(_) => unreachable!("checked by require_layer_fields"),
        };
        let coeffs = dt_of(&f).into_iter().map(|c| vec![c]).collect();
        return Ok(EpsSeries::new(-1, order as i32, coeffs, xi_kappa));
    }

    let ex = frame_exprs(fields.get_vector(op)?);
    let [us, ug, ut] = [layer(&ex[0])?, layer(&ex[1])?, layer(&ex[2])?];
    let (mut ts, mut tg, mut tt) = (dt_of(&us), dt_of(&ug), dt_of(&ut));
    // c = −v_θ/σ contributes at ε⁻¹ only; a and b start at ε⁰
    let c_m1 = -v_theta / xi;
    tg[0] -= c_m1 * ut.value;
    tt[0] += c_m1 * ug.value;
    for k in 0..=order {
        let (a, b) = (ra[k] * pw(k), rb[k] * pw(k));
        ts[k + 1] += -a * ug.value - b * ut.value;
        tg[k + 1] += a * us.value;
        tt[k + 1] += b * us.value;
    }
    let (es, eg, et) = (g.t_s.value(), g.t_sigma.value(), g.t_theta.value());
    let coeffs = (0..ts.len())
        .map(|i| (es.scale(&ts[i]) + eg.scale(&tg[i]) + et.scale(&tt[i])).to_array().to_vec())
        .collect();
    Ok(EpsSeries::new(-1, order as i32, coeffs, xi_kappa))
}

/// Leading Laplacian coefficients `(c₋₂, c₋₁)` on a surface:
/// `∂ξ²f` and `−(κ₁+κ₂)∂ξf`. The field must be written in layer variables.
pub fn surface_laplacian_leading(chart: &SurfaceChart, f: &ScalarField, pt: &LayerPoint) -> Result<[f64; 2]> {
    let s0 = chart.wrap(pt.coords)?;
    let geo = SurfaceGeometry::new(chart, s0, pt.tau, false, 2, None)?;
    let tr = geo.kappa1.value() + geo.kappa2.value();
    let vars = Bindings::new()
        .with(Var::S1, Jet::cst(s0[0]))
        .with(Var::S2, Jet::cst(s0[1]))
        .with(Var::Xi, Jet::var(1, 2, 0, pt.xi))
        .with(Var::Tau, Jet::cst(pt.tau));
    let frame = geo.frame().map(|v| V3::<Jet>::from_f64(&v.value()));
    let j = f.eval(&FieldArgs { vars, frame })?;
    Ok([j.partial(&[2]), -tr * j.partial(&[1])])
}

/// Leading Laplacian coefficients `(c₋₂, c₋₁)` on a tube:
/// `∂ξ²f + ∂ξf/ξ + ∂θ²f/ξ²` and `−κ cs ∂ξf + (κ sn/ξ)∂θf`.
pub fn tube_laplacian_leading(tube: &Tube, f: &ScalarField, pt: &LayerPoint) -> Result<[f64; 2]> {
    let (s, theta, xi) = (pt.coords[0], pt.coords[1], pt.xi);
    let fr = FrenetJets::new(&tube.curve, s, tube.tau(), 1, 3, None)?;
    let kappa = fr.kappa.value();
    let ang = theta + tube_phi(tube, fr.s)?;
    let (cs, sn) = (ang.cos(), ang.sin());
    let vars = Bindings::new()
        .with(Var::S, Jet::cst(fr.s))
        .with(Var::Theta, Jet::var(2, 2, 0, theta))
        .with(Var::Xi, Jet::var(2, 2, 1, xi))
        .with(Var::Tau, Jet::cst(tube.tau()));
    let z = V3::<Jet>::zero();
    let j = f.eval(&FieldArgs { vars, frame: [z.clone(), z.clone(), z] })?;
    let (f_th, f_xi) = (j.partial(&[1, 0]), j.partial(&[0, 1]));
    let (f_thth, f_xixi) = (j.partial(&[2, 0]), j.partial(&[0, 2]));
    Ok([
        f_xixi + f_xi / xi + f_thth / (xi * xi),
        -kappa * cs * f_xi + kappa * sn / xi * f_th,
    ])
}

/// How truncation errors are normalised before fitting a slope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorScale {
    /// `|exact − series|`, expected slope `K + 1`.
    Absolute,
    /// `εᵐ`-normalised error `ε⁻ᵐ|exact − series|`, expected slope `K + 1 − m`.
    Leading,
}

impl ErrorScale {
    pub fn expected_slope(self, series: &EpsSeries) -> f64 {
        let k = series.order as f64 + 1.0;
        match self {
            ErrorScale::Absolute => k,
            ErrorScale::Leading => k - series.min_order as f64,
        }
    }
}

/// Result of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeReport {
    pub eps: Vec<f64>,
    /// Scaled errors, one per `ε`.
    pub errors: Vec<f64>,
    /// Whether each point was kept (not lost to round-off).
    pub used: Vec<bool>,
    /// Least-squares slope of `log error` against `log ε`; `None` when
    /// fewer than two points survive.
    pub slope: Option<f64>,
    pub expected: f64,
    /// Every error fell below the round-off floor.
    pub exact: bool,
}

impl SlopeReport {
    pub fn within(&self, tol: f64) -> bool {
        self.exact || self.slope.is_some_and(|s| (s - self.expected).abs() <= tol)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compare a series with exact values over `eps` and fit the error slope.
pub fn convergence_slope(
    series: &EpsSeries,
    exact: impl Fn(f64) -> Result<Vec<f64>>,
    eps: &[f64],
    scale: ErrorScale,
) -> Result<SlopeReport> {
    convergence_slope_many(std::slice::from_ref(series), |_, e| exact(e), eps, scale)
}

/// Slope of the largest error over several series sharing one leading
/// order. A single point can sit where the next error coefficient
/// vanishes; the maximum over a sample set does not.
pub fn convergence_slope_many(
    series: &[EpsSeries],
    exact: impl Fn(usize, f64) -> Result<Vec<f64>>,
    eps: &[f64],
    scale: ErrorScale,
) -> Result<SlopeReport> {
    let first = series.first().ok_or_else(|| Error::Invalid("no series to compare".into()))?;
    if series.iter().any(|s| s.min_order != first.min_order) {
        return Err(Error::Invalid("series differ in leading order".into()));
    }
    let mut errors = Vec::with_capacity(eps.len());
    let mut used = Vec::with_capacity(eps.len());
    for &e in eps {
        let (mut diff, mut mag) = (0.0f64, 1.0f64);
        for (i, ser) in series.iter().enumerate() {
            let approx = ser.eval(e)?;
            let truth = exact(i, e)?;
            diff = truth.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(diff, f64::max);
            mag = truth.iter().map(|v| v.abs()).fold(mag, f64::max);
        }
        used.push(diff > UNDERFLOW * mag);
        errors.push(match scale {
            ErrorScale::Absolute => diff,
            ErrorScale::Leading => diff * e.powi(-first.min_order),
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(&errors)
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|((a, b), _)| (*a, *b))
        .unzip();
    Ok(SlopeReport {
        eps: eps.to_vec(),
        slope: log_log_slope(&x, &y),
        expected: scale.expected_slope(first),
        // one surviving error leaves no slope; the series already matches to round-off elsewhere
        exact: x.len() < 2,
        errors,
        used,
    })
}

/// Expand and run the slope test in one go.
pub fn slope_test(
    geometry: LayerGeometry<'_>,
    op: LayerOp,
    fields: &LayerFields,
    pt: &LayerPoint,
    order: usize,
    eps: &[f64],
    scale: ErrorScale,
) -> Result<(EpsSeries, SlopeReport)> {
    let series = geometry.expand(op, fields, pt, order)?;
    let report = convergence_slope(&series, |e| geometry.exact(op, fields, pt, e), eps, scale)?;
    Ok((series, report))
}

/// Slope test over a set of layer points, fitted to the largest error.
pub fn slope_test_many(
    geometry: LayerGeometry<'_>,
    op: LayerOp,
    fields: &LayerFields,
    pts: &[LayerPoint],
    order: usize,
    eps: &[f64],
    scale: ErrorScale,
) -> Result<(Vec<EpsSeries>, SlopeReport)> {
    let series = pts.iter().map(|pt| geometry.expand(op, fields, pt, order)).collect::<Result<Vec<_>>>()?;
    let report = convergence_slope_many(&series, |i, e| geometry.exact(op, fields, &pts[i], e), eps, scale)?;
    Ok((series, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(t: &str) -> ScalarField {
        ScalarField::parse(t).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn series_arithmetic() {
        let a = EpsSeries::new(-1, 1, vec![vec![1.0], vec![2.0], vec![3.0]], 0.0);
        let b = EpsSeries::new(0, 2, vec![vec![1.0], vec![-1.0], vec![0.5]], 0.0);
        let p = a.mul(&b).unwrap();
        assert_eq!((p.min_order, p.order), (-1, 1));
        assert_eq!(p.coeffs, vec![vec![1.0], vec![1.0], vec![1.5]]);
        let s = a.add(&b).unwrap();
        assert_eq!((s.min_order, s.order), (-1, 1));
        assert_eq!(s.coeffs, vec![vec![1.0], vec![3.0], vec![2.0]]);
        assert_eq!(a.truncate(0).coeffs.len(), 2);
        let v = a.eval(0.5).unwrap()[0];
        assert!((v - (2.0 + 2.0 + 1.5)).abs() < 1e-15);
        let bad = EpsSeries { xi_kappa: 4.0, ..a };
        assert!(matches!(bad.eval(0.25), Err(Error::SeriesValidity(_))));
    }

    #[test]
    fn plane_laplacian_is_exact() {
        let chart = SurfaceChart::plane();
        let f = LayerFields::scalar(sf("sin(s1)*xi*xi + s2*xi + cos(s2)"));
        let pt = LayerPoint::new([0.3, -0.2], 0.7);
        let ser = expand_surface(&chart, LayerOp::ScalarLap, &f, &pt, 2).unwrap();
        let c = |k| ser.coeff(k).unwrap()[0];
        assert!(close(c(-2), 2.0 * 0.3f64.sin(), 1e-12));
        assert!(c(-1).abs() < 1e-12);
        // ∇⊥² acting on s-dependence only
        let want0 = -0.3f64.sin() * 0.49 - (-0.2f64).cos();
        assert!(close(c(0), want0, 1e-12), "{} {}", c(0), want0);
        assert!(c(1).abs() < 1e-12 && c(2).abs() < 1e-12);
        let geo = LayerGeometry::Surface(&chart);
        let r = convergence_slope(&ser, |e| geo.exact(LayerOp::ScalarLap, &f, &pt, e), &default_eps(), ErrorScale::Leading).unwrap();
        assert!(r.exact, "{r:?}");
    }

    #[test]
    fn sphere_laplacian_leading_terms() {
        let r = 1.5;
        let chart = SurfaceChart::sphere(r);
        let f = sf("xi*xi*cos(s2) + 3*xi + s1");
        let pt = LayerPoint::new([1.1, 0.4], 0.6);
        let ser = expand_surface(&chart, LayerOp::ScalarLap, &LayerFields::scalar(f.clone()), &pt, 2).unwrap();
        let fxi = 2.0 * 0.6 * 0.4f64.cos() + 3.0;
        assert!(close(ser.coeff(-1).unwrap()[0], 2.0 / r * fxi, 1e-10));
        let lead = surface_laplacian_leading(&chart, &f, &pt).unwrap();
        assert!(close(ser.coeff(-2).unwrap()[0], lead[0], 1e-10));
        assert!(close(ser.coeff(-1).unwrap()[0], lead[1], 1e-10));
    }

    #[test]
    fn sphere_radial_slopes() {
        let chart = SurfaceChart::sphere(1.0);
        let f = LayerFields::scalar(sf("x*y + z*z*x + sin(xi)"));
        let pt = LayerPoint::new([0.9, 0.3], 0.8);
        for k in 0..=2 {
            let (_, r) = slope_test(LayerGeometry::Surface(&chart), LayerOp::ScalarLap, &f, &pt, k, &default_eps(), ErrorScale::Absolute).unwrap();
            assert!(r.within(0.2), "K = {k}: {r:?}");
        }
    }

    #[test]
    fn torus_slopes() {
        let chart = SurfaceChart::torus(2.0, 0.7);
        let pt = LayerPoint::new([0.4, 1.0], 0.9);
        let f = sf("sin(x)*y + z*z + xi*s1");
        let u = VectorField::ambient(["y*z", "sin(x) + xi", "x*x"]).unwrap();
        let fields = LayerFields::both(f, u);
        for op in [LayerOp::ScalarLap, LayerOp::Div, LayerOp::AdvectScalar, LayerOp::AdvectVector, LayerOp::CurlCurl, LayerOp::GradVector] {
            for k in 0..=2 {
                let (_, r) = slope_test(LayerGeometry::Surface(&chart), op, &fields, &pt, k, &default_eps(), ErrorScale::Leading).unwrap();
                assert!(r.within(0.2), "{} K = {k}: {r:?}", op.name());
            }
        }
    }

    #[test]
    fn surface_dt_series_matches_exact() {
        let chart = SurfaceChart::from_exprs(
            ["(2 + (0.7 + 0.1*tau)*cos(s2))*cos(s1)", "(2 + (0.7 + 0.1*tau)*cos(s2))*sin(s1) + 0.2*tau", "(0.7 + 0.05*tau*cos(s1))*sin(s2)"],
            [[0.0, 2.0 * std::f64::consts::PI], [0.0, 2.0 * std::f64::consts::PI]],
            [true, true],
        )
        .unwrap();
        let f = LayerFields::scalar(sf("sin(s1)*cos(s2)*xi + xi*xi*tau + s2"));
        let pt = LayerPoint::new([0.5, 0.8], 0.9).at_time(0.3);
        for k in 0..=2 {
            let (_, r) = slope_test(LayerGeometry::Surface(&chart), LayerOp::Dt, &f, &pt, k, &default_eps(), ErrorScale::Leading).unwrap();
            assert!(r.within(0.2), "K = {k}: {r:?}");
        }
        let bad = LayerFields::scalar(sf("x + xi"));
        assert!(expand_surface(&chart, LayerOp::Dt, &bad, &pt, 1).is_err());
    }

    #[test]
    fn circle_tube_laplacian_leading_terms() {
        let tube = Tube::new(CurveChart::circle(2.0), 0.0).unwrap();
        let f = sf("xi*xi*cos(theta) + sin(s)*xi + theta");
        let pt = LayerPoint::new([0.7, 1.2], 0.5);
        let ser = expand_tube(&tube, LayerOp::ScalarLap, &LayerFields::scalar(f.clone()), &pt, 1).unwrap();
        let lead = tube_laplacian_leading(&tube, &f, &pt).unwrap();
        assert!(close(ser.coeff(-2).unwrap()[0], lead[0], 1e-10), "{ser:?} {lead:?}");
        assert!(close(ser.coeff(-1).unwrap()[0], lead[1], 1e-10), "{ser:?} {lead:?}");
    }

    #[test]
    fn straight_tube_matches_cylindrical_polar() {
        let tube = Tube::new(CurveChart::line(), 0.0).unwrap();
        let f = sf("xi*xi*xi*cos(theta) + s*s");
        let pt = LayerPoint::new([0.5, 0.4], 0.6);
        let ser = expand_tube(&tube, LayerOp::ScalarLap, &LayerFields::scalar(f), &pt, 2).unwrap();
        let (x, th) = (0.6f64, 0.4f64);
        // ∂ξ² + ∂ξ/ξ + ∂θ²/ξ² of ξ³cosθ is 8ξ cosθ; ∂ₛ² of s² is 2
        assert!(close(ser.coeff(-2).unwrap()[0], 8.0 * x * th.cos(), 1e-10));
        assert!(ser.coeff(-1).unwrap()[0].abs() < 1e-10);
        assert!(close(ser.coeff(0).unwrap()[0], 2.0, 1e-10));
        assert!(ser.coeff(1).unwrap()[0].abs() < 1e-10 && ser.coeff(2).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn helix_tube_slopes() {
        let tube = Tube::new(CurveChart::helix(1.0, 0.4), 0.3).unwrap();
        let pt = LayerPoint::new([2.0, 0.9], 0.8);
        let f = sf("x*y + sin(z) + xi*theta");
        let u = VectorField::ambient(["y*z", "x + z*z", "sin(x*y)"]).unwrap();
        let fields = LayerFields::both(f, u);
        for op in [LayerOp::ScalarLap, LayerOp::Div, LayerOp::AdvectScalar, LayerOp::AdvectVector, LayerOp::VectorLap, LayerOp::Curl] {
            for k in 0..=2 {
                let (_, r) = slope_test(LayerGeometry::Tube(&tube), op, &fields, &pt, k, &default_eps(), ErrorScale::Leading).unwrap();
                assert!(r.within(0.2), "{} K = {k}: {r:?}", op.name());
            }
        }
    }

    #[test]
    fn tube_dt_series_match_exact() {
        let curve = CurveChart::from_exprs(
            ["(1 + 0.2*tau)*cos(s) + 0.1*tau*s", "sin(s) + 0.3*tau*tau", "0.4*s + 0.1*tau*sin(2*s)"],
            [-10.0, 10.0],
            false,
        )
        .unwrap();
        let tube = Tube::at_time(curve, 0.2, 0.1).unwrap();
        let pt = LayerPoint::new([0.6, 1.1], 0.7);
        let f = LayerFields::scalar(sf("sin(s)*xi + cos(theta)*xi*xi + tau*s"));
        let u = LayerFields::vector(VectorField::frame(["xi*cos(theta)", "s*xi", "tau + xi*xi"]).unwrap());
        for k in 0..=2 {
            let (_, r) = slope_test(LayerGeometry::Tube(&tube), LayerOp::Dt, &f, &pt, k, &default_eps(), ErrorScale::Leading).unwrap();
            assert!(r.within(0.2), "dt K = {k}: {r:?}");
            let (_, r) = slope_test(LayerGeometry::Tube(&tube), LayerOp::DtVector, &u, &pt, k, &default_eps(), ErrorScale::Leading).unwrap();
            assert!(r.within(0.2), "dt_vector K = {k}: {r:?}");
        }
    }

    #[test]
    fn validity_and_order_limits() {
        let chart = SurfaceChart::sphere(1.0);
        let f = LayerFields::scalar(sf("xi"));
        let pt = LayerPoint::new([1.0, 0.2], 5.0);
        let ser = expand_surface(&chart, LayerOp::ScalarLap, &f, &pt, 1).unwrap();
        assert!(matches!(ser.eval(0.3), Err(Error::SeriesValidity(_))));
        assert!(matches!(
            expand_surface(&chart, LayerOp::ScalarLap, &f, &pt, MAX_ORDER + 1),
            Err(Error::OrderUnsupported { .. })
        ));
        for op in LayerOp::ALL {
            assert_eq!(LayerOp::from_name(op.name()), Some(op));
        }
        assert_eq!(LayerOp::from_name("lap"), Some(LayerOp::ScalarLap));
    }
}
