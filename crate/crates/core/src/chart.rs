//! Parametric surfaces and curves, optionally time dependent.

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, Expr, Var};
use crate::jet::{Jet, Scalar};
use crate::linalg::{Vec3, V3};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// User-supplied surface map evaluated in both plain and jet arithmetic.
pub trait SurfaceMap: Send + Sync {
    fn eval_f64(&self, s1: f64, s2: f64, tau: f64) -> Vec3;
    fn eval_jet(&self, s1: &Jet, s2: &Jet, tau: &Jet) -> V3<Jet>;
    fn time_dependent(&self) -> bool {
        false
    }
}

/// User-supplied curve map.
pub trait CurveMap: Send + Sync {
    fn eval_f64(&self, s: f64, tau: f64) -> Vec3;
    fn eval_jet(&self, s: &Jet, tau: &Jet) -> V3<Jet>;
    fn time_dependent(&self) -> bool {
        false
    }
}

/// Scalars that can drive a [`SurfaceMap`] or [`CurveMap`].
pub trait ChartScalar: Scalar {
    fn surface(map: &dyn SurfaceMap, s1: &Self, s2: &Self, tau: &Self) -> V3<Self>;
    fn curve(map: &dyn CurveMap, s: &Self, tau: &Self) -> V3<Self>;
}

impl ChartScalar for f64 {
    fn surface(map: &dyn SurfaceMap, s1: &f64, s2: &f64, tau: &f64) -> Vec3 {
        map.eval_f64(*s1, *s2, *tau)
    }
    fn curve(map: &dyn CurveMap, s: &f64, tau: &f64) -> Vec3 {
        map.eval_f64(*s, *tau)
    }
}

impl ChartScalar for Jet {
    fn surface(map: &dyn SurfaceMap, s1: &Jet, s2: &Jet, tau: &Jet) -> V3<Jet> {
        map.eval_jet(s1, s2, tau)
    }
    fn curve(map: &dyn CurveMap, s: &Jet, tau: &Jet) -> V3<Jet> {
        map.eval_jet(s, tau)
    }
}

#[derive(Clone)]
pub enum SurfaceKind {
    Plane,
    Sphere { radius: f64 },
    Cylinder { radius: f64 },
    Torus { major: f64, minor: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Graph { f: Expr },
    Exprs { p: Box<[Expr; 3]> },
    Custom(Arc<dyn SurfaceMap>),
}

impl fmt::Debug for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceKind::Plane => write!(f, "Plane"),
            SurfaceKind::Sphere { radius } => write!(f, "Sphere({radius})"),
            SurfaceKind::Cylinder { radius } => write!(f, "Cylinder({radius})"),
            SurfaceKind::Torus { major, minor } => write!(f, "Torus({major}, {minor})"),
            SurfaceKind::Ellipsoid { a, b, c } => write!(f, "Ellipsoid({a}, {b}, {c})"),
            SurfaceKind::Graph { f: e } => write!(f, "Graph({e})"),
            SurfaceKind::Exprs { p } => write!(f, "Exprs({}, {}, {})", p[0], p[1], p[2]),
            SurfaceKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Smooth parametric surface `p(s₁, s₂[, τ])` over a parameter rectangle.
#[derive(Clone, Debug)]
pub struct SurfaceChart {
    pub kind: SurfaceKind,
    pub domain: [[f64; 2]; 2],
    pub periodic: [bool; 2],
}

const DOMAIN_TOL: f64 = 1e-9;

fn wrap_param(v: f64, lo: f64, hi: f64, periodic: bool) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    if periodic {
        let w = hi - lo;
        let mut r = (v - lo).rem_euclid(w) + lo;
        if r >= hi {
            r -= w;
        }
        Some(r)
    } else if v >= lo - DOMAIN_TOL && v <= hi + DOMAIN_TOL {
        Some(v)
    } else {
        None
    }
}

fn surface_bindings<T: Scalar>(s1: &T, s2: &T, tau: &T) -> Bindings<T> {
    Bindings::new()
        .with(Var::S1, s1.clone())
        .with(Var::S2, s2.clone())
        .with(Var::Tau, tau.clone())
}

impl SurfaceChart {
    fn builtin(kind: SurfaceKind, domain: [[f64; 2]; 2], periodic: [bool; 2]) -> Self {
        SurfaceChart {
            kind,
            domain,
            periodic,
        }
    }

    pub fn plane() -> Self {
        Self::builtin(SurfaceKind::Plane, [[-10.0, 10.0], [-10.0, 10.0]], [false, false])
    }

    /// Sphere of radius `r` with polar axis along x; `(π/2, π/2)` maps to `(0, 0, r)`.
    pub fn sphere(radius: f64) -> Self {
        Self::builtin(SurfaceKind::Sphere { radius }, [[0.0, PI], [0.0, 2.0 * PI]], [false, true])
    }

    /// Cylinder of radius `r` about the z axis.
    pub fn cylinder(radius: f64) -> Self {
        Self::builtin(
            SurfaceKind::Cylinder { radius },
            [[0.0, 2.0 * PI], [-10.0, 10.0]],
            [true, false],
        )
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        Self::builtin(
            SurfaceKind::Torus { major, minor },
            [[0.0, 2.0 * PI], [0.0, 2.0 * PI]],
            [true, true],
        )
    }

    /// Ellipsoid with semi-axes `a, b, c` along x, y, z; polar axis along z.
    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        Self::builtin(
            SurfaceKind::Ellipsoid { a, b, c },
            [[0.0, PI], [0.0, 2.0 * PI]],
            [false, true],
        )
    }

    /// Graph `z = f(x, y)`; `f` may use `x, y` or `s1, s2`.
    pub fn graph(f: Expr) -> Result<Self> {
        check_vars(&f, &[Var::X, Var::Y, Var::S1, Var::S2, Var::Tau])?;
        let f = f
            .substitute(Var::X, &Expr::Var(Var::S1))
            .substitute(Var::Y, &Expr::Var(Var::S2));
        Ok(Self::builtin(SurfaceKind::Graph { f }, [[-10.0, 10.0], [-10.0, 10.0]], [false, false]))
    }

    /// Chart from three coordinate expressions in `s1, s2` and optionally `tau`.
    pub fn from_exprs(texts: [&str; 3], domain: [[f64; 2]; 2], periodic: [bool; 2]) -> Result<Self> {
        let p = [parse_expr(texts[0])?, parse_expr(texts[1])?, parse_expr(texts[2])?];
        for e in &p {
            check_vars(e, &[Var::S1, Var::S2, Var::Tau])?;
        }
        Ok(Self::builtin(SurfaceKind::Exprs { p: Box::new(p) }, domain, periodic))
    }

    pub fn custom(map: Arc<dyn SurfaceMap>, domain: [[f64; 2]; 2], periodic: [bool; 2]) -> Self {
        Self::builtin(SurfaceKind::Custom(map), domain, periodic)
    }

    pub fn with_domain(mut self, domain: [[f64; 2]; 2], periodic: [bool; 2]) -> Self {
        self.domain = domain;
        self.periodic = periodic;
        self
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.kind {
            SurfaceKind::Graph { f } => f.depends_on(Var::Tau),
            SurfaceKind::Exprs { p } => p.iter().any(|e| e.depends_on(Var::Tau)),
            SurfaceKind::Custom(m) => m.time_dependent(),
            _ => false,
        }
    }

    pub fn is_expression_backed(&self) -> bool {
        matches!(self.kind, SurfaceKind::Graph { .. } | SurfaceKind::Exprs { .. })
    }

    /// Map parameters into the domain, wrapping periodic directions.
    pub fn wrap(&self, s: [f64; 2]) -> Result<[f64; 2]> {
        let a = wrap_param(s[0], self.domain[0][0], self.domain[0][1], self.periodic[0]);
        let b = wrap_param(s[1], self.domain[1][0], self.domain[1][1], self.periodic[1]);
        match (a, b) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(Error::OutOfDomain(s.to_vec())),
        }
    }

    /// Evaluate `p` in any chart scalar; parameters are not wrapped.
    pub fn eval<T: ChartScalar>(&self, s1: &T, s2: &T, tau: &T) -> V3<T> {
        match &self.kind {
            SurfaceKind::Plane => V3::new(s1.clone(), s2.clone(), T::cst(0.0)),
            SurfaceKind::Sphere { radius } => {
                let st = s1.sin();
                V3::new(
                    s1.cos() * *radius,
                    st.clone() * s2.cos() * *radius,
                    st * s2.sin() * *radius,
                )
            }
            SurfaceKind::Cylinder { radius } => {
                V3::new(s1.cos() * *radius, s1.sin() * *radius, s2.clone())
            }
            SurfaceKind::Torus { major, minor } => {
                let ring = s2.cos() * *minor + *major;
                V3::new(ring.clone() * s1.cos(), ring * s1.sin(), s2.sin() * *minor)
            }
            SurfaceKind::Ellipsoid { a, b, c } => {
                let st = s1.sin();
                V3::new(
                    st.clone() * s2.cos() * *a,
                    st * s2.sin() * *b,
                    s1.cos() * *c,
                )
            }
            SurfaceKind::Graph { f } => {
                let z = f
                    .eval(&surface_bindings(s1, s2, tau))
                    .expect("graph variables checked at construction");
                V3::new(s1.clone(), s2.clone(), z)
            }
            SurfaceKind::Exprs { p } => {
                let b = surface_bindings(s1, s2, tau);
                let ev = |e: &Expr| e.eval(&b).expect("chart variables checked at construction");
                V3::new(ev(&p[0]), ev(&p[1]), ev(&p[2]))
            }
            SurfaceKind::Custom(m) => T::surface(m.as_ref(), s1, s2, tau),
        }
    }

    /// Point on the surface; parameters outside a non-periodic domain are rejected.
    pub fn point(&self, s: [f64; 2], tau: f64) -> Result<Vec3> {
        let s = self.wrap(s)?;
        let p = self.eval(&s[0], &s[1], &tau);
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("chart at {s:?}")));
        }
        Ok(p)
    }

    /// Position jet in a jet space whose first two variables are `s₁, s₂`;
    /// `tau_var` selects the jet variable used for time, if any.
    pub fn jet(&self, s: [f64; 2], tau: f64, nvars: usize, deg: usize, tau_var: Option<usize>) -> V3<Jet> {
        let s1 = Jet::var(nvars, deg, 0, s[0]);
        let s2 = Jet::var(nvars, deg, 1, s[1]);
        let t = match tau_var {
            Some(v) => Jet::var(nvars, deg, v, tau),
            None => Jet::constant(tau),
        };
        self.eval(&s1, &s2, &t)
    }

    /// Partial derivatives of `p` up to `max_order` in `(s₁, s₂, τ)`.
    pub fn chart_jet(&self, s: [f64; 2], tau: f64, max_order: usize) -> Result<ChartJet> {
        let s = self.wrap(s)?;
        match &self.kind {
            SurfaceKind::Exprs { p } => {
                symbolic_jet(&[Var::S1, Var::S2, Var::Tau], p, max_order, |b| {
                    b.with(Var::S1, s[0]).with(Var::S2, s[1]).with(Var::Tau, tau)
                })
            }
            SurfaceKind::Graph { f } => {
                let p = [
                    parse_expr("s1").unwrap(),
                    parse_expr("s2").unwrap(),
                    f.clone(),
                ];
                symbolic_jet(&[Var::S1, Var::S2, Var::Tau], &p, max_order, |b| {
                    b.with(Var::S1, s[0]).with(Var::S2, s[1]).with(Var::Tau, tau)
                })
            }
            _ => {
                check_order(max_order, crate::jet::MAX_DEGREE)?;
                let p = self.jet(s, tau, 3, max_order, Some(2));
                Ok(ChartJet::from_taylor(3, max_order, &p))
            }
        }
    }
}

fn check_vars(e: &Expr, allowed: &[Var]) -> Result<()> {
    for v in e.variables() {
        if !allowed.contains(&v) {
            return Err(Error::Invalid(format!(
                "variable `{}` not allowed in `{e}`",
                v.name()
            )));
        }
    }
    Ok(())
}

fn check_order(requested: usize, max: usize) -> Result<()> {
    if requested > max {
        Err(Error::OrderUnsupported { requested, max })
    } else {
        Ok(())
    }
}

/// Maximum derivative order for symbolic chart jets.
pub const SYMBOLIC_MAX_ORDER: usize = 6;

/// Value and partial derivatives of a chart at a point, keyed by the ordered
/// sequence of parameters differentiated.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartJet {
    pub nparams: usize,
    pub max_order: usize,
    partials: BTreeMap<Vec<u8>, Vec3>,
}

fn sequences(nparams: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for seq in &layer {
            for p in 0..nparams {
                let mut s: Vec<u8> = seq.clone();
                s.push(p as u8);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn symbolic_jet(
    vars: &[Var],
    p: &[Expr; 3],
    max_order: usize,
    bind: impl Fn(Bindings<f64>) -> Bindings<f64>,
) -> Result<ChartJet> {
    check_order(max_order, SYMBOLIC_MAX_ORDER)?;
    let b = bind(Bindings::new());
    let mut partials = BTreeMap::new();
    let mut trees: BTreeMap<Vec<u8>, [Expr; 3]> = BTreeMap::new();
    trees.insert(vec![], p.clone());
    for seq in sequences(vars.len(), max_order) {
        if !seq.is_empty() {
            let parent = trees[&seq[..seq.len() - 1].to_vec()].clone();
            let v = vars[*seq.last().unwrap() as usize];
            trees.insert(seq.clone(), [parent[0].diff(v), parent[1].diff(v), parent[2].diff(v)]);
        }
        let t = &trees[&seq];
        partials.insert(
            seq.clone(),
            Vec3::new(t[0].eval_f64(&b)?, t[1].eval_f64(&b)?, t[2].eval_f64(&b)?),
        );
    }
    Ok(ChartJet {
        nparams: vars.len(),
        max_order,
        partials,
    })
}

impl ChartJet {
    fn from_taylor(nparams: usize, max_order: usize, p: &V3<Jet>) -> Self {
        let mut partials = BTreeMap::new();
        for seq in sequences(nparams, max_order) {
            let mut alpha = vec![0usize; nparams];
            for &v in &seq {
                alpha[v as usize] += 1;
            }
            partials.insert(
                seq,
                Vec3::new(p.x.partial(&alpha), p.y.partial(&alpha), p.z.partial(&alpha)),
            );
        }
        ChartJet {
            nparams,
            max_order,
            partials,
        }
    }

    /// Partial derivative along the given parameter sequence.
    pub fn get(&self, seq: &[usize]) -> Result<Vec3> {
        if seq.len() > self.max_order {
            return Err(Error::OrderUnsupported {
                requested: seq.len(),
                max: self.max_order,
            });
        }
        let key: Vec<u8> = seq.iter().map(|&v| v as u8).collect();
        self.partials
            .get(&key)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("parameter index out of range in {seq:?}")))
    }

    pub fn value(&self) -> Vec3 {
        self.partials[&vec![]]
    }

    /// All stored ordered sequences.
    pub fn sequences(&self) -> impl Iterator<Item = (&Vec<u8>, &Vec3)> {
        self.partials.iter()
    }
}

#[derive(Clone)]
pub enum CurveKind {
    Line,
    Circle { radius: f64 },
    Helix { a: f64, b: f64 },
    /// `(cos 2πs, sin 2πs, s²)`
    ParabolicHelix,
    Exprs { p: Box<[Expr; 3]> },
    Custom(Arc<dyn CurveMap>),
}

impl fmt::Debug for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKind::Line => write!(f, "Line"),
            CurveKind::Circle { radius } => write!(f, "Circle({radius})"),
            CurveKind::Helix { a, b } => write!(f, "Helix({a}, {b})"),
            CurveKind::ParabolicHelix => write!(f, "ParabolicHelix"),
            CurveKind::Exprs { p } => write!(f, "Exprs({}, {}, {})", p[0], p[1], p[2]),
            CurveKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Smooth parametric curve `p(s[, τ])` over a parameter interval.
#[derive(Clone, Debug)]
pub struct CurveChart {
    pub kind: CurveKind,
    pub domain: [f64; 2],
    pub periodic: bool,
}

impl CurveChart {
    /// Straight line along the z axis.
    pub fn line() -> Self {
        CurveChart {
            kind: CurveKind::Line,
            domain: [-10.0, 10.0],
            periodic: false,
        }
    }

    /// Circle of radius `r` in the xy-plane.
    pub fn circle(radius: f64) -> Self {
        CurveChart {
            kind: CurveKind::Circle { radius },
            domain: [0.0, 2.0 * PI],
            periodic: true,
        }
    }

    /// Helix `(a cos s, a sin s, b s)`.
    pub fn helix(a: f64, b: f64) -> Self {
        CurveChart {
            kind: CurveKind::Helix { a, b },
            domain: [0.0, 4.0 * PI],
            periodic: false,
        }
    }

    /// The curve `(cos 2πs, sin 2πs, s²)`.
    pub fn parabolic_helix() -> Self {
        CurveChart {
            kind: CurveKind::ParabolicHelix,
            domain: [0.0, 1.0],
            periodic: false,
        }
    }

    pub fn from_exprs(texts: [&str; 3], domain: [f64; 2], periodic: bool) -> Result<Self> {
        let p = [parse_expr(texts[0])?, parse_expr(texts[1])?, parse_expr(texts[2])?];
        for e in &p {
            check_vars(e, &[Var::S, Var::Tau])?;
        }
        Ok(CurveChart {
            kind: CurveKind::Exprs { p: Box::new(p) },
            domain,
            periodic,
        })
    }

    pub fn custom(map: Arc<dyn CurveMap>, domain: [f64; 2], periodic: bool) -> Self {
        CurveChart {
            kind: CurveKind::Custom(map),
            domain,
            periodic,
        }
    }

    pub fn with_domain(mut self, domain: [f64; 2], periodic: bool) -> Self {
        self.domain = domain;
        self.periodic = periodic;
        self
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.kind {
            CurveKind::Exprs { p } => p.iter().any(|e| e.depends_on(Var::Tau)),
            CurveKind::Custom(m) => m.time_dependent(),
            _ => false,
        }
    }

    pub fn wrap(&self, s: f64) -> Result<f64> {
        wrap_param(s, self.domain[0], self.domain[1], self.periodic)
            .ok_or_else(|| Error::OutOfDomain(vec![s]))
    }

    pub fn eval<T: ChartScalar>(&self, s: &T, tau: &T) -> V3<T> {
        match &self.kind {
            CurveKind::Line => V3::new(T::cst(0.0), T::cst(0.0), s.clone()),
            CurveKind::Circle { radius } => {
                V3::new(s.cos() * *radius, s.sin() * *radius, T::cst(0.0))
            }
            CurveKind::Helix { a, b } => V3::new(s.cos() * *a, s.sin() * *a, s.clone() * *b),
            CurveKind::ParabolicHelix => {
                let w = s.clone() * (2.0 * PI);
                V3::new(w.cos(), w.sin(), s.clone() * s.clone())
            }
            CurveKind::Exprs { p } => {
                let b = Bindings::new()
                    .with(Var::S, s.clone())
                    .with(Var::Tau, tau.clone());
                let ev = |e: &Expr| e.eval(&b).expect("curve variables checked at construction");
                V3::new(ev(&p[0]), ev(&p[1]), ev(&p[2]))
            }
            CurveKind::Custom(m) => T::curve(m.as_ref(), s, tau),
        }
    }

    pub fn point(&self, s: f64, tau: f64) -> Result<Vec3> {
        let s = self.wrap(s)?;
        let p = self.eval(&s, &tau);
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("curve at s = {s}")));
        }
        Ok(p)
    }

    /// Position jet with `s` as jet variable 0 and optional time variable.
    pub fn jet(&self, s: f64, tau: f64, nvars: usize, deg: usize, tau_var: Option<usize>) -> V3<Jet> {
        self.jet_of(&Jet::var(nvars, deg, 0, s), tau, nvars, deg, tau_var)
    }

    /// Position jet for an arbitrary parameter jet.
    pub fn jet_of(&self, s: &Jet, tau: f64, nvars: usize, deg: usize, tau_var: Option<usize>) -> V3<Jet> {
        let t = match tau_var {
            Some(v) => Jet::var(nvars, deg, v, tau),
            None => Jet::constant(tau),
        };
        self.eval(s, &t)
    }

    /// Partial derivatives of `p` up to `max_order` in `(s, τ)`.
    pub fn chart_jet(&self, s: f64, tau: f64, max_order: usize) -> Result<ChartJet> {
        let s = self.wrap(s)?;
        match &self.kind {
            CurveKind::Exprs { p } => symbolic_jet(&[Var::S, Var::Tau], p, max_order, |b| {
                b.with(Var::S, s).with(Var::Tau, tau)
            }),
            _ => {
                check_order(max_order, crate::jet::MAX_DEGREE)?;
                let p = self.jet(s, tau, 2, max_order, Some(1));
                Ok(ChartJet::from_taylor(2, max_order, &p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::fd_derivative;

    #[test]
    fn sphere_immersion_and_pole() {
        let c = SurfaceChart::sphere(1.0);
        let j = c.chart_jet([0.7, 2.1], 0.0, 1).unwrap();
        let t1 = j.get(&[0]).unwrap();
        let t2 = j.get(&[1]).unwrap();
        assert!(t1.cross(&t2).norm() > 0.1);
        let p = c.point([PI / 2.0, PI / 2.0], 0.0).unwrap();
        assert!((p - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn plane_second_derivatives_vanish() {
        let j = SurfaceChart::plane().chart_jet([0.3, -1.2], 0.0, 2).unwrap();
        for seq in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(j.get(&seq).unwrap(), Vec3::zero());
        }
    }

    #[test]
    fn ellipsoid_jets_match_central_differences() {
        let c = SurfaceChart::ellipsoid(1.0, 2f64.sqrt(), 2.0);
        let s = [1.1, 0.8];
        let j = c.chart_jet(s, 0.0, 2).unwrap();
        for k in 0..3 {
            let comp = |v: Vec3| v.get(k);
            let d1 = fd_derivative(|x| comp(c.eval(&x, &s[1], &0.0)), s[0], 1).unwrap();
            let d2 = fd_derivative(|x| comp(c.eval(&s[0], &x, &0.0)), s[1], 2).unwrap();
            let e1 = comp(j.get(&[0]).unwrap());
            let e2 = comp(j.get(&[1, 1]).unwrap());
            assert!((d1 - e1).abs() <= 1e-6 * e1.abs().max(1.0));
            assert!((d2 - e2).abs() <= 1e-6 * e2.abs().max(1.0));
        }
    }

    #[test]
    fn expression_chart_matches_builtin() {
        let e = SurfaceChart::from_exprs(
            ["(2+0.5*cos(s2))*cos(s1)", "(2+0.5*cos(s2))*sin(s1)", "0.5*sin(s2)"],
            [[0.0, 2.0 * PI], [0.0, 2.0 * PI]],
            [true, true],
        )
        .unwrap();
        let t = SurfaceChart::torus(2.0, 0.5);
        let a = e.chart_jet([0.4, 2.5], 0.0, 3).unwrap();
        let b = t.chart_jet([0.4, 2.5], 0.0, 3).unwrap();
        for (seq, v) in a.sequences() {
            let seq: Vec<usize> = seq.iter().map(|&x| x as usize).collect();
            assert!((*v - b.get(&seq).unwrap()).max_abs() < 1e-12, "{seq:?}");
        }
    }

    #[test]
    fn wrapping_and_domain_errors() {
        let t = SurfaceChart::torus(2.0, 0.5);
        let w = t.wrap([-0.5, 7.0]).unwrap();
        assert!((w[0] - (2.0 * PI - 0.5)).abs() < 1e-14);
        assert!((w[1] - (7.0 - 2.0 * PI)).abs() < 1e-14);
        assert!(SurfaceChart::sphere(1.0).wrap([4.0, 0.0]).is_err());
        assert!(CurveChart::parabolic_helix().chart_jet(0.5, 0.0, crate::jet::MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn helix_derivatives() {
        let h = CurveChart::helix(1.0, 0.5);
        let j = h.chart_jet(0.3, 0.0, 4).unwrap();
        assert!((j.get(&[0, 0, 0, 0]).unwrap() - Vec3::new(0.3f64.cos(), 0.3f64.sin(), 0.0)).max_abs() < 1e-14);
    }
}
