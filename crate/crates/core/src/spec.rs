//! JSON geometry and field specifications.
//!
//! Geometry:
//! ```json
//! { "kind": "surface", "builtin": { "name": "torus", "R": 2, "r": 0.7 } }
//! { "kind": "curve", "name": "coil", "exprs": ["cos(s)", "sin(s)", "0.3*s"], "domain": [[0, 12]], "phi0": 0 }
//! ```
//! Fields:
//! ```json
//! { "scalar": "sin(s1)*sigma" }
//! { "vector": ["sigma", "0", "x*y"], "pullback": true }
//! ```
//! With `pullback` (the default) vector components are taken in the local
//! frame; otherwise they are Cartesian.

use crate::chart::{CurveChart, SurfaceChart};
use crate::curve_frames::Tube;
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::field::{Components, ScalarField, VectorField};
use crate::surface_calculus::Operand;
use crate::surface_evolution::{EvolvingSurface, SurfaceMotion};
use serde_json::{Map, Value};
use std::path::Path;

/// A surface with its evaluation time and optional prescribed motion.
#[derive(Clone, Debug)]
pub struct SurfaceSpec {
    pub chart: SurfaceChart,
    pub tau: f64,
    pub motion: Option<SurfaceMotion>,
}

impl SurfaceSpec {
    /// Evolving surface, using the explicit motion when one is given.
    pub fn evolving(&self) -> Result<EvolvingSurface> {
        match &self.motion {
            Some(m) => EvolvingSurface::new(self.chart.clone(), m.clone()),
            None => EvolvingSurface::from_chart(self.chart.clone()),
        }
    }
}

/// A centre curve with its evaluation time and Bishop settings.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    pub chart: CurveChart,
    pub tau: f64,
    pub phi0: f64,
    /// `false` freezes the Bishop angle at `phi0` (Frenet-relative angle).
    pub rotating: bool,
}

impl CurveSpec {
    pub fn tube(&self) -> Result<Tube> {
        if self.rotating {
            Tube::at_time(self.chart.clone(), self.tau, self.phi0)
        } else {
            Ok(Tube::frenet_relative(self.chart.clone(), self.tau, self.phi0))
        }
    }
}

#[derive(Clone, Debug)]
pub enum Geometry {
    Surface(SurfaceSpec),
    Curve(CurveSpec),
}

/// Parsed geometry file.
#[derive(Clone, Debug)]
pub struct GeometrySpec {
    /// Builtin name or `exprs`; used in reports.
    pub name: String,
    pub geometry: Geometry,
}

fn err(field: &str, msg: impl Into<String>) -> Error {
    Error::Spec {
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn num(v: &Value, field: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| err(field, "expected a number"))
}

fn opt_num(obj: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    obj.get(key).map_or(Ok(default), |v| num(v, key))
}

fn param(obj: &Map<String, Value>, keys: &[&str], field: &str) -> Result<f64> {
    for k in keys {
        if let Some(v) = obj.get(*k) {
            return num(v, &format!("{field}.{k}"));
        }
    }
    Err(err(field, format!("missing parameter `{}`", keys[0])))
}

fn strings3(v: &Value, field: &str) -> Result<[String; 3]> {
    let a = v.as_array().ok_or_else(|| err(field, "expected an array of three expressions"))?;
    if a.len() != 3 {
        return Err(err(field, format!("expected 3 expressions, got {}", a.len())));
    }
    let get = |i: usize| -> Result<String> {
        a[i].as_str()
            .map(str::to_string)
            .ok_or_else(|| err(&format!("{field}[{i}]"), "expected a string"))
    };
    Ok([get(0)?, get(1)?, get(2)?])
}

fn interval(v: &Value, field: &str) -> Result<[f64; 2]> {
    let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| err(field, "expected [lo, hi]"))?;
    let (lo, hi) = (num(&a[0], field)?, num(&a[1], field)?);
    if !(hi > lo) {
        return Err(err(field, "empty interval"));
    }
    Ok([lo, hi])
}

fn domains(obj: &Map<String, Value>, n: usize) -> Result<Option<Vec<[f64; 2]>>> {
    let Some(v) = obj.get("domain") else { return Ok(None) };
    let a = v.as_array().ok_or_else(|| err("domain", "expected a list of [lo, hi] pairs"))?;
    if a.len() != n {
        return Err(err("domain", format!("expected {n} interval(s), got {}", a.len())));
    }
    a.iter()
        .enumerate()
        .map(|(i, d)| interval(d, &format!("domain[{i}]")))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn periodic(obj: &Map<String, Value>, n: usize) -> Result<Option<Vec<bool>>> {
    let Some(v) = obj.get("periodic") else { return Ok(None) };
    if let Some(b) = v.as_bool() {
        return Ok(Some(vec![b; n]));
    }
    let a = v.as_array().filter(|a| a.len() == n).ok_or_else(|| err("periodic", format!("expected {n} booleans")))?;
    a.iter()
        .map(|b| b.as_bool().ok_or_else(|| err("periodic", "expected booleans")))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn builtin_parts(v: &Value) -> Result<(String, Map<String, Value>)> {
    match v {
        Value::String(s) => Ok((s.clone(), Map::new())),
        Value::Object(m) => {
            let name = m
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| err("builtin.name", "expected a string"))?;
            Ok((name.to_string(), m.clone()))
        }
        _ => Err(err("builtin", "expected a name or an object with `name`")),
    }
}

fn surface_builtin(name: &str, p: &Map<String, Value>) -> Result<SurfaceChart> {
    let f = "builtin";
    Ok(match name {
        "plane" => SurfaceChart::plane(),
        "sphere" => SurfaceChart::sphere(param(p, &["R", "radius"], f)?),
        "cylinder" => SurfaceChart::cylinder(param(p, &["R", "radius"], f)?),
        "torus" => SurfaceChart::torus(param(p, &["R", "major"], f)?, param(p, &["r", "minor"], f)?),
        "ellipsoid" => SurfaceChart::ellipsoid(param(p, &["a"], f)?, param(p, &["b"], f)?, param(p, &["c"], f)?),
        "graph" => {
            let text = p.get("f").and_then(Value::as_str).ok_or_else(|| err("builtin.f", "expected an expression"))?;
            SurfaceChart::graph(parse_expr(text).map_err(|e| err("builtin.f", e.to_string()))?)?
        }
        other => return Err(err("builtin.name", format!("unknown surface `{other}`"))),
    })
}

fn curve_builtin(name: &str, p: &Map<String, Value>) -> Result<CurveChart> {
    let f = "builtin";
    Ok(match name {
        "line" => CurveChart::line(),
        "circle" => CurveChart::circle(param(p, &["R", "radius"], f)?),
        "helix" => CurveChart::helix(param(p, &["a"], f)?, param(p, &["b"], f)?),
        "parabolic_helix" => CurveChart::parabolic_helix(),
        other => return Err(err("builtin.name", format!("unknown curve `{other}`"))),
    })
}

fn motion(v: &Value) -> Result<SurfaceMotion> {
    let m = v.as_object().ok_or_else(|| err("motion", "expected an object"))?;
    let normal = m.get("normal").and_then(Value::as_str).unwrap_or("0");
    let normal = ScalarField::parse(normal).map_err(|e| err("motion.normal", e.to_string()))?;
    let tangential = match m.get("tangential") {
        Some(t) => {
            let s = strings3(t, "motion.tangential")?;
            VectorField::ambient([&s[0], &s[1], &s[2]]).map_err(|e| err("motion.tangential", e.to_string()))?
        }
        None => VectorField::ambient(["0", "0", "0"])?,
    };
    Ok(SurfaceMotion::Fields { normal, tangential })
}

impl GeometrySpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| err("", "expected a JSON object"))?;
        let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| err("kind", "expected \"surface\" or \"curve\""))?;
        let tau = opt_num(obj, "tau", 0.0)?;
        let (name, source) = match (obj.get("builtin"), obj.get("exprs")) {
            (Some(b), None) => {
                let (n, p) = builtin_parts(b)?;
                (n.clone(), Ok((n, p)))
            }
            (None, Some(e)) => ("exprs".to_string(), Err(strings3(e, "exprs")?)),
            (Some(_), Some(_)) => return Err(err("builtin", "give either `builtin` or `exprs`, not both")),
            (None, None) => return Err(err("builtin", "missing `builtin` or `exprs`")),
        };
        let geometry = match kind {
            "surface" => {
                let dom = domains(obj, 2)?;
                let per = periodic(obj, 2)?;
                let mut chart = match source {
                    Ok((n, p)) => surface_builtin(&n, &p)?,
                    Err(t) => {
                        let d = dom.clone().ok_or_else(|| err("domain", "required with `exprs`"))?;
                        let pr = per.clone().unwrap_or(vec![false; 2]);
                        SurfaceChart::from_exprs([&t[0], &t[1], &t[2]], [d[0], d[1]], [pr[0], pr[1]])
                            .map_err(|e| err("exprs", e.to_string()))?
                    }
                };
                if dom.is_some() || per.is_some() {
                    let d = dom.map_or(chart.domain, |d| [d[0], d[1]]);
                    let p = per.map_or(chart.periodic, |p| [p[0], p[1]]);
                    chart = chart.with_domain(d, p);
                }
                let motion = obj.get("motion").map(motion).transpose()?;
                Geometry::Surface(SurfaceSpec { chart, tau, motion })
            }
            "curve" => {
                let dom = domains(obj, 1)?;
                let per = periodic(obj, 1)?;
                let mut chart = match source {
                    Ok((n, p)) => curve_builtin(&n, &p)?,
                    Err(t) => {
                        let d = dom.clone().ok_or_else(|| err("domain", "required with `exprs`"))?;
                        let pr = per.clone().map_or(false, |p| p[0]);
                        CurveChart::from_exprs([&t[0], &t[1], &t[2]], d[0], pr).map_err(|e| err("exprs", e.to_string()))?
                    }
                };
                if dom.is_some() || per.is_some() {
                    let d = dom.map_or(chart.domain, |d| d[0]);
                    let p = per.map_or(chart.periodic, |p| p[0]);
                    chart = chart.with_domain(d, p);
                }
                let rotating = match obj.get("rotation") {
                    None => true,
                    Some(v) => v.as_bool().ok_or_else(|| err("rotation", "expected a boolean"))?,
                };
                Geometry::Curve(CurveSpec {
                    chart,
                    tau,
                    phi0: opt_num(obj, "phi0", 0.0)?,
                    rotating,
                })
            }
            other => return Err(err("kind", format!("unknown kind `{other}`"))),
        };
        let name = match obj.get("name") {
            None => name,
            Some(n) => n.as_str().ok_or_else(|| err("name", "expected a string"))?.to_string(),
        };
        Ok(GeometrySpec { name, geometry })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| err("", format!("malformed JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Spec { field, msg } => err(&format!("{}: {field}", path.display()), msg),
            e => e,
        })
    }

    pub fn surface(&self) -> Result<&SurfaceSpec> {
        match &self.geometry {
            Geometry::Surface(s) => Ok(s),
            Geometry::Curve(_) => Err(err("kind", "this command needs a surface")),
        }
    }

    pub fn curve(&self) -> Result<&CurveSpec> {
        match &self.geometry {
            Geometry::Curve(c) => Ok(c),
            Geometry::Surface(_) => Err(err("kind", "this command needs a curve")),
        }
    }
}

/// Parsed field file: a scalar, a vector, or both.
#[derive(Clone, Debug, Default)]
pub struct FieldSpec {
    pub scalar: Option<ScalarField>,
    pub vector: Option<VectorField>,
}

impl FieldSpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| err("", "expected a JSON object"))?;
        let scalar = match obj.get("scalar") {
            None => None,
            Some(s) => {
                let t = s.as_str().ok_or_else(|| err("scalar", "expected an expression"))?;
                Some(ScalarField::parse(t).map_err(|e| err("scalar", e.to_string()))?)
            }
        };
        let pullback = match obj.get("pullback") {
            None => true,
            Some(b) => b.as_bool().ok_or_else(|| err("pullback", "expected a boolean"))?,
        };
        let vector = match obj.get("vector") {
            None => None,
            Some(v) => {
                let t = strings3(v, "vector")?;
                let kind = if pullback { Components::Frame } else { Components::Ambient };
                Some(VectorField::parse(kind, [&t[0], &t[1], &t[2]]).map_err(|e| err("vector", e.to_string()))?)
            }
        };
        if scalar.is_none() && vector.is_none() {
            return Err(err("scalar", "field file needs `scalar` and/or `vector`"));
        }
        Ok(FieldSpec { scalar, vector })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| err("", format!("malformed JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Spec { field, msg } => err(&format!("{}: {field}", path.display()), msg),
            e => e,
        })
    }

    /// The operand an operator of the given kind needs.
    pub fn operand(&self, scalar: bool) -> Result<Operand> {
        if scalar {
            self.scalar.clone().map(Operand::Scalar).ok_or_else(|| err("scalar", "operator needs a scalar field"))
        } else {
            self.vector.clone().map(Operand::Vector).ok_or_else(|| err("vector", "operator needs a vector field"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;

    #[test]
    fn builtins_and_exprs() {
        let g = GeometrySpec::parse(r#"{"kind":"surface","builtin":{"name":"torus","R":2,"r":0.5}}"#).unwrap();
        assert_eq!(g.name, "torus");
        let c = &g.surface().unwrap().chart;
        assert!((c.point([0.0, 0.0], 0.0).unwrap() - Vec3::new(2.5, 0.0, 0.0)).max_abs() < 1e-14);
        let g = GeometrySpec::parse(r#"{"kind":"curve","builtin":"parabolic_helix","phi0":0.3}"#).unwrap();
        assert_eq!(g.curve().unwrap().phi0, 0.3);
        let g = GeometrySpec::parse(
            r#"{"kind":"surface","exprs":["s1","s2","0.1*s1*s2"],"domain":[[-1,1],[-1,1]],"tau":0.5}"#,
        )
        .unwrap();
        assert_eq!(g.surface().unwrap().tau, 0.5);
        assert!(g.curve().is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"kind":"blob","builtin":"plane"}"#, "kind"),
            (r#"{"kind":"surface","builtin":{"name":"sphere"}}"#, "builtin"),
            (r#"{"kind":"surface","exprs":["s1","s2"],"domain":[[0,1],[0,1]]}"#, "exprs"),
            (r#"{"kind":"surface","exprs":["s1","s2","q"],"domain":[[0,1],[0,1]]}"#, "exprs"),
            (r#"{"kind":"curve","exprs":["s","0","0"]}"#, "domain"),
            (r#"{"kind":"curve","builtin":"line","domain":[[1,0]]}"#, "domain[0]"),
        ];
        for (text, want) in cases {
            match GeometrySpec::parse(text).unwrap_err() {
                Error::Spec { field, .. } => assert_eq!(field, want, "{text}"),
                other => panic!("{text}: {other}"),
            }
        }
        assert!(GeometrySpec::parse("{").is_err());
        assert!(matches!(FieldSpec::parse(r#"{"scalar": 3}"#), Err(Error::Spec { field, .. }) if field == "scalar"));
    }

    #[test]
    fn fields() {
        let f = FieldSpec::parse(r#"{"scalar":"sigma","vector":["1","0","0"],"pullback":false}"#).unwrap();
        assert!(f.operand(true).is_ok());
        assert!(!f.vector.as_ref().unwrap().uses_frame());
        let f = FieldSpec::parse(r#"{"vector":["1","0","0"]}"#).unwrap();
        assert!(f.vector.as_ref().unwrap().uses_frame());
        assert!(f.operand(true).is_err());
    }
}
