//! Scalar and vector fields over signed-distance coordinates.
//!
//! Fields are evaluated in jet arithmetic so every operator can take exact
//! derivatives of them. A field may reference curvilinear variables
//! (`s1, s2, s, theta, sigma, tau, xi`) and the ambient position `x, y, z`
//! at the same time.

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, Expr, Var};
use crate::jet::Jet;
use crate::linalg::V3;
use std::fmt;
use std::sync::Arc;

/// Everything a field may depend on at an evaluation point.
#[derive(Clone, Debug)]
pub struct FieldArgs {
    pub vars: Bindings<Jet>,
    /// Orthonormal frame used for frame components: `(n̂, t̂₁, t̂₂)` on
    /// surfaces, `(t̂ₛ, t̂_σ, t̂_θ)` on tubes.
    pub frame: [V3<Jet>; 3],
}

impl FieldArgs {
    pub fn get(&self, v: Var) -> Result<&Jet> {
        self.vars
            .get(v)
            .ok_or_else(|| Error::Unbound(v.name().to_string()))
    }

    /// Ambient position as a jet.
    pub fn position(&self) -> Result<V3<Jet>> {
        Ok(V3::new(
            self.get(Var::X)?.clone(),
            self.get(Var::Y)?.clone(),
            self.get(Var::Z)?.clone(),
        ))
    }
}

pub type ScalarFn = Arc<dyn Fn(&FieldArgs) -> Result<Jet> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&FieldArgs) -> Result<V3<Jet>> + Send + Sync>;

#[derive(Clone)]
pub enum ScalarField {
    Expr(Expr),
    Func(ScalarFn),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Expr(e) => write!(f, "ScalarField({e})"),
            ScalarField::Func(_) => write!(f, "ScalarField(<fn>)"),
        }
    }
}

impl ScalarField {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(ScalarField::Expr(parse_expr(text)?))
    }

    pub fn func(f: impl Fn(&FieldArgs) -> Result<Jet> + Send + Sync + 'static) -> Self {
        ScalarField::Func(Arc::new(f))
    }

    pub fn eval(&self, a: &FieldArgs) -> Result<Jet> {
        match self {
            ScalarField::Expr(e) => e.eval(&a.vars),
            ScalarField::Func(f) => f(a),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            ScalarField::Expr(e) => e.depends_on(v),
            ScalarField::Func(_) => true,
        }
    }
}

/// How the three component expressions of a vector field are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Components {
    /// Components along the curvilinear frame.
    Frame,
    /// Cartesian components.
    Ambient,
}

#[derive(Clone)]
pub enum VectorField {
    Exprs(Components, Box<[Expr; 3]>),
    Func(VectorFn),
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Exprs(c, e) => write!(f, "VectorField({c:?}: {}, {}, {})", e[0], e[1], e[2]),
            VectorField::Func(_) => write!(f, "VectorField(<fn>)"),
        }
    }
}

impl VectorField {
    pub fn parse(kind: Components, texts: [&str; 3]) -> Result<Self> {
        Ok(VectorField::Exprs(
            kind,
            Box::new([parse_expr(texts[0])?, parse_expr(texts[1])?, parse_expr(texts[2])?]),
        ))
    }

    pub fn frame(texts: [&str; 3]) -> Result<Self> {
        Self::parse(Components::Frame, texts)
    }

    pub fn ambient(texts: [&str; 3]) -> Result<Self> {
        Self::parse(Components::Ambient, texts)
    }

    pub fn func(f: impl Fn(&FieldArgs) -> Result<V3<Jet>> + Send + Sync + 'static) -> Self {
        VectorField::Func(Arc::new(f))
    }

    /// Field value in Cartesian components.
    pub fn eval(&self, a: &FieldArgs) -> Result<V3<Jet>> {
        match self {
            VectorField::Exprs(kind, e) => {
                let c0 = e[0].eval(&a.vars)?;
                let c1 = e[1].eval(&a.vars)?;
                let c2 = e[2].eval(&a.vars)?;
                Ok(match kind {
                    Components::Ambient => V3::new(c0, c1, c2),
                    Components::Frame => {
                        a.frame[0].scale(&c0) + a.frame[1].scale(&c1) + a.frame[2].scale(&c2)
                    }
                })
            }
            VectorField::Func(f) => f(a),
        }
    }

    /// True when components refer to the curvilinear frame.
    pub fn uses_frame(&self) -> bool {
        matches!(self, VectorField::Exprs(Components::Frame, _) | VectorField::Func(_))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            VectorField::Exprs(_, e) => e.iter().any(|x| x.depends_on(v)),
            VectorField::Func(_) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;

    #[test]
    fn frame_components_combine_frame_vectors() {
        let e = |x: f64, y: f64, z: f64| V3::new(Jet::cst(x), Jet::cst(y), Jet::cst(z));
        let args = FieldArgs {
            vars: Bindings::new().with(Var::Sigma, Jet::cst(2.0)),
            frame: [e(0.0, 0.0, 1.0), e(1.0, 0.0, 0.0), e(0.0, 1.0, 0.0)],
        };
        let u = VectorField::frame(["sigma", "1", "-1"]).unwrap();
        let v = u.eval(&args).unwrap().value();
        assert_eq!(v, crate::linalg::Vec3::new(1.0, -1.0, 2.0));
        let f = ScalarField::parse("x + 1").unwrap();
        assert!(matches!(f.eval(&args), Err(Error::Unbound(_))));
    }
}
