//! Time derivatives in moving signed-distance coordinates.
//!
//! Surface velocity `v = ∂τp = v_σ n̂ + v⊥` is read from a time-dependent
//! chart, or supplied as fields on a static chart. In the latter case the
//! chart is advanced to first order, `p + δτ v`, which is all the formulas
//! below consume.

use crate::chart::SurfaceChart;
use crate::closest_point::{Projector, SdfCoordinates};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::jet::Jet;
use crate::linalg::{Vec3, M3, V3};
use crate::surface_calculus::Collar;
use crate::surface_frames::{SurfaceGeometry, SURFACE_DEGREE, TAU_VAR};

/// How the surface moves.
#[derive(Clone, Debug)]
pub enum SurfaceMotion {
    /// `v = ∂τp` of a time-dependent chart.
    FromChart,
    /// Normal speed and tangential velocity on a static chart.
    Fields { normal: ScalarField, tangential: VectorField },
}

/// A chart together with its motion.
#[derive(Clone, Debug)]
pub struct EvolvingSurface {
    pub chart: SurfaceChart,
    pub motion: SurfaceMotion,
}

/// Collar at `(s, σ, τ)` with the surface velocity as jets in `(s₁, s₂, σ, τ)`.
#[derive(Clone, Debug)]
pub struct MovingCollar {
    pub collar: Collar,
    pub v: V3<Jet>,
    pub v_sigma: Jet,
    pub v_perp: V3<Jet>,
}

impl EvolvingSurface {
    pub fn new(chart: SurfaceChart, motion: SurfaceMotion) -> Result<Self> {
        match &motion {
            SurfaceMotion::FromChart if !chart.is_time_dependent() => Err(Error::MissingTime(
                "static chart needs an explicit motion".into(),
            )),
            SurfaceMotion::Fields { .. } if chart.is_time_dependent() => Err(Error::Spec {
                field: "motion".into(),
                msg: "a time-dependent chart already defines its motion".into(),
            }),
            _ => Ok(EvolvingSurface { chart, motion }),
        }
    }

    /// Chart-driven motion.
    pub fn from_chart(chart: SurfaceChart) -> Result<Self> {
        Self::new(chart, SurfaceMotion::FromChart)
    }

    /// Geometry jets with `τ` as jet variable 3.
    pub fn geometry(&self, s: [f64; 2], tau: f64) -> Result<SurfaceGeometry> {
        match &self.motion {
            SurfaceMotion::FromChart => SurfaceGeometry::new(&self.chart, s, tau, true, SURFACE_DEGREE, None),
            SurfaceMotion::Fields { normal, tangential } => {
                let stat = SurfaceGeometry::new(&self.chart, s, tau, true, SURFACE_DEGREE, None)?;
                let args = stat.surface_args();
                let vs = normal.eval(&args)?;
                let vp = stat.projector().matvec(&tangential.eval(&args)?);
                let v = stat.n.scale(&vs) + vp;
                let dt = Jet::var(stat.nvars, stat.deg, TAU_VAR, 0.0);
                let p = stat.p.clone() + v.scale(&dt);
                SurfaceGeometry::from_position(p, stat.s, tau, stat.nvars, stat.deg, Some(TAU_VAR), None)
            }
        }
    }

    pub fn collar(&self, s: [f64; 2], sigma: f64, tau: f64) -> Result<MovingCollar> {
        let geo = self.geometry(s, tau)?;
        let v = geo.p.d(TAU_VAR);
        let v_sigma = v.dot(&geo.n);
        let v_perp = geo.projector().matvec(&v);
        Ok(MovingCollar {
            collar: Collar::new(geo, sigma)?,
            v,
            v_sigma,
            v_perp,
        })
    }

    /// Ambient point `p(s, τ) + σ n̂(s, τ)`.
    pub fn point(&self, s: [f64; 2], sigma: f64, tau: f64) -> Result<Vec3> {
        Ok(self.collar(s, sigma, tau)?.collar.point())
    }

    /// Project `x` onto the surface at time `τ`.
    ///
    /// Only chart-driven motion has a surface at other times.
    pub fn project(&self, x: &Vec3, tau: f64) -> Result<SdfCoordinates> {
        match self.motion {
            SurfaceMotion::FromChart => Projector::new(&self.chart).at_time(tau).project(x),
            SurfaceMotion::Fields { .. } => Projector::new(&self.chart).project(x),
        }
    }
}

impl MovingCollar {
    fn geo(&self) -> &SurfaceGeometry {
        &self.collar.geo
    }

    /// `∇⊥v_σ + K v⊥`, minus the time derivative of the normal.
    fn normal_rate(&self) -> V3<Jet> {
        self.geo().grad_perp(&self.v_sigma) + self.collar.shape.matvec(&self.v_perp)
    }

    /// `(∇⊥v_σ + Kv⊥)⊗n̂ − v_σK + ∇⊥v⊥·Π`, the gradient of the velocity along the surface.
    fn velocity_gradient(&self) -> M3<Jet> {
        let g = self.geo();
        self.normal_rate().outer(&g.n) - self.collar.shape.scale(&self.v_sigma)
            + g.grad_perp_vec(&self.v_perp).matmul(&self.collar.pi)
    }

    /// `∂τtᵢ = tᵢ·∇⊥v`.
    pub fn dtau_tangents_jet(&self) -> [V3<Jet>; 2] {
        let m = self.velocity_gradient();
        let g = self.geo();
        [m.vecmat(&g.t[0]), m.vecmat(&g.t[1])]
    }

    /// `∂τn̂ = −(∇⊥v_σ + Kv⊥)`.
    pub fn dtau_normal_jet(&self) -> V3<Jet> {
        -self.normal_rate()
    }

    /// `w = Σ ∂ₜsᵢ tᵢ = σJ⁻¹∇⊥v_σ − v⊥`.
    pub fn param_rate(&self) -> V3<Jet> {
        let c = &self.collar;
        let gv = self.geo().grad_perp(&self.v_sigma);
        c.j_inv.matvec(&gv).scale(c.sigma_jet()) - self.v_perp.clone()
    }

    /// Cartesian `∂ₜσ` and `Σ ∂ₜsᵢ tᵢ` at fixed `x`.
    pub fn dt_coordinates(&self) -> (f64, Vec3) {
        (-self.v_sigma.value(), self.param_rate().value())
    }

    /// `∂ₜf = ∂τf − v_σ∂σf + w·∇⊥f` at fixed `x`.
    pub fn dt_scalar_jet(&self, f: &Jet) -> Jet {
        let g = self.geo();
        f.d(TAU_VAR) - self.v_sigma.clone() * f.d(2) + self.param_rate().dot(&g.grad_perp(f))
    }

    /// `∂ₜu` at fixed `x` from the normal/tangential split.
    pub fn dt_vector_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let c = &self.collar;
        let g = self.geo();
        let n = &g.n;
        let us = u.dot(n);
        let ut = c.pi.matvec(u);
        let w = self.param_rate();
        let rate = self.normal_rate();
        // ∂τu⊥ with coordinate components uᵢ = u·tⁱ held to the moving basis
        let comps = [u.dot(&g.dual[0]), u.dot(&g.dual[1])];
        let coord = g.t[0].scale(&comps[0].d(TAU_VAR)) + g.t[1].scale(&comps[1].d(TAU_VAR));
        let basis = self.geo().grad_perp_vec(&self.v_perp).matmul(&c.pi) - c.shape.scale(&self.v_sigma);
        let dtau_ut = coord + n.scale(&ut.dot(&rate)) + basis.vecmat(&ut);

        let surf_ut = g.grad_perp_vec(&ut).matmul(&c.pi) - c.shape.scale(&us);
        let normal = us.d(TAU_VAR) - self.v_sigma.clone() * us.d(2)
            + w.dot(&(g.grad_perp(&us) + c.shape.matvec(&ut)));
        let tang = dtau_ut - rate.scale(&us) - ut.d(2).scale(&self.v_sigma) + surf_ut.vecmat(&w);
        n.scale(&normal) + tang
    }

    pub fn dt_scalar(&self, f: &ScalarField) -> Result<f64> {
        Ok(self.dt_scalar_jet(&self.collar.scalar(f)?).value())
    }

    pub fn dt_vector(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.dt_vector_jet(&self.collar.vector(u)?).value())
    }
}

pub fn dtau_tangents(surf: &EvolvingSurface, s: [f64; 2], tau: f64) -> Result<[Vec3; 2]> {
    let m = surf.collar(s, 0.0, tau)?;
    let [a, b] = m.dtau_tangents_jet();
    Ok([a.value(), b.value()])
}

pub fn dtau_normal(surf: &EvolvingSurface, s: [f64; 2], tau: f64) -> Result<Vec3> {
    Ok(surf.collar(s, 0.0, tau)?.dtau_normal_jet().value())
}

/// `(∂ₜσ, Σ ∂ₜsᵢ tᵢ)` at ambient `x` and time `τ`, with the coordinates of `x`.
pub fn dt_coordinates(surf: &EvolvingSurface, x: &Vec3, tau: f64) -> Result<(f64, Vec3, SdfCoordinates)> {
    let c = surf.project(x, tau)?;
    let m = surf.collar(c.s, c.sigma, tau)?;
    let (a, b) = m.dt_coordinates();
    Ok((a, b, c))
}

pub fn dt_scalar(surf: &EvolvingSurface, f: &ScalarField, s: [f64; 2], sigma: f64, tau: f64) -> Result<f64> {
    surf.collar(s, sigma, tau)?.dt_scalar(f)
}

pub fn dt_vector(surf: &EvolvingSurface, u: &VectorField, s: [f64; 2], sigma: f64, tau: f64) -> Result<Vec3> {
    surf.collar(s, sigma, tau)?.dt_vector(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inflating() -> EvolvingSurface {
        // R(τ) = 1 + τ, x-polar sphere
        let c = SurfaceChart::from_exprs(
            ["(1+tau)*cos(s1)", "(1+tau)*sin(s1)*cos(s2)", "(1+tau)*sin(s1)*sin(s2)"],
            [[0.0, std::f64::consts::PI], [0.0, 2.0 * std::f64::consts::PI]],
            [false, true],
        )
        .unwrap();
        EvolvingSurface::from_chart(c).unwrap()
    }

    #[test]
    fn inflating_sphere() {
        let e = inflating();
        let (s, tau) = ([1.0, 2.0], 0.5);
        let [a, b] = dtau_tangents(&e, s, tau).unwrap();
        let g = e.geometry(s, tau).unwrap();
        let r = 1.0 + tau;
        assert!((a - g.t[0].value().scale(&(1.0 / r))).max_abs() < 1e-13);
        assert!((b - g.t[1].value().scale(&(1.0 / r))).max_abs() < 1e-13);
        assert!(dtau_normal(&e, s, tau).unwrap().max_abs() < 1e-13);
        let m = e.collar(s, 0.3, tau).unwrap();
        assert!((m.dt_scalar(&ScalarField::parse("sigma").unwrap()).unwrap() + 1.0).abs() < 1e-13);
        let un = VectorField::frame(["1", "0", "0"]).unwrap();
        assert!(m.dt_vector(&un).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn translation_via_fields() {
        // static torus translated with unit velocity along x
        let e = EvolvingSurface::new(
            SurfaceChart::torus(2.0, 0.5),
            SurfaceMotion::Fields {
                normal: ScalarField::func(|a| Ok(a.frame[0].x.clone())),
                tangential: VectorField::ambient(["1", "0", "0"]).unwrap(),
            },
        )
        .unwrap();
        let m = e.collar([0.4, 2.2], 0.2, 0.0).unwrap();
        assert!((m.v.value() - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-14);
        for t in m.dtau_tangents_jet() {
            assert!(t.value().max_abs() < 1e-13);
        }
        let f = ScalarField::parse("x*y + z").unwrap();
        let dt = m.dt_scalar(&f).unwrap();
        // steady ambient field seen from a translating frame: ∂ₜ at fixed x is zero
        assert!(dt.abs() < 1e-12, "{dt}");
    }

    #[test]
    fn closure_and_componentwise_consistency() {
        let c = SurfaceChart::from_exprs(
            [
                "(2 + (0.5 + 0.1*tau*cos(s1))*cos(s2))*cos(s1)",
                "(2 + 0.5*cos(s2))*sin(s1) + tau*sin(s2)",
                "(0.5 + 0.2*tau)*sin(s2)",
            ],
            [[0.0, 6.283185307179586], [0.0, 6.283185307179586]],
            [true, true],
        )
        .unwrap();
        let e = EvolvingSurface::from_chart(c).unwrap();
        let m = e.collar([0.9, 1.3], 0.12, 0.2).unwrap();
        for v in ["x", "y", "z"] {
            assert!(m.dt_scalar(&ScalarField::parse(v).unwrap()).unwrap().abs() < 1e-12);
        }
        let u = m.collar.vector(&VectorField::frame(["sigma*s1", "cos(s2)*tau", "s1*s2"]).unwrap()).unwrap();
        let dv = m.dt_vector_jet(&u).value();
        let comp = V3::new(m.dt_scalar_jet(&u.x), m.dt_scalar_jet(&u.y), m.dt_scalar_jet(&u.z)).value();
        assert!((dv - comp).max_abs() < 1e-11, "{dv:?} {comp:?}");
    }
}
