//! Intrinsic surface geometry: metric, Gauss map, shape operator, principal
//! frame and rotation coefficients.
//!
//! Everything is computed in jet arithmetic around a parameter point so that
//! derivatives of frame quantities (curvature gradients, rotation
//! coefficients) are exact. Charts need not be orthogonal or aligned with
//! curvature lines: the surface gradient uses the inverse metric throughout.

use crate::chart::SurfaceChart;
use crate::error::{Error, Result};
use crate::expr::{Bindings, Var};
use crate::field::{FieldArgs, ScalarField, VectorField};
use crate::jet::{Jet, Scalar};
use crate::linalg::{Tensor2, Vec3, M3, V3};

/// Default direction the first principal tangent is aligned with.
pub const REFERENCE_AXIS: Vec3 = Vec3::new(0.408_248_290_463_863, 0.577_350_269_189_626, 0.707_106_781_186_548);

/// Jet degree used for surface geometry; enough for fourth derivatives of the chart.
pub const SURFACE_DEGREE: usize = 4;

/// `|t₁ × t₂|` below this fraction of `max(|t₁|, |t₂|)²` counts as degenerate;
/// catches both collapsed and nearly parallel tangents.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub fn umbilic_tol(k1: f64, k2: f64) -> f64 {
    1e-8 * k1.abs().max(k2.abs()).max(1.0)
}

/// Orthonormal Darboux frame at a surface point.
#[derive(Clone, Debug, PartialEq)]
pub struct DarbouxFrame {
    pub p: Vec3,
    pub n: Vec3,
    pub t1_hat: Vec3,
    pub t2_hat: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    pub metric: [[f64; 2]; 2],
}

/// Curvature summary at a surface point.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData {
    pub kappa1: f64,
    pub kappa2: f64,
    pub shape: Tensor2,
    pub mean: f64,
    pub sum: f64,
    pub gauss: f64,
    pub sq_sum: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub umbilic: bool,
}

/// How the principal frame was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    /// Distinct principal curvatures.
    Principal,
    /// Shape operator is a multiple of the projector on the whole patch
    /// (sphere, plane); any orthonormal frame is principal.
    UmbilicPatch,
    /// Isolated umbilic: principal directions undefined here.
    Umbilic,
}

/// Geometry jets at a parameter point.
///
/// Jet variables are `s₁ = 0`, `s₂ = 1`, `σ = 2` and optionally `τ = 3`.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub nvars: usize,
    pub deg: usize,
    pub s: [f64; 2],
    pub tau: f64,
    pub tau_var: Option<usize>,
    pub p: V3<Jet>,
    pub t: [V3<Jet>; 2],
    /// Dual tangent basis `tⁱ = gⁱʲ tⱼ`; `∇⊥ = tⁱ ∂ᵢ`.
    pub dual: [V3<Jet>; 2],
    pub metric: [[Jet; 2]; 2],
    pub area: Jet,
    pub n: V3<Jet>,
    pub shape: M3<Jet>,
    pub frame_kind: FrameKind,
    pub t1_hat: V3<Jet>,
    pub t2_hat: V3<Jet>,
    pub kappa1: Jet,
    pub kappa2: Jet,
}

pub const SIGMA_VAR: usize = 2;
pub const TAU_VAR: usize = 3;

impl SurfaceGeometry {
    /// Static geometry at `s` (three jet variables).
    pub fn at(chart: &SurfaceChart, s: [f64; 2]) -> Result<Self> {
        Self::new(chart, s, 0.0, false, SURFACE_DEGREE, None)
    }

    /// Geometry jets; `timed` adds `τ` as jet variable 3.
    pub fn new(
        chart: &SurfaceChart,
        s: [f64; 2],
        tau: f64,
        timed: bool,
        deg: usize,
        reference: Option<Vec3>,
    ) -> Result<Self> {
        let s = chart.wrap(s)?;
        let (nvars, tau_var) = if timed { (4, Some(TAU_VAR)) } else { (3, None) };
        let p = chart.jet(s, tau, nvars, deg, tau_var);
        Self::from_position(p, s, tau, nvars, deg, tau_var, reference)
    }

    /// Build from an arbitrary position jet in `(s₁, s₂, ·, ·)`.
    pub fn from_position(
        p: V3<Jet>,
        s: [f64; 2],
        tau: f64,
        nvars: usize,
        deg: usize,
        tau_var: Option<usize>,
        reference: Option<Vec3>,
    ) -> Result<Self> {
        if !p.value().is_finite() {
            return Err(Error::NonFinite(format!("chart at {s:?}")));
        }
        let t = [p.d(0), p.d(1)];
        let cross = t[0].cross(&t[1]);
        let area = cross.norm();
        let (l1, l2) = (t[0].norm().value(), t[1].norm().value());
        if !(area.value() >= DEGENERACY_TOL * l1.max(l2).powi(2)) || area.value() == 0.0 {
            return Err(Error::Degenerate(s.to_vec()));
        }
        let n = cross.scale(&area.recip());
        let g = [
            [t[0].dot(&t[0]), t[0].dot(&t[1])],
            [t[1].dot(&t[0]), t[1].dot(&t[1])],
        ];
        let det = g[0][0].clone() * g[1][1].clone() - g[0][1].clone() * g[1][0].clone();
        let inv_det = det.recip();
        let ginv = [
            [g[1][1].clone() * inv_det.clone(), -(g[0][1].clone() * inv_det.clone())],
            [-(g[1][0].clone() * inv_det.clone()), g[0][0].clone() * inv_det],
        ];
        let dual = [
            t[0].scale(&ginv[0][0]) + t[1].scale(&ginv[0][1]),
            t[0].scale(&ginv[1][0]) + t[1].scale(&ginv[1][1]),
        ];
        // ∇⊥n̂ = tᵏ ⊗ ∂ₖn̂ and K = −sym(∇⊥n̂)
        let dn = [n.d(0), n.d(1)];
        let grad_n = dual[0].outer(&dn[0]) + dual[1].outer(&dn[1]);
        let shape = -grad_n.sym();

        let mut geo = SurfaceGeometry {
            nvars,
            deg,
            s,
            tau,
            tau_var,
            p,
            t,
            dual,
            metric: g,
            area,
            n,
            shape,
            frame_kind: FrameKind::Principal,
            t1_hat: V3::zero(),
            t2_hat: V3::zero(),
            kappa1: Jet::cst(0.0),
            kappa2: Jet::cst(0.0),
        };
        geo.resolve_frame(reference.unwrap_or(REFERENCE_AXIS));
        Ok(geo)
    }

    fn resolve_frame(&mut self, reference: Vec3) {
        let e1 = self.t[0].normalized();
        let e2 = self.n.cross(&e1);
        let k = &self.shape;
        let a = e1.dot(&k.matvec(&e1));
        let b = e1.dot(&k.matvec(&e2));
        let d = e2.dot(&k.matvec(&e2));
        let m = (a.clone() + d.clone()) * 0.5;
        let h = (a.clone() - d.clone()) * 0.5;
        let q = h.clone() * h.clone() + b.clone() * b.clone();
        let r = q.value().sqrt();
        let (k1v, k2v) = (m.value() + r, m.value() - r);
        let flip = |v: V3<Jet>| {
            if v.value().dot(&reference) < 0.0 {
                -v
            } else {
                v
            }
        };
        if 2.0 * r <= umbilic_tol(k1v, k2v) {
            let scale = m.value().abs().max(1.0);
            let traceless_vanishes = h.is_negligible(1e-10 * scale) && b.is_negligible(1e-10 * scale);
            self.frame_kind = if traceless_vanishes {
                FrameKind::UmbilicPatch
            } else {
                FrameKind::Umbilic
            };
            self.t1_hat = flip(e1);
            self.t2_hat = self.n.cross(&self.t1_hat);
            self.kappa1 = m.clone();
            self.kappa2 = m;
            return;
        }
        let rj = q.sqrt();
        let k1 = m.clone() + rj.clone();
        let k2 = m - rj;
        // eigenvector of [[a, b], [b, d]] for k1, from the better-conditioned row
        let va = (b.clone(), k1.clone() - a.clone());
        let vb = (k1.clone() - d, b);
        let na = va.0.value().hypot(va.1.value());
        let nb = vb.0.value().hypot(vb.1.value());
        let (c1, c2) = if na >= nb { va } else { vb };
        let v = e1.scale(&c1) + e2.scale(&c2);
        self.t1_hat = flip(v.normalized());
        self.t2_hat = self.n.cross(&self.t1_hat);
        self.kappa1 = k1;
        self.kappa2 = k2;
        self.frame_kind = FrameKind::Principal;
    }

    /// Surface gradient `∇⊥f = tⁱ ∂ᵢf` at fixed `σ`.
    pub fn grad_perp(&self, f: &Jet) -> V3<Jet> {
        self.dual[0].scale(&f.d(0)) + self.dual[1].scale(&f.d(1))
    }

    /// Surface divergence `∇⊥·w = tⁱ·∂ᵢw` at fixed `σ`.
    pub fn div_perp(&self, w: &V3<Jet>) -> Jet {
        self.dual[0].dot(&w.d(0)) + self.dual[1].dot(&w.d(1))
    }

    /// Surface gradient of a vector, gradient index first: `tⁱ ⊗ ∂ᵢw`.
    pub fn grad_perp_vec(&self, w: &V3<Jet>) -> M3<Jet> {
        self.dual[0].outer(&w.d(0)) + self.dual[1].outer(&w.d(1))
    }

    /// Directional derivative along a unit tangent `e`: `e·∇⊥f`.
    pub fn along(&self, e: &V3<Jet>, f: &Jet) -> Jet {
        e.dot(&self.dual[0]) * f.d(0) + e.dot(&self.dual[1]) * f.d(1)
    }

    pub fn along_vec(&self, e: &V3<Jet>, w: &V3<Jet>) -> V3<Jet> {
        let c0 = e.dot(&self.dual[0]);
        let c1 = e.dot(&self.dual[1]);
        w.d(0).scale(&c0) + w.d(1).scale(&c1)
    }

    /// `∇₁f` along the first principal direction.
    pub fn nabla1(&self, f: &Jet) -> Jet {
        self.along(&self.t1_hat, f)
    }

    /// `∇₂f` along the second principal direction.
    pub fn nabla2(&self, f: &Jet) -> Jet {
        self.along(&self.t2_hat, f)
    }

    /// Rotation coefficients `(ω₁, ω₂)` as jets.
    pub fn omega_jets(&self) -> Result<(Jet, Jet)> {
        if self.frame_kind == FrameKind::Umbilic {
            return Err(Error::Umbilic);
        }
        let w1 = self.along_vec(&self.t1_hat, &self.t1_hat).dot(&self.t2_hat);
        let w2 = self.along_vec(&self.t2_hat, &self.t1_hat).dot(&self.t2_hat);
        Ok((w1, w2))
    }

    pub fn projector(&self) -> M3<Jet> {
        M3::identity() - self.n.outer(&self.n)
    }

    pub fn darboux(&self) -> DarbouxFrame {
        DarbouxFrame {
            p: self.p.value(),
            n: self.n.value(),
            t1_hat: self.t1_hat.value(),
            t2_hat: self.t2_hat.value(),
            t1: self.t[0].value(),
            t2: self.t[1].value(),
            metric: [
                [self.metric[0][0].value(), self.metric[0][1].value()],
                [self.metric[1][0].value(), self.metric[1][1].value()],
            ],
        }
    }

    pub fn curvature(&self) -> CurvatureData {
        let (k1, k2) = (self.kappa1.value(), self.kappa2.value());
        // ω is reported only where principal directions are well defined
        let (w1, w2) = match (self.frame_kind, self.omega_jets()) {
            (FrameKind::Principal, Ok((a, b))) => (a.value(), b.value()),
            _ => (f64::NAN, f64::NAN),
        };
        CurvatureData {
            kappa1: k1,
            kappa2: k2,
            shape: self.shape.value(),
            mean: 0.5 * (k1 + k2),
            sum: k1 + k2,
            gauss: k1 * k2,
            sq_sum: k1 * k1 + k2 * k2,
            omega1: w1,
            omega2: w2,
            umbilic: self.frame_kind != FrameKind::Principal,
        }
    }

    /// Frame vectors `(n̂, t̂₁, t̂₂)` for field evaluation.
    pub fn frame(&self) -> [V3<Jet>; 3] {
        [self.n.clone(), self.t1_hat.clone(), self.t2_hat.clone()]
    }

    /// Field arguments on the level set `σ` (given as a jet).
    pub fn field_args(&self, sigma: &Jet) -> FieldArgs {
        let x = &self.p + &self.n.scale(sigma);
        let tau = match self.tau_var {
            Some(v) => Jet::var(self.nvars, self.deg, v, self.tau),
            None => Jet::cst(self.tau),
        };
        let vars = Bindings::new()
            .with(Var::S1, Jet::var(self.nvars, self.deg, 0, self.s[0]))
            .with(Var::S2, Jet::var(self.nvars, self.deg, 1, self.s[1]))
            .with(Var::Sigma, sigma.clone())
            .with(Var::Tau, tau)
            .with(Var::X, x.x)
            .with(Var::Y, x.y)
            .with(Var::Z, x.z);
        FieldArgs {
            vars,
            frame: self.frame(),
        }
    }

    /// Field arguments on the surface itself (`σ = 0`, no `σ` dependence).
    pub fn surface_args(&self) -> FieldArgs {
        self.field_args(&Jet::cst(0.0))
    }
}

/// Traversal state for continuous principal-direction signs.
#[derive(Clone, Debug, Default)]
pub struct FrameTracker {
    last: Option<Vec3>,
}

impl FrameTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reference for the next query: the previous first principal tangent,
    /// or the fixed axis on the first query.
    pub fn reference(&self) -> Vec3 {
        self.last.unwrap_or(REFERENCE_AXIS)
    }

    pub fn shape_operator(&mut self, chart: &SurfaceChart, s: [f64; 2]) -> Result<(DarbouxFrame, CurvatureData)> {
        let g = SurfaceGeometry::new(chart, s, 0.0, false, SURFACE_DEGREE, Some(self.reference()))?;
        let fr = g.darboux();
        self.last = Some(fr.t1_hat);
        Ok((fr, g.curvature()))
    }
}

/// Tangents, metric and unit normal.
pub fn tangent_basis(chart: &SurfaceChart, s: [f64; 2]) -> Result<(Vec3, Vec3, [[f64; 2]; 2], Vec3)> {
    let s = chart.wrap(s)?;
    let p = chart.jet(s, 0.0, 2, 1, None);
    let (t1, t2) = (p.d(0).value(), p.d(1).value());
    let c = t1.cross(&t2);
    let a = c.norm();
    if !(a >= DEGENERACY_TOL * t1.norm().max(t2.norm()).powi(2)) || a == 0.0 {
        return Err(Error::Degenerate(s.to_vec()));
    }
    let g = [[t1.dot(&t1), t1.dot(&t2)], [t2.dot(&t1), t2.dot(&t2)]];
    Ok((t1, t2, g, c.scale(&(1.0 / a))))
}

/// Shape operator, principal curvatures and frame at `s`.
pub fn shape_operator(chart: &SurfaceChart, s: [f64; 2]) -> Result<CurvatureData> {
    Ok(SurfaceGeometry::at(chart, s)?.curvature())
}

/// Full Darboux frame at `s`.
pub fn darboux_frame(chart: &SurfaceChart, s: [f64; 2]) -> Result<DarbouxFrame> {
    Ok(SurfaceGeometry::at(chart, s)?.darboux())
}

/// Rotation coefficients; umbilic points report NaN with the umbilic flag set.
pub fn rotation_coefficients(chart: &SurfaceChart, s: [f64; 2]) -> Result<(f64, f64, bool)> {
    let c = SurfaceGeometry::at(chart, s)?.curvature();
    Ok((c.omega1, c.omega2, c.umbilic))
}

/// `∇⊥f` for a field restricted to the surface.
pub fn surface_gradient(chart: &SurfaceChart, s: [f64; 2], f: &ScalarField) -> Result<Vec3> {
    let g = SurfaceGeometry::at(chart, s)?;
    let fj = f.eval(&g.surface_args())?;
    Ok(g.grad_perp(&fj).value())
}

/// `∇⊥·u⊥` for a tangent field on the surface.
///
/// Uses the rotation-coefficient form in the principal frame; at isolated
/// umbilics falls back to the covariant trace `tⁱ·∂ᵢu⊥`.
pub fn surface_divergence(chart: &SurfaceChart, s: [f64; 2], u: &VectorField) -> Result<f64> {
    let g = SurfaceGeometry::at(chart, s)?;
    let uj = u.eval(&g.surface_args())?;
    let uv = uj.value();
    let nv = g.n.value();
    if uv.dot(&nv).abs() > 1e-8 * uv.norm().max(1.0) {
        return Err(Error::Invalid("surface divergence needs a tangent field".into()));
    }
    match g.omega_jets() {
        Ok((w1, w2)) => {
            let u1 = uj.dot(&g.t1_hat);
            let u2 = uj.dot(&g.t2_hat);
            let v = g.nabla1(&u1) + g.nabla2(&u2) + w2 * u1 - w1 * u2;
            Ok(v.value())
        }
        Err(Error::Umbilic) => {
            let ut = g.projector().matvec(&uj);
            Ok(g.div_perp(&ut).value())
        }
        Err(e) => Err(e),
    }
}

/// Codazzi–Mainardi and Gauss residuals `(r₁, r₂, r₃)`.
pub fn codazzi_egregium_residuals(chart: &SurfaceChart, s: [f64; 2]) -> Result<(f64, f64, f64)> {
    let g = SurfaceGeometry::at(chart, s)?;
    let (w1, w2) = g.omega_jets()?;
    let (k1, k2) = (&g.kappa1, &g.kappa2);
    let dk = k1 - k2;
    let r1 = g.nabla2(k1) - w1.clone() * dk.clone();
    let r2 = g.nabla1(k2) - w2.clone() * dk;
    let r3 = g.nabla1(&w2) - g.nabla2(&w1) + w1.clone() * w1 + w2.clone() * w2 + k1.clone() * k2.clone();
    Ok((r1.value(), r2.value(), r3.value()))
}
