//! Differential operators in signed-distance coordinates around a surface.
//!
//! A [`Collar`] fixes a foot point `s` and a normal offset `σ`. Fields are
//! evaluated as jets in `(s₁, s₂, σ[, τ])` and every operator is assembled
//! from the collar tensors
//!
//! * `J = I − σK`, `|J| = (1 − σκ₁)(1 − σκ₂)`,
//! * `Ĵ = I − σK̂` with `K̂ = tr(K)Π − K`, so that `Ĵ = |J| J⁻¹` on tangents,
//! * the surface gradient `∇⊥ = tⁱ∂ᵢ` at fixed `σ`.
//!
//! Vector and tensor results are returned in Cartesian components. Tensors
//! follow the gradient-first convention `(∇u)ᵢⱼ = ∂ᵢuⱼ`.

use crate::chart::SurfaceChart;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::jet::{Jet, Scalar};
use crate::linalg::{Tensor2, Vec3, M3, V3};
use crate::surface_frames::{CurvatureData, DarbouxFrame, FrameKind, SurfaceGeometry, SIGMA_VAR};

/// Minimum admissible `1 − σκᵢ`.
pub const FOCAL_TOL: f64 = 1e-12;

/// Collar tensors at one point, as plain numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryJacobian {
    pub sigma: f64,
    pub j: Tensor2,
    pub j_inv: Tensor2,
    pub j_hat: Tensor2,
    pub j_hat_inv: Tensor2,
    pub det: f64,
    pub projector: Tensor2,
    pub k_hat: Tensor2,
}

/// `J`, `|J|`, adjugates and projector from curvature data at offset `σ`.
pub fn jacobian(frame: &DarbouxFrame, curv: &CurvatureData, sigma: f64) -> Result<BoundaryJacobian> {
    let (k1, k2) = (curv.kappa1, curv.kappa2);
    let (a1, a2) = (1.0 - sigma * k1, 1.0 - sigma * k2);
    if a1 <= FOCAL_TOL || a2 <= FOCAL_TOL {
        return Err(Error::Singular(format!("σ = {sigma} at a focal distance")));
    }
    let n = frame.n;
    let nn = n.outer(&n);
    let pi = Tensor2::identity() - nn;
    let k = curv.shape;
    let k_hat = pi.scale(&k.trace()) - k;
    let det = a1 * a2;
    let j = Tensor2::identity() - k.scale(&sigma);
    let j_hat = Tensor2::identity() - k_hat.scale(&sigma);
    let j_inv = nn + (pi - k_hat.scale(&sigma)).scale(&(1.0 / det));
    let j_hat_inv = nn + (pi - k.scale(&sigma)).scale(&(1.0 / det));
    Ok(BoundaryJacobian {
        sigma,
        j,
        j_inv,
        j_hat,
        j_hat_inv,
        det,
        projector: pi,
        k_hat,
    })
}

/// Jet-valued collar at a point `(s, σ[, τ])`.
#[derive(Clone, Debug)]
pub struct Collar {
    pub geo: SurfaceGeometry,
    pub sigma: f64,
    sig: Jet,
    pub shape: M3<Jet>,
    pub kappa: [Jet; 2],
    pub pi: M3<Jet>,
    pub k_hat: M3<Jet>,
    pub det: Jet,
    pub j: M3<Jet>,
    pub j_inv: M3<Jet>,
    pub j_hat: M3<Jet>,
    pub j_hat_inv: M3<Jet>,
    pub fault: f64,
}

impl Collar {
    pub fn at(chart: &SurfaceChart, s: [f64; 2], sigma: f64) -> Result<Self> {
        Self::new(SurfaceGeometry::at(chart, s)?, sigma)
    }

    pub fn new(geo: SurfaceGeometry, sigma: f64) -> Result<Self> {
        Self::build(geo, sigma, 0.0)
    }

    /// Same collar with `κ₁` perturbed by `delta` (`K += δ t̂₁⊗t̂₁`).
    ///
    /// Used as a negative control: every operator must notice.
    pub fn with_fault(self, delta: f64) -> Result<Self> {
        Self::build(self.geo, self.sigma, delta)
    }

    fn build(geo: SurfaceGeometry, sigma: f64, fault: f64) -> Result<Self> {
        let mut shape = geo.shape.clone();
        let mut k1 = geo.kappa1.clone();
        if fault != 0.0 {
            shape = shape + geo.t1_hat.outer(&geo.t1_hat).scale_f(fault);
            k1 = k1 + fault;
        }
        let k2 = geo.kappa2.clone();
        for k in [&k1, &k2] {
            if 1.0 - sigma * k.value() <= FOCAL_TOL {
                return Err(Error::Singular(format!("σ = {sigma} at a focal distance")));
            }
        }
        let sig = Jet::var(geo.nvars, geo.deg, SIGMA_VAR, sigma);
        let n = &geo.n;
        let nn = n.outer(n);
        let id = M3::<Jet>::identity();
        let pi = id.clone() - nn.clone();
        let tr = shape.trace();
        let k2m = shape.matmul(&shape);
        let gauss = (tr.clone() * tr.clone() - k2m.trace()) * 0.5;
        let det = Jet::cst(1.0) - sig.clone() * tr.clone() + sig.clone() * sig.clone() * gauss;
        let k_hat = pi.scale(&tr) - shape.clone();
        let inv_det = det.recip();
        let j = id.clone() - shape.scale(&sig);
        let j_hat = id - k_hat.scale(&sig);
        let j_inv = nn.clone() + (pi.clone() - k_hat.scale(&sig)).scale(&inv_det);
        let j_hat_inv = nn + (pi.clone() - shape.scale(&sig)).scale(&inv_det);
        Ok(Collar {
            geo,
            sigma,
            sig,
            shape,
            kappa: [k1, k2],
            pi,
            k_hat,
            det,
            j,
            j_inv,
            j_hat,
            j_hat_inv,
            fault,
        })
    }

    pub fn jacobian(&self) -> BoundaryJacobian {
        BoundaryJacobian {
            sigma: self.sigma,
            j: self.j.value(),
            j_inv: self.j_inv.value(),
            j_hat: self.j_hat.value(),
            j_hat_inv: self.j_hat_inv.value(),
            det: self.det.value(),
            projector: self.pi.value(),
            k_hat: self.k_hat.value(),
        }
    }

    pub fn sigma_jet(&self) -> &Jet {
        &self.sig
    }

    pub fn n(&self) -> &V3<Jet> {
        &self.geo.n
    }

    /// Ambient point of the collar.
    pub fn point(&self) -> Vec3 {
        self.geo.p.value() + self.geo.n.value().scale(&self.sigma)
    }

    pub fn scalar(&self, f: &ScalarField) -> Result<Jet> {
        f.eval(&self.geo.field_args(&self.sig))
    }

    pub fn vector(&self, u: &VectorField) -> Result<V3<Jet>> {
        u.eval(&self.geo.field_args(&self.sig))
    }

    fn split(&self, u: &V3<Jet>) -> (Jet, V3<Jet>) {
        (u.dot(self.n()), self.pi.matvec(u))
    }

    fn ds(&self, f: &Jet) -> Jet {
        f.d(SIGMA_VAR)
    }

    fn ds_vec(&self, u: &V3<Jet>) -> V3<Jet> {
        u.d(SIGMA_VAR)
    }

    /// `n̂ × ∇⊥f`.
    fn rgrad(&self, f: &Jet) -> V3<Jet> {
        self.n().cross(&self.geo.grad_perp(f))
    }

    /// `−∇⊥·(n̂ × w)`.
    fn rdiv(&self, w: &V3<Jet>) -> Jet {
        -self.geo.div_perp(&self.n().cross(w))
    }

    fn over_det(&self, f: Jet) -> Jet {
        f * self.det.recip()
    }

    /// `∇f = n̂∂σf + J⁻¹∇⊥f`.
    pub fn gradient_jet(&self, f: &Jet) -> V3<Jet> {
        self.n().scale(&self.ds(f)) + self.j_inv.matvec(&self.geo.grad_perp(f))
    }

    /// `∇·u = [∂σ(|J|u_σ) + ∇⊥·(Ĵu⊥)] / |J|`.
    pub fn divergence_jet(&self, u: &V3<Jet>) -> Jet {
        let (us, ut) = self.split(u);
        let a = self.ds(&(self.det.clone() * us));
        let b = self.geo.div_perp(&self.j_hat.matvec(&ut));
        self.over_det(a + b)
    }

    /// `Δf = [∂σ(|J|∂σf) + ∇⊥·(ĴJ⁻¹∇⊥f)] / |J|`.
    pub fn laplacian_jet(&self, f: &Jet) -> Jet {
        let a = self.ds(&(self.det.clone() * self.ds(f)));
        let w = self.j_hat.matvec(&self.j_inv.matvec(&self.geo.grad_perp(f)));
        self.over_det(a + self.geo.div_perp(&w))
    }

    /// `∇×u = −n̂ ∇⊥·(Ĵu^⊥)/|J| + Ĵ⁻¹(∂σ(Ĵu^⊥) − ∇⊥^⊥u_σ)` with `u^⊥ = n̂×u⊥`.
    pub fn curl_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let (us, ut) = self.split(u);
        let ur = self.j_hat.matvec(&self.n().cross(&ut));
        let normal = -self.over_det(self.geo.div_perp(&ur));
        let tang = self.ds_vec(&ur) - self.rgrad(&us);
        self.n().scale(&normal) + self.j_hat_inv.matvec(&tang)
    }

    /// `Q = ĴJ⁻¹(∂σ(Ju⊥) − ∇⊥u_σ)`, the tangential part of `−n̂ × (∇×u)` scaled by `Ĵ`.
    fn q_term(&self, us: &Jet, ut: &V3<Jet>) -> V3<Jet> {
        let inner = self.ds_vec(&self.j.matvec(ut)) - self.geo.grad_perp(us);
        self.j_hat.matvec(&self.j_inv.matvec(&inner))
    }

    /// `−∇×∇×u`.
    pub fn curl_curl_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let (us, ut) = self.split(u);
        let q = self.q_term(&us, &ut);
        let normal = -self.over_det(self.geo.div_perp(&q));
        let a = self.j_hat_inv.matvec(&self.ds_vec(&q));
        let r = self.over_det(self.rdiv(&self.j.matvec(&ut)));
        let b = self.j_hat_inv.matvec(&self.rgrad(&r));
        self.n().scale(&normal) + a + b
    }

    /// `∇²u`, assembled from the normal/tangential split.
    pub fn vector_laplacian_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let (us, ut) = self.split(u);
        let q = self.q_term(&us, &ut);
        let div = self.divergence_jet(u);
        let normal = self.ds(&div) - self.over_det(self.geo.div_perp(&q));
        let a = self.j_hat_inv.matvec(&self.ds_vec(&q));
        let flux = self.over_det(self.ds(&(self.det.clone() * us)));
        let spread = self.over_det(self.geo.div_perp(&self.j_hat.matvec(&ut)));
        let b = self.j_inv.matvec(&self.geo.grad_perp(&(flux + spread)));
        let r = self.over_det(self.rdiv(&self.j.matvec(&ut)));
        let c = self.j_hat_inv.matvec(&self.rgrad(&r));
        self.n().scale(&normal) + a + b + c
    }

    /// `∇u = n̂⊗(n̂∂σu_σ + ∂σu⊥) + J⁻¹((∇⊥u_σ + Ku⊥)⊗n̂ + ∇⊥u⊥·Π − u_σK)`.
    pub fn vector_gradient_jet(&self, u: &V3<Jet>) -> M3<Jet> {
        let (us, ut) = self.split(u);
        let n = self.n();
        let row = n.scale(&self.ds(&us)) + self.ds_vec(&ut);
        let a = n.outer(&row);
        let c = self.geo.grad_perp(&us) + self.shape.matvec(&ut);
        let tang = c.outer(n) + self.geo.grad_perp_vec(&ut).matmul(&self.pi) - self.shape.scale(&us);
        a + self.j_inv.matmul(&tang)
    }

    /// `u·∇u` from the frame decomposition.
    pub fn convective_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let (us, ut) = self.split(u);
        let n = self.n();
        let w = self.j_inv.matvec(&ut);
        let c = self.geo.grad_perp(&us) + self.shape.matvec(&ut);
        let normal = us.clone() * self.ds(&us) + w.dot(&c);
        let m = self.geo.grad_perp_vec(&ut).matmul(&self.pi) - self.shape.scale(&us);
        n.scale(&normal) + self.ds_vec(&ut).scale(&us) + m.vecmat(&w)
    }

    fn require_frame(&self) -> Result<()> {
        if self.geo.frame_kind == FrameKind::Umbilic {
            Err(Error::Umbilic)
        } else {
            Ok(())
        }
    }

    /// Hessian `∇∇f` expanded in the principal Darboux frame.
    pub fn hessian_jet(&self, f: &Jet) -> Result<M3<Jet>> {
        self.require_frame()?;
        let g = &self.geo;
        let (w1, w2) = g.omega_jets()?;
        let sig = &self.sig;
        let [k1, k2] = &self.kappa;
        let one = Jet::cst(1.0);
        let b1 = one.clone() - sig.clone() * k1.clone();
        let b2 = one - sig.clone() * k2.clone();
        let a1 = b1.recip();
        let a2 = b2.recip();
        let inv_det = self.det.recip();
        let fs = self.ds(f);
        let n1 = g.nabla1(f);
        let n2 = g.nabla2(f);
        let n1s = g.nabla1(&fs);
        let n2s = g.nabla2(&fs);
        let s1n = self.ds(&n1);
        let s2n = self.ds(&n2);
        let n11 = g.nabla1(&n1);
        let n12 = g.nabla1(&n2);
        let n21 = g.nabla2(&n1);
        let n22 = g.nabla2(&n2);
        let dk1_1 = g.nabla1(k1);
        let dk1_2 = g.nabla2(k1);
        let dk2_1 = g.nabla1(k2);
        let dk2_2 = g.nabla2(k2);
        let a1s = a1.clone() * a1.clone();
        let a2s = a2.clone() * a2.clone();

        let h_nn = self.ds(&fs);
        let h_n1 = k1.clone() * a1s.clone() * n1.clone() + a1.clone() * s1n;
        let h_n2 = k2.clone() * a2s.clone() * n2.clone() + a2.clone() * s2n;
        let h_1n = a1.clone() * n1s + k1.clone() * a1s.clone() * n1.clone();
        let h_2n = a2.clone() * n2s + k2.clone() * a2s.clone() * n2.clone();
        let h_11 = -(k1.clone() * a1.clone() * fs.clone()) + a1s.clone() * n11
            - w1.clone() * n2.clone() * inv_det.clone()
            + sig.clone() * dk1_1 * a1s.clone() * a1.clone() * n1.clone();
        let h_12 = n12 * inv_det.clone()
            + w1 * a1s * n1.clone()
            + sig.clone() * dk2_1 * n2.clone() * inv_det.clone() * a2.clone();
        let h_22 = -(k2.clone() * a2.clone() * fs) + a2s.clone() * n22
            + w2.clone() * n1.clone() * inv_det.clone()
            + sig.clone() * dk2_2 * a2s.clone() * a2.clone() * n2.clone();
        let h_21 = n21 * inv_det.clone() - w2 * a2s * n2
            + sig.clone() * dk1_2 * n1 * inv_det * a1;

        let e = [g.n.clone(), g.t1_hat.clone(), g.t2_hat.clone()];
        let h = [[h_nn, h_n1, h_n2], [h_1n, h_11, h_12], [h_2n, h_21, h_22]];
        let mut out = M3::<Jet>::zero();
        for (a, row) in h.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                out = out + e[a].outer(&e[b]).scale(c);
            }
        }
        Ok(out)
    }

    /// Residuals of the derivative commutators applied to `f`:
    /// `([∂σ,∇₁]f, [∂σ,∇₂]f, [∇₁,∇₂]f − rhs)`.
    ///
    /// The right-hand side is the collar form
    /// `−|J|a₁²ω₁∇₁ − |J|a₂²ω₂∇₂ + σ(a₁∇₂κ₁∇₁ − a₂∇₁κ₂∇₂)` with `aᵢ = 1/(1 − σκᵢ)`.
    pub fn commutator_residuals_jet(&self, f: &Jet) -> Result<(f64, f64, f64)> {
        self.require_frame()?;
        let g = &self.geo;
        let (w1, w2) = g.omega_jets()?;
        let [k1, k2] = &self.kappa;
        let sig = &self.sig;
        let a1 = (Jet::cst(1.0) - sig.clone() * k1.clone()).recip();
        let a2 = (Jet::cst(1.0) - sig.clone() * k2.clone()).recip();
        let n1 = g.nabla1(f);
        let n2 = g.nabla2(f);
        let fs = self.ds(f);
        let r1 = self.ds(&n1) - g.nabla1(&fs);
        let r2 = self.ds(&n2) - g.nabla2(&fs);
        let lhs = g.nabla1(&n2) - g.nabla2(&n1);
        let rhs = -(self.det.clone() * a1.clone() * a1.clone() * w1 * n1.clone())
            - self.det.clone() * a2.clone() * a2.clone() * w2 * n2.clone()
            + sig.clone() * (a1 * g.nabla2(k1) * n1 - a2 * g.nabla1(k2) * n2);
        Ok((r1.value(), r2.value(), (lhs - rhs).value()))
    }

    /// Volume element factor `|J| |t₁ × t₂|`.
    pub fn volume_measure(&self) -> f64 {
        self.det.value() * self.geo.area.value()
    }

    // Field-level wrappers.

    pub fn gradient(&self, f: &ScalarField) -> Result<Vec3> {
        Ok(self.gradient_jet(&self.scalar(f)?).value())
    }

    pub fn divergence(&self, u: &VectorField) -> Result<f64> {
        Ok(self.divergence_jet(&self.vector(u)?).value())
    }

    pub fn laplacian(&self, f: &ScalarField) -> Result<f64> {
        Ok(self.laplacian_jet(&self.scalar(f)?).value())
    }

    pub fn curl(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.curl_jet(&self.vector(u)?).value())
    }

    pub fn vector_laplacian(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.vector_laplacian_jet(&self.vector(u)?).value())
    }

    pub fn curl_curl(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.curl_curl_jet(&self.vector(u)?).value())
    }

    pub fn vector_gradient(&self, u: &VectorField) -> Result<Tensor2> {
        Ok(self.vector_gradient_jet(&self.vector(u)?).value())
    }

    pub fn convective(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.convective_jet(&self.vector(u)?).value())
    }

    pub fn hessian(&self, f: &ScalarField) -> Result<Tensor2> {
        Ok(self.hessian_jet(&self.scalar(f)?)?.value())
    }

    pub fn commutator_residuals(&self, f: &ScalarField) -> Result<(f64, f64, f64)> {
        self.commutator_residuals_jet(&self.scalar(f)?)
    }
}

/// Volume factor `|J| |t₁ × t₂|` at `(s, σ)`.
pub fn volume_measure(chart: &SurfaceChart, s: [f64; 2], sigma: f64) -> Result<f64> {
    Ok(Collar::at(chart, s, sigma)?.volume_measure())
}

/// Which surface operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceOp {
    Gradient,
    Divergence,
    Laplacian,
    Curl,
    VectorLaplacian,
    CurlCurl,
    Hessian,
    VectorGradient,
    Convective,
}

impl SurfaceOp {
    pub const ALL: [SurfaceOp; 9] = [
        SurfaceOp::Gradient,
        SurfaceOp::Divergence,
        SurfaceOp::Laplacian,
        SurfaceOp::Curl,
        SurfaceOp::VectorLaplacian,
        SurfaceOp::CurlCurl,
        SurfaceOp::Hessian,
        SurfaceOp::VectorGradient,
        SurfaceOp::Convective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceOp::Gradient => "grad",
            SurfaceOp::Divergence => "div",
            SurfaceOp::Laplacian => "laplacian",
            SurfaceOp::Curl => "curl",
            SurfaceOp::VectorLaplacian => "veclap",
            SurfaceOp::CurlCurl => "curlcurl",
            SurfaceOp::Hessian => "hessian",
            SurfaceOp::VectorGradient => "vecgrad",
            SurfaceOp::Convective => "convective",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "lap" => Some(SurfaceOp::Laplacian),
            _ => Self::ALL.iter().copied().find(|o| o.name() == s),
        }
    }

    /// True when the operand is a scalar field.
    pub fn takes_scalar(self) -> bool {
        matches!(self, SurfaceOp::Gradient | SurfaceOp::Laplacian | SurfaceOp::Hessian)
    }
}

/// Operator output, flattened to Cartesian components.
#[derive(Clone, Debug, PartialEq)]
pub enum OpValue {
    Scalar(f64),
    Vector(Vec3),
    Tensor(Tensor2),
}

impl OpValue {
    pub fn components(&self) -> Vec<f64> {
        match self {
            OpValue::Scalar(v) => vec![*v],
            OpValue::Vector(v) => v.to_array().to_vec(),
            OpValue::Tensor(t) => t.m.iter().flatten().copied().collect(),
        }
    }
}

/// A scalar or vector operand.
#[derive(Clone, Debug)]
pub enum Operand {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Collar {
    /// Apply `op` to a field; the operand kind must match the operator.
    pub fn apply(&self, op: SurfaceOp, field: &Operand) -> Result<OpValue> {
        match (op, field) {
            (SurfaceOp::Gradient, Operand::Scalar(f)) => Ok(OpValue::Vector(self.gradient(f)?)),
            (SurfaceOp::Laplacian, Operand::Scalar(f)) => Ok(OpValue::Scalar(self.laplacian(f)?)),
            (SurfaceOp::Hessian, Operand::Scalar(f)) => Ok(OpValue::Tensor(self.hessian(f)?)),
            (SurfaceOp::Divergence, Operand::Vector(u)) => Ok(OpValue::Scalar(self.divergence(u)?)),
            (SurfaceOp::Curl, Operand::Vector(u)) => Ok(OpValue::Vector(self.curl(u)?)),
            (SurfaceOp::VectorLaplacian, Operand::Vector(u)) => Ok(OpValue::Vector(self.vector_laplacian(u)?)),
            (SurfaceOp::CurlCurl, Operand::Vector(u)) => Ok(OpValue::Vector(self.curl_curl(u)?)),
            (SurfaceOp::VectorGradient, Operand::Vector(u)) => Ok(OpValue::Tensor(self.vector_gradient(u)?)),
            (SurfaceOp::Convective, Operand::Vector(u)) => Ok(OpValue::Vector(self.convective(u)?)),
            _ => Err(Error::Invalid(format!("operator {} got the wrong field kind", op.name()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface_frames::{darboux_frame, shape_operator};

    fn sf(t: &str) -> ScalarField {
        ScalarField::parse(t).unwrap()
    }

    fn amb(t: [&str; 3]) -> VectorField {
        VectorField::ambient(t).unwrap()
    }

    fn torus_collar() -> Collar {
        Collar::at(&SurfaceChart::torus(2.0, 0.5), [0.7, 1.9], 0.15).unwrap()
    }

    #[test]
    fn jacobian_examples() {
        let c = SurfaceChart::sphere(2.0);
        let s = [1.0, 2.0];
        let j = jacobian(&darboux_frame(&c, s).unwrap(), &shape_operator(&c, s).unwrap(), 0.3).unwrap();
        assert!((j.det - (1.0 + 0.3 / 2.0f64).powi(2)).abs() < 1e-12);
        let n = darboux_frame(&c, s).unwrap().n;
        assert!((j.j.matvec(&n) - n).max_abs() < 1e-14);
        let tor = torus_collar().jacobian();
        let p = tor.projector;
        assert!((p.matmul(&tor.j_hat) - p.matmul(&tor.j_inv).scale(&tor.det)).max_abs() < 1e-10);
        let plane = Collar::at(&SurfaceChart::plane(), [0.0, 0.0], 0.7).unwrap().jacobian();
        assert!((plane.j - Tensor2::identity()).max_abs() == 0.0 && plane.det == 1.0);
    }

    #[test]
    fn eikonal_and_position_identities() {
        let c = torus_collar();
        let g = c.gradient(&sf("sigma")).unwrap();
        assert!((g - c.geo.n.value()).max_abs() < 1e-14);
        assert!((c.gradient(&sf("x")).unwrap() - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-12);
        assert!((c.divergence(&amb(["x", "y", "z"])).unwrap() - 3.0).abs() < 1e-12);
        assert!((c.laplacian(&sf("x^2+y^2+z^2")).unwrap() - 6.0).abs() < 1e-11);
        let cu = c.curl(&amb(["-y", "x", "0"])).unwrap();
        assert!((cu - Vec3::new(0.0, 0.0, 2.0)).max_abs() < 1e-12);
        assert!(c.vector_laplacian(&amb(["x", "y", "z"])).unwrap().max_abs() < 1e-11);
        let vl = c.vector_laplacian(&amb(["x^2", "0", "0"])).unwrap();
        assert!((vl - Vec3::new(2.0, 0.0, 0.0)).max_abs() < 1e-10);
        let conv = c.convective(&amb(["x", "y", "z"])).unwrap();
        assert!((conv - c.point()).max_abs() < 1e-12);
    }

    #[test]
    fn linear_field_gradient_is_transpose_convention() {
        let c = torus_collar();
        // u = A x with A = [[1,2,0],[0,1,3],[4,0,1]]; (∇u)ᵢⱼ = ∂ᵢuⱼ = Aⱼᵢ
        let u = amb(["x + 2*y", "y + 3*z", "4*x + z"]);
        let g = c.vector_gradient(&u).unwrap();
        let a = Tensor2 { m: [[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [4.0, 0.0, 1.0]] };
        assert!((g - a.transpose()).max_abs() < 1e-11);
    }

    #[test]
    fn hessian_of_sigma_and_quadratic() {
        let c = torus_collar();
        let h = c.hessian(&sf("sigma")).unwrap();
        let j = c.jacobian();
        let expect = -j.j_inv.matmul(&c.shape.value());
        assert!((h - expect).max_abs() < 1e-12);
        let q = c.hessian(&sf("x^2 + 3*x*y - z^2 + y*z")).unwrap();
        let want = Tensor2 { m: [[2.0, 3.0, 0.0], [3.0, 0.0, 1.0], [0.0, 1.0, -2.0]] };
        assert!((q - want).max_abs() < 1e-10, "{q:?}");
    }

    #[test]
    fn curl_curl_matches_nested_curl() {
        let c = torus_collar();
        let u = c.vector(&amb(["sin(y)*z", "x*x*z", "cos(x+y)"])).unwrap();
        let nested = -c.curl_jet(&c.curl_jet(&u));
        let direct = c.curl_curl_jet(&u);
        assert!((nested.value() - direct.value()).max_abs() < 1e-10);
        let id = c.vector_laplacian_jet(&u) - c.gradient_jet(&c.divergence_jet(&u)) - direct;
        assert!(id.value().max_abs() < 1e-10);
    }

    #[test]
    fn sphere_radial_operators() {
        let r = 1.5;
        let sigma = 0.4;
        let c = Collar::at(&SurfaceChart::sphere(r), [1.1, 0.3], sigma).unwrap();
        let div_n = c.divergence(&VectorField::frame(["1", "0", "0"]).unwrap()).unwrap();
        assert!((div_n - 2.0 / (r + sigma)).abs() < 1e-13);
        // f(σ) = σ³: f″ + 2f′/(R+σ)
        let lap = c.laplacian(&sf("sigma^3")).unwrap();
        assert!((lap - (6.0 * sigma + 6.0 * sigma * sigma / (r + sigma))).abs() < 1e-12);
        let vm = c.volume_measure();
        let area = c.geo.area.value();
        assert!((vm - area * (1.0 + sigma / r).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn commutators_vanish_on_torus_and_cylinder() {
        let c = torus_collar();
        let (a, b, d) = c.commutator_residuals(&sf("x*y*z")).unwrap();
        assert!(a.abs() < 1e-10 && b.abs() < 1e-10 && d.abs() < 1e-10, "{a} {b} {d}");
        let cy = Collar::at(&SurfaceChart::cylinder(1.0), [0.2, 0.5], 0.3).unwrap();
        let (a, b, d) = cy.commutator_residuals(&sf("sin(x)*y + z^2")).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12 && d.abs() < 1e-12);
    }

    #[test]
    fn fault_changes_operators() {
        let u = amb(["x*y", "z", "y*y"]);
        let c = torus_collar();
        let good = c.vector_laplacian(&u).unwrap();
        let bad = c.clone().with_fault(1e-3).unwrap().vector_laplacian(&u).unwrap();
        assert!((good - bad).max_abs() > 1e-5);
    }

    #[test]
    fn focal_distance_is_singular() {
        let c = SurfaceChart::sphere(1.0);
        assert!(matches!(Collar::at(&c, [1.0, 1.0], -1.0), Err(Error::Singular(_))));
    }
}
