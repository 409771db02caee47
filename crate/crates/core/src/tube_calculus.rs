//! Differential operators in tube coordinates `(s, θ, σ)` and the
//! time-derivative machinery for moving curves.
//!
//! Frame components follow `(t̂ₛ, t̂_σ, t̂_θ)`; tensors use the
//! gradient-first convention `(∇u)ᵢⱼ = ∂ᵢuⱼ`. Curve motion is always
//! `v = ∂τp` of a time-dependent chart.

use crate::chart::CurveChart;
use crate::curve_frames::{FrenetJets, Tube, TubeCoordinates, SIGMA_VAR, S_VAR, TAU_VAR, THETA_VAR};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Var};
use crate::field::{FieldArgs, ScalarField, VectorField};
use crate::jet::{Jet, Scalar};
use crate::linalg::{Tensor2, Vec3, M3, V3};
use crate::surface_calculus::{OpValue, Operand};

/// Jet degree for static tube operators.
pub const TUBE_DEGREE: usize = 4;
/// Jet degree when time is a variable (torsion evolution needs `∇ₛ³v`).
pub const TUBE_TIMED_DEGREE: usize = 5;

/// Tube geometry as jets in `(s, θ, σ[, τ])` around one point.
#[derive(Clone, Debug)]
pub struct TubeGeometry {
    pub nvars: usize,
    pub deg: usize,
    pub s: f64,
    pub theta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub timed: bool,
    pub fr: FrenetJets,
    pub phi: Jet,
    pub cs: Jet,
    pub sn: Jet,
    pub t_s: V3<Jet>,
    pub t_sigma: V3<Jet>,
    pub t_theta: V3<Jet>,
    pub x: V3<Jet>,
    pub h_s: Jet,
    pub a: Jet,
    pub b: Jet,
    pub c: Jet,
    sig: Jet,
    th: Jet,
}

impl TubeGeometry {
    /// Static geometry at `(s, θ, σ)`.
    pub fn new(tube: &Tube, s: f64, theta: f64, sigma: f64) -> Result<Self> {
        Self::build(tube, s, theta, sigma, false)
    }

    /// Geometry with `τ` as jet variable; the chart must depend on time.
    pub fn timed(tube: &Tube, s: f64, theta: f64, sigma: f64) -> Result<Self> {
        if !tube.curve.is_time_dependent() {
            return Err(Error::MissingTime("curve chart has no τ dependence".into()));
        }
        Self::build(tube, s, theta, sigma, true)
    }

    fn build(tube: &Tube, s: f64, theta: f64, sigma: f64, timed: bool) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::OnAxis(sigma));
        }
        let (nvars, deg) = if timed { (4, TUBE_TIMED_DEGREE) } else { (3, TUBE_DEGREE) };
        let tau = tube.tau();
        let fr = FrenetJets::new(&tube.curve, s, tau, nvars, deg, timed.then_some(TAU_VAR))?;
        let s = fr.s;
        let phi = if tube.bishop.rotating {
            let mut base = Jet::constant_in(nvars, deg, tube.bishop.phi(s)?);
            if timed {
                let rate = tube.bishop.dphi_dtau(s)?;
                base = base + Jet::var(nvars, deg, TAU_VAR, 0.0) * rate;
            }
            base - (fr.omega.clone() * fr.speed.clone()).integrate(S_VAR)
        } else {
            Jet::constant_in(nvars, deg, tube.bishop.phi0)
        };
        Self::from_parts(fr, phi, theta, sigma, nvars, deg, timed)
    }

    /// Assemble from Frenet jets and a Bishop-angle jet.
    pub fn from_parts(fr: FrenetJets, phi: Jet, theta: f64, sigma: f64, nvars: usize, deg: usize, timed: bool) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::OnAxis(sigma));
        }
        let (s, tau) = (fr.s, fr.tau);
        let sig = Jet::var(nvars, deg, SIGMA_VAR, sigma);
        let th = Jet::var(nvars, deg, THETA_VAR, theta);
        let ang = th.clone() + phi.clone();
        let (cs, sn) = (ang.cos(), ang.sin());
        let t_sigma = fr.n.scale(&cs) + fr.b.scale(&sn);
        let t_theta = fr.b.scale(&cs) - fr.n.scale(&sn);
        let x = fr.p.clone() + t_sigma.scale(&sig);
        let h_s = Jet::cst(1.0) - sig.clone() * fr.kappa.clone() * cs.clone();
        if h_s.value() <= 0.0 {
            return Err(Error::Collar(format!("h_s ≤ 0 at s = {s}, σ = {sigma}")));
        }
        let inv_h = h_s.recip();
        let a = fr.kappa.clone() * cs.clone() * inv_h.clone();
        let b = -(fr.kappa.clone() * sn.clone() * inv_h);
        let c = sig.recip();
        Ok(TubeGeometry {
            nvars,
            deg,
            s,
            theta,
            sigma,
            tau,
            timed,
            t_s: fr.t.clone(),
            fr,
            phi,
            cs,
            sn,
            t_sigma,
            t_theta,
            x,
            h_s,
            a,
            b,
            c,
            sig,
            th,
        })
    }

    /// Same geometry with `κ` shifted by `delta`. Every operator must notice.
    pub fn with_fault(self, delta: f64) -> Result<Self> {
        let mut fr = self.fr;
        fr.kappa = fr.kappa + delta;
        Self::from_parts(fr, self.phi, self.theta, self.sigma, self.nvars, self.deg, self.timed)
    }

    pub fn sigma_jet(&self) -> &Jet {
        &self.sig
    }

    pub fn point(&self) -> Vec3 {
        self.x.value()
    }

    pub fn frame(&self) -> [V3<Jet>; 3] {
        [self.t_s.clone(), self.t_sigma.clone(), self.t_theta.clone()]
    }

    pub fn field_args(&self) -> FieldArgs {
        let tau = if self.timed {
            Jet::var(self.nvars, self.deg, TAU_VAR, self.tau)
        } else {
            Jet::cst(self.tau)
        };
        let vars = Bindings::new()
            .with(Var::S, Jet::var(self.nvars, self.deg, S_VAR, self.s))
            .with(Var::Theta, self.th.clone())
            .with(Var::Sigma, self.sig.clone())
            .with(Var::Tau, tau)
            .with(Var::X, self.x.x.clone())
            .with(Var::Y, self.x.y.clone())
            .with(Var::Z, self.x.z.clone());
        FieldArgs { vars, frame: self.frame() }
    }

    pub fn scalar(&self, f: &ScalarField) -> Result<Jet> {
        f.eval(&self.field_args())
    }

    pub fn vector(&self, u: &VectorField) -> Result<V3<Jet>> {
        u.eval(&self.field_args())
    }

    /// Frame components `(uₛ, u_σ, u_θ)`.
    pub fn components(&self, u: &V3<Jet>) -> [Jet; 3] {
        [u.dot(&self.t_s), u.dot(&self.t_sigma), u.dot(&self.t_theta)]
    }

    pub fn assemble(&self, c: [Jet; 3]) -> V3<Jet> {
        let [us, ug, ut] = c;
        self.t_s.scale(&us) + self.t_sigma.scale(&ug) + self.t_theta.scale(&ut)
    }

    /// `∇ₛ` at fixed `(θ, σ)`.
    pub fn ds(&self, f: &Jet) -> Jet {
        self.fr.ds(f)
    }

    fn dg(&self, f: &Jet) -> Jet {
        f.d(SIGMA_VAR)
    }

    fn dth(&self, f: &Jet) -> Jet {
        f.d(THETA_VAR)
    }

    fn over_h(&self, f: Jet) -> Jet {
        f * self.h_s.recip()
    }

    fn over_s(&self, f: Jet) -> Jet {
        f * self.sig.recip()
    }

    /// `t̂_σ∂σf + t̂ₛ∇ₛf/h_s + t̂_θ∂θf/σ`.
    pub fn gradient_jet(&self, f: &Jet) -> V3<Jet> {
        self.assemble([self.over_h(self.ds(f)), self.dg(f), self.over_s(self.dth(f))])
    }

    /// Nine-term frame expansion of `∇u`.
    pub fn vector_gradient_jet(&self, u: &V3<Jet>) -> M3<Jet> {
        let [us, ug, ut] = self.components(u);
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let rows = [
            [
                self.over_h(self.ds(&us)) - a.clone() * ug.clone() - b.clone() * ut.clone(),
                self.over_h(self.ds(&ug)) + a.clone() * us.clone(),
                self.over_h(self.ds(&ut)) + b.clone() * us.clone(),
            ],
            [self.dg(&us), self.dg(&ug), self.dg(&ut)],
            [
                self.over_s(self.dth(&us)),
                self.over_s(self.dth(&ug)) - c.clone() * ut.clone(),
                self.over_s(self.dth(&ut)) + c.clone() * ug.clone(),
            ],
        ];
        let e = self.frame();
        let mut m = M3::<Jet>::zero();
        for (i, row) in rows.iter().enumerate() {
            for (j, k) in row.iter().enumerate() {
                m = m + e[i].outer(&e[j]).scale(k);
            }
        }
        m
    }

    /// `∇ₛuₛ/h_s + ∂σu_σ + ∂θu_θ/σ + (C − A)u_σ − Bu_θ`.
    pub fn divergence_jet(&self, u: &V3<Jet>) -> Jet {
        let [us, ug, ut] = self.components(u);
        self.over_h(self.ds(&us)) + self.dg(&ug) + self.over_s(self.dth(&ut))
            + (self.c.clone() - self.a.clone()) * ug
            - self.b.clone() * ut
    }

    /// Scalar Laplacian in tube coordinates.
    pub fn laplacian_jet(&self, f: &Jet) -> Jet {
        let h = &self.h_s;
        let fs = self.ds(f);
        let h3 = h.clone() * h.clone() * h.clone();
        self.ds(&fs) * (h.clone() * h.clone()).recip() + self.dg(&self.dg(f))
            + self.dth(&self.dth(f)) * (self.sig.clone() * self.sig.clone()).recip()
            - self.ds(h) * h3.recip() * fs
            + (self.c.clone() - self.a.clone()) * self.dg(f)
            - self.b.clone() * self.over_s(self.dth(f))
    }

    /// Curl in tube coordinates.
    pub fn curl_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let [us, ug, ut] = self.components(u);
        let cs = self.dg(&ut) - self.over_s(self.dth(&ug)) + self.c.clone() * ut.clone();
        let cg = self.over_s(self.dth(&us)) - self.over_h(self.ds(&ut)) - self.b.clone() * us.clone();
        let ct = self.over_h(self.ds(&ug)) - self.dg(&us) + self.a.clone() * us;
        self.assemble([cs, cg, ct])
    }

    /// Vector Laplacian: componentwise scalar Laplacians plus frame coupling.
    pub fn vector_laplacian_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let [us, ug, ut] = self.components(u);
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let ih = self.h_s.recip();
        let (dsa, dsb) = (self.ds(a) * ih.clone(), self.ds(b) * ih.clone());
        let two = 2.0;
        let ls = self.laplacian_jet(&us)
            - (a.clone() * ih.clone() * self.ds(&ug)) * two
            - (b.clone() * ih.clone() * self.ds(&ut)) * two
            - (a.clone() * a.clone() + b.clone() * b.clone()) * us.clone()
            - dsa.clone() * ug.clone()
            - dsb.clone() * ut.clone();
        let lg = self.laplacian_jet(&ug) + (a.clone() * ih.clone() * self.ds(&us)) * two
            - (c.clone() * self.over_s(self.dth(&ut))) * two
            + dsa * us.clone()
            - (a.clone() * a.clone() + c.clone() * c.clone()) * ug.clone()
            + (b.clone() * c.clone() - a.clone() * b.clone()) * ut.clone();
        let lt = self.laplacian_jet(&ut) + (b.clone() * ih.clone() * self.ds(&us)) * two
            + (c.clone() * self.over_s(self.dth(&ug))) * two
            + dsb * us.clone()
            - (a.clone() * b.clone() + b.clone() * c.clone()) * ug
            - (b.clone() * b.clone() + c.clone() * c.clone()) * ut;
        self.assemble([ls, lg, lt])
    }

    /// `∇(∇·u) − ∇×∇×u`, built from the first-order operators.
    pub fn vector_laplacian_composed_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        self.gradient_jet(&self.divergence_jet(u)) - self.curl_jet(&self.curl_jet(u))
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<Vec3> {
        Ok(self.gradient_jet(&self.scalar(f)?).value())
    }

    pub fn vector_gradient(&self, u: &VectorField) -> Result<Tensor2> {
        Ok(self.vector_gradient_jet(&self.vector(u)?).value())
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
}

/// Velocity components and Frenet rotation rates of a moving curve, as jets.
#[derive(Clone, Debug)]
pub struct CurveKinematics {
    pub fr: FrenetJets,
    tau_var: usize,
    pub v: V3<Jet>,
    pub v_t: Jet,
    pub v_n: Jet,
    pub v_b: Jet,
    pub alpha: Jet,
    pub beta: Jet,
    pub gamma: Jet,
}

/// `∂τ` of the Frenet frame at fixed `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenetRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub v_t: f64,
    pub v_n: f64,
    pub v_b: f64,
    /// Row `i` holds the `(t̂, n̂, b̂)` components of `∂τ` of frame vector `i`.
    pub matrix: [[f64; 3]; 3],
    /// `∂τt̂, ∂τn̂, ∂τb̂` in Cartesian components.
    pub dtau: [Vec3; 3],
}

/// Residuals of the two compatibility conditions of a moving Frenet frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintResiduals {
    /// `∇ₛv_t − κv_n` in the arclength-preserving parameterisation.
    pub c1: f64,
    /// The `∂τκ` balance.
    pub c2: f64,
    /// `∂τ|t|/|t|`: the parameter stretch rate of the chart itself, which
    /// equals `∇ₛv_t − κv_n` before the gauge change.
    pub stretch: f64,
}

impl CurveKinematics {
    /// Kinematics from timed Frenet jets whose time variable is `tau_var`.
    pub fn new(fr: FrenetJets, tau_var: usize) -> Result<Self> {
        if fr.straight {
            return Err(Error::StraightSegment(format!("κ = 0 at s = {}", fr.s)));
        }
        let v = fr.p.d(tau_var);
        let v_t = v.dot(&fr.t);
        let v_n = v.dot(&fr.n);
        let v_b = v.dot(&fr.b);
        let alpha = fr.kappa.clone() * v_t.clone() - fr.omega.clone() * v_b.clone() + fr.ds(&v_n);
        let beta = fr.omega.clone() * v_n.clone() + fr.ds(&v_b);
        let gamma = (fr.omega.clone() * alpha.clone() + fr.ds(&beta)) * fr.kappa.recip();
        Ok(CurveKinematics {
            fr,
            tau_var,
            v,
            v_t,
            v_n,
            v_b,
            alpha,
            beta,
            gamma,
        })
    }

    /// Kinematics of a time-dependent chart at `(s, τ)`.
    pub fn at(curve: &CurveChart, s: f64, tau: f64) -> Result<Self> {
        if !curve.is_time_dependent() {
            return Err(Error::MissingTime("curve chart has no τ dependence".into()));
        }
        Self::new(FrenetJets::new(curve, s, tau, 2, TUBE_TIMED_DEGREE, Some(1))?, 1)
    }

    fn ds(&self, f: &Jet) -> Jet {
        self.fr.ds(f)
    }

    pub fn rates(&self) -> FrenetRates {
        let (a, b, g) = (self.alpha.value(), self.beta.value(), self.gamma.value());
        let matrix = [[0.0, a, b], [-a, 0.0, g], [-b, -g, 0.0]];
        let e = [self.fr.t.value(), self.fr.n.value(), self.fr.b.value()];
        let comb = |r: [f64; 3]| e[0].scale(&r[0]) + e[1].scale(&r[1]) + e[2].scale(&r[2]);
        FrenetRates {
            alpha: a,
            beta: b,
            gamma: g,
            v_t: self.v_t.value(),
            v_n: self.v_n.value(),
            v_b: self.v_b.value(),
            matrix,
            dtau: [comb(matrix[0]), comb(matrix[1]), comb(matrix[2])],
        }
    }

    pub fn constraints(&self) -> ConstraintResiduals {
        let fr = &self.fr;
        let (k, w) = (&fr.kappa, &fr.omega);
        let stretch = (fr.speed.d(self.tau_var) * fr.speed.recip()).value();
        let raw = (self.ds(&self.v_t) - k.clone() * self.v_n.clone()).value();
        let c2 = -(self.v_b.clone() * self.ds(w)) - w.clone() * self.ds(&self.v_b) * 2.0 - k.d(self.tau_var)
            + self.ds(&self.ds(&self.v_n))
            + self.v_t.clone() * self.ds(k)
            + (k.clone() * k.clone() - w.clone() * w.clone()) * self.v_n.clone();
        ConstraintResiduals {
            c1: raw - stretch,
            c2: c2.value(),
            stretch,
        }
    }

    /// `∂τω` from the velocity components and their arclength derivatives.
    pub fn torsion_rate(&self) -> f64 {
        let k = self.fr.kappa.value();
        let w = self.fr.omega.value();
        let (vt, vn, vb) = (self.v_t.value(), self.v_n.value(), self.v_b.value());
        let nth = |f: &Jet, n: usize| (0..n).fold(f.clone(), |g, _| self.ds(&g)).value();
        let (ks, ws, wss) = (nth(&self.fr.kappa, 1), nth(&self.fr.omega, 1), nth(&self.fr.omega, 2));
        let (bs, bss, bsss) = (nth(&self.v_b, 1), nth(&self.v_b, 2), nth(&self.v_b, 3));
        let (ns, nss) = (nth(&self.v_n, 1), nth(&self.v_n, 2));
        let k2 = k * k;
        w * w * vb * ks / k2 - ks * bss / k2 - w * w * bs / k - 2.0 * w * vb * ws / k + k * bs + bsss / k
            - 2.0 * w * ks * ns / k2
            - vn * ks * ws / k2
            + 2.0 * w * nss / k
            + 3.0 * ws * ns / k
            + vn * wss / k
            + vt * ws
            + 2.0 * k * w * vn
    }

    /// `∂τω` read directly off the jets, for comparison.
    pub fn torsion_rate_direct(&self) -> f64 {
        self.fr.omega.d(self.tau_var).value()
    }
}

/// `(α, β, γ)` and the rate matrix of the Frenet frame.
pub fn dt_frenet(curve: &CurveChart, s: f64, tau: f64) -> Result<FrenetRates> {
    Ok(CurveKinematics::at(curve, s, tau)?.rates())
}

pub fn frenet_constraint_residuals(curve: &CurveChart, s: f64, tau: f64) -> Result<ConstraintResiduals> {
    Ok(CurveKinematics::at(curve, s, tau)?.constraints())
}

pub fn torsion_evolution(curve: &CurveChart, s: f64, tau: f64) -> Result<f64> {
    Ok(CurveKinematics::at(curve, s, tau)?.torsion_rate())
}

/// Rates of the rotated tube frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeFrameRates {
    pub alpha_p: f64,
    pub beta_p: f64,
    pub gamma_p: f64,
    /// Cartesian-frame rates: `∂t t̂ₛ = a t̂_σ + b t̂_θ`, `∂t t̂_σ = −a t̂ₛ + c t̂_θ`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dphi_dtau: f64,
}

/// A tube point on a moving curve, with all rates as jets.
#[derive(Clone, Debug)]
pub struct MovingTube {
    pub geo: TubeGeometry,
    pub kin: CurveKinematics,
    pub v_sigma: Jet,
    pub v_theta: Jet,
    pub alpha_p: Jet,
    pub beta_p: Jet,
    pub gamma_p: Jet,
    pub rate_a: Jet,
    pub rate_b: Jet,
    pub rate_c: Jet,
}

impl MovingTube {
    pub fn new(tube: &Tube, s: f64, theta: f64, sigma: f64) -> Result<Self> {
        let geo = TubeGeometry::timed(tube, s, theta, sigma)?;
        let kin = CurveKinematics::new(geo.fr.clone(), TAU_VAR)?;
        let (cs, sn) = (&geo.cs, &geo.sn);
        let v_sigma = cs.clone() * kin.v_n.clone() + sn.clone() * kin.v_b.clone();
        let v_theta = cs.clone() * kin.v_b.clone() - sn.clone() * kin.v_n.clone();
        let alpha_p = cs.clone() * kin.alpha.clone() + sn.clone() * kin.beta.clone();
        let beta_p = cs.clone() * kin.beta.clone() - sn.clone() * kin.alpha.clone();
        let gamma_p = kin.gamma.clone() + geo.phi.d(TAU_VAR);
        let ih = geo.h_s.recip();
        let k = &geo.fr.kappa;
        // A and B here carry no 1/h_s: a = (α′ − v_t κ cs)/h_s
        let rate_a = (alpha_p.clone() - kin.v_t.clone() * k.clone() * cs.clone()) * ih.clone();
        let lag = geo.sigma_jet().clone() * alpha_p.clone() - kin.v_t.clone();
        let rate_b = beta_p.clone() - k.clone() * sn.clone() * lag * ih;
        let rate_c = -(v_theta.clone() * geo.sigma_jet().recip());
        Ok(MovingTube {
            geo,
            kin,
            v_sigma,
            v_theta,
            alpha_p,
            beta_p,
            gamma_p,
            rate_a,
            rate_b,
            rate_c,
        })
    }

    pub fn frame_rates(&self) -> TubeFrameRates {
        TubeFrameRates {
            alpha_p: self.alpha_p.value(),
            beta_p: self.beta_p.value(),
            gamma_p: self.gamma_p.value(),
            a: self.rate_a.value(),
            b: self.rate_b.value(),
            c: self.rate_c.value(),
            dphi_dtau: self.geo.phi.d(TAU_VAR).value(),
        }
    }

    fn coordinate_rate_jets(&self) -> [Jet; 3] {
        let g = &self.geo;
        let sig = g.sigma_jet();
        let lag = self.kin.v_t.clone() - sig.clone() * self.alpha_p.clone();
        let ds = -(lag * (g.fr.speed.clone() * g.h_s.clone()).recip());
        let dg = -self.v_sigma.clone();
        let dth = -((self.v_theta.clone() + sig.clone() * self.gamma_p.clone()) * sig.recip());
        [ds, dg, dth]
    }

    /// `(∂ts, ∂tσ, ∂tθ)` at fixed ambient position.
    pub fn dt_coordinates(&self) -> [f64; 3] {
        self.coordinate_rate_jets().map(|j| j.value())
    }

    /// Time derivative of a scalar at fixed ambient position.
    pub fn dt_scalar_jet(&self, f: &Jet) -> Jet {
        let [rs, rg, rt] = self.coordinate_rate_jets();
        f.d(TAU_VAR) + rs * f.d(S_VAR) + rg * f.d(SIGMA_VAR) + rt * f.d(THETA_VAR)
    }

    /// Time derivative of a vector at fixed ambient position, in Cartesian components.
    pub fn dt_vector_jet(&self, u: &V3<Jet>) -> V3<Jet> {
        let [us, ug, ut] = self.geo.components(u);
        let (a, b, c) = (&self.rate_a, &self.rate_b, &self.rate_c);
        let ts = self.dt_scalar_jet(&us) - a.clone() * ug.clone() - b.clone() * ut.clone();
        let tg = self.dt_scalar_jet(&ug) + a.clone() * us.clone() - c.clone() * ut.clone();
        let tt = self.dt_scalar_jet(&ut) + b.clone() * us + c.clone() * ug;
        self.geo.assemble([ts, tg, tt])
    }

    pub fn dt_scalar(&self, f: &ScalarField) -> Result<f64> {
        Ok(self.dt_scalar_jet(&self.geo.scalar(f)?).value())
    }

    pub fn dt_vector(&self, u: &VectorField) -> Result<Vec3> {
        Ok(self.dt_vector_jet(&self.geo.vector(u)?).value())
    }
}

pub fn dt_tube_frame(tube: &Tube, s: f64, theta: f64, sigma: f64) -> Result<TubeFrameRates> {
    Ok(MovingTube::new(tube, s, theta, sigma)?.frame_rates())
}

/// Coordinate rates at ambient `x`, with the coordinates of `x`.
pub fn dt_tube_coordinates(tube: &Tube, x: &Vec3) -> Result<([f64; 3], TubeCoordinates)> {
    let c = tube.from_cartesian(x)?;
    let m = MovingTube::new(tube, c.s, c.theta, c.sigma)?;
    Ok((m.dt_coordinates(), c))
}

pub fn dt_scalar_tube(tube: &Tube, f: &ScalarField, s: f64, theta: f64, sigma: f64) -> Result<f64> {
    MovingTube::new(tube, s, theta, sigma)?.dt_scalar(f)
}

pub fn dt_vector_tube(tube: &Tube, u: &VectorField, s: f64, theta: f64, sigma: f64) -> Result<Vec3> {
    MovingTube::new(tube, s, theta, sigma)?.dt_vector(u)
}

/// Tube operator selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TubeOp {
    Gradient,
    VectorGradient,
    Divergence,
    Laplacian,
    Curl,
    VectorLaplacian,
    DtScalar,
    DtVector,
    DTorsion,
}

impl TubeOp {
    pub const ALL: [TubeOp; 9] = [
        TubeOp::Gradient,
        TubeOp::VectorGradient,
        TubeOp::Divergence,
        TubeOp::Laplacian,
        TubeOp::Curl,
        TubeOp::VectorLaplacian,
        TubeOp::DtScalar,
        TubeOp::DtVector,
        TubeOp::DTorsion,
    ];

    /// Spatial operators checked against the ambient oracle.
    pub const SPATIAL: [TubeOp; 6] = [
        TubeOp::Gradient,
        TubeOp::VectorGradient,
        TubeOp::Divergence,
        TubeOp::Laplacian,
        TubeOp::Curl,
        TubeOp::VectorLaplacian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TubeOp::Gradient => "grad",
            TubeOp::VectorGradient => "vecgrad",
            TubeOp::Divergence => "div",
            TubeOp::Laplacian => "lap",
            TubeOp::Curl => "curl",
            TubeOp::VectorLaplacian => "veclap",
            TubeOp::DtScalar => "dtscalar",
            TubeOp::DtVector => "dtvector",
            TubeOp::DTorsion => "dtorsion",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "laplacian" => Some(TubeOp::Laplacian),
            _ => Self::ALL.iter().copied().find(|o| o.name() == s),
        }
    }

    pub fn takes_scalar(self) -> bool {
        matches!(self, TubeOp::Gradient | TubeOp::Laplacian | TubeOp::DtScalar)
    }

    /// Evaluate at `(s, θ, σ)`; `dtorsion` ignores the field.
    pub fn apply(self, tube: &Tube, field: Option<&Operand>, s: f64, theta: f64, sigma: f64) -> Result<OpValue> {
        if self == TubeOp::DTorsion {
            return Ok(OpValue::Scalar(torsion_evolution(&tube.curve, s, tube.tau())?));
        }
        let field = field.ok_or_else(|| Error::Invalid(format!("operator {} needs a field", self.name())))?;
        let wrong = || Error::Invalid(format!("operator {} got the wrong field kind", self.name()));
        match (self, field) {
            (TubeOp::DtScalar, Operand::Scalar(f)) => {
                Ok(OpValue::Scalar(dt_scalar_tube(tube, f, s, theta, sigma)?))
            }
            (TubeOp::DtVector, Operand::Vector(u)) => {
                Ok(OpValue::Vector(dt_vector_tube(tube, u, s, theta, sigma)?))
            }
            (TubeOp::DtScalar | TubeOp::DtVector, _) => Err(wrong()),
            _ => {
                let g = TubeGeometry::new(tube, s, theta, sigma)?;
                match (self, field) {
                    (TubeOp::Gradient, Operand::Scalar(f)) => Ok(OpValue::Vector(g.gradient(f)?)),
                    (TubeOp::Laplacian, Operand::Scalar(f)) => Ok(OpValue::Scalar(g.laplacian(f)?)),
                    (TubeOp::VectorGradient, Operand::Vector(u)) => Ok(OpValue::Tensor(g.vector_gradient(u)?)),
                    (TubeOp::Divergence, Operand::Vector(u)) => Ok(OpValue::Scalar(g.divergence(u)?)),
                    (TubeOp::Curl, Operand::Vector(u)) => Ok(OpValue::Vector(g.curl(u)?)),
                    (TubeOp::VectorLaplacian, Operand::Vector(u)) => Ok(OpValue::Vector(g.vector_laplacian(u)?)),
                    _ => Err(wrong()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(t: &str) -> ScalarField {
        ScalarField::parse(t).unwrap()
    }

    fn amb(t: [&str; 3]) -> VectorField {
        VectorField::ambient(t).unwrap()
    }

    fn helix() -> Tube {
        Tube::new(CurveChart::helix(1.0, 0.4), 0.2).unwrap()
    }

    fn line() -> Tube {
        Tube::new(CurveChart::line(), 0.0).unwrap()
    }

    fn deforming() -> CurveChart {
        CurveChart::from_exprs(["cos(2*pi*s)", "sin(2*pi*s)", "tau*s^2"], [0.0, 1.0], false).unwrap()
    }

    #[test]
    fn first_order_operators() {
        let g = TubeGeometry::new(&helix(), 3.0, 1.1, 0.3).unwrap();
        assert!((g.gradient(&sf("sigma")).unwrap() - g.t_sigma.value()).max_abs() < 1e-13);
        assert!((g.gradient(&sf("x")).unwrap() - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-12);
        assert!((g.divergence(&amb(["x", "y", "z"])).unwrap() - 3.0).abs() < 1e-12);
        let m = g.vector_gradient(&amb(["x + 2*y", "y + 3*z", "4*x + z"])).unwrap();
        let a = Tensor2 { m: [[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [4.0, 0.0, 1.0]] };
        assert!((m - a.transpose()).max_abs() < 1e-11);
        assert!(g.vector_gradient(&amb(["1", "-2", "0.5"])).unwrap().max_abs() < 1e-12);
        let f = g.scalar(&sf("sin(x)*y*z + z^2")).unwrap();
        assert!(g.curl_jet(&g.gradient_jet(&f)).value().max_abs() < 1e-11);
    }

    #[test]
    fn straight_line_is_cylindrical_polar() {
        let g = TubeGeometry::new(&line(), 0.5, 0.7, 0.4).unwrap();
        let radial = VectorField::frame(["0", "1", "0"]).unwrap();
        assert!((g.divergence(&radial).unwrap() - 1.0 / 0.4).abs() < 1e-13);
        let m = g.vector_gradient(&radial).unwrap();
        let tt = g.t_theta.value().outer(&g.t_theta.value()).scale(&(1.0 / 0.4));
        assert!((m - tt).max_abs() < 1e-13);
        assert!(g.laplacian(&sf("log(sigma)")).unwrap().abs() < 1e-12);
        let cu = g.curl(&amb(["-y", "x", "0"])).unwrap();
        assert!((cu - Vec3::new(0.0, 0.0, 2.0)).max_abs() < 1e-12);
        assert!((g.gradient(&sf("z")).unwrap().dot(&g.t_s.value()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn second_order_operators() {
        let tube = Tube::new(CurveChart::parabolic_helix(), 0.0).unwrap();
        let g = TubeGeometry::new(&tube, 0.4, 2.0, 0.05).unwrap();
        assert!((g.laplacian(&sf("x^2+y^2+z^2")).unwrap() - 6.0).abs() < 1e-9);
        assert!(g.vector_laplacian(&amb(["x", "y", "z"])).unwrap().max_abs() < 1e-9);
        let vl = g.vector_laplacian(&amb(["x^2", "0", "0"])).unwrap();
        assert!((vl - Vec3::new(2.0, 0.0, 0.0)).max_abs() < 1e-8);
        let u = g.vector(&amb(["sin(y)*z", "x*x*z", "cos(x+y)"])).unwrap();
        let d = g.vector_laplacian_jet(&u) - g.vector_laplacian_composed_jet(&u);
        assert!(d.value().max_abs() < 1e-8);
    }

    #[test]
    fn rigid_translation_of_helix() {
        let c = CurveChart::from_exprs(["cos(s) + 0.3*tau", "sin(s) - 0.2*tau", "0.4*s + 0.5*tau"], [0.0, 12.0], false)
            .unwrap();
        let r = dt_frenet(&c, 2.0, 0.1).unwrap();
        assert!(r.alpha.abs() < 1e-12 && r.beta.abs() < 1e-12 && r.gamma.abs() < 1e-12);
        let k = frenet_constraint_residuals(&c, 2.0, 0.1).unwrap();
        assert!(k.c1.abs() < 1e-12 && k.c2.abs() < 1e-12);
        assert!(torsion_evolution(&c, 2.0, 0.1).unwrap().abs() < 1e-11);
    }

    #[test]
    fn inflating_circle() {
        let c = CurveChart::from_exprs(["(1+tau)*cos(s)", "(1+tau)*sin(s)", "0"], [0.0, 2.0 * std::f64::consts::PI], true)
            .unwrap();
        let r = dt_frenet(&c, 0.8, 0.5).unwrap();
        assert!(r.alpha.abs() < 1e-13 && r.beta.abs() < 1e-13 && r.gamma.abs() < 1e-13);
        let k = frenet_constraint_residuals(&c, 0.8, 0.5).unwrap();
        assert!(k.c1.abs() < 1e-12 && k.c2.abs() < 1e-12);
        assert!((k.stretch - 1.0 / 1.5).abs() < 1e-13);
        assert!(torsion_evolution(&c, 0.8, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn deforming_curve_rates_match_differences() {
        let c = deforming();
        let (s, tau, h) = (0.5, 1.0, 1e-4);
        let r = dt_frenet(&c, s, tau).unwrap();
        let fp = crate::curve_frames::frenet_at(&c, s, tau + h).unwrap();
        let fm = crate::curve_frames::frenet_at(&c, s, tau - h).unwrap();
        let fd = [(fp.t - fm.t), (fp.n - fm.n), (fp.b - fm.b)].map(|v| v.scale(&(0.5 / h)));
        for i in 0..3 {
            assert!((fd[i] - r.dtau[i]).max_abs() < 1e-6, "{i}");
        }
        let k = frenet_constraint_residuals(&c, s, tau).unwrap();
        assert!(k.c1.abs() < 1e-10 && k.c2.abs() < 1e-10, "{k:?}");
        let w = torsion_evolution(&c, s, tau).unwrap();
        let fdw = (fp.omega - fm.omega) / (2.0 * h);
        assert!((w - fdw).abs() <= 1e-3 * fdw.abs().max(1e-8), "{w} {fdw}");
    }

    #[test]
    fn chain_rule_closure_and_coordinate_rates() {
        let c = deforming();
        let tau = 1.0;
        let tube = Tube::at_time(c.clone(), tau, 0.0).unwrap();
        let (s, th, sg) = (0.45, 1.3, 0.08);
        let m = MovingTube::new(&tube, s, th, sg).unwrap();
        for f in ["x", "y", "z"] {
            assert!(m.dt_scalar(&sf(f)).unwrap().abs() < 1e-10, "{f}");
        }
        assert!(m.dt_vector(&amb(["1", "2", "-3"])).unwrap().max_abs() < 1e-10);
        assert!(m.dt_vector(&amb(["x*y", "z", "x"])).unwrap().max_abs() < 1e-10);

        let x = m.geo.point();
        let h = 1e-5;
        let cp = Tube::at_time(c.clone(), tau + h, 0.0).unwrap().from_cartesian_near(&x, s).unwrap();
        let cm = Tube::at_time(c.clone(), tau - h, 0.0).unwrap().from_cartesian_near(&x, s).unwrap();
        let rates = m.dt_coordinates();
        let fd = [(cp.s - cm.s) / (2.0 * h), (cp.sigma - cm.sigma) / (2.0 * h), (cp.theta - cm.theta) / (2.0 * h)];
        for i in 0..3 {
            assert!((rates[i] - fd[i]).abs() < 1e-5, "{i}: {rates:?} {fd:?}");
        }

        // frame rates a, b, c against the frame at x at nearby times
        let frame_at = |t: f64, co: &TubeCoordinates| {
            let tb = Tube::at_time(c.clone(), t, 0.0).unwrap();
            tb.frame(co.s, co.theta, co.sigma).unwrap()
        };
        let (fp, fm) = (frame_at(tau + h, &cp), frame_at(tau - h, &cm));
        let f0 = tube.frame(s, th, sg).unwrap();
        let d_ts = (fp.t_s - fm.t_s).scale(&(0.5 / h));
        let d_tg = (fp.t_sigma - fm.t_sigma).scale(&(0.5 / h));
        let fr = m.frame_rates();
        assert!((d_ts.dot(&f0.t_sigma) - fr.a).abs() < 1e-5);
        assert!((d_ts.dot(&f0.t_theta) - fr.b).abs() < 1e-5);
        assert!((d_tg.dot(&f0.t_theta) - fr.c).abs() < 1e-5);
    }

    #[test]
    fn static_curve_has_no_rates() {
        let c = CurveChart::from_exprs(["cos(s)", "sin(s)", "0.3*s + 0*tau"], [0.0, 10.0], false).unwrap();
        let tube = Tube::at_time(c, 0.0, 0.0).unwrap();
        let r = dt_tube_frame(&tube, 2.0, 0.5, 0.2).unwrap();
        assert!(r.a.abs() < 1e-13 && r.b.abs() < 1e-13 && r.c.abs() < 1e-13);
        let m = MovingTube::new(&tube, 2.0, 0.5, 0.2).unwrap();
        assert!(m.dt_coordinates().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn op_names_round_trip() {
        for op in TubeOp::ALL {
            assert_eq!(TubeOp::from_name(op.name()), Some(op));
        }
    }
}
