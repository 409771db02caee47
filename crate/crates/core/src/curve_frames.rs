//! Frenet–Serret frames, the torsion-compensating Bishop angle and
//! orthogonal tube coordinates `x = p + σ(cos(θ+φ) n̂ + sin(θ+φ) b̂)`.

use crate::chart::CurveChart;
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::linalg::{Vec3, V3};
use std::f64::consts::PI;

/// Jet variable layout for curves and tubes.
pub const S_VAR: usize = 0;
pub const THETA_VAR: usize = 1;
pub const SIGMA_VAR: usize = 2;
pub const TAU_VAR: usize = 3;

/// Below this curvature the Frenet normal is replaced by a fixed transverse axis.
pub const STRAIGHT_TOL: f64 = 1e-12;

/// Frenet data at one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenetFrame {
    pub p: Vec3,
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
    pub kappa: f64,
    pub omega: f64,
    /// `|∂ₛp|`.
    pub speed: f64,
    /// Straight-segment fallback was used.
    pub straight: bool,
}

/// Frenet quantities as jets around `s`, optionally with a time variable.
#[derive(Clone, Debug)]
pub struct FrenetJets {
    pub s: f64,
    pub tau: f64,
    pub p: V3<Jet>,
    pub speed: Jet,
    pub t: V3<Jet>,
    pub n: V3<Jet>,
    pub b: V3<Jet>,
    pub kappa: Jet,
    pub omega: Jet,
    pub straight: bool,
}

fn transverse_axis(t: &Vec3) -> Vec3 {
    let a = [t.x.abs(), t.y.abs(), t.z.abs()];
    let k = (0..3).min_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    Vec3::from_array(e)
}

impl FrenetJets {
    /// From a position jet whose variable 0 is the curve parameter.
    pub fn from_position(p: V3<Jet>, s: f64, tau: f64) -> Result<Self> {
        let dp = p.d(S_VAR);
        let speed = dp.norm();
        if !(speed.value() > 0.0) || !speed.value().is_finite() {
            return Err(Error::Degenerate(vec![s]));
        }
        let inv = speed.recip();
        let t = dp.scale(&inv);
        let dt = t.d(S_VAR).scale(&inv);
        let kv = dt.value().norm();
        if kv < STRAIGHT_TOL {
            let e = V3::<Jet>::from_f64(&transverse_axis(&t.value()));
            let n = (e.clone() - t.scale(&t.dot(&e))).normalized();
            let b = t.cross(&n);
            return Ok(FrenetJets {
                s,
                tau,
                p,
                speed,
                t,
                n,
                b,
                kappa: Jet::cst(0.0),
                omega: Jet::cst(0.0),
                straight: true,
            });
        }
        let kappa = dt.norm();
        let n = dt.scale(&kappa.recip());
        let b = t.cross(&n);
        let omega = n.d(S_VAR).scale(&inv).dot(&b);
        Ok(FrenetJets {
            s,
            tau,
            p,
            speed,
            t,
            n,
            b,
            kappa,
            omega,
            straight: false,
        })
    }

    pub fn new(curve: &CurveChart, s: f64, tau: f64, nvars: usize, deg: usize, tau_var: Option<usize>) -> Result<Self> {
        let s = curve.wrap(s)?;
        Self::from_position(curve.jet(s, tau, nvars, deg, tau_var), s, tau)
    }

    /// Arclength derivative `∇ₛ = |t|⁻¹ ∂ₛ`.
    pub fn ds(&self, f: &Jet) -> Jet {
        f.d(S_VAR) * self.speed.recip()
    }

    pub fn ds_vec(&self, v: &V3<Jet>) -> V3<Jet> {
        v.d(S_VAR).scale(&self.speed.recip())
    }

    pub fn frame(&self) -> FrenetFrame {
        FrenetFrame {
            p: self.p.value(),
            t: self.t.value(),
            n: self.n.value(),
            b: self.b.value(),
            kappa: self.kappa.value(),
            omega: self.omega.value(),
            speed: self.speed.value(),
            straight: self.straight,
        }
    }
}

/// Frenet–Serret frame, curvature and torsion at `s`.
pub fn frenet(curve: &CurveChart, s: f64) -> Result<FrenetFrame> {
    frenet_at(curve, s, 0.0)
}

pub fn frenet_at(curve: &CurveChart, s: f64, tau: f64) -> Result<FrenetFrame> {
    Ok(FrenetJets::new(curve, s, tau, 1, 3, None)?.frame())
}

// Eight-point Gauss–Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫ₐᵇ f` by eight-point Gauss–Legendre.
pub fn gauss_legendre(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        acc += w * (f(m + r * x)? + f(m - r * x)?);
    }
    Ok(acc * r)
}

/// Four-point rule, used where the interval is at most half a table step.
fn gauss_legendre4(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (x, w) in X.iter().zip(W) {
        acc += w * (f(m + r * x)? + f(m - r * x)?);
    }
    Ok(acc * r)
}

/// Tabulated Bishop angle `φ(s)` solving `∂ₛφ = −ω|t|`, `φ(s₀) = φ₀`.
#[derive(Clone, Debug)]
pub struct BishopTable {
    pub curve: CurveChart,
    pub tau: f64,
    pub phi0: f64,
    pub s0: f64,
    pub h: f64,
    pub phi: Vec<f64>,
    /// `∂τφ` at the nodes, when the curve moves.
    pub dphi_dtau: Option<Vec<f64>>,
    /// Richardson estimate of the node error.
    pub error_estimate: f64,
    /// When false, `φ ≡ φ₀` (plain Frenet-relative angle).
    pub rotating: bool,
}

pub const BISHOP_MIN_NODES: usize = 512;
pub const BISHOP_MAX_NODES: usize = 1 << 17;
pub const BISHOP_TOL: f64 = 1e-10;

/// `ω|t|` at `s`.
fn twist_rate(curve: &CurveChart, s: f64, tau: f64) -> Result<f64> {
    let f = FrenetJets::new(curve, s, tau, 1, 3, None)?;
    Ok(f.omega.value() * f.speed.value())
}

/// `∂τ(ω|t|)` at `s`.
fn twist_rate_dtau(curve: &CurveChart, s: f64, tau: f64) -> Result<f64> {
    let f = FrenetJets::new(curve, s, tau, 2, 4, Some(1))?;
    Ok((f.omega.clone() * f.speed.clone()).d(1).value())
}

fn rk4_table(rate: &dyn Fn(f64) -> Result<f64>, s0: f64, len: f64, n: usize) -> Result<Vec<f64>> {
    let h = len / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut f_lo = rate(s0)?;
    for k in 0..n {
        let a = s0 + k as f64 * h;
        // dφ/ds has no φ dependence, so the RK4 stages collapse to Simpson's rule
        let f_mid = rate(a + 0.5 * h)?;
        let f_hi = rate(a + h)?;
        acc += h / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
        out.push(acc);
        f_lo = f_hi;
    }
    Ok(out)
}

fn converged_table(rate: &dyn Fn(f64) -> Result<f64>, s0: f64, len: f64, n_min: usize) -> Result<(Vec<f64>, f64)> {
    let mut n = n_min.max(BISHOP_MIN_NODES);
    let mut coarse = rk4_table(rate, s0, len, n)?;
    loop {
        let fine = rk4_table(rate, s0, len, 2 * n)?;
        let est = (0..=n)
            .map(|k| (fine[2 * k] - coarse[k]).abs() / 15.0)
            .fold(0.0, f64::max);
        if est < BISHOP_TOL {
            return Ok((fine, est));
        }
        if 2 * n >= BISHOP_MAX_NODES {
            return Err(Error::GridTooCoarse(est));
        }
        n *= 2;
        coarse = fine;
    }
}

/// Integrate the Bishop angle along the whole parameter interval.
pub fn bishop_angle(curve: &CurveChart, phi0: f64) -> Result<BishopTable> {
    BishopTable::new(curve, 0.0, phi0, false, BISHOP_MIN_NODES)
}

impl BishopTable {
    /// Table at time `τ`; `timed` also tabulates `∂τφ`.
    pub fn new(curve: &CurveChart, tau: f64, phi0: f64, timed: bool, n_min: usize) -> Result<Self> {
        let [s0, s1] = curve.domain;
        let len = s1 - s0;
        let rate = |s: f64| twist_rate(curve, s, tau).map(|v| -v);
        let (acc, est) = converged_table(&rate, s0, len, n_min)?;
        let n = acc.len() - 1;
        let phi = acc.iter().map(|v| phi0 + v).collect();
        let dphi_dtau = if timed {
            let rate_t = |s: f64| twist_rate_dtau(curve, s, tau).map(|v| -v);
            Some(rk4_table(&rate_t, s0, len, n)?)
        } else {
            None
        };
        Ok(BishopTable {
            curve: curve.clone(),
            tau,
            phi0,
            s0,
            h: len / n as f64,
            phi,
            dphi_dtau,
            error_estimate: est,
            rotating: true,
        })
    }

    /// Frenet-relative angle, `φ ≡ φ₀`.
    pub fn frozen(curve: &CurveChart, tau: f64, phi0: f64) -> Self {
        BishopTable {
            curve: curve.clone(),
            tau,
            phi0,
            s0: curve.domain[0],
            h: curve.domain[1] - curve.domain[0],
            phi: vec![phi0, phi0],
            dphi_dtau: Some(vec![0.0, 0.0]),
            error_estimate: 0.0,
            rotating: false,
        }
    }

    fn node(&self, s: f64) -> (usize, f64) {
        let n = self.phi.len() - 1;
        let k = (((s - self.s0) / self.h).round().max(0.0) as usize).min(n);
        (k, self.s0 + k as f64 * self.h)
    }

    /// `φ(s)`: nearest node plus a local Gauss–Legendre integral.
    pub fn phi(&self, s: f64) -> Result<f64> {
        if !self.rotating {
            return Ok(self.phi0);
        }
        let s = self.curve.wrap(s)?;
        let (k, sk) = self.node(s);
        if s == sk {
            return Ok(self.phi[k]);
        }
        let local = gauss_legendre4(|x| twist_rate(&self.curve, x, self.tau), sk, s)?;
        Ok(self.phi[k] - local)
    }

    /// `∂τφ(s)`.
    pub fn dphi_dtau(&self, s: f64) -> Result<f64> {
        if !self.rotating {
            return Ok(0.0);
        }
        let tab = self
            .dphi_dtau
            .as_ref()
            .ok_or_else(|| Error::MissingTime("Bishop table built without time derivatives".into()))?;
        let s = self.curve.wrap(s)?;
        let (k, sk) = self.node(s);
        if s == sk {
            return Ok(tab[k]);
        }
        let local = gauss_legendre(|x| twist_rate_dtau(&self.curve, x, self.tau), sk, s)?;
        Ok(tab[k] - local)
    }

    /// Angle mismatch after one loop of a closed curve, wrapped to `(−π, π]`.
    pub fn closure_mismatch(&self) -> f64 {
        let d = self.phi[self.phi.len() - 1] - self.phi[0];
        let w = (d + PI).rem_euclid(2.0 * PI) - PI;
        if w == -PI {
            PI
        } else {
            w
        }
    }

    /// Node table `(s, φ)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.phi.iter().enumerate().map(|(k, v)| (self.s0 + k as f64 * self.h, *v))
    }
}

/// Tube frame data at `(s, θ, σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeFrame {
    pub phi: f64,
    pub theta: f64,
    pub sigma: f64,
    pub t_s: Vec3,
    pub t_sigma: Vec3,
    pub t_theta: Vec3,
    pub h_s: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub cs: f64,
    pub sn: f64,
    pub frenet: FrenetFrame,
}

/// Tube coordinates of an ambient point.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeCoordinates {
    pub s: f64,
    pub theta: f64,
    pub sigma: f64,
    pub foot: Vec3,
}

/// A curve with its Bishop angle.
#[derive(Clone, Debug)]
pub struct Tube {
    pub curve: CurveChart,
    pub bishop: BishopTable,
}

impl Tube {
    pub fn new(curve: CurveChart, phi0: f64) -> Result<Self> {
        let bishop = bishop_angle(&curve, phi0)?;
        Ok(Tube { curve, bishop })
    }

    /// Tube at time `τ`, with `∂τφ` tabulated.
    pub fn at_time(curve: CurveChart, tau: f64, phi0: f64) -> Result<Self> {
        let bishop = BishopTable::new(&curve, tau, phi0, curve.is_time_dependent(), BISHOP_MIN_NODES)?;
        Ok(Tube { curve, bishop })
    }

    /// Negative control: angle measured from the Frenet normal.
    pub fn frenet_relative(curve: CurveChart, tau: f64, phi0: f64) -> Self {
        let bishop = BishopTable::frozen(&curve, tau, phi0);
        Tube { curve, bishop }
    }

    pub fn tau(&self) -> f64 {
        self.bishop.tau
    }

    pub fn frame(&self, s: f64, theta: f64, sigma: f64) -> Result<TubeFrame> {
        if !(sigma > 0.0) {
            return Err(Error::OnAxis(sigma));
        }
        let fr = frenet_at(&self.curve, s, self.tau())?;
        let phi = self.bishop.phi(s)?;
        let (sn, cs) = (theta + phi).sin_cos();
        let h_s = 1.0 - sigma * fr.kappa * cs;
        let t_sigma = fr.n.scale(&cs) + fr.b.scale(&sn);
        let t_theta = fr.n.scale(&-sn) + fr.b.scale(&cs);
        Ok(TubeFrame {
            phi,
            theta,
            sigma,
            t_s: fr.t,
            t_sigma,
            t_theta,
            h_s,
            a: fr.kappa * cs / h_s,
            b: -fr.kappa * sn / h_s,
            c: 1.0 / sigma,
            cs,
            sn,
            frenet: fr,
        })
    }

    pub fn to_cartesian(&self, s: f64, theta: f64, sigma: f64) -> Result<Vec3> {
        if sigma < 0.0 {
            return Err(Error::Invalid(format!("tube radius σ = {sigma} is negative")));
        }
        let fr = frenet_at(&self.curve, s, self.tau())?;
        let phi = self.bishop.phi(s)?;
        let (sn, cs) = (theta + phi).sin_cos();
        if 1.0 - sigma * fr.kappa * cs <= 0.0 {
            return Err(Error::Collar(format!("h_s ≤ 0 at s = {s}, σ = {sigma}")));
        }
        Ok(fr.p + (fr.n.scale(&cs) + fr.b.scale(&sn)).scale(&sigma))
    }

    fn refine(&self, x: &Vec3, seed: f64) -> Result<f64> {
        let c = &self.curve;
        let clamp = |s: f64| if c.periodic { s } else { s.clamp(c.domain[0], c.domain[1]) };
        let mut s = clamp(seed);
        let scale = x.norm().max(1.0);
        let eval = |s: f64| -> Result<(Vec3, Vec3, Vec3)> {
            let j = c.jet(c.wrap(s)?, self.tau(), 1, 2, None);
            let d = j.d(0);
            Ok((j.value(), d.value(), d.d(0).value()))
        };
        let mut polished = false;
        for _ in 0..50 {
            let (p, t, tt) = eval(s)?;
            let d = *x - p;
            let g = d.dot(&t);
            let r = (g / t.norm()).abs();
            if r <= 1e-12 * scale {
                if polished || r <= 1e-15 * scale {
                    return Ok(s);
                }
                polished = true;
            }
            let h = t.dot(&t) - d.dot(&tt);
            let step = if h > 0.0 { g / h } else { g / t.dot(&t) };
            let mut lam = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let trial = clamp(s + lam * step);
                let (pt, tn, _) = eval(trial)?;
                let gt = (*x - pt).dot(&tn) / tn.norm();
                if gt.abs() < (g / t.norm()).abs() {
                    s = trial;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            if !moved {
                if (g / t.norm()).abs() <= 1e-9 * scale {
                    return Ok(s);
                }
                break;
            }
        }
        let (p, t, _) = eval(s)?;
        let r = ((*x - p).dot(&t) / t.norm()).abs();
        if r <= 1e-9 * scale {
            Ok(s)
        } else {
            Err(Error::NoConvergence(format!("tube projection residual {r:.3e}")))
        }
    }

    /// Inverse of [`Tube::to_cartesian`] by grid-seeded Newton on `(x − p)·t = 0`.
    pub fn from_cartesian(&self, x: &Vec3) -> Result<TubeCoordinates> {
        self.from_cartesian_seeded(x, None)
    }

    pub fn from_cartesian_near(&self, x: &Vec3, guess: f64) -> Result<TubeCoordinates> {
        self.from_cartesian_seeded(x, Some(guess))
    }

    fn from_cartesian_seeded(&self, x: &Vec3, guess: Option<f64>) -> Result<TubeCoordinates> {
        let c = &self.curve;
        let s = match guess {
            Some(g) => self.refine(x, g)?,
            None => {
                let n = 256;
                let nodes: Vec<f64> = (0..n)
                    .map(|k| c.domain[0] + (k as f64 + 0.5) * (c.domain[1] - c.domain[0]) / n as f64)
                    .collect();
                let d: Vec<f64> = nodes.iter().map(|s| (*x - c.eval(s, &self.tau())).norm2()).collect();
                let mut mins: Vec<usize> = (0..n)
                    .filter(|&k| {
                        let l = if k > 0 { Some(k - 1) } else if c.periodic { Some(n - 1) } else { None };
                        let r = if k + 1 < n { Some(k + 1) } else if c.periodic { Some(0) } else { None };
                        l.is_none_or(|l| d[l] >= d[k]) && r.is_none_or(|r| d[r] >= d[k])
                    })
                    .collect();
                mins.sort_by(|a, b| d[*a].total_cmp(&d[*b]));
                let mut found: Vec<(f64, Vec3, f64)> = Vec::new();
                for &k in mins.iter().take(3) {
                    if let Ok(s) = self.refine(x, nodes[k]) {
                        let p = c.eval(&c.wrap(s)?, &self.tau());
                        found.push((s, p, (*x - p).norm()));
                    }
                }
                found.sort_by(|a, b| a.2.total_cmp(&b.2));
                let Some(&(s, p, dist)) = found.first() else {
                    return Err(Error::NoConvergence("tube projection".into()));
                };
                for (_, q, dq) in &found[1..] {
                    if (dq - dist).abs() <= 1e-9 * dist.max(1.0) && (*q - p).norm() > 1e-6 * x.norm().max(1.0) {
                        return Err(Error::Multiplicity(format!(
                            "{:?} is equidistant from two arcs of the curve",
                            x.to_array()
                        )));
                    }
                }
                s
            }
        };
        let s = c.wrap(s)?;
        let fr = frenet_at(c, s, self.tau())?;
        let d = *x - fr.p;
        let sigma = d.norm();
        if sigma < 1e-12 {
            return Err(Error::OnAxis(sigma));
        }
        if d.dot(&fr.t).abs() > 1e-8 * sigma.max(1.0) {
            return Err(Error::Collar("closest point is a curve end".into()));
        }
        let ang = d.dot(&fr.b).atan2(d.dot(&fr.n));
        let theta = (ang - self.bishop.phi(s)?).rem_euclid(2.0 * PI);
        if 1.0 - sigma * fr.kappa * ang.cos() <= 0.0 {
            return Err(Error::Collar(format!("σ = {sigma} beyond the focal distance")));
        }
        Ok(TubeCoordinates {
            s,
            theta,
            sigma,
            foot: fr.p,
        })
    }
}

/// Largest cosine between the coordinate Jacobian rows `∂ₛx, ∂_θx, ∂_σx`,
/// each taken by Richardson central differences of [`Tube::to_cartesian`].
pub fn orthogonality_residual(tube: &Tube, s: f64, theta: f64, sigma: f64) -> Result<f64> {
    let h = 1e-3;
    let x = |s: f64, t: f64, g: f64| tube.to_cartesian(s, t, g);
    let diff = |f: &dyn Fn(f64) -> Result<Vec3>, c: f64| -> Result<Vec3> {
        let d = |h: f64| -> Result<Vec3> { Ok((f(c + h)? - f(c - h)?).scale(&(0.5 / h))) };
        let (a, b) = (d(h)?, d(h / 2.0)?);
        Ok((b.scale(&4.0) - a).scale(&(1.0 / 3.0)))
    };
    let rows = [
        diff(&|v| x(v, theta, sigma), s)?,
        diff(&|v| x(s, v, sigma), theta)?,
        diff(&|v| x(s, theta, v), sigma)?,
    ];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            worst = worst.max((rows[i].dot(&rows[j]) / (rows[i].norm() * rows[j].norm())).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_and_helix_invariants() {
        let f = frenet(&CurveChart::circle(2.0), 0.7).unwrap();
        assert!((f.kappa - 0.5).abs() < 1e-14 && f.omega.abs() < 1e-14);
        let (a, b) = (1.5, 0.4);
        let h = frenet(&CurveChart::helix(a, b), 2.0).unwrap();
        let d = a * a + b * b;
        assert!((h.kappa - a / d).abs() < 1e-13 && (h.omega - b / d).abs() < 1e-13);
        assert!((h.t.cross(&h.n) - h.b).max_abs() < 1e-14);
    }

    #[test]
    fn straight_line_fallback() {
        let f = frenet(&CurveChart::line(), 0.3).unwrap();
        assert!(f.straight && f.kappa == 0.0 && f.omega == 0.0);
        assert!(f.n.dot(&f.t).abs() < 1e-15 && (f.n.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bishop_angle_examples() {
        let planar = bishop_angle(&CurveChart::circle(1.0), 0.3).unwrap();
        assert!(planar.nodes().all(|(_, v)| (v - 0.3).abs() < 1e-14));
        let (a, b) = (1.0, 0.5);
        let hel = CurveChart::helix(a, b);
        let tab = bishop_angle(&hel, 0.0).unwrap();
        let w = b / (a * a + b * b);
        let speed = (a * a + b * b).sqrt();
        for s in [0.0, 1.234, 7.0, 4.0 * PI] {
            assert!((tab.phi(s).unwrap() + w * speed * s).abs() < 1e-11);
        }
    }

    #[test]
    fn tube_round_trip_on_helix() {
        let tube = Tube::new(CurveChart::helix(1.0, 0.3), 0.0).unwrap();
        for (s, th, sg) in [(2.0, 0.4, 0.1), (5.5, 3.0, 0.3), (9.0, 5.9, 0.05)] {
            let x = tube.to_cartesian(s, th, sg).unwrap();
            let c = tube.from_cartesian(&x).unwrap();
            assert!((c.s - s).abs() < 1e-9 && (c.theta - th).abs() < 1e-9 && (c.sigma - sg).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_tube_frame() {
        let tube = Tube::new(CurveChart::circle(2.0), 0.0).unwrap();
        let f = tube.frame(0.5, 0.0, 0.3).unwrap();
        assert!((f.h_s - (1.0 - 0.3 / 2.0)).abs() < 1e-14);
        assert!((f.a - 0.5 / f.h_s).abs() < 1e-14 && f.b.abs() < 1e-14 && (f.c - 1.0 / 0.3).abs() < 1e-12);
        let line = Tube::new(CurveChart::line(), 0.0).unwrap().frame(1.0, 1.0, 0.2).unwrap();
        assert!(line.h_s == 1.0 && line.a == 0.0 && line.b == 0.0);
        assert!(matches!(tube.frame(0.5, 0.0, 0.0), Err(Error::OnAxis(_))));
    }

    #[test]
    fn equidistant_from_two_arcs() {
        // centre of a circle is equidistant from every arc
        let tube = Tube::new(CurveChart::circle(1.0), 0.0).unwrap();
        assert!(tube.from_cartesian(&Vec3::new(0.0, 0.0, 0.3)).is_err());
    }

    #[test]
    fn orthogonality_needs_the_bishop_rotation() {
        let helix = CurveChart::helix(1.0, 0.3);
        let rot = Tube::new(helix.clone(), 0.0).unwrap();
        let fixed = Tube::frenet_relative(helix, 0.0, 0.0);
        for (s, th) in [(1.0, 0.3), (4.0, 2.5), (7.5, 5.0)] {
            assert!(orthogonality_residual(&rot, s, th, 0.5).unwrap() < 1e-8);
            assert!(orthogonality_residual(&fixed, s, th, 0.5).unwrap() > 1e-3);
        }
        let coil = Tube::new(CurveChart::parabolic_helix(), 0.0).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert!(orthogonality_residual(&coil, s, 1.0, 0.02).unwrap() < 1e-8);
        }
    }
}
