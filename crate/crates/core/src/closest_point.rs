//! Closest-point projection onto a surface and the signed-distance
//! coordinate map `x = p(s) + σ n̂(s)`.

use crate::chart::SurfaceChart;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::{solve2, Vec3, V3};
use crate::surface_frames::{SurfaceGeometry, DEGENERACY_TOL};

/// Signed-distance coordinates of an ambient point.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfCoordinates {
    pub s: [f64; 2],
    pub sigma: f64,
    pub foot: Vec3,
    pub normal: Vec3,
}

/// Largest admissible `|σ|` on each side of a sampled region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollarBounds {
    /// Bound for `σ > 0`; `f64::INFINITY` when unbounded.
    pub plus: f64,
    /// Bound for `σ < 0`, reported as a positive number.
    pub minus: f64,
}

impl CollarBounds {
    pub fn contains(&self, sigma: f64) -> bool {
        if sigma >= 0.0 {
            sigma < self.plus
        } else {
            -sigma < self.minus
        }
    }
}

pub const COLLAR_SAFETY: f64 = 0.9;

/// Tuning for [`Projector`].
#[derive(Clone, Copy, Debug)]
pub struct ProjectOptions {
    /// Seed grid resolution per parameter direction.
    pub grid: usize,
    pub max_iter: usize,
    /// Tolerance on the tangential residual `(x − p)·t̂ᵢ`.
    pub tol: f64,
    /// Number of distinct local grid minima refined by Newton.
    pub candidates: usize,
    /// Verify `1 − σκᵢ > 0` at the foot point.
    pub check_collar: bool,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            grid: 32,
            max_iter: 50,
            tol: 1e-12,
            candidates: 3,
            check_collar: true,
        }
    }
}

/// Point-to-surface projector for one chart at one time.
#[derive(Clone, Debug)]
pub struct Projector<'a> {
    pub chart: &'a SurfaceChart,
    pub tau: f64,
    pub opts: ProjectOptions,
}

struct Local {
    p: Vec3,
    t: [Vec3; 2],
    tt: [[Vec3; 2]; 2],
}

impl<'a> Projector<'a> {
    pub fn new(chart: &'a SurfaceChart) -> Self {
        Projector {
            chart,
            tau: 0.0,
            opts: ProjectOptions::default(),
        }
    }

    pub fn at_time(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_options(mut self, opts: ProjectOptions) -> Self {
        self.opts = opts;
        self
    }

    fn local(&self, s: [f64; 2]) -> Local {
        let j = self.chart.jet(s, self.tau, 2, 2, None);
        let d = [j.d(0), j.d(1)];
        Local {
            p: j.value(),
            t: [d[0].value(), d[1].value()],
            tt: [
                [d[0].d(0).value(), d[0].d(1).value()],
                [d[1].d(0).value(), d[1].d(1).value()],
            ],
        }
    }

    fn clamp(&self, s: [f64; 2]) -> [f64; 2] {
        let c = self.chart;
        let mut out = s;
        for i in 0..2 {
            if !c.periodic[i] {
                out[i] = s[i].clamp(c.domain[i][0], c.domain[i][1]);
            }
        }
        out
    }

    /// Tangential residual `max |(x − p)·tᵢ| / |tᵢ|`.
    fn residual(x: &Vec3, l: &Local) -> f64 {
        let d = *x - l.p;
        (0..2)
            .map(|i| (d.dot(&l.t[i]) / l.t[i].norm()).abs())
            .fold(0.0, f64::max)
    }

    /// Newton iteration on the first-order conditions from a seed.
    pub fn refine(&self, x: &Vec3, seed: [f64; 2]) -> Result<[f64; 2]> {
        let scale = x.norm().max(1.0);
        let tol = self.opts.tol * scale;
        let mut s = self.clamp(seed);
        let mut l = self.local(s);
        let mut res = Self::residual(x, &l);
        // one extra step past tolerance drives the residual to rounding level
        let mut polished = false;
        for _ in 0..self.opts.max_iter {
            if !res.is_finite() {
                break;
            }
            if res <= tol {
                if polished || res <= 1e-15 * scale {
                    return Ok(s);
                }
                polished = true;
            }
            let d = *x - l.p;
            let g = [d.dot(&l.t[0]), d.dot(&l.t[1])];
            let metric = [
                [l.t[0].dot(&l.t[0]), l.t[0].dot(&l.t[1])],
                [l.t[1].dot(&l.t[0]), l.t[1].dot(&l.t[1])],
            ];
            let hess = [
                [metric[0][0] - d.dot(&l.tt[0][0]), metric[0][1] - d.dot(&l.tt[0][1])],
                [metric[1][0] - d.dot(&l.tt[1][0]), metric[1][1] - d.dot(&l.tt[1][1])],
            ];
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            let pd = hess[0][0] > 0.0 && det > 0.0;
            // full Newton where the distance is locally convex, Gauss–Newton otherwise
            let step = if pd { solve2(hess, g) } else { None }
                .or_else(|| solve2(metric, g))
                .ok_or_else(|| Error::Degenerate(s.to_vec()))?;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = self.chart.wrap(self.clamp([s[0] + lam * step[0], s[1] + lam * step[1]]))?;
                let lt = self.local(trial);
                let rt = Self::residual(x, &lt);
                let closer = (*x - lt.p).norm2() <= d.norm2() * (1.0 + 1e-14) + 1e-300;
                if rt.is_finite() && (rt < res || (closer && rt <= res * (1.0 + 1e-12))) {
                    s = trial;
                    l = lt;
                    res = rt;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                // residual at the rounding floor counts as converged
                if res <= 1e3 * tol || polished {
                    return Ok(s);
                }
                break;
            }
        }
        if res <= tol {
            Ok(s)
        } else {
            Err(Error::NoConvergence(format!(
                "closest point from {:?}: residual {res:.3e}",
                x.to_array()
            )))
        }
    }

    fn grid_nodes(&self) -> (Vec<[f64; 2]>, usize) {
        let n = self.opts.grid.max(2);
        let c = self.chart;
        let mut nodes = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = c.domain[0][0] + (i as f64 + 0.5) * (c.domain[0][1] - c.domain[0][0]) / n as f64;
                let b = c.domain[1][0] + (j as f64 + 0.5) * (c.domain[1][1] - c.domain[1][0]) / n as f64;
                nodes.push([a, b]);
            }
        }
        (nodes, n)
    }

    /// Local minima of the squared distance over the seed grid, best first.
    fn seeds(&self, x: &Vec3) -> Vec<([f64; 2], f64)> {
        let (nodes, n) = self.grid_nodes();
        let dist: Vec<f64> = nodes
            .iter()
            .map(|s| {
                let p = self.chart.eval(&s[0], &s[1], &self.tau);
                let d = (*x - p).norm2();
                if d.is_finite() {
                    d
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let nb = |i: usize, di: isize, periodic: bool| -> Option<usize> {
            let k = i as isize + di;
            if (0..n as isize).contains(&k) {
                Some(k as usize)
            } else if periodic {
                Some(k.rem_euclid(n as isize) as usize)
            } else {
                None
            }
        };
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() {
                    continue;
                }
                let mut is_min = true;
                'outer: for di in -1..=1 {
                    for dj in -1..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if let (Some(a), Some(b)) =
                            (nb(i, di, self.chart.periodic[0]), nb(j, dj, self.chart.periodic[1]))
                        {
                            if dist[a * n + b] < d {
                                is_min = false;
                                break 'outer;
                            }
                        }
                    }
                }
                if is_min {
                    out.push((nodes[i * n + j], d));
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1));
        out
    }

    /// Signed-distance coordinates of `x`.
    pub fn project(&self, x: &Vec3) -> Result<SdfCoordinates> {
        if !x.is_finite() {
            return Err(Error::NonFinite("query point".into()));
        }
        let seeds = self.seeds(x);
        if seeds.is_empty() {
            return Err(Error::NoConvergence("no finite chart samples".into()));
        }
        let mut found: Vec<([f64; 2], Vec3, f64)> = Vec::new();
        let mut last_err = None;
        for (seed, _) in seeds.iter().take(self.opts.candidates.max(1)) {
            match self.refine(x, *seed) {
                Ok(s) => {
                    let p = self.chart.eval(&s[0], &s[1], &self.tau);
                    found.push((s, p, (*x - p).norm()));
                }
                Err(e) => last_err = Some(e),
            }
        }
        if found.is_empty() {
            return Err(last_err.unwrap_or_else(|| Error::NoConvergence("projection".into())));
        }
        found.sort_by(|a, b| a.2.total_cmp(&b.2));
        let (s, p, dist) = found[0];
        let scale = x.norm().max(1.0);
        for (_, q, d) in &found[1..] {
            if (d - dist).abs() <= 1e-9 * dist.max(1.0) && (*q - p).norm() > 1e-6 * scale {
                return Err(Error::Multiplicity(format!(
                    "{:?} is equidistant from {:?} and {:?}",
                    x.to_array(),
                    p.to_array(),
                    q.to_array()
                )));
            }
        }
        self.finish(x, s)
    }

    /// Project using a nearby parameter guess instead of the seed grid.
    pub fn project_near(&self, x: &Vec3, guess: [f64; 2]) -> Result<SdfCoordinates> {
        let s = self.refine(x, guess)?;
        self.finish(x, s)
    }

    fn finish(&self, x: &Vec3, s: [f64; 2]) -> Result<SdfCoordinates> {
        let s = self.chart.wrap(s)?;
        let l = self.local(s);
        let c = l.t[0].cross(&l.t[1]);
        let a = c.norm();
        if !(a > DEGENERACY_TOL * l.t[0].norm().max(l.t[1].norm()).powi(2)) {
            return Err(Error::Degenerate(s.to_vec()));
        }
        let n = c.scale(&(1.0 / a));
        let sigma = (*x - l.p).dot(&n);
        if self.opts.check_collar && sigma != 0.0 {
            let (k1, k2) = principal_values(self.chart, s, self.tau)?;
            if 1.0 - sigma * k1 <= 0.0 || 1.0 - sigma * k2 <= 0.0 {
                return Err(Error::Collar(format!("σ = {sigma} beyond a focal distance")));
            }
        }
        Ok(SdfCoordinates {
            s,
            sigma,
            foot: l.p,
            normal: n,
        })
    }
}

/// Principal curvature values from second-order chart data.
pub fn principal_values(chart: &SurfaceChart, s: [f64; 2], tau: f64) -> Result<(f64, f64)> {
    let p = chart.jet(s, tau, 2, 2, None);
    let g = SurfaceGeometry::from_position(p, s, tau, 2, 2, None, None)?;
    Ok((g.kappa1.value(), g.kappa2.value()))
}

/// `x = p(s) + σ n̂(s)`.
pub fn to_cartesian(chart: &SurfaceChart, s: [f64; 2], sigma: f64) -> Result<Vec3> {
    to_cartesian_at(chart, s, sigma, 0.0)
}

pub fn to_cartesian_at(chart: &SurfaceChart, s: [f64; 2], sigma: f64, tau: f64) -> Result<Vec3> {
    let s = chart.wrap(s)?;
    let j: V3<Jet> = chart.jet(s, tau, 2, 1, None);
    let (t1, t2) = (j.d(0).value(), j.d(1).value());
    let c = t1.cross(&t2);
    let a = c.norm();
    if !(a > DEGENERACY_TOL * t1.norm().max(t2.norm()).powi(2)) {
        return Err(Error::Degenerate(s.to_vec()));
    }
    Ok(j.value() + c.scale(&(sigma / a)))
}

/// Signed-distance coordinates of `x` with default options.
pub fn signed_distance(chart: &SurfaceChart, x: &Vec3) -> Result<SdfCoordinates> {
    Projector::new(chart).project(x)
}

/// `∇σ`: the unit normal at the foot point.
pub fn grad_sigma(chart: &SurfaceChart, x: &Vec3) -> Result<Vec3> {
    Ok(signed_distance(chart, x)?.normal)
}

/// Focal-distance bounds over an `n × n` sample grid of `region`.
pub fn collar_bounds(chart: &SurfaceChart, region: [[f64; 2]; 2], n: usize) -> Result<CollarBounds> {
    if n == 0 || !(region[0][1] >= region[0][0]) || !(region[1][1] >= region[1][0]) {
        return Err(Error::EmptyRegion);
    }
    let mut plus = f64::INFINITY;
    let mut minus = f64::INFINITY;
    let mut any = false;
    for i in 0..n {
        for j in 0..n {
            let f = |k: usize, r: [f64; 2]| {
                if n == 1 {
                    0.5 * (r[0] + r[1])
                } else {
                    r[0] + (k as f64 + 0.5) * (r[1] - r[0]) / n as f64
                }
            };
            let s = [f(i, region[0]), f(j, region[1])];
            let Ok((k1, k2)) = principal_values(chart, s, 0.0) else {
                continue;
            };
            any = true;
            for k in [k1, k2] {
                if k > 1e-14 {
                    plus = plus.min(1.0 / k);
                } else if k < -1e-14 {
                    minus = minus.min(-1.0 / k);
                }
            }
        }
    }
    if !any {
        return Err(Error::EmptyRegion);
    }
    Ok(CollarBounds {
        plus: COLLAR_SAFETY * plus,
        minus: COLLAR_SAFETY * minus,
    })
}
