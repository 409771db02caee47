//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] carries the normalized Taylor coefficients `f^(α)(x₀) / α!` of a
//! function of up to [`MAX_VARS`] variables, truncated at a total degree. All
//! arithmetic and elementary functions propagate the truncation exactly, so
//! any partial derivative up to the jet's degree is available to machine
//! precision. This plays the role of nested dual numbers with symmetric
//! storage: the mixed partial `∂ᵢ∂ⱼ` is stored once.
//!
//! Constants are represented without a variable space and broadcast against
//! any jet, which lets generic code call [`Scalar::cst`] freely.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Maximum number of independent variables in a jet.
pub const MAX_VARS: usize = 4;
/// Maximum supported total degree.
pub const MAX_DEGREE: usize = 13;

const CONST_DEG: u8 = u8::MAX;

struct Tables {
    exps: Vec<[u8; MAX_VARS]>,
    /// Number of monomials with total degree ≤ d.
    len_by_deg: Vec<usize>,
    /// (i, j, k): coefficient k receives a[i]*b[j]; sorted by degree of k.
    mul: Vec<(u16, u16, u16)>,
    mul_len: Vec<usize>,
    /// Per variable: (src, dst, factor), sorted by degree of dst.
    deriv: Vec<Vec<(u16, u16, f64)>>,
    deriv_len: Vec<Vec<usize>>,
    /// Per variable: (src, dst, factor), sorted by degree of src.
    integ: Vec<Vec<(u16, u16, f64)>>,
    integ_len: Vec<Vec<usize>>,
}

fn degree(e: &[u8; MAX_VARS]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

fn build_tables(nvars: usize) -> Tables {
    let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
    fn rec(
        nvars: usize,
        var: usize,
        remaining: usize,
        cur: &mut [u8; MAX_VARS],
        out: &mut Vec<[u8; MAX_VARS]>,
    ) {
        if var == nvars {
            out.push(*cur);
            return;
        }
        for e in 0..=remaining {
            cur[var] = e as u8;
            rec(nvars, var + 1, remaining - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut cur = [0u8; MAX_VARS];
    rec(nvars, 0, MAX_DEGREE, &mut cur, &mut exps);
    exps.sort_by(|a, b| {
        degree(a)
            .cmp(&degree(b))
            .then_with(|| b.cmp(a))
    });
    let lookup: std::collections::HashMap<[u8; MAX_VARS], usize> =
        exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let index = |e: &[u8; MAX_VARS]| -> Option<usize> { lookup.get(e).copied() };
    let mut len_by_deg = vec![0usize; MAX_DEGREE + 1];
    for d in 0..=MAX_DEGREE {
        len_by_deg[d] = exps.iter().filter(|e| degree(e) <= d).count();
    }

    let mut mul = Vec::new();
    for (i, a) in exps.iter().enumerate() {
        for (j, b) in exps.iter().enumerate() {
            if degree(a) + degree(b) > MAX_DEGREE {
                continue;
            }
            let mut c = [0u8; MAX_VARS];
            for v in 0..MAX_VARS {
                c[v] = a[v] + b[v];
            }
            let k = index(&c).expect("monomial table is closed under products");
            mul.push((i as u16, j as u16, k as u16));
        }
    }
    mul.sort_by_key(|&(_, _, k)| (degree(&exps[k as usize]), k));
    let mut mul_len = vec![0usize; MAX_DEGREE + 1];
    for d in 0..=MAX_DEGREE {
        mul_len[d] = mul
            .iter()
            .filter(|&&(_, _, k)| degree(&exps[k as usize]) <= d)
            .count();
    }

    let mut deriv = Vec::new();
    let mut deriv_len = Vec::new();
    let mut integ = Vec::new();
    let mut integ_len = Vec::new();
    for v in 0..nvars {
        let mut dv = Vec::new();
        let mut iv = Vec::new();
        for (src, e) in exps.iter().enumerate() {
            if e[v] > 0 {
                let mut f = *e;
                f[v] -= 1;
                let dst = index(&f).unwrap();
                dv.push((src as u16, dst as u16, e[v] as f64));
            }
            if degree(e) < MAX_DEGREE {
                let mut f = *e;
                f[v] += 1;
                let dst = index(&f).unwrap();
                iv.push((src as u16, dst as u16, 1.0 / f[v] as f64));
            }
        }
        dv.sort_by_key(|&(_, dst, _)| (degree(&exps[dst as usize]), dst));
        iv.sort_by_key(|&(src, _, _)| (degree(&exps[src as usize]), src));
        let mut dl = vec![0usize; MAX_DEGREE + 1];
        let mut il = vec![0usize; MAX_DEGREE + 1];
        for d in 0..=MAX_DEGREE {
            dl[d] = dv
                .iter()
                .filter(|&&(_, dst, _)| degree(&exps[dst as usize]) <= d)
                .count();
            il[d] = iv
                .iter()
                .filter(|&&(src, _, _)| degree(&exps[src as usize]) <= d)
                .count();
        }
        deriv.push(dv);
        deriv_len.push(dl);
        integ.push(iv);
        integ_len.push(il);
    }
    Tables {
        exps,
        len_by_deg,
        mul,
        mul_len,
        deriv,
        deriv_len,
        integ,
        integ_len,
    }
}

fn tables(nvars: usize) -> &'static Tables {
    static TABLES: [OnceLock<Tables>; MAX_VARS] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!(
        (1..=MAX_VARS).contains(&nvars),
        "jet variable count {nvars} outside 1..={MAX_VARS}"
    );
    TABLES[nvars - 1].get_or_init(|| build_tables(nvars))
}

/// Truncated Taylor expansion about a point.
#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: u8,
    deg: u8,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const() {
            write!(f, "Jet({})", self.c[0])
        } else {
            write!(f, "Jet(n={}, d={}, {:?})", self.nvars, self.deg, self.c)
        }
    }
}

impl Jet {
    /// A constant, valid at every degree in every variable space.
    pub fn constant(v: f64) -> Self {
        Jet {
            nvars: 0,
            deg: CONST_DEG,
            c: vec![v],
        }
    }

    /// The independent variable `var` of an `nvars`-variable space, expanded
    /// about `value` and truncated at `deg`.
    pub fn var(nvars: usize, deg: usize, var: usize, value: f64) -> Self {
        assert!(var < nvars, "variable index {var} out of range");
        assert!(deg <= MAX_DEGREE, "degree {deg} above {MAX_DEGREE}");
        let t = tables(nvars);
        let mut c = vec![0.0; t.len_by_deg[deg]];
        c[0] = value;
        if deg >= 1 {
            let mut e = [0u8; MAX_VARS];
            e[var] = 1;
            let k = t.exps.iter().position(|x| *x == e).unwrap();
            c[k] = 1.0;
        }
        Jet {
            nvars: nvars as u8,
            deg: deg as u8,
            c,
        }
    }

    /// A constant embedded in a specific space (useful when a jet must own
    /// its degree, e.g. before calling [`Jet::integrate`]).
    pub fn constant_in(nvars: usize, deg: usize, v: f64) -> Self {
        let t = tables(nvars);
        let mut c = vec![0.0; t.len_by_deg[deg]];
        c[0] = v;
        Jet {
            nvars: nvars as u8,
            deg: deg as u8,
            c,
        }
    }

    pub fn is_const(&self) -> bool {
        self.deg == CONST_DEG
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Truncation degree; `None` for broadcast constants.
    pub fn degree(&self) -> Option<usize> {
        if self.is_const() {
            None
        } else {
            Some(self.deg as usize)
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    /// Raw normalized Taylor coefficients.
    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Partial derivative `∂^α f` at the expansion point, where `alpha[v]` is
    /// the derivative count in variable `v`.
    pub fn partial(&self, alpha: &[usize]) -> f64 {
        let total: usize = alpha.iter().sum();
        if self.is_const() {
            return if total == 0 { self.c[0] } else { 0.0 };
        }
        assert!(
            total <= self.deg as usize,
            "requested derivative order {total} exceeds jet degree {}",
            self.deg
        );
        let t = tables(self.nvars());
        let mut e = [0u8; MAX_VARS];
        let mut fact = 1.0;
        for (v, &a) in alpha.iter().enumerate() {
            if a > 0 {
                assert!(v < self.nvars(), "variable {v} not in jet space");
                e[v] = a as u8;
                fact *= (1..=a).product::<usize>() as f64;
            }
        }
        let k = t.exps[..self.c.len()].iter().position(|x| *x == e).unwrap();
        self.c[k] * fact
    }

    /// Partial derivative with respect to variable `v` as a jet of one lower degree.
    pub fn d(&self, v: usize) -> Jet {
        if self.is_const() {
            return Jet::constant(0.0);
        }
        assert!(self.deg >= 1, "cannot differentiate a degree-0 jet");
        assert!(v < self.nvars(), "variable {v} not in jet space");
        let t = tables(self.nvars());
        let nd = self.deg as usize - 1;
        let mut c = vec![0.0; t.len_by_deg[nd]];
        for &(src, dst, f) in &t.deriv[v][..t.deriv_len[v][nd]] {
            c[dst as usize] += f * self.c[src as usize];
        }
        Jet {
            nvars: self.nvars,
            deg: nd as u8,
            c,
        }
    }

    /// Exact quotient by `x_v − x_v⁰` for a jet whose monomials all contain
    /// variable `v`; monomials free of `v` are dropped. The degree drops by one.
    pub fn div_var(&self, v: usize) -> Jet {
        if self.is_const() || self.deg == 0 {
            return Jet::constant(0.0);
        }
        assert!(v < self.nvars(), "variable {v} not in jet space");
        let t = tables(self.nvars());
        let nd = self.deg as usize - 1;
        let mut c = vec![0.0; t.len_by_deg[nd]];
        for &(src, dst, _) in &t.deriv[v][..t.deriv_len[v][nd]] {
            c[dst as usize] += self.c[src as usize];
        }
        Jet {
            nvars: self.nvars,
            deg: nd as u8,
            c,
        }
    }

    /// Antiderivative in variable `v` vanishing on the hyperplane through the
    /// expansion point; the degree grows by one up to [`MAX_DEGREE`].
    pub fn integrate(&self, v: usize) -> Jet {
        assert!(!self.is_const(), "integrate needs a jet with a variable space");
        assert!(v < self.nvars(), "variable {v} not in jet space");
        let t = tables(self.nvars());
        let d = self.deg as usize;
        let nd = (d + 1).min(MAX_DEGREE);
        let src_deg = nd - 1;
        let mut c = vec![0.0; t.len_by_deg[nd]];
        for &(src, dst, f) in &t.integ[v][..t.integ_len[v][src_deg]] {
            c[dst as usize] += f * self.c[src as usize];
        }
        Jet {
            nvars: self.nvars,
            deg: nd as u8,
            c,
        }
    }

    /// Drop all terms above degree `deg`.
    pub fn truncate(&self, deg: usize) -> Jet {
        if self.is_const() || deg >= self.deg as usize {
            return self.clone();
        }
        let t = tables(self.nvars());
        Jet {
            nvars: self.nvars,
            deg: deg as u8,
            c: self.c[..t.len_by_deg[deg]].to_vec(),
        }
    }

    /// True when every coefficient is within `tol` of zero.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.c.iter().all(|x| x.abs() <= tol)
    }

    fn space_of(a: &Jet, b: &Jet) -> (u8, u8) {
        match (a.is_const(), b.is_const()) {
            (true, true) => (0, CONST_DEG),
            (true, false) => (b.nvars, b.deg),
            (false, true) => (a.nvars, a.deg),
            (false, false) => {
                assert_eq!(a.nvars, b.nvars, "jets from different variable spaces");
                (a.nvars, a.deg.min(b.deg))
            }
        }
    }

    fn zeros(nvars: u8, deg: u8) -> Jet {
        if deg == CONST_DEG {
            return Jet::constant(0.0);
        }
        let t = tables(nvars as usize);
        Jet {
            nvars,
            deg,
            c: vec![0.0; t.len_by_deg[deg as usize]],
        }
    }

    fn add_ref(&self, o: &Jet, sign: f64) -> Jet {
        let (n, d) = Jet::space_of(self, o);
        let mut r = Jet::zeros(n, d);
        let len = r.c.len();
        for (k, x) in r.c.iter_mut().enumerate() {
            if k < self.c.len() {
                *x += self.c[k];
            }
            if k < o.c.len() {
                *x += sign * o.c[k];
            }
        }
        debug_assert_eq!(r.c.len(), len);
        r
    }

    fn mul_ref(&self, o: &Jet) -> Jet {
        if self.is_const() {
            return o.scale(self.c[0]);
        }
        if o.is_const() {
            return self.scale(o.c[0]);
        }
        let (n, d) = Jet::space_of(self, o);
        let t = tables(n as usize);
        let mut r = Jet::zeros(n, d);
        let a = &self.c;
        let b = &o.c;
        for &(i, j, k) in &t.mul[..t.mul_len[d as usize]] {
            r.c[k as usize] += a[i as usize] * b[j as usize];
        }
        r
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            deg: self.deg,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    /// Evaluate `Σ_k taylor[k] (self - self.value())^k`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        if self.is_const() {
            return Jet::constant(taylor[0]);
        }
        let mut h = self.clone();
        h.c[0] = 0.0;
        let d = self.deg as usize;
        let mut r = Jet::constant_in(self.nvars(), d, taylor[d]);
        for k in (0..d).rev() {
            r = r.mul_ref(&h);
            r.c[0] += taylor[k];
        }
        r
    }

    fn order(&self) -> usize {
        if self.is_const() {
            0
        } else {
            self.deg as usize
        }
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let n = self.order();
        let mut t = Vec::with_capacity(n + 1);
        let mut p = 1.0 / a;
        for k in 0..=n {
            t.push(if k % 2 == 0 { p } else { -p });
            p /= a;
        }
        self.compose(&t)
    }

    /// Real power for a positive base.
    pub fn powf(&self, r: f64) -> Jet {
        let a = self.value();
        let n = self.order();
        let mut t = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            t.push(binom * a.powf(r - k as f64));
            binom *= (r - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    /// Integer power, valid for either sign of the base.
    pub fn powi(&self, e: i32) -> Jet {
        if e >= 0 && e <= 4 {
            let mut r = Jet::constant(1.0);
            for _ in 0..e {
                r = r.mul_ref(self);
            }
            return r;
        }
        let a = self.value();
        let n = self.order();
        let r = e as f64;
        let mut t = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            t.push(binom * a.powi(e - k as i32));
            binom *= (r - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let a = self.value().exp();
        let n = self.order();
        let mut t = Vec::with_capacity(n + 1);
        let mut f = 1.0;
        for k in 0..=n {
            if k > 0 {
                f *= k as f64;
            }
            t.push(a / f);
        }
        self.compose(&t)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let n = self.order();
        let mut t = Vec::with_capacity(n + 1);
        t.push(a.ln());
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * a.powi(k as i32)));
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cyc = [s, c, -s, -c];
        self.compose(&Jet::cyclic_taylor(&cyc, self.order()))
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cyc = [c, -s, -c, s];
        self.compose(&Jet::cyclic_taylor(&cyc, self.order()))
    }

    fn cyclic_taylor(cyc: &[f64; 4], n: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(n + 1);
        let mut f = 1.0;
        for k in 0..=n {
            if k > 0 {
                f *= k as f64;
            }
            t.push(cyc[k % 4] / f);
        }
        t
    }

    pub fn tan(&self) -> Jet {
        self.sin() * self.cos().recip()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.add_ref(&o, 1.0)
    }
}
impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.add_ref(o, 1.0)
    }
}
impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.add_ref(&o, -1.0)
    }
}
impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.add_ref(o, -1.0)
    }
}
impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        self.mul_ref(&o)
    }
}
impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        self.mul_ref(o)
    }
}
impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        if o.is_const() {
            return self.scale(1.0 / o.c[0]);
        }
        self.mul_ref(&o.recip())
    }
}
impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}
impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}
impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(o)
    }
}
impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self.scale(1.0 / o)
    }
}
impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = self.add_ref(&o, 1.0);
    }
}
impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = self.add_ref(&o, -1.0);
    }
}
impl MulAssign for Jet {
    fn mul_assign(&mut self, o: Jet) {
        *self = self.mul_ref(&o);
    }
}

/// Numeric type usable by the generic geometry kernels: plain `f64` for
/// values, [`Jet`] for exact derivatives.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, e: i32) -> Self;
    fn powf(&self, e: f64) -> Self;
    fn recip(&self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, e: i32) -> Self {
        f64::powi(*self, e)
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn tan(&self) -> Self {
        Jet::tan(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn powi(&self, e: i32) -> Self {
        Jet::powi(self, e)
    }
    fn powf(&self, e: f64) -> Self {
        Jet::powf(self, e)
    }
    fn recip(&self) -> Self {
        Jet::recip(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn polynomial_partials() {
        // f = x^2 y + 3 y^3 at (2, -1)
        let x = Jet::var(2, 4, 0, 2.0);
        let y = Jet::var(2, 4, 1, -1.0);
        let f = x.clone() * x.clone() * y.clone() + y.clone() * y.clone() * y.clone() * 3.0;
        assert!(close(f.value(), -4.0 - 3.0, 1e-15));
        assert!(close(f.partial(&[1, 0]), 2.0 * 2.0 * -1.0, 1e-15));
        assert!(close(f.partial(&[0, 1]), 4.0 + 9.0, 1e-15));
        assert!(close(f.partial(&[1, 1]), 4.0, 1e-15));
        assert!(close(f.partial(&[2, 1]), 2.0, 1e-15));
        assert!(close(f.partial(&[0, 3]), 18.0, 1e-15));
        assert_eq!(f.partial(&[0, 4]), 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = Jet::var(1, 5, 0, 0.3);
        let s = x.sin();
        let c = x.cos();
        let e = x.exp();
        let l = x.ln();
        let r = x.sqrt();
        for k in 0..=5 {
            let sk = match k % 4 {
                0 => 0.3f64.sin(),
                1 => 0.3f64.cos(),
                2 => -0.3f64.sin(),
                _ => -0.3f64.cos(),
            };
            assert!(close(s.partial(&[k]), sk, 1e-13));
            assert!(close(c.partial(&[k]), if k % 4 == 0 { 0.3f64.cos() } else if k % 4 == 1 { -0.3f64.sin() } else if k % 4 == 2 { -0.3f64.cos() } else { 0.3f64.sin() }, 1e-13));
            assert!(close(e.partial(&[k]), 0.3f64.exp(), 1e-13));
        }
        assert!(close(l.partial(&[3]), 2.0 / 0.3f64.powi(3), 1e-12));
        assert!(close(r.partial(&[2]), -0.25 * 0.3f64.powf(-1.5), 1e-12));
        let q = x.clone() / (x.clone() * x.clone() + 1.0);
        // d/dx x/(1+x^2) = (1-x^2)/(1+x^2)^2
        assert!(close(q.partial(&[1]), (1.0 - 0.09) / (1.09f64 * 1.09), 1e-13));
    }

    #[test]
    fn derivative_and_integral_are_inverse() {
        let x = Jet::var(2, 5, 0, 0.7);
        let y = Jet::var(2, 5, 1, -0.2);
        let f = (x.clone() * y.clone()).sin() + y.exp() * x.clone();
        let g = f.integrate(0).d(0);
        for k in 0..g.coefficients().len() {
            assert!((g.coefficients()[k] - f.coefficients()[k]).abs() < 1e-14);
        }
        let fx = f.d(0);
        // ∂x f = y cos(xy) + e^y
        assert!(close(fx.value(), -0.2 * (-0.14f64).cos() + (-0.2f64).exp(), 1e-14));
        assert_eq!(fx.degree(), Some(4));
    }

    #[test]
    fn negative_integer_powers() {
        let x = Jet::var(1, 4, 0, -2.0);
        let p = x.powi(-3);
        // d²/dx² x^-3 = 12 x^-5
        assert!(close(p.partial(&[2]), 12.0 / (-32.0), 1e-14));
        let q = x.powi(5);
        assert!(close(q.partial(&[3]), 60.0 * 4.0, 1e-14));
    }

    #[test]
    fn constants_broadcast() {
        let x = Jet::var(3, 2, 1, 1.5);
        let c = Jet::constant(2.0);
        let r = c.clone() * x.clone() + c;
        assert_eq!(r.degree(), Some(2));
        assert!(close(r.partial(&[0, 1, 0]), 2.0, 1e-15));
        assert!(close(r.value(), 5.0, 1e-15));
    }
}
