//! Small fixed-size vectors and matrices over any [`Scalar`].

use crate::jet::{Jet, Scalar};
use std::ops::{Add, Mul, Neg, Sub};

/// Three-component vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct V3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Row-major 3×3 matrix; `m[i][j]` is row `i`, column `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct M3<T> {
    pub m: [[T; 3]; 3],
}

/// Ambient Cartesian vector.
pub type Vec3 = V3<f64>;
/// Ambient Cartesian 3×3 tensor.
pub type Tensor2 = M3<f64>;

impl<T> V3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        V3 { x, y, z }
    }
}

impl<T: Clone> V3<T> {
    pub fn get(&self, i: usize) -> T {
        match i {
            0 => self.x.clone(),
            1 => self.y.clone(),
            2 => self.z.clone(),
            _ => panic!("V3 index {i}"),
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.x.clone(), self.y.clone(), self.z.clone()]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        let [x, y, z] = a;
        V3 { x, y, z }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> V3<U> {
        V3::new(f(&self.x), f(&self.y), f(&self.z))
    }
}

impl<T: Scalar> V3<T> {
    pub fn zero() -> Self {
        V3::new(T::cst(0.0), T::cst(0.0), T::cst(0.0))
    }

    pub fn from_f64(v: &Vec3) -> Self {
        V3::new(T::cst(v.x), T::cst(v.y), T::cst(v.z))
    }

    pub fn dot(&self, o: &V3<T>) -> T {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone() + self.z.clone() * o.z.clone()
    }

    pub fn cross(&self, o: &V3<T>) -> V3<T> {
        V3::new(
            self.y.clone() * o.z.clone() - self.z.clone() * o.y.clone(),
            self.z.clone() * o.x.clone() - self.x.clone() * o.z.clone(),
            self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone(),
        )
    }

    pub fn norm2(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm2().sqrt()
    }

    pub fn normalized(&self) -> V3<T> {
        self.scale(&self.norm().recip())
    }

    pub fn scale(&self, s: &T) -> V3<T> {
        V3::new(
            self.x.clone() * s.clone(),
            self.y.clone() * s.clone(),
            self.z.clone() * s.clone(),
        )
    }

    pub fn scale_f(&self, s: f64) -> V3<T> {
        V3::new(self.x.clone() * s, self.y.clone() * s, self.z.clone() * s)
    }

    pub fn outer(&self, o: &V3<T>) -> M3<T> {
        let a = self.to_array();
        let b = o.to_array();
        M3::from_fn(|i, j| a[i].clone() * b[j].clone())
    }

    pub fn value(&self) -> Vec3 {
        V3::new(self.x.value(), self.y.value(), self.z.value())
    }
}

impl V3<Jet> {
    /// Componentwise partial derivative in jet variable `v`.
    pub fn d(&self, v: usize) -> V3<Jet> {
        self.map(|c| c.d(v))
    }
}

impl Vec3 {
    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> Add for V3<T> {
    type Output = V3<T>;
    fn add(self, o: V3<T>) -> V3<T> {
        V3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
impl<T: Scalar> Sub for V3<T> {
    type Output = V3<T>;
    fn sub(self, o: V3<T>) -> V3<T> {
        V3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}
impl<T: Scalar> Neg for V3<T> {
    type Output = V3<T>;
    fn neg(self) -> V3<T> {
        V3::new(-self.x, -self.y, -self.z)
    }
}
impl<T: Scalar> Mul<T> for V3<T> {
    type Output = V3<T>;
    fn mul(self, s: T) -> V3<T> {
        V3::new(self.x * s.clone(), self.y * s.clone(), self.z * s)
    }
}
impl<'a, T: Scalar> Add<&'a V3<T>> for &'a V3<T> {
    type Output = V3<T>;
    fn add(self, o: &V3<T>) -> V3<T> {
        self.clone() + o.clone()
    }
}
impl<'a, T: Scalar> Sub<&'a V3<T>> for &'a V3<T> {
    type Output = V3<T>;
    fn sub(self, o: &V3<T>) -> V3<T> {
        self.clone() - o.clone()
    }
}

impl<T: Clone> M3<T> {
    pub fn from_fn(f: impl Fn(usize, usize) -> T) -> Self {
        M3 {
            m: [
                [f(0, 0), f(0, 1), f(0, 2)],
                [f(1, 0), f(1, 1), f(1, 2)],
                [f(2, 0), f(2, 1), f(2, 2)],
            ],
        }
    }

    pub fn transpose(&self) -> M3<T> {
        M3::from_fn(|i, j| self.m[j][i].clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> M3<U> {
        M3::from_fn(|i, j| f(&self.m[i][j]))
    }

    pub fn row(&self, i: usize) -> V3<T> {
        V3::new(self.m[i][0].clone(), self.m[i][1].clone(), self.m[i][2].clone())
    }

    pub fn col(&self, j: usize) -> V3<T> {
        V3::new(self.m[0][j].clone(), self.m[1][j].clone(), self.m[2][j].clone())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(a: &V3<T>, b: &V3<T>, c: &V3<T>) -> M3<T> {
        let cols = [a, b, c];
        M3::from_fn(|i, j| cols[j].get(i))
    }

    pub fn from_rows(a: &V3<T>, b: &V3<T>, c: &V3<T>) -> M3<T> {
        let rows = [a, b, c];
        M3::from_fn(|i, j| rows[i].get(j))
    }
}

impl<T: Scalar> M3<T> {
    pub fn zero() -> Self {
        M3::from_fn(|_, _| T::cst(0.0))
    }

    pub fn identity() -> Self {
        M3::from_fn(|i, j| T::cst(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn from_f64(a: &Tensor2) -> Self {
        M3::from_fn(|i, j| T::cst(a.m[i][j]))
    }

    pub fn matvec(&self, v: &V3<T>) -> V3<T> {
        V3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// `vᵀ M`.
    pub fn vecmat(&self, v: &V3<T>) -> V3<T> {
        V3::new(self.col(0).dot(v), self.col(1).dot(v), self.col(2).dot(v))
    }

    pub fn matmul(&self, o: &M3<T>) -> M3<T> {
        M3::from_fn(|i, j| self.row(i).dot(&o.col(j)))
    }

    pub fn trace(&self) -> T {
        self.m[0][0].clone() + self.m[1][1].clone() + self.m[2][2].clone()
    }

    pub fn det(&self) -> T {
        self.row(0).dot(&self.row(1).cross(&self.row(2)))
    }

    pub fn scale(&self, s: &T) -> M3<T> {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn scale_f(&self, s: f64) -> M3<T> {
        self.map(|x| x.clone() * s)
    }

    pub fn sym(&self) -> M3<T> {
        M3::from_fn(|i, j| (self.m[i][j].clone() + self.m[j][i].clone()) * 0.5)
    }

    pub fn value(&self) -> Tensor2 {
        self.map(|x| x.value())
    }
}

impl M3<Jet> {
    pub fn d(&self, v: usize) -> M3<Jet> {
        self.map(|c| c.d(v))
    }
}

impl Tensor2 {
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.clone() - self.transpose()).max_abs() < tol
    }

    /// Inverse by adjugate; `None` when singular.
    pub fn inverse(&self) -> Option<Tensor2> {
        let d = self.det();
        if d.abs() < 1e-300 || !d.is_finite() {
            return None;
        }
        let a = &self.m;
        let cof = |i: usize, j: usize| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
        };
        Some(M3::from_fn(|i, j| cof(j, i) / d))
    }
}

impl<T: Scalar> Add for M3<T> {
    type Output = M3<T>;
    fn add(self, o: M3<T>) -> M3<T> {
        M3::from_fn(|i, j| self.m[i][j].clone() + o.m[i][j].clone())
    }
}
impl<T: Scalar> Sub for M3<T> {
    type Output = M3<T>;
    fn sub(self, o: M3<T>) -> M3<T> {
        M3::from_fn(|i, j| self.m[i][j].clone() - o.m[i][j].clone())
    }
}
impl<T: Scalar> Neg for M3<T> {
    type Output = M3<T>;
    fn neg(self) -> M3<T> {
        self.map(|x| -x.clone())
    }
}

/// Solve a 2×2 linear system; `None` when the determinant vanishes.
pub fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs()).max(a[1][0].abs());
    if det.abs() <= 1e-300 || det.abs() < 1e-15 * scale * scale {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_and_det() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(-1.0, 0.5, 2.0);
        let c = a.cross(&b);
        assert!(c.dot(&a).abs() < 1e-14 && c.dot(&b).abs() < 1e-14);
        let m = M3::from_rows(&a, &b, &Vec3::new(0.0, 1.0, 1.0));
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        assert!((id - Tensor2::identity()).max_abs() < 1e-13);
    }

    #[test]
    fn outer_and_products() {
        let a = Vec3::new(1.0, 0.0, 2.0);
        let b = Vec3::new(0.0, 3.0, 1.0);
        let o = a.outer(&b);
        let v = Vec3::new(1.0, 1.0, 1.0);
        assert_eq!(o.matvec(&v), a.scale(&b.dot(&v)));
        assert_eq!(o.vecmat(&v), b.scale(&a.dot(&v)));
        assert_eq!(solve2([[2.0, 1.0], [1.0, 3.0]], [3.0, 5.0]).unwrap(), [0.8, 1.4]);
    }
}
