//! Complexified Euclidean 3-space: the bilinear pairing, the cross product,
//! the isometry `alpha` onto antisymmetric matrices and small 3x3 algebra.
//!
//! Vectors and matrices are generic over a [`Scalar`] so that the same code
//! runs on plain complex numbers and on truncated Taylor jets.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative singularity threshold for 3x3 inversion.
pub const SINGULAR_EPS: f64 = 1e-13;

/// Absolute antisymmetry tolerance (relative to `1 + max|M_ij|`) for `alpha_inv`.
pub const O3_EPS: f64 = 1e-10;

/// Commutative ring with a distinguished point value, implemented by
/// [`C64`] and by [`crate::jets::Jet`].
pub trait Scalar: Clone + std::fmt::Debug + Send + Sync {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, s: C64) -> Self;
    fn shift(&self, s: C64) -> Self;
    /// Value at the evaluation point.
    fn value(&self) -> C64;
    /// A constant of the same kind.
    fn constant_like(&self, v: C64) -> Self;
    fn recip(&self) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;

    fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.recip()?))
    }
    fn zero_like(&self) -> Self {
        self.constant_like(C64::new(0.0, 0.0))
    }
    fn one_like(&self) -> Self {
        self.constant_like(C64::new(1.0, 0.0))
    }
}

impl Scalar for C64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn shift(&self, s: C64) -> Self {
        self + s
    }
    fn value(&self) -> C64 {
        *self
    }
    fn constant_like(&self, v: C64) -> Self {
        v
    }
    fn recip(&self) -> Result<Self> {
        if self.norm() == 0.0 || !self.is_finite() {
            return Err(Error::JetPole(self.norm()));
        }
        Ok(self.inv())
    }
    fn sqrt(&self) -> Result<Self> {
        if self.norm() == 0.0 {
            return Err(Error::JetBranchPoint(0.0));
        }
        Ok(Complex64::sqrt(*self))
    }
}

/// Shorthand for a real complex number.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A 3-component vector over a scalar ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Vec3<T>(pub [T; 3]);

/// A vector of complex numbers.
pub type Cx3 = Vec3<C64>;

impl<T: Scalar> Vec3<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Vec3([a, b, c])
    }

    /// Bilinear pairing, no conjugation.
    pub fn dot(&self, o: &Self) -> T {
        self.0[0]
            .mul(&o.0[0])
            .add(&self.0[1].mul(&o.0[1]))
            .add(&self.0[2].mul(&o.0[2]))
    }

    pub fn cross(&self, o: &Self) -> Self {
        let [a1, a2, a3] = &self.0;
        let [b1, b2, b3] = &o.0;
        Vec3([
            a2.mul(b3).sub(&a3.mul(b2)),
            a3.mul(b1).sub(&a1.mul(b3)),
            a1.mul(b2).sub(&a2.mul(b1)),
        ])
    }

    /// Triple product `a . (b x c)`.
    pub fn triple(&self, b: &Self, c: &Self) -> T {
        self.dot(&b.cross(c))
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn scale(&self, s: &T) -> Self {
        Vec3([self.0[0].mul(s), self.0[1].mul(s), self.0[2].mul(s)])
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Vec3([self.0[0].scale(s), self.0[1].scale(s), self.0[2].scale(s)])
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Vec3<U> {
        Vec3([f(&self.0[0]), f(&self.0[1]), f(&self.0[2])])
    }

    pub fn try_map<U>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Vec3<U>> {
        Ok(Vec3([f(&self.0[0])?, f(&self.0[1])?, f(&self.0[2])?]))
    }

    /// Point values.
    pub fn value(&self) -> Cx3 {
        self.map(|x| x.value())
    }

    pub fn zero_like(&self) -> Self {
        self.map(|x| x.zero_like())
    }
}

impl Cx3 {
    pub fn from_re(a: f64, b: f64, c: f64) -> Self {
        Vec3([re(a), re(b), re(c)])
    }

    pub fn zero() -> Self {
        Self::from_re(0.0, 0.0, 0.0)
    }

    /// Unit basis vector `e_{i+1}`.
    pub fn basis(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = re(1.0);
        v
    }

    /// Hermitian length, used only for magnitudes of residuals.
    pub fn herm_norm(&self) -> f64 {
        (self.0.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }
}

impl<T: Scalar> Add for &Vec3<T> {
    type Output = Vec3<T>;
    fn add(self, o: Self) -> Vec3<T> {
        Vec3([self.0[0].add(&o.0[0]), self.0[1].add(&o.0[1]), self.0[2].add(&o.0[2])])
    }
}

impl<T: Scalar> Sub for &Vec3<T> {
    type Output = Vec3<T>;
    fn sub(self, o: Self) -> Vec3<T> {
        Vec3([self.0[0].sub(&o.0[0]), self.0[1].sub(&o.0[1]), self.0[2].sub(&o.0[2])])
    }
}

impl<T: Scalar> Neg for &Vec3<T> {
    type Output = Vec3<T>;
    fn neg(self) -> Vec3<T> {
        self.map(|x| x.neg())
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Vec3<T>;
    fn add(self, o: Self) -> Vec3<T> {
        &self + &o
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Vec3<T>;
    fn sub(self, o: Self) -> Vec3<T> {
        &self - &o
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Vec3<T>;
    fn neg(self) -> Vec3<T> {
        -&self
    }
}

impl<T: Scalar> Mul<&T> for &Vec3<T> {
    type Output = Vec3<T>;
    fn mul(self, s: &T) -> Vec3<T> {
        self.scale(s)
    }
}

/// Row-major 3x3 matrix over a scalar ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

/// A matrix of complex numbers.
pub type CMat3 = Mat3<C64>;

impl<T: Scalar> Mat3<T> {
    pub fn from_cols(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Self {
        Mat3(std::array::from_fn(|i| [a.0[i].clone(), b.0[i].clone(), c.0[i].clone()]))
    }

    pub fn from_rows(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Self {
        Mat3([a.0.clone(), b.0.clone(), c.0.clone()])
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3(self.0[i].clone())
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3(std::array::from_fn(|i| self.0[i][j].clone()))
    }

    /// Identity with entries of the same kind as `like`.
    pub fn identity_like(like: &T) -> Self {
        let z = like.zero_like();
        let o = like.one_like();
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { o.clone() } else { z.clone() })
        }))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Mat3<U> {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| f(&self.0[i][j]))))
    }

    pub fn try_map<U>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Mat3<U>> {
        let mut out: Vec<[U; 3]> = Vec::with_capacity(3);
        for i in 0..3 {
            out.push([f(&self.0[i][0])?, f(&self.0[i][1])?, f(&self.0[i][2])?]);
        }
        let mut it = out.into_iter();
        Ok(Mat3([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]))
    }

    pub fn value(&self) -> CMat3 {
        self.map(|x| x.value())
    }

    pub fn transpose(&self) -> Self {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i].clone())))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.0[i][0]
                    .mul(&o.0[0][j])
                    .add(&self.0[i][1].mul(&o.0[1][j]))
                    .add(&self.0[i][2].mul(&o.0[2][j]))
            })
        }))
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        Vec3(std::array::from_fn(|i| self.row(i).dot(v)))
    }

    pub fn add_mat(&self, o: &Self) -> Self {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].add(&o.0[i][j]))))
    }

    pub fn sub_mat(&self, o: &Self) -> Self {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].sub(&o.0[i][j]))))
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.mul(s))
    }

    pub fn trace(&self) -> T {
        self.0[0][0].add(&self.0[1][1]).add(&self.0[2][2])
    }

    pub fn det(&self) -> T {
        self.row(0).dot(&self.row(1).cross(&self.row(2)))
    }

    /// Adjugate: `adj(M) M = det(M) I`.
    pub fn adjugate(&self) -> Self {
        let r0 = self.row(0);
        let r1 = self.row(1);
        let r2 = self.row(2);
        Mat3::from_cols(&r1.cross(&r2), &r2.cross(&r0), &r0.cross(&r1))
    }

    /// Inverse, refused when `|det| < 1e-13 (max row norm)^3`.
    pub fn inverse(&self) -> Result<Self> {
        let v = self.value();
        let rn = (0..3).map(|i| v.row(i).herm_norm()).fold(0.0, f64::max);
        let d = self.det();
        let dn = d.value().norm();
        if !(dn >= SINGULAR_EPS * rn.powi(3)) || dn == 0.0 {
            return Err(Error::Singular(dn));
        }
        let inv = d.recip()?;
        Ok(self.adjugate().scale(&inv))
    }
}

impl CMat3 {
    pub fn identity() -> Self {
        Mat3::identity_like(&re(0.0))
    }

    /// Hermitian Frobenius norm, for residual magnitudes.
    pub fn herm_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The isometry `x -> alpha(x)` with `alpha(x) y = x cross y`.
pub fn alpha<T: Scalar>(x: &Vec3<T>) -> Mat3<T> {
    let [x1, x2, x3] = &x.0;
    let z = x1.zero_like();
    Mat3([
        [z.clone(), x3.neg(), x2.clone()],
        [x3.clone(), z.clone(), x1.neg()],
        [x2.neg(), x1.clone(), z],
    ])
}

/// Inverse of [`alpha`]; refuses matrices that are not antisymmetric.
pub fn alpha_inv<T: Scalar>(m: &Mat3<T>) -> Result<Vec3<T>> {
    let v = m.value();
    let scale = v.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut defect: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            defect = defect.max((v.0[i][j] + v.0[j][i]).norm());
        }
    }
    if defect > O3_EPS * (1.0 + scale) {
        return Err(Error::NotInO3(defect));
    }
    let h = re(0.5);
    Ok(Vec3([
        m.0[2][1].sub(&m.0[1][2]).scale(h),
        m.0[0][2].sub(&m.0[2][0]).scale(h),
        m.0[1][0].sub(&m.0[0][1]).scale(h),
    ]))
}

/// The unique linear map sending the columns of `f0` to those of `f1`.
pub fn rotation_from_frames<T: Scalar>(f0: &[Vec3<T>; 3], f1: &[Vec3<T>; 3]) -> Result<Mat3<T>> {
    let m0 = Mat3::from_cols(&f0[0], &f0[1], &f0[2]);
    let m1 = Mat3::from_cols(&f1[0], &f1[1], &f1[2]);
    let inv = m0.inverse().map_err(|e| match e {
        Error::Singular(d) => Error::DegenerateFrame(d),
        other => other,
    })?;
    Ok(m1.mul_mat(&inv))
}

/// `1/2 tr(A^T B)`, the pairing for which `alpha` is an isometry.
pub fn trace_pairing(a: &CMat3, b: &CMat3) -> C64 {
    a.transpose().mul_mat(b).trace() * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    #[test]
    fn dot_examples() {
        assert_eq!(Cx3::basis(0).dot(&Cx3::basis(1)), re(0.0));
        let iso = Vec3([re(1.0), c(0.0, 1.0), re(0.0)]);
        assert_eq!(iso.dot(&iso), re(0.0));
        assert_eq!(Cx3::from_re(2.0, 3.0, 5.0).dot(&Cx3::from_re(7.0, 11.0, 13.0)), re(112.0));
    }

    #[test]
    fn cross_examples() {
        assert_eq!(Cx3::basis(0).cross(&Cx3::basis(1)), Cx3::basis(2));
        let a = Cx3::from_re(1.0, 2.0, 3.0);
        assert_eq!(a.cross(&a), Cx3::zero());
        assert_eq!(a.cross(&Cx3::from_re(4.0, 5.0, 6.0)), Cx3::from_re(-3.0, 6.0, -3.0));
    }

    #[test]
    fn alpha_examples() {
        let m = alpha(&Cx3::basis(0));
        let want = Mat3([
            [re(0.0), re(0.0), re(0.0)],
            [re(0.0), re(0.0), re(-1.0)],
            [re(0.0), re(1.0), re(0.0)],
        ]);
        assert_eq!(m, want);
        assert_eq!(alpha(&Cx3::zero()).herm_norm(), 0.0);
        let x = Cx3::from_re(2.0, -1.0, 4.0);
        assert_eq!(alpha_inv(&alpha(&x)).unwrap(), x);
    }

    #[test]
    fn alpha_inv_rejects_symmetric() {
        let m = CMat3::identity();
        assert!(matches!(alpha_inv(&m), Err(Error::NotInO3(_))));
    }

    #[test]
    fn alpha_acts_as_cross() {
        let x = Vec3([c(1.0, 2.0), c(-0.5, 0.1), c(0.3, -0.7)]);
        let y = Vec3([c(0.2, 0.0), c(1.5, -1.0), c(-2.0, 0.4)]);
        let d = &alpha(&x).mul_vec(&y) - &x.cross(&y);
        assert!(d.herm_norm() < 1e-15);
    }

    #[test]
    fn rotation_examples() {
        let e = [Cx3::basis(0), Cx3::basis(1), Cx3::basis(2)];
        let r = rotation_from_frames(&e, &e).unwrap();
        assert!(r.sub_mat(&CMat3::identity()).herm_norm() < 1e-15);
        let f1 = [Cx3::basis(1), -Cx3::basis(0), Cx3::basis(2)];
        let r = rotation_from_frames(&e, &f1).unwrap();
        let want = Mat3([
            [re(0.0), re(-1.0), re(0.0)],
            [re(1.0), re(0.0), re(0.0)],
            [re(0.0), re(0.0), re(1.0)],
        ]);
        assert!(r.sub_mat(&want).herm_norm() < 1e-15);
    }

    #[test]
    fn degenerate_frame_is_refused() {
        let f0 = [Cx3::basis(0), Cx3::basis(1), Cx3::basis(0)];
        let e = [Cx3::basis(0), Cx3::basis(1), Cx3::basis(2)];
        assert!(matches!(rotation_from_frames(&f0, &e), Err(Error::DegenerateFrame(_))));
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat3([
            [c(1.0, 0.5), re(2.0), re(0.0)],
            [re(0.0), c(0.0, 1.0), re(3.0)],
            [re(1.0), re(0.0), c(2.0, -1.0)],
        ]);
        let p = m.mul_mat(&m.inverse().unwrap());
        assert!(p.sub_mat(&CMat3::identity()).herm_norm() < 1e-14);
    }
}
