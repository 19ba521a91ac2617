//! Pointwise exterior calculus over the parameter spaces (u, v) and (u, v, w).
//!
//! A 1-form stores one coefficient per direction, a 2-form one coefficient
//! per ordered pair (du∧dv, du∧dw, dv∧dw). Coefficients are jets or values,
//! scalar or vector. The cross-wedge of vector forms is
//! `(ω₁×∧ω₂)(X, Y) = ω₁(X)×ω₂(Y) − ω₁(Y)×ω₂(X)`, which is symmetric in the
//! two factors because both products are skew.

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::kernel::{Mat3, Scalar, Vec3};
use crate::report::{Magnitude, Residual};

/// Parameter space of a form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Uv,
    Uvw,
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Uv => 2,
            Space::Uvw => 3,
        }
    }

    /// Ordered direction pairs indexing 2-form coefficients.
    pub fn pairs(self) -> &'static [(usize, usize)] {
        match self {
            Space::Uv => &[(0, 1)],
            Space::Uvw => &[(0, 1), (0, 2), (1, 2)],
        }
    }
}

/// Linear structure shared by form coefficients.
pub trait Coef: Clone {
    fn add_c(&self, o: &Self) -> Self;
    fn sub_c(&self, o: &Self) -> Self;
    fn neg_c(&self) -> Self;
}

impl<S: Scalar> Coef for S {
    fn add_c(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_c(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn neg_c(&self) -> Self {
        self.neg()
    }
}

impl<S: Scalar> Coef for Vec3<S> {
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_c(&self, o: &Self) -> Self {
        self - o
    }
    fn neg_c(&self) -> Self {
        -self
    }
}

/// Fields that can be differentiated along a parameter direction.
pub trait Differentiable: Sized {
    fn partial(&self, var: usize) -> Result<Self>;
}

impl Differentiable for Jet {
    fn partial(&self, var: usize) -> Result<Self> {
        self.derivative(var)
    }
}

impl Differentiable for Vec3<Jet> {
    fn partial(&self, var: usize) -> Result<Self> {
        self.try_map(|j| j.derivative(var))
    }
}

impl Differentiable for Mat3<Jet> {
    fn partial(&self, var: usize) -> Result<Self> {
        self.try_map(|j| j.derivative(var))
    }
}

/// A 1-form: one coefficient per direction.
#[derive(Clone, Debug)]
pub struct Form1<T> {
    pub space: Space,
    pub c: Vec<T>,
}

/// A 2-form: one coefficient per ordered direction pair.
#[derive(Clone, Debug)]
pub struct Form2<T> {
    pub space: Space,
    pub c: Vec<T>,
}

impl<T: Clone> Form1<T> {
    pub fn new(space: Space, c: Vec<T>) -> Result<Self> {
        if c.len() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Form1 { space, c })
    }

    pub fn uv(du: T, dv: T) -> Self {
        Form1 { space: Space::Uv, c: vec![du, dv] }
    }

    pub fn uvw(du: T, dv: T, dw: T) -> Self {
        Form1 { space: Space::Uvw, c: vec![du, dv, dw] }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Form1<U> {
        Form1 { space: self.space, c: self.c.iter().map(f).collect() }
    }

    pub fn try_map<U>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Form1<U>> {
        Ok(Form1 { space: self.space, c: self.c.iter().map(f).collect::<Result<_>>()? })
    }

    /// Restriction of a (u, v, w) form to its (du, dv) part.
    pub fn restrict_uv(&self) -> Form1<T> {
        Form1 { space: Space::Uv, c: self.c[..2].to_vec() }
    }
}

impl<T: Coef> Form1<T> {
    pub fn add(&self, o: &Self) -> Result<Self> {
        same(self.space, o.space)?;
        Ok(Form1 { space: self.space, c: self.c.iter().zip(&o.c).map(|(a, b)| a.add_c(b)).collect() })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        same(self.space, o.space)?;
        Ok(Form1 { space: self.space, c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub_c(b)).collect() })
    }
}

impl<T: Clone> Form2<T> {
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Form2<U> {
        Form2 { space: self.space, c: self.c.iter().map(f).collect() }
    }

    /// The du∧dv coefficient.
    pub fn uv(&self) -> &T {
        &self.c[0]
    }
}

impl<T: Coef> Form2<T> {
    pub fn add(&self, o: &Self) -> Result<Self> {
        same(self.space, o.space)?;
        Ok(Form2 { space: self.space, c: self.c.iter().zip(&o.c).map(|(a, b)| a.add_c(b)).collect() })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        same(self.space, o.space)?;
        Ok(Form2 { space: self.space, c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub_c(b)).collect() })
    }
}

fn same(a: Space, b: Space) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// Wedge of two 1-forms under a bilinear pairing of coefficients.
pub fn wedge_with<A, B, C: Coef>(a: &Form1<A>, b: &Form1<B>, pair: impl Fn(&A, &B) -> C) -> Result<Form2<C>> {
    same(a.space, b.space)?;
    let c = a
        .space
        .pairs()
        .iter()
        .map(|&(i, j)| pair(&a.c[i], &b.c[j]).sub_c(&pair(&a.c[j], &b.c[i])))
        .collect();
    Ok(Form2 { space: a.space, c })
}

/// Scalar-valued forms, product pairing.
pub fn wedge_scalar<S: Scalar>(a: &Form1<S>, b: &Form1<S>) -> Result<Form2<S>> {
    wedge_with(a, b, |x, y| x.mul(y))
}

/// Vector-valued forms, dot pairing `a^T ∧ b`.
pub fn wedge_dot<S: Scalar>(a: &Form1<Vec3<S>>, b: &Form1<Vec3<S>>) -> Result<Form2<S>> {
    wedge_with(a, b, |x, y| x.dot(y))
}

/// Vector-valued forms, cross pairing `a ×∧ b`.
pub fn wedge_cross<S: Scalar>(a: &Form1<Vec3<S>>, b: &Form1<Vec3<S>>) -> Result<Form2<Vec3<S>>> {
    wedge_with(a, b, |x, y| x.cross(y))
}

/// `½(ω₁×ω₂ + ω₂×ω₁)` computed literally, each product being the
/// antisymmetrized cross product over direction pairs.
pub fn cross_wedge_symmetrized<S: Scalar>(a: &Form1<Vec3<S>>, b: &Form1<Vec3<S>>) -> Result<Form2<Vec3<S>>> {
    let ab = wedge_cross(a, b)?;
    let ba = wedge_cross(b, a)?;
    Ok(ab.add(&ba)?.map(|v| v.scale_c(crate::kernel::re(0.5))))
}

/// Pointwise multiplication of a scalar 1-form by a fixed vector.
pub fn times_vec<S: Scalar>(f: &Form1<S>, v: &Vec3<S>) -> Form1<Vec3<S>> {
    f.map(|s| v.scale(s))
}

/// Exterior derivative of a field: the 1-form of its partials.
pub fn ext_d<T: Differentiable + Clone>(f: &T, space: Space) -> Result<Form1<T>> {
    let c = (0..space.dim()).map(|k| f.partial(k)).collect::<Result<_>>()?;
    Ok(Form1 { space, c })
}

/// Exterior derivative of a 1-form.
pub fn ext_d_form<T: Differentiable + Coef>(w: &Form1<T>) -> Result<Form2<T>> {
    let c = w
        .space
        .pairs()
        .iter()
        .map(|&(i, j)| Ok(w.c[j].partial(i)?.sub_c(&w.c[i].partial(j)?)))
        .collect::<Result<_>>()?;
    Ok(Form2 { space: w.space, c })
}

/// Both sides of the fundamental wedge identity for constant vectors a, b:
/// `a^Tω₁∧b^Tω₂ = ((a×b)×ω₁ + (b^Tω₁)a)^T∧ω₂ = (a×b)^T(ω₁×∧ω₂) + b^Tω₁∧a^Tω₂`.
#[derive(Clone, Debug)]
pub struct FundIdentity<S> {
    pub lhs: Form2<S>,
    pub first: Form2<S>,
    pub second: Form2<S>,
}

impl<S: Scalar + Magnitude> FundIdentity<S> {
    /// Worst form-normalized residual of the two equalities.
    pub fn residual(&self) -> Residual {
        let mut worst = Residual::zero();
        for rhs in [&self.first, &self.second] {
            for (l, r) in self.lhs.c.iter().zip(&rhs.c) {
                let scale = l.magnitude() + r.magnitude();
                worst = worst.max(Residual::form(l.sub(r).magnitude(), scale));
            }
        }
        worst
    }
}

pub fn fund_identity_residual<S: Scalar>(
    a: &Vec3<S>,
    b: &Vec3<S>,
    w1: &Form1<Vec3<S>>,
    w2: &Form1<Vec3<S>>,
) -> Result<FundIdentity<S>> {
    let aw1 = w1.map(|x| a.dot(x));
    let bw2 = w2.map(|x| b.dot(x));
    let lhs = wedge_scalar(&aw1, &bw2)?;
    let axb = a.cross(b);
    let bw1 = w1.map(|x| b.dot(x));
    let mixed = Form1 {
        space: w1.space,
        c: w1.c.iter().zip(&bw1.c).map(|(x, s)| &axb.cross(x) + &a.scale(s)).collect(),
    };
    let first = wedge_dot(&mixed, w2)?;
    let cw = wedge_cross(w1, w2)?.map(|v| axb.dot(v));
    let aw2 = w2.map(|x| a.dot(x));
    let second = cw.add(&wedge_scalar(&bw1, &aw2)?)?;
    Ok(FundIdentity { lhs, first, second })
}

/// Residual of `a^Tω∧b^Tω = ½(a×b)^T(ω×∧ω)`.
pub fn fund_particular_residual<S: Scalar + Magnitude>(a: &Vec3<S>, b: &Vec3<S>, w: &Form1<Vec3<S>>) -> Result<Residual> {
    let lhs = wedge_scalar(&w.map(|x| a.dot(x)), &w.map(|x| b.dot(x)))?;
    let axb = a.cross(b);
    let rhs = wedge_cross(w, w)?.map(|v| axb.dot(v).scale(crate::kernel::re(0.5)));
    let mut worst = Residual::zero();
    for (l, r) in lhs.c.iter().zip(&rhs.c) {
        worst = worst.max(Residual::form(l.sub(r).magnitude(), l.magnitude() + r.magnitude()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{JetSpec, U, V, W};
    use crate::kernel::{re, Cx3, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn rv(rng: &mut ChaCha8Rng) -> Cx3 {
        Vec3::new(rc(rng), rc(rng), rc(rng))
    }

    fn rform(rng: &mut ChaCha8Rng, space: Space) -> Form1<Cx3> {
        Form1 { space, c: (0..space.dim()).map(|_| rv(rng)).collect() }
    }

    #[test]
    fn scalar_wedge_is_antisymmetric() {
        let w = Form1::uv(re(2.0), re(-3.0));
        assert_eq!(*wedge_scalar(&w, &w).unwrap().uv(), re(0.0));
    }

    #[test]
    fn constant_cross_wedge() {
        let a = Cx3::from_re(1.0, 2.0, 0.0);
        let b = Cx3::from_re(0.0, 1.0, 3.0);
        let w1 = Form1::uv(a.clone(), Cx3::zero());
        let w2 = Form1::uv(Cx3::zero(), b.clone());
        let r = wedge_cross(&w1, &w2).unwrap();
        assert_eq!(r.uv().0, a.cross(&b).0);
    }

    #[test]
    fn cross_wedge_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let w1 = rform(&mut rng, Space::Uvw);
            let w2 = rform(&mut rng, Space::Uvw);
            let ab = wedge_cross(&w1, &w2).unwrap();
            let ba = wedge_cross(&w2, &w1).unwrap();
            let sym = cross_wedge_symmetrized(&w1, &w2).unwrap();
            for k in 0..3 {
                assert!((&ab.c[k] - &ba.c[k]).herm_norm() < 1e-12);
                assert!((&ab.c[k] - &sym.c[k]).herm_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn space_mismatch_is_refused() {
        let a = Form1::uv(re(1.0), re(1.0));
        let b = Form1::uvw(re(1.0), re(1.0), re(1.0));
        assert_eq!(wedge_scalar(&a, &b).unwrap_err(), Error::SpaceMismatch);
    }

    #[test]
    fn exterior_derivatives() {
        let s = JetSpec::uvw(3);
        let u = Jet::seed(&s, U, re(0.3)).unwrap();
        let v = Jet::seed(&s, V, re(-0.7)).unwrap();
        let w = Jet::seed(&s, W, re(1.1)).unwrap();
        let d = ext_d(&(&u * &v), Space::Uv).unwrap();
        assert_eq!(d.c[0].value(), re(-0.7));
        assert_eq!(d.c[1].value(), re(0.3));
        let c = ext_d(&Jet::constant(re(2.0)), Space::Uvw).unwrap();
        assert!(c.c.iter().all(|j| j.value() == re(0.0)));
        let f = &(&(&u * &u) * &v.sin()) + &(&w.exp() * &u);
        let dd = ext_d_form(&ext_d(&f, Space::Uvw).unwrap()).unwrap();
        assert!(dd.c.iter().all(|j| j.max_abs() < 1e-12));
    }

    #[test]
    fn fundamental_identity_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let (a, b) = (rv(&mut rng), rv(&mut rng));
            let w1 = rform(&mut rng, Space::Uvw);
            let w2 = rform(&mut rng, Space::Uvw);
            let fi = fund_identity_residual(&a, &b, &w1, &w2).unwrap();
            assert!(fi.residual().rel < 1e-12);
            assert!(fund_particular_residual(&a, &b, &w1).unwrap().rel < 1e-12);
        }
    }

    #[test]
    fn fundamental_identity_with_equal_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = rv(&mut rng);
        let w = rform(&mut rng, Space::Uv);
        let lhs = wedge_scalar(&w.map(|x| a.dot(x)), &w.map(|x| a.dot(x))).unwrap();
        assert!(lhs.uv().norm() < 1e-15);
        assert!(fund_identity_residual(&a, &a, &w, &w).unwrap().residual().rel < 1e-14);
    }
}
