//! Isometric correspondence of leaves.
//!
//! The connection of the rolling that carries one leaf onto another is
//! solved in closed form up to three free functions `c₁, c₂, c₄`:
//!
//! ```text
//! ω̃ᵤ = c₁a + c₂b + ω̃ᵤ₁,   ω̃ᵥ = −c₁b + c₄a + ω̃ᵥ₁,
//! ω̃_w = c₁(𝒱̃a + 𝒰̃b) + c₂𝒱̃b − c₄𝒰̃a + ω̃_w₁,
//! ```
//!
//! with `a = ω̃_{uc₁}` and `b = ω̃_{uc₂}`. Flatness of `ω̃` then splits into
//! the vector coefficients `Cⁱⱼ` of the monomials `1, c₁, c₂, c₄, c₁²+c₂c₄`,
//! from which the relations checked in the submodules follow.

use crate::contact::ContactJet;
use crate::error::{Error, Result};
use crate::jets::{Jet, U, V, W};
use crate::kernel::{re, Cx3, Vec3, C64};
use std::ops::{Add, Mul, Neg, Sub};

use crate::report::{Residual, ResidualReport, Terms};

pub mod abc;
pub mod cascade;
pub mod poly;
pub mod relations;

/// Tolerance of the frame and first-layer relations.
pub const FRAME_TOL: f64 = 1e-8;

/// Monomial labels of the C-vectors, in storage order.
pub const MONOMIALS: [&str; 5] = ["0", "1", "2", "4", "124"];

/// Index of a monomial in [`MONOMIALS`].
pub const M0: usize = 0;
pub const M1: usize = 1;
pub const M2: usize = 2;
pub const M4: usize = 3;
pub const M124: usize = 4;

/// A scalar carrying the sum of magnitudes of the additive terms that
/// produced it; products multiply the scales, as after full expansion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tracked {
    pub v: C64,
    pub s: f64,
}

impl Tracked {
    /// A single term.
    pub fn exact(v: C64) -> Self {
        Tracked { v, s: v.norm() }
    }
    pub fn zero() -> Self {
        Tracked { v: re(0.0), s: 0.0 }
    }
    pub fn from_pair(p: (C64, f64)) -> Self {
        Tracked { v: p.0, s: p.1 }
    }
    pub fn plus(self, o: Tracked) -> Tracked {
        self + o
    }
    pub fn times(self, k: C64) -> Tracked {
        Tracked { v: self.v * k, s: self.s * k.norm() }
    }
    /// Division by a quantity treated as a single term.
    pub fn over(self, d: C64) -> Tracked {
        Tracked { v: self.v / d, s: self.s / d.norm() }
    }
    pub fn residual(&self) -> Residual {
        Residual::relative(self.v.norm(), self.s)
    }
}

impl Add for Tracked {
    type Output = Tracked;
    fn add(self, o: Tracked) -> Tracked {
        Tracked { v: self.v + o.v, s: self.s + o.s }
    }
}

impl Sub for Tracked {
    type Output = Tracked;
    fn sub(self, o: Tracked) -> Tracked {
        Tracked { v: self.v - o.v, s: self.s + o.s }
    }
}

impl Neg for Tracked {
    type Output = Tracked;
    fn neg(self) -> Tracked {
        Tracked { v: -self.v, s: self.s }
    }
}

impl Mul for Tracked {
    type Output = Tracked;
    fn mul(self, o: Tracked) -> Tracked {
        Tracked { v: self.v * o.v, s: self.s * o.s }
    }
}

/// The solved frame at a point with all pieces as jets over (u, v, w).
#[derive(Clone, Debug)]
pub struct CorrFrame {
    pub point: [f64; 3],
    pub n0: Vec3<Jet>,
    pub nu: Vec3<Jet>,
    pub nv: Vec3<Jet>,
    pub x0u: Vec3<Jet>,
    pub x0v: Vec3<Jet>,
    pub v: Vec3<Jet>,
    pub vu: Vec3<Jet>,
    pub vv: Vec3<Jet>,
    pub vw: Vec3<Jet>,
    pub mm: Jet,
    pub m: Vec3<Jet>,
    pub k: Jet,
    /// `𝒰`, `𝒱`.
    pub cu: Vec3<Jet>,
    pub cv: Vec3<Jet>,
    /// `N₀·(𝒰×𝒱)`.
    pub n: Jet,
    /// `N₀·(V×𝒰)/𝐦`, `N₀·(V×𝒱)/𝐦`.
    pub su: Jet,
    pub sv: Jet,
    /// `𝒰̃`, `𝒱̃`.
    pub tu: Jet,
    pub tv: Jet,
    pub cal_m: Jet,
    /// `ω̃_{uc₁}`, `ω̃_{uc₂}`.
    pub a: Vec3<Jet>,
    pub b: Vec3<Jet>,
    pub wu1: Vec3<Jet>,
    pub wv1: Vec3<Jet>,
    pub ww1: Vec3<Jet>,
    /// `c[i][j]` is `Cⁱ⁺¹` for monomial `MONOMIALS[j]`; present when the
    /// jets carry at least one more order than the frame pieces.
    pub c: Option<[[Vec3<Jet>; 5]; 3]>,
    /// Sum of the magnitudes of the terms making up each C-vector.
    pub cscale: [[f64; 5]; 3],
}

fn nonzero(x: &Jet, scale: f64, what: &str) -> Result<()> {
    if x.value().norm() <= 1e-12 * scale.max(1e-300) {
        Err(Error::ZeroDenominator(what.to_string()))
    } else {
        Ok(())
    }
}

fn d(x: &Vec3<Jet>, var: usize) -> Result<Vec3<Jet>> {
    x.try_map(|j| j.derivative(var))
}

/// Tangential projection `(N₀×X)×N₀`.
pub fn tangential(n0: &Vec3<Jet>, x: &Vec3<Jet>) -> Vec3<Jet> {
    n0.cross(x).cross(n0)
}

impl CorrFrame {
    /// Build the frame from a contact jet.
    pub fn build(cj: &ContactJet) -> Result<CorrFrame> {
        let n0 = cj.sj.n.clone();
        let (cu, cv, vw, mm) = (cj.cu.clone(), cj.cv.clone(), cj.vw.clone(), cj.mm.clone());
        let v = cj.v.clone();
        let scale = cu.value().herm_norm() * cv.value().herm_norm();
        let n = n0.dot(&cu.cross(&cv));
        nonzero(&n, scale, "N0.(U x V)")?;
        nonzero(&mm, 1.0, "m")?;
        let minv = mm.recip_j()?;
        let ninv = n.recip_j()?;
        let su = &n0.dot(&v.cross(&cu)) * &minv;
        let sv = &n0.dot(&v.cross(&cv)) * &minv;
        let (tu_vec, tv_vec) = (tangential(&n0, &cu), tangential(&n0, &cv));
        let a = &tu_vec + &n0.scale(&su);
        let b = &tv_vec + &n0.scale(&sv);
        let (nu, nv) = (cj.nu.clone(), cj.nv.clone());
        let vu = cj.dv(U)?;
        let vv = cj.dv(V)?;
        let knn = n0.dot(&nu.cross(&nv));
        // ℳ = −1/(2𝐦) + [dN₀ᵀ∧dV − 𝐦/2 N₀ᵀ(dN₀×∧dN₀)] / N₀ᵀ[d(V+x₀)×∧d(V+x₀)]
        let wedge = &(&nu.dot(&vv) - &nv.dot(&vu)) - &(&mm * &knn);
        let cal_m = &(&minv * re(-0.5)) + &(&(&wedge * &ninv) * re(0.5));
        let q = &(&nu.scale(&sv) - &nv.scale(&su)) - &n0.cross(&v).scale(&knn);
        let wu1 = &(&tu_vec - &n0.scale(&su)).scale(&cal_m) + &n0.scale(&(&cu.dot(&q) * &ninv));
        let wv1 = &(&tv_vec - &n0.scale(&sv)).scale(&cal_m) + &n0.scale(&(&cv.dot(&q) * &ninv));
        let pw_u = n0.dot(&vw.cross(&cu));
        let pw_v = n0.dot(&vw.cross(&cv));
        let tu = &pw_u * &ninv;
        let tv = &pw_v * &ninv;
        let nu_w = nu.dot(&vw);
        let nv_w = nv.dot(&vw);
        let reg = n0.dot(&vw.cross(&v));
        let f1 = &(&(&(&cal_m * &pw_v) + &nv_w) + &(&pw_v * &minv)) * &ninv;
        let f2 = &(&(&(&cal_m * &pw_u) + &nu_w) + &(&pw_u * &minv)) * &ninv;
        let f3 = &(&(&(&cal_m * &reg) * &minv) + &(&(&nu_w * &ninv) * &sv)) - &(&(&nv_w * &ninv) * &su);
        let ww1 = &(&tv_vec.scale(&f2) - &tu_vec.scale(&f1)) + &n0.scale(&f3);
        let mut f = CorrFrame {
            point: cj.point,
            n0,
            nu,
            nv,
            x0u: cj.sj.xu.clone(),
            x0v: cj.sj.xv.clone(),
            v,
            vu,
            vv,
            vw,
            mm,
            m: cj.m.clone(),
            k: cj.sj.k.clone(),
            cu,
            cv,
            n,
            su,
            sv,
            tu,
            tv,
            cal_m,
            a,
            b,
            wu1,
            wv1,
            ww1,
            c: None,
            cscale: [[0.0; 5]; 3],
        };
        if f.a.0[0].spec().max_degree() >= 1 {
            let (c, s) = f.c_vectors()?;
            f.c = Some(c);
            f.cscale = s;
        }
        Ok(f)
    }

    /// `m·X` as a jet.
    pub fn mdot(&self, x: &Vec3<Jet>) -> Jet {
        self.m.dot(x)
    }

    /// `𝒰×N₀`, `𝒱×N₀`, `∂_wV×N₀`.
    pub fn ux_n(&self) -> Vec3<Jet> {
        self.cu.cross(&self.n0)
    }
    pub fn vx_n(&self) -> Vec3<Jet> {
        self.cv.cross(&self.n0)
    }
    pub fn wx_n(&self) -> Vec3<Jet> {
        self.vw.cross(&self.n0)
    }

    /// The C-vectors, `c[i][j]` = `Cⁱ⁺¹_{MONOMIALS[j]}`.
    pub fn cvec(&self) -> Result<&[[Vec3<Jet>; 5]; 3]> {
        self.c.as_ref().ok_or(Error::InsufficientOrder(W))
    }

    fn c_vectors(&self) -> Result<([[Vec3<Jet>; 5]; 3], [[f64; 5]; 3])> {
        let (a, b) = (&self.a, &self.b);
        let (wu1, wv1, ww1) = (&self.wu1, &self.wv1, &self.ww1);
        let (tu, tv) = (&self.tu, &self.tv);
        let g = &a.scale(tv) + &b.scale(tu);
        let tvb = b.scale(tv);
        let tua = a.scale(tu);
        // each C-vector as a signed list of terms
        let t = |terms: Vec<(f64, Vec3<Jet>)>| -> (Vec3<Jet>, f64) {
            let scale = terms.iter().map(|(_, x)| x.value().herm_norm()).sum();
            let mut it = terms.into_iter();
            let (s0, x0) = it.next().expect("nonempty");
            let first = x0.scale_c(re(s0));
            (it.fold(first, |acc, (s, x)| &acc + &x.scale_c(re(s))), scale)
        };
        let c01 = t(vec![(1.0, d(wv1, U)?), (-1.0, d(wu1, V)?), (1.0, wu1.cross(wv1))]);
        let c11 = t(vec![(-1.0, d(b, U)?), (-1.0, d(a, V)?), (1.0, a.cross(wv1)), (-1.0, wu1.cross(b))]);
        let c21 = t(vec![(-1.0, d(b, V)?), (1.0, b.cross(wv1))]);
        let c41 = t(vec![(1.0, d(a, U)?), (1.0, wu1.cross(a))]);
        let c1241 = t(vec![(-1.0, a.cross(b))]);
        let c02 = t(vec![(1.0, d(ww1, U)?), (-1.0, d(wu1, W)?), (1.0, wu1.cross(ww1))]);
        let c12 = t(vec![(1.0, d(&g, U)?), (-1.0, d(a, W)?), (1.0, a.cross(ww1)), (1.0, wu1.cross(&g))]);
        let c22 = t(vec![(1.0, d(&tvb, U)?), (-1.0, d(b, W)?), (1.0, b.cross(ww1)), (1.0, wu1.cross(b).scale(tv))]);
        let c42 = t(vec![(-1.0, d(&tua, U)?), (-1.0, wu1.cross(a).scale(tu))]);
        let c1242 = t(vec![(1.0, a.cross(b).scale(tu))]);
        let c03 = t(vec![(1.0, d(wv1, W)?), (-1.0, d(ww1, V)?), (1.0, ww1.cross(wv1))]);
        let c13 = t(vec![(-1.0, d(b, W)?), (-1.0, d(&g, V)?), (1.0, g.cross(wv1)), (-1.0, ww1.cross(b))]);
        let c23 = t(vec![(-1.0, d(&tvb, V)?), (1.0, tvb.cross(wv1))]);
        let c43 = t(vec![(1.0, d(a, W)?), (1.0, d(&tua, V)?), (-1.0, tua.cross(wv1)), (1.0, ww1.cross(a))]);
        let c1243 = t(vec![(-1.0, a.cross(b).scale(tv))]);
        let rows = [[c01, c11, c21, c41, c1241], [c02, c12, c22, c42, c1242], [c03, c13, c23, c43, c1243]];
        let scale = std::array::from_fn(|i| std::array::from_fn(|j| rows[i][j].1));
        let c = rows.map(|r| r.map(|(x, _)| x));
        Ok((c, scale))
    }

    /// `ω̃_{w1}` re-evaluated from its short closed form.
    pub fn ww1_closed_form(&self) -> Result<Vec3<Jet>> {
        let ninv = self.n.recip_j()?;
        let minv = self.mm.recip_j()?;
        let nu_w = &self.nu.dot(&self.vw) * &ninv;
        let nv_w = &self.nv.dot(&self.vw) * &ninv;
        let ka = &(&(&self.cal_m * &self.tv) + &nv_w) + &(&self.tv * &minv);
        let kb = &(&(&self.cal_m * &self.tu) + &nu_w) + &(&self.tu * &minv);
        let reg = self.n0.dot(&self.vw.cross(&self.v));
        let kn = &(&reg * &minv) * &minv;
        Ok(&(&self.b.scale(&kb) - &self.a.scale(&ka)) - &self.n0.scale(&kn))
    }

    /// The connection components for constant `c₁, c₂, c₄`.
    pub fn omega(&self, c1: C64, c2: C64, c4: C64) -> [Cx3; 3] {
        let (a, b) = (self.a.value(), self.b.value());
        let (tu, tv) = (self.tu.value(), self.tv.value());
        let wu = &(&a.scale_c(c1) + &b.scale_c(c2)) + &self.wu1.value();
        let wv = &(&b.scale_c(-c1) + &a.scale_c(c4)) + &self.wv1.value();
        let ww = &(&(&(&a.scale_c(c1 * tv) + &b.scale_c(c1 * tu)) + &b.scale_c(c2 * tv)) - &a.scale_c(c4 * tu))
            + &self.ww1.value();
        [wu, wv, ww]
    }
}

/// Residuals of the four equations solved by the frame, for constant
/// `c₁, c₂, c₄`: `tiom.1` (scalar 2-form), `tiom.2` (vector 2-form),
/// `tiom.3` (scalar 1-form) and `tiom.4` (vector 1-form).
pub fn tiom_residuals(f: &CorrFrame, c1: C64, c2: C64, c4: C64) -> ResidualReport {
    let [wu, wv, ww] = f.omega(c1, c2, c4);
    let n0 = f.n0.value();
    let (nu, nv) = (f.nu.value(), f.nv.value());
    let (cu, cv) = (f.cu.value(), f.cv.value());
    let (vu, vv, vw, v) = (f.vu.value(), f.vv.value(), f.vw.value(), f.v.value());
    let mm = f.mm.value();
    let (su, sv) = (f.su.value(), f.sv.value());
    let n = f.n.value();
    let knn = n0.dot(&nu.cross(&nv));
    let mut rep = ResidualReport::new();
    let p = f.point;

    let e1 = Terms::new()
        .add(n0.dot(&wu.cross(&cv)))
        .sub(n0.dot(&wv.cross(&cu)))
        .sub(nu.dot(&vv))
        .add(nv.dot(&vu))
        .add(n / mm)
        .add(mm * knn);
    rep.push("tiom.1", p, e1.residual(), FRAME_TOL);

    let e2 = Terms::new()
        .sub(cv.cross(&n0).scale_c(wu.dot(&n0)))
        .add(cu.cross(&n0).scale_c(wv.dot(&n0)))
        .add(wu.cross(&n0).scale_c(sv))
        .sub(wv.cross(&n0).scale_c(su))
        .sub(n0.cross(&v).scale_c(knn))
        .add(nu.scale_c(sv))
        .sub(nv.scale_c(su));
    rep.push("tiom.2", p, e2.residual(), FRAME_TOL);

    let reg = n0.dot(&vw.cross(&v));
    let mut r3 = Residual::zero();
    let mut r4 = Residual::zero();
    for (wj, cj, nj, sj) in [(&wu, &cu, &nu, su), (&wv, &cv, &nv, sv)] {
        let e3 = Terms::new()
            .add(n0.dot(&ww.cross(cj)))
            .sub(n0.dot(&wj.cross(&vw)))
            .add(nj.dot(&vw))
            .add(n0.dot(&vw.cross(cj)) / mm);
        r3 = r3.max(e3.residual());
        let e4 = Terms::new()
            .sub(cj.cross(&n0).scale_c(ww.dot(&n0)))
            .add(ww.cross(&n0).scale_c(sj))
            .sub(n0.cross(&vw).scale_c(wj.dot(&n0)))
            .add(wj.cross(&n0).scale_c(reg / mm))
            .add(nj.scale_c(reg / mm));
        r4 = r4.max(e4.residual());
    }
    rep.push("tiom.3", p, r3, FRAME_TOL);
    rep.push("tiom.4", p, r4, FRAME_TOL);
    rep
}

/// Relative difference of the stored `ω̃_{w1}` and its closed form.
pub fn ww1_invariant(f: &CorrFrame) -> Result<Residual> {
    let alt = f.ww1_closed_form()?.value();
    let base = f.ww1.value();
    Ok(Residual::relative((&base - &alt).herm_norm(), base.herm_norm() + alt.herm_norm()))
}

/// Frames shared by the unit tests of the submodules.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::CorrFrame;
    use crate::contact::ContactJet;
    use crate::kernel::{re, C64};
    use crate::scenarios::{backlund_field, make_surface, random_tangent_field, BacklundSeed};

    pub const KEYSTONE: [f64; 3] = [0.8, 1.1, 0.4];

    pub fn tractroid(order: u8) -> CorrFrame {
        let f = backlund_field(BacklundSeed::Tractroid, re(0.6)).unwrap();
        CorrFrame::build(&ContactJet::new(&f, KEYSTONE[0], KEYSTONE[1], KEYSTONE[2], order).unwrap()).unwrap()
    }

    pub fn sphere(order: u8) -> CorrFrame {
        let f = backlund_field(BacklundSeed::Sphere, C64::new(0.0, 0.5)).unwrap();
        CorrFrame::build(&ContactJet::new(&f, KEYSTONE[0], KEYSTONE[1], KEYSTONE[2], order).unwrap()).unwrap()
    }

    /// Tangential data satisfying only the first integrability equation.
    pub fn random(order: u8, p: [f64; 3]) -> CorrFrame {
        let f = random_tangent_field(make_surface("sphere", &Default::default()).unwrap(), 7);
        CorrFrame::build(&ContactJet::new(&f, p[0], p[1], p[2], order).unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tracked_arithmetic_tracks_scales() {
        let a = Tracked::exact(re(3.0));
        let b = Tracked::exact(re(-3.0));
        let s = a + b;
        assert_eq!((s.v, s.s), (re(0.0), 6.0));
        assert_eq!(s.residual().rel, 0.0);
        let p = (a - b) * Tracked::exact(re(2.0));
        assert_eq!((p.v, p.s), (re(12.0), 12.0));
        assert_eq!(a.times(re(-2.0)).over(re(4.0)).s, 1.5);
    }

    #[test]
    fn frame_equations_hold_for_any_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in [tractroid(2), sphere(2), random(2, [0.9, 0.4, 0.3])] {
            for _ in 0..5 {
                let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let rep = tiom_residuals(&f, c(), c(), c());
                assert_eq!(rep.records.len(), 4);
                assert!(rep.all_pass(), "{rep:?}");
            }
            assert!(ww1_invariant(&f).unwrap().rel < FRAME_TOL);
        }
    }

    #[test]
    fn c_vectors_need_one_more_order() {
        assert!(matches!(tractroid(1).cvec(), Err(Error::InsufficientOrder(_))));
        let c = tractroid(3);
        let cv = c.cvec().unwrap();
        // C¹₁₂₄ = −a×b
        let want = c.a.value().cross(&c.b.value());
        assert!((&cv[0][M124].value() + &want).herm_norm() < 1e-15);
    }

    #[test]
    fn tangential_projection_drops_the_normal() {
        let f = tractroid(1);
        let t = tangential(&f.n0, &f.n0.scale_c(re(2.0))).value();
        assert!(t.herm_norm() < 1e-15);
        let t = tangential(&f.n0, &f.x0u).value();
        assert!((&t - &f.x0u.value()).herm_norm() < 1e-14);
    }
}
