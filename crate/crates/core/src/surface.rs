//! Parametric surfaces evaluated as jets, their normals and fundamental
//! forms, and the rolling of one surface on an isometric one.
//!
//! Parameters are real; the target space is complex. The rotation of the
//! rolling is `R = [∂ᵤx ∂ᵥx N][∂ᵤx₀ ∂ᵥx₀ N₀]⁻¹`, differentiated exactly as a
//! jet, and its connection form is `ω = α⁻¹(R⁻¹dR)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{Form1, Space};
use crate::jets::{Jet, JetSpec, U, V};
use crate::kernel::{alpha_inv, re, rotation_from_frames, Cx3, Mat3, Scalar, Vec3, C64};
use crate::report::{Residual, ResidualReport, Terms};

/// Tolerance of the pointwise isometry test performed by [`roll`].
pub const ISOMETRY_TOL: f64 = 1e-8;

type Rule = dyn Fn(&Jet, &Jet) -> Result<Vec3<Jet>> + Send + Sync;

/// A surface `x(u, v)` given by an evaluation rule on jets.
#[derive(Clone)]
pub struct ParametricSurface {
    pub name: String,
    /// Closed parameter rectangle `[u_min, u_max] × [v_min, v_max]`.
    pub domain: [[f64; 2]; 2],
    rule: Arc<Rule>,
}

impl fmt::Debug for ParametricSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricSurface").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

impl ParametricSurface {
    pub fn new(
        name: impl Into<String>,
        domain: [[f64; 2]; 2],
        rule: impl Fn(&Jet, &Jet) -> Result<Vec3<Jet>> + Send + Sync + 'static,
    ) -> Self {
        ParametricSurface { name: name.into(), domain, rule: Arc::new(rule) }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let [[u0, u1], [v0, v1]] = self.domain;
        u >= u0 && u <= u1 && v >= v0 && v <= v1
    }

    fn check(&self, u: f64, v: f64) -> Result<()> {
        if self.contains(u, v) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(u, v, self.name.clone()))
        }
    }

    /// Evaluate on arbitrary parameter jets (no domain check).
    pub fn eval(&self, u: &Jet, v: &Jet) -> Result<Vec3<Jet>> {
        (self.rule)(u, v)
    }

    /// Jet of the surface in (u, v) up to total order `order`.
    pub fn jet(&self, u: f64, v: f64, order: u8) -> Result<Vec3<Jet>> {
        self.check(u, v)?;
        let s = JetSpec::uv(order);
        self.eval(&Jet::seed(&s, U, re(u))?, &Jet::seed(&s, V, re(v))?)
    }

    /// Point value.
    pub fn point(&self, u: f64, v: f64) -> Result<Cx3> {
        self.check(u, v)?;
        let s = JetSpec::constant();
        let cu = Jet::constant_in(&s, re(u));
        let cv = Jet::constant_in(&s, re(v));
        Ok(self.eval(&cu, &cv)?.value())
    }

    /// The same surface with a different domain.
    pub fn with_domain(&self, domain: [[f64; 2]; 2]) -> Self {
        ParametricSurface { name: self.name.clone(), domain, rule: self.rule.clone() }
    }
}

/// Unit normal of the frame `(xu, xv)`, principal branch, optionally
/// sign-matched against a reference normal.
pub fn unit_normal(xu: &Vec3<Jet>, xv: &Vec3<Jet>, reference: Option<&Cx3>) -> Result<Vec3<Jet>> {
    let c = xu.cross(xv);
    let n2 = c.norm_sq();
    let scale = xu.value().herm_norm() * xv.value().herm_norm();
    if n2.value().norm() <= 1e-12 * scale * scale {
        return Err(Error::DegenerateMetric);
    }
    let inv = n2.sqrt()?.recip()?;
    let mut n = c.scale(&inv);
    if let Some(r) = reference {
        let nv = n.value();
        if (&nv - r).herm_norm() > (&nv + r).herm_norm() {
            n = -&n;
        }
    }
    Ok(n)
}

/// All partials of a surface at a point with derived geometric quantities.
#[derive(Clone, Debug)]
pub struct SurfaceJet {
    pub point: [f64; 2],
    pub x: Vec3<Jet>,
    pub xu: Vec3<Jet>,
    pub xv: Vec3<Jet>,
    pub n: Vec3<Jet>,
    /// First fundamental form E, F, G.
    pub g: [Jet; 3],
    /// Second fundamental form L, M, N.
    pub h: [Jet; 3],
    /// Inverse metric g^{11}, g^{12}, g^{22}.
    pub ginv: [Jet; 3],
    /// Gaussian curvature.
    pub k: Jet,
}

/// Build the surface jet from an already evaluated position jet.
pub fn surface_jet_from(point: [f64; 2], x: Vec3<Jet>, reference: Option<&Cx3>) -> Result<SurfaceJet> {
    let xu = x.try_map(|j| j.derivative(U))?;
    let xv = x.try_map(|j| j.derivative(V))?;
    let n = unit_normal(&xu, &xv, reference)?;
    let e = xu.dot(&xu);
    let f = xu.dot(&xv);
    let g = xv.dot(&xv);
    let xuu = xu.try_map(|j| j.derivative(U))?;
    let xuv = xu.try_map(|j| j.derivative(V))?;
    let xvv = xv.try_map(|j| j.derivative(V))?;
    let l = xuu.dot(&n);
    let m = xuv.dot(&n);
    let nn = xvv.dot(&n);
    let det = &(&e * &g) - &(&f * &f);
    let dinv = det.recip_j().map_err(|_| Error::DegenerateMetric)?;
    let k = &(&(&l * &nn) - &(&m * &m)) * &dinv;
    let ginv = [&g * &dinv, -(&f * &dinv), &e * &dinv];
    Ok(SurfaceJet { point, x, xu, xv, n, g: [e, f, g], h: [l, m, nn], ginv, k })
}

/// Surface jet at (u, v); `order` is the order of the position jet.
pub fn surface_jet(s: &ParametricSurface, u: f64, v: f64, order: u8) -> Result<SurfaceJet> {
    surface_jet_from([u, v], s.jet(u, v, order)?, None)
}

impl SurfaceJet {
    /// Derivative of the unit normal along a parameter direction.
    pub fn dn(&self, var: usize) -> Result<Vec3<Jet>> {
        self.n.try_map(|j| j.derivative(var))
    }

    /// Gaussian curvature from the metric alone (Brioschi's formula).
    pub fn k_brioschi(&self) -> Result<Jet> {
        let [e, f, g] = &self.g;
        let d = |j: &Jet, v: usize| j.derivative(v);
        let h = re(0.5);
        let (eu, ev, fu, fv, gu, gv) = (d(e, U)?, d(e, V)?, d(f, U)?, d(f, V)?, d(g, U)?, d(g, V)?);
        let evv = d(&ev, V)?;
        let fuv = d(&fu, V)?;
        let guu = d(&gu, U)?;
        let a11 = &(&(-&evv.scale_c(h)) + &fuv) - &guu.scale_c(h);
        let a = Mat3([
            [a11, eu.scale_c(h), &fu - &ev.scale_c(h)],
            [&fv - &gu.scale_c(h), e.clone(), f.clone()],
            [gv.scale_c(h), f.clone(), g.clone()],
        ]);
        let z = Jet::constant(re(0.0));
        let b = Mat3([
            [z, ev.scale_c(h), gu.scale_c(h)],
            [ev.scale_c(h), e.clone(), f.clone()],
            [gu.scale_c(h), f.clone(), g.clone()],
        ]);
        let w = &(e * g) - &(f * f);
        (&a.det() - &b.det()).div(&(&w * &w))
    }
}

/// Differences of the first fundamental forms (E, F, G) at a point.
pub fn isometry_residual(x0: &ParametricSurface, x: &ParametricSurface, u: f64, v: f64) -> Result<[C64; 3]> {
    let a = surface_jet(x0, u, v, 2)?;
    let b = surface_jet(x, u, v, 2)?;
    Ok([0, 1, 2].map(|i| b.g[i].value() - a.g[i].value()))
}

/// Rotation, translation and connection form of a rolling at a point.
#[derive(Clone, Debug)]
pub struct RollingFrame {
    pub point: [f64; 2],
    pub r: Mat3<Jet>,
    pub t: Vec3<Jet>,
    /// Connection form `α⁻¹(R⁻¹dR)` over (u, v).
    pub omega: Form1<Vec3<Jet>>,
    /// Seed surface jet.
    pub seed: SurfaceJet,
    /// Rolled surface jet.
    pub target: SurfaceJet,
}

fn frame_bits_equal(a: &Vec3<Jet>, b: &Vec3<Jet>) -> bool {
    a.0.iter().zip(&b.0).all(|(p, q)| p.spec().key() == q.spec().key() && p.coeffs() == q.coeffs())
}

/// Roll `x0` on the isometric surface `x` at (u, v); `order` is the order of
/// the position jets, so the connection form carries order `order − 2`.
pub fn roll(x0: &ParametricSurface, x: &ParametricSurface, u: f64, v: f64, order: u8) -> Result<RollingFrame> {
    let seed = surface_jet(x0, u, v, order)?;
    let mut target = surface_jet(x, u, v, order)?;
    roll_jets(seed, &mut target)
}

/// Rolling from precomputed surface jets; flips the target normal if needed
/// so that det R = +1.
pub fn roll_jets(seed: SurfaceJet, target: &mut SurfaceJet) -> Result<RollingFrame> {
    let (mut diff, mut scale) = (0.0, 0.0);
    for i in 0..3 {
        let (a, b) = (seed.g[i].value(), target.g[i].value());
        diff += (a - b).norm();
        scale += a.norm() + b.norm();
    }
    let worst = Residual::relative(diff, scale).rel;
    if worst > ISOMETRY_TOL {
        return Err(Error::NotIsometric(worst));
    }
    let same = frame_bits_equal(&seed.x, &target.x);
    let r = if same {
        Mat3::identity_like(&Jet::constant(re(0.0)))
    } else {
        let f0 = [seed.xu.clone(), seed.xv.clone(), seed.n.clone()];
        let f1 = [target.xu.clone(), target.xv.clone(), target.n.clone()];
        let mut r = rotation_from_frames(&f0, &f1)?;
        if r.det().value().re < 0.0 {
            target.n = -&target.n;
            let f1 = [target.xu.clone(), target.xv.clone(), target.n.clone()];
            r = rotation_from_frames(&f0, &f1)?;
        }
        r
    };
    let t = &target.x - &r.mul_vec(&seed.x);
    let rt = r.transpose();
    let mut c = Vec::with_capacity(2);
    for var in [U, V] {
        let dr = r.try_map(|j| j.derivative(var))?;
        c.push(alpha_inv(&rt.mul_mat(&dr))?);
    }
    Ok(RollingFrame { point: seed.point, r, t, omega: Form1 { space: Space::Uv, c }, seed, target: target.clone() })
}

impl RollingFrame {
    /// Rotation of the rolling with the other face, `R(I − 2N₀N₀ᵀ)`.
    pub fn other_face(&self) -> Mat3<Jet> {
        let n = &self.seed.n;
        let mut p = Mat3::identity_like(&Jet::constant(re(0.0)));
        for i in 0..3 {
            for j in 0..3 {
                p.0[i][j] = &p.0[i][j] - &(&n.0[i] * &n.0[j]).scale_c(re(2.0));
            }
        }
        self.r.mul_mat(&p)
    }

    /// Residual of `R^T R = I`.
    pub fn orthogonality_residual(&self) -> f64 {
        let rv = self.r.value();
        rv.transpose().mul_mat(&rv).sub_mat(&Mat3::identity_like(&re(0.0))).herm_norm()
    }

    /// Residual of `dt = −dR x₀`, worst over both directions.
    pub fn translation_residual(&self) -> Result<Residual> {
        let mut worst = Residual::zero();
        for var in [U, V] {
            let dt = self.t.try_map(|j| j.derivative(var))?;
            let drx = self.r.try_map(|j| j.derivative(var))?.mul_vec(&self.seed.x);
            let t = Terms::new().add(dt.value()).add(drx.value());
            worst = worst.max(t.residual());
        }
        Ok(worst)
    }

    /// Residual of `dx = R dx₀`, worst over both directions.
    pub fn differential_residual(&self) -> Residual {
        let mut worst = Residual::zero();
        for (a, b) in [(&self.target.xu, &self.seed.xu), (&self.target.xv, &self.seed.xv)] {
            let t = Terms::new().add(a.value()).sub(self.r.value().mul_vec(&b.value()));
            worst = worst.max(t.residual());
        }
        worst
    }
}

/// The three rolling conditions `dω + ½ω×∧ω = 0`, `ω×∧dx₀ = 0`, `(ω)^⊥ = 0`.
pub fn rolling_residuals(f: &RollingFrame, sj: &SurfaceJet) -> Result<ResidualReport> {
    let p = [f.point[0], f.point[1], 0.0];
    let (wu, wv) = (&f.omega.c[0], &f.omega.c[1]);
    let mut rep = ResidualReport::new();
    let d_wv_u = wv.try_map(|j| j.derivative(U))?.value();
    let d_wu_v = wu.try_map(|j| j.derivative(V))?.value();
    let quad = wu.value().cross(&wv.value());
    let flat = Terms::new().add(d_wv_u).sub(d_wu_v).add(quad);
    rep.push("eq2.flat", p, Residual::form(flat.sum().herm_norm(), flat.scale()), 1e-8);
    let tan = Terms::new().add(wu.value().cross(&sj.xv.value())).sub(wv.value().cross(&sj.xu.value()));
    rep.push("eq2.tangent", p, Residual::form(tan.sum().herm_norm(), tan.scale()), 1e-8);
    let n = sj.n.value();
    let mut perp = Residual::zero();
    for w in [wu, wv] {
        let wv = w.value();
        perp = perp.max(Residual::form(n.dot(&wv).norm(), wv.herm_norm()));
    }
    rep.push("eq2.perp", p, perp, 1e-8);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{make_isometric_pair, make_surface, PairKind, SurfaceParams};

    fn surf(name: &str) -> ParametricSurface {
        make_surface(name, &SurfaceParams::default()).unwrap()
    }

    #[test]
    fn sphere_curvature_is_one() {
        let s = surf("sphere");
        for (u, v) in [(0.5, 0.3), (1.2, 2.0), (2.5, -1.0)] {
            let sj = surface_jet(&s, u, v, 3).unwrap();
            assert!((sj.k.value() - 1.0).norm() < 1e-10);
            assert!((sj.n.norm_sq().value() - 1.0).norm() < 1e-12);
            assert!(sj.n.dot(&sj.xu).value().norm() < 1e-12);
        }
    }

    #[test]
    fn tractroid_curvature_is_minus_one() {
        let s = surf("tractroid");
        for (u, v) in [(0.5, 0.3), (0.9, 1.0), (1.5, 0.1)] {
            let sj = surface_jet(&s, u, v, 4).unwrap();
            assert!((sj.k.value() + 1.0).norm() < 1e-8);
            assert!((sj.k_brioschi().unwrap().value() + 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn plane_is_flat() {
        let sj = surface_jet(&surf("plane"), 0.3, 0.4, 3).unwrap();
        assert!(sj.h.iter().all(|j| j.max_abs() == 0.0));
        assert_eq!(sj.k.value(), re(0.0));
    }

    #[test]
    fn outside_domain_and_degenerate_metric() {
        let s = surf("sphere");
        assert!(matches!(surface_jet(&s, 50.0, 0.0, 2), Err(Error::OutsideDomain(..))));
        let pole = s.with_domain([[-1.0, 1.0], [-1.0, 1.0]]);
        assert_eq!(surface_jet(&pole, 0.0, 0.3, 2).unwrap_err(), Error::DegenerateMetric);
    }

    #[test]
    fn isometry_examples() {
        let (a, b) = make_isometric_pair(&PairKind::CatenoidHelicoid).unwrap();
        let r = isometry_residual(&a, &b, 0.4, 0.7).unwrap();
        assert!(r.iter().all(|z| z.norm() < 1e-10));
        let r = isometry_residual(&surf("sphere"), &surf("plane"), 0.4, 0.7).unwrap();
        assert!(r.iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn identity_rolling_is_exact() {
        let s = surf("tractroid");
        let f = roll(&s, &s, 0.8, 0.5, 4).unwrap();
        assert_eq!(f.r.value(), Mat3::identity_like(&re(0.0)));
        assert!(f.t.value().herm_norm() == 0.0);
        let rep = rolling_residuals(&f, &f.seed).unwrap();
        assert!(rep.records.iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn rigid_motion_has_constant_rotation() {
        let (a, b) = make_isometric_pair(&PairKind::rigid_default()).unwrap();
        let f = roll(&a, &b, 0.7, 0.4, 4).unwrap();
        assert!(f.omega.c.iter().all(|w| w.value().herm_norm() < 1e-12));
        assert!(f.orthogonality_residual() < 1e-12);
    }

    #[test]
    fn catenoid_helicoid_rolling() {
        let (a, b) = make_isometric_pair(&PairKind::CatenoidHelicoid).unwrap();
        for (u, v) in [(-0.5, 0.3), (0.2, 1.7), (0.8, -2.0)] {
            let f = roll(&a, &b, u, v, 4).unwrap();
            assert!(f.orthogonality_residual() < 1e-10);
            assert!((f.r.det().value() - 1.0).norm() < 1e-10);
            assert!(f.translation_residual().unwrap().rel < 1e-8);
            assert!(f.differential_residual().rel < 1e-10);
            let rep = rolling_residuals(&f, &f.seed).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
            let rp = f.other_face();
            assert!((rp.det().value() + 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn perturbed_rotation_is_not_flat() {
        let (a, b) = make_isometric_pair(&PairKind::CatenoidHelicoid).unwrap();
        let mut f = roll(&a, &b, 0.3, 0.2, 4).unwrap();
        let s = JetSpec::uv(3);
        let u = Jet::seed(&s, U, re(0.3)).unwrap();
        let tilt = crate::kernel::alpha(&Vec3::new(u.scale_c(re(0.0)), u.scale_c(re(0.3)), u.clone()));
        let q = Mat3::identity_like(&Jet::constant(re(0.0))).add_mat(&tilt);
        f.r = f.r.mul_mat(&q);
        let rt = f.r.inverse().unwrap();
        f.omega = Form1 {
            space: Space::Uv,
            c: [U, V]
                .iter()
                .map(|&k| {
                    let m = rt.mul_mat(&f.r.try_map(|j| j.derivative(k)).unwrap());
                    let h = re(0.5);
                    Vec3::new(
                        m.0[2][1].sub(&m.0[1][2]).scale(h),
                        m.0[0][2].sub(&m.0[2][0]).scale(h),
                        m.0[1][0].sub(&m.0[0][1]).scale(h),
                    )
                })
                .collect(),
        };
        let rep = rolling_residuals(&f, &f.seed).unwrap();
        assert!(!rep.all_pass());
    }
}
