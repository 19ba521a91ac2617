//! Contact-element distributions along a seed surface.
//!
//! A field gives the offset `V(u, v, w)` of the contact element from the seed
//! point and the normal component `𝐦`, so that the element normal is
//! `m = V×N₀ + 𝐦N₀`. Along the leaves the fiber coordinate obeys the leaf
//! 1-form `dw`; the residuals here test its integrability and the
//! consistency of the linear system for the connection of the leaves.
//!
//! All identities are pointwise relations among forms, so residuals use the
//! form normalization `|r| / (1 + Σ|terms|)`.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{Form1, Space};
use crate::jets::{Jet, JetSpec, U, V, W};
use crate::kernel::{re, Cx3, Mat3, Scalar, Vec3, C64};
use crate::report::{Magnitude, Residual, ResidualReport};
use crate::surface::{roll_jets, surface_jet_from, ParametricSurface, SurfaceJet};

/// Tolerance of the integrability and consistency checks.
pub const CONTACT_TOL: f64 = 1e-8;
/// Relative threshold for vanishing denominators.
pub const DENOM_EPS: f64 = 1e-10;

type VRule = dyn Fn(&SurfaceJet, &Jet) -> Result<Vec3<Jet>> + Send + Sync;
type MRule = dyn Fn(&SurfaceJet, &Jet, &Vec3<Jet>) -> Result<Jet> + Send + Sync;

/// Source of the normal component `𝐦`.
#[derive(Clone)]
pub enum MSource {
    /// Explicit evaluation rule.
    Rule(Arc<MRule>),
    /// Solved from the first integrability equation; the root closest to
    /// `reference` is taken.
    FromIntegrability { reference: C64 },
}

/// A 3-parameter distribution of contact elements along a seed surface.
#[derive(Clone)]
pub struct ContactField {
    pub name: String,
    pub seed: ParametricSurface,
    v_rule: Arc<VRule>,
    pub m: MSource,
}

impl std::fmt::Debug for ContactField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContactField").field("name", &self.name).field("seed", &self.seed).finish()
    }
}

impl ContactField {
    pub fn new(
        name: impl Into<String>,
        seed: ParametricSurface,
        v_rule: impl Fn(&SurfaceJet, &Jet) -> Result<Vec3<Jet>> + Send + Sync + 'static,
        m: MSource,
    ) -> Self {
        ContactField { name: name.into(), seed, v_rule: Arc::new(v_rule), m }
    }

    pub fn m_rule(rule: impl Fn(&SurfaceJet, &Jet, &Vec3<Jet>) -> Result<Jet> + Send + Sync + 'static) -> MSource {
        MSource::Rule(Arc::new(rule))
    }

    /// The same field with `V` replaced by `V + ε P` for a fixed smooth
    /// tangential perturbation `P`.
    pub fn perturbed(&self, eps: f64) -> ContactField {
        let inner = self.v_rule.clone();
        let rule = move |sj: &SurfaceJet, w: &Jet| -> Result<Vec3<Jet>> {
            let v = inner(sj, w)?;
            let (e1, e2) = tangent_frame(sj)?;
            let (u, vv) = param_jets(sj);
            let a = (&u + &(&vv * 2.0)).cos();
            let b = (w * 3.0).sin();
            Ok(&v + &(&(&e1 * &a) + &(&e2 * &b)).scale_c(re(eps)))
        };
        ContactField { name: format!("{}+perturb", self.name), seed: self.seed.clone(), v_rule: Arc::new(rule), m: self.m.clone() }
    }

    /// Offset field alone.
    pub fn eval_v(&self, sj: &SurfaceJet, w: &Jet) -> Result<Vec3<Jet>> {
        (self.v_rule)(sj, w)
    }
}

/// The (u, v) coordinate jets underlying a surface jet.
pub fn param_jets(sj: &SurfaceJet) -> (Jet, Jet) {
    let s = sj.x.0[0].spec().clone();
    let mk = |var: usize, val: f64| match Jet::seed(&s, var, re(val)) {
        Ok(j) => j,
        Err(_) => Jet::constant(re(val)),
    };
    (mk(U, sj.point[0]), mk(V, sj.point[1]))
}

/// Gram–Schmidt frame of `(∂ᵤx₀, ∂ᵥx₀)` with principal-branch normalization.
pub fn tangent_frame(sj: &SurfaceJet) -> Result<(Vec3<Jet>, Vec3<Jet>)> {
    let e1 = sj.xu.scale(&sj.g[0].sqrt_j()?.recip_j()?);
    let p = &sj.xv - &e1.scale(&sj.xv.dot(&e1));
    let e2 = p.scale(&p.norm_sq().sqrt_j()?.recip_j()?);
    Ok((e1, e2))
}

fn guard(d: &Jet, scale: f64, what: &str) -> Result<()> {
    let v = d.value().norm();
    if v <= DENOM_EPS * scale.max(1e-300) || v == 0.0 {
        Err(Error::Regularity(what.to_string()))
    } else {
        Ok(())
    }
}

/// Jets of a contact field at a point together with the seed data.
#[derive(Clone, Debug)]
pub struct ContactJet {
    pub point: [f64; 3],
    pub sj: SurfaceJet,
    pub w: Jet,
    pub v: Vec3<Jet>,
    /// `∂_w V`.
    pub vw: Vec3<Jet>,
    /// The normal component `𝐦`.
    pub mm: Jet,
    /// `m = V×N₀ + 𝐦N₀`.
    pub m: Vec3<Jet>,
    /// `𝒰 = ∂ᵤ(V + x₀)`, `𝒱 = ∂ᵥ(V + x₀)`.
    pub cu: Vec3<Jet>,
    pub cv: Vec3<Jet>,
    /// `∂ᵤN₀`, `∂ᵥN₀`.
    pub nu: Vec3<Jet>,
    pub nv: Vec3<Jet>,
}

/// Evaluate the offset and the seed data, leaving `𝐦` to the caller.
fn contact_parts(field: &ContactField, u: f64, v: f64, w: f64, order: u8) -> Result<(SurfaceJet, Jet, Vec3<Jet>)> {
    let sj = surface_jet_from([u, v], field.seed.jet(u, v, order + 1)?, None)?;
    let ws = JetSpec::uvw(order);
    let wj = Jet::seed(&ws, W, re(w))?;
    let vv = field.eval_v(&sj, &wj)?;
    Ok((sj, wj, vv))
}

/// `N₀·(∂_wV×V)`, the regularity denominator.
fn regularity(sj: &SurfaceJet, vw: &Vec3<Jet>, v: &Vec3<Jet>) -> Result<Jet> {
    let d = sj.n.dot(&vw.cross(v));
    guard(&d, vw.value().herm_norm() * v.value().herm_norm(), "N0.(dwV x V) = 0")?;
    Ok(d)
}

/// `𝐦²` from the first integrability equation.
fn m_squared(sj: &SurfaceJet, v: &Vec3<Jet>, vw: &Vec3<Jet>) -> Result<Jet> {
    let k = &sj.k;
    if k.value().norm() < 1e-10 {
        return Err(Error::Developable(k.value().norm()));
    }
    let cu = &v.try_map(|j| j.derivative(U))? + &sj.xu;
    let cv = &v.try_map(|j| j.derivative(V))? + &sj.xv;
    let num = &vw.cross(&cu).dot(&v.cross(&sj.xv)) - &vw.cross(&cv).dot(&v.cross(&sj.xu));
    let den = vw.cross(v).dot(&sj.xu.cross(&sj.xv));
    guard(&den, vw.value().herm_norm() * v.value().herm_norm(), "(dwV x V).(x0u x x0v) = 0")?;
    let ratio = num.div(&den.mul_j(k))?;
    Ok(&(-&ratio) - &v.norm_sq())
}

/// The two roots `±𝐦` of the first integrability equation at a point.
pub fn m_from_first_integrability(field: &ContactField, u: f64, v: f64, w: f64) -> Result<[C64; 2]> {
    let (sj, _, vv) = contact_parts(field, u, v, w, 1)?;
    let vw = vv.try_map(|j| j.derivative(W))?;
    regularity(&sj, &vw, &vv)?;
    let m2 = m_squared(&sj, &vv, &vw)?.value();
    if m2.norm() < 1e-14 {
        return Err(Error::MZero);
    }
    let r = m2.sqrt();
    Ok([r, -r])
}

impl ContactJet {
    /// Jets at (u, v, w): `V` and `𝐦` to total order `order`, the seed to
    /// order `order + 1`.
    pub fn new(field: &ContactField, u: f64, v: f64, w: f64, order: u8) -> Result<ContactJet> {
        let (sj, wj, vv) = contact_parts(field, u, v, w, order)?;
        let vw = vv.try_map(|j| j.derivative(W))?;
        regularity(&sj, &vw, &vv)?;
        let mm = match &field.m {
            MSource::Rule(rule) => rule(&sj, &wj, &vv)?,
            MSource::FromIntegrability { reference } => {
                let m2 = m_squared(&sj, &vv, &vw)?;
                if m2.value().norm() < 1e-14 {
                    return Err(Error::MZero);
                }
                let r = m2.sqrt_j()?;
                if (r.value() - reference).norm() <= (r.value() + reference).norm() {
                    r
                } else {
                    -r
                }
            }
        };
        if mm.value().norm() < 1e-14 {
            return Err(Error::MZero);
        }
        let m = &vv.cross(&sj.n) + &sj.n.scale(&mm);
        let cu = &vv.try_map(|j| j.derivative(U))? + &sj.xu;
        let cv = &vv.try_map(|j| j.derivative(V))? + &sj.xv;
        let nu = sj.dn(U)?;
        let nv = sj.dn(V)?;
        Ok(ContactJet { point: [u, v, w], sj, w: wj, v: vv, vw, mm, m, cu, cv, nu, nv })
    }

    /// `𝒰` or `𝒱` by direction index.
    pub fn c(&self, j: usize) -> &Vec3<Jet> {
        if j == 0 {
            &self.cu
        } else {
            &self.cv
        }
    }

    /// `∂ᵤN₀` or `∂ᵥN₀` by direction index.
    pub fn dn(&self, j: usize) -> &Vec3<Jet> {
        if j == 0 {
            &self.nu
        } else {
            &self.nv
        }
    }

    /// `∂ᵤx₀` or `∂ᵥx₀` by direction index.
    pub fn dx(&self, j: usize) -> &Vec3<Jet> {
        if j == 0 {
            &self.sj.xu
        } else {
            &self.sj.xv
        }
    }

    /// `∂ⱼV` for j ∈ {u, v, w}.
    pub fn dv(&self, j: usize) -> Result<Vec3<Jet>> {
        self.v.try_map(|x| x.derivative(j))
    }

    /// `N₀·(∂_wV×V)`.
    pub fn reg(&self) -> Jet {
        self.sj.n.dot(&self.vw.cross(&self.v))
    }

    /// `N₀·(𝒰×𝒱)`.
    pub fn n_uv(&self) -> Jet {
        self.sj.n.dot(&self.cu.cross(&self.cv))
    }

    /// `|m|² − |V|² − 𝐦²`, zero by construction.
    pub fn decomposition_defect(&self) -> f64 {
        (self.m.norm_sq().value() - self.v.norm_sq().value() - self.mm.value() * self.mm.value()).norm()
    }
}

fn point3(cj: &ContactJet) -> [f64; 3] {
    cj.point
}

/// Accumulator of a scalar identity: value and sum of term magnitudes.
#[derive(Default, Clone, Copy)]
struct Acc {
    sum: C64,
    scale: f64,
}

impl Acc {
    fn add(mut self, t: C64) -> Self {
        self.sum += t;
        self.scale += t.norm();
        self
    }
    fn sub(self, t: C64) -> Self {
        self.add(-t)
    }
    fn residual(&self) -> Residual {
        Residual::form(self.sum.norm(), self.scale)
    }
}

/// The leaf 1-form over (u, v):
/// `dw = {N₀·[V×d(V+x₀)] + 𝐦 V·(ω×N₀ + dN₀)} / N₀·(∂_wV×V)`.
pub fn dw_form(cj: &ContactJet, omega: &Form1<Vec3<Jet>>) -> Result<Form1<Jet>> {
    let d = cj.reg();
    guard(&d, cj.vw.value().herm_norm() * cj.v.value().herm_norm(), "N0.(dwV x V) = 0")?;
    let dinv = d.recip_j()?;
    let n = &cj.sj.n;
    let c = (0..2)
        .map(|j| {
            let a = n.dot(&cj.v.cross(cj.c(j)));
            let b = cj.v.dot(&(&omega.c[j].cross(n) + cj.dn(j)));
            &(&a + &(&cj.mm * &b)) * &dinv
        })
        .collect();
    Ok(Form1 { space: Space::Uv, c })
}

/// The leaf condition `m·(ω×V + d(V+x₀) + ∂_wV dw)` per direction, with the
/// worst form-normalized residual.
pub fn leaf_condition_residual(cj: &ContactJet, omega: &Form1<Vec3<Jet>>, dw: &Form1<Jet>) -> (Form1<C64>, Residual) {
    let mut worst = Residual::zero();
    let m = cj.m.value();
    let c = (0..2)
        .map(|j| {
            let acc = Acc::default()
                .add(m.dot(&omega.c[j].value().cross(&cj.v.value())))
                .add(m.dot(&cj.c(j).value()))
                .add(m.dot(&cj.vw.value()) * dw.c[j].value());
            worst = worst.max(acc.residual());
            acc.sum
        })
        .collect();
    (Form1 { space: Space::Uv, c }, worst)
}

/// Pieces shared by the integrability residuals.
struct Integrability {
    /// `[∂_wV×d(V+x₀)]ᵀ∧(V×dx₀)` and its du∧dv terms.
    t: Jet,
    /// `(∂_wV×V)·(∂ᵤx₀×∂ᵥx₀)`, half the 2-form denominator.
    den: Jet,
    /// `[∂_wV×dV]ᵀ∧(∂_wV×dx₀)`.
    s: Jet,
    /// `N₀·(∂_wV×V)`.
    d: Jet,
}

fn integrability_parts(cj: &ContactJet) -> Result<Integrability> {
    let (vw, v) = (&cj.vw, &cj.v);
    let (xu, xv) = (&cj.sj.xu, &cj.sj.xv);
    let vu = cj.dv(U)?;
    let vv = cj.dv(V)?;
    let t = &vw.cross(&cj.cu).dot(&v.cross(xv)) - &vw.cross(&cj.cv).dot(&v.cross(xu));
    let s = &vw.cross(&vu).dot(&vw.cross(xv)) - &vw.cross(&vv).dot(&vw.cross(xu));
    let den = vw.cross(v).dot(&xu.cross(xv));
    Ok(Integrability { t, den, s, d: cj.reg() })
}

/// Residuals of the integrability equations of the leaf 1-form:
/// `eq4.line1`, `eq4.line2`, `eq5`, `eq6.line1`, `eq6.line2`.
pub fn integrability_residuals(cj: &ContactJet) -> Result<ResidualReport> {
    let p = point3(cj);
    let mut rep = ResidualReport::new();
    let ip = integrability_parts(cj)?;
    let k = &cj.sj.k;
    let n = &cj.sj.n;
    let mm = &cj.mm;
    let mw = mm.derivative(W)?;

    // First line: T/den + (𝐦² + |V|²)K.
    let l1 = Acc::default()
        .add(ip.t.value() / ip.den.value())
        .add(mm.value() * mm.value() * k.value())
        .add(cj.v.norm_sq().value() * k.value());
    rep.push("eq4.line1", p, l1.residual(), CONTACT_TOL);

    // Second line: d𝐦 + ∂_w𝐦 A − 𝐦 B per direction.
    let dinv = ip.d.recip_j()?;
    let a: Vec<Jet> = (0..2).map(|j| &n.dot(&cj.v.cross(cj.c(j))) * &dinv).collect();
    let b: Vec<Jet> = [U, V]
        .iter()
        .map(|&j| Ok(&n.dot(&cj.vw.cross(&cj.dv(j)?)) * &dinv))
        .collect::<Result<_>>()?;
    let mut l2 = Residual::zero();
    for j in 0..2 {
        let acc = Acc::default()
            .add(mm.derivative(j)?.value())
            .add(mw.value() * a[j].value())
            .sub(mm.value() * b[j].value());
        l2 = l2.max(acc.residual());
    }
    rep.push("eq4.line2", p, l2, CONTACT_TOL);

    // Eq. (5): S/den + (𝐦∂_w𝐦 + V·∂_wV)K.
    let e5 = Acc::default()
        .add(ip.s.value() / ip.den.value())
        .add(mm.value() * mw.value() * k.value())
        .add(cj.v.dot(&cj.vw).value() * k.value());
    rep.push("eq5", p, e5.residual(), CONTACT_TOL);

    // First display of (6): ∂_w(N₀·[∂_wV×d(V+x₀)]/D) ∧ N₀·(V×dx₀) − B ∧ N₀·(∂_wV×dx₀).
    let f: Vec<Jet> = (0..2).map(|j| &n.dot(&cj.vw.cross(cj.c(j))) * &dinv).collect();
    let fw: Vec<C64> = f.iter().map(|x| x.derivative(W).map(|y| y.value())).collect::<Result<_>>()?;
    let g: Vec<C64> = (0..2).map(|j| n.dot(&cj.v.cross(cj.dx(j))).value()).collect();
    let h: Vec<C64> = (0..2).map(|j| n.dot(&cj.vw.cross(cj.dx(j))).value()).collect();
    let bv: Vec<C64> = b.iter().map(|x| x.value()).collect();
    let e61 = Acc::default()
        .add(fw[0] * g[1])
        .sub(fw[1] * g[0])
        .sub(bv[0] * h[1])
        .add(bv[1] * h[0]);
    rep.push("eq6.line1", p, e61.residual(), CONTACT_TOL);

    // Second display of (6): ½dX + Y A − X B with X = T/(K den) + |V|²,
    // Y = S/(K den) + V·∂_wV.
    let kden = k.mul_j(&ip.den);
    let x = &ip.t.div(&kden)? + &cj.v.norm_sq();
    let y = &ip.s.div(&kden)? + &cj.v.dot(&cj.vw);
    let mut e62 = Residual::zero();
    for j in 0..2 {
        let acc = Acc::default()
            .add(x.derivative(j)?.value() * 0.5)
            .add(y.value() * a[j].value())
            .sub(x.value() * b[j].value());
        e62 = e62.max(acc.residual());
    }
    rep.push("eq6.line2", p, e62, CONTACT_TOL);
    Ok(rep)
}

/// How the two vector 1-forms of the consistency condition are contracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contraction {
    /// `A ∧ B` with the dot pairing, a du∧dv coefficient.
    Wedge,
    /// The symmetric product, three coefficients (uu, uv, vv).
    Symmetric,
}

/// The contraction of `(I − N₀mᵀ/𝐦)d(V+x₀)` with
/// `dP ∂_wV − ∂_wP d(V+x₀) + 2N₀·[∂_wV×d(V+x₀)] (dP∧d(V+x₀)) / N₀·[d(V+x₀)×∧d(V+x₀)]`,
/// `P = N₀mᵀ/𝐦`. Returns the worst coefficient residual.
pub fn consistency_with(cj: &ContactJet, how: Contraction) -> Result<Residual> {
    let n = &cj.sj.n;
    let nuv = cj.n_uv();
    let scale = cj.cu.value().herm_norm() * cj.cv.value().herm_norm();
    if nuv.value().norm() <= 1e-10 * scale {
        return Err(Error::Degenerate2Form);
    }
    let minv = cj.mm.recip_j()?;
    let pm: Mat3<Jet> = Mat3(std::array::from_fn(|i| std::array::from_fn(|j| &(&n.0[i] * &cj.m.0[j]) * &minv)));
    let dp = |k: usize| pm.try_map(|x| x.derivative(k));
    let (pu, pv, pw) = (dp(U)?, dp(V)?, dp(W)?);
    let dpv = |k: usize| if k == 0 { &pu } else { &pv };
    let nuv_v = nuv.value();
    let mut a: Vec<Cx3> = Vec::new();
    let mut b: Vec<[Cx3; 3]> = Vec::new();
    let mut bscale: Vec<f64> = Vec::new();
    let wedge_term = &pu.mul_vec(&cj.cv) - &pv.mul_vec(&cj.cu);
    for j in 0..2 {
        let cjv = cj.c(j);
        let ajv = cjv - &n.scale(&(&cj.m.dot(cjv) * &minv));
        a.push(ajv.value());
        let t1 = dpv(j).mul_vec(&cj.vw).value();
        let t2 = pw.mul_vec(cjv).value();
        let coef = n.dot(&cj.vw.cross(cjv)).value() / nuv_v;
        let t3 = wedge_term.value().scale_c(coef);
        bscale.push(t1.herm_norm() + t2.herm_norm() + t3.herm_norm());
        b.push([t1, t2.scale_c(re(-1.0)), t3]);
    }
    let pair = |i: usize, j: usize| -> Acc {
        b[j].iter().fold(Acc::default(), |acc, t| acc.add(a[i].dot(t)))
    };
    let r = match how {
        Contraction::Wedge => {
            let (x, y) = (pair(0, 1), pair(1, 0));
            Residual::form((x.sum - y.sum).norm(), x.scale + y.scale)
        }
        Contraction::Symmetric => {
            let mut worst = Residual::zero();
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                let (x, y) = (pair(i, j), pair(j, i));
                worst = worst.max(Residual::form((x.sum + y.sum).norm() * 0.5, 0.5 * (x.scale + y.scale)));
            }
            worst
        }
    };
    let _ = bscale;
    Ok(r)
}

/// The consistency residual with the symmetric contraction.
pub fn consistency_residual(cj: &ContactJet) -> Result<Residual> {
    consistency_with(cj, Contraction::Symmetric)
}

/// Full contact suite at a point: the integrability residuals, the leaf
/// condition with `dw` substituted (identity rolling and, if given, a
/// rolling on `target`), and the consistency condition.
pub fn contact_suite(cj: &ContactJet, target: Option<&ParametricSurface>) -> Result<ResidualReport> {
    let mut rep = integrability_residuals(cj)?;
    let zero = Form1 { space: Space::Uv, c: vec![Vec3::new(Jet::constant(re(0.0)), Jet::constant(re(0.0)), Jet::constant(re(0.0))); 2] };
    let dw = dw_form(cj, &zero)?;
    let (_, r) = leaf_condition_residual(cj, &zero, &dw);
    let mut worst = r;
    if let Some(x) = target {
        let order = cj.sj.x.0[0].spec().max_degree().min(4) as u8;
        let seed = surface_jet_from(cj.sj.point, cj.sj.x.clone(), None)?;
        let mut tj = crate::surface::surface_jet(x, cj.point[0], cj.point[1], order)?;
        let f = roll_jets(seed, &mut tj)?;
        let dw = dw_form(cj, &f.omega)?;
        let (_, r) = leaf_condition_residual(cj, &f.omega, &dw);
        worst = worst.max(r);
    }
    rep.push("eq7", cj.point, worst, CONTACT_TOL);
    rep.push("cons", cj.point, consistency_residual(cj)?, CONTACT_TOL);
    Ok(rep)
}

/// A rectangular parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub n: [usize; 2],
}

impl Grid2 {
    pub fn us(&self) -> Vec<f64> {
        linspace(self.u, self.n[0])
    }
    pub fn vs(&self) -> Vec<f64> {
        linspace(self.v, self.n[1])
    }
    pub fn steps(&self) -> [f64; 2] {
        [(self.u[1] - self.u[0]) / (self.n[0] - 1) as f64, (self.v[1] - self.v[0]) / (self.n[1] - 1) as f64]
    }
}

/// Default leaf grid on the tractroid: a regular patch away from the
/// cuspidal edges of the transformed surface.
pub const DEFAULT_LEAF_GRID: Grid2 = Grid2 { u: [1.5, 2.1], v: [0.0, 0.6], n: [33, 33] };

/// Default starting fiber coordinate of a leaf.
pub const DEFAULT_W0: f64 = 1.0;

/// `n` equally spaced points covering `[a, b]`.
pub fn linspace(r: [f64; 2], n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![r[0]];
    }
    (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
}

/// A leaf computed on a grid.
#[derive(Clone, Debug)]
pub struct LeafMesh {
    pub grid: Grid2,
    /// Fiber coordinate `w[i][j]` at `(u_i, v_j)`.
    pub w: Vec<Vec<f64>>,
    /// Leaf points `x + R V`.
    pub points: Vec<Vec<Cx3>>,
    /// Largest difference between the two integration path orders.
    pub path_independence: f64,
    /// First failure met along the way, if any.
    pub error: Option<Error>,
}

/// Slope of the fiber coordinate along direction `dir` at (u, v, w).
fn slope(field: &ContactField, target: Option<&ParametricSurface>, u: f64, v: f64, w: f64, dir: usize) -> Result<f64> {
    let cj = ContactJet::new(field, u, v, w, 1)?;
    let omega = match target {
        None => Form1 { space: Space::Uv, c: vec![Vec3::new(Jet::constant(re(0.0)), Jet::constant(re(0.0)), Jet::constant(re(0.0))); 2] },
        Some(x) => {
            let seed = surface_jet_from([u, v], field.seed.jet(u, v, 2)?, None)?;
            let mut tj = crate::surface::surface_jet(x, u, v, 2)?;
            roll_jets(seed, &mut tj)?.omega
        }
    };
    let dw = dw_form(&cj, &omega)?;
    Ok(dw.c[dir].value().re)
}

fn rk4_step(field: &ContactField, target: Option<&ParametricSurface>, p: [f64; 2], w: f64, h: f64, dir: usize) -> Result<f64> {
    let at = |t: f64, w: f64| {
        let mut q = p;
        q[dir] += t;
        slope(field, target, q[0], q[1], w, dir)
    };
    let k1 = at(0.0, w)?;
    let k2 = at(h / 2.0, w + h / 2.0 * k1)?;
    let k3 = at(h / 2.0, w + h / 2.0 * k2)?;
    let k4 = at(h, w + h * k3)?;
    Ok(w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrate the fiber coordinate over the grid from `w0` at the grid
/// corner `(u₀, v₀)`; `first_dir` is the direction swept first.
fn integrate_order(field: &ContactField, target: Option<&ParametricSurface>, grid: &Grid2, w0: f64, first_dir: usize) -> (Vec<Vec<f64>>, Option<Error>) {
    let (us, vs) = (grid.us(), grid.vs());
    let h = grid.steps();
    let mut w = vec![vec![f64::NAN; vs.len()]; us.len()];
    w[0][0] = w0;
    let mut err = None;
    let second = 1 - first_dir;
    let (n_first, n_second) = if first_dir == 0 { (us.len(), vs.len()) } else { (vs.len(), us.len()) };
    let idx = |a: usize, b: usize| if first_dir == 0 { (a, b) } else { (b, a) };
    for a in 1..n_first {
        let (pi, pj) = idx(a - 1, 0);
        let (ci, cj) = idx(a, 0);
        match rk4_step(field, target, [us[pi], vs[pj]], w[pi][pj], h[first_dir], first_dir) {
            Ok(x) => w[ci][cj] = x,
            Err(e) => {
                err.get_or_insert(e);
                return (w, err);
            }
        }
    }
    for a in 0..n_first {
        for b in 1..n_second {
            let (pi, pj) = idx(a, b - 1);
            let (ci, cj) = idx(a, b);
            match rk4_step(field, target, [us[pi], vs[pj]], w[pi][pj], h[second], second) {
                Ok(x) => w[ci][cj] = x,
                Err(e) => {
                    err.get_or_insert(e);
                    break;
                }
            }
        }
    }
    (w, err)
}

/// Integrate a leaf of the distribution (rolled on `target`, or unrolled
/// when `target` is `None`) over `grid` starting from `w0` at the grid
/// corner. The fiber coordinate is integrated by RK4 with step equal to the
/// grid spacing, along u first and along v first; the largest difference of
/// the two is the path-independence statistic.
pub fn leaf_integrate(field: &ContactField, target: Option<&ParametricSurface>, w0: f64, grid: &Grid2) -> LeafMesh {
    let (wa, ea) = integrate_order(field, target, grid, w0, 1);
    let (wb, eb) = integrate_order(field, target, grid, w0, 0);
    let mut pi = 0.0f64;
    for (ra, rb) in wa.iter().zip(&wb) {
        for (a, b) in ra.iter().zip(rb) {
            if a.is_finite() && b.is_finite() {
                pi = pi.max((a - b).abs());
            }
        }
    }
    let mut error = ea.or(eb);
    let (us, vs) = (grid.us(), grid.vs());
    let mut points = vec![vec![Cx3::from_re(f64::NAN, f64::NAN, f64::NAN); vs.len()]; us.len()];
    for (i, &u) in us.iter().enumerate() {
        for (j, &v) in vs.iter().enumerate() {
            let w = wa[i][j];
            if !w.is_finite() {
                continue;
            }
            match leaf_point(field, target, u, v, w) {
                Ok(p) => points[i][j] = p,
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
        }
    }
    LeafMesh { grid: grid.clone(), w: wa, points, path_independence: pi, error }
}

/// The leaf point `x + R V` over (u, v, w).
pub fn leaf_point(field: &ContactField, target: Option<&ParametricSurface>, u: f64, v: f64, w: f64) -> Result<Cx3> {
    let sj = surface_jet_from([u, v], field.seed.jet(u, v, 2)?, None)?;
    let wj = Jet::constant(re(w));
    let vv = field.eval_v(&sj, &wj)?.value();
    match target {
        None => Ok(&sj.x.value() + &vv),
        Some(x) => {
            let mut tj = crate::surface::surface_jet(x, u, v, 2)?;
            let f = roll_jets(sj, &mut tj)?;
            Ok(&tj.x.value() + &f.r.value().mul_vec(&vv))
        }
    }
}

impl LeafMesh {
    /// Gaussian curvature of the mesh by fourth-order finite differences at
    /// points at least two nodes from the boundary.
    pub fn curvature(&self) -> Vec<(usize, usize, C64)> {
        let [hu, hv] = self.grid.steps();
        let p = &self.points;
        let (nu, nv) = (p.len(), p.first().map_or(0, |r| r.len()));
        let mut out = Vec::new();
        for i in 2..nu.saturating_sub(2) {
            for j in 2..nv.saturating_sub(2) {
                let at = |a: isize, b: isize| p[(i as isize + a) as usize][(j as isize + b) as usize].clone();
                let d1 = |f: &dyn Fn(isize) -> Cx3, h: f64| {
                    let t = &(&f(-2) - &f(2)) + &(&f(1) - &f(-1)).scale_c(re(8.0));
                    t.scale_c(re(1.0 / (12.0 * h)))
                };
                let d2 = |f: &dyn Fn(isize) -> Cx3, h: f64| {
                    let t = &(&(&(-&f(2)) - &f(-2)) + &(&f(1) + &f(-1)).scale_c(re(16.0))) - &f(0).scale_c(re(30.0));
                    t.scale_c(re(1.0 / (12.0 * h * h)))
                };
                let xu = d1(&|a| at(a, 0), hu);
                let xv = d1(&|b| at(0, b), hv);
                let xuu = d2(&|a| at(a, 0), hu);
                let xvv = d2(&|b| at(0, b), hv);
                let xuv = d1(&|a| d1(&|b| at(a, b), hv), hu);
                let cr = xu.cross(&xv);
                let n = cr.scale_c(cr.norm_sq().sqrt().inv());
                let (e, f, g) = (xu.dot(&xu), xu.dot(&xv), xv.dot(&xv));
                let (l, m, nn) = (xuu.dot(&n), xuv.dot(&n), xvv.dot(&n));
                out.push((i, j, (l * nn - m * m) / (e * g - f * f)));
            }
        }
        out
    }

    /// Write the mesh as CSV with columns u,v,w,Re(x),Im(x),Re(y),Im(y),Re(z),Im(z).
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "u,v,w,re_x,im_x,re_y,im_y,re_z,im_z")?;
        let (us, vs) = (self.grid.us(), self.grid.vs());
        for (i, u) in us.iter().enumerate() {
            for (j, v) in vs.iter().enumerate() {
                let p = &self.points[i][j];
                writeln!(
                    out,
                    "{u},{v},{},{},{},{},{},{},{}",
                    self.w[i][j], p.0[0].re, p.0[0].im, p.0[1].re, p.0[1].im, p.0[2].re, p.0[2].im
                )?;
            }
        }
        Ok(())
    }
}

impl Magnitude for Form1<C64> {
    fn magnitude(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{backlund_field, make_surface, random_tangent_field, BacklundSeed};

    fn tractroid() -> ContactField {
        backlund_field(BacklundSeed::Tractroid, re(0.6)).unwrap()
    }

    fn sphere() -> ContactField {
        backlund_field(BacklundSeed::Sphere, C64::new(0.0, 0.5)).unwrap()
    }

    fn random() -> ContactField {
        random_tangent_field(make_surface("sphere", &Default::default()).unwrap(), 7)
    }

    #[test]
    fn backlund_fields_pass_the_contact_suite() {
        for (f, p) in [(tractroid(), [0.8, 1.1, 0.4]), (sphere(), [1.0, 0.3, 0.7])] {
            let cj = ContactJet::new(&f, p[0], p[1], p[2], 2).unwrap();
            let rep = contact_suite(&cj, None).unwrap();
            let ids: Vec<_> = rep.records.iter().map(|r| r.check_id.as_str()).collect();
            assert_eq!(ids, ["eq4.line1", "eq4.line2", "eq5", "eq6.line1", "eq6.line2", "eq7", "cons"]);
            assert!(rep.all_pass(), "{rep:?}");
        }
    }

    #[test]
    fn backlund_field_closed_forms() {
        // 𝐦 = cos σ, |V|² = sin² σ, N₀·(∂_wV×V) = −sin² σ on the tractroid
        let s = 0.6f64.sin();
        let cj = ContactJet::new(&tractroid(), 0.8, 1.1, 0.4, 1).unwrap();
        assert!((cj.mm.value() - 0.6f64.cos()).norm() < 1e-15);
        assert!((cj.v.norm_sq().value() - s * s).norm() < 1e-14);
        assert!((cj.reg().value() + s * s).norm() < 1e-14);
        assert!(cj.sj.n.dot(&cj.v).value().norm() < 1e-12);
        assert!(cj.decomposition_defect() < 1e-14);
        let [a, b] = m_from_first_integrability(&tractroid(), 0.8, 1.1, 0.4).unwrap();
        assert!((a.norm() - 0.6f64.cos()).abs() < 1e-12 && (a + b).norm() == 0.0);
    }

    #[test]
    fn first_line_only_data_violates_the_second_line() {
        let cj = ContactJet::new(&random(), 0.9, 0.4, 0.3, 2).unwrap();
        let rep = integrability_residuals(&cj).unwrap();
        assert!(rep.get("eq4.line1").unwrap().pass);
        assert!(!rep.get("eq4.line2").unwrap().pass);
    }

    #[test]
    fn perturbation_is_detected() {
        let f = tractroid().perturbed(1e-2);
        let cj = ContactJet::new(&f, 0.8, 1.1, 0.4, 2).unwrap();
        assert!(contact_suite(&cj, None).unwrap().max_rel() > 1e-4);
    }

    #[test]
    fn consistency_needs_the_symmetric_contraction() {
        let cj = ContactJet::new(&tractroid(), 0.8, 1.1, 0.4, 2).unwrap();
        assert!(consistency_with(&cj, Contraction::Symmetric).unwrap().rel < 1e-12);
        assert!(consistency_with(&cj, Contraction::Wedge).unwrap().rel > 1e-3);
    }

    #[test]
    fn leaf_condition_holds_on_the_leaf_form() {
        let cj = ContactJet::new(&tractroid(), 0.8, 1.1, 0.4, 1).unwrap();
        let zero = Jet::constant(re(0.0));
        let omega = Form1 { space: Space::Uv, c: vec![Vec3::new(zero.clone(), zero.clone(), zero); 2] };
        let dw = dw_form(&cj, &omega).unwrap();
        assert!(leaf_condition_residual(&cj, &omega, &dw).1.rel < 1e-14);
    }

    #[test]
    fn degenerate_offset_is_refused() {
        let s = make_surface("sphere", &Default::default()).unwrap();
        let f = ContactField::new("flat", s, |sj, _| Ok(sj.xu.clone()), ContactField::m_rule(|_, _, _| Ok(Jet::constant(re(1.0)))));
        assert!(matches!(ContactJet::new(&f, 1.0, 0.2, 0.3, 1), Err(Error::Regularity(_))));
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(linspace([0.0, 1.0], 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace([2.0, 3.0], 1), vec![2.0]);
        let g = Grid2 { u: [0.0, 1.0], v: [0.0, 2.0], n: [3, 5] };
        assert_eq!(g.steps(), [0.5, 0.5]);
    }

    #[test]
    fn small_leaf_is_path_independent_with_csv() {
        let g = Grid2 { u: [1.5, 1.7], v: [0.0, 0.2], n: [5, 5] };
        let mesh = leaf_integrate(&tractroid(), None, DEFAULT_W0, &g);
        assert!(mesh.error.is_none());
        assert!(mesh.path_independence < 1e-6);
        assert_eq!(mesh.curvature().len(), 1);
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("u,v,w,re_x,im_x,re_y,im_y,re_z,im_z\n"));
    }
}
