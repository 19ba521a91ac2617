//! The remaining four equations after eliminating `c₄`, written as
//!
//! ```text
//! ∂ᵤc₁ = −∂ᵥc₂ + D₁,            ∂ᵥc₁ = D₂ + ∂ᵤc₂D₃ + ∂ᵥc₂D₄,
//! ∂_wc₁ = D₅ + ∂ᵤc₂D₆ + ∂ᵥc₂D₇,  ∂_wc₂ = D₈ + ∂ᵤc₂𝒱̃ − ∂ᵥc₂𝒰̃,
//! ```
//!
//! their three compatibility conditions, linear in the second derivatives
//! `(∂ᵤ²c₂, ∂ᵤᵥc₂, ∂ᵥ²c₂)`, and the conditions `G₁, G₂` and `R3` built on
//! the solution `F` of that linear system.
//!
//! All `D`'s are jets over `(u, v, w)` and the auxiliary block
//! `(c₁, c₂, p, q)`, `p = ∂ᵤc₂`, `q = ∂ᵥc₂`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::poly::CScalars;
use super::{CorrFrame, Tracked, M0, M1, M124, M2, M4};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpec, C1, C2, P, Q, U, V, W};
use crate::kernel::{re, CMat3, Cx3, Mat3, Vec3, C64};
use crate::report::{Residual, ResidualReport};

/// Tolerance of the second-derivative layer.
pub const CASCADE_TOL: f64 = 1e-5;
/// Tolerance of the determinant leading coefficient.
pub const DET_TOL: f64 = 1e-6;
/// Relative determinant below which the second-derivative system counts
/// as singular.
pub const F_SINGULAR: f64 = 1e-9;

/// Spec of the auxiliary block with total order `oc`.
pub fn c_block_spec(oc: u8) -> Arc<JetSpec> {
    JetSpec::new(&[(C1, oc), (C2, oc), (P, oc), (Q, oc)], &[(&[C1, C2, P, Q], oc)])
}

/// `D₁ … D₈` at a point, with `𝒰̃, 𝒱̃` and the eliminated `c₄`.
#[derive(Clone, Debug)]
pub struct DJets {
    pub point: [f64; 3],
    pub d: [Jet; 8],
    pub tu: Jet,
    pub tv: Jet,
    pub c4: Jet,
}

impl DJets {
    /// `D_k`, 1-based as in the display.
    pub fn get(&self, k: usize) -> &Jet {
        &self.d[k - 1]
    }
}

/// Evaluate the `D`'s at `(c₁, c₂)`, carrying `oc` orders of the auxiliary
/// block. The frame needs C-vectors with two orders in `(u, v, w)` for the
/// compatibility conditions (contact jets of order 4), three for `G`.
pub fn d_eval(f: &CorrFrame, c1: C64, c2: C64, oc: u8) -> Result<DJets> {
    let spec = c_block_spec(oc);
    let x1 = Jet::seed(&spec, C1, c1)?;
    let x2 = Jet::seed(&spec, C2, c2)?;
    let c = f.cvec()?;
    let mc: [Jet; 5] = std::array::from_fn(|j| f.mdot(&c[0][j]));
    let ninv = f.n.recip_j()?;
    let (ux, vx) = (f.ux_n(), f.vx_n());
    let proj = |y: &Vec3<Jet>, i: usize| -> [Jet; 5] { std::array::from_fn(|j| &y.dot(&c[i][j]) * &ninv) };
    let (u1, v1, u2, v2) = (proj(&ux, 0), proj(&vx, 0), proj(&ux, 1), proj(&vx, 1));
    let nu = &(&(&mc[M0] + &(&x1 * &mc[M1])) + &(&x2 * &mc[M2])) + &(&(&x1 * &x1) * &mc[M124]);
    let mu = &mc[M4] + &(&x2 * &mc[M124]);
    if mu.value().norm() <= 1e-12 * (mc[M4].value().norm() + c2.norm() * mc[M124].value().norm()) {
        return Err(Error::C4Pole(mu.value().norm()));
    }
    let c4 = -(&nu * &mu.recip_j()?);
    let q = &(&x1 * &x1) + &(&x2 * &c4);
    let comb = |r: &[Jet; 5]| &(&(&(&r[M0] + &(&x1 * &r[M1])) + &(&x2 * &r[M2])) + &(&c4 * &r[M4])) + &(&q * &r[M124]);
    let (e1u, e1v, e2u, e2v) = (comb(&u1), comb(&v1), comb(&u2), comb(&v2));
    let c4u = c4.derivative(U)?;
    let c41 = c4.derivative(C1)?;
    let c42 = c4.derivative(C2)?;
    let (tu, tv) = (f.tu.clone(), f.tv.clone());
    let d1 = -&e1u;
    let d2 = &(&c4u + &(&c41 * &d1)) + &e1v;
    let d3 = c42;
    let d4 = -&c41;
    let d5 = &(&(&d1 * &tv) - &(&tu * &(&c4u + &(&c41 * &d1)))) + &e2v;
    let d6 = -(&tu * &d3);
    let d7 = -(&tv + &(&tu * &d4));
    let d8 = &(&d1 * &tu) - &e2u;
    Ok(DJets { point: f.point, d: [d1, d2, d3, d4, d5, d6, d7, d8], tu, tv, c4 })
}

/// A sum of jets with the magnitude of each term.
struct Acc {
    sum: Option<Jet>,
    scale: f64,
}

impl Acc {
    fn new() -> Self {
        Acc { sum: None, scale: 0.0 }
    }
    fn add(&mut self, t: Jet) {
        self.scale += t.value().norm();
        self.sum = Some(match self.sum.take() {
            None => t,
            Some(s) => &s + &t,
        });
    }
    fn sub(&mut self, t: Jet) {
        self.add(-t);
    }
    fn done(self) -> (Jet, f64) {
        (self.sum.unwrap_or_else(|| Jet::constant(re(0.0))), self.scale)
    }
}

/// Partial derivatives of the `D`'s and of `𝒰̃, 𝒱̃`.
struct Partials {
    /// `pd[k][x]` for `D_{k+1}`, x ∈ (u, v, w, c₁, c₂).
    pd: Vec<[Jet; 5]>,
    tu_d: [Jet; 2],
    tv_d: [Jet; 2],
}

const XS: [usize; 5] = [U, V, W, C1, C2];

fn partials(dj: &DJets) -> Result<Partials> {
    let pd = dj
        .d
        .iter()
        .map(|d| -> Result<[Jet; 5]> {
            let v: Vec<Jet> = XS.iter().map(|&x| d.derivative(x)).collect::<Result<_>>()?;
            Ok([v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone(), v[4].clone()])
        })
        .collect::<Result<_>>()?;
    Ok(Partials {
        pd,
        tu_d: [dj.tu.derivative(U)?, dj.tu.derivative(V)?],
        tv_d: [dj.tv.derivative(U)?, dj.tv.derivative(V)?],
    })
}

/// The three compatibility conditions for given `p, q` and second
/// derivatives `x = (∂ᵤ²c₂, ∂ᵤᵥc₂, ∂ᵥ²c₂)`, each with its term scale.
fn compat_with(dj: &DJets, pt: &Partials, p: &Jet, q: &Jet, x: [&Jet; 3]) -> [(Jet, f64); 3] {
    let d = |k: usize| dj.get(k);
    // ∂_x D_k with x ∈ {u, v, w, c1, c2} = {0, 1, 2, 3, 4}
    let pd = |k: usize, x: usize| &pt.pd[k - 1][x];
    let (tu, tv) = (&dj.tu, &dj.tv);
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    // ∂ᵤc₁, ∂ᵥc₁, ∂_wc₁, ∂_wc₂
    let c1u = d(1) - q;
    let c1v = &(d(2) + &(p * d(3))) + &(q * d(4));
    let c1w = &(d(5) + &(p * d(6))) + &(q * d(7));
    let c2w = &(d(8) + &(p * tv)) - &(q * tu);
    // ∂ₓ(D_k + pD_{k'} + qD_{k''}) restricted to the explicit and c-dependence
    let lin = |x: usize, a: usize, b: usize, c: usize| &(pd(a, x) + &(p * pd(b, x))) + &(q * pd(c, x));
    // ∂ᵥ(∂_wc₂) and ∂ᵤ(∂_wc₂)
    let dv_c2w = || {
        let mut t = Acc::new();
        t.add(pd(8, 3) * &c1v);
        t.add(pd(8, 4) * q);
        t.add(pd(8, 1).clone());
        t.add(x2 * tv);
        t.add(p * &pt.tv_d[1]);
        t.sub(x3 * tu);
        t.sub(q * &pt.tu_d[1]);
        t.done()
    };
    let du_c2w = {
        let mut t = Acc::new();
        t.add(pd(8, 3) * &c1u);
        t.add(pd(8, 4) * p);
        t.add(pd(8, 0).clone());
        t.add(x1 * tv);
        t.add(p * &pt.tv_d[0]);
        t.sub(x2 * tu);
        t.sub(q * &pt.tu_d[0]);
        t
    };
    // ∂ᵥ(∂ᵤc₁) = ∂ᵤ(∂ᵥc₁)
    let mut e1 = Acc::new();
    e1.sub(x3.clone());
    e1.add(pd(1, 3) * &c1v);
    e1.add(pd(1, 4) * q);
    e1.add(pd(1, 1).clone());
    e1.sub(lin(3, 2, 3, 4) * &c1u);
    e1.sub(lin(4, 2, 3, 4) * p);
    e1.sub(lin(0, 2, 3, 4));
    e1.sub(&(x1 * d(3)) + &(x2 * d(4)));
    // ∂_w(∂ᵤc₁) = ∂ᵤ(∂_wc₁)
    let mut e2 = Acc::new();
    let (s, sc) = dv_c2w();
    e2.scale += sc;
    e2.sub(s);
    e2.add(pd(1, 3) * &c1w);
    e2.add(pd(1, 4) * &c2w);
    e2.add(pd(1, 2).clone());
    e2.sub(lin(3, 5, 6, 7) * &c1u);
    e2.sub(lin(4, 5, 6, 7) * p);
    e2.sub(lin(0, 5, 6, 7));
    e2.sub(&(x1 * d(6)) + &(x2 * d(7)));
    // ∂_w(∂ᵥc₁) = ∂ᵥ(∂_wc₁)
    let mut e3 = Acc::new();
    e3.add(lin(3, 2, 3, 4) * &c1w);
    e3.add(lin(4, 2, 3, 4) * &c2w);
    e3.add(lin(2, 2, 3, 4));
    let (s, sc) = du_c2w.done();
    e3.scale += sc * d(3).value().norm();
    e3.add(d(3) * &s);
    let (s, sc) = dv_c2w();
    e3.scale += sc * d(4).value().norm();
    e3.add(d(4) * &s);
    e3.sub(lin(3, 5, 6, 7) * &c1v);
    e3.sub(lin(4, 5, 6, 7) * q);
    e3.sub(lin(1, 5, 6, 7));
    e3.sub(&(x2 * d(6)) + &(x3 * d(7)));
    [e1.done(), e2.done(), e3.done()]
}

/// The compatibility conditions as `A·x + b`, with the term scales of `b`.
pub struct CompatSystem {
    pub a: Mat3<Jet>,
    pub b: Vec3<Jet>,
    pub scale: [f64; 3],
}

/// Assemble the linear system in `(∂ᵤ²c₂, ∂ᵤᵥc₂, ∂ᵥ²c₂)`.
pub fn compat_system(dj: &DJets, p: &Jet, q: &Jet) -> Result<CompatSystem> {
    let pt = partials(dj)?;
    let zero = Jet::constant(re(0.0));
    let one = Jet::constant(re(1.0));
    let base = compat_with(dj, &pt, p, q, [&zero, &zero, &zero]);
    let cols: Vec<[(Jet, f64); 3]> = (0..3)
        .map(|k| {
            let x: [&Jet; 3] = std::array::from_fn(|i| if i == k { &one } else { &zero });
            compat_with(dj, &pt, p, q, x)
        })
        .collect();
    let a = Mat3(std::array::from_fn(|r| std::array::from_fn(|k| &cols[k][r].0 - &base[r].0)));
    let b = Vec3([base[0].0.clone(), base[1].0.clone(), base[2].0.clone()]);
    Ok(CompatSystem { a, b, scale: [base[0].1, base[1].1, base[2].1] })
}

fn relative_det(a: &CMat3) -> (C64, f64) {
    let d = a.det();
    let rows: f64 = (0..3).map(|i| a.row(i).herm_norm()).product();
    (d, if rows > 0.0 { d.norm() / rows } else { 0.0 })
}

/// Solve for `(F₁, F₂, F₃) = (∂ᵤ²c₂, ∂ᵤᵥc₂, ∂ᵥ²c₂)`. Needs contact jets of
/// order 4.
pub fn f_solve(f: &CorrFrame, c1: C64, c2: C64, p: C64, q: C64) -> Result<[C64; 3]> {
    let dj = d_eval(f, c1, c2, 2)?;
    let sys = compat_system(&dj, &Jet::constant(p), &Jet::constant(q))?;
    let a = sys.a.value();
    let (det, rel) = relative_det(&a);
    if rel < F_SINGULAR {
        return Err(Error::FSystemSingular(det));
    }
    let inv = a.inverse().map_err(|_| Error::FSystemSingular(det))?;
    let x = inv.mul_vec(&sys.b.value());
    Ok([-x.0[0], -x.0[1], -x.0[2]])
}

/// `G₁, G₂` at `(c₁, c₂, p, q)`. Needs contact jets of order 5; fails with
/// the singular-system error when `F` does not exist.
pub fn g_eval(f: &CorrFrame, c1: C64, c2: C64, p: C64, q: C64) -> Result<[C64; 2]> {
    let dj = d_eval(f, c1, c2, 3)?;
    let spec = c_block_spec(3);
    let pj = Jet::seed(&spec, P, p)?;
    let qj = Jet::seed(&spec, Q, q)?;
    let sys = compat_system(&dj, &pj, &qj)?;
    let (det, rel) = relative_det(&sys.a.value());
    if rel < F_SINGULAR {
        return Err(Error::FSystemSingular(det));
    }
    let inv = sys.a.inverse().map_err(|_| Error::FSystemSingular(det))?;
    let fx = -inv.mul_vec(&sys.b);
    let [f1, f2, f3] = fx.0;
    let dd = |j: &Jet, x: usize| j.derivative(x);
    let (d1, d2, d3, d4) = (dj.get(1), dj.get(2), dj.get(3), dj.get(4));
    let c1u = d1 - &qj;
    let c1v = &(d2 + &(&pj * d3)) + &(&qj * d4);
    // total ∂ᵥ and ∂ᵤ of a function of (u, v, w, c₁, c₂, p, q)
    let tot_v = |g: &Jet| -> Result<Jet> {
        Ok(&(&(&(&(&dd(g, P)? * &f2) + &(&dd(g, Q)? * &f3)) + &(&dd(g, C1)? * &c1v)) + &(&dd(g, C2)? * &qj))
            + &dd(g, V)?)
    };
    let tot_u = |g: &Jet| -> Result<Jet> {
        Ok(&(&(&(&(&dd(g, P)? * &f1) + &(&dd(g, Q)? * &f2)) + &(&dd(g, C1)? * &c1u)) + &(&dd(g, C2)? * &pj))
            + &dd(g, U)?)
    };
    let g1 = &tot_v(&f1)? - &tot_u(&f2)?;
    let g2 = &tot_u(&f3)? - &tot_v(&f2)?;
    Ok([g1.value(), g2.value()])
}

/// `G₂ + (𝒱̃/𝒰̃) G₁`, relative to `|G₂| + |𝒱̃/𝒰̃||G₁|`.
pub fn r3_residual(f: &CorrFrame, c1: C64, c2: C64, p: C64, q: C64) -> Result<Residual> {
    let [g1, g2] = g_eval(f, c1, c2, p, q)?;
    let k = f.tv.value() / f.tu.value();
    Ok(Residual::relative((g2 + k * g1).norm(), g2.norm() + k.norm() * g1.norm()))
}

/// The printed determinant of the second-derivative system, built from
/// `D₃, D₄` and `D₆ = −𝒰̃D₃`, `D₇ = −𝒱̃ − 𝒰̃D₄`: the 3×3 value and the 2×2
/// determinant it reduces to (the 3×3 value is minus the 2×2 one).
pub fn printed_determinant(cs: &CScalars, c1: C64, c2: C64) -> Result<(C64, C64)> {
    let (d3, d4) = d34(cs, c1, c2)?;
    let (tu, tv) = (cs.tu, cs.tv);
    let d6 = -tu * d3;
    let d7 = -tv - tu * d4;
    let m = Mat3([[-d3, -d4, re(-1.0)], [-d6, -d7 + tv, -tu], [tv, -d6 + tv - tu, -d7 - tu]]);
    let a = -d6 + d3 * tu;
    let b = -d7 + tv + d4 * tu;
    let c = tv + d3 * (d7 + tu);
    let d = -d6 + tv - tu + d4 * (d7 + tu);
    Ok((m.det(), a * d - b * c))
}

/// `D₃, D₄` from their printed closed forms.
pub fn d34(cs: &CScalars, c1: C64, c2: C64) -> Result<(C64, C64)> {
    let a = &cs.mc;
    let mu = a[M4].v + c2 * a[M124].v;
    if mu.norm() <= 1e-12 * (a[M4].s + c2.norm() * a[M124].s) {
        return Err(Error::C4Pole(mu.norm()));
    }
    let nu = a[M0].v + c1 * a[M1].v + c2 * a[M2].v + c1 * c1 * a[M124].v;
    let d3 = -a[M2].v / mu + a[M124].v / mu * nu / mu;
    let d4 = (a[M1].v + 2.0 * c1 * a[M124].v) / mu;
    Ok((d3, d4))
}

/// Coefficients of `μ⁴·det` in `c₁` at fixed `c₂`, fitted on seven nodes,
/// for the 2×2 form of the printed determinant.
pub fn determinant_poly(cs: &CScalars, c2: C64) -> Result<Vec<Tracked>> {
    let nodes: Vec<f64> = (-3..=3).map(f64::from).collect();
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |k, i| nodes[k].powi(i as i32));
    let vi = v.try_inverse().ok_or(Error::Interpolation)?;
    let mu = cs.mc[M4].v + c2 * cs.mc[M124].v;
    let vals: Vec<Tracked> = nodes
        .iter()
        .map(|&x| -> Result<Tracked> {
            let (_, det) = printed_determinant(cs, re(x), c2)?;
            Ok(Tracked::exact(det * mu.powu(4)))
        })
        .collect::<Result<_>>()?;
    Ok((0..n)
        .map(|i| (0..n).fold(Tracked::zero(), |acc, k| acc + vals[k].times(re(vi[(i, k)]))))
        .collect())
}

/// Checks on the second-derivative system: `det.c1^4` (leading coefficient
/// of the 2×2 determinant against `2(m·C¹₁₂₄)⁴𝒰̃²`), `det.2x2` (the 3×3
/// value is minus the 2×2 one), `D.3`, `D.4` (jet `D`'s against their closed
/// forms), `F.rows` (rows 2 and 3 of the system are `−𝒰̃` and `−𝒱̃` times
/// row 1), `F.rank` (smallest-to-largest singular value ratio) and
/// `F.cons.2`, `F.cons.3` (the second-derivative-free combinations).
pub fn cascade_checks(f: &CorrFrame, c1: C64, c2: C64, p: C64, q: C64) -> Result<ResidualReport> {
    let pt = f.point;
    let cs = CScalars::new(f)?;
    let mut rep = ResidualReport::new();
    let coeffs = determinant_poly(&cs, c2)?;
    let want = 2.0 * cs.mc[M124].v.powu(4) * cs.tu * cs.tu;
    let got = coeffs[4];
    rep.push("det.c1^4", pt, Residual::relative((got.v - want).norm(), got.s.max(want.norm())), DET_TOL);
    let (d33, d22) = printed_determinant(&cs, c1, c2)?;
    rep.push("det.2x2", pt, Residual::relative((d33 + d22).norm(), d33.norm() + d22.norm()), DET_TOL);
    let dj = d_eval(f, c1, c2, 2)?;
    let (d3, d4) = d34(&cs, c1, c2)?;
    for (id, jet, closed) in [("D.3", dj.get(3), d3), ("D.4", dj.get(4), d4)] {
        let v = jet.value();
        rep.push(id, pt, Residual::relative((v - closed).norm(), v.norm() + closed.norm()), CASCADE_TOL);
    }
    let sys = compat_system(&dj, &Jet::constant(p), &Jet::constant(q))?;
    let a = sys.a.value();
    let (tu, tv) = (f.tu.value(), f.tv.value());
    let r1 = a.row(0);
    let row2 = &a.row(1) + &r1.scale_c(tu);
    let row3 = &a.row(2) + &r1.scale_c(tv);
    let scale = a.row(1).herm_norm() + a.row(2).herm_norm() + (tu.norm() + tv.norm()) * r1.herm_norm();
    rep.push("F.rows", pt, Residual::relative(row2.herm_norm() + row3.herm_norm(), scale), CASCADE_TOL);
    let dm = DMatrix::from_fn(3, 3, |i, j| a.0[i][j]);
    let sv = dm.singular_values();
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    rep.push("F.rank", pt, Residual::relative(sv[1], sv[0]), CASCADE_TOL);
    let b = sys.b.value();
    let cons2 = b.0[1] + tu * b.0[0];
    let cons3 = b.0[2] + tv * b.0[0];
    rep.push("F.cons.2", pt, Residual::relative(cons2.norm(), sys.scale[1] + tu.norm() * sys.scale[0]), CASCADE_TOL);
    rep.push("F.cons.3", pt, Residual::relative(cons3.norm(), sys.scale[2] + tv.norm() * sys.scale[0]), CASCADE_TOL);
    Ok(rep)
}

/// Second-derivative system value at a point, for inspection.
pub fn f_matrix(f: &CorrFrame, c1: C64, c2: C64, p: C64, q: C64) -> Result<(CMat3, Cx3)> {
    let dj = d_eval(f, c1, c2, 2)?;
    let sys = compat_system(&dj, &Jet::constant(p), &Jet::constant(q))?;
    Ok((sys.a.value(), sys.b.value()))
}
