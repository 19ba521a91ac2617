//! Relations that involve the second fundamental form of the seed only
//! through `∂ᵤN₀, ∂ᵥN₀`, written as `∂ᵤN₀·A + ∂ᵥN₀·B + C = 0` with
//! `A, B, C` free of it, and the split relations that follow.

use std::ops::{Add, Neg, Sub};

use super::relations::{r1_values, ALGEBRAIC_TOL};
use super::{poly, tangential, CorrFrame, Tracked};
use crate::error::{Error, Result};
use crate::jets::{Jet, U, V, W};
use crate::kernel::{re, Cx3, Vec3, C64};
use crate::report::{Residual, ResidualReport};

/// Tolerance of the recombination and split checks.
pub const ABC_TOL: f64 = 1e-7;

/// Relation ids with a decomposition.
pub const RELATIONS: [&str; 8] = ["R1-2", "R1-5", "R1-7", "R1-8", "R1-9", "R2-1", "R2-2", "R2-3"];

/// Which of `A`, `B` is asserted to vanish identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroPart {
    A,
    B,
    Neither,
}

/// A vector kept as its list of terms.
#[derive(Clone, Debug, Default)]
pub struct VecTerms(pub Vec<Cx3>);

impl VecTerms {
    fn add_s(mut self, s: C64, x: &Cx3) -> Self {
        self.0.push(x.scale_c(s));
        self
    }
    pub fn value(&self) -> Cx3 {
        self.0.iter().fold(Cx3::zero(), |acc, x| &acc + x)
    }
    pub fn scale(&self) -> f64 {
        self.0.iter().map(Cx3::herm_norm).sum()
    }
    /// `y·(Σ terms)` with its term scale.
    pub fn dot(&self, y: &Cx3) -> Tracked {
        Tracked { v: y.dot(&self.value()), s: y.herm_norm() * self.scale() }
    }
    /// Relative size of the sum against its terms.
    pub fn residual(&self) -> Residual {
        Residual::relative(self.value().herm_norm(), self.scale())
    }
}

/// A scalar kept as its list of terms.
#[derive(Clone, Debug, Default)]
pub struct ScalarTerms(pub Vec<C64>);

impl ScalarTerms {
    fn times(self, k: C64) -> Self {
        ScalarTerms(self.0.into_iter().map(|t| t * k).collect())
    }
    pub fn tracked(&self) -> Tracked {
        self.0.iter().fold(Tracked::zero(), |acc, &t| acc + Tracked::exact(t))
    }
}

impl Add for ScalarTerms {
    type Output = ScalarTerms;
    fn add(mut self, o: ScalarTerms) -> ScalarTerms {
        self.0.extend(o.0);
        self
    }
}

impl Neg for ScalarTerms {
    type Output = ScalarTerms;
    fn neg(self) -> ScalarTerms {
        self.times(re(-1.0))
    }
}

impl Sub for ScalarTerms {
    type Output = ScalarTerms;
    fn sub(self, o: ScalarTerms) -> ScalarTerms {
        self + (-o)
    }
}

/// The decomposition of one relation.
#[derive(Clone, Debug)]
pub struct Abc {
    pub a: VecTerms,
    pub b: VecTerms,
    pub c: ScalarTerms,
    pub zero: ZeroPart,
}

impl Abc {
    /// The member asserted to vanish identically, if any.
    pub fn zero_part(&self) -> Option<&VecTerms> {
        match self.zero {
            ZeroPart::A => Some(&self.a),
            ZeroPart::B => Some(&self.b),
            ZeroPart::Neither => None,
        }
    }

    /// `∂ᵤN₀·A + ∂ᵥN₀·B + C`.
    pub fn recombine(&self, nu: &Cx3, nv: &Cx3) -> Tracked {
        self.a.dot(nu) + self.b.dot(nv) + self.c.tracked()
    }

    /// The individual terms of the recombination.
    pub fn term_values(&self, nu: &Cx3, nv: &Cx3) -> Vec<C64> {
        let a = self.a.0.iter().map(|x| nu.dot(x));
        let b = self.b.0.iter().map(|x| nv.dot(x));
        a.chain(b).chain(self.c.0.iter().copied()).collect()
    }
}

/// Point values and derivative jets used by the closed forms.
struct Pieces<'a> {
    f: &'a CorrFrame,
    n0: Cx3,
    v: Cx3,
    vw: Cx3,
    cu: Cx3,
    cv: Cx3,
    ux: Cx3,
    vx: Cx3,
    wx: Cx3,
    pu: Cx3,
    pv: Cx3,
    n: C64,
    tu: C64,
    tv: C64,
    m2: C64,
    vsq: C64,
    /// `N₀·(∂_wV×𝒰)`, `N₀·(∂_wV×𝒱)`, `N₀·(V×𝒰)`, `N₀·(V×𝒱)`, `N₀·(∂_wV×V)`.
    au: C64,
    av: C64,
    su: C64,
    sv: C64,
    reg: C64,
    /// `K N₀·(x₀ᵤ×x₀ᵥ) / N₀·(𝒰×𝒱)`.
    kg: C64,
    pu_j: Vec3<Jet>,
    pv_j: Vec3<Jet>,
}

fn dval(x: &Vec3<Jet>, var: usize) -> Result<Cx3> {
    Ok(x.try_map(|j| j.derivative(var))?.value())
}

impl<'a> Pieces<'a> {
    fn new(f: &'a CorrFrame) -> Pieces<'a> {
        let n0 = f.n0.value();
        let (v, vw, cu, cv) = (f.v.value(), f.vw.value(), f.cu.value(), f.cv.value());
        let nx = |a: &Cx3, b: &Cx3| n0.dot(&a.cross(b));
        let n = f.n.value();
        let mm = f.mm.value();
        let (pu_j, pv_j) = (tangential(&f.n0, &f.cu), tangential(&f.n0, &f.cv));
        Pieces {
            f,
            ux: cu.cross(&n0),
            vx: cv.cross(&n0),
            wx: vw.cross(&n0),
            pu: pu_j.value(),
            pv: pv_j.value(),
            n,
            tu: f.tu.value(),
            tv: f.tv.value(),
            m2: mm * mm,
            vsq: v.dot(&v),
            au: nx(&vw, &cu),
            av: nx(&vw, &cv),
            su: nx(&v, &cu),
            sv: nx(&v, &cv),
            reg: nx(&vw, &v),
            kg: f.k.value() * nx(&f.x0u.value(), &f.x0v.value()) / n,
            pu_j,
            pv_j,
            n0,
            v,
            vw,
            cu,
            cv,
        }
    }

    fn nx(&self, a: &Cx3, b: &Cx3) -> C64 {
        self.n0.dot(&a.cross(b))
    }

    /// `∂ₓ[(N₀×𝒰)×N₀]`, `∂ₓ[(N₀×𝒱)×N₀]`.
    fn dpu(&self, var: usize) -> Result<Cx3> {
        dval(&self.pu_j, var)
    }
    fn dpv(&self, var: usize) -> Result<Cx3> {
        dval(&self.pv_j, var)
    }

    /// `∂ₓ(s·P)` for a scalar jet `s` and projection `P`.
    fn dprod(&self, s: &Jet, p: &Vec3<Jet>, var: usize) -> Result<Cx3> {
        dval(&p.scale(s), var)
    }

    /// `(N₀×∂_wX)×N₀` with `N₀` held fixed.
    fn tan_w(&self, x: &Vec3<Jet>) -> Result<Cx3> {
        Ok(self.n0.cross(&dval(x, W)?).cross(&self.n0))
    }

    fn d_scalar(&self, s: &Jet, var: usize) -> Result<C64> {
        Ok(s.derivative(var)?.value())
    }
}

fn sum(terms: &[C64]) -> ScalarTerms {
    ScalarTerms(terms.to_vec())
}

fn dotp(y: &Cx3, x: &Cx3) -> ScalarTerms {
    ScalarTerms(vec![y.dot(x)])
}

/// `A, B, C` of a relation from the closed forms.
pub fn abc_decompose(f: &CorrFrame, relation_id: &str) -> Result<Abc> {
    let p = Pieces::new(f);
    let vt = VecTerms::default;
    let (n, n2, tu, tv) = (p.n, p.n * p.n, p.tu, p.tv);
    let (au, av, su, sv, reg, kg, m2, vsq) = (p.au, p.av, p.su, p.sv, p.reg, p.kg, p.m2, p.vsq);
    let (ux, vx, wx, pu, pv) = (&p.ux, &p.vx, &p.wx, &p.pu, &p.pv);
    let (vw, v, cu, cv) = (&p.vw, &p.v, &p.cu, &p.cv);
    let n0xv = p.n0.cross(v);
    let (uu, uvx, vvx) = (ux.dot(ux), ux.dot(vx), vx.dot(vx));
    let (vu, vvv) = (p.f.vu.value(), p.f.vv.value());
    let (x0u, x0v) = (p.f.x0u.value(), p.f.x0v.value());
    let (wcu, wcv, wv) = (vw.dot(cu), vw.dot(cv), vw.dot(v));
    let (vcu, vcv) = (v.dot(cu), v.dot(cv));
    let half = re(0.5);
    let two = re(2.0);
    let one = re(1.0);
    let out = match relation_id {
        "R1-5" => Abc {
            a: vt()
                .add_s(-av * n * su, &n0xv)
                .add_s(-av * (n * m2 + vcu * sv), pu)
                .add_s((vsq + m2) * au * n + vcu * av * su, pv)
                .add_s((m2 + vsq) * n2, vw),
            b: vt().add_s(au * su * n, &n0xv).add_s(au * su * vcv, pu).add_s(-au * su * vcu, pv),
            c: sum(&[
                -p.nx(vw, &x0v) * p.nx(vw, &vu) / (n * reg) * su,
                p.nx(vw, &x0u) * p.nx(vw, &vvv) / (n * reg) * su,
                -av / n * p.nx(&x0u, &vu),
                au / n * p.nx(cu, &vvv),
                -au,
                -wv * su / m2,
                -kg * m2 * au,
                -kg * wv * su,
                -vcu * reg * kg,
                su * wv / m2,
            ]),
            zero: ZeroPart::B,
        },
        "R1-2" => Abc {
            a: vt().add_s(-av * sv * n, &n0xv).add_s(-av * sv * vcv, pu).add_s(av * sv * vcu, pv),
            b: vt()
                .add_s(sv * au * n, &n0xv)
                .add_s((m2 * n - vcv * su) * au, pv)
                .add_s(-(vsq + m2) * av * n + vcv * au * sv, pu)
                .add_s((m2 + vsq) * n2, vw),
            c: sum(&[
                -p.nx(vw, &x0v) * p.nx(vw, &vu) / (n * reg) * sv,
                p.nx(vw, &x0u) * p.nx(vw, &vvv) / (n * reg) * sv,
                -av / n * p.nx(cv, &vu),
                au / n * p.nx(&x0v, &vvv),
                -av,
                -wv * sv / m2,
                -kg * m2 * av,
                -kg * wv * sv,
                -kg * vcv * reg,
                wv * sv / m2,
            ]),
            zero: ZeroPart::A,
        },
        "R1-7" => {
            let c = dotp(wx, &(&p.dpv(U)? + &p.dpu(V)?))
                + dotp(vx, &p.dprod(&f.tv, &p.pu_j, U)?)
                + dotp(vx, &p.dpv(U)?).times(tu)
                - dotp(vx, &p.tan_w(&f.cu)?)
                - dotp(ux, &p.tan_w(&f.cv)?)
                - dotp(ux, &p.dpu(V)?).times(tv)
                - dotp(ux, &p.dprod(&f.tu, &p.pv_j, V)?)
                + sum(&[
                    -(one / m2) * (wcu * sv + wcv * su),
                    -kg * (wcu * sv + wcv * su),
                    kg * wcu * cv.dot(&n0xv),
                    kg * wcv * cu.dot(&n0xv),
                    // printed with an extra factor N₀·(𝒰×𝒱), which makes C nonzero
                    -kg * uvx * reg,
                    kg * vvx * cu.dot(&n0xv) * tu,
                    -kg * uu * cv.dot(&n0xv) * tv,
                    -uvx * reg / m2,
                    -vvx * tu * su / m2,
                    uu * tv * sv / m2,
                ]);
            Abc {
                a: vt()
                    .add_s(n2 * sv, wx)
                    .add_s(-(wcv * n + uvx * av + vvx * au) * sv, pu)
                    .add_s(n2 * vcv, vw)
                    .add_s((su * av + sv * au) * n, vx)
                    .add_s(wcv * n * su + uvx * au * sv + uu * av * sv, pv),
                b: vt()
                    .add_s(n2 * su, wx)
                    .add_s(n2 * vcu, vw)
                    .add_s(-(av * su + au * sv) * n, ux)
                    .add_s((n * wcu - uu * av - uvx * au) * su, pv)
                    .add_s(-wcu * n * sv + vvx * su * au + uvx * su * av, pu),
                c,
                zero: ZeroPart::Neither,
            }
        }
        "R1-8" => {
            let c = dotp(wx, &p.dpv(V)?) + dotp(vx, &p.dpv(U)?).times(tv)
                - dotp(vx, &p.tan_w(&f.cv)?)
                - dotp(ux, &p.dprod(&f.tv, &p.pv_j, V)?)
                + sum(&[-kg * av * vcv]);
            Abc {
                a: vt().add_s(av * sv * n, vx).add_s(-av * sv * vvx, pu).add_s(av * sv * uvx, pv),
                b: vt()
                    .add_s(n2 * sv, wx)
                    .add_s(-n * av * sv, ux)
                    .add_s(-wcv * sv * n + vvx * av * su, pu)
                    .add_s((wcv * n - uvx * av) * su, pv)
                    .add_s(vcv * n2, vw),
                c,
                zero: ZeroPart::A,
            }
        }
        "R1-9" => {
            let c = -dotp(wx, &p.dpu(U)?) - dotp(vx, &p.dprod(&f.tu, &p.pu_j, U)?)
                + dotp(ux, &p.tan_w(&f.cu)?)
                + dotp(ux, &p.dpu(V)?).times(tu)
                + sum(&[kg * au * vcu]);
            Abc {
                a: vt()
                    .add_s(-n2 * su, wx)
                    .add_s(-n * au * su, vx)
                    .add_s(-(wcu * su * n + uu * au * sv), pv)
                    .add_s((wcu * n + uvx * au) * sv, pu)
                    .add_s(-vcu * n2, vw),
                b: vt().add_s(au * su * n, ux).add_s(au * su * uu, pv).add_s(-au * su * uvx, pu),
                c,
                zero: ZeroPart::B,
            }
        }
        "R2-1" => {
            let c = sum(&[half * p.d_scalar(&f.tu, U)? * n]) + dotp(ux, &p.dpu(U)?).times(half * tv)
                - dotp(ux, &dval(&f.cu, W)?).times(half)
                - dotp(ux, &p.dpu(V)?).times(half * tu)
                + sum(&[-kg * half * au * vcu]);
            Abc {
                a: vt()
                    .add_s(half * su * av * n, ux)
                    .add_s(half * uu * su * av + half * au * vcu * n, pv)
                    .add_s(-half * uu * sv * av, pu)
                    .add_s(half * vcu * n2, vw),
                b: vt()
                    .add_s(-half * su * au * n, ux)
                    .add_s(half * su * au * uvx, pu)
                    .add_s(-half * su * au * uu, pv),
                c,
                zero: ZeroPart::B,
            }
        }
        "R2-2" => {
            let c = -dotp(vx, &p.tan_w(&f.cv)?) + dotp(vx, &p.dprod(&f.tv, &p.pu_j, W)?)
                + dotp(vx, &p.tan_w(&f.cv)?).times(tu)
                - dotp(vx, &p.dpu(V)?).times(tv)
                - dotp(vx, &p.dpv(V)?).times(two * tu)
                + dotp(vx, &p.dpv(U)?).times(tv)
                + sum(&[-kg * av * vcv]);
            Abc {
                a: vt().add_s(sv * av * n, vx).add_s(sv * av * uvx, pv).add_s(-sv * av * vvx, pu),
                b: vt()
                    .add_s(-(av * su + two * au * sv) * n, vx)
                    .add_s(-sv * n * wcv + vvx * av * su, pu)
                    .add_s(-vvx * au * su, pv)
                    .add_s(vcv * n2, vw),
                c,
                zero: ZeroPart::A,
            }
        }
        "R2-3" => {
            let c = dotp(vx, &p.tan_w(&f.cu)?)
                - dotp(vx, pu).times(p.d_scalar(&f.tu, V)?)
                + dotp(vx, &p.dpu(V)?).times(tu)
                - dotp(vx, &p.dpu(U)?).times(tv)
                - dotp(vx, pu).times(two * p.d_scalar(&f.tv, U)?)
                + dotp(ux, &p.dpv(V)?).times(tu)
                - dotp(ux, &p.dprod(&f.tv, &p.pv_j, U)?)
                + dotp(ux, &p.tan_w(&f.cv)?)
                + sum(&[kg * reg * uvx, -kg * vvx * tu * su, kg * uu * tv * sv]);
            Abc {
                a: vt()
                    .add_s(-n * av * su, vx)
                    .add_s(-n * av * sv, ux)
                    .add_s(two * av * sv * uvx, pu)
                    .add_s(-(su * n * wcv + au * sv * uvx + av * sv * uu), pv)
                    .add_s(-vcv * n2, vw),
                b: vt()
                    .add_s(au * n * sv, ux)
                    .add_s(au * n * su, vx)
                    .add_s(sv * n * wcu - av * su * uvx - au * su * vvx, pu)
                    .add_s(two * au * su * uvx, pv)
                    .add_s(-n2 * vcu, vw),
                c,
                zero: ZeroPart::Neither,
            }
        }
        other => return Err(Error::Unknown { kind: "relation", name: other.to_string() }),
    };
    Ok(out)
}

/// The relation value an id refers to: an R1 entry or a `P₁` coefficient
/// relation.
pub fn relation_value(f: &CorrFrame, relation_id: &str) -> Result<Tracked> {
    let r1 = |i: usize| -> Result<Tracked> { Ok(r1_values(f)?[i - 1]) };
    let r2 = |name: &str| -> Result<Tracked> {
        let cs = poly::CScalars::new(f)?;
        poly::coefficient_relations(&cs)
            .into_iter()
            .find(|(k, _)| *k == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Unknown { kind: "relation", name: name.to_string() })
    };
    match relation_id {
        "R1-2" => r1(2),
        "R1-5" => r1(5),
        "R1-7" => r1(7),
        "R1-8" => r1(8),
        "R1-9" => r1(9),
        "R2-1" => r2("c1^3c2"),
        "R2-2" => r2("c1c2^3"),
        "R2-3" => r2("c1^2c2^2"),
        other => Err(Error::Unknown { kind: "relation", name: other.to_string() }),
    }
}

/// The dual basis `g^{ij}∂ⱼx₀` of the seed at the point.
fn dual_basis(f: &CorrFrame) -> Result<[Cx3; 2]> {
    let (xu, xv) = (f.x0u.value(), f.x0v.value());
    let (e, g, h) = (xu.dot(&xu), xu.dot(&xv), xv.dot(&xv));
    let det = e * h - g * g;
    if det.norm() <= 1e-14 * (e.norm() * h.norm()).max(1e-300) {
        return Err(Error::ZeroDenominator("first fundamental form".into()));
    }
    let e1 = &xu.scale_c(h / det) - &xv.scale_c(g / det);
    let e2 = &xv.scale_c(e / det) - &xu.scale_c(g / det);
    Ok([e1, e2])
}

/// The split relations of a decomposition: `g^{1j}∂ⱼx₀·A`, `g^{2j}∂ⱼx₀·B`,
/// `g^{2j}∂ⱼx₀·A + g^{1j}∂ⱼx₀·B` and `C`, or the three left when `A` or `B`
/// vanishes.
pub fn split_relations(f: &CorrFrame, d: &Abc) -> Result<Vec<(&'static str, Tracked)>> {
    let [e1, e2] = dual_basis(f)?;
    let c = d.c.tracked();
    Ok(match d.zero {
        ZeroPart::A => vec![("b1", d.b.dot(&e1)), ("b2", d.b.dot(&e2)), ("c", c)],
        ZeroPart::B => vec![("a1", d.a.dot(&e1)), ("a2", d.a.dot(&e2)), ("c", c)],
        ZeroPart::Neither => vec![("a1", d.a.dot(&e1)), ("b2", d.b.dot(&e2)), ("ab", d.a.dot(&e2) + d.b.dot(&e1)), ("c", c)],
    })
}

/// Checks per relation id: `abc.<id>.zero` (the member asserted to vanish),
/// `abc.<id>.recomb` (normalized recombination against the normalized
/// relation value) and `abc.<id>.split.<part>` (each part relative to the
/// summed term scale of all parts).
pub fn abc_checks(f: &CorrFrame) -> Result<ResidualReport> {
    let p = f.point;
    let (nu, nv) = (f.nu.value(), f.nv.value());
    let mut rep = ResidualReport::new();
    for id in RELATIONS {
        let d = abc_decompose(f, id)?;
        if let Some(z) = d.zero_part() {
            rep.push(format!("abc.{id}.zero"), p, z.residual(), ALGEBRAIC_TOL);
        }
        let x = d.recombine(&nu, &nv);
        let y = relation_value(f, id)?;
        let gap = (ratio(x) - ratio(y)).norm();
        rep.push(format!("abc.{id}.recomb"), p, Residual::relative(gap, 1.0), ABC_TOL);
        // parts are measured against the scale of all parts together, so a
        // part whose terms all vanish at a special position reads as zero
        let parts = split_relations(f, &d)?;
        let total: f64 = parts.iter().map(|(_, t)| t.s).sum();
        for (part, t) in parts {
            rep.push(format!("abc.{id}.split.{part}"), p, Residual::relative(t.v.norm(), total), ABC_TOL);
        }
    }
    Ok(rep)
}

/// A tracked value divided by its term scale (0 when the scale is 0).
fn ratio(t: Tracked) -> C64 {
    if t.s > 0.0 {
        t.v / t.s
    } else {
        re(0.0)
    }
}
