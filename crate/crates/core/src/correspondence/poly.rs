//! Elimination of `c₄` (or `c₂`) from the five independent equations and
//! the quartic polynomials `P₁(c₁, c₂)` and `P₂(c₁, c₄)` left over.
//!
//! Coefficients are extracted by interpolation on the integer nodes
//! `{−2, …, 2}²`; every coefficient carries the scale `Σ|wᵢ| sᵢ` of its
//! interpolation weights against the term scales of the node values.

use nalgebra::DMatrix;

use super::{CorrFrame, Tracked, M0, M1, M124, M2, M4};
use crate::error::{Error, Result};
use crate::jets::{U, V, W};
use crate::kernel::{re, C64};
use crate::report::{Residual, ResidualReport};

/// Tolerance of the polynomial claims.
pub const POLY_TOL: f64 = 1e-7;
/// Tolerance of the interpolation self-check.
pub const SELF_CHECK_TOL: f64 = 1e-10;
/// Interpolation nodes in each variable.
pub const NODES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
/// Off-grid probe point of the self-check.
pub const PROBE: (f64, f64) = (0.3, -0.7);

/// Scalar contractions of the C-vectors at a point.
#[derive(Clone, Debug)]
pub struct CScalars {
    pub point: [f64; 3],
    pub n: C64,
    pub tu: C64,
    pub tv: C64,
    /// `m·C¹ⱼ`.
    pub mc: [Tracked; 5],
    /// `∂ₓ(m·C¹ⱼ)` for x = u, v, w.
    pub dmc: [[C64; 5]; 3],
    /// `(𝒰×N₀)·Cⁱⱼ` and `(𝒱×N₀)·Cⁱⱼ`.
    pub uc: [[Tracked; 5]; 3],
    pub vc: [[Tracked; 5]; 3],
}

impl CScalars {
    /// Needs C-vectors carrying first derivatives (contact jets of order 3).
    pub fn new(f: &CorrFrame) -> Result<CScalars> {
        let c = f.cvec()?;
        let m = f.m.value();
        let (ux, vx) = (f.ux_n().value(), f.vx_n().value());
        let tr = |y: &crate::kernel::Cx3, i: usize, j: usize| Tracked {
            v: y.dot(&c[i][j].value()),
            s: y.herm_norm() * f.cscale[i][j],
        };
        let mut dmc = [[re(0.0); 5]; 3];
        for (x, var) in [U, V, W].into_iter().enumerate() {
            for j in 0..5 {
                dmc[x][j] = f.mdot(&c[0][j]).derivative(var)?.value();
            }
        }
        Ok(CScalars {
            point: f.point,
            n: f.n.value(),
            tu: f.tu.value(),
            tv: f.tv.value(),
            mc: std::array::from_fn(|j| tr(&m, 0, j)),
            dmc,
            uc: std::array::from_fn(|i| std::array::from_fn(|j| tr(&ux, i, j))),
            vc: std::array::from_fn(|i| std::array::from_fn(|j| tr(&vx, i, j))),
        })
    }

    /// `Cⁱ` contracted, for the monomials evaluated at `(c₁, c₂, c₄)`.
    fn comb(row: &[Tracked; 5], c1: C64, c2: C64, c4: C64) -> Tracked {
        row[M0] + row[M1].times(c1) + row[M2].times(c2) + row[M4].times(c4) + row[M124].times(c1 * c1 + c2 * c4)
    }

    /// `E_i·(𝒰×N₀)/n`, `E_i·(𝒱×N₀)/n` for equation `i` (0-based).
    fn e_u(&self, i: usize, c: [C64; 3]) -> Tracked {
        Self::comb(&self.uc[i], c[0], c[1], c[2]).over(self.n)
    }
    fn e_v(&self, i: usize, c: [C64; 3]) -> Tracked {
        Self::comb(&self.vc[i], c[0], c[1], c[2]).over(self.n)
    }

    /// The value of `c₄` that zeroes the first L3 relation.
    pub fn c4(&self, c1: C64, c2: C64) -> Result<C64> {
        let (num, den) = self.c4_parts(c1, c2);
        if den.v.norm() <= 1e-12 * den.s.max(f64::MIN_POSITIVE) {
            return Err(Error::C4Pole(den.v.norm()));
        }
        Ok(-num.v / den.v)
    }

    fn c4_parts(&self, c1: C64, c2: C64) -> (Tracked, Tracked) {
        let a = &self.mc;
        let num = a[M0] + a[M1].times(c1) + a[M2].times(c2) + a[M124].times(c1 * c1);
        let den = a[M4] + a[M124].times(c2);
        (num, den)
    }

    /// The value of `c₂` that zeroes the first L3 relation, the roles of
    /// `c₂` and `c₄` exchanged.
    pub fn c2(&self, c1: C64, c4: C64) -> Result<C64> {
        let a = &self.mc;
        let num = a[M0] + a[M1].times(c1) + a[M4].times(c4) + a[M124].times(c1 * c1);
        let den = a[M2] + a[M124].times(c4);
        if den.v.norm() <= 1e-12 * den.s.max(f64::MIN_POSITIVE) {
            return Err(Error::C4Pole(den.v.norm()));
        }
        Ok(-num.v / den.v)
    }

    /// First L3 relation `m·E₁` at `(c₁, c₂, c₄)`.
    pub fn first_relation(&self, c1: C64, c2: C64, c4: C64) -> Tracked {
        Self::comb(&self.mc, c1, c2, c4)
    }
}

/// `c₄` from the first L3 relation; fails with a pole error where
/// `m·(C¹₄ + c₂C¹₁₂₄)` vanishes.
pub fn c4_solve(f: &CorrFrame, c1: C64, c2: C64) -> Result<C64> {
    CScalars::new(f)?.c4(c1, c2)
}

/// Derivatives `d[k][x]` of `(c₁, c₂, c₄)` along `x = u, v, w`.
pub type CDerivs = [[C64; 3]; 3];

/// Residuals (LHS − RHS) of the five independent equations for supplied
/// values and derivatives of `c₁, c₂, c₄`.
pub fn pauc1_system(cs: &CScalars, c: [C64; 3], d: &CDerivs) -> [Tracked; 5] {
    let (tu, tv) = (cs.tu, cs.tv);
    let x = Tracked::exact;
    let (e1u, e1v, e2u, e2v, e3v) = (cs.e_u(0, c), cs.e_v(0, c), cs.e_u(1, c), cs.e_v(1, c), cs.e_v(2, c));
    let [d1, d2, d4] = *d;
    [
        x(d1[0]) + x(d2[1]) + e1u,
        x(d1[1]) - x(d4[0]) - e1v,
        x(d2[2]) - ((-x(d2[1]) - e1u).times(tu) + x(d2[0] * tv) - e2u),
        x(d1[2]) - (-(x(d2[1]) + e1u).times(tv) - x(d4[0] * tu) + e2v),
        x(d4[2]) - ((x(d4[0]) + e1v).times(tv) - x(d4[1] * tu) - e3v),
    ]
}

/// Which of `c₂, c₄` is eliminated through the first L3 relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elim {
    /// `c₄` eliminated, `P₁(c₁, c₂)`.
    C4,
    /// `c₂` eliminated, `P₂(c₁, c₄)`.
    C2,
}

/// The polynomial at `(c₁, y)` with free first derivatives `p, q` of the
/// kept variable `y`: the last remaining equation times
/// `[m·(C¹₄ + c₂C¹₁₂₄)]³ n` (or the exchanged factor).
pub fn elim_poly(cs: &CScalars, how: Elim, c1: C64, y: C64, p: C64, q: C64) -> Result<Tracked> {
    let a = &cs.mc;
    let (tu, tv, n) = (cs.tu, cs.tv, cs.n);
    let (yi, zi) = match how {
        Elim::C4 => (M2, M4),
        Elim::C2 => (M4, M2),
    };
    // z = −ν/μ with ν = m·(C₀ + c₁C₁ + yC_y + c₁²C₁₂₄), μ = m·(C_z + yC₁₂₄)
    let nu = a[M0] + a[M1].times(c1) + a[yi].times(y) + a[M124].times(c1 * c1);
    let mu = a[zi] + a[M124].times(y);
    if mu.v.norm() <= 1e-12 * mu.s.max(f64::MIN_POSITIVE) {
        return Err(Error::C4Pole(mu.v.norm()));
    }
    let z = -nu.v / mu.v;
    let dm = &cs.dmc;
    let zx: [C64; 3] = std::array::from_fn(|x| {
        let dnu = dm[x][M0] + c1 * dm[x][M1] + y * dm[x][yi] + c1 * c1 * dm[x][M124];
        let dmu = dm[x][zi] + y * dm[x][M124];
        -(dnu + z * dmu) / mu.v
    });
    let z1 = -(a[M1].v + 2.0 * c1 * a[M124].v) / mu.v;
    let zy = -(a[yi].v + z * a[M124].v) / mu.v;
    let e = |x: C64| Tracked::exact(x);
    let chain = |x: usize, dc1: Tracked, dy: Tracked| e(zx[x]) + dc1.times(z1) + dy.times(zy);
    let r = match how {
        Elim::C4 => {
            let c = [c1, y, z];
            let (e1u, e1v, e2u, e2v, e3v) = (cs.e_u(0, c), cs.e_v(0, c), cs.e_u(1, c), cs.e_v(1, c), cs.e_v(2, c));
            let (c2u, c2v) = (e(p), e(q));
            let c1u = -c2v - e1u;
            let c4u = chain(0, c1u, c2u);
            let c1v = c4u + e1v;
            let c4v = chain(1, c1v, c2v);
            let c1w = -(c2v + e1u).times(tv) - c4u.times(tu) + e2v;
            let c2w = (-c2v - e1u).times(tu) + c2u.times(tv) - e2u;
            let c4w = chain(2, c1w, c2w);
            c4w - ((c4u + e1v).times(tv) - c4v.times(tu) - e3v)
        }
        Elim::C2 => {
            let c = [c1, z, y];
            let (e1u, e1v, e2u, e2v, e3v) = (cs.e_u(0, c), cs.e_v(0, c), cs.e_u(1, c), cs.e_v(1, c), cs.e_v(2, c));
            let (c4u, c4v) = (e(p), e(q));
            let c1v = c4u + e1v;
            let c2v = chain(1, c1v, c4v);
            let c1u = -c2v - e1u;
            let c2u = chain(0, c1u, c4u);
            let c1w = -(c2v + e1u).times(tv) - c4u.times(tu) + e2v;
            let c4w = (c4u + e1v).times(tv) - c4v.times(tu) - e3v;
            let c2w = chain(2, c1w, c4w);
            c2w - ((-c2v - e1u).times(tu) + c2u.times(tv) - e2u)
        }
    };
    Ok(r.times(mu.v * mu.v * mu.v * n))
}

/// Coefficients `a[i][j]` of `xⁱ yʲ`, `i, j ≤ 4`.
#[derive(Clone, Debug)]
pub struct PolyCoeffs {
    pub a: [[Tracked; 5]; 5],
}

impl PolyCoeffs {
    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let mut s = re(0.0);
        for i in 0..5 {
            for j in 0..5 {
                s += self.a[i][j].v * x.powu(i as u32) * y.powu(j as u32);
            }
        }
        s
    }

    /// Largest coefficient scale, the natural unit of the polynomial.
    pub fn scale(&self) -> f64 {
        self.a.iter().flatten().map(|t| t.s).fold(0.0, f64::max)
    }
}

fn vandermonde_inverse() -> Result<DMatrix<f64>> {
    let v = DMatrix::from_fn(5, 5, |k, i| NODES[k].powi(i as i32));
    let inv = v.try_inverse().ok_or(Error::Interpolation)?;
    if !inv.iter().all(|x| x.is_finite()) {
        return Err(Error::Interpolation);
    }
    Ok(inv)
}

/// Tensor interpolation of `g` on the node grid.
pub fn interpolate(g: impl Fn(C64, C64) -> Result<Tracked>) -> Result<PolyCoeffs> {
    let vi = vandermonde_inverse()?;
    let mut vals = [[Tracked::zero(); 5]; 5];
    for (k, x) in NODES.iter().enumerate() {
        for (l, y) in NODES.iter().enumerate() {
            vals[k][l] = g(re(*x), re(*y))?;
        }
    }
    let mut a = [[Tracked::zero(); 5]; 5];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let mut acc = Tracked::zero();
            for k in 0..5 {
                for l in 0..5 {
                    acc = acc + vals[k][l].times(re(vi[(i, k)] * vi[(j, l)]));
                }
            }
            *slot = acc;
        }
    }
    Ok(PolyCoeffs { a })
}

/// `P₁` (or `P₂`) coefficients with `∂ᵤ, ∂ᵥ` of the kept variable set to 0.
pub fn poly_coefficients(cs: &CScalars, how: Elim) -> Result<PolyCoeffs> {
    interpolate(|x, y| elim_poly(cs, how, x, y, re(0.0), re(0.0)))
}

pub fn p1_coefficients(f: &CorrFrame) -> Result<PolyCoeffs> {
    poly_coefficients(&CScalars::new(f)?, Elim::C4)
}

/// Name of the monomial `c₁ⁱ yʲ`, e.g. `c1^2c2`, `1` for the constant.
pub fn label(i: usize, j: usize, y: &str) -> String {
    let part = |name: &str, k: usize| match k {
        0 => String::new(),
        1 => name.to_string(),
        _ => format!("{name}^{k}"),
    };
    let s = format!("{}{}", part("c1", i), part(y, j));
    if s.is_empty() {
        "1".into()
    } else {
        s
    }
}

/// `|x − k y| / (x.s + |k| y.s)`.
fn match_res(x: Tracked, y: Tracked, k: C64) -> Residual {
    (x - y.times(k)).residual()
}

/// The residual of interpolating then probing against direct evaluation.
fn self_check(cs: &CScalars, how: Elim, pc: &PolyCoeffs) -> Result<Residual> {
    let (x, y) = (re(PROBE.0), re(PROBE.1));
    let direct = elim_poly(cs, how, x, y, re(0.0), re(0.0))?;
    Ok(Residual::relative((pc.eval(x, y) - direct.v).norm(), direct.s.max(pc.scale())))
}

/// Claims on `P₁`: the interpolation self-check (`P1.selfcheck`), total
/// degree at most four (`P1.degree`), independence of `∂ᵤc₂, ∂ᵥc₂`
/// (`P1.pq`), the vanishing coefficients (`P1.zero.<monomial>`), all
/// coefficients (`P1.all`), the two recurrences (`P1.rec.1`, `P1.rec.2`),
/// the master relation from `c₂²` (`P1.master`) and the C-vector relations
/// read off individual coefficients (`P1.rel.<monomial>`).
pub fn p1_claims(f: &CorrFrame) -> Result<ResidualReport> {
    let cs = CScalars::new(f)?;
    let pc = poly_coefficients(&cs, Elim::C4)?;
    let p = f.point;
    let mut rep = ResidualReport::new();
    rep.push("P1.selfcheck", p, self_check(&cs, Elim::C4, &pc)?, SELF_CHECK_TOL);
    let unit = pc.scale();
    let rel = |t: Tracked| Residual::relative(t.v.norm(), unit);
    let mut deg = Residual::zero();
    let mut all = Residual::zero();
    for i in 0..5 {
        for j in 0..5 {
            if i + j > 4 {
                deg = deg.max(rel(pc.a[i][j]));
            } else {
                all = all.max(rel(pc.a[i][j]));
            }
        }
    }
    rep.push("P1.degree", p, deg, POLY_TOL);
    rep.push("P1.all", p, all, POLY_TOL);
    let (x, y) = (re(PROBE.0), re(PROBE.1));
    let base = elim_poly(&cs, Elim::C4, x, y, re(0.0), re(0.0))?;
    let moved = elim_poly(&cs, Elim::C4, x, y, C64::new(0.37, -0.21), C64::new(-0.52, 0.4))?;
    rep.push("P1.pq", p, (moved - base).residual(), POLY_TOL);
    for (i, j) in [(3, 0), (2, 0), (1, 1), (1, 0)] {
        rep.push(format!("P1.zero.{}", label(i, j, "c2")), p, rel(pc.a[i][j]), POLY_TOL);
    }
    let a = &cs.mc;
    let two = re(2.0);
    let r1 = (a[M4] * pc.a[0][3]).times(two) - a[M124] * pc.a[0][2];
    let r2 = (a[M124] * pc.a[0][1]).times(two) - a[M4] * pc.a[0][2];
    rep.push("P1.rec.1", p, r1.residual(), POLY_TOL);
    rep.push("P1.rec.2", p, r2.residual(), POLY_TOL);
    rep.push("P1.master", p, master_relation(&cs).residual(), POLY_TOL);
    for (name, t) in coefficient_relations(&cs) {
        rep.push(format!("P1.rel.{name}"), p, t.residual(), POLY_TOL);
    }
    Ok(rep)
}

/// `m·C¹₁₂₄ ∂ₓ(m·C¹ⱼ) − ∂ₓ(m·C¹₁₂₄) m·C¹ⱼ`.
pub fn wr(cs: &CScalars, x: usize, j: usize) -> Tracked {
    let a = &cs.mc;
    a[M124] * Tracked::exact(cs.dmc[x][j]) - Tracked::exact(cs.dmc[x][M124]) * a[j]
}

/// The single relation left from the coefficient of `c₂²`.
pub fn master_relation(cs: &CScalars) -> Tracked {
    let a = &cs.mc;
    let (tu, tv, n) = (cs.tu, cs.tv, cs.n);
    let (u, v, w) = (0, 1, 2);
    let disc = a[M1] * a[M1] - (a[M0] * a[M124]).times(re(4.0)) + (a[M2] * a[M4]).times(re(4.0));
    let vc = &cs.vc;
    let two = re(2.0);
    a[M124] * (vc[1][M1] + vc[0][M1].times(tu)) * disc
        + (a[M124] * wr(cs, v, M0)).times(two * tu * n)
        - (a[M4] * wr(cs, w, M2)).times(two * n)
        - (a[M2] * wr(cs, w, M4)).times(two * n)
        + (a[M124] * wr(cs, w, M0)).times(two * n)
        + (a[M4] * wr(cs, u, M2)).times(two * tv * n)
        + (a[M2] * wr(cs, u, M4)).times(two * tv * n)
        - (a[M124] * wr(cs, u, M0)).times(two * tv * n)
        - (a[M4] * wr(cs, v, M2)).times(two * tu * n)
        - (a[M2] * wr(cs, v, M4)).times(two * tu * n)
        - (a[M1] * wr(cs, v, M1)).times(tu * n)
        - (a[M1] * wr(cs, w, M1)).times(n)
        + (a[M1] * wr(cs, u, M1)).times(tv * n)
}

/// The C-vector relations read off the coefficients of `P₁`, each as
/// LHS − RHS, keyed by monomial.
pub fn coefficient_relations(cs: &CScalars) -> Vec<(&'static str, Tracked)> {
    let a = &cs.mc;
    let (tu, tv, n) = (cs.tu, cs.tv, cs.n);
    let uc = |i: usize, j: usize| cs.uc[i][j];
    let vc = |i: usize, j: usize| cs.vc[i][j];
    let (u, v, w) = (0, 1, 2);
    let two = re(2.0);
    let half = re(0.5);
    let k = (a[M124] * a[M4]).v;
    let c1_4 = uc(1, M4) + uc(0, M4).times(tu);
    let c2_4 = vc(2, M2) - vc(0, M2).times(tv);
    let c13c2 = vc(1, M4) + vc(0, M4).times(tu) - (uc(1, M1) + uc(0, M1).times(tu)).times(half);
    let c1c23 = vc(2, M1) - vc(0, M1).times(tv) - vc(0, M2).times(two * tu) - vc(1, M2).times(two);
    let c12c22 = vc(2, M4) - vc(0, M4).times(tv) + vc(0, M1).times(two * tu) + vc(1, M1).times(two)
        + uc(0, M2).times(tu)
        + uc(1, M2);
    let br = (a[M124] * a[M124]).times(two) * (uc(0, M0).times(tu) + uc(1, M0))
        - (a[M124] * a[M4] * uc(0, M2)).times(two * tu)
        - a[M1] * a[M124] * (uc(0, M1).times(tu) + uc(1, M1))
        + wr(cs, u, M4).times(two * tv * n)
        - wr(cs, v, M4).times(two * tu * n)
        - wr(cs, w, M4).times(two * n);
    let c12c2 = uc(1, M2) - br.over(two * k);
    let br = -(a[M124] * a[M124]).times(two) * (vc(0, M0).times(tu) + vc(1, M0))
        + (a[M124] * a[M4] * vc(0, M2)).times(two * tu)
        + a[M1] * a[M124] * (vc(0, M1).times(tu) + vc(1, M1))
        + wr(cs, u, M1).times(tv * n)
        - wr(cs, v, M1).times(tu * n)
        - wr(cs, w, M1).times(n);
    // the trailing term sits inside the bracket and carries 𝒰̃C¹₁ + C²₁
    let c1c22 = vc(1, M2) + (br + a[M124] * a[M2] * (uc(0, M1).times(tu) + uc(1, M1))).over(two * k);
    let br = (a[M124] * a[M0] * (vc(0, M1).times(tu) + vc(1, M1))).times(two)
        + a[M124] * (a[M2] * uc(1, M0) - a[M1] * vc(1, M0))
        + (a[M124] * (a[M2] * uc(0, M0) - a[M1] * vc(0, M0))).times(tu)
        - (a[M124] * a[M4] * vc(0, M0)).times(tv)
        + wr(cs, u, M0).times(tv * n)
        - wr(cs, v, M0).times(tu * n)
        - wr(cs, w, M0).times(n);
    let one = vc(2, M0) + br.over(k);
    vec![
        ("c1^4", c1_4),
        ("c2^4", c2_4),
        ("c1^3c2", c13c2),
        ("c1c2^3", c1c23),
        ("c1^2c2^2", c12c22),
        ("c1^2c2", c12c2),
        ("c1c2^2", c1c22),
        ("1", one),
    ]
}

/// The itemized correspondences between the coefficients of `P₂` and `P₁`
/// (`P2.map.<monomial of P₂>`), plus the interpolation self-check of `P₂`.
pub fn p2_vs_p1(f: &CorrFrame) -> Result<ResidualReport> {
    let cs = CScalars::new(f)?;
    let p1 = poly_coefficients(&cs, Elim::C4)?;
    let p2 = poly_coefficients(&cs, Elim::C2)?;
    let p = f.point;
    let mut rep = ResidualReport::new();
    rep.push("P2.selfcheck", p, self_check(&cs, Elim::C2, &p2)?, SELF_CHECK_TOL);
    let a = &cs.mc;
    let b = a[M124].v;
    let one = re(1.0);
    let zero = Tracked::zero();
    let c23 = p1.a[0][3];
    // (i, j) of c₁ⁱc₄ʲ in P₂, the P₁ coefficient it maps to and the factor
    let items: [((usize, usize), Tracked, C64); 15] = [
        ((4, 0), p1.a[0][4], one),
        ((0, 4), p1.a[4][0], one),
        ((3, 1), p1.a[1][3], -one),
        ((1, 3), p1.a[3][1], -one),
        ((2, 2), p1.a[2][2], one),
        ((3, 0), zero, one),
        ((1, 2), p1.a[1][2], one),
        ((2, 1), c23, -one),
        ((0, 3), zero, one),
        ((2, 0), c23, -a[M2].v / b),
        ((1, 1), c23, -a[M1].v / b),
        ((0, 2), c23, -a[M4].v / b),
        ((1, 0), c23, -a[M2].v * a[M1].v / (b * b)),
        ((0, 1), c23, -(b * a[M0].v + a[M2].v * a[M4].v) / (b * b)),
        ((0, 0), c23, -a[M2].v * a[M0].v / (b * b)),
    ];
    for ((i, j), y, k) in items {
        rep.push(format!("P2.map.{}", label(i, j, "c4")), p, match_res(p2.a[i][j], y, k), POLY_TOL);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn interpolation_reproduces_a_known_polynomial() {
        // 1 − 2x + 3xy² − x⁴ + 0.5i x²y² + y⁴
        let g = |x: C64, y: C64| -> Result<Tracked> {
            Ok(Tracked::exact(re(1.0) - x * 2.0 + x * y * y * 3.0 - x.powu(4) + C64::new(0.0, 0.5) * x * x * y * y + y.powu(4)))
        };
        let pc = interpolate(g).unwrap();
        let mut want = [[re(0.0); 5]; 5];
        want[0][0] = re(1.0);
        want[1][0] = re(-2.0);
        want[1][2] = re(3.0);
        want[4][0] = re(-1.0);
        want[2][2] = C64::new(0.0, 0.5);
        want[0][4] = re(1.0);
        for i in 0..5 {
            for j in 0..5 {
                assert!((pc.a[i][j].v - want[i][j]).norm() < 1e-12, "{i} {j}");
            }
        }
        let (x, y) = (C64::new(0.3, -0.2), re(1.7));
        assert!((pc.eval(x, y) - g(x, y).unwrap().v).norm() < 1e-12);
    }

    #[test]
    fn p1_claims_hold_on_backlund_data() {
        for f in [tractroid(3), sphere(3)] {
            let rep = p1_claims(&f).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
            assert!(rep.get("P1.selfcheck").unwrap().rel_residual < SELF_CHECK_TOL);
        }
    }

    #[test]
    fn identical_claims_hold_on_random_data() {
        let rep = p1_claims(&random(3, [0.9, 0.4, 0.3])).unwrap();
        for id in ["P1.selfcheck", "P1.degree", "P1.pq", "P1.zero.c1^3", "P1.rel.c1^4", "P1.rel.c2^4", "P1.rel.c1^3c2"] {
            assert!(rep.get(id).unwrap().pass, "{id}");
        }
        assert!(!rep.get("P1.master").unwrap().pass);
    }

    #[test]
    fn p2_maps_onto_p1() {
        for f in [tractroid(3), sphere(3)] {
            let rep = p2_vs_p1(&f).unwrap();
            assert_eq!(rep.records.len(), 16);
            assert!(rep.all_pass(), "{rep:?}");
        }
    }

    #[test]
    fn c4_solves_the_first_relation() {
        let f = tractroid(3);
        let cs = CScalars::new(&f).unwrap();
        let (c1, c2) = (C64::new(0.2, 0.1), C64::new(-0.4, 0.3));
        let c4 = cs.c4(c1, c2).unwrap();
        assert!(cs.first_relation(c1, c2, c4).residual().rel < 1e-12);
        assert!((cs.c2(c1, c4).unwrap() - c2).norm() < 1e-10);
    }
}
