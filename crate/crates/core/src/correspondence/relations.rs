//! First consequences of flatness: the row structure of the linear system
//! in the derivatives of `c₁, c₂, c₄`, the relations among the `C`-vectors
//! and the ten relations R1.

use nalgebra::DMatrix;

use super::{CorrFrame, Tracked, FRAME_TOL, M0, M1, M124, M2, M4, MONOMIALS};
use crate::error::Result;
use crate::jets::{Jet, U, V, W};
use crate::kernel::{Cx3, Vec3, C64};
use crate::report::{Residual, ResidualReport, Terms};

/// Tolerance of the identities that hold for arbitrary tangential fields.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Tolerance of the R1 relations.
pub const R1_TOL: f64 = 1e-7;

/// A vector built from signed terms, tracking the sum of term magnitudes.
#[derive(Clone, Debug)]
pub struct VTerms {
    pub sum: Cx3,
    pub scale: f64,
}

impl VTerms {
    pub fn new() -> Self {
        VTerms { sum: Cx3::zero(), scale: 0.0 }
    }
    pub fn add(mut self, x: &Cx3) -> Self {
        self.scale += x.herm_norm();
        self.sum = &self.sum + x;
        self
    }
    pub fn sub(mut self, x: &Cx3) -> Self {
        self.scale += x.herm_norm();
        self.sum = &self.sum - x;
        self
    }
    pub fn add_s(self, s: C64, x: &Cx3) -> Self {
        self.add(&x.scale_c(s))
    }
    /// `y·sum` with scale `|y| Σ|terms|`.
    pub fn dot(&self, y: &Cx3) -> (C64, f64) {
        (y.dot(&self.sum), y.herm_norm() * self.scale)
    }
}

impl Default for VTerms {
    fn default() -> Self {
        Self::new()
    }
}

fn dv(x: &Vec3<Jet>, var: usize) -> Result<Cx3> {
    Ok(x.try_map(|j| j.derivative(var))?.value())
}

/// `y·Cⁱⱼ` with the scale `|y|·Σ|terms of Cⁱⱼ|`.
fn ydot(f: &CorrFrame, y: &Cx3, i: usize, j: usize) -> Result<Tracked> {
    let c = f.cvec()?;
    Ok(Tracked { v: y.dot(&c[i][j].value()), s: y.herm_norm() * f.cscale[i][j] })
}

/// The 9×7 coefficient matrix of the system in
/// `(∂ᵤc₁, ∂ᵥc₁, ∂_wc₁, −∂ᵤc₂𝒱̃+∂_wc₂, ∂ᵥc₂, ∂ᵤc₄, ∂ᵥc₄𝒰̃+∂_wc₄)`, rows
/// `L₁…L₉` with rows 1, 2, 4, 5, 7, 8 divided by `N₀·(𝒰×𝒱)`.
pub fn l_matrix(f: &CorrFrame) -> DMatrix<C64> {
    let (a, b) = (f.a.value(), f.b.value());
    let (tu, tv) = (f.tu.value(), f.tv.value());
    let z = Cx3::zero();
    let g = &a.scale_c(tv) + &b.scale_c(tu);
    let neg = |x: &Cx3| x.scale_c(C64::new(-1.0, 0.0));
    let eqs: [[Cx3; 7]; 3] = [
        [neg(&b), neg(&a), z.clone(), z.clone(), neg(&b), a.clone(), z.clone()],
        [g.clone(), z.clone(), neg(&a), neg(&b), z.clone(), a.scale_c(-tu), z.clone()],
        [z.clone(), neg(&g), neg(&b), z.clone(), b.scale_c(-tv), z.clone(), a.clone()],
    ];
    let ys = projectors(f);
    DMatrix::from_fn(9, 7, |r, c| ys[r % 3].dot(&eqs[r / 3][c]))
}

/// Row projectors `(𝒰×N₀)/n, (𝒱×N₀)/n, N₀`.
pub fn projectors(f: &CorrFrame) -> [Cx3; 3] {
    let n = f.n.value();
    [f.ux_n().value().scale_c(1.0 / n), f.vx_n().value().scale_c(1.0 / n), f.n0.value()]
}

/// The four vanishing row combinations as weights on `L₁…L₉`.
pub fn l3_combinations(f: &CorrFrame) -> [[C64; 9]; 4] {
    let (su, sv) = (f.su.value(), f.sv.value());
    let (tu, tv) = (f.tu.value(), f.tv.value());
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut k = [[z; 9]; 4];
    for e in 0..3 {
        k[e][3 * e + 2] = one;
        k[e][3 * e] = sv;
        k[e][3 * e + 1] = -su;
    }
    k[3][6] = one;
    k[3][4] = one;
    k[3][0] = -tv;
    k[3][1] = tu;
    k
}

/// Row combination `e` applied to the augmented column of monomial `j`.
pub fn combination_on(f: &CorrFrame, e: usize, j: usize) -> Result<Tracked> {
    let ys = projectors(f);
    let w = l3_combinations(f)[e];
    let mut acc = Tracked { v: C64::new(0.0, 0.0), s: 0.0 };
    for (r, wr) in w.iter().enumerate() {
        if wr.norm() == 0.0 {
            continue;
        }
        acc = acc.plus(ydot(f, &ys[r % 3], r / 3, j)?.times(*wr));
    }
    Ok(acc)
}

/// Singular values of the coefficient matrix, largest first.
pub fn l_singular_values(f: &CorrFrame) -> Vec<f64> {
    let m = l_matrix(f);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Checks of the row structure and of the relations among the C-vectors:
/// `L3.rank`, `L3.rows`, `L3.4.<j>`, `L3.2.<j>`, `L3.3.<j>`, `L3.quad.<e>`,
/// `mtcj.2.<j>`, `mtcj.3.<j>`, `mtcj.t.<j>`.
pub fn mtcj_checks(f: &CorrFrame) -> Result<ResidualReport> {
    let p = f.point;
    let mut rep = ResidualReport::new();
    let s = l_singular_values(f);
    // rank 5: the sixth singular value vanishes relative to the fifth
    rep.push("L3.rank", p, Residual::relative(s[5], s[4]), ALGEBRAIC_TOL);
    let m = l_matrix(f);
    let mut rows = Residual::zero();
    for w in l3_combinations(f) {
        for c in 0..7 {
            // scale by the row norms: exact zeros in a column leave no terms
            let mut sum = C64::new(0.0, 0.0);
            let mut scale = 0.0;
            for r in 0..9 {
                sum += w[r] * m[(r, c)];
                scale += w[r].norm() * m.row(r).iter().map(|x| x.norm()).sum::<f64>();
            }
            rows = rows.max(Residual::relative(sum.norm(), scale));
        }
    }
    rep.push("L3.rows", p, rows, ALGEBRAIC_TOL);
    let (tu, tv) = (f.tu.value(), f.tv.value());
    for (j, name) in MONOMIALS.iter().enumerate() {
        let k1 = combination_on(f, 0, j)?;
        let k2 = combination_on(f, 1, j)?;
        let k3 = combination_on(f, 2, j)?;
        let k4 = combination_on(f, 3, j)?;
        rep.push(format!("L3.4.{name}"), p, k4.residual(), ALGEBRAIC_TOL);
        rep.push(format!("L3.2.{name}"), p, k2.plus(k1.times(tu)).residual(), FRAME_TOL);
        rep.push(format!("L3.3.{name}"), p, k3.plus(k1.times(-tv)).residual(), FRAME_TOL);
    }
    // quadratic coefficients
    let m2 = f.m.value().dot(&f.m.value());
    let mm2 = f.mm.value() * f.mm.value();
    let q = m2 / mm2;
    let vw = f.vw.value();
    let n0 = f.n0.value();
    let expected = [
        -q * f.n.value(),
        q * n0.dot(&vw.cross(&f.cu.value())),
        -q * n0.dot(&vw.cross(&f.cv.value())),
    ];
    for (e, want) in expected.iter().enumerate() {
        let got = combination_on(f, e, M124)?;
        let r = Terms::new().add(got.v).sub(*want);
        rep.push(format!("L3.quad.{}", e + 1), p, r.residual(), FRAME_TOL);
    }
    let mv = f.m.value();
    let (ux, vx, wx) = (f.ux_n().value(), f.vx_n().value(), f.wx_n().value());
    for (j, name) in [(M0, "0"), (M1, "1"), (M2, "2"), (M4, "4")] {
        let m1 = ydot(f, &mv, 0, j)?;
        let r2 = ydot(f, &mv, 1, j)?.plus(m1.times(tu));
        let r3 = ydot(f, &mv, 2, j)?.plus(m1.times(-tv));
        let rt = ydot(f, &wx, 0, j)?.times(C64::new(-1.0, 0.0)).plus(ydot(f, &ux, 2, j)?).plus(ydot(f, &vx, 1, j)?);
        rep.push(format!("mtcj.2.{name}"), p, r2.residual(), FRAME_TOL);
        rep.push(format!("mtcj.3.{name}"), p, r3.residual(), FRAME_TOL);
        rep.push(format!("mtcj.t.{name}"), p, rt.residual(), FRAME_TOL);
    }
    Ok(rep)
}

/// The ten relations R1 as tracked scalars, in the printed order.
pub fn r1_values(f: &CorrFrame) -> Result<[Tracked; 10]> {
    let (a, b) = (&f.a, &f.b);
    let (wu1, wv1, ww1) = (f.wu1.value(), f.wv1.value(), f.ww1.value());
    let (av, bv) = (a.value(), b.value());
    let (tu, tv) = (f.tu.value(), f.tv.value());
    let g = &av.scale_c(tv) + &bv.scale_c(tu);
    let (au, avv, aw) = (dv(a, U)?, dv(a, V)?, dv(a, W)?);
    let (bu, bvv, bw) = (dv(b, U)?, dv(b, V)?, dv(b, W)?);
    let tvj = |var| -> Result<C64> { Ok(f.tv.derivative(var)?.value()) };
    let tuj = |var| -> Result<C64> { Ok(f.tu.derivative(var)?.value()) };
    let m = f.m.value();
    let (wx, vx, ux) = (f.wx_n().value(), f.vx_n().value(), f.ux_n().value());
    // ∂ᵤ(𝒱̃a), ∂ᵥ(𝒰̃b), etc. expanded by the product rule
    let d_tv_a_u = &au.scale_c(tv) + &av.scale_c(tvj(U)?);
    let d_tu_b_v = &bvv.scale_c(tu) + &bv.scale_c(tuj(V)?);
    let d_tv_b_v = &bvv.scale_c(tv) + &bv.scale_c(tvj(V)?);
    let d_tu_a_u = &au.scale_c(tu) + &av.scale_c(tuj(U)?);
    let (wu1_v, wu1_w, wv1_u, wv1_w, ww1_u, ww1_v) =
        (dv(&f.wu1, V)?, dv(&f.wu1, W)?, dv(&f.wv1, U)?, dv(&f.wv1, W)?, dv(&f.ww1, U)?, dv(&f.ww1, V)?);
    let vt = || VTerms::new();
    let one = C64::new(1.0, 0.0);
    let curv_uv = vt().add(&wv1_u).sub(&wu1_v).add(&wu1.cross(&wv1));
    let curv_uw = vt().add(&ww1_u).sub(&wu1_w).add(&wu1.cross(&ww1));
    let curv_wv = vt().add(&wv1_w).sub(&ww1_v).add(&ww1.cross(&wv1));
    let merge = |x: VTerms, s: C64, y: &VTerms| VTerms { sum: &x.sum + &y.sum.scale_c(s), scale: x.scale + s.norm() * y.scale };

    let r1 = vt()
        .add_s(tv, &au)
        .add_s(-tu, &avv)
        .sub(&aw)
        .add(&av.cross(&ww1))
        .add(&wu1.cross(&g))
        .add_s(tu, &av.cross(&wv1))
        .add_s(-tu, &wu1.cross(&bv));
    let r2 = vt()
        .add_s(tv, &bu)
        .add_s(-tu, &bvv)
        .sub(&bw)
        .add(&bv.cross(&ww1))
        .add_s(tv, &wu1.cross(&bv))
        .add_s(tu, &bv.cross(&wv1));
    let r3 = merge(curv_uw.clone(), tu, &curv_uv);
    // the c₁-part of ω̃ᵥ is −ω̃_{uc₂}
    let wvc1 = bv.scale_c(-one);
    let r4 = vt()
        .add_s(tv, &bu)
        .add_s(-tu, &bvv)
        .sub(&bw)
        .add(&g.cross(&wv1))
        .add(&ww1.cross(&wvc1))
        .add_s(-tv, &av.cross(&wv1))
        .add_s(tv, &wu1.cross(&bv));
    let r5 = vt()
        .add_s(tv, &au)
        .add_s(-tu, &avv)
        .sub(&aw)
        .add_s(-tu, &wv1.cross(&av))
        .add(&av.cross(&ww1))
        .add_s(tv, &wu1.cross(&av));
    let r6 = merge(curv_wv.clone(), -tv, &curv_uv);
    let tr = |x: &VTerms, y: &Cx3| Tracked::from_pair(x.dot(y));
    let r7 = tr(&vt().add(&bu).add(&avv).sub(&av.cross(&wv1)).add(&wu1.cross(&bv)), &wx)
        .plus(tr(
            &vt().add(&d_tv_a_u).add_s(tu, &bu).sub(&aw).add(&av.cross(&ww1)).add(&wu1.cross(&g)),
            &vx,
        ))
        .plus(tr(
            &vt().sub(&bw).add_s(-tv, &avv).sub(&d_tu_b_v).add(&g.cross(&wv1)).sub(&ww1.cross(&bv)),
            &ux,
        ));
    let r8 = tr(&vt().add(&bvv).sub(&bv.cross(&wv1)), &wx)
        .plus(tr(&vt().add_s(tv, &bu).sub(&bw).add(&bv.cross(&ww1)).add_s(tv, &wu1.cross(&bv)), &vx))
        .plus(tr(&vt().sub(&d_tv_b_v).add_s(tv, &bv.cross(&wv1)), &ux));
    let r9 = tr(&vt().add(&au).add(&wu1.cross(&av)), &wx)
        .times(-one)
        .plus(tr(&vt().sub(&d_tu_a_u).add_s(-tu, &wu1.cross(&av)), &vx))
        .plus(tr(&vt().add(&aw).add_s(tu, &avv).add_s(-tu, &av.cross(&wv1)).add(&ww1.cross(&av)), &ux));
    let r10 = tr(&curv_uv, &wx).times(-one).plus(tr(&curv_uw, &vx)).plus(tr(&curv_wv, &ux));
    Ok([
        tr(&r1, &m),
        tr(&r2, &m),
        tr(&r3, &m),
        tr(&r4, &m),
        tr(&r5, &m),
        tr(&r6, &m),
        r7,
        r8,
        r9,
        r10,
    ])
}

/// The ten relations R1 as records `R1.1` … `R1.10`.
pub fn r1_residuals(f: &CorrFrame) -> Result<ResidualReport> {
    let mut rep = ResidualReport::new();
    for (i, t) in r1_values(f)?.iter().enumerate() {
        rep.push(format!("R1.{}", i + 1), f.point, t.residual(), R1_TOL);
    }
    Ok(rep)
}

/// Least-squares proportionality `x ≈ k y` over samples; returns the
/// fitted factor and the worst relative misfit `|xᵢ − k yᵢ| / (|xᵢ| + |k yᵢ|)`
/// scaled by the sample term scales.
pub fn fit_proportional(x: &[Tracked], y: &[Tracked]) -> (C64, f64) {
    let num: C64 = x.iter().zip(y).map(|(a, b)| a.v * b.v.conj()).sum();
    let den: f64 = y.iter().map(|b| b.v.norm_sqr()).sum();
    let k = if den > 0.0 { num / den } else { C64::new(0.0, 0.0) };
    let worst = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a.v - k * b.v).norm() / (a.s + k.norm() * b.s).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    (k, worst)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    const RANDOM_POINTS: [[f64; 3]; 4] = [[0.9, 0.4, 0.3], [1.3, -0.8, 1.7], [2.0, 1.9, -0.6], [0.7, 2.4, 2.2]];

    #[test]
    fn row_structure_holds_on_any_data() {
        for p in RANDOM_POINTS {
            let rep = mtcj_checks(&random(3, p)).unwrap();
            for id in ["L3.rank", "L3.rows", "L3.4.1", "L3.4.2", "L3.4.4", "L3.4.124", "L3.quad.1", "L3.quad.2", "L3.quad.3"] {
                assert!(rep.get(id).unwrap().pass, "{id} at {p:?}");
            }
        }
    }

    #[test]
    fn proportionalities_hold_on_backlund_data_only() {
        for f in [tractroid(3), sphere(3)] {
            let rep = mtcj_checks(&f).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
        }
        let rep = mtcj_checks(&random(3, RANDOM_POINTS[0])).unwrap();
        assert!(!rep.get("L3.2.0").unwrap().pass);
    }

    #[test]
    fn r1_vanishes_on_backlund_data() {
        for f in [tractroid(3), sphere(3)] {
            let rep = r1_residuals(&f).unwrap();
            assert_eq!(rep.records.len(), 10);
            assert!(rep.all_pass(), "{rep:?}");
        }
        assert!(!r1_residuals(&random(3, RANDOM_POINTS[0])).unwrap().all_pass());
    }

    #[test]
    fn r1_equivalences_on_random_data() {
        let vals: Vec<[Tracked; 10]> = RANDOM_POINTS.iter().map(|&p| r1_values(&random(3, p)).unwrap()).collect();
        for (a, b) in [(0, 4), (1, 3)] {
            let x: Vec<_> = vals.iter().map(|r| r[a]).collect();
            let y: Vec<_> = vals.iter().map(|r| r[b]).collect();
            let (k, misfit) = fit_proportional(&x, &y);
            assert!(misfit < 1e-9, "R1.{} vs R1.{}: {misfit:e}", a + 1, b + 1);
            assert!((k - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn proportional_fit_recovers_the_factor() {
        let y = [Tracked::exact(C64::new(1.0, 2.0)), Tracked::exact(C64::new(-0.5, 0.0))];
        let k = C64::new(0.0, 3.0);
        let x = y.map(|t| t.times(k));
        let (got, misfit) = fit_proportional(&x, &y);
        assert!((got - k).norm() < 1e-15 && misfit < 1e-15);
    }
}
