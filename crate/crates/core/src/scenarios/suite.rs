//! Named check groups evaluated over scenario grids, the seeded identity
//! property suite and residual sweeps over isometric pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{backlund_field, make_isometric_pair, make_surface, parse_complex, random_tangent_field, BacklundSeed, PairKind, SurfaceParams};
use crate::contact::{contact_suite, ContactField, ContactJet, Grid2, CONTACT_TOL};
use crate::correspondence::abc::{abc_checks, abc_decompose, RELATIONS};
use crate::correspondence::cascade::{cascade_checks, r3_residual, CASCADE_TOL};
use crate::correspondence::poly::{p1_claims, p2_vs_p1};
use crate::correspondence::relations::{mtcj_checks, r1_residuals, ALGEBRAIC_TOL};
use crate::correspondence::{tiom_residuals, ww1_invariant, CorrFrame, FRAME_TOL};
use crate::error::{Error, Result};
use crate::forms::{fund_identity_residual, fund_particular_residual, Form1, Space};
use crate::kernel::{alpha, trace_pairing, Cx3, Vec3, C64};
use crate::report::{Residual, ResidualReport, Terms};
use crate::surface::{roll, rolling_residuals};

/// Check groups accepted by `--checks`, in evaluation order.
pub const CHECK_GROUPS: [&str; 16] =
    ["eq4", "eq5", "eq6", "eq7", "cons", "tiom", "ww1", "L3", "mtcj", "R1", "P1", "P2", "det", "F", "R3", "abc"];

/// Groups run when no `--checks` is given: the contact suite.
pub const DEFAULT_CHECKS: [&str; 5] = ["eq4", "eq5", "eq6", "eq7", "cons"];

/// Constants `(c₁, c₂, c₄)` at which the frame equations are checked.
pub const TIOM_CONSTANTS: [C64; 3] = [C64::new(0.3, 0.1), C64::new(-0.7, 0.2), C64::new(0.5, -0.4)];

/// `(c₁, c₂, ∂ᵤc₂, ∂ᵥc₂)` at which the second-derivative system is checked.
pub const CASCADE_CONSTANTS: [C64; 4] = [C64::new(0.3, 0.1), C64::new(-0.7, 0.2), C64::new(0.4, -0.3), C64::new(-0.2, 0.5)];

/// Default `(u, v, w)` box of a scenario grid, around the keystone point (0.8, 1.1, 0.4).
/// The slice w = 0 is avoided: on the tractroid several C-vector
/// combinations vanish there identically.
pub const DEFAULT_DOMAIN: [[f64; 2]; 3] = [[0.6, 1.4], [0.7, 1.5], [0.2, 1.0]];

/// The keystone point.
pub const KEYSTONE: [f64; 3] = [0.8, 1.1, 0.4];

/// Jet order needed by a check group.
pub fn group_order(group: &str) -> Result<u8> {
    match group {
        "eq4" | "eq5" | "eq6" | "eq7" | "cons" => Ok(2),
        "tiom" | "ww1" | "L3" | "mtcj" | "R1" | "P1" | "P2" | "abc" => Ok(3),
        "det" | "F" | "R3" => Ok(4),
        _ => Err(Error::Unknown { kind: "check group", name: group.to_string() }),
    }
}

/// A scenario run: which field, where, and which checks.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `pseudosphere` (alias `tractroid`), `sphere` or `random_tangent`.
    pub scenario: String,
    /// Bäcklund angle, written `a`, `bi` or `a+bi`; `None` picks 0.6 on the
    /// tractroid and 0.5i on the sphere.
    pub sigma: Option<String>,
    /// Seed surface of `random_tangent`.
    pub surface: String,
    pub seed: u64,
    /// Points per axis of the `(u, v, w)` grid.
    pub grid: [usize; 3],
    pub domain: [[f64; 2]; 3],
    /// Check groups; empty means [`DEFAULT_CHECKS`].
    pub checks: Vec<String>,
    /// Amplitude of the perturbation added to `V` (0 for none).
    pub perturb: f64,
    /// Tolerance override for every record.
    pub tol: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: "pseudosphere".into(),
            sigma: None,
            surface: "sphere".into(),
            seed: 7,
            grid: [9, 9, 5],
            domain: DEFAULT_DOMAIN,
            checks: Vec::new(),
            perturb: 0.0,
            tol: None,
        }
    }
}

impl ScenarioConfig {
    pub fn sigma(&self) -> Result<C64> {
        match &self.sigma {
            Some(s) => parse_complex(s),
            None => Ok(match self.scenario.as_str() {
                "sphere" => C64::new(0.0, 0.5),
                _ => C64::new(0.6, 0.0),
            }),
        }
    }

    pub fn field(&self) -> Result<ContactField> {
        let f = match self.scenario.as_str() {
            "random_tangent" => random_tangent_field(make_surface(&self.surface, &SurfaceParams::default())?, self.seed),
            name => backlund_field(BacklundSeed::from_name(name)?, self.sigma()?)?,
        };
        Ok(if self.perturb != 0.0 { f.perturbed(self.perturb) } else { f })
    }

    /// Check groups to run, validated.
    pub fn groups(&self) -> Result<Vec<String>> {
        let gs: Vec<String> = if self.checks.is_empty() {
            DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect()
        } else {
            self.checks.clone()
        };
        for g in &gs {
            group_order(g)?;
        }
        Ok(gs)
    }

    /// Grid points in (u, v, w) lexicographic order.
    pub fn points(&self) -> Result<Vec<[f64; 3]>> {
        if self.grid.contains(&0) {
            return Err(Error::Invalid("grid sizes must be positive".into()));
        }
        let axes: Vec<Vec<f64>> = (0..3).map(|k| crate::contact::linspace(self.domain[k], self.grid[k])).collect();
        let mut out = Vec::new();
        for &u in &axes[0] {
            for &v in &axes[1] {
                for &w in &axes[2] {
                    out.push([u, v, w]);
                }
            }
        }
        Ok(out)
    }
}

fn keep(rep: ResidualReport, prefix: &str) -> ResidualReport {
    ResidualReport { records: rep.records.into_iter().filter(|r| r.check_id.starts_with(prefix)).collect() }
}

/// Evaluate `groups` on `field` at one point. A group that cannot be
/// evaluated contributes one failing record carrying the error.
pub fn point_checks(field: &ContactField, p: [f64; 3], groups: &[String]) -> ResidualReport {
    let mut rep = ResidualReport::new();
    let order = groups.iter().filter_map(|g| group_order(g).ok()).max().unwrap_or(2);
    let frame = ContactJet::new(field, p[0], p[1], p[2], order);
    let cj = match frame {
        Ok(cj) => cj,
        Err(e) => {
            for g in groups {
                rep.push_failed(g.as_str(), p, &e, CONTACT_TOL);
            }
            return rep;
        }
    };
    let corr = if order >= 3 { Some(CorrFrame::build(&cj)) } else { None };
    let mut contact: Option<Result<ResidualReport>> = None;
    for g in groups {
        let [c1, c2, c4] = TIOM_CONSTANTS;
        let [k1, k2, kp, kq] = CASCADE_CONSTANTS;
        let out: Result<ResidualReport> = match g.as_str() {
            "eq4" | "eq5" | "eq6" | "eq7" | "cons" => {
                contact.get_or_insert_with(|| contact_suite(&cj, None)).clone().map(|r| keep(r, g))
            }
            other => match corr.as_ref().expect("frame built for order ≥ 3") {
                Err(e) => Err(e.clone()),
                Ok(f) => match other {
                    "tiom" => Ok(tiom_residuals(f, c1, c2, c4)),
                    "ww1" => ww1_invariant(f).map(|r| {
                        let mut x = ResidualReport::new();
                        x.push("ww1", p, r, FRAME_TOL);
                        x
                    }),
                    "L3" | "mtcj" => mtcj_checks(f).map(|r| keep(r, g)),
                    "R1" => r1_residuals(f),
                    "P1" => p1_claims(f),
                    "P2" => p2_vs_p1(f),
                    "det" => cascade_checks(f, k1, k2, kp, kq).map(|r| {
                        let mut d = keep(r.clone(), "det.");
                        d.extend(keep(r, "D."));
                        d
                    }),
                    "F" => cascade_checks(f, k1, k2, kp, kq).map(|r| keep(r, "F.")),
                    "R3" => r3_residual(f, k1, k2, kp, kq).map(|r| {
                        let mut x = ResidualReport::new();
                        x.push("R3", p, r, CASCADE_TOL);
                        x
                    }),
                    "abc" => abc_checks(f),
                    _ => unreachable!("groups are validated"),
                },
            },
        };
        match out {
            Ok(r) => rep.extend(r),
            Err(e) => rep.push_failed(g.as_str(), p, &e, CONTACT_TOL),
        }
    }
    rep
}

/// Run a scenario over its grid in parallel; records are sorted by
/// (check_id, point) so the result does not depend on scheduling.
pub fn run_report(cfg: &ScenarioConfig) -> Result<ResidualReport> {
    let field = cfg.field()?;
    let groups = cfg.groups()?;
    let points = cfg.points()?;
    let parts: Vec<ResidualReport> = points.par_iter().map(|&p| point_checks(&field, p, &groups)).collect();
    let mut rep = ResidualReport::new();
    for r in parts {
        rep.extend(r);
    }
    if let Some(t) = cfg.tol {
        rep.retolerate(t);
    }
    rep.sort();
    Ok(rep)
}

/// Tolerance of the kernel and form identities.
pub const IDENTITY_TOL: f64 = 1e-12;

fn rc(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rv(rng: &mut ChaCha8Rng) -> Cx3 {
    Vec3::new(rc(rng), rc(rng), rc(rng))
}

/// Seeded property suite on `samples` random complex samples: `alpha.hom`
/// (`α(a×b) = [α(a), α(b)]`), `alpha.trace` (`½tr(α(a)ᵀα(b)) = a·b`),
/// `fund.general` and `fund.particular` (both forms of the wedge identity),
/// then the A/B/C zero claims (`abc.<id>.zero`) on random tangential data
/// at up to 20 random points. The sample index is stored in `point[0]`.
pub fn identity_suite(seed: u64, samples: usize) -> Result<ResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ResidualReport::new();
    for k in 0..samples {
        let p = [k as f64, 0.0, 0.0];
        let (a, b) = (rv(&mut rng), rv(&mut rng));
        let (ma, mb) = (alpha(&a), alpha(&b));
        let comm = ma.mul_mat(&mb).sub_mat(&mb.mul_mat(&ma));
        let lhs = alpha(&a.cross(&b));
        let d = lhs.sub_mat(&comm).herm_norm();
        rep.push("alpha.hom", p, Residual::relative(d, lhs.herm_norm() + comm.herm_norm()), IDENTITY_TOL);
        let t = Terms::new().add(trace_pairing(&ma, &mb)).sub(a.dot(&b));
        rep.push("alpha.trace", p, t.residual(), IDENTITY_TOL);
        let w1 = Form1 { space: Space::Uvw, c: (0..3).map(|_| rv(&mut rng)).collect() };
        let w2 = Form1 { space: Space::Uvw, c: (0..3).map(|_| rv(&mut rng)).collect() };
        rep.push("fund.general", p, fund_identity_residual(&a, &b, &w1, &w2)?.residual(), IDENTITY_TOL);
        rep.push("fund.particular", p, fund_particular_residual(&a, &b, &w1)?, IDENTITY_TOL);
    }
    let field = random_tangent_field(make_surface("sphere", &SurfaceParams::default())?, seed);
    let mut done = 0;
    while done < samples.min(20) {
        let p = [rng.gen_range(0.5..2.6), rng.gen_range(-2.5..2.5), rng.gen_range(-3.0..3.0)];
        let Ok(cj) = ContactJet::new(&field, p[0], p[1], p[2], 3) else { continue };
        let Ok(f) = CorrFrame::build(&cj) else { continue };
        done += 1;
        for id in RELATIONS {
            let d = abc_decompose(&f, id)?;
            if let Some(part) = d.zero_part() {
                rep.push(format!("abc.{id}.zero"), p, part.residual(), ALGEBRAIC_TOL);
            }
        }
    }
    rep.sort();
    Ok(rep)
}

/// Rolling residual `check` (`eq2.flat`, `eq2.tangent`, `eq2.perp`) over an
/// `n × m` grid of the pair's domain, inset by 5% on each side.
pub fn pair_grid(pair: &PairKind, check: &str, n: usize, m: usize) -> Result<ResidualReport> {
    if !["eq2.flat", "eq2.tangent", "eq2.perp"].contains(&check) {
        return Err(Error::Unknown { kind: "grid check", name: check.to_string() });
    }
    let (x0, x) = make_isometric_pair(pair)?;
    let d = x0.domain;
    let inset = |r: [f64; 2]| {
        let h = 0.05 * (r[1] - r[0]);
        [r[0] + h, r[1] - h]
    };
    let grid = Grid2 { u: inset(d[0]), v: inset(d[1]), n: [n, m] };
    let pts: Vec<(f64, f64)> = grid.us().into_iter().flat_map(|u| grid.vs().into_iter().map(move |v| (u, v))).collect();
    let parts: Vec<ResidualReport> = pts
        .par_iter()
        .map(|&(u, v)| {
            let out = roll(&x0, &x, u, v, 3).and_then(|f| rolling_residuals(&f, &f.seed));
            match out {
                Ok(r) => keep(r, check),
                Err(e) => {
                    let mut r = ResidualReport::new();
                    r.push_failed(check, [u, v, 0.0], &e, 1e-8);
                    r
                }
            }
        })
        .collect();
    let mut rep = ResidualReport::new();
    for r in parts {
        rep.extend(r);
    }
    rep.sort();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_groups_and_scenarios_are_refused() {
        let cfg = ScenarioConfig { checks: vec!["eq9".into()], ..Default::default() };
        assert!(matches!(cfg.groups(), Err(Error::Unknown { .. })));
        let cfg = ScenarioConfig { scenario: "torus".into(), ..Default::default() };
        assert!(matches!(cfg.field(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn default_sigma_follows_the_seed() {
        assert_eq!(ScenarioConfig::default().sigma().unwrap(), C64::new(0.6, 0.0));
        let s = ScenarioConfig { scenario: "sphere".into(), ..Default::default() };
        assert_eq!(s.sigma().unwrap(), C64::new(0.0, 0.5));
    }

    #[test]
    fn grid_points_cover_the_box() {
        let cfg = ScenarioConfig { grid: [2, 3, 1], ..Default::default() };
        let p = cfg.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], [0.6, 0.7, 0.2]);
        assert_eq!(p[5], [1.4, 1.5, 0.2]);
        let bad = ScenarioConfig { grid: [0, 3, 1], ..Default::default() };
        assert!(bad.points().is_err());
    }

    #[test]
    fn config_json_uses_defaults() {
        let cfg: ScenarioConfig = serde_json::from_str(r#"{"scenario":"sphere","sigma":"0.5i"}"#).unwrap();
        assert_eq!(cfg.grid, [9, 9, 5]);
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn keystone_point_passes_the_contact_groups() {
        let f = ScenarioConfig::default().field().unwrap();
        let gs: Vec<String> = DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect();
        let r = point_checks(&f, KEYSTONE, &gs);
        assert_eq!(r.records.len(), 7);
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn pair_grids_pass_and_refuse_unknown_checks() {
        let r = pair_grid(&PairKind::CatenoidHelicoid, "eq2.flat", 4, 3).unwrap();
        assert_eq!(r.records.len(), 12);
        assert!(r.all_pass(), "{r:?}");
        assert!(pair_grid(&PairKind::PlaneCylinder, "eq2.bogus", 2, 2).is_err());
    }

    #[test]
    fn identity_suite_is_deterministic() {
        let a = identity_suite(3, 5).unwrap();
        assert_eq!(a, identity_suite(3, 5).unwrap());
        assert!(a.all_pass());
    }
}
