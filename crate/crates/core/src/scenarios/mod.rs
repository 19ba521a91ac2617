//! Built-in analytic surfaces, isometric pairs and contact fields.
//!
//! Every closed form is written directly on jets, so all partials are exact.
//! The Bäcklund field on a surface of constant curvature `K = −1/ρ²` is
//! `V = ρ sin σ (cos w e₁ + sin w e₂)` with `𝐦 = ρ cos σ`, where `(e₁, e₂)` is
//! the Gram–Schmidt frame of `(∂ᵤx₀, ∂ᵥx₀)`; `ρ = 1` on the tractroid and
//! `ρ = i` on the unit sphere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::kernel::{re, Vec3, C64};
use crate::contact::{param_jets, tangent_frame, ContactField, MSource};
use crate::surface::{ParametricSurface, SurfaceJet};

pub mod suite;

/// Names accepted by [`make_surface`].
pub const SURFACE_NAMES: [&str; 8] =
    ["plane", "sphere", "tractroid", "catenoid", "helicoid", "cylinder", "ellipsoid", "random_trig"];

/// Numeric parameters of the surface family.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SurfaceParams {
    /// Ellipsoid semi-axes.
    pub axes: [f64; 3],
    /// Seed of `random_trig`.
    pub seed: u64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        SurfaceParams { axes: [1.0, 1.5, 2.0], seed: 7 }
    }
}

fn c(x: f64) -> Jet {
    Jet::constant(re(x))
}

fn sech(t: &Jet) -> Result<Jet> {
    t.cosh().recip_j()
}

/// Default tractroid domain: the cusp circle at u = 0 is excluded by a band
/// of width 0.2.
pub const TRACTROID_DOMAIN: [[f64; 2]; 2] = [[0.2, 3.0], [-PI, PI]];

pub fn make_surface(name: &str, p: &SurfaceParams) -> Result<ParametricSurface> {
    let s = match name {
        "plane" => ParametricSurface::new(name, [[-3.0, 3.0], [-3.0, 3.0]], |u, v| {
            Ok(Vec3::new(u.clone(), v.clone(), c(0.0)))
        }),
        "sphere" => ParametricSurface::new(name, [[0.2, PI - 0.2], [-PI, PI]], |u, v| {
            let su = u.sin();
            Ok(Vec3::new(&su * &v.cos(), &su * &v.sin(), u.cos()))
        }),
        "tractroid" => ParametricSurface::new(name, TRACTROID_DOMAIN, |u, v| {
            let s = sech(u)?;
            let th = u.sinh().mul_j(&s);
            Ok(Vec3::new(&s * &v.cos(), &s * &v.sin(), u - &th))
        }),
        "catenoid" => ParametricSurface::new(name, [[-2.0, 2.0], [-PI, PI]], |u, v| {
            let ch = u.cosh();
            Ok(Vec3::new(&ch * &v.cos(), &ch * &v.sin(), u.clone()))
        }),
        "helicoid" => ParametricSurface::new(name, [[-2.0, 2.0], [-PI, PI]], |u, v| {
            let sh = u.sinh();
            Ok(Vec3::new(&sh * &v.sin(), -(&sh * &v.cos()), v.clone()))
        }),
        "cylinder" => ParametricSurface::new(name, [[-PI, PI], [-3.0, 3.0]], |u, v| {
            Ok(Vec3::new(u.cos(), u.sin(), v.clone()))
        }),
        "ellipsoid" => {
            let [a, b, cc] = p.axes;
            ParametricSurface::new(name, [[0.2, PI - 0.2], [-PI, PI]], move |u, v| {
                let su = u.sin();
                Ok(Vec3::new(&(&su * &v.cos()) * a, &(&su * &v.sin()) * b, u.cos() * cc))
            })
        }
        "random_trig" => {
            let terms = random_trig_terms(p.seed);
            ParametricSurface::new(name, [[-1.0, 1.0], [-1.0, 1.0]], move |u, v| {
                let mut h = c(0.0);
                for &(amp, j, k, phase) in &terms {
                    let arg = &(&(u * j) + &(v * k)) + phase;
                    h = &h + &(arg.cos() * amp);
                }
                Ok(Vec3::new(u.clone(), v.clone(), h))
            })
        }
        _ => return Err(Error::Unknown { kind: "surface", name: name.to_string() }),
    };
    Ok(s)
}

/// Terms `amp · cos(j u + k v + phase)` of the random graph surface.
fn random_trig_terms(seed: u64) -> Vec<(f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for j in 0..=2 {
        for k in 0..=2 {
            if j + k == 0 {
                continue;
            }
            let amp = rng.gen_range(-0.25..0.25) / (j + k) as f64;
            let phase = rng.gen_range(0.0..2.0 * PI);
            out.push((amp, j as f64, k as f64, phase));
        }
    }
    out
}

/// Isometric pairs with a shared parametrization.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum PairKind {
    CatenoidHelicoid,
    PlaneCylinder,
    /// `x = Q x₀ + c` over the catenoid.
    RigidMotion { q: [[f64; 3]; 3], c: [f64; 3] },
}

impl PairKind {
    /// A rotation by 0.7 about (1, 2, 2)/3 followed by a translation.
    pub fn rigid_default() -> PairKind {
        let axis = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let (s, co) = (0.7f64.sin(), 0.7f64.cos());
        let mut q = [[0.0; 3]; 3];
        let k = [[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                let kk: f64 = (0..3).map(|l| k[i][l] * k[l][j]).sum();
                q[i][j] = if i == j { 1.0 } else { 0.0 } + s * k[i][j] + (1.0 - co) * kk;
            }
        }
        PairKind::RigidMotion { q, c: [0.5, -1.0, 2.0] }
    }

    pub fn from_name(name: &str) -> Result<PairKind> {
        match name {
            "catenoid_helicoid" => Ok(PairKind::CatenoidHelicoid),
            "plane_cylinder" => Ok(PairKind::PlaneCylinder),
            "rigid_motion" => Ok(PairKind::rigid_default()),
            _ => Err(Error::Unknown { kind: "isometric pair", name: name.to_string() }),
        }
    }
}

pub fn make_isometric_pair(kind: &PairKind) -> Result<(ParametricSurface, ParametricSurface)> {
    let p = SurfaceParams::default();
    match kind {
        PairKind::CatenoidHelicoid => Ok((make_surface("catenoid", &p)?, make_surface("helicoid", &p)?)),
        PairKind::PlaneCylinder => {
            let cyl = make_surface("cylinder", &p)?;
            let plane = make_surface("plane", &p)?.with_domain(cyl.domain);
            Ok((plane, cyl))
        }
        PairKind::RigidMotion { q, c: t } => {
            let base = make_surface("catenoid", &p)?;
            let inner = base.clone();
            let (q, t) = (*q, *t);
            let moved = ParametricSurface::new("rigid_motion", base.domain, move |u, v| {
                let x = inner.eval(u, v)?;
                let row = |i: usize| {
                    let mut acc = c(t[i]);
                    for j in 0..3 {
                        acc = &acc + &(&x.0[j] * q[i][j]);
                    }
                    acc
                };
                Ok(Vec3::new(row(0), row(1), row(2)))
            });
            Ok((base, moved))
        }
    }
}

/// Parse a complex number written as `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Invalid(format!("cannot parse complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(k, ch)| (ch == '+' || ch == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
            .map(|(k, _)| k)
            .last();
        let (re_part, im_part) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im_part {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse::<f64>().map_err(|_| bad())?,
        };
        let re_v = re_part.parse::<f64>().map_err(|_| bad())?;
        Ok(C64::new(re_v, im))
    } else {
        Ok(re(t.parse::<f64>().map_err(|_| bad())?))
    }
}

/// Seeds carrying a Bäcklund field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacklundSeed {
    Tractroid,
    Sphere,
}

impl BacklundSeed {
    pub fn from_name(name: &str) -> Result<BacklundSeed> {
        match name {
            "tractroid" | "pseudosphere" => Ok(BacklundSeed::Tractroid),
            "sphere" => Ok(BacklundSeed::Sphere),
            _ => Err(Error::Unknown { kind: "Bäcklund seed", name: name.to_string() }),
        }
    }

    /// `ρ` with `K = −1/ρ²`.
    pub fn rho(self) -> C64 {
        match self {
            BacklundSeed::Tractroid => re(1.0),
            BacklundSeed::Sphere => C64::new(0.0, 1.0),
        }
    }
}

/// The Bäcklund field of angle `σ` on the tractroid or the unit sphere.
pub fn backlund_field(seed: BacklundSeed, sigma: C64) -> Result<ContactField> {
    let name = match seed {
        BacklundSeed::Tractroid => "tractroid",
        BacklundSeed::Sphere => "sphere",
    };
    let surface = make_surface(name, &SurfaceParams::default())?;
    let rho = seed.rho();
    let amp = rho * sigma.sin();
    let mm = rho * sigma.cos();
    let v_rule = move |sj: &SurfaceJet, w: &Jet| -> Result<Vec3<Jet>> {
        let (e1, e2) = tangent_frame(sj)?;
        Ok((&(&e1 * &w.cos()) + &(&e2 * &w.sin())).scale_c(amp))
    };
    let m_rule = ContactField::m_rule(move |_, _, _| Ok(Jet::constant(mm)));
    Ok(ContactField::new(format!("backlund_{name}"), surface, v_rule, m_rule))
}

/// A random trigonometric tangent field `V = a e₁ + b e₂` on `surface` with
/// `𝐦` solved from the first integrability equation.
pub fn random_tangent_field(surface: ParametricSurface, seed: u64) -> ContactField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = |base: f64| -> (f64, Vec<([f64; 3], f64, f64)>) {
        let terms = (0..3)
            .map(|_| {
                let k = [rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64, rng.gen_range(1..=2) as f64];
                (k, rng.gen_range(0.05..0.2), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        (base, terms)
    };
    let a = modes(0.6);
    let b = modes(0.3);
    let eval = |(base, terms): &(f64, Vec<([f64; 3], f64, f64)>), u: &Jet, v: &Jet, w: &Jet| -> Jet {
        let mut acc = c(*base);
        for (k, amp, ph) in terms {
            let arg = &(&(&(u * k[0]) + &(v * k[1])) + &(w * k[2])) + *ph;
            acc = &acc + &(&arg.cos() * *amp);
        }
        acc
    };
    let v_rule = move |sj: &SurfaceJet, w: &Jet| -> Result<Vec3<Jet>> {
        let (e1, e2) = tangent_frame(sj)?;
        let (u, v) = param_jets(sj);
        // rotate with w so that ∂_wV stays transverse to V
        let (ca, sa) = (eval(&a, &u, &v, w), eval(&b, &u, &v, w));
        let (cw, sw) = (w.cos(), w.sin());
        let x = &(&ca * &cw) - &(&sa * &sw);
        let y = &(&ca * &sw) + &(&sa * &cw);
        Ok(&(&e1 * &x) + &(&e2 * &y))
    };
    ContactField::new(format!("random_tangent_{seed}"), surface, v_rule, MSource::FromIntegrability { reference: re(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::fd_oracle;
    use crate::surface::{isometry_residual, surface_jet};

    #[test]
    fn unknown_names_are_refused() {
        assert!(matches!(make_surface("torus", &SurfaceParams::default()), Err(Error::Unknown { .. })));
        assert!(PairKind::from_name("nope").is_err());
    }

    #[test]
    fn random_trig_is_reproducible() {
        let p = SurfaceParams::default();
        let a = make_surface("random_trig", &p).unwrap().jet(0.1, 0.2, 3).unwrap();
        let b = make_surface("random_trig", &p).unwrap().jet(0.1, 0.2, 3).unwrap();
        for i in 0..3 {
            assert_eq!(a.0[i].coeffs(), b.0[i].coeffs());
        }
    }

    #[test]
    fn surface_jets_match_finite_differences() {
        let p = SurfaceParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let multis: Vec<[u8; 2]> =
            (0..=3u8).flat_map(|a| (0..=3 - a).map(move |b| [a, b])).filter(|m| m[0] + m[1] > 0).collect();
        for name in SURFACE_NAMES {
            let s = make_surface(name, &p).unwrap();
            let [[u0, u1], [v0, v1]] = s.domain;
            for _ in 0..25 {
                let u = rng.gen_range(u0 + 0.05..u1 - 0.05);
                let v = rng.gen_range(v0 + 0.05..v1 - 0.05);
                let jet = s.jet(u, v, 3).unwrap();
                for comp in 0..3 {
                    let f = |x: &[f64]| s.point(x[0], x[1]).unwrap().0[comp];
                    for m in &multis {
                        let fd = fd_oracle(&f, &[u, v], m, 1e-2);
                        let ex = jet.0[comp].extract_partial(m).unwrap();
                        assert!((fd - ex).norm() < 1e-6, "{name} {m:?} {fd} {ex}");
                    }
                }
            }
        }
    }

    #[test]
    fn pairs_are_isometric() {
        for kind in [PairKind::CatenoidHelicoid, PairKind::PlaneCylinder, PairKind::rigid_default()] {
            let (a, b) = make_isometric_pair(&kind).unwrap();
            for (u, v) in [(0.3, 0.4), (-0.5, 1.0), (1.1, -0.7)] {
                let r = isometry_residual(&a, &b, u, v).unwrap();
                assert!(r.iter().all(|z| z.norm() < 1e-10), "{kind:?}");
            }
        }
    }

    #[test]
    fn ellipsoid_curvature_is_positive() {
        let s = make_surface("ellipsoid", &SurfaceParams::default()).unwrap();
        assert!(surface_jet(&s, 1.0, 0.5, 2).unwrap().k.value().re > 0.0);
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_complex("1+2i").unwrap(), C64::new(1.0, 2.0));
        assert_eq!(parse_complex("-1.5-0.25i").unwrap(), C64::new(-1.5, -0.25));
        assert_eq!(parse_complex("0.6").unwrap(), re(0.6));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("1e-3+2e-1i").unwrap(), C64::new(1e-3, 0.2));
        assert!(parse_complex("abc").is_err());
    }
}
