//! Property checks over randomly drawn inputs.

use contactroll::contact::{contact_suite, ContactJet};
use contactroll::correspondence::relations::r1_residuals;
use contactroll::correspondence::{tiom_residuals, CorrFrame};
use contactroll::kernel::{alpha, alpha_inv, re, Cx3, C64};
use contactroll::report::{ResidualRecord, ResidualReport, Residual};
use contactroll::scenarios::{backlund_field, parse_complex, BacklundSeed};
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn cx3() -> impl Strategy<Value = Cx3> {
    (c64(), c64(), c64()).prop_map(|(a, b, c)| Cx3::new(a, b, c))
}

/// A point of the default box, away from the special fiber w = 0.
fn point() -> impl Strategy<Value = [f64; 3]> {
    (0.6..1.4f64, 0.7..1.5f64, 0.2..1.0f64).prop_map(|(u, v, w)| [u, v, w])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alpha_is_a_lie_homomorphism(a in cx3(), b in cx3()) {
        let (ma, mb) = (alpha(&a), alpha(&b));
        let bracket = ma.mul_mat(&mb).sub_mat(&mb.mul_mat(&ma));
        let scale = 1.0 + a.herm_norm() * b.herm_norm();
        prop_assert!(alpha(&a.cross(&b)).sub_mat(&bracket).herm_norm() < 1e-12 * scale);
        prop_assert!((alpha_inv(&ma).unwrap() - a.clone()).herm_norm() < 1e-12 * (1.0 + a.herm_norm()));
    }

    #[test]
    fn parse_complex_round_trips(z in c64()) {
        let s = format!("{}{:+}i", z.re, z.im);
        prop_assert_eq!(parse_complex(&s).unwrap(), z);
    }

    #[test]
    fn contact_equations_hold_on_the_tractroid(p in point(), sigma in 0.3..1.2f64) {
        let f = backlund_field(BacklundSeed::Tractroid, re(sigma)).unwrap();
        let cj = ContactJet::new(&f, p[0], p[1], p[2], 2).unwrap();
        let r = contact_suite(&cj, None).unwrap();
        prop_assert!(r.all_pass(), "{:?}", r.records);
    }

    #[test]
    fn frame_solution_holds_for_any_constants(p in point(), c1 in c64(), c2 in c64(), c4 in c64()) {
        let f = backlund_field(BacklundSeed::Tractroid, re(0.6)).unwrap();
        let x = CorrFrame::build(&ContactJet::new(&f, p[0], p[1], p[2], 2).unwrap()).unwrap();
        prop_assert!(tiom_residuals(&x, c1, c2, c4).max_rel() < 1e-8);
    }

    #[test]
    fn r1_holds_on_the_sphere(p in point()) {
        let f = backlund_field(BacklundSeed::Sphere, C64::new(0.0, 0.5)).unwrap();
        let x = CorrFrame::build(&ContactJet::new(&f, p[0], p[1], p[2], 3).unwrap()).unwrap();
        prop_assert!(r1_residuals(&x).unwrap().max_rel() < 1e-7);
    }

    #[test]
    fn perturbation_breaks_integrability(p in point(), eps in 1e-3..1e-1f64) {
        let f = backlund_field(BacklundSeed::Tractroid, re(0.6)).unwrap().perturbed(eps);
        let cj = ContactJet::new(&f, p[0], p[1], p[2], 2).unwrap();
        prop_assert!(!contact_suite(&cj, None).unwrap().all_pass());
    }

    #[test]
    fn reports_round_trip_through_json(rels in prop::collection::vec(0.0..1e-3f64, 1..8), tol in 1e-9..1e-5f64) {
        let mut rep = ResidualReport::new();
        for (k, r) in rels.iter().enumerate() {
            rep.push(format!("eq4.line{k}"), [k as f64, 0.5, 0.25], Residual::relative(*r, 1.0), tol);
        }
        let back: Vec<ResidualRecord> = serde_json::from_str(&serde_json::to_string(&rep.records).unwrap()).unwrap();
        prop_assert_eq!(back.len(), rep.records.len());
        for (a, b) in back.iter().zip(&rep.records) {
            prop_assert_eq!(a.check_id.clone(), b.check_id.clone());
            prop_assert_eq!(a.pass, b.pass);
            prop_assert_eq!(a.rel_residual, b.rel_residual);
        }
    }
}
