//! Scenario runs end to end through the library API.

use contactroll::scenarios::suite::{identity_suite, pair_grid, run_report, ScenarioConfig, CHECK_GROUPS, KEYSTONE};
use contactroll::scenarios::PairKind;

fn small(scenario: &str, surface: &str, checks: &[&str]) -> ScenarioConfig {
    ScenarioConfig {
        scenario: scenario.into(),
        surface: surface.into(),
        grid: [2, 2, 2],
        checks: checks.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    }
}

#[test]
fn default_groups_pass_on_both_seeds() {
    for s in ["pseudosphere", "sphere"] {
        let rep = run_report(&small(s, "sphere", &[])).unwrap();
        assert_eq!(rep.records.len(), 8 * 7);
        assert!(rep.all_pass(), "{s}");
    }
}

#[test]
fn every_group_yields_records_at_the_keystone() {
    let mut cfg = small("pseudosphere", "sphere", &CHECK_GROUPS);
    cfg.grid = [1, 1, 1];
    cfg.domain = [[KEYSTONE[0]; 2], [KEYSTONE[1]; 2], [KEYSTONE[2]; 2]];
    let rep = run_report(&cfg).unwrap();
    for g in CHECK_GROUPS {
        let prefix = match g {
            "eq4" | "eq5" | "eq6" | "eq7" | "cons" | "tiom" | "ww1" | "mtcj" | "R1" | "P1" | "P2" | "abc" | "R3" => g.to_string(),
            "L3" => "L3.".into(),
            "det" => "det.".into(),
            "F" => "F.".into(),
            _ => unreachable!(),
        };
        assert!(!rep.with_prefix(&prefix).is_empty(), "{g}");
    }
    let failing: Vec<_> = rep.records.iter().filter(|r| !r.pass).map(|r| r.check_id.as_str()).collect();
    assert!(failing.iter().all(|id| *id == "R3" || id.starts_with("abc.R2-2.")), "{failing:?}");
}

#[test]
fn random_data_violates_integrability() {
    let rep = run_report(&small("random_tangent", "ellipsoid", &["eq4", "eq6"])).unwrap();
    assert!(rep.get("eq4.line1").is_some());
    assert!(!rep.all_pass());
    assert!(rep.with_prefix("eq4.line1").iter().all(|r| r.pass));
}

#[test]
fn reports_are_deterministic_and_sorted() {
    let cfg = small("pseudosphere", "sphere", &["eq4", "tiom"]);
    let a = run_report(&cfg).unwrap();
    let b = run_report(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&a.records).unwrap(), serde_json::to_string(&b.records).unwrap());
    let keys: Vec<_> = a.records.iter().map(|r| (r.check_id.clone(), r.point.map(|x| (x * 1e9) as i64))).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn tolerance_override_applies_to_every_record() {
    let mut cfg = small("pseudosphere", "sphere", &["eq5"]);
    cfg.tol = Some(1e-30);
    let rep = run_report(&cfg).unwrap();
    assert!(rep.records.iter().all(|r| r.tolerance == 1e-30));
}

#[test]
fn every_pair_rolls_without_slipping() {
    for pair in [PairKind::CatenoidHelicoid, PairKind::PlaneCylinder, PairKind::rigid_default()] {
        for check in ["eq2.flat", "eq2.tangent", "eq2.perp"] {
            let rep = pair_grid(&pair, check, 4, 4).unwrap();
            assert_eq!(rep.records.len(), 16);
            assert!(rep.all_pass(), "{pair:?} {check}");
        }
    }
}

#[test]
fn identity_suite_scales_with_samples() {
    let rep = identity_suite(3, 50).unwrap();
    assert_eq!(rep.with_prefix("alpha.hom").len(), 50);
    assert!(rep.all_pass());
}
