mod common;

use common::fixtures::{bundled, bundled_json, from_json, toy_json};
use ies_core::harness::validate_schedule;
use ies_core::milp::{parse_lp, write_lp, SolveOptions};
use ies_core::scheduler::{
    apply_mode, build_model, load_scenario, renewables, solve_scenario, variable_census, ChanceFormulation, Mode,
};
use ies_core::Error;

#[test]
fn bundled_case_shape() {
    let s = bundled("paper_case");
    assert_eq!(s.thermal_units.len(), 4);
    assert_eq!(s.chp_units.len(), 2);
    assert_eq!(s.horizon, 24);
    assert_eq!(s.mode, Some(Mode::new(3).unwrap()));
    let r = bundled("reduced_case");
    assert_eq!(r.horizon, 6);
    assert_eq!(r.elec_load, s.elec_load[8..14].to_vec());
}

#[test]
fn unit_limit_error_names_the_unit() {
    let mut v = bundled_json("paper_case");
    v["thermal_units"][2]["p_min"] = 45.0.into();
    match from_json(&v) {
        Err(Error::Scenario { field, msg }) => {
            assert_eq!(field, "thermal_units[2]");
            assert!(msg.contains("G3"), "{msg}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn mode_two_needs_a_battery() {
    let mut v = bundled_json("paper_case");
    v["bess"] = serde_json::Value::Null;
    v["mode"] = 2.into();
    match from_json(&v) {
        Err(Error::Scenario { field, .. }) => assert_eq!(field, "bess"),
        other => panic!("unexpected {other:?}"),
    }
    v["mode"] = 1.into();
    assert!(from_json(&v).is_ok());
}

#[test]
fn parse_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"horizon\": 1,").unwrap();
    assert!(matches!(load_scenario(&p), Err(Error::ScenarioParse { .. })));
    std::fs::write(&p, "{\"horizon\": 1, \"surprise\": 2}").unwrap();
    assert!(matches!(load_scenario(&p), Err(Error::ScenarioParse { .. })));
    assert!(matches!(load_scenario(dir.path().join("missing.json")), Err(Error::Io(_))));
}

#[test]
fn census_matches_model() {
    let base = bundled("paper_case");
    for mode in Mode::ALL {
        for form in [ChanceFormulation::Binary, ChanceFormulation::Quantile] {
            let mut s = apply_mode(&base, mode);
            s.chance_formulation = form;
            let ren = renewables(&s).unwrap();
            let model = build_model(&s).unwrap();
            assert_eq!(model.num_vars(), variable_census(&s, &ren), "mode {mode} {form}");
        }
    }
}

#[test]
fn mode_one_has_no_storage_variables() {
    let s = apply_mode(&bundled("paper_case"), Mode::new(1).unwrap());
    let model = build_model(&s).unwrap();
    for v in &model.vars {
        for p in ["bess_", "hst_", "boiler_"] {
            assert!(!v.name.starts_with(p), "{}", v.name);
        }
    }
}

#[test]
fn single_period_toy_dispatch() {
    let load = 32.0;
    let s = from_json(&toy_json(load)).unwrap();
    let out = solve_scenario(&s, &SolveOptions::default()).unwrap();
    let sched = out.schedule.unwrap();
    assert!((sched.thermal[0].power[0] - load).abs() < 1e-9);
    assert!(sched.total_reserve[0].abs() < 1e-12);
    assert!(sched.heat_load[0].abs() < 1e-9);
    // chord of the parabola between grid points 30 and 35 (8 segments on [10, 50])
    let f = |p: f64| 0.012 * p * p + 17.82 * p + 10.15;
    let want = f(30.0) + (f(35.0) - f(30.0)) * (load - 30.0) / 5.0;
    assert!((sched.objective - want).abs() < 1e-9, "{} vs {want}", sched.objective);
    assert!((sched.costs.total - f(load)).abs() < 1e-9);
}

#[test]
fn full_model_schedule_is_consistent() {
    let s = bundled("paper_case");
    let out = solve_scenario(&s, &SolveOptions::default()).unwrap();
    let sched = out.schedule.unwrap();
    let rep = validate_schedule(&s, &sched, 1e-6).unwrap();
    assert!(rep.pass, "{:?}", rep.failures());

    let gap = sched.objective - sched.costs.total;
    assert!(gap >= -1e-6 && gap <= sched.pwl_gap_bound + 1e-6, "gap {gap} bound {}", sched.pwl_gap_bound);

    let b = s.bess.unwrap();
    assert_eq!(*sched.bess.as_ref().unwrap().soc.last().unwrap(), b.s_min);
    for (u, c) in s.chp_units.iter().zip(&sched.chp) {
        assert_eq!(*c.hst_level.as_ref().unwrap().last().unwrap(), u.hst.unwrap().c_min);
    }
    let res_use: f64 = sched.renewable_used.iter().sum();
    let expected: f64 = sched.renewable_expected.iter().sum();
    assert!((expected - res_use - sched.total_curtailment()).abs() < 1e-6);
}

#[test]
fn lp_export_round_trip() {
    let s = bundled("paper_case");
    let model = build_model(&s).unwrap();
    let text = write_lp(&model);
    let back = parse_lp(&text).unwrap();
    assert_eq!(back.num_vars(), model.num_vars());
    assert_eq!(back.num_constraints(), model.num_constraints());
    assert_eq!(back.num_binaries(), model.num_binaries());
    assert_eq!(write_lp(&back), text);
}
