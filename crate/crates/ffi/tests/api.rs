use std::ffi::{CStr, CString};
use std::ptr;

use conflictlens_ffi::*;

fn last_error() -> String {
    let p = cl_last_error();
    assert!(!p.is_null(), "no error recorded");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    cl_string_free(s);
    out
}

fn fixture(name: &str, horizon: i64) -> *mut ClScenario {
    let n = CString::new(name).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { cl_scenario_fixture(n.as_ptr(), horizon, &mut sc) }, ClStatus::Ok);
    assert!(!sc.is_null());
    sc
}

#[test]
fn resolves_the_bundled_scenarios() {
    for (name, verdict, level) in [("highway_ex3", 0, 0), ("highway_ex4", 1, 1), ("highway_ex7", 1, 4)] {
        let sc = fixture(name, -1);
        let mut r = ptr::null_mut();
        unsafe {
            assert_eq!(cl_resolve(sc, 4, 0, &mut r), ClStatus::Ok);
            assert_eq!(cl_report_verdict(r), verdict, "{name}");
            assert_eq!(cl_report_level(r), level, "{name}");
            assert!(cl_report_strategy_count(r) > 0);
            let json: serde_json::Value = serde_json::from_str(&take(cl_report_json(r))).unwrap();
            assert_eq!(json["strategy_count"].as_u64().unwrap() as usize, cl_report_strategy_count(r));
            let chain: serde_json::Value = serde_json::from_str(&take(cl_explain_json(r))).unwrap();
            assert!(chain["chain"].is_array());
            assert!(!take(cl_explain_text(r)).is_empty());
            cl_report_free(r);
            cl_scenario_free(sc);
        }
    }
}

#[test]
fn detection_only_and_capped_levels() {
    let sc = fixture("highway_ex6", -1);
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(cl_resolve(sc, 0, 0, &mut r), ClStatus::Ok);
        assert_eq!(cl_report_verdict(r), 2);
        assert!(cl_report_cause_count(r) > 0);
        cl_report_free(r);
        assert_eq!(cl_resolve(sc, 2, 0, &mut r), ClStatus::Ok);
        assert_eq!(cl_report_verdict(r), 2);
        assert_eq!(cl_report_level(r), 0);
        cl_report_free(r);
        assert_eq!(cl_resolve(sc, 5, 0, &mut r), ClStatus::InvalidInput);
        assert!(r.is_null());
        assert!(last_error().contains("max_level"));
        cl_scenario_free(sc);
    }
}

#[test]
fn parse_reports_diagnostics() {
    let bad = CString::new("HORIZON 2\nVARS\n  x : 0..1\nGOALS_A\n  g : G<=1 y = 1\n").unwrap();
    let mut sc = ptr::null_mut();
    unsafe {
        assert_eq!(cl_scenario_parse(bad.as_ptr(), -1, &mut sc), ClStatus::InvalidInput);
        assert!(sc.is_null());
        assert!(last_error().contains('y'), "{}", last_error());

        let good = CString::new(conflictlens::scenario::fixture("highway_ex5").unwrap()).unwrap();
        assert_eq!(cl_scenario_parse(good.as_ptr(), 3, &mut sc), ClStatus::Ok);
        assert!(cl_last_error().is_null());
        assert_eq!(cl_scenario_horizon(sc), 3);
        cl_scenario_free(sc);

        assert_eq!(cl_scenario_parse(good.as_ptr(), 1, &mut sc), ClStatus::InvalidInput);
        let missing = CString::new("highway_ex99").unwrap();
        assert_eq!(cl_scenario_fixture(missing.as_ptr(), -1, &mut sc), ClStatus::InvalidInput);
        assert!(last_error().contains("highway_ex99"));
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(cl_scenario_parse(ptr::null(), -1, &mut sc), ClStatus::NullArgument);
        let t = CString::new("HORIZON 1").unwrap();
        assert_eq!(cl_scenario_parse(t.as_ptr(), -1, ptr::null_mut()), ClStatus::NullArgument);
        let mut r = ptr::null_mut();
        assert_eq!(cl_resolve(ptr::null(), 4, 0, &mut r), ClStatus::NullArgument);
        let latin1 = [b'H', 0xe9, 0];
        assert_eq!(cl_scenario_parse(latin1.as_ptr().cast(), -1, &mut sc), ClStatus::InvalidUtf8);
        assert_eq!(cl_report_verdict(ptr::null()), -1);
        assert_eq!(cl_report_level(ptr::null()), -1);
        assert_eq!(cl_report_strategy_count(ptr::null()), 0);
        assert!(cl_report_json(ptr::null()).is_null());
        assert_eq!(cl_scenario_horizon(ptr::null()), 0);
        cl_report_free(ptr::null_mut());
        cl_scenario_free(ptr::null_mut());
        cl_string_free(ptr::null_mut());
    }
}

#[test]
fn solves_dimacs() {
    let mut sat = false;
    unsafe {
        let f = CString::new("p cnf 2 2\n1 2 0\n-1 0\n").unwrap();
        assert_eq!(cl_solve_dimacs(f.as_ptr(), &mut sat), ClStatus::Ok);
        assert!(sat);
        let f = CString::new("p cnf 1 2\n1 0\n-1 0\n").unwrap();
        assert_eq!(cl_solve_dimacs(f.as_ptr(), &mut sat), ClStatus::Ok);
        assert!(!sat);
        let f = CString::new("p cnf 1 1\n2 0\n").unwrap();
        assert_eq!(cl_solve_dimacs(f.as_ptr(), &mut sat), ClStatus::InvalidInput);
        assert_eq!(cl_solve_dimacs(f.as_ptr(), ptr::null_mut()), ClStatus::NullArgument);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(cl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn seeds_do_not_change_reports() {
    let sc = fixture("highway_ex4", -1);
    let mut jsons = Vec::new();
    for seed in [0, 17, 4242] {
        cl_set_seed(seed);
        let mut r = ptr::null_mut();
        unsafe {
            assert_eq!(cl_resolve(sc, 4, 0, &mut r), ClStatus::Ok);
            jsons.push(take(cl_report_json(r)));
            cl_report_free(r);
        }
    }
    cl_set_seed(0);
    unsafe { cl_scenario_free(sc) };
    assert!(jsons.windows(2).all(|w| w[0] == w[1]));
}
