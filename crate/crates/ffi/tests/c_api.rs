use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use wop_core::model::fixtures::t1;
use wop_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { wop_string_free(s) };
    out
}

fn last_error() -> String {
    let p = wop_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn load_t1() -> *mut WopInstance {
    let json = CString::new(t1().to_json()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wop_instance_from_json(json.as_ptr(), &mut h) }, WopStatus::Ok);
    h
}

const S1: &str = r#"{"a1":{"location":"Floor","slot":0,"level":0},
 "a2":{"location":"Floor","slot":0,"level":1},
 "a3":{"location":"Shelf","slot":0,"level":0},
 "b1":{"location":"Floor","slot":1,"level":0}}"#;

#[test]
fn instance_round_trip_and_counts() {
    let h = load_t1();
    unsafe {
        assert_eq!(wop_instance_num_items(h), 4);
        assert_eq!(wop_instance_num_locations(h), 2);
        let mut out = ptr::null_mut();
        assert_eq!(wop_instance_to_json(h, &mut out), WopStatus::Ok);
        assert_eq!(take(out), t1().to_json());
        let mut feasible = false;
        let mut report = ptr::null_mut();
        assert_eq!(wop_instance_validate(h, &mut feasible, &mut report), WopStatus::Ok);
        assert!(feasible);
        assert!(take(report).contains("\"feasible\":true"));
        wop_instance_free(h);
        assert_eq!(wop_instance_num_items(ptr::null()), 0);
    }
}

#[test]
fn objectives_of_s1() {
    let h = load_t1();
    let sol = CString::new(S1).unwrap();
    let (mut o1, mut o2) = (0i64, 0i64);
    unsafe {
        assert_eq!(wop_objectives(h, sol.as_ptr(), &mut o1, &mut o2), WopStatus::Ok);
        let mut feasible = false;
        let mut report = ptr::null_mut();
        assert_eq!(
            wop_check_solution(h, sol.as_ptr(), &mut feasible, &mut report),
            WopStatus::Ok
        );
        assert!(feasible);
        take(report);
        wop_instance_free(h);
    }
    assert_eq!((o1, o2), (20, 11));
}

#[test]
fn incomplete_solution_is_reported() {
    let h = load_t1();
    let sol = CString::new(r#"{"a1":{"location":"Floor","slot":0,"level":0}}"#).unwrap();
    unsafe {
        let mut feasible = true;
        let mut report = ptr::null_mut();
        assert_eq!(
            wop_check_solution(h, sol.as_ptr(), &mut feasible, &mut report),
            WopStatus::Ok
        );
        assert!(!feasible);
        assert!(take(report).contains("incomplete"));
        let (mut o1, mut o2) = (0, 0);
        assert_eq!(
            wop_objectives(h, sol.as_ptr(), &mut o1, &mut o2),
            WopStatus::MalformedSolution
        );
        wop_instance_free(h);
    }
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("{\"locations\": [").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(wop_instance_from_json(bad.as_ptr(), &mut h), WopStatus::Parse);
        assert!(h.is_null());
        assert!(last_error().contains("line"));
        assert_eq!(wop_instance_from_json(ptr::null(), &mut h), WopStatus::NullArgument);
        let mut out = ptr::null_mut();
        assert_eq!(wop_instance_to_json(ptr::null(), &mut out), WopStatus::NullArgument);
    }
}

#[test]
fn oracle_limit_surfaces() {
    let spec = CString::new(r#"{"num_locations":4,"num_items":124,"num_types":3,"seed":7}"#).unwrap();
    let mut h = ptr::null_mut();
    let mut witness = ptr::null_mut();
    unsafe {
        assert_eq!(
            wop_generate_instance(spec.as_ptr(), &mut h, &mut witness),
            WopStatus::Ok
        );
        let witness = CString::new(take(witness)).unwrap();
        let mut feasible = false;
        let mut report = ptr::null_mut();
        assert_eq!(
            wop_check_solution(h, witness.as_ptr(), &mut feasible, &mut report),
            WopStatus::Ok
        );
        assert!(feasible);
        take(report);
        let mut out = ptr::null_mut();
        assert_eq!(
            wop_run_qi4wop(h, WOP_BACKEND_EXACT, ptr::null(), &mut out),
            WopStatus::OracleLimit
        );
        assert!(out.is_null());
        assert!(last_error().starts_with("oracle-limit"));
        assert_eq!(wop_run_qi4wop(h, 42, ptr::null(), &mut out), WopStatus::InvalidConfig);
        wop_instance_free(h);
    }
}

#[test]
fn pipelines_run() {
    let h = load_t1();
    let cfg = CString::new(r#"{"sampler":{"num_samples":10,"seed":3}}"#).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            wop_run_qi4wop(h, WOP_BACKEND_ANNEAL, cfg.as_ptr(), &mut out),
            WopStatus::Ok
        );
        let pop: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(!pop["solutions"].as_array().unwrap().is_empty());

        let poc = CString::new(r#"{"init_mode":"qi4wop","local_search_budget_ms":200,"seed":5}"#).unwrap();
        assert_eq!(wop_run_poc(h, WOP_BACKEND_EXACT, poc.as_ptr(), &mut out), WopStatus::Ok);
        let result: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(result["best_final"]["score"], 28);
        wop_instance_free(h);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(wop_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/wop_ffi.h");
    let src = format!("#include \"{header}\"\nint main(void) {{ return wop_version() == 0; }}\n");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("probe.c");
    std::fs::write(&file, src).unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&file)
        .status()
    else {
        eprintln!("no C compiler on PATH; header check skipped");
        return;
    };
    assert!(status.success());
}
