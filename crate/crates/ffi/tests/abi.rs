use std::ffi::{CStr, CString};
use std::ptr;

use operad_forge_ffi::*;

fn cstr(p: *const std::ffi::c_char) -> String {
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn builtin_handles_and_duals() {
    unsafe {
        let name = CString::new("lie").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(of_presentation_builtin(name.as_ptr(), &mut p), OfStatus::Ok);
        let mut d = ptr::null_mut();
        assert_eq!(of_presentation_koszul_dual(p, &mut d), OfStatus::Ok);
        // Lie(3) = 2, Com(3) = 1
        let mut n = 0usize;
        assert_eq!(of_presentation_component_dim(p, 3, &mut n), OfStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(of_presentation_component_dim(d, 3, &mut n), OfStatus::Ok);
        assert_eq!(n, 1);
        let mut ok = false;
        assert_eq!(of_koszulity_check(p, 1, 3, &mut ok), OfStatus::Ok);
        assert!(ok);
        of_presentation_free(d);
        of_presentation_free(p);
        of_presentation_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("nope").unwrap();
        assert_eq!(of_presentation_builtin(bad.as_ptr(), &mut p), OfStatus::Usage);
        assert!(p.is_null());
        assert!(cstr(of_last_error()).contains("nope"));
        assert_eq!(of_presentation_builtin(ptr::null(), &mut p), OfStatus::NullArgument);
        let junk = CString::new("{\"name\": 3}").unwrap();
        assert_eq!(of_presentation_from_json(junk.as_ptr(), &mut p), OfStatus::MalformedInput);
        let com = CString::new("com").unwrap();
        assert_eq!(of_presentation_builtin(com.as_ptr(), &mut p), OfStatus::Ok);
        assert!(of_last_error().is_null());
        let mut n = 0usize;
        assert_eq!(of_presentation_component_dim(p, 9, &mut n), OfStatus::BoundExceeded);
        of_presentation_free(p);
    }
}

#[test]
fn json_presentation_round_trip() {
    let text = r#"{"name":"com","generators":[{"name":"m","degree":0,"symmetry":"symmetric"}],"relations":[[1,-1,0],[0,1,-1]]}"#;
    unsafe {
        let j = CString::new(text).unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(of_presentation_from_json(j.as_ptr(), &mut p), OfStatus::Ok, "{}", cstr(of_last_error()));
        let mut n = 0usize;
        assert_eq!(of_presentation_component_dim(p, 3, &mut n), OfStatus::Ok);
        assert_eq!(n, 1);
        of_presentation_free(p);
    }
}

#[test]
fn hochschild_matches_hkr() {
    let (mut dim, mut hkr) = (0usize, 0usize);
    // ∂x∧∂y spans HH²₋₂ of k[x,y]
    assert_eq!(unsafe { of_hochschild_dim(2, 3, 2, -2, &mut dim, &mut hkr) }, OfStatus::Ok);
    assert_eq!((dim, hkr), (1, 1));
}

fn run(args: &[&str]) -> (i32, String) {
    let owned: Vec<CString> = args.iter().map(|a| CString::new(*a).unwrap()).collect();
    let ptrs: Vec<*const std::ffi::c_char> = owned.iter().map(|c| c.as_ptr()).collect();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(of_run(ptrs.as_ptr(), ptrs.len(), &mut r), OfStatus::Ok);
        let out = (of_report_exit_code(r), cstr(of_report_json(r)));
        of_report_free(r);
        out
    }
}

#[test]
fn run_follows_exit_contract() {
    let (code, json) = run(&["koszul", "--preset", "com", "--max-arity", "3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(run(&["koszul", "--preset", "nope"]).0, 1);
    assert_eq!(run(&["formality", "--obstruction-stage", "1"]).0, 2);
    assert_eq!(unsafe { of_report_exit_code(ptr::null()) }, -1);
}

#[test]
fn version_string() {
    assert_eq!(cstr(of_version()), env!("CARGO_PKG_VERSION"));
}
