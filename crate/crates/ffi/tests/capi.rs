use julia_pressure_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = jp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn quadratic(c: f64) -> *mut JpMap {
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { jp_map_quadratic(c, 0.0, &mut map) }, JpStatus::Ok);
    map
}

fn enumerator(map: *const JpMap, count: usize) -> *mut JpEnumerator {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { jp_enumerator_new(map, count, 32, 3, &mut e) }, JpStatus::Ok);
    e
}

#[test]
fn map_roundtrip() {
    let num = [1.0];
    let den = [0.0, 0.0, 1.0];
    let mut map = ptr::null_mut();
    let status = unsafe { jp_map_new(num.as_ptr(), ptr::null(), 1, den.as_ptr(), ptr::null(), 3, &mut map) };
    assert_eq!(status, JpStatus::Ok);
    let mut d = 0;
    assert_eq!(unsafe { jp_map_degree(map, &mut d) }, JpStatus::Ok);
    assert_eq!(d, 2);
    let (mut re, mut im, mut inf) = (0.0, 0.0, -1);
    assert_eq!(unsafe { jp_map_eval(map, 2.0, 0.0, &mut re, &mut im, &mut inf) }, JpStatus::Ok);
    assert_eq!((re, im, inf), (0.25, 0.0, 0));
    assert_eq!(unsafe { jp_map_eval(map, 0.0, 0.0, &mut re, &mut im, &mut inf) }, JpStatus::Ok);
    assert_eq!(inf, 1);
    unsafe { jp_map_free(map) };
}

#[test]
fn errors_set_status_and_message() {
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { jp_map_quadratic(f64::NAN, 0.0, &mut map) }, JpStatus::InvalidArgument);
    assert!(last_error().contains("finite"));
    let zero = [0.0];
    let status = unsafe { jp_map_new(zero.as_ptr(), ptr::null(), 1, ptr::null(), ptr::null(), 0, &mut map) };
    assert_eq!(status, JpStatus::MapError);
    assert_eq!(unsafe { jp_map_degree(ptr::null(), &mut 0) }, JpStatus::NullPointer);
    assert!(last_error().contains("map"));
    let m = quadratic(0.0);
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { jp_enumerator_new(m, 0, 32, 0, &mut e) }, JpStatus::SampleError);
    unsafe { jp_map_free(m) };
    unsafe { jp_map_free(ptr::null_mut()) };
    unsafe { jp_enumerator_free(ptr::null_mut()) };
}

#[test]
fn periodic_points_and_sample() {
    let m = quadratic(-1.0);
    let e = enumerator(m, 400);
    unsafe { jp_map_free(m) };
    let mut len = 0;
    assert_eq!(unsafe { jp_sample_len(e, &mut len) }, JpStatus::Ok);
    assert!(len >= 400);
    let (mut re, mut im) = (vec![0.0; 10], vec![0.0; 10]);
    assert_eq!(unsafe { jp_sample_points(e, re.as_mut_ptr(), im.as_mut_ptr(), 10, &mut len) }, JpStatus::Ok);
    assert_eq!(len, 10);

    let (mut found, mut expected) = (0, 0);
    assert_eq!(unsafe { jp_periodic_count(e, 5, &mut found, &mut expected) }, JpStatus::Ok);
    assert_eq!((found, expected), (32, 32));
    let mut lam = vec![0.0; 64];
    let status = unsafe {
        jp_periodic_points(e, 5, re.as_mut_ptr(), im.as_mut_ptr(), lam.as_mut_ptr(), 4, &mut len)
    };
    assert_eq!(status, JpStatus::Ok);
    assert_eq!(len, 4);
    assert_eq!(unsafe { jp_periodic_count(e, 0, &mut found, &mut expected) }, JpStatus::InvalidArgument);
    unsafe { jp_enumerator_free(e) };
}

#[test]
fn pressure_and_bowen_on_the_circle() {
    let m = quadratic(0.0);
    let e = enumerator(m, 400);
    unsafe { jp_map_free(m) };
    let mut value = 0.0;
    let status = unsafe { jp_pressure_pp(e, ptr::null(), 0.3, 0.5, 1, 10, 2, &mut value) };
    assert_eq!(status, JpStatus::Ok);
    assert!((value - 2f64.ln()).abs() < 1e-3, "{value}");

    let expr = CString::new("neglogderiv(0.5)").unwrap();
    let status = unsafe { jp_pressure_pp(e, expr.as_ptr(), 0.3, 0.5, 1, 10, 2, &mut value) };
    assert_eq!(status, JpStatus::Ok);
    assert!((value - 0.5 * 2f64.ln()).abs() < 1e-3, "{value}");

    let bad = CString::new("sum(re").unwrap();
    let status = unsafe { jp_pressure_pp(e, bad.as_ptr(), 0.3, 0.5, 1, 10, 2, &mut value) };
    assert_eq!(status, JpStatus::InvalidArgument);
    assert!(last_error().contains("syntax"));

    let mut t = 0.0;
    assert_eq!(unsafe { jp_bowen_root(e, 0.3, 0.5, 1, 10, 0.5, 1.5, 1e-4, &mut t) }, JpStatus::Ok);
    assert!((t - 1.0).abs() < 1e-3, "{t}");
    assert_eq!(unsafe { jp_bowen_root(e, 0.3, 0.5, 1, 10, 1.5, 0.5, 1e-4, &mut t) }, JpStatus::InvalidArgument);
    unsafe { jp_enumerator_free(e) };
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/julia_pressure.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "jp_last_error",
        "jp_map_new",
        "jp_map_free",
        "jp_enumerator_new",
        "jp_periodic_count",
        "jp_pressure_pp",
        "jp_bowen_root",
        "JP_STATUS_OK = 0",
        "typedef struct JpMap JpMap;",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-xc"]).arg(&header).output() else {
        eprintln!("no C compiler; skipped syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
