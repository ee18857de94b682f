use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mequi_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn system(cfg: &str) -> *mut MequiSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { mequi_system_new(c(cfg).as_ptr(), &mut sys) }, MequiStatus::Ok);
    sys
}

fn point(sys: *const MequiSystem, seed: &str, horizon: usize, reach: usize) -> *mut MequiPoint {
    let mut p = ptr::null_mut();
    let st = unsafe { mequi_point_new(sys, c(seed).as_ptr(), horizon, reach, &mut p) };
    assert_eq!(st, MequiStatus::Ok, "{}", last_error());
    p
}

fn last_error() -> String {
    let e = mequi_last_error();
    if e.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(e) }.to_string_lossy().into_owned()
    }
}

const TM: &str = "kind = \"substitution\"\nname = \"thue_morse\"\nalphabet = \"01\"\nrules = [\"01\", \"10\"]\n";
const ROT: &str = "kind = \"rotation\"\nangle = \"golden\"\n";

#[test]
fn rotation_distances() {
    let sys = system(ROT);
    let x = point(sys, "kind = \"coordinate\"\nx = 0.0", 1000, 0);
    let y = point(sys, "kind = \"coordinate\"\nx = 0.25", 1000, 0);
    let z = point(sys, "kind = \"coordinate\"\nx = 0.625", 1000, 0);
    let mut d = -1.0;
    assert_eq!(unsafe { mequi_metric(sys, x, y, &mut d) }, MequiStatus::Ok);
    assert_eq!(d, 0.25);
    let pts = [x as *const MequiPoint, y, z];
    assert_eq!(unsafe { mequi_dm(sys, pts.as_ptr(), 3, 0, &mut d) }, MequiStatus::Ok);
    assert_eq!(d, 0.25);
    assert_eq!(unsafe { mequi_dm(sys, pts.as_ptr(), 3, 1, &mut d) }, MequiStatus::Ok);
    assert_eq!(d, 0.375);
    let mut conv = 0;
    assert_eq!(unsafe { mequi_besicovitch(sys, pts.as_ptr(), 2, 1000, &mut d, &mut conv) }, MequiStatus::Ok);
    assert_eq!((d, conv), (0.25, 1));
    unsafe {
        mequi_point_free(x);
        mequi_point_free(y);
        mequi_point_free(z);
        mequi_system_free(sys);
    }
}

#[test]
fn thue_morse_address_and_multiplicity() {
    let sys = system(TM);
    let p = point(sys, "kind = \"fixed_point\"\nletter = \"0\"", 8, 128);
    let mut digits = [9u8; 6];
    assert_eq!(unsafe { mequi_address(sys, p, 6, digits.as_mut_ptr()) }, MequiStatus::Ok, "{}", last_error());
    assert_eq!(digits, [0; 6]);
    let (mut mode, mut frac) = (0usize, 0.0);
    assert_eq!(unsafe { mequi_multiplicity(sys, 10, 32, 50, 1, &mut mode, &mut frac) }, MequiStatus::Ok);
    assert_eq!(mode, 2);
    assert!(frac > 0.5);

    let mut buf = [0 as c_char; 4];
    let mut needed = 0;
    let st = unsafe { mequi_point_render(p, buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(st, MequiStatus::BufferTooSmall);
    let mut big = vec![0 as c_char; needed];
    assert_eq!(unsafe { mequi_point_render(p, big.as_mut_ptr(), needed, &mut needed) }, MequiStatus::Ok);
    let s = unsafe { CStr::from_ptr(big.as_ptr()) }.to_str().unwrap();
    assert!(s.starts_with("sym["), "{s}");
    unsafe {
        mequi_point_free(p);
        mequi_system_free(sys);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut sys = ptr::null_mut();
    let st = unsafe { mequi_system_new(c("kind = \"substitution\"\nalphabet = \"01\"\nrules = [\"0\", \"1\"]").as_ptr(), &mut sys) };
    assert_eq!(st, MequiStatus::InvalidSystem);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { mequi_system_new(c("kind = 3").as_ptr(), &mut sys) }, MequiStatus::Config);
    assert_eq!(unsafe { mequi_system_new(ptr::null(), &mut sys) }, MequiStatus::NullPointer);

    let rot = system(ROT);
    let tm = system(TM);
    let x = point(rot, "kind = \"coordinate\"\nx = 0.1", 10, 0);
    let mut d = 0.0;
    assert_eq!(unsafe { mequi_metric(tm, x, x, &mut d) }, MequiStatus::Contract);
    let pts = [x as *const MequiPoint];
    assert_eq!(unsafe { mequi_dm(rot, pts.as_ptr(), 1, 0, &mut d) }, MequiStatus::Contract);
    let ms = system("kind = \"morse_smale\"\nfixed_points = [0.0, 1.0]\nsteepness = 0.5");
    let mut mode = 0;
    let st = unsafe { mequi_multiplicity(ms, 4, 2, 4, 0, &mut mode, ptr::null_mut()) };
    assert_eq!(st, MequiStatus::Unsupported);
    unsafe {
        mequi_point_free(x);
        mequi_system_free(rot);
        mequi_system_free(tm);
        mequi_system_free(ms);
        mequi_system_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(mequi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/mequi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["mequi_system_new", "mequi_besicovitch", "mequi_last_error", "MEQUI_STATUS_PANIC"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let src = tempfile_path("mequi_header_check.c");
    std::fs::write(
        &src,
        "#include \"mequi.h\"\nint main(void) { MequiSystem *s = 0; return mequi_system_new(\"\", &s) == MEQUI_STATUS_OK; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .expect("a C compiler named `cc` is required for this test");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("{}_{name}", std::process::id()))
}
