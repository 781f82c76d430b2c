use std::ffi::{CStr, CString};
use std::ptr;

use fsi_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = fsi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn small_config(preset: &str) -> *mut FsiConfig {
    let mut base = ptr::null_mut();
    assert_eq!(fsi_config_preset(c(preset).as_ptr(), &mut base), FsiStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(fsi_config_to_json(base, &mut json), FsiStatus::Ok);
    let mut v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
    fsi_string_free(json);
    fsi_config_free(base);
    v["geometry"]["nr"] = 8.into();
    v["geometry"]["nth"] = 16.into();
    v["fene"]["nqr"] = 6.into();
    v["fene"]["nqa"] = 8.into();
    v["window"] = 4.into();
    let mut out = ptr::null_mut();
    assert_eq!(fsi_config_from_json(c(&v.to_string()).as_ptr(), &mut out), FsiStatus::Ok);
    out
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fsi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported_not_dereferenced() {
    unsafe {
        assert_eq!(fsi_config_default(ptr::null_mut()), FsiStatus::NullPointer);
        let mut out = ptr::null_mut();
        assert_eq!(fsi_config_preset(ptr::null(), &mut out), FsiStatus::NullPointer);
        assert!(out.is_null());
        assert!(last_error().contains("null"));
        assert_eq!(fsi_run(ptr::null(), &mut ptr::null_mut()), FsiStatus::NullPointer);
        assert_eq!(fsi_run_exit_code(ptr::null()), -1);
        fsi_config_free(ptr::null_mut());
        fsi_run_free(ptr::null_mut());
        fsi_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_configs_map_to_the_config_status() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(fsi_config_preset(c("no-such-preset").as_ptr(), &mut out), FsiStatus::Config);
        assert!(last_error().contains("no-such-preset"));
        assert_eq!(fsi_config_from_json(c(r#"{"dt": -1.0}"#).as_ptr(), &mut out), FsiStatus::Config);
        assert_eq!(fsi_config_from_json(c(r#"{"bogus": 1}"#).as_ptr(), &mut out), FsiStatus::Config);
        let bad = [0xffu8, 0];
        assert_eq!(fsi_config_from_json(bad.as_ptr().cast(), &mut out), FsiStatus::InvalidUtf8);
        assert!(out.is_null());
    }
}

#[test]
fn config_setters_change_the_hash_except_for_the_output_dir() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(fsi_config_default(&mut cfg), FsiStatus::Ok);
        let hash = |cfg| {
            let mut h = ptr::null_mut();
            assert_eq!(fsi_config_hash(cfg, &mut h), FsiStatus::Ok);
            let s = CStr::from_ptr(h).to_str().unwrap().to_owned();
            fsi_string_free(h);
            s
        };
        let h0 = hash(cfg);
        assert_eq!(h0.len(), 64);
        assert_eq!(fsi_config_set_output_dir(cfg, c("/tmp/somewhere").as_ptr()), FsiStatus::Ok);
        assert_eq!(hash(cfg), h0);
        assert_eq!(fsi_config_set_seed(cfg, 7), FsiStatus::Ok);
        let h1 = hash(cfg);
        assert_ne!(h1, h0);
        assert_eq!(fsi_config_set_horizon(cfg, 3), FsiStatus::Ok);
        assert_ne!(hash(cfg), h1);
        fsi_config_free(cfg);
    }
}

#[test]
fn validation_of_zero_data_passes() {
    unsafe {
        let cfg = small_config("zero-data");
        let mut passed = false;
        let mut report = ptr::null_mut();
        assert_eq!(fsi_validate(cfg, &mut passed, &mut report), FsiStatus::Ok);
        assert!(passed);
        let r: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(r["checks"].as_array().unwrap().len(), 5);
        fsi_string_free(report);
        fsi_config_free(cfg);
    }
}

#[test]
fn run_columns_and_summary_are_exposed() {
    unsafe {
        let cfg = small_config("relaxation");
        assert_eq!(fsi_config_set_horizon(cfg, 6), FsiStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(fsi_run(cfg, &mut run), FsiStatus::Ok);
        assert_eq!(fsi_run_exit_code(run), 0);
        assert_eq!(fsi_run_steps(run), 6);
        let n = fsi_run_rows(run);
        assert_eq!(n, 7);
        let mut mass = vec![0.0; n];
        assert_eq!(fsi_run_column(run, c("mass").as_ptr(), mass.as_mut_ptr(), n), FsiStatus::Ok);
        assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-12 * mass[0]));
        let mut kinetic = vec![0.0; n];
        assert_eq!(fsi_run_column(run, c("kinetic_fluid").as_ptr(), kinetic.as_mut_ptr(), n), FsiStatus::Ok);
        assert!(kinetic.iter().all(|v| v.is_nan()));
        assert_eq!(fsi_run_column(run, c("nope").as_ptr(), mass.as_mut_ptr(), n), FsiStatus::OutOfRange);
        assert_eq!(fsi_run_column(run, c("mass").as_ptr(), mass.as_mut_ptr(), n - 1), FsiStatus::OutOfRange);
        let mut summary = ptr::null_mut();
        assert_eq!(fsi_run_summary_json(run, &mut summary), FsiStatus::Ok);
        let s: serde_json::Value = serde_json::from_str(CStr::from_ptr(summary).to_str().unwrap()).unwrap();
        assert_eq!(s["scenario"], "fp-fixed");
        assert_eq!(s["steps"], 6);
        fsi_string_free(summary);
        fsi_run_free(run);
        fsi_config_free(cfg);
    }
}

#[test]
fn resume_through_the_c_interface_continues_the_run() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let cfg = small_config("benign");
        assert_eq!(fsi_config_set_horizon(cfg, 8), FsiStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(fsi_config_to_json(cfg, &mut json), FsiStatus::Ok);
        let mut v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        fsi_string_free(json);
        fsi_config_free(cfg);
        v["output"]["checkpoint_every"] = 4.into();
        v["output"]["dir"] = dir.path().join("full").to_str().unwrap().into();
        let mut cfg = ptr::null_mut();
        assert_eq!(fsi_config_from_json(c(&v.to_string()).as_ptr(), &mut cfg), FsiStatus::Ok);
        let mut full = ptr::null_mut();
        assert_eq!(fsi_run(cfg, &mut full), FsiStatus::Ok);
        assert_eq!(fsi_run_exit_code(full), 0);

        let ckpt = dir.path().join("full/checkpoints/step_00000004.ckpt");
        let tail_dir = dir.path().join("tail");
        let mut tail = ptr::null_mut();
        let status =
            fsi_resume(c(ckpt.to_str().unwrap()).as_ptr(), c(tail_dir.to_str().unwrap()).as_ptr(), &mut tail);
        assert_eq!(status, FsiStatus::Ok);
        assert_eq!(fsi_run_steps(tail), 8);
        assert_eq!(fsi_run_rows(tail), 4);
        let (mut a, mut b) = (vec![0.0; 9], vec![0.0; 4]);
        assert_eq!(fsi_run_column(full, c("mass").as_ptr(), a.as_mut_ptr(), 9), FsiStatus::Ok);
        assert_eq!(fsi_run_column(tail, c("mass").as_ptr(), b.as_mut_ptr(), 4), FsiStatus::Ok);
        assert_eq!(&a[5..], &b[..]);

        let mut none = ptr::null_mut();
        let missing = dir.path().join("missing.ckpt");
        assert_eq!(fsi_resume(c(missing.to_str().unwrap()).as_ptr(), ptr::null(), &mut none), FsiStatus::Io);
        assert!(none.is_null());
        fsi_run_free(tail);
        fsi_run_free(full);
        fsi_config_free(cfg);
    }
}

#[test]
fn generated_header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fsi.h")).unwrap();
    for name in [
        "typedef struct FsiConfig FsiConfig",
        "typedef struct FsiRun FsiRun",
        "FSI_STATUS_NULL_POINTER",
        "fsi_config_preset",
        "fsi_run_column",
        "fsi_resume",
        "fsi_last_error",
    ] {
        assert!(header.contains(name), "header lacks `{name}`");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // the test binary and the freshly built archive both live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libfsi_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("fsi "));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.into());
        }
    }
    Err(())
}
