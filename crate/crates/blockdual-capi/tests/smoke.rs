//! Exercises the C surface through the exported symbols, plus a syntax
//! check of the generated header with the system C compiler.

use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use blockdual_capi::*;

fn parse_dataset(text: &str) -> *mut BdDataset {
    let c = CString::new(text).unwrap();
    let mut ds: *mut BdDataset = ptr::null_mut();
    let status = unsafe { bd_dataset_parse(c.as_ptr(), &mut ds) };
    assert_eq!(status, BdStatus::Ok);
    assert!(!ds.is_null());
    ds
}

#[test]
fn full_solve_through_the_c_surface() {
    let ds = parse_dataset("+1 1:1 2:0.2\n+1 1:0.8 2:-0.1\n-1 1:-0.9 2:0.3\n-1 1:-1 2:-0.2\n");
    unsafe {
        assert_eq!(bd_dataset_num_features(ds), 2);
        assert_eq!(bd_dataset_num_instances(ds), 4);
        assert_eq!(bd_dataset_nnz(ds), 8);

        let mut config = bd_config_default(BdLoss::L1Svm, BdAlgo::BdaExactLs, 2, 1.0);
        config.stop_eps = 1e-6;
        config.max_iter = 5000;
        let mut res: *mut BdResult = ptr::null_mut();
        assert_eq!(bd_solve(ds, &config, &mut res), BdStatus::Ok);
        assert_eq!(bd_result_converged(res), 1);
        let dual = bd_result_final_dual(res);
        let primal = bd_result_pocket_primal(res);
        assert!(dual < 0.0 && primal > 0.0);
        assert!((dual + primal).abs() <= 1e-4 * (1.0 + primal.abs()));
        assert!(bd_result_rounds(res) > 0);
        assert!(bd_result_bytes(res) > 0);
        assert!(bd_result_iterations(res) > 0);

        let mut w: *const f64 = ptr::null();
        let mut len: usize = 0;
        assert_eq!(bd_result_weights(res, &mut w, &mut len), BdStatus::Ok);
        assert_eq!(len, 2);
        let weights = std::slice::from_raw_parts(w, len);
        assert!(weights[0] > 0.0, "first feature separates the classes");

        let dir = tempfile::tempdir().unwrap();
        let trace_path = CString::new(
            dir.path().join("trace.csv").to_str().unwrap(),
        )
        .unwrap();
        assert_eq!(
            bd_result_write_trace_csv(res, trace_path.as_ptr()),
            BdStatus::Ok
        );
        let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(text.starts_with("iter,time_s,rounds,bytes,"));

        bd_result_free(res);
        bd_dataset_free(ds);
    }
}

#[test]
fn load_from_file_and_null_handling() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.svm");
    std::fs::write(&path, "+1 1:1\n-1 2:1\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut ds: *mut BdDataset = ptr::null_mut();
    unsafe {
        assert_eq!(bd_dataset_load_libsvm(cpath.as_ptr(), &mut ds), BdStatus::Ok);
        assert_eq!(bd_dataset_num_instances(ds), 2);
        bd_dataset_free(ds);

        let missing = CString::new(dir.path().join("nope.svm").to_str().unwrap()).unwrap();
        let mut ds2: *mut BdDataset = ptr::null_mut();
        assert_eq!(
            bd_dataset_load_libsvm(missing.as_ptr(), &mut ds2),
            BdStatus::IoError
        );
        assert!(!bd_last_error_message().is_null());

        assert_eq!(
            bd_dataset_load_libsvm(ptr::null(), &mut ds2),
            BdStatus::NullArgument
        );
        bd_dataset_free(ptr::null_mut());
        bd_result_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_map_faithfully() {
    unsafe {
        // Parse error with a line number in the message.
        let bad = CString::new("+1 1:zz\n").unwrap();
        let mut ds: *mut BdDataset = ptr::null_mut();
        assert_eq!(bd_dataset_parse(bad.as_ptr(), &mut ds), BdStatus::ParseError);
        let msg = CStr::from_ptr(bd_last_error_message()).to_str().unwrap();
        assert!(msg.contains("line 1"), "message: {msg}");

        // Exact line search on logistic is unsupported.
        let ds = parse_dataset("+1 1:1\n");
        let config =
            bd_config_default(BdLoss::Logistic, BdAlgo::BdaExactLs, 1, 1.0);
        let mut res: *mut BdResult = ptr::null_mut();
        assert_eq!(bd_solve(ds, &config, &mut res), BdStatus::Unsupported);

        // Bad parameters are invalid-config.
        let mut config = bd_config_default(BdLoss::L1Svm, BdAlgo::BdaExactLs, 1, 1.0);
        config.c = -1.0;
        assert_eq!(bd_solve(ds, &config, &mut res), BdStatus::InvalidConfig);
        bd_dataset_free(ds);
    }
}

#[test]
fn solver_is_deterministic_across_the_ffi_boundary() {
    let run = || -> (f64, u64) {
        let ds = parse_dataset("+1 1:1 2:0.3\n-1 1:-0.5 2:1\n+1 2:-0.7\n");
        let mut config =
            bd_config_default(BdLoss::Logistic, BdAlgo::BdaBacktrack, 3, 1.0);
        config.seed = 11;
        config.max_iter = 20;
        config.stop_eps = 1e-12;
        let mut res: *mut BdResult = ptr::null_mut();
        unsafe {
            assert_eq!(bd_solve(ds, &config, &mut res), BdStatus::Ok);
            let out = (bd_result_final_dual(res), bd_result_rounds(res));
            bd_result_free(res);
            bd_dataset_free(ds);
            out
        }
    };
    let a = run();
    let b = run();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}

#[test]
fn generated_header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/blockdual.h");
    assert!(std::path::Path::new(header).exists(), "header not generated");
    let src = format!("#include \"{header}\"\nint main(void) {{ return 0; }}\n");
    let dir = tempfile::tempdir().unwrap();
    let c_file = dir.path().join("smoke.c");
    std::fs::write(&c_file, src).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg(&c_file)
        .status()
        .expect("cc not available");
    assert!(status.success(), "generated header does not compile");
}
