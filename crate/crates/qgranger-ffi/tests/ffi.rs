use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qgranger_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        qg_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(qg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn binary_pipeline_on_example_model() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qg_model_example(true, &mut model), QgStatus::Ok);
        let n = 1000;
        let (mut x, mut z) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(qg_model_simulate(model, n, 10_000, 7, x.as_mut_ptr(), z.as_mut_ptr()), QgStatus::Ok);

        let mut sign = ptr::null_mut();
        assert_eq!(qg_quantizer_binary(0.0, &mut sign), QgStatus::Ok);
        let xp = x.as_mut_ptr();
        assert_eq!(qg_quantizer_apply(sign, xp, n, xp), QgStatus::Ok);
        let zp = z.as_mut_ptr();
        assert_eq!(qg_quantizer_apply(sign, zp, n, zp), QgStatus::Ok);
        assert!(x.iter().chain(&z).all(|v| v.abs() == 1.0));

        let mut mom = ptr::null_mut();
        assert_eq!(qg_moments_estimate(x.as_ptr(), z.as_ptr(), n, 2, 2, true, &mut mom), QgStatus::Ok);
        let mut verdict = QgVerdict::NotDecided;
        let mut s = 0.0;
        assert_eq!(qg_binary_test(mom, 2, 0.1, &mut verdict, &mut s), QgStatus::Ok);
        assert_eq!(verdict, QgVerdict::Causal);
        assert!(s > 0.3 && s < 0.65, "{s}");

        qg_moments_free(mom);
        qg_quantizer_free(sign);
        qg_model_free(model);
    }
}

#[test]
fn exact_moments_match_library() {
    unsafe {
        let mut model = ptr::null_mut();
        qg_model_example(true, &mut model);
        let (mut qx, mut qz) = (ptr::null_mut(), ptr::null_mut());
        qg_quantizer_saturated(-3.0, 3.0, 2, &mut qx);
        qg_quantizer_saturated(-5.0, 5.0, 2, &mut qz);
        let mut mom = ptr::null_mut();
        assert_eq!(qg_moments_quantized_exact(model, qx, qz, 2, 6, &mut mom), QgStatus::Ok);
        let mut s = 0.0;
        assert_eq!(qg_sigma_min(mom, 2, 6, &mut s), QgStatus::Ok);

        let truth = qgranger::signals::stationary_covariances(&qgranger::signals::paper_example_model(true), 6).unwrap();
        let sx = qgranger::quantize::make_saturated_uniform(-3.0, 3.0, 2).unwrap();
        let sz = qgranger::quantize::make_saturated_uniform(-5.0, 5.0, 2).unwrap();
        let lib = qgranger::moments::quantized_true_moments(&truth, &sx, &sz, 2, 6).unwrap();
        let expect = qgranger::causality::build_causality_matrix(&lib, 2, 6, qgranger::causality::MatrixKind::Quantized)
            .unwrap()
            .sigma_min()
            .unwrap();
        assert_eq!(s, expect);

        let priors = QgPriors {
            rho_xz_max: 0.5,
            rho_zz_max: 0.7,
            sigma_x_lo: 2.43,
            sigma_x_hi: 2.63,
            sigma_z_lo: 2.10,
            sigma_z_hi: 2.30,
            gamma_xz_max: 0.5 * 2.63 * 2.30,
        };
        let mut margin = f64::NAN;
        let mut verdict = QgVerdict::Causal;
        let st = qg_nonuniform_test(mom, &priors, qx, qz, 2, 6, 21, &mut verdict, &mut margin);
        assert_eq!(st, QgStatus::Ok);
        assert!(margin.is_finite());
        assert_eq!(verdict == QgVerdict::Causal, margin < 0.0);

        qg_moments_free(mom);
        qg_quantizer_free(qx);
        qg_quantizer_free(qz);
        qg_model_free(model);
    }
}

#[test]
fn custom_model_and_finite_quantizer() {
    #[rustfmt::skip]
    let a = [0.5, 0.0,
             0.3, 0.4];
    let q = [1.0, 0.0, 0.0, 1.0];
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qg_model_new(a.as_ptr(), q.as_ptr(), 2, 0, 1, &mut model), QgStatus::Ok);
        let thresholds = [-1.0, 1.0];
        let levels = [-2.0, 0.0, 2.0];
        let mut fq = ptr::null_mut();
        assert_eq!(qg_quantizer_finite(thresholds.as_ptr(), 2, levels.as_ptr(), &mut fq), QgStatus::Ok);
        let w = [-3.0, -1.0, 0.5, 1.0];
        let mut out = [0.0; 4];
        assert_eq!(qg_quantizer_apply(fq, w.as_ptr(), 4, out.as_mut_ptr()), QgStatus::Ok);
        assert_eq!(out, [-2.0, 0.0, 0.0, 2.0]);
        qg_quantizer_free(fq);
        qg_model_free(model);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut model = ptr::null_mut();
        // explosive transition
        let a = [1.5];
        let q = [1.0];
        assert_eq!(qg_model_new(a.as_ptr(), q.as_ptr(), 1, 0, 0, &mut model), QgStatus::InvalidArgument);
        assert!(model.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(qg_model_example(true, ptr::null_mut()), QgStatus::NullPointer);
        assert_eq!(last_error(), "out is null");

        let mut qz = ptr::null_mut();
        assert_eq!(qg_quantizer_uniform(-1.0, &mut qz), QgStatus::InvalidArgument);

        let x = [1.0, f64::NAN];
        let mut sign = ptr::null_mut();
        qg_quantizer_binary(0.0, &mut sign);
        let mut out = [0.0; 2];
        assert_eq!(qg_quantizer_apply(sign, x.as_ptr(), 2, out.as_mut_ptr()), QgStatus::InvalidArgument);
        qg_quantizer_free(sign);

        let mut s = 0.0;
        assert_eq!(qg_sigma_min(ptr::null(), 2, 2, &mut s), QgStatus::NullPointer);

        // free functions accept null
        qg_model_free(ptr::null_mut());
        qg_moments_free(ptr::null_mut());
        qg_quantizer_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates() {
    unsafe {
        qg_model_example(true, ptr::null_mut());
        let full = qg_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 4];
        assert_eq!(qg_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "out");
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qgranger.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "qg_version",
        "qg_last_error_message",
        "qg_model_example",
        "qg_model_free",
        "qg_quantizer_saturated",
        "qg_moments_estimate",
        "qg_binary_test",
        "qg_nonuniform_test",
        "QG_STATUS_OK",
        "typedef struct QgModel QgModel",
    ] {
        assert!(text.contains(name), "header is missing {name}");
    }
    // syntax check with the system C compiler when one is available
    let src = tempfile_with("#include \"qgranger.h\"\nint main(void){QgModel*m=0;qg_model_example(true,&m);qg_model_free(m);return 0;}\n");
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(header.parent().unwrap()).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; skipped syntax check"),
    }
}

fn tempfile_with(body: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("qgranger_header_check_{}.c", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}
