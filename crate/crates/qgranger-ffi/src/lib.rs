//! C interface. Every fallible call returns a [`QgStatus`]; on failure the
//! message is kept per thread and read with [`qg_last_error_message`].
//! Handles returned through `out` pointers are owned by the caller and must
//! be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qgranger::bounds::{nonuniform_sufficient_test, s_bounds, PriorBounds, SMethod};
use qgranger::causality::{binary_causality_test, build_causality_matrix, MatrixKind, Verdict};
use qgranger::moments::{estimate_moments, LaggedMoments};
use qgranger::quantize::{make_saturated_uniform, QuantizerSpec};
use qgranger::signals::{paper_example_model, simulate_var, stationary_covariances, SeriesPair, VarModel};
use qgranger::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgVerdict {
    NonCausal = 0,
    Causal = 1,
    NotDecided = 2,
}

/// Prior brackets on the unquantized statistics.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QgPriors {
    pub rho_xz_max: f64,
    pub rho_zz_max: f64,
    pub sigma_x_lo: f64,
    pub sigma_x_hi: f64,
    pub sigma_z_lo: f64,
    pub sigma_z_hi: f64,
    pub gamma_xz_max: f64,
}

/// Opaque VAR model.
pub struct QgModel(VarModel);

/// Opaque lagged moments, estimated or exact.
pub struct QgMoments(LaggedMoments);

/// Opaque quantizer.
pub struct QgQuantizer(QuantizerSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QgStatus {
    match e {
        Error::InvalidArgument(_) | Error::LagTooLarge { .. } | Error::MissingLag(_) | Error::NanInput(_) => {
            QgStatus::InvalidArgument
        }
        _ => QgStatus::Numeric,
    }
}

fn guard<F: FnOnce() -> Result<(), (QgStatus, String)>>(f: F) -> QgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QgStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            QgStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (QgStatus, String)>;
}

impl<T> IntoFfi<T> for qgranger::Result<T> {
    fn ffi(self) -> Result<T, (QgStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (QgStatus, String) {
    (QgStatus::NullPointer, format!("{name} is null"))
}

unsafe fn input<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], (QgStatus, String)> {
    if p.is_null() {
        return if n == 0 { Ok(&[]) } else { Err(null(name)) };
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, n: usize, name: &str) -> Result<&'a mut [f64], (QgStatus, String)> {
    if p.is_null() {
        return if n == 0 { Ok(&mut []) } else { Err(null(name)) };
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn put<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (truncated, always
/// NUL-terminated when `len > 0`). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn qg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// The four-state example system; `causal != 0` selects the coupled variant.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qg_model_example(causal: bool, out: *mut *mut QgModel) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, QgModel(paper_example_model(causal)));
        Ok(())
    })
}

/// Build a model from row-major `dim x dim` transition and noise covariance.
///
/// # Safety
/// `transition` and `noise_cov` must hold `dim * dim` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_model_new(
    transition: *const f64,
    noise_cov: *const f64,
    dim: usize,
    x_index: usize,
    z_index: usize,
    out: *mut *mut QgModel,
) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = input(transition, dim * dim, "transition")?;
        let q = input(noise_cov, dim * dim, "noise_cov")?;
        put(out, QgModel(VarModel::from_row_major(dim, a, q, x_index, z_index).ffi()?));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `qg_model_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn qg_model_free(model: *mut QgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Simulate `n` samples into caller buffers `x` and `z`.
///
/// # Safety
/// `x` and `z` must be writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn qg_model_simulate(
    model: *const QgModel,
    n: usize,
    burn_in: usize,
    seed: u64,
    x: *mut f64,
    z: *mut f64,
) -> QgStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let xo = output(x, n, "x")?;
        let zo = output(z, n, "z")?;
        let pair = simulate_var(&m.0, n, burn_in, seed).ffi()?;
        xo.copy_from_slice(&pair.x);
        zo.copy_from_slice(&pair.z);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_binary(threshold: f64, out: *mut *mut QgQuantizer) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, QgQuantizer(QuantizerSpec::binary(threshold).ffi()?));
        Ok(())
    })
}

/// Uniform quantizer on `[lo, hi]` with `2^bits` cells plus the upper overload level.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_saturated(lo: f64, hi: f64, bits: u32, out: *mut *mut QgQuantizer) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, QgQuantizer(make_saturated_uniform(lo, hi, bits).ffi()?));
        Ok(())
    })
}

/// Non-uniform quantizer: `n_thresholds` increasing thresholds, one more level.
///
/// # Safety
/// `thresholds` must hold `n_thresholds` values and `levels` `n_thresholds + 1`.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_finite(
    thresholds: *const f64,
    n_thresholds: usize,
    levels: *const f64,
    out: *mut *mut QgQuantizer,
) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = input(thresholds, n_thresholds, "thresholds")?.to_vec();
        let l = input(levels, n_thresholds + 1, "levels")?.to_vec();
        put(out, QgQuantizer(QuantizerSpec::finite(t, l).ffi()?));
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_uniform(delta: f64, out: *mut *mut QgQuantizer) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, QgQuantizer(QuantizerSpec::uniform(delta).ffi()?));
        Ok(())
    })
}

/// # Safety
/// `quantizer` must come from a `qg_quantizer_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_free(quantizer: *mut QgQuantizer) {
    if !quantizer.is_null() {
        drop(Box::from_raw(quantizer));
    }
}

/// Quantize `n` samples; `input` and `out` may alias.
///
/// # Safety
/// Both buffers must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn qg_quantizer_apply(quantizer: *const QgQuantizer, input_ptr: *const f64, n: usize, out: *mut f64) -> QgStatus {
    guard(|| {
        let q = quantizer.as_ref().ok_or_else(|| null("quantizer"))?;
        if n > 0 && (input_ptr.is_null() || out.is_null()) {
            return Err(null("buffer"));
        }
        for i in 0..n {
            let w = *input_ptr.add(i);
            if w.is_nan() {
                return Err((QgStatus::InvalidArgument, format!("NaN input at index {i}")));
            }
            *out.add(i) = q.0.apply(w);
        }
        Ok(())
    })
}

/// Estimate lagged moments up to depth `q` from `n` samples.
///
/// # Safety
/// `x` and `z` must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_moments_estimate(
    x: *const f64,
    z: *const f64,
    n: usize,
    m: usize,
    q: usize,
    zero_mean: bool,
    out: *mut *mut QgMoments,
) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let pair = SeriesPair { x: input(x, n, "x")?.to_vec(), z: input(z, n, "z")?.to_vec() };
        put(out, QgMoments(estimate_moments(&pair, m, q, zero_mean).ffi()?));
        Ok(())
    })
}

/// Exact moments of the model after quantization by `qx`, `qz`.
///
/// # Safety
/// All handles must be valid; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_moments_quantized_exact(
    model: *const QgModel,
    qx: *const QgQuantizer,
    qz: *const QgQuantizer,
    m: usize,
    q: usize,
    out: *mut *mut QgMoments,
) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let qx = qx.as_ref().ok_or_else(|| null("qx"))?;
        let qz = qz.as_ref().ok_or_else(|| null("qz"))?;
        let truth = stationary_covariances(&model.0, q.max(m)).ffi()?;
        let mom = qgranger::moments::quantized_true_moments(&truth, &qx.0, &qz.0, m, q).ffi()?;
        put(out, QgMoments(mom));
        Ok(())
    })
}

/// # Safety
/// `moments` must come from a `qg_moments_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn qg_moments_free(moments: *mut QgMoments) {
    if !moments.is_null() {
        drop(Box::from_raw(moments));
    }
}

/// Smallest singular value of the `(m+1) x (ell+m)` causality matrix.
///
/// # Safety
/// `moments` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_sigma_min(moments: *const QgMoments, m: usize, ell: usize, out: *mut f64) -> QgStatus {
    guard(|| {
        let mom = moments.as_ref().ok_or_else(|| null("moments"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = build_causality_matrix(&mom.0, m, ell, MatrixKind::Quantized).ffi()?.sigma_min().ffi()?;
        Ok(())
    })
}

fn verdict(v: Verdict) -> QgVerdict {
    match v {
        Verdict::Causal => QgVerdict::Causal,
        Verdict::NonCausal => QgVerdict::NonCausal,
        Verdict::NotDecided => QgVerdict::NotDecided,
    }
}

/// Threshold test on sign data: CAUSAL iff `sigma_min(R(m, m)) > theta`.
///
/// # Safety
/// `moments` must be valid; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn qg_binary_test(
    moments: *const QgMoments,
    m: usize,
    theta: f64,
    verdict_out: *mut QgVerdict,
    sigma_min_out: *mut f64,
) -> QgStatus {
    guard(|| {
        let mom = moments.as_ref().ok_or_else(|| null("moments"))?;
        let d = binary_causality_test(&mom.0, m, theta).ffi()?;
        if !verdict_out.is_null() {
            *verdict_out = verdict(d.verdict);
        }
        if !sigma_min_out.is_null() {
            *sigma_min_out = d.sigma_min;
        }
        Ok(())
    })
}

/// Sufficient condition for finite quantizers at depth `q`. Writes the margin
/// `sqrt(N_o N_I) - sigma_min(C^Q)`; negative means CAUSAL.
/// `grid_density == 0` selects the analytic bounds.
///
/// # Safety
/// All pointers must be valid; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn qg_nonuniform_test(
    moments: *const QgMoments,
    priors: *const QgPriors,
    qx: *const QgQuantizer,
    qz: *const QgQuantizer,
    m: usize,
    q: usize,
    grid_density: usize,
    verdict_out: *mut QgVerdict,
    margin_out: *mut f64,
) -> QgStatus {
    guard(|| {
        let mom = moments.as_ref().ok_or_else(|| null("moments"))?;
        let p = priors.as_ref().ok_or_else(|| null("priors"))?;
        let qx = qx.as_ref().ok_or_else(|| null("qx"))?;
        let qz = qz.as_ref().ok_or_else(|| null("qz"))?;
        let priors = PriorBounds {
            rho_xz_max: p.rho_xz_max,
            rho_zz_max: p.rho_zz_max,
            sigma_x_lo: p.sigma_x_lo,
            sigma_x_hi: p.sigma_x_hi,
            sigma_z_lo: p.sigma_z_lo,
            sigma_z_hi: p.sigma_z_hi,
            gamma_xz_max: p.gamma_xz_max,
        };
        let method = if grid_density == 0 { SMethod::Analytic } else { SMethod::Grid { density: grid_density } };
        let s = s_bounds(&priors, &qx.0, &qz.0, method).ffi()?;
        let d = nonuniform_sufficient_test(&mom.0, &s, m, &[q]).ffi()?;
        if !verdict_out.is_null() {
            *verdict_out = verdict(d.verdict);
        }
        if !margin_out.is_null() {
            *margin_out = d.depths[0].margin;
        }
        Ok(())
    })
}
