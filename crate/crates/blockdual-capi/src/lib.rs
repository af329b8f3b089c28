//! C ABI for the blockdual solver.
//!
//! Datasets and solve results are opaque handles created and destroyed by
//! this library; every fallible call returns a [`BdStatus`] code and leaves
//! a human-readable message retrievable with [`bd_last_error_message`] (the
//! message is thread-local and valid until the next failing call on the
//! same thread). Handles must not be shared across threads without external
//! synchronization.
//!
//! The generated header lives at `include/blockdual.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use blockdual::dataio::{parse_libsvm, LabelVector, SparseColumnMatrix};
use blockdual::engine::{write_trace_csv, Algo, SolveOutput, Solver, SolverConfig};
use blockdual::model::{LossKind, LossSpec};
use blockdual::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    ParseError = 4,
    InvalidConfig = 5,
    Unsupported = 6,
    LineSearchFailed = 7,
    InternalError = 8,
}

/// Loss families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdLoss {
    L1Svm = 0,
    L2Svm = 1,
    Logistic = 2,
    Svr = 3,
    L2Svr = 4,
    LeastSquares = 5,
}

impl From<BdLoss> for LossKind {
    fn from(l: BdLoss) -> LossKind {
        match l {
            BdLoss::L1Svm => LossKind::L1Svm,
            BdLoss::L2Svm => LossKind::L2Svm,
            BdLoss::Logistic => LossKind::Logistic,
            BdLoss::Svr => LossKind::Svr,
            BdLoss::L2Svr => LossKind::L2Svr,
            BdLoss::LeastSquares => LossKind::LeastSquares,
        }
    }
}

/// Step-size regimes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdAlgo {
    BdaExactLs = 0,
    BdaBacktrack = 1,
    DisdcaPractical = 2,
    DsvmAve = 3,
    ProxGrad = 4,
}

impl From<BdAlgo> for Algo {
    fn from(a: BdAlgo) -> Algo {
        match a {
            BdAlgo::BdaExactLs => Algo::BdaExactLs,
            BdAlgo::BdaBacktrack => Algo::BdaBacktrack,
            BdAlgo::DisdcaPractical => Algo::DisdcaPractical,
            BdAlgo::DsvmAve => Algo::DsvmAve,
            BdAlgo::ProxGrad => Algo::ProxGrad,
        }
    }
}

/// Solver configuration. Build one with `bd_config_default` and adjust
/// fields as needed; `a1`/`a2` left as NaN resolve to the algorithm's
/// defaults when the solve starts.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BdConfig {
    pub loss: BdLoss,
    /// Loss weight, must be positive.
    pub c: f64,
    /// Insensitivity width for the SVR losses.
    pub eps: f64,
    pub algo: BdAlgo,
    /// Number of simulated workers, at least 1.
    pub k: u32,
    /// Block-model scaling; NaN means "algorithm default".
    pub a1: f64,
    /// Damping term; NaN means "algorithm default".
    pub a2: f64,
    /// Armijo sufficient-decrease fraction, in (0, 1).
    pub tau: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub beta: f64,
    /// RPCD passes per outer iteration.
    pub local_epochs: u64,
    /// Relative duality-gap stopping threshold.
    pub stop_eps: f64,
    pub max_iter: u64,
    pub max_backtracks: u32,
    pub seed: u64,
}

/// Opaque dataset handle: a parsed LIBSVM file.
pub struct BdDataset {
    matrix: SparseColumnMatrix,
    labels: LabelVector,
}

/// Opaque result handle: pocket solution, trace, and counters.
pub struct BdResult {
    output: SolveOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> BdStatus {
    match err {
        Error::Io(_) => BdStatus::IoError,
        Error::Parse { .. } => BdStatus::ParseError,
        Error::Config(_) => BdStatus::InvalidConfig,
        Error::Unsupported(..) => BdStatus::Unsupported,
        Error::LineSearchFailure { .. } => BdStatus::LineSearchFailed,
        Error::Contract(_) | Error::OracleBudget { .. } => BdStatus::InternalError,
    }
}

fn fail(err: Error) -> BdStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

/// Runs `f` with panics converted into `BdInternalError`.
fn guarded(f: impl FnOnce() -> BdStatus) -> BdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic".to_string());
            BdStatus::InternalError
        }
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, BdStatus> {
    if ptr.is_null() {
        set_error("null string argument".to_string());
        return Err(BdStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".to_string());
        BdStatus::InvalidUtf8
    })
}

/// Message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Default configuration for a loss/algorithm pair: `a1`/`a2` are NaN
/// (resolved to the algorithm defaults at solve time), `tau` = 0.01,
/// `beta` = 0.5, one local epoch, `stop_eps` = 1e-3, 1000 iterations.
#[no_mangle]
pub extern "C" fn bd_config_default(loss: BdLoss, algo: BdAlgo, k: u32, c: f64) -> BdConfig {
    BdConfig {
        loss,
        c,
        eps: 0.1,
        algo,
        k,
        a1: f64::NAN,
        a2: f64::NAN,
        tau: 1e-2,
        beta: 0.5,
        local_epochs: 1,
        stop_eps: 1e-3,
        max_iter: 1000,
        max_backtracks: 50,
        seed: 0,
    }
}

fn dataset_from_reader<R: std::io::BufRead>(reader: R, out: *mut *mut BdDataset) -> BdStatus {
    match parse_libsvm(reader) {
        Ok((labels, matrix)) => {
            let handle = Box::new(BdDataset { matrix, labels });
            unsafe { *out = Box::into_raw(handle) };
            BdStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parses a LIBSVM file into a new dataset handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns the dataset and must be released with
/// `bd_dataset_free`.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_load_libsvm(
    path: *const c_char,
    out: *mut *mut BdDataset,
) -> BdStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer".to_string());
            return BdStatus::NullArgument;
        }
        let path = match unsafe { cstr_arg(path) } {
            Ok(p) => p,
            Err(code) => return code,
        };
        match File::open(Path::new(path)) {
            Ok(file) => dataset_from_reader(BufReader::new(file), out),
            Err(e) => fail(Error::Io(e)),
        }
    })
}

/// Parses LIBSVM-format text from memory into a new dataset handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. See `bd_dataset_load_libsvm` for ownership.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_parse(
    text: *const c_char,
    out: *mut *mut BdDataset,
) -> BdStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer".to_string());
            return BdStatus::NullArgument;
        }
        let text = match unsafe { cstr_arg(text) } {
            Ok(t) => t,
            Err(code) => return code,
        };
        dataset_from_reader(text.as_bytes(), out)
    })
}

/// Releases a dataset handle. Null is a no-op.
///
/// # Safety
/// `ds` must be a pointer returned by a dataset constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_free(ds: *mut BdDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

macro_rules! deref_or_zero {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return 0,
        }
    };
}

/// Feature dimension of the dataset (0 for null).
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_num_features(ds: *const BdDataset) -> usize {
    deref_or_zero!(ds).matrix.n_rows()
}

/// Number of instances (dual coordinates) in the dataset (0 for null).
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_num_instances(ds: *const BdDataset) -> usize {
    deref_or_zero!(ds).matrix.n_cols()
}

/// Number of stored non-zero entries (0 for null).
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn bd_dataset_nnz(ds: *const BdDataset) -> usize {
    deref_or_zero!(ds).matrix.nnz()
}

/// Trains on the dataset with the given configuration and returns a result
/// handle.
///
/// # Safety
/// `ds` must be a live dataset handle, `config` and `out` valid pointers.
/// On success `*out` owns the result and must be released with
/// `bd_result_free`.
#[no_mangle]
pub unsafe extern "C" fn bd_solve(
    ds: *const BdDataset,
    config: *const BdConfig,
    out: *mut *mut BdResult,
) -> BdStatus {
    guarded(|| {
        let (Some(ds), Some(cfg)) = (unsafe { ds.as_ref() }, unsafe { config.as_ref() }) else {
            set_error("null dataset or config".to_string());
            return BdStatus::NullArgument;
        };
        if out.is_null() {
            set_error("null output pointer".to_string());
            return BdStatus::NullArgument;
        }
        let loss = LossSpec::new(cfg.loss.into(), cfg.c).with_eps(cfg.eps);
        let mut solver_config =
            match SolverConfig::for_algo(cfg.algo.into(), cfg.k as usize, &loss, Some(&ds.matrix)) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
        if !cfg.a1.is_nan() {
            solver_config.a1 = cfg.a1;
        }
        if !cfg.a2.is_nan() {
            solver_config.a2 = cfg.a2;
        }
        solver_config.tau = cfg.tau;
        solver_config.beta = cfg.beta;
        solver_config.local_epochs = cfg.local_epochs as usize;
        solver_config.stop_eps = cfg.stop_eps;
        solver_config.max_iter = cfg.max_iter as usize;
        solver_config.max_backtracks = cfg.max_backtracks;
        solver_config.seed = cfg.seed;

        let solve = Solver::new(&ds.matrix, ds.labels.as_slice(), loss, solver_config)
            .and_then(Solver::solve);
        match solve {
            Ok(output) => {
                unsafe { *out = Box::into_raw(Box::new(BdResult { output })) };
                BdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a result handle. Null is a no-op.
///
/// # Safety
/// `res` must be a pointer returned by `bd_solve`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bd_result_free(res: *mut BdResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Final dual objective value (NaN for null).
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_final_dual(res: *const BdResult) -> f64 {
    match unsafe { res.as_ref() } {
        Some(r) => r.output.final_dual,
        None => f64::NAN,
    }
}

/// Primal objective of the pocket solution (NaN for null).
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_pocket_primal(res: *const BdResult) -> f64 {
    match unsafe { res.as_ref() } {
        Some(r) => r.output.pocket_primal,
        None => f64::NAN,
    }
}

/// 1 when the stopping test was met, 0 otherwise.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_converged(res: *const BdResult) -> i32 {
    deref_or_zero!(res).output.converged as i32
}

/// Outer iterations performed.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_iterations(res: *const BdResult) -> u64 {
    deref_or_zero!(res).output.iterations
}

/// Total reduction rounds (vector plus scalar).
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_rounds(res: *const BdResult) -> u64 {
    deref_or_zero!(res).output.stats.rounds_total()
}

/// Total bytes exchanged by the simulated reductions.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bd_result_bytes(res: *const BdResult) -> u64 {
    deref_or_zero!(res).output.stats.bytes_total
}

/// Borrows the pocket weight vector. The pointer is owned by the result
/// handle and stays valid until `bd_result_free`.
///
/// # Safety
/// `res` must be a live result handle; `out_ptr` and `out_len` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bd_result_weights(
    res: *const BdResult,
    out_ptr: *mut *const f64,
    out_len: *mut usize,
) -> BdStatus {
    let Some(r) = (unsafe { res.as_ref() }) else {
        set_error("null result".to_string());
        return BdStatus::NullArgument;
    };
    if out_ptr.is_null() || out_len.is_null() {
        set_error("null output pointer".to_string());
        return BdStatus::NullArgument;
    }
    unsafe {
        *out_ptr = r.output.weights.as_ptr();
        *out_len = r.output.weights.len();
    }
    BdStatus::Ok
}

/// Writes the per-iteration trace as CSV.
///
/// # Safety
/// `res` must be a live result handle; `path` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn bd_result_write_trace_csv(
    res: *const BdResult,
    path: *const c_char,
) -> BdStatus {
    guarded(|| {
        let Some(r) = (unsafe { res.as_ref() }) else {
            set_error("null result".to_string());
            return BdStatus::NullArgument;
        };
        let path = match unsafe { cstr_arg(path) } {
            Ok(p) => p,
            Err(code) => return code,
        };
        let write = || -> blockdual::Result<()> {
            let mut out = BufWriter::new(File::create(path)?);
            write_trace_csv(&mut out, &r.output.trace, None)?;
            Ok(())
        };
        match write() {
            Ok(()) => BdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}
