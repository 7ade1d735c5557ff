//! C ABI over `pnlab`.
//!
//! Every entry point returns a [`PnlabStatus`]; on failure the message is kept
//! in a thread-local slot readable with [`pnlab_last_error`]. Configurations
//! and experiment results are opaque handles owned by the caller and released
//! with the matching `_free` function. Complex sample buffers are interleaved
//! `re, im` pairs of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;
use pnlab::channel::{real_taps, simulate_frame, ChannelSpec};
use pnlab::harness::{self, ExperimentResult, RunConfig};
use pnlab::receiver::{receive, FrameSetup, ReceiverKind, ReceiverOptions};
use pnlab::tx::{CodeSpec, FrameLayout, Interleaver};
use pnlab::Error;

/// Result codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    OutOfRange = 7,
    Panic = 99,
}

/// Receiver selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnlabReceiver {
    BpMfEp = 0,
    Eks = 1,
    KnownPn = 2,
}

impl From<PnlabReceiver> for ReceiverKind {
    fn from(r: PnlabReceiver) -> Self {
        match r {
            PnlabReceiver::BpMfEp => ReceiverKind::BpMfEp,
            PnlabReceiver::Eks => ReceiverKind::Eks,
            PnlabReceiver::KnownPn => ReceiverKind::KnownPn,
        }
    }
}

impl From<ReceiverKind> for PnlabReceiver {
    fn from(r: ReceiverKind) -> Self {
        match r {
            ReceiverKind::BpMfEp => PnlabReceiver::BpMfEp,
            ReceiverKind::Eks => PnlabReceiver::Eks,
            ReceiverKind::KnownPn => PnlabReceiver::KnownPn,
        }
    }
}

/// Experiment configuration handle.
pub struct PnlabConfig(RunConfig);

/// Experiment results handle.
pub struct PnlabResults(ExperimentResult);

/// One row of the results table.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnlabRow {
    pub receiver: PnlabReceiver,
    pub snr_db: f64,
    pub iteration: usize,
    pub n_frames: usize,
    pub n_bit_errors: u64,
    pub n_bits: u64,
    pub ber: f64,
    pub pn_mse_mean: f64,
    pub pn_mse_median: f64,
    pub wall_ms_per_frame: f64,
    pub seed: u64,
}

/// Frame and channel description for single-frame calls.
///
/// `taps` points to `n_taps` real tap values, `h_0` first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnlabFrameParams {
    pub n_data_symbols: usize,
    pub pilot_period: usize,
    pub pilots_per_block: usize,
    pub interleaver_seed: u64,
    pub taps: *const f64,
    pub n_taps: usize,
    pub noise_var: f64,
    pub pn_var: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PnlabStatus {
    match err {
        Error::Config { .. } | Error::Parse(_) | Error::Layout(_) => PnlabStatus::Config,
        Error::DimensionMismatch { .. } | Error::OddLength(_) | Error::MismatchedGrids(_) => {
            PnlabStatus::InvalidArgument
        }
        Error::Io(_) => PnlabStatus::Io,
        Error::Frame { source, .. } => status_of(source),
        _ => PnlabStatus::Numerical,
    }
}

struct Fail(PnlabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: PnlabStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail(status, msg.into()))
}

/// Runs `f`, mapping errors and panics onto status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PnlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnlabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PnlabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(PnlabStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(PnlabStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(PnlabStatus::NullPointer, format!("`{name}` is null"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(PnlabStatus::NullPointer, format!("`{name}` is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(PnlabStatus::NullPointer, format!("`{name}` is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| {
        fail(
            PnlabStatus::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

fn check_capacity(name: &str, have: usize, need: usize) -> Result<(), Fail> {
    if have < need {
        return fail(
            PnlabStatus::BufferTooSmall,
            format!("`{name}` holds {have} elements, {need} needed"),
        );
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pnlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`, truncated and
/// NUL-terminated. Returns the full message length excluding the NUL, or 0
/// when no error is recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pnlab_last_error(buf: *mut c_char, len: usize) -> usize {
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

/// Creates a configuration with default values.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_new(out: *mut *mut PnlabConfig) -> PnlabStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(PnlabConfig(RunConfig::default())));
        Ok(())
    })
}

/// Parses a TOML configuration. Unknown keys are ignored with a log warning.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_from_toml(
    toml: *const c_char,
    out: *mut *mut PnlabConfig,
) -> PnlabStatus {
    guard(|| {
        let text = c_str(toml, "toml")?;
        let out = deref_mut(out, "out")?;
        let (cfg, _) = RunConfig::from_toml_str(text)?;
        *out = Box::into_raw(Box::new(PnlabConfig(cfg)));
        Ok(())
    })
}

/// Releases a configuration. Null is accepted.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_free(cfg: *mut PnlabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle and `snr_db` valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_snr_grid(
    cfg: *mut PnlabConfig,
    snr_db: *const f64,
    n: usize,
) -> PnlabStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        cfg.0.snr_db_grid = slice(snr_db, n, "snr_db")?.to_vec();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle and `kinds` valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_receivers(
    cfg: *mut PnlabConfig,
    kinds: *const PnlabReceiver,
    n: usize,
) -> PnlabStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "cfg")?;
        cfg.0.receivers = slice(kinds, n, "kinds")?
            .iter()
            .map(|&k| k.into())
            .collect();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_frames(cfg: *mut PnlabConfig, n: usize) -> PnlabStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.n_frames = n;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_iters(cfg: *mut PnlabConfig, n: usize) -> PnlabStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.iters = n;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_seed(cfg: *mut PnlabConfig, seed: u64) -> PnlabStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_pn_var(
    cfg: *mut PnlabConfig,
    pn_var: f64,
) -> PnlabStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.pn_var = pn_var;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_layout(
    cfg: *mut PnlabConfig,
    n_data_symbols: usize,
    pilot_period: usize,
    pilots_per_block: usize,
) -> PnlabStatus {
    guard(|| {
        let cfg = &mut deref_mut(cfg, "cfg")?.0;
        cfg.n_data_symbols = n_data_symbols;
        cfg.pilot_period = pilot_period;
        cfg.pilots_per_block = pilots_per_block;
        Ok(())
    })
}

/// Replaces the channel taps, `h_0` first.
///
/// # Safety
/// `cfg` must be a live handle and `taps` valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn pnlab_config_set_taps(
    cfg: *mut PnlabConfig,
    taps: *const f64,
    n: usize,
) -> PnlabStatus {
    guard(|| {
        deref_mut(cfg, "cfg")?.0.taps = slice(taps, n, "taps")?.to_vec();
        Ok(())
    })
}

/// Runs the Monte-Carlo experiment described by `cfg`.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pnlab_run(
    cfg: *const PnlabConfig,
    out: *mut *mut PnlabResults,
) -> PnlabStatus {
    guard(|| {
        let cfg = deref(cfg, "cfg")?;
        let out = deref_mut(out, "out")?;
        let res = harness::run_experiment(&cfg.0)?;
        *out = Box::into_raw(Box::new(PnlabResults(res)));
        Ok(())
    })
}

/// Number of rows in the results table, 0 for null.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlab_results_len(res: *const PnlabResults) -> usize {
    res.as_ref().map_or(0, |r| r.0.rows.len())
}

/// # Safety
/// `res` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pnlab_results_row(
    res: *const PnlabResults,
    index: usize,
    out: *mut PnlabRow,
) -> PnlabStatus {
    guard(|| {
        let rows = &deref(res, "res")?.0.rows;
        let out = deref_mut(out, "out")?;
        let Some(r) = rows.get(index) else {
            return fail(
                PnlabStatus::OutOfRange,
                format!("row {index} of {}", rows.len()),
            );
        };
        *out = PnlabRow {
            receiver: r.receiver.into(),
            snr_db: r.snr_db,
            iteration: r.iteration,
            n_frames: r.n_frames,
            n_bit_errors: r.n_bit_errors,
            n_bits: r.n_bits,
            ber: r.ber,
            pn_mse_mean: r.pn_mse_mean,
            pn_mse_median: r.pn_mse_median,
            wall_ms_per_frame: r.wall_ms_per_frame,
            seed: r.seed,
        };
        Ok(())
    })
}

/// Writes the results CSV and its per-frame sidecar.
///
/// # Safety
/// `res` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pnlab_results_write_csv(
    res: *const PnlabResults,
    path: *const c_char,
) -> PnlabStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let path = c_str(path, "path")?;
        harness::write_experiment(&res.0, Path::new(path))?;
        Ok(())
    })
}

/// Releases a results handle. Null is accepted.
///
/// # Safety
/// `res` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pnlab_results_free(res: *mut PnlabResults) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

unsafe fn frame_setup(params: *const PnlabFrameParams) -> Result<FrameSetup, Fail> {
    let p = deref(params, "params")?;
    let taps = real_taps(slice(p.taps, p.n_taps, "params.taps")?);
    let layout = FrameLayout::new(p.n_data_symbols, p.pilot_period, p.pilots_per_block)?;
    let il = Interleaver::new(layout.n_coded_bits(), p.interleaver_seed);
    Ok(FrameSetup::new(
        layout,
        CodeSpec::default(),
        il,
        taps,
        p.noise_var,
        p.pn_var,
    )?)
}

/// Reports the number of complex observations and information bits per frame.
///
/// # Safety
/// `params` must be valid; `obs_len` and `n_info` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnlab_frame_sizes(
    params: *const PnlabFrameParams,
    obs_len: *mut usize,
    n_info: *mut usize,
) -> PnlabStatus {
    guard(|| {
        let setup = frame_setup(params)?;
        *deref_mut(obs_len, "obs_len")? = setup.obs_len();
        *deref_mut(n_info, "n_info")? = setup.n_info();
        Ok(())
    })
}

/// Simulates one frame. `y` receives `2 * obs_len` doubles, `bits` receives
/// `n_info` bits and `theta` receives `obs_len` phases.
///
/// # Safety
/// `params` must be valid and each buffer valid for its stated length.
#[no_mangle]
pub unsafe extern "C" fn pnlab_simulate_frame(
    params: *const PnlabFrameParams,
    seed: u64,
    y: *mut f64,
    y_len: usize,
    bits: *mut u8,
    bits_len: usize,
    theta: *mut f64,
    theta_len: usize,
) -> PnlabStatus {
    guard(|| {
        let setup = frame_setup(params)?;
        let spec = ChannelSpec::new(setup.taps.clone(), setup.noise_var, setup.pn_var)?;
        let truth = simulate_frame(&setup.layout, &setup.code, &setup.interleaver, &spec, seed)?;
        check_capacity("y", y_len, 2 * truth.y.len())?;
        check_capacity("bits", bits_len, truth.bits.len())?;
        check_capacity("theta", theta_len, truth.theta.len())?;
        let y = slice_mut(y, y_len, "y")?;
        for (dst, v) in y.chunks_exact_mut(2).zip(&truth.y) {
            dst[0] = v.re;
            dst[1] = v.im;
        }
        slice_mut(bits, bits_len, "bits")?[..truth.bits.len()].copy_from_slice(&truth.bits);
        slice_mut(theta, theta_len, "theta")?[..truth.theta.len()].copy_from_slice(&truth.theta);
        Ok(())
    })
}

/// Runs one receiver on one frame.
///
/// `y` holds `2 * obs_len` doubles. `true_theta` is required for
/// `KnownPn` and ignored otherwise. Decoded bits go to `bits` (`n_info`
/// entries) and the final phase estimate to `theta_hat` (`obs_len`
/// entries); `theta_hat` may be null.
///
/// # Safety
/// `params` must be valid and each non-null buffer valid for its length.
#[no_mangle]
pub unsafe extern "C" fn pnlab_receive_frame(
    kind: PnlabReceiver,
    params: *const PnlabFrameParams,
    iters: usize,
    y: *const f64,
    y_len: usize,
    true_theta: *const f64,
    bits: *mut u8,
    bits_len: usize,
    theta_hat: *mut f64,
) -> PnlabStatus {
    guard(|| {
        let setup = frame_setup(params)?;
        let k_len = setup.obs_len();
        if y_len != 2 * k_len {
            return fail(
                PnlabStatus::InvalidArgument,
                format!("`y_len` is {y_len}, expected {}", 2 * k_len),
            );
        }
        check_capacity("bits", bits_len, setup.n_info())?;
        let obs: Vec<Complex64> = slice(y, y_len, "y")?
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let opts = ReceiverOptions {
            iters,
            ..ReceiverOptions::default()
        };
        let kind = ReceiverKind::from(kind);
        let out = match kind {
            ReceiverKind::KnownPn => {
                let t = slice(true_theta, k_len, "true_theta")?;
                pnlab::receiver::known_pn_receive(&setup, &obs, t, &opts, None)?
            }
            _ => receive(kind, &setup, &obs, &opts, None)?,
        };
        slice_mut(bits, bits_len, "bits")?[..out.bits.len()].copy_from_slice(&out.bits);
        if !theta_hat.is_null() {
            slice_mut(theta_hat, k_len, "theta_hat")?.copy_from_slice(&out.theta_hat);
        }
        Ok(())
    })
}
