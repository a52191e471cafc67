//! C interface to the `tfkey` library.
//!
//! Every fallible function returns a [`TfkeyStatus`] and writes its result
//! through an out pointer. On failure a message for the calling thread can
//! be read with [`tfkey_last_error`]. Handles are opaque and must be
//! released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tfkey::channel::{expected_observations, ChannelParams, DetectorPlacement};
use tfkey::constraints::{build_lp_with, BuildOptions, SecurityBudget};
use tfkey::keyrate::{analyze, plob_rate, AnalysisMode, AnalysisOptions, KeyRateReport, RunStatus};
use tfkey::lp::{parse_dump, solve_max, write_dump, LinearProgram, LpStatus};
use tfkey::{math, Error, ProtocolParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfkeyStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside its allowed range.
    InvalidArgument = 2,
    NoDetections = 3,
    Infeasible = 4,
    Unbounded = 5,
    IterationLimit = 6,
    MalformedLp = 7,
    Parse = 8,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 9,
    Panic = 10,
}

/// Outcome recorded in a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfkeyRunStatus {
    Ok = 0,
    ZeroKey = 1,
    Infeasible = 2,
    NoDetections = 3,
}

/// Link and device parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfkeyChannel {
    pub e_m: f64,
    pub p_d: f64,
    pub xi: f64,
    pub eta_d: f64,
    pub f_ec: f64,
}

/// Intensities, sending probabilities, phase slices and pulse count.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfkeyProtocol {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub slices: usize,
    pub n_tot: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfkeyBudget {
    pub eps_a: f64,
    pub eps_total_pe: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    pub eps_sec: f64,
    pub eps_tol: f64,
}

/// One analyzed distance. `plob_rate` is infinite at zero distance.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfkeyReport {
    pub distance_km: f64,
    pub n_bit: f64,
    pub e_bit: f64,
    pub n_ph_upper: f64,
    pub e_ph_upper: f64,
    pub key_length: f64,
    pub key_rate: f64,
    pub plob_rate: f64,
    pub status: TfkeyRunStatus,
}

/// Channel, budget and analysis settings reused across calls.
pub struct TfkeyAnalyzer {
    channel: ChannelParams,
    budget: SecurityBudget,
    options: AnalysisOptions,
}

/// A linear program `maximize c·x` with equalities, `<=` rows and boxes.
pub struct TfkeyLp {
    lp: LinearProgram,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> TfkeyStatus {
    match err {
        Error::Domain { .. }
        | Error::Degenerate(_)
        | Error::EmptyFeasibleRegion
        | Error::TooLarge { .. } => TfkeyStatus::InvalidArgument,
        Error::NoDetections => TfkeyStatus::NoDetections,
        Error::PhaseErrorInfeasible => TfkeyStatus::Infeasible,
        Error::PhaseErrorUnbounded => TfkeyStatus::Unbounded,
        Error::MalformedLp(_) => TfkeyStatus::MalformedLp,
        Error::IterationLimit(_) => TfkeyStatus::IterationLimit,
        Error::Parse { .. } => TfkeyStatus::Parse,
    }
}

struct Failure(TfkeyStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TfkeyStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status and the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TfkeyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfkeyStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            TfkeyStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn target<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

impl From<&TfkeyChannel> for ChannelParams {
    fn from(c: &TfkeyChannel) -> Self {
        ChannelParams {
            e_m: c.e_m,
            p_d: c.p_d,
            xi: c.xi,
            eta_d: c.eta_d,
            f_ec: c.f_ec,
        }
    }
}

impl From<&SecurityBudget> for TfkeyBudget {
    fn from(b: &SecurityBudget) -> Self {
        TfkeyBudget {
            eps_a: b.eps_a,
            eps_total_pe: b.eps_total_pe,
            eps_cor: b.eps_cor,
            eps_pa: b.eps_pa,
            eps_sec: b.eps_sec,
            eps_tol: b.eps_tol,
        }
    }
}

fn protocol(p: &TfkeyProtocol) -> Result<ProtocolParams, Failure> {
    Ok(ProtocolParams::new(
        p.mu, p.nu, p.p_mu, p.p_nu, p.slices, p.n_tot,
    )?)
}

fn report(r: &KeyRateReport) -> TfkeyReport {
    TfkeyReport {
        distance_km: r.distance_km,
        n_bit: r.n_bit,
        e_bit: r.e_bit,
        n_ph_upper: r.n_ph_upper,
        e_ph_upper: r.e_ph_upper,
        key_length: r.key_length,
        key_rate: r.key_rate,
        plob_rate: r.plob_rate,
        status: match r.status {
            RunStatus::Ok => TfkeyRunStatus::Ok,
            RunStatus::ZeroKey => TfkeyRunStatus::ZeroKey,
            RunStatus::Infeasible => TfkeyRunStatus::Infeasible,
            RunStatus::NoDetections => TfkeyRunStatus::NoDetections,
        },
    }
}

/// Copies `text` plus a terminating NUL into `buf`. `needed` receives the
/// full size including the NUL.
unsafe fn copy_out(
    text: &[u8],
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> Result<(), Failure> {
    if !needed.is_null() {
        *needed = text.len() + 1;
    }
    if buf.is_null() || cap < text.len() + 1 {
        return Err(Failure(
            TfkeyStatus::BufferTooSmall,
            format!("buffer of {cap} bytes, {} needed", text.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn tfkey_status_name(status: TfkeyStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TfkeyStatus::Ok => c"ok",
        TfkeyStatus::NullPointer => c"null pointer",
        TfkeyStatus::InvalidArgument => c"invalid argument",
        TfkeyStatus::NoDetections => c"no detections",
        TfkeyStatus::Infeasible => c"infeasible",
        TfkeyStatus::Unbounded => c"unbounded",
        TfkeyStatus::IterationLimit => c"iteration limit",
        TfkeyStatus::MalformedLp => c"malformed linear program",
        TfkeyStatus::Parse => c"parse error",
        TfkeyStatus::BufferTooSmall => c"buffer too small",
        TfkeyStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_last_error(
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TfkeyStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    // Not routed through `guard`, which would overwrite the message.
    match copy_out(&msg, buf, cap, needed) {
        Ok(()) => TfkeyStatus::Ok,
        Err(Failure(s, _)) => s,
    }
}

/// Default channel: 3% misalignment, 1e-8 dark counts, 0.2 dB/km,
/// detector efficiency 0.3, error-correction inefficiency 1.1.
#[no_mangle]
pub extern "C" fn tfkey_channel_default() -> TfkeyChannel {
    let c = ChannelParams::default();
    TfkeyChannel {
        e_m: c.e_m,
        p_d: c.p_d,
        xi: c.xi,
        eta_d: c.eta_d,
        f_ec: c.f_ec,
    }
}

/// Budget from the total estimation failure probability.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_budget_from_total(
    eps_total_pe: f64,
    slices: usize,
    eps_cor: f64,
    eps_pa: f64,
    out: *mut TfkeyBudget,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = (&SecurityBudget::from_total(eps_total_pe, slices, eps_cor, eps_pa)?).into();
        Ok(())
    })
}

/// Budget from the per-bound failure probability.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_budget_from_eps_a(
    eps_a: f64,
    slices: usize,
    eps_cor: f64,
    eps_pa: f64,
    out: *mut TfkeyBudget,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = (&tfkey::make_budget(eps_a, slices, eps_cor, eps_pa)?).into();
        Ok(())
    })
}

/// Weight of the photon-number class `j` (mod `slices`) of a Poisson
/// distribution with the given mean.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_folded_poisson(
    j: usize,
    mean: f64,
    slices: usize,
    out: *mut f64,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = math::folded_poisson(j, mean, slices)?;
        Ok(())
    })
}

/// Fidelity between class `j` states prepared with single-pulse intensities
/// `a` and `b`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_folded_fidelity(
    j: usize,
    a: f64,
    b: f64,
    slices: usize,
    out: *mut f64,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = math::folded_fidelity(j, a, b, slices)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_binary_entropy(p: f64, out: *mut f64) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = math::binary_entropy(p)?;
        Ok(())
    })
}

/// Repeaterless bound at `distance_km`.
///
/// # Safety
/// `channel` must be null or valid; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_plob_rate(
    distance_km: f64,
    channel: *const TfkeyChannel,
    include_detector: bool,
    out: *mut f64,
) -> TfkeyStatus {
    guard(|| {
        let channel: ChannelParams = deref(channel, "channel")?.into();
        channel.validate()?;
        *target(out, "out")? = plob_rate(distance_km, &channel, include_detector)?;
        Ok(())
    })
}

/// Creates an analyzer using expected counts. Only `eps_a`, `eps_cor` and
/// `eps_pa` are read from `budget`; the totals follow each protocol's
/// number of slices.
///
/// # Safety
/// `channel` and `budget` must be null or valid; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_new(
    channel: *const TfkeyChannel,
    budget: *const TfkeyBudget,
    out: *mut *mut TfkeyAnalyzer,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = ptr::null_mut();
        let channel: ChannelParams = deref(channel, "channel")?.into();
        channel.validate()?;
        let b = deref(budget, "budget")?;
        // Checks the probabilities; totals are recomputed per protocol.
        let budget = tfkey::make_budget(b.eps_a, 2, b.eps_cor, b.eps_pa)?;
        *out = Box::into_raw(Box::new(TfkeyAnalyzer {
            channel,
            budget,
            options: AnalysisOptions::default(),
        }));
        Ok(())
    })
}

/// Draw counts around their expectations with `seed`, or use the
/// expectations again when `sampled` is false.
///
/// # Safety
/// `analyzer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_set_sampling(
    analyzer: *mut TfkeyAnalyzer,
    sampled: bool,
    seed: u64,
) -> TfkeyStatus {
    guard(|| {
        let a = target(analyzer, "analyzer")?;
        a.options.mode = if sampled {
            AnalysisMode::Sampled(seed)
        } else {
            AnalysisMode::Expected
        };
        Ok(())
    })
}

/// Multiplies every gap bound by `scale` (1 is the plain analysis).
///
/// # Safety
/// `analyzer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_set_delta_scale(
    analyzer: *mut TfkeyAnalyzer,
    scale: f64,
) -> TfkeyStatus {
    guard(|| {
        let a = target(analyzer, "analyzer")?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Failure(
                TfkeyStatus::InvalidArgument,
                format!("delta scale = {scale}"),
            ));
        }
        a.options.build = BuildOptions { delta_scale: scale };
        Ok(())
    })
}

/// Applies the detector efficiency inside the transmittance.
///
/// # Safety
/// `analyzer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_set_detector_in_transmittance(
    analyzer: *mut TfkeyAnalyzer,
    enabled: bool,
) -> TfkeyStatus {
    guard(|| {
        let a = target(analyzer, "analyzer")?;
        a.options.placement = if enabled {
            DetectorPlacement::InTransmittance
        } else {
            DetectorPlacement::Excluded
        };
        Ok(())
    })
}

/// Key rate for `protocol` at `distance_km`.
///
/// # Safety
/// `analyzer` and `protocol` must be null or valid; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_run(
    analyzer: *const TfkeyAnalyzer,
    protocol: *const TfkeyProtocol,
    distance_km: f64,
    out: *mut TfkeyReport,
) -> TfkeyStatus {
    guard(|| {
        let a = deref(analyzer, "analyzer")?;
        let p = self::protocol(deref(protocol, "protocol")?)?;
        let out = target(out, "out")?;
        let budget =
            tfkey::make_budget(a.budget.eps_a, p.slices, a.budget.eps_cor, a.budget.eps_pa)?;
        *out = report(&analyze(&p, &a.channel, distance_km, &budget, &a.options)?);
        Ok(())
    })
}

/// # Safety
/// `analyzer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfkey_analyzer_free(analyzer: *mut TfkeyAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

/// Phase-error program for `protocol` at `distance_km` with expected counts.
///
/// # Safety
/// `analyzer` and `protocol` must be null or valid; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_build(
    analyzer: *const TfkeyAnalyzer,
    protocol: *const TfkeyProtocol,
    distance_km: f64,
    out: *mut *mut TfkeyLp,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = ptr::null_mut();
        let a = deref(analyzer, "analyzer")?;
        let p = self::protocol(deref(protocol, "protocol")?)?;
        let counts = expected_observations(&p, &a.channel, distance_km, a.options.placement)?;
        let budget =
            tfkey::make_budget(a.budget.eps_a, p.slices, a.budget.eps_cor, a.budget.eps_pa)?;
        let build = build_lp_with(&p, &counts, &budget, &a.options.build)?;
        *out = Box::into_raw(Box::new(TfkeyLp { lp: build.lp }));
        Ok(())
    })
}

/// Reads a program from its text dump.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_parse(
    text: *const c_char,
    out: *mut *mut TfkeyLp,
) -> TfkeyStatus {
    guard(|| {
        let out = target(out, "out")?;
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(TfkeyStatus::Parse, format!("not UTF-8: {e}")))?;
        let lp = parse_dump(text)?;
        lp.validate()?;
        *out = Box::into_raw(Box::new(TfkeyLp { lp }));
        Ok(())
    })
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `lp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_num_vars(lp: *const TfkeyLp) -> usize {
    lp.as_ref().map_or(0, |h| h.lp.num_vars())
}

/// Writes the text dump of `lp` into `buf`; `needed` receives the size
/// including the NUL.
///
/// # Safety
/// `lp` must be null or a live handle, `buf` null or valid for `cap` bytes,
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_dump(
    lp: *const TfkeyLp,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TfkeyStatus {
    guard(|| {
        let h = deref(lp, "lp")?;
        copy_out(write_dump(&h.lp).as_bytes(), buf, cap, needed)
    })
}

/// Maximizes the program. An infeasible or unbounded program returns the
/// matching status. `values` (length `len`, at least the number of
/// variables) may be null; `iterations` may be null.
///
/// # Safety
/// `lp` must be null or a live handle; `objective` null or writable;
/// `values` null or valid for `len` doubles; `iterations` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_solve(
    lp: *const TfkeyLp,
    objective: *mut f64,
    values: *mut f64,
    len: usize,
    iterations: *mut usize,
) -> TfkeyStatus {
    guard(|| {
        let h = deref(lp, "lp")?;
        let objective = target(objective, "objective")?;
        let n = h.lp.num_vars();
        if !values.is_null() && len < n {
            return Err(Failure(
                TfkeyStatus::BufferTooSmall,
                format!("values holds {len}, {n} needed"),
            ));
        }
        let s = solve_max(&h.lp)?;
        if !iterations.is_null() {
            *iterations = s.iterations;
        }
        match s.status {
            LpStatus::Optimal => {
                *objective = s.objective_value;
                if !values.is_null() {
                    ptr::copy_nonoverlapping(s.values.as_ptr(), values, n);
                }
                Ok(())
            }
            LpStatus::Infeasible => Err(Failure(
                TfkeyStatus::Infeasible,
                "program is infeasible".into(),
            )),
            LpStatus::Unbounded => Err(Failure(
                TfkeyStatus::Unbounded,
                "program is unbounded".into(),
            )),
        }
    })
}

/// # Safety
/// `lp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfkey_lp_free(lp: *mut TfkeyLp) {
    if !lp.is_null() {
        drop(Box::from_raw(lp));
    }
}
