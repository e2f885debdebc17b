//! C interface to the `fdrelay` model.
//!
//! Every entry point returns an [`FdrStatus`]. On failure the message is kept
//! per thread and can be read with [`fdr_last_error`] until the next call on
//! that thread. Handles are opaque and must be released with their `_free`
//! function; strings returned by the library are released with
//! [`fdr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fdrelay::experiment::{parse_config, run_experiment};
use fdrelay::metrics::evaluate;
use fdrelay::phy::success_probability;
use fdrelay::sim::{run_simulation, stability_probe};
use fdrelay::{
    Delay, DelayConvention, Error, Node, Receiver, SamplingMode, SimConfig, StabilityVerdict, SymmetricParams,
    TableMode, TransmitSet,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Contract = 3,
    WrongModel = 4,
    ResourceBound = 5,
    Unstable = 6,
    Truncation = 7,
    UndefinedFraction = 8,
    Config = 9,
    Io = 10,
    InvalidUtf8 = 11,
    Panic = 12,
}

impl From<&Error> for FdrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => FdrStatus::Domain,
            Error::Contract(_) => FdrStatus::Contract,
            Error::WrongModel(_) => FdrStatus::WrongModel,
            Error::ResourceBound { .. } => FdrStatus::ResourceBound,
            Error::Unstable { .. } => FdrStatus::Unstable,
            Error::Truncation { .. } => FdrStatus::Truncation,
            Error::UndefinedFraction => FdrStatus::UndefinedFraction,
            Error::Config { .. } => FdrStatus::Config,
            Error::Io(_) => FdrStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrTableMode {
    Derived = 0,
    Printed = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrDelayConvention {
    HeadOfLine = 0,
    AdditiveService = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrSamplingMode {
    Probability = 0,
    Sinr = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrReceiver {
    Relay = 0,
    Destination = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FdrVerdict {
    Stable = 0,
    Unstable = 1,
    #[default]
    Inconclusive = 2,
}

/// Opaque symmetric network description.
pub struct FdrParams(SymmetricParams);

/// Analytical results for one user of a symmetric network.
///
/// Delays are `INFINITY` when the relay queue is unstable and `NAN` when
/// undefined. `relayed_fraction` is `NAN` when the user throughput is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdrEvaluation {
    pub mu: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda: f64,
    pub p_empty: f64,
    pub q_bar: f64,
    /// Smallest stabilizing relay access probability; above 1 when none is.
    pub q0_min: f64,
    pub stable: bool,
    pub t_direct: f64,
    pub t_relayed: f64,
    pub t_user: f64,
    pub t_aggr: f64,
    pub relayed_fraction: f64,
    pub d_queue: f64,
    pub d_relay: f64,
    pub delay: f64,
    pub baseline_throughput: f64,
    pub baseline_delay: f64,
}

/// Simulation estimates (mean and standard error) for a symmetric network.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdrSimSummary {
    pub measured_slots: u64,
    pub mu: f64,
    pub mu_se: f64,
    pub lambda: f64,
    pub lambda_se: f64,
    pub p_empty: f64,
    pub p_empty_se: f64,
    pub q_bar: f64,
    pub q_bar_se: f64,
    pub t_user: f64,
    pub t_user_se: f64,
    pub t_aggr: f64,
    pub t_aggr_se: f64,
    pub delay: f64,
    pub delay_se: f64,
    pub max_queue: u64,
    pub verdict: FdrVerdict,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), FdrStatus>) -> FdrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdrStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FdrStatus::Panic
        }
    }
}

fn fail(e: Error) -> FdrStatus {
    set_error(e.to_string());
    FdrStatus::from(&e)
}

fn null(what: &str) -> FdrStatus {
    set_error(format!("null pointer: {what}"));
    FdrStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FdrStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FdrStatus::InvalidUtf8
    })
}

fn delay_value(d: &Delay) -> f64 {
    match d {
        Delay::Finite(x) => *x,
        Delay::Unbounded { .. } => f64::INFINITY,
        Delay::Undefined => f64::NAN,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fdr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn fdr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reference setup with `n` users, capture threshold `gamma` at both
/// receivers, self-interference coefficient `g` and access probabilities
/// `q`, `q0`. Returns NULL for an invalid configuration.
#[no_mangle]
pub extern "C" fn fdr_params_new(n: usize, gamma: f64, g: f64, q: f64, q0: f64) -> *mut FdrParams {
    let mut out = ptr::null_mut();
    guard(|| {
        let p = SymmetricParams::reference(n, gamma, g, q, q0);
        p.to_network().validate().map_err(fail)?;
        out = Box::into_raw(Box::new(FdrParams(p)));
        Ok(())
    });
    out
}

/// # Safety
/// `p` must be NULL or a handle from [`fdr_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fdr_params_free(p: *mut FdrParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Sets one field by name: `n`, `q`, `q0`, `gamma` (both receivers),
/// `gamma_0`, `gamma_d`, `g`, `r_d`, `r_0`, `r_0d`, `alpha`, `eta` (both
/// receivers), `eta_0`, `eta_d`, `p_tx_user`, `p_tx_relay`, `v_d`, `v_0`,
/// `v_0d`. The handle is left unchanged if the result would be invalid.
///
/// # Safety
/// `p` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fdr_params_set(p: *mut FdrParams, key: *const c_char, value: f64) -> FdrStatus {
    guard(|| {
        let params = p.as_mut().ok_or_else(|| null("params"))?;
        let key = str_arg(key, "key")?;
        let mut s = params.0;
        match key {
            "n" => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                    return Err(fail(Error::domain("n", format!("{value} is not a positive integer"))));
                }
                s.n = value as usize;
            }
            "q" => s.q = value,
            "q0" => s.q0 = value,
            "gamma" => s = s.with_gamma(value),
            "gamma_0" => s.gamma_0 = value,
            "gamma_d" => s.gamma_d = value,
            "g" => s.g = value,
            "r_d" => s.r_d = value,
            "r_0" => s.r_0 = value,
            "r_0d" => s.r_0d = value,
            "alpha" => s.alpha = value,
            "eta" => {
                s.eta_0 = value;
                s.eta_d = value;
            }
            "eta_0" => s.eta_0 = value,
            "eta_d" => s.eta_d = value,
            "p_tx_user" => s.p_tx_user = value,
            "p_tx_relay" => s.p_tx_relay = value,
            "v_d" => s.v_d = value,
            "v_0" => s.v_0 = value,
            "v_0d" => s.v_0d = value,
            other => return Err(fail(Error::domain(other, "unknown parameter"))),
        }
        s.to_network().validate().map_err(fail)?;
        params.0 = s;
        Ok(())
    })
}

/// Reads one field by name; accepts the same keys as [`fdr_params_set`]
/// except the combined `gamma` and `eta`.
///
/// # Safety
/// `p` must be a live handle, `key` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fdr_params_get(p: *const FdrParams, key: *const c_char, out: *mut f64) -> FdrStatus {
    guard(|| {
        let s = &p.as_ref().ok_or_else(|| null("params"))?.0;
        let key = str_arg(key, "key")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match key {
            "n" => s.n as f64,
            "q" => s.q,
            "q0" => s.q0,
            "gamma_0" => s.gamma_0,
            "gamma_d" => s.gamma_d,
            "g" => s.g,
            "r_d" => s.r_d,
            "r_0" => s.r_0,
            "r_0d" => s.r_0d,
            "alpha" => s.alpha,
            "eta_0" => s.eta_0,
            "eta_d" => s.eta_d,
            "p_tx_user" => s.p_tx_user,
            "p_tx_relay" => s.p_tx_relay,
            "v_d" => s.v_d,
            "v_0" => s.v_0,
            "v_0d" => s.v_0d,
            other => return Err(fail(Error::domain(other, "unknown parameter"))),
        };
        Ok(())
    })
}

/// Capture probability of `tx` at `rx` when the relay (if `relay_tx`) and
/// the users listed in `users` transmit. `tx` is a user index, or -1 for
/// the relay; the transmitter must belong to the transmit set.
///
/// # Safety
/// `p` must be a live handle, `users` must point to `n_users` readable
/// indices (or be NULL when `n_users` is 0) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdr_success_probability(
    p: *const FdrParams,
    tx: i64,
    rx: FdrReceiver,
    relay_tx: bool,
    users: *const usize,
    n_users: usize,
    out: *mut f64,
) -> FdrStatus {
    guard(|| {
        let s = &p.as_ref().ok_or_else(|| null("params"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let list: &[usize] = if n_users == 0 {
            &[]
        } else if users.is_null() {
            return Err(null("users"));
        } else {
            std::slice::from_raw_parts(users, n_users)
        };
        if let Some(&u) = list.iter().find(|&&u| u >= s.n) {
            return Err(fail(Error::domain(
                "users",
                format!("index {u} out of range for {} users", s.n),
            )));
        }
        let node = match tx {
            -1 => Node::Relay,
            i if i >= 0 => Node::User(i as usize),
            i => return Err(fail(Error::domain("tx", format!("{i} is neither a user nor -1")))),
        };
        let rx = match rx {
            FdrReceiver::Relay => Receiver::Relay,
            FdrReceiver::Destination => Receiver::Destination,
        };
        let set = TransmitSet::new(relay_tx, list.iter().copied());
        *out = success_probability(node, rx, &set, &s.to_network()).map_err(fail)?;
        Ok(())
    })
}

/// Analytical evaluation. An unstable relay queue is not an error: `stable`
/// is false, the delays are infinite and throughput takes its saturated
/// value.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdr_evaluate(
    p: *const FdrParams,
    table_mode: FdrTableMode,
    convention: FdrDelayConvention,
    out: *mut FdrEvaluation,
) -> FdrStatus {
    guard(|| {
        let s = &p.as_ref().ok_or_else(|| null("params"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mode = match table_mode {
            FdrTableMode::Derived => TableMode::Derived,
            FdrTableMode::Printed => TableMode::Printed,
        };
        let conv = match convention {
            FdrDelayConvention::HeadOfLine => DelayConvention::HeadOfLine,
            FdrDelayConvention::AdditiveService => DelayConvention::AdditiveService,
        };
        let e = evaluate(&s.to_network(), mode, conv).map_err(fail)?;
        let (q, r) = (&e.queue, &e.report);
        let u = r.users[0];
        *out = FdrEvaluation {
            mu: q.mu,
            lambda0: q.lambda0,
            lambda1: q.lambda1,
            lambda: q.lambda,
            p_empty: q.p_empty,
            q_bar: q.q_bar,
            q0_min: q.q0_min.value(),
            stable: r.stable,
            t_direct: u.t_direct,
            t_relayed: u.t_relayed,
            t_user: u.t_total,
            t_aggr: r.t_aggr,
            relayed_fraction: r.relayed_fraction.unwrap_or(f64::NAN),
            d_queue: delay_value(&r.d_queue),
            d_relay: delay_value(&r.d_relay),
            delay: delay_value(&r.delay[0]),
            baseline_throughput: e.baseline.throughput[0],
            baseline_delay: delay_value(&e.baseline.delay[0]),
        };
        Ok(())
    })
}

/// Slot-level simulation of `slots` slots (default warmup and batching).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdr_simulate(
    p: *const FdrParams,
    slots: u64,
    seed: u64,
    mode: FdrSamplingMode,
    out: *mut FdrSimSummary,
) -> FdrStatus {
    guard(|| {
        let s = &p.as_ref().ok_or_else(|| null("params"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mode = match mode {
            FdrSamplingMode::Probability => SamplingMode::Probability,
            FdrSamplingMode::Sinr => SamplingMode::Sinr,
        };
        let cfg = SimConfig::new(slots, seed).with_mode(mode);
        let r = run_simulation(&s.to_network(), &cfg).map_err(fail)?;
        let u = &r.user_mean;
        *out = FdrSimSummary {
            measured_slots: r.measured_slots,
            mu: r.mu.mean,
            mu_se: r.mu.se,
            lambda: r.lambda.mean,
            lambda_se: r.lambda.se,
            p_empty: r.p_empty.mean,
            p_empty_se: r.p_empty.se,
            q_bar: r.q_bar.mean,
            q_bar_se: r.q_bar.se,
            t_user: u.t_total.mean,
            t_user_se: u.t_total.se,
            t_aggr: r.t_aggr.mean,
            t_aggr_se: r.t_aggr.se,
            delay: u.delay.mean,
            delay_se: u.delay.se,
            max_queue: r.trace.max,
            verdict: match stability_probe(&r) {
                StabilityVerdict::Stable => FdrVerdict::Stable,
                StabilityVerdict::Unstable => FdrVerdict::Unstable,
                StabilityVerdict::Inconclusive => FdrVerdict::Inconclusive,
            },
        };
        Ok(())
    })
}

/// Runs the experiment described by `config` (the CLI configuration format)
/// and stores the CSV in `*csv_out`, to be released with
/// [`fdr_string_free`]. `*issues_out`, if non-NULL, receives the number of
/// oracle disagreements.
///
/// # Safety
/// `config` must be a NUL-terminated string and `csv_out` writable.
#[no_mangle]
pub unsafe extern "C" fn fdr_experiment_csv(
    config: *const c_char,
    csv_out: *mut *mut c_char,
    issues_out: *mut usize,
) -> FdrStatus {
    guard(|| {
        let text = str_arg(config, "config")?;
        let csv_out = csv_out.as_mut().ok_or_else(|| null("csv_out"))?;
        *csv_out = ptr::null_mut();
        let spec = parse_config(text).map_err(fail)?;
        let out = run_experiment(&spec).map_err(fail)?;
        if let Some(n) = issues_out.as_mut() {
            *n = out.issues.len();
        }
        *csv_out = CString::new(out.csv)
            .map_err(|_| fail(Error::Io("CSV contains NUL".into())))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fdr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
