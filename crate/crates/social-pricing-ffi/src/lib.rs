//! C ABI over the solver crate. Conventions, uniform across every entry
//! point:
//!
//! - results come back through out pointers; any out pointer may be null to
//!   skip that value;
//! - the return value is an [`SpStatus`]; on a nonzero status no out
//!   pointer is written;
//! - the message for the most recent failure on the calling thread is
//!   available through [`sp_last_error_message`];
//! - handles created by `sp_market_from_json` are owned by the caller and
//!   released with `sp_market_free`, never with `free(3)`.
//!
//! The matching header is generated into `include/social_pricing.h` at
//! build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};

use social_pricing::error::ModelError;
use social_pricing::fourstage;
use social_pricing::pbe::{self, MarketConfig};
use social_pricing::sim::{self, StrategyProfile};
use social_pricing::social;

/// Status code returned by every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    /// Success.
    Ok = 0,
    /// Invalid configuration or input shape.
    Config = 1,
    /// The solver could not produce an equilibrium for this instance.
    Solver = 2,
    /// Underlying I/O failure.
    Io = 3,
    /// A required pointer argument was null.
    NullArg = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
}

/// Opaque market handle wrapping a validated configuration.
pub struct SpMarket {
    cfg: MarketConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(e: &ModelError) -> SpStatus {
    set_error(e.to_string());
    match e.class() {
        1 => SpStatus::Config,
        3 => SpStatus::Io,
        _ => SpStatus::Solver,
    }
}

unsafe fn write_out(ptr: *mut f64, value: f64) {
    if !ptr.is_null() {
        *ptr = value;
    }
}

/// Parse a market configuration from JSON (the same schema as the CLI's
/// `market` block) and hand back an owned handle through `out`.
///
/// # Safety
/// `json` must point to a NUL-terminated byte string valid for the duration
/// of the call. `out` must be valid for one pointer-sized write.
#[no_mangle]
pub unsafe extern "C" fn sp_market_from_json(
    json: *const c_char,
    out: *mut *mut SpMarket,
) -> SpStatus {
    if json.is_null() || out.is_null() {
        set_error("null argument to sp_market_from_json");
        return SpStatus::NullArg;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("configuration is not valid UTF-8");
            return SpStatus::Utf8;
        }
    };
    let cfg: MarketConfig = match serde_json::from_str(text) {
        Ok(cfg) => cfg,
        Err(e) => {
            set_error(format!("invalid configuration: {e}"));
            return SpStatus::Config;
        }
    };
    if let Err(e) = cfg.validate() {
        return fail(&e);
    }
    *out = Box::into_raw(Box::new(SpMarket { cfg }));
    SpStatus::Ok
}

/// Release a handle returned by `sp_market_from_json`. Null is a no-op.
///
/// # Safety
/// `market` must be null or a pointer previously returned by
/// `sp_market_from_json` that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn sp_market_free(market: *mut SpMarket) {
    if !market.is_null() {
        // SAFETY: caller guarantees the pointer came from Box::into_raw in
        // sp_market_from_json and is not freed twice.
        drop(Box::from_raw(market));
    }
}

/// Copy the most recent error message on this thread into `buf`, truncating
/// to `cap - 1` bytes and always NUL-terminating when `cap > 0`. Returns
/// the full message length in bytes (excluding the NUL), so a caller can
/// size a buffer and call again.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes, unless `cap` is zero or
/// `buf` is null (then nothing is written).
#[no_mangle]
pub unsafe extern "C" fn sp_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            // SAFETY: caller guarantees cap writable bytes; n < cap.
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Solve the profiling equilibrium, routing the accuracy endpoints to their
/// benchmark solutions. Writes the activity threshold, the uniform price,
/// and the fixed-point residual.
///
/// # Safety
/// `market` must be a live handle from `sp_market_from_json`; each non-null
/// out pointer must be valid for one f64 write.
#[no_mangle]
pub unsafe extern "C" fn sp_solve_pbe(
    market: *const SpMarket,
    v_star: *mut f64,
    p0_star: *mut f64,
    residual: *mut f64,
) -> SpStatus {
    let Some(m) = market.as_ref() else {
        set_error("null market handle");
        return SpStatus::NullArg;
    };
    match pbe::solve_pbe_or_benchmark(&m.cfg) {
        Ok(eq) => {
            write_out(v_star, eq.v_star);
            write_out(p0_star, eq.p0_star);
            write_out(residual, eq.residual);
            SpStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Solve the price-commitment variant. Writes the announced threshold, the
/// committed uniform price, and the seller's total expected revenue.
///
/// # Safety
/// `market` must be a live handle from `sp_market_from_json`; each non-null
/// out pointer must be valid for one f64 write.
#[no_mangle]
pub unsafe extern "C" fn sp_solve_four_stage(
    market: *const SpMarket,
    v_e: *mut f64,
    p0_e: *mut f64,
    total_revenue: *mut f64,
) -> SpStatus {
    let Some(m) = market.as_ref() else {
        set_error("null market handle");
        return SpStatus::NullArg;
    };
    match fourstage::solve_four_stage(&m.cfg) {
        Ok(out) => {
            write_out(v_e, out.v_e);
            write_out(p0_e, out.p0_e);
            write_out(total_revenue, out.total_expected_revenue);
            SpStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Expected social benefit of staying fully active when every other user
/// activates below the threshold `v`.
///
/// # Safety
/// `market` must be a live handle from `sp_market_from_json`; `out` must be
/// null or valid for one f64 write.
#[no_mangle]
pub unsafe extern "C" fn sp_expected_benefit(
    market: *const SpMarket,
    v: f64,
    out: *mut f64,
) -> SpStatus {
    let Some(m) = market.as_ref() else {
        set_error("null market handle");
        return SpStatus::NullArg;
    };
    if !v.is_finite() {
        set_error(format!("threshold {v} must be finite"));
        return SpStatus::Config;
    }
    let prob = m.cfg.social.dist.cdf(v);
    write_out(out, social::expected_benefit_prob(&m.cfg.social, prob));
    SpStatus::Ok
}

/// Monte Carlo market simulation under a threshold activity rule. Writes
/// the mean and variance of per-run seller revenue.
///
/// # Safety
/// `market` must be a live handle from `sp_market_from_json`; each non-null
/// out pointer must be valid for one f64 write.
#[no_mangle]
pub unsafe extern "C" fn sp_simulate(
    market: *const SpMarket,
    price: f64,
    threshold: f64,
    seed: u64,
    runs: u32,
    mean_revenue: *mut f64,
    var_revenue: *mut f64,
) -> SpStatus {
    let Some(m) = market.as_ref() else {
        set_error("null market handle");
        return SpStatus::NullArg;
    };
    match sim::simulate_market(
        &m.cfg,
        price,
        &StrategyProfile::ThresholdRule(threshold),
        seed,
        runs,
    ) {
        Ok(report) => {
            write_out(mean_revenue, report.mean_revenue);
            write_out(var_revenue, report.var_revenue);
            SpStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
