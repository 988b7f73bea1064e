//! Time limits for symbolic computation.

use std::cell::Cell;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

thread_local! {
    static DEADLINE: Cell<Option<Instant>> = const { Cell::new(None) };
}

/// Marker payload for an expired limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expired;

/// Runs `f` with a time limit on this thread. Expensive symbolic steps check
/// the limit and unwind back here without invoking the panic hook.
pub fn with_time_limit<T>(limit: Duration, f: impl FnOnce() -> T) -> Result<T, Expired> {
    let deadline = Instant::now().checked_add(limit);
    let prev = DEADLINE.get();
    let inner = match (prev, deadline) {
        (Some(p), Some(d)) => Some(p.min(d)),
        (p, d) => p.or(d),
    };
    DEADLINE.set(inner);
    let out = catch_unwind(AssertUnwindSafe(f));
    DEADLINE.set(prev);
    match out {
        Ok(v) => Ok(v),
        Err(payload) if payload.is::<Expired>() => Err(Expired),
        Err(payload) => resume_unwind(payload),
    }
}

pub(crate) fn checkpoint() {
    if let Some(d) = DEADLINE.get() {
        if Instant::now() >= d {
            resume_unwind(Box::new(Expired));
        }
    }
}
