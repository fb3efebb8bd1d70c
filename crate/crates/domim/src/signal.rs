//! Minimal interrupt flag: installs handlers that set a process-wide
//! atomic, polled by long-running loops.

use std::sync::atomic::{AtomicBool, Ordering};

static TRIGGERED: AtomicBool = AtomicBool::new(false);

extern "C" fn mark(_signal: libc::c_int) {
    TRIGGERED.store(true, Ordering::SeqCst);
}

/// Installs the flag-setting handler for the given signals.
pub fn install(signals: &[libc::c_int]) {
    for &signal in signals {
        unsafe {
            libc::signal(signal, mark as *const () as libc::sighandler_t);
        }
    }
}

/// Whether any installed signal has fired.
pub fn triggered() -> bool {
    TRIGGERED.load(Ordering::SeqCst)
}

/// Clears the flag (test support).
pub fn reset() {
    TRIGGERED.store(false, Ordering::SeqCst);
}
