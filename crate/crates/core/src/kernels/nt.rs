//! Cache-bypassing stores for the strip-mined split kernels.

/// Whether this build emits non-temporal stores. Elsewhere the split
/// kernels fall back to plain stores and report it.
pub const fn streaming_stores_available() -> bool {
    cfg!(target_arch = "x86_64")
}

/// Stores `v` at `p` without allocating the line in cache.
///
/// # Safety
/// `p` must be valid for an 8-byte aligned write owned by the caller.
#[inline(always)]
pub(crate) unsafe fn stream_f64(p: *mut f64, v: f64) {
    #[cfg(target_arch = "x86_64")]
    {
        core::arch::x86_64::_mm_stream_si64(p as *mut i64, v.to_bits() as i64);
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        *p = v;
    }
}

/// Orders preceding streaming stores before anything that follows.
#[inline]
pub(crate) fn store_fence() {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: sfence has no preconditions.
    unsafe {
        core::arch::x86_64::_mm_sfence();
    }
}
