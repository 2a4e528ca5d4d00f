/// Number of filter words requested ahead of the one being read.
pub const PREFETCH_DISTANCE: usize = 32;

/// Hints the CPU to pull the cache line holding `ptr`. Compiles to nothing
/// on targets without a prefetch instruction.
#[inline(always)]
pub fn prefetch_read<T>(ptr: *const T) {
    #[cfg(all(target_arch = "x86_64", target_feature = "sse"))]
    // SAFETY: prefetch is a hint and never faults, even on invalid addresses.
    unsafe {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        _mm_prefetch::<_MM_HINT_T0>(ptr as *const i8);
    }
    #[cfg(not(all(target_arch = "x86_64", target_feature = "sse")))]
    let _ = ptr;
}
