/// `ceil(a / b)` for `b > 0`.
#[inline]
pub const fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Smallest `h` with `base^h >= n`, i.e. `ceil(log_base(n))`; 0 for `n <= 1`.
///
/// Integer-only, so exact for every input. `base` must be at least 2.
pub fn ceil_log(n: u64, base: u64) -> u32 {
    debug_assert!(base >= 2);
    let mut levels = 0;
    let mut reach: u64 = 1;
    while reach < n {
        reach = reach.saturating_mul(base);
        levels += 1;
    }
    levels
}
