//! One-symbol cyclic delay of the quadrature component.
//!
//! Transmitted slot `q` carries the I component of mapped symbol `q` and the
//! Q component of mapped symbol `q - 1` (cyclically within the frame), so the
//! two components of a mapped symbol see independent fades.

use num_complex::Complex64;

pub fn q_delay(symbols: &[Complex64]) -> Vec<Complex64> {
    let n = symbols.len();
    (0..n)
        .map(|q| Complex64::new(symbols[q].re, symbols[(q + n - 1) % n].im))
        .collect()
}

/// Inverse of [`q_delay`] on received samples: mapped symbol `q` gets its I
/// component from slot `q` and its Q component from slot `q + 1`.
pub fn q_undelay(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    (0..n)
        .map(|q| Complex64::new(samples[q].re, samples[(q + 1) % n].im))
        .collect()
}

/// Per mapped symbol, the channel gains seen by its (I, Q) components.
pub fn q_undelay_gains(slot_gains: &[f64]) -> Vec<(f64, f64)> {
    let n = slot_gains.len();
    (0..n).map(|q| (slot_gains[q], slot_gains[(q + 1) % n])).collect()
}
