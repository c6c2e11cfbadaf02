//! Link-level simulator and analysis toolkit for turbo bit-interleaved coded
//! modulation with iterative demapping and signal space diversity.
//!
//! The transmit chain is duo-binary turbo encoding, puncturing, S-random bit
//! interleaving, Gray QAM mapping, constellation rotation and a one-symbol
//! delay of the quadrature component. The receiver alternates a max-log
//! soft demapper with the turbo decoder under a configurable iteration
//! [`Schedule`](receiver::Schedule).
//!
//! Alongside the simulator the crate ships an EXIT chart engine
//! ([`exit`]) and an analytical operation / memory access cost model
//! ([`complexity`]) for the demapper and the decoder.

pub mod channel;
pub mod complexity;
pub mod constellation;
pub mod demapper;
pub mod error;
pub mod exit;
pub mod interleaving;
pub mod receiver;
pub mod turbo;

pub use error::{Error, Result};

/// Log-likelihood ratio, `ln P(bit = 1) / P(bit = 0)`.
pub type Llr = f64;

/// Derives the RNG seed for an independent sub-stream (frame, grid point...).
///
/// SplitMix64 finalizer, so neighbouring indices give unrelated seeds.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
