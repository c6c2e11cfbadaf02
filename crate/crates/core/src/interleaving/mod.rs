//! Bit interleaver, rate matching and the I/Q component delay of the
//! signal-space-diversity transmitter.

mod component;
mod permutation;
mod puncture;

pub use component::{q_delay, q_undelay, q_undelay_gains};
pub use permutation::Permutation;
pub use puncture::{CodeRate, PuncturePattern, MOTHER_BITS_PER_SYMBOL};
