//! 8-state duo-binary recursive systematic convolutional code.
//!
//! Register layout follows the DVB-RCS / WiMax CTC constituent: the couple
//! `(A, B)` enters the feedback node, `B` is also injected into the inputs of
//! the second and third cells. Polynomials are bit masks, bit `i` being the
//! coefficient of `D^i`.

use crate::error::{Error, Result};

pub const N_STATES: usize = 8;
/// Input couples per state.
pub const N_INPUTS: usize = 4;

/// Generator polynomials of the constituent code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Polynomials {
    pub feedback: u8,
    pub parity_y: u8,
    pub parity_w: u8,
}

impl Default for Polynomials {
    /// Feedback `1 + D + D^3`, parities `1 + D^2 + D^3` and `1 + D^3`.
    fn default() -> Self {
        Self {
            feedback: 0b1011,
            parity_y: 0b1101,
            parity_w: 0b1001,
        }
    }
}

/// One trellis edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: u8,
    pub to: u8,
    /// Input couple `d = 2A + B`.
    pub input: u8,
    /// Parity couple `2Y + W`.
    pub parity: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrellisDef {
    polys: Polynomials,
    next: [[u8; N_INPUTS]; N_STATES],
    parity: [[u8; N_INPUTS]; N_STATES],
    edges: Vec<Transition>,
}

#[inline]
fn tap(poly: u8, degree: u8, bit: u8) -> u8 {
    (poly >> degree) & bit & 1
}

/// State is `(S1 S2 S3)` packed as `4*S1 + 2*S2 + S3`.
fn step(polys: &Polynomials, state: u8, a: u8, b: u8) -> (u8, u8, u8) {
    let (s1, s2, s3) = ((state >> 2) & 1, (state >> 1) & 1, state & 1);
    let fb = tap(polys.feedback, 1, s1) ^ tap(polys.feedback, 2, s2) ^ tap(polys.feedback, 3, s3);
    let w = a ^ b ^ fb;
    let parity = |p: u8| tap(p, 0, w) ^ tap(p, 1, s1) ^ tap(p, 2, s2) ^ tap(p, 3, s3);
    let y_bit = parity(polys.parity_y);
    let w_bit = parity(polys.parity_w);
    let next = (w << 2) | ((s1 ^ b) << 1) | (s2 ^ b);
    (next, y_bit, w_bit)
}

impl TrellisDef {
    pub fn new(polys: Polynomials) -> Result<Self> {
        if polys.feedback & 1 == 0 || polys.feedback > 0xF || polys.parity_y > 0xF || polys.parity_w > 0xF {
            return Err(Error::Config(format!(
                "polynomials must have degree <= 3 and a feedback with constant term: {polys:?}"
            )));
        }
        let mut next = [[0u8; N_INPUTS]; N_STATES];
        let mut parity = [[0u8; N_INPUTS]; N_STATES];
        let mut edges = Vec::with_capacity(N_STATES * N_INPUTS);
        let mut incoming = [0usize; N_STATES];
        for s in 0..N_STATES as u8 {
            for d in 0..N_INPUTS as u8 {
                let (to, y, w) = step(&polys, s, d >> 1, d & 1);
                next[s as usize][d as usize] = to;
                parity[s as usize][d as usize] = (y << 1) | w;
                incoming[to as usize] += 1;
                edges.push(Transition {
                    from: s,
                    to,
                    input: d,
                    parity: (y << 1) | w,
                });
            }
        }
        if incoming.iter().any(|&c| c != N_INPUTS) {
            return Err(Error::Config(format!(
                "polynomials {polys:?} do not give a trellis with 4 branches into every state"
            )));
        }
        Ok(Self {
            polys,
            next,
            parity,
            edges,
        })
    }

    pub fn polynomials(&self) -> Polynomials {
        self.polys
    }

    pub fn edges(&self) -> &[Transition] {
        &self.edges
    }

    #[inline]
    pub fn next_state(&self, state: u8, input: u8) -> u8 {
        self.next[state as usize][input as usize]
    }

    #[inline]
    pub fn parity(&self, state: u8, input: u8) -> u8 {
        self.parity[state as usize][input as usize]
    }

    /// Final state after encoding `inputs` from `start`, plus parity couples.
    pub fn run(&self, start: u8, inputs: &[u8]) -> (u8, Vec<u8>) {
        let mut s = start;
        let par = inputs
            .iter()
            .map(|&d| {
                let p = self.parity(s, d);
                s = self.next_state(s, d);
                p
            })
            .collect();
        (s, par)
    }

    /// Circulation state for a frame: the start state the encoder also ends in.
    ///
    /// By linearity `end(s0) = G^K s0 ^ end(0)` where `G` is the zero-input
    /// state map, so the circulation state solves `s = G^K s ^ end(0)`.
    pub fn circulation_state(&self, inputs: &[u8]) -> Result<u8> {
        let (end_from_zero, _) = self.run(0, inputs);
        let gk = self.zero_input_power(inputs.len());
        let mut found = None;
        for s in 0..N_STATES as u8 {
            if gk[s as usize] ^ end_from_zero == s {
                if found.is_some() {
                    return Err(self.not_circular(inputs.len()));
                }
                found = Some(s);
            }
        }
        found.ok_or_else(|| self.not_circular(inputs.len()))
    }

    /// Whether every length-`k` frame has a unique circulation state.
    pub fn supports_length(&self, k: usize) -> bool {
        let gk = self.zero_input_power(k);
        // I + G^K must be invertible: no nonzero state with G^K s = s
        (1..N_STATES).all(|s| gk[s] as usize != s)
    }

    fn not_circular(&self, k: usize) -> Error {
        Error::Config(format!(
            "frame of {k} couples has no unique circulation state for this code (length is a multiple of the feedback period)"
        ))
    }

    /// Zero-input state map raised to the power `k`.
    fn zero_input_power(&self, mut k: usize) -> [u8; N_STATES] {
        let mut base = [0u8; N_STATES];
        for (s, b) in base.iter_mut().enumerate() {
            *b = self.next_state(s as u8, 0);
        }
        let mut acc: [u8; N_STATES] = std::array::from_fn(|s| s as u8);
        while k > 0 {
            if k & 1 == 1 {
                acc = std::array::from_fn(|s| base[acc[s] as usize]);
            }
            base = std::array::from_fn(|s| base[base[s] as usize]);
            k >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_in_four_out() {
        let t = TrellisDef::new(Polynomials::default()).unwrap();
        assert_eq!(t.edges().len(), 32);
        for s in 0..8u8 {
            let mut outs: Vec<u8> = (0..4).map(|d| t.next_state(s, d)).collect();
            outs.sort_unstable();
            outs.dedup();
            assert_eq!(outs.len(), 4);
            assert_eq!(t.edges().iter().filter(|e| e.to == s).count(), 4);
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let t = TrellisDef::new(Polynomials::default()).unwrap();
        assert_eq!(t.next_state(0, 0), 0);
        assert_eq!(t.parity(0, 0), 0);
    }

    #[test]
    fn feedback_period_seven() {
        let t = TrellisDef::new(Polynomials::default()).unwrap();
        for k in 1..30 {
            assert_eq!(t.supports_length(k), k % 7 != 0, "k={k}");
        }
        assert!(matches!(t.circulation_state(&[0; 14]), Err(Error::Config(_))));
    }

    #[test]
    fn circulation_state_closes_the_loop() {
        let t = TrellisDef::new(Polynomials::default()).unwrap();
        let inputs: Vec<u8> = (0..50).map(|i| ((i * 7 + 3) % 4) as u8).collect();
        let sc = t.circulation_state(&inputs).unwrap();
        assert_eq!(t.run(sc, &inputs).0, sc);
    }

    #[test]
    fn rejects_feedback_without_constant_term() {
        let p = Polynomials {
            feedback: 0b1010,
            ..Polynomials::default()
        };
        assert!(TrellisDef::new(p).is_err());
    }
}
