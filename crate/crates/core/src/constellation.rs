//! Gray-labelled square QAM with optional rotation.
//!
//! Point `j` carries label `j` written MSB first: label bit `p` of point `j`
//! is `(j >> (M - 1 - p)) & 1`. The first `M/2` label bits select the in-phase
//! level through a binary-reflected Gray code, the last `M/2` the quadrature
//! level.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Modulation orders supported by the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
        Modulation::Qam256,
    ];

    /// Bits per modulated symbol.
    pub fn bits(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn from_bits(m: usize) -> Result<Self> {
        match m {
            2 => Ok(Modulation::Qpsk),
            4 => Ok(Modulation::Qam16),
            6 => Ok(Modulation::Qam64),
            8 => Ok(Modulation::Qam256),
            _ => Err(Error::Config(format!(
                "unsupported modulation order M={m}, expected one of 2, 4, 6, 8"
            ))),
        }
    }

    /// Single rotation angle per constellation size, in degrees.
    pub fn default_rotation_deg(self) -> f64 {
        match self {
            Modulation::Qpsk => 29.0,
            Modulation::Qam16 => 16.8,
            Modulation::Qam64 => 8.6,
            Modulation::Qam256 => (1.0f64 / 16.0).atan().to_degrees(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "QAM16",
            Modulation::Qam64 => "QAM64",
            Modulation::Qam256 => "QAM256",
        }
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QPSK" | "QAM4" => Ok(Modulation::Qpsk),
            "QAM16" | "16QAM" => Ok(Modulation::Qam16),
            "QAM64" | "64QAM" => Ok(Modulation::Qam64),
            "QAM256" | "256QAM" => Ok(Modulation::Qam256),
            _ => Err(Error::Config(format!("unknown modulation '{s}'"))),
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rotated, labelled, unit-energy constellation.
#[derive(Debug, Clone)]
pub struct ConstellationTable {
    order_bits: usize,
    rotation_deg: f64,
    points: Vec<Complex64>,
    /// `subsets[p][l]` lists the point indices whose label bit `p` equals `l`.
    subsets: Vec<[Vec<usize>; 2]>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl ConstellationTable {
    /// Builds the `2^M`-point Gray QAM rotated by `rotation_deg`.
    pub fn new(order_bits: usize, rotation_deg: f64) -> Result<Self> {
        Modulation::from_bits(order_bits)?;
        if !(0.0..90.0).contains(&rotation_deg) {
            return Err(Error::Config(format!(
                "rotation angle {rotation_deg} deg outside [0, 90)"
            )));
        }
        let half = order_bits / 2;
        let levels = 1usize << half;
        let n = 1usize << order_bits;
        // mean energy of the {±1, ±3, ...}² grid
        let k = 2.0 * (n as f64 - 1.0) / 3.0;
        let scale = 1.0 / k.sqrt();
        let rot = Complex64::from_polar(1.0, rotation_deg.to_radians());
        let amplitude = |gray: usize| (2.0 * gray_decode(gray) as f64 - (levels as f64 - 1.0)) * scale;

        let points = (0..n)
            .map(|j| {
                let i_label = j >> half;
                let q_label = j & (levels - 1);
                rot * Complex64::new(amplitude(i_label), amplitude(q_label))
            })
            .collect();

        let subsets = (0..order_bits)
            .map(|p| {
                let shift = order_bits - 1 - p;
                let zeros = (0..n).filter(|j| (j >> shift) & 1 == 0).collect();
                let ones = (0..n).filter(|j| (j >> shift) & 1 == 1).collect();
                [zeros, ones]
            })
            .collect();

        Ok(Self {
            order_bits,
            rotation_deg,
            points,
            subsets,
        })
    }

    pub fn for_modulation(modulation: Modulation, rotation_deg: f64) -> Result<Self> {
        Self::new(modulation.bits(), rotation_deg)
    }

    /// Bits per symbol, `M`.
    pub fn order_bits(&self) -> usize {
        self.order_bits
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Label bit `p` of point `index`.
    #[inline]
    pub fn label_bit(&self, index: usize, p: usize) -> u8 {
        ((index >> (self.order_bits - 1 - p)) & 1) as u8
    }

    /// Full label of point `index`, MSB first.
    pub fn label(&self, index: usize) -> Vec<u8> {
        (0..self.order_bits).map(|p| self.label_bit(index, p)).collect()
    }

    /// Index set of points whose label bit `p` equals `value`.
    pub fn subset(&self, p: usize, value: u8) -> &[usize] {
        &self.subsets[p][value as usize]
    }

    /// Point index carrying the given label.
    pub fn index_of(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.order_bits {
            return Err(Error::FrameFormat(format!(
                "bit group of length {} for a {}-bit constellation",
                bits.len(),
                self.order_bits
            )));
        }
        Ok(bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    /// Maps one `M`-bit group to its constellation point.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Complex64> {
        Ok(self.points[self.index_of(bits)?])
    }

    /// Maps a bit stream (length a multiple of `M`) to symbols.
    pub fn map_stream(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if !bits.len().is_multiple_of(self.order_bits) {
            return Err(Error::FrameFormat(format!(
                "{} bits cannot be grouped into {}-bit symbols",
                bits.len(),
                self.order_bits
            )));
        }
        bits.chunks_exact(self.order_bits).map(|g| self.map_bits(g)).collect()
    }
}
