//! Duo-binary circular turbo code.
//!
//! Two identical 8-state constituents in parallel, the second fed through
//! an ARP couple interleaver. Both constituents are tail-biting.

mod arp;
mod siso;
mod trellis;

pub use arp::{swap_couple, ArpParams, SymbolInterleaver};
pub use siso::{couple_to_bits, siso_decode, Boundary, SisoInput, SisoOutput};
pub use trellis::{Polynomials, TrellisDef, Transition, N_INPUTS, N_STATES};

use crate::error::{Error, Result};
use crate::interleaving::MOTHER_BITS_PER_SYMBOL;
use crate::Llr;

/// Default extrinsic scaling factor of the modified Max-Log-MAP.
pub const DEFAULT_SCALING: f64 = 0.75;

/// Encoder output, each stream `2K` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    /// `A_k, B_k` interleaved as `[A_0, B_0, A_1, B_1, ...]`.
    pub sys: Vec<u8>,
    /// `Y1_k, W1_k` from the natural-order constituent.
    pub par1: Vec<u8>,
    /// `Y2_j, W2_j` from the interleaved-order constituent.
    pub par2: Vec<u8>,
}

impl Codeword {
    /// Mother codeword in symbol-major order `[A B Y1 W1 Y2 W2]`.
    pub fn mother(&self) -> Vec<u8> {
        let k = self.sys.len() / 2;
        let mut out = Vec::with_capacity(k * MOTHER_BITS_PER_SYMBOL);
        for i in 0..k {
            out.extend_from_slice(&self.sys[2 * i..2 * i + 2]);
            out.extend_from_slice(&self.par1[2 * i..2 * i + 2]);
            out.extend_from_slice(&self.par2[2 * i..2 * i + 2]);
        }
        out
    }
}

/// Per-couple channel LLRs for both constituents, split from a mother frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLlrs {
    pub sys: Vec<[Llr; 2]>,
    pub par1: Vec<[Llr; 2]>,
    pub par2: Vec<[Llr; 2]>,
}

impl ChannelLlrs {
    pub fn from_mother(llrs: &[Llr]) -> Result<Self> {
        if !llrs.len().is_multiple_of(MOTHER_BITS_PER_SYMBOL) {
            return Err(Error::FrameFormat(format!(
                "mother LLR frame of {} values is not a whole number of couples",
                llrs.len()
            )));
        }
        let mut out = Self {
            sys: Vec::with_capacity(llrs.len() / MOTHER_BITS_PER_SYMBOL),
            par1: Vec::new(),
            par2: Vec::new(),
        };
        for c in llrs.chunks_exact(MOTHER_BITS_PER_SYMBOL) {
            out.sys.push([c[0], c[1]]);
            out.par1.push([c[2], c[3]]);
            out.par2.push([c[4], c[5]]);
        }
        Ok(out)
    }

    pub fn from_streams(sys: &[Llr], par1: &[Llr], par2: &[Llr]) -> Result<Self> {
        if sys.len() != par1.len() || sys.len() != par2.len() || !sys.len().is_multiple_of(2) {
            return Err(Error::FrameFormat(format!(
                "stream lengths {} / {} / {} are not equal and even",
                sys.len(),
                par1.len(),
                par2.len()
            )));
        }
        let pairs = |v: &[Llr]| v.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        Ok(Self {
            sys: pairs(sys),
            par1: pairs(par1),
            par2: pairs(par2),
        })
    }

    pub fn couples(&self) -> usize {
        self.sys.len()
    }
}

/// The turbo code for one frame size.
#[derive(Debug, Clone)]
pub struct TurboCode {
    trellis: TrellisDef,
    interleaver: SymbolInterleaver,
}

impl TurboCode {
    /// Code for `couples` duo-binary couples (`2 * couples` information bits).
    pub fn new(couples: usize, polys: Polynomials, arp: Option<ArpParams>) -> Result<Self> {
        if couples < 8 {
            return Err(Error::Config(format!("turbo frame needs at least 8 couples, got {couples}")));
        }
        let trellis = TrellisDef::new(polys)?;
        if !trellis.supports_length(couples) {
            return Err(Error::Config(format!(
                "{couples} couples cannot be circularly encoded (multiple of the feedback period)"
            )));
        }
        let interleaver = match arp {
            Some(p) => SymbolInterleaver::new(couples, p)?,
            None => SymbolInterleaver::default_for(couples)?,
        };
        Ok(Self { trellis, interleaver })
    }

    pub fn with_defaults(couples: usize) -> Result<Self> {
        Self::new(couples, Polynomials::default(), None)
    }

    pub fn couples(&self) -> usize {
        self.interleaver.len()
    }

    pub fn info_bits(&self) -> usize {
        2 * self.couples()
    }

    pub fn trellis(&self) -> &TrellisDef {
        &self.trellis
    }

    pub fn interleaver(&self) -> &SymbolInterleaver {
        &self.interleaver
    }

    pub fn encode(&self, info: &[u8]) -> Result<Codeword> {
        if info.len() != self.info_bits() {
            return Err(Error::FrameFormat(format!(
                "{} information bits for a code of {} bits",
                info.len(),
                self.info_bits()
            )));
        }
        let natural: Vec<u8> = info.chunks_exact(2).map(|c| ((c[0] & 1) << 1) | (c[1] & 1)).collect();
        let interleaved = self.interleaver.interleave_couples(&natural);
        let constituent = |couples: &[u8]| -> Result<Vec<u8>> {
            let start = self.trellis.circulation_state(couples)?;
            let (end, par) = self.trellis.run(start, couples);
            debug_assert_eq!(end, start);
            Ok(par.iter().flat_map(|&p| [p >> 1, p & 1]).collect())
        };
        Ok(Codeword {
            sys: info.iter().map(|b| b & 1).collect(),
            par1: constituent(&natural)?,
            par2: constituent(&interleaved)?,
        })
    }
}

/// Iterative decoder state for one frame.
///
/// The couple extrinsic passed from the second constituent to the first
/// survives between calls to [`TurboDecoder::iterate`], so decoding resumes
/// where it stopped when fresh channel LLRs arrive from the demapper.
#[derive(Debug, Clone)]
pub struct TurboDecoder<'a> {
    code: &'a TurboCode,
    sf: f64,
    /// A priori of the first constituent, natural order.
    apriori1: Vec<[f64; 4]>,
    /// Latest a posteriori couple metrics, natural order.
    soft: Option<Vec<[f64; 4]>>,
    iterations: usize,
}

impl<'a> TurboDecoder<'a> {
    pub fn new(code: &'a TurboCode, sf: f64) -> Self {
        Self {
            code,
            sf,
            apriori1: vec![[0.0; 4]; code.couples()],
            soft: None,
            iterations: 0,
        }
    }

    /// Forgets the exchanged extrinsics.
    pub fn reset(&mut self) {
        self.apriori1.iter_mut().for_each(|z| *z = [0.0; 4]);
        self.soft = None;
    }

    /// Turbo iterations run since construction.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// One turbo iteration: first constituent in natural order, then the
    /// second in interleaved order.
    ///
    /// With `emit_bit_ext` the bit extrinsics for every mother position are
    /// returned (symbol-major `[A B Y1 W1 Y2 W2]`): systematic and first
    /// parity from the first constituent, second parity from the second.
    pub fn iterate(&mut self, llrs: &ChannelLlrs, emit_bit_ext: bool) -> Result<Option<Vec<Llr>>> {
        let k = self.code.couples();
        if llrs.couples() != k {
            return Err(Error::FrameFormat(format!(
                "{} couples of channel LLRs for a {k}-couple code",
                llrs.couples()
            )));
        }
        let il = &self.code.interleaver;
        let trellis = &self.code.trellis;

        let out1 = siso_decode(
            trellis,
            &SisoInput {
                sys: &llrs.sys,
                par: &llrs.par1,
                apriori: &self.apriori1,
            },
            self.sf,
            emit_bit_ext,
            Boundary::Circular,
        )?;

        let sys2 = il.interleave_pairs(&llrs.sys);
        let apr2 = il.interleave_metrics(&out1.z_ext);
        let out2 = siso_decode(
            trellis,
            &SisoInput {
                sys: &sys2,
                par: &llrs.par2,
                apriori: &apr2,
            },
            self.sf,
            emit_bit_ext,
            Boundary::Circular,
        )?;

        self.apriori1 = il.deinterleave_metrics(&out2.z_ext);
        self.soft = Some(il.deinterleave_metrics(&out2.soft));
        self.iterations += 1;

        Ok(match (out1.bit_ext, out2.bit_ext) {
            (Some(b1), Some(b2)) => {
                let mut ext = Vec::with_capacity(k * MOTHER_BITS_PER_SYMBOL);
                for (e1, e2) in b1.iter().zip(&b2) {
                    ext.extend_from_slice(&[e1[0], e1[1], e1[2], e1[3], e2[2], e2[3]]);
                }
                Some(ext)
            }
            _ => None,
        })
    }

    /// Information bit decisions from the latest a posteriori metrics.
    pub fn decisions(&self) -> Result<Vec<u8>> {
        let soft = self
            .soft
            .as_ref()
            .ok_or_else(|| Error::Contract("no turbo iteration has been run".into()))?;
        Ok(soft
            .iter()
            .flat_map(|s| {
                let d = siso::argmax4(s);
                [d >> 1, d & 1]
            })
            .collect())
    }
}

/// Runs `n_iter` turbo iterations from scratch.
///
/// Returns the decided information bits and, with `emit_bit_ext`, the bit
/// extrinsics of the last iteration in mother order.
pub fn turbo_decode(
    code: &TurboCode,
    llrs: &ChannelLlrs,
    n_iter: usize,
    emit_bit_ext: bool,
    sf: f64,
) -> Result<(Vec<u8>, Option<Vec<Llr>>)> {
    if n_iter == 0 {
        return Err(Error::Config("turbo decoding needs at least one iteration".into()));
    }
    let mut dec = TurboDecoder::new(code, sf);
    let mut ext = None;
    for it in 0..n_iter {
        ext = dec.iterate(llrs, emit_bit_ext && it + 1 == n_iter)?;
    }
    Ok((dec.decisions()?, ext))
}
