//! Max-Log-MAP soft-in soft-out decoder for one duo-binary constituent.
//!
//! Branch metric of an edge carrying couple `d = (a, b)` and parity `(y, w)`:
//!
//! ```text
//! gamma = a*L_A + b*L_B  +  y*L_Y + w*L_W  +  z_apr(d)
//!         systematic        parity            a priori
//! ```
//!
//! Forward / backward recursions use plain `max`; every N-input max is a
//! chain of N-1 two-input maxes.

use super::trellis::{TrellisDef, N_STATES};
use crate::error::{Error, Result};
use crate::Llr;

/// Decoder input for a frame of `K` couples.
#[derive(Debug, Clone, Copy)]
pub struct SisoInput<'a> {
    /// `[L_A, L_B]` per couple.
    pub sys: &'a [[Llr; 2]],
    /// `[L_Y, L_W]` per couple, zero where punctured.
    pub par: &'a [[Llr; 2]],
    /// Couple-level a priori `z(d)`, `d = 2a + b`, with `z(00) = 0`.
    pub apriori: &'a [[f64; 4]],
}

/// State metrics at the frame edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Tail-biting: a warm-up over the last (first) couples of the frame,
    /// started from all-equal metrics, gives the initial forward (backward)
    /// metrics of the real pass.
    Circular,
    /// Explicit start `alpha` and end `beta` metrics.
    Fixed {
        alpha0: [f64; N_STATES],
        beta_end: [f64; N_STATES],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SisoOutput {
    /// Scaled couple extrinsic, `z_ext(00) = 0`.
    pub z_ext: Vec<[f64; 4]>,
    /// A posteriori couple metrics `so(d)`, up to a per-couple constant.
    pub soft: Vec<[f64; 4]>,
    /// Bit extrinsics `[A, B, Y, W]` for the demapper, when requested.
    pub bit_ext: Option<Vec<[Llr; 4]>>,
}

impl SisoOutput {
    /// Hard decision per couple: `argmax_d so(d)`.
    pub fn decisions(&self) -> Vec<u8> {
        self.soft.iter().map(argmax4).collect()
    }
}

#[inline]
pub(crate) fn argmax4(v: &[f64; 4]) -> u8 {
    let mut best = 0;
    for d in 1..4 {
        if v[d] > v[best] {
            best = d;
        }
    }
    best as u8
}

/// Bit LLRs `[L(first bit), L(second bit)]` from a couple metric.
#[inline]
pub fn couple_to_bits(m: &[f64; 4]) -> [Llr; 2] {
    [
        m[3].max(m[2]) - m[1].max(m[0]),
        m[3].max(m[1]) - m[2].max(m[0]),
    ]
}

#[inline]
fn bit(v: u8, shift: u8) -> f64 {
    ((v >> shift) & 1) as f64
}

fn normalize(m: &mut [f64; N_STATES]) {
    let top = m.iter().copied().fold(f64::NEG_INFINITY, fmax);
    for v in m.iter_mut() {
        *v -= top;
    }
}

struct Branches {
    /// Per couple, systematic metric per input `d`.
    sys: Vec<[f64; 4]>,
    par: Vec<[f64; 4]>,
    apr: Vec<[f64; 4]>,
    /// Full branch metric per couple, indexed `4 * input + parity`.
    full: Vec<[f64; 16]>,
}

impl Branches {
    fn new(input: &SisoInput<'_>) -> Self {
        let couple = |l: &[Llr; 2]| std::array::from_fn(|d| bit(d as u8, 1) * l[0] + bit(d as u8, 0) * l[1]);
        let sys: Vec<[f64; 4]> = input.sys.iter().map(couple).collect();
        let par: Vec<[f64; 4]> = input.par.iter().map(couple).collect();
        let apr = input.apriori.to_vec();
        let full = sys
            .iter()
            .zip(&par)
            .zip(&apr)
            .map(|((s, p), a)| std::array::from_fn(|i| s[i >> 2] + a[i >> 2] + p[i & 3]))
            .collect();
        Self { sys, par, apr, full }
    }
}

/// Edge as `(from, to, 4 * input + parity)`.
type Edge = (usize, usize, usize);

/// Per state, the four `(neighbour, branch index)` pairs entering it
/// (`into`) and leaving it (`out_of`).
struct EdgeTables {
    all: Vec<Edge>,
    into: [[(usize, usize); 4]; N_STATES],
    out_of: [[(usize, usize); 4]; N_STATES],
}

impl EdgeTables {
    fn new(trellis: &TrellisDef) -> Self {
        let all: Vec<Edge> = trellis
            .edges()
            .iter()
            .map(|e| (e.from as usize, e.to as usize, 4 * e.input as usize + e.parity as usize))
            .collect();
        let mut into = [[(0, 0); 4]; N_STATES];
        let mut out_of = [[(0, 0); 4]; N_STATES];
        let (mut ni, mut no) = ([0; N_STATES], [0; N_STATES]);
        for &(from, to, i) in &all {
            into[to][ni[to]] = (from, i);
            ni[to] += 1;
            out_of[from][no[from]] = (to, i);
            no[from] += 1;
        }
        Self { all, into, out_of }
    }
}

#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn max4(m: &[f64; N_STATES], g: &[f64; 16], nb: &[(usize, usize); 4]) -> f64 {
    let x = fmax(m[nb[0].0 & 7] + g[nb[0].1 & 15], m[nb[1].0 & 7] + g[nb[1].1 & 15]);
    let y = fmax(m[nb[2].0 & 7] + g[nb[2].1 & 15], m[nb[3].0 & 7] + g[nb[3].1 & 15]);
    fmax(x, y)
}

/// Couples run before the real pass to estimate the circular boundary metrics.
const WARMUP_COUPLES: usize = 48;

fn forward_pass(
    edges: &EdgeTables,
    br: &Branches,
    range: std::ops::Range<usize>,
    start: [f64; N_STATES],
    store: Option<&mut Vec<[f64; N_STATES]>>,
) -> [f64; N_STATES] {
    let mut alpha = start;
    let mut store = store;
    if let Some(s) = store.as_deref_mut() {
        s.push(alpha);
    }
    for k in range {
        let g = &br.full[k];
        let mut next: [f64; N_STATES] = std::array::from_fn(|s| max4(&alpha, g, &edges.into[s]));
        normalize(&mut next);
        alpha = next;
        if let Some(s) = store.as_deref_mut() {
            s.push(alpha);
        }
    }
    alpha
}

fn backward_pass(
    edges: &EdgeTables,
    br: &Branches,
    range: std::ops::Range<usize>,
    end: [f64; N_STATES],
    store: Option<&mut Vec<[f64; N_STATES]>>,
) -> [f64; N_STATES] {
    let mut beta = end;
    let mut store = store;
    if let Some(s) = store.as_deref_mut() {
        s[range.end] = beta;
    }
    for k in range.rev() {
        let g = &br.full[k];
        let mut prev: [f64; N_STATES] = std::array::from_fn(|s| max4(&beta, g, &edges.out_of[s]));
        normalize(&mut prev);
        beta = prev;
        if let Some(s) = store.as_deref_mut() {
            s[k] = beta;
        }
    }
    beta
}

fn check_input(input: &SisoInput<'_>) -> Result<()> {
    let k = input.sys.len();
    if input.par.len() != k || input.apriori.len() != k {
        return Err(Error::FrameFormat(format!(
            "SISO streams disagree: {} systematic, {} parity, {} a priori couples",
            k,
            input.par.len(),
            input.apriori.len()
        )));
    }
    if k == 0 {
        return Err(Error::FrameFormat("empty SISO frame".into()));
    }
    let finite = input.sys.iter().chain(input.par).all(|v| v.iter().all(|x| x.is_finite()))
        && input.apriori.iter().all(|v| v.iter().all(|x| x.is_finite()));
    if !finite {
        return Err(Error::Numeric("non-finite value in SISO input".into()));
    }
    Ok(())
}

/// Runs one constituent decoder over a frame.
///
/// `sf` scales the couple extrinsic after normalization; `emit_bit_ext`
/// also produces the bit-level extrinsics fed back to the demapper.
pub fn siso_decode(
    trellis: &TrellisDef,
    input: &SisoInput<'_>,
    sf: f64,
    emit_bit_ext: bool,
    boundary: Boundary,
) -> Result<SisoOutput> {
    check_input(input)?;
    if !(sf > 0.0 && sf <= 1.0) {
        return Err(Error::Config(format!("scaling factor {sf} outside (0, 1]")));
    }
    let k_len = input.sys.len();
    let br = Branches::new(input);
    let edges = EdgeTables::new(trellis);

    let (alpha0, beta_end) = match boundary {
        Boundary::Fixed { alpha0, beta_end } => (alpha0, beta_end),
        Boundary::Circular => {
            let w = WARMUP_COUPLES.min(k_len);
            (
                forward_pass(&edges, &br, k_len - w..k_len, [0.0; N_STATES], None),
                backward_pass(&edges, &br, 0..w, [0.0; N_STATES], None),
            )
        }
    };

    let mut alpha = Vec::with_capacity(k_len + 1);
    forward_pass(&edges, &br, 0..k_len, alpha0, Some(&mut alpha));
    let mut beta = vec![[0.0; N_STATES]; k_len + 1];
    backward_pass(&edges, &br, 0..k_len, beta_end, Some(&mut beta));

    let mut soft = Vec::with_capacity(k_len);
    let mut z_ext = Vec::with_capacity(k_len);
    let mut bit_ext = emit_bit_ext.then(|| Vec::with_capacity(k_len));

    for k in 0..k_len {
        let mut so = [f64::NEG_INFINITY; 4];
        // alpha + parity + beta, per input couple
        let mut ext = [f64::NEG_INFINITY; 4];
        // alpha + systematic + a priori + beta, per parity couple
        let mut par_side = [f64::NEG_INFINITY; 4];
        let (a, b) = (&alpha[k], &beta[k + 1]);
        let (sa, pk) = (&br.sys[k], &br.par[k]);
        let ak = &br.apr[k];
        for &(from, to, i) in &edges.all {
            let (d, p) = (i >> 2, i & 3);
            let ab = a[from & 7] + b[to & 7];
            let e_par = ab + pk[p];
            let e_sys = ab + sa[d] + ak[d];
            so[d] = fmax(so[d], e_par + sa[d] + ak[d]);
            ext[d] = fmax(ext[d], e_par);
            par_side[p] = fmax(par_side[p], e_sys);
        }
        let z: [f64; 4] = std::array::from_fn(|d| sf * (ext[d] - ext[0]));
        if let Some(out) = bit_ext.as_mut() {
            let sys_side: [f64; 4] = std::array::from_fn(|d| ext[d] + br.apr[k][d]);
            let [la, lb] = couple_to_bits(&sys_side);
            let [ly, lw] = couple_to_bits(&par_side);
            out.push([la, lb, ly, lw]);
        }
        soft.push(so);
        z_ext.push(z);
    }

    Ok(SisoOutput { z_ext, soft, bit_ext })
}
